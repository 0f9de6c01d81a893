"""Compare the compiled and pure-Python IRLS kernels on FP2 model searches.

    python3 benchmarks/bench_kernels.py --trials 200
"""
import argparse
import time

import numpy as np

from durtrial import _kernels_py
from durtrial.design import make_design
from durtrial.fitters import _FP_SUBSETS, _fp_column_bank
from durtrial.simulate import derive_stream, simulate_trial

try:
    from durtrial import _kernels as compiled
except ImportError:
    compiled = None


def _problems(n_trials, seed):
    design = make_design("ED7", 504)
    bank = _fp_column_bank(np.asarray(design.arms, float))
    Z = np.ascontiguousarray((bank - bank.mean(0)) / bank.std(0))
    out = []
    for i in range(n_trials):
        data = simulate_trial(design, 1 + i % 8, derive_stream(seed, 1 + i % 8, design.key, i))
        out.append((Z, data.cures, data.n))
    return out


def _time(kernel, problems, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        results = [kernel.irls_subsets(Z, _FP_SUBSETS, y, n) for Z, y, n in problems]
        best = min(best, time.perf_counter() - start)
    return best, results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    problems = _problems(args.trials, args.seed)
    t_py, res_py = _time(_kernels_py, problems, args.repeat)
    print(f"python   {1e3 * t_py / args.trials:9.3f} ms per 36-model search")
    if compiled is None:
        print("compiled kernel not built; run pip install -e . --no-build-isolation")
        return
    t_c, res_c = _time(compiled, problems, args.repeat)
    diff = max(np.max(np.abs(a[1] - b[1])) for a, b in zip(res_c, res_py))
    print(f"compiled {1e3 * t_c / args.trials:9.3f} ms per 36-model search")
    print(f"speed-up {t_py / t_c:9.1f}x   max deviance difference {diff:.2e}")


if __name__ == "__main__":
    main()
