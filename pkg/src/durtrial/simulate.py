"""Binomial trial simulation with per-replicate seeded streams."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .design import TrialDesign
from .errors import DomainError
from .scenarios import true_curve_values


@dataclass(frozen=True)
class TrialData:
    """Aggregated outcome of one trial: one row per arm."""

    durations: np.ndarray
    n: np.ndarray
    cures: np.ndarray

    def __post_init__(self):
        if not (len(self.durations) == len(self.n) == len(self.cures)):
            raise DomainError("durations, n and cures must have equal length")
        if np.any(self.n < 1) or np.any(self.cures < 0) or np.any(self.cures > self.n):
            raise DomainError("need n >= 1 and 0 <= cures <= n in every arm")
        if np.any(np.diff(self.durations) <= 0):
            raise DomainError("durations must be strictly ascending")

    @classmethod
    def from_rows(cls, rows) -> "TrialData":
        d, n, y = zip(*rows)
        return cls(np.asarray(d, float), np.asarray(n, float), np.asarray(y, float))

    @property
    def rows(self) -> list[tuple[float, int, int]]:
        return [(float(d), int(n), int(y)) for d, n, y in zip(self.durations, self.n, self.cures)]

    @property
    def n_arms(self) -> int:
        return len(self.durations)

    @property
    def proportions(self) -> np.ndarray:
        return self.cures / self.n


def _label_words(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def derive_stream(master_seed: int, scenario_id: int, design_label: str,
                  sim_index: int) -> np.random.Generator:
    """Independent generator for one replicate.

    The stream depends only on its derivation tuple, never on the order in
    which replicates are executed. The fitting method is deliberately not part
    of the tuple so every method analyses the same simulated trials.
    """
    if sim_index < 0:
        raise DomainError("sim_index must be non-negative")
    if master_seed < 0:
        raise DomainError("master_seed must be non-negative")
    seq = np.random.SeedSequence(
        entropy=int(master_seed),
        spawn_key=(int(scenario_id), *_label_words(design_label), int(sim_index)),
    )
    return np.random.Generator(np.random.PCG64(seq))


def simulate_trial(design: TrialDesign, scenario, stream: np.random.Generator) -> TrialData:
    """Draw per-arm cure counts, consuming the stream in ascending-duration order."""
    durations = np.asarray(design.arms, dtype=float)
    n = np.asarray(design.allocation, dtype=np.int64)
    if callable(scenario) and not isinstance(scenario, int):
        p = np.asarray(scenario(durations), dtype=float)
    else:
        p = true_curve_values(scenario, durations)
    # Array draws consume the generator element by element, in arm order.
    cures = stream.binomial(n, p).astype(float)
    return TrialData(durations, n.astype(float), cures)
