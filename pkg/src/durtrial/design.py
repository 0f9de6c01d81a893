"""Trial arm layouts and patient allocation."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .scenarios import D_MAX, D_MIN

NED_ARMS = (10.0, 11.0, 13.0, 15.0, 20.0)
DESIGN_LABELS = ("ED3", "ED5", "ED7", "ED9", "ED20", "NED5")

_ED_RE = re.compile(r"^ED(\d+)$")


@dataclass(frozen=True)
class TrialDesign:
    arms: tuple[float, ...]
    allocation: tuple[int, ...]
    label: str

    def __post_init__(self):
        arms = np.asarray(self.arms, dtype=float)
        if arms.size < 2:
            raise DomainError("a design needs at least 2 arms")
        if np.any(np.diff(arms) <= 0):
            raise DomainError("arm durations must be strictly ascending")
        if arms[0] != D_MIN or arms[-1] != D_MAX:
            raise DomainError(f"arms must start at {D_MIN:g} and end at {D_MAX:g}")
        if len(self.allocation) != arms.size:
            raise DomainError("allocation length must match the number of arms")
        if any(int(c) < 1 for c in self.allocation):
            raise DomainError("every arm needs at least one patient")

    @property
    def total_n(self) -> int:
        return int(sum(self.allocation))

    @property
    def key(self) -> str:
        """Identifier used for stream derivation (label plus total size)."""
        return f"{self.label}:{self.total_n}"


def equidistant_arms(k: int, d_min: float = D_MIN, d_max: float = D_MAX) -> list[float]:
    if int(k) != k or k < 2:
        raise DomainError("need k >= 2 arms")
    if not d_min < d_max:
        raise DomainError("d_min must be smaller than d_max")
    step = (d_max - d_min) / (k - 1)
    arms = [d_min + i * step for i in range(int(k))]
    arms[-1] = float(d_max)
    return arms


def ned_arms() -> list[float]:
    return list(NED_ARMS)


def allocate(total_n: int, arms) -> list[int]:
    """Split ``total_n`` as evenly as possible, extra patients to the shortest arms."""
    k = len(arms)
    if k == 0 or total_n < k:
        raise DomainError(f"total_n={total_n} is smaller than the number of arms ({k})")
    base, rem = divmod(int(total_n), k)
    return [base + 1 if i < rem else base for i in range(k)]


def arms_for_label(label: str) -> list[float]:
    if label == "NED5":
        return ned_arms()
    m = _ED_RE.match(label)
    if m is None:
        raise DomainError(f"unknown design label {label!r}")
    return equidistant_arms(int(m.group(1)))


def custom_label(arms) -> str:
    return "custom[" + ",".join(f"{a:g}" for a in arms) + "]"


def make_design(label: str | None, total_n: int, arms=None) -> TrialDesign:
    """Build a design from a preset label (``ED{k}``, ``NED5``) or explicit arms."""
    if arms is not None:
        arms = [float(a) for a in arms]
        label = label or custom_label(arms)
    else:
        arms = arms_for_label(label)
    return TrialDesign(tuple(arms), tuple(allocate(total_n, arms)), label)
