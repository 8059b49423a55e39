"""Trajectory container shared by the flow integrators."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# deviations of integrals with |f(0)| < 1 are measured absolutely
DRIFT_FLOOR = 1.0


def relative_drift(values, floor: float = DRIFT_FLOOR) -> np.ndarray:
    """max_t |f(t) - f(0)| / max(|f(0)|, floor), one entry per column."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] == 0:
        return np.zeros(v.shape[1])
    dev = np.abs(v - v[0]).max(axis=0)
    return dev / np.maximum(np.abs(v[0]), floor)


@dataclass(eq=False)
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray                 # (steps+1, state_dim)
    state_labels: list[str]
    tracked: np.ndarray                # (steps+1, n_tracked)
    tracked_labels: list[str]
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.tracked = np.asarray(self.tracked, dtype=float).reshape(len(self.times), len(self.tracked_labels))

    def __len__(self):
        return len(self.times)

    @property
    def drift(self) -> dict[str, float]:
        """Max relative deviation of each tracked integral from its initial value."""
        return dict(zip(self.tracked_labels, map(float, relative_drift(self.tracked))))

    @property
    def max_drift(self) -> float:
        d = self.drift
        return max(d.values()) if d else 0.0

    @property
    def state_drift(self) -> float:
        """max_t ||x(t) - x(0)|| (Euclidean in stored coordinates)."""
        if len(self) == 0:
            return 0.0
        return float(np.linalg.norm(self.states - self.states[0], axis=1).max())
