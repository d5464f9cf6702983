"""Time-stepping output container shared by the 1D and 2D solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import GridFn


@dataclass(frozen=True)
class Trajectory:
    """Solution record of one regularized solve.

    ``times`` covers every step; ``norms[m]`` holds the ``H^m`` norm at
    each time.  Full states are stored at a configurable stride
    (``state_times`` / ``states``) with the initial state always present,
    equal to the supplied datum.  ``meta`` carries solver settings,
    residual maxima and auxiliary trajectories.
    """

    times: np.ndarray
    norms: dict
    state_times: np.ndarray
    states: tuple
    meta: dict = field(default_factory=dict)

    def sup_norm(self, m: int) -> float:
        return float(np.max(self.norms[m]))

    def final_state(self) -> GridFn:
        return self.states[-1]

    def state_at(self, t: float) -> GridFn:
        idx = int(np.argmin(np.abs(self.state_times - t)))
        return self.states[idx]
