"""Evaluation report models."""

from dataclasses import dataclass, field

import numpy as np
import scipy.constants as const
from numpy.typing import NDArray

A2_PER_FS_TO_M2_PER_S = const.angstrom**2 / const.femto


@dataclass(frozen=True)
class ForecastErrors:
    """Displacement- and position-space errors over one horizon.

    MSE uses squared per-atom Euclidean norms (Å²), MAE uses the norms
    themselves (Å); both average over L·N atom-steps.
    """

    mse_delta: float
    mae_delta: float
    mse_r: float
    mae_r: float

    def as_dict(self) -> dict[str, float]:
        return {
            "mse_delta": self.mse_delta,
            "mae_delta": self.mae_delta,
            "mse_r": self.mse_r,
            "mae_r": self.mae_r,
        }


@dataclass(frozen=True, eq=False)
class ViolationReport:
    """Threshold-exceeding pair counts over a trajectory.

    V_r = V_n / (L · M) where L is the number of vetted steps and M the
    pairs checked per step. `threshold_source` names the τ table used.
    """

    V_n: int
    V_r: float
    per_step: NDArray[np.int64] = field(repr=False)
    L: int
    M: int
    threshold_source: str
    seed: int | None = None


@dataclass(frozen=True, eq=False)
class DiffusivityReport:
    """Einstein-relation diffusion estimate for one species."""

    species: str
    D_A2_per_fs: float
    slope: float
    intercept: float
    r_squared: float
    t_fs: NDArray[np.float64] = field(repr=False)
    msd_A2: NDArray[np.float64] = field(repr=False)
    fit_start_fs: float
    fit_end_fs: float
    n_atoms: int
    multi_origin: bool = True

    @property
    def D_m2_per_s(self) -> float:
        """D converted from Å²/fs to m²/s."""
        return self.D_A2_per_fs * A2_PER_FS_TO_M2_PER_S


@dataclass(frozen=True)
class DivergenceReport:
    """First step at which a trajectory runs away, if any."""

    diverged: bool
    step: int | None
    max_excursion: float
    bound: float
