"""Protocol interfaces for dependency inversion.

Rollout and evaluation depend on these rather than on concrete classes,
so tests can drive them with stub forecasters (always-zero, adversarial)
and hand-built threshold lookups.

Usage Example:

    from md_forecast.protocols import Forecaster

    class ZeroForecaster:
        H, L, n_atoms = 4, 2, 3

        def predict(self, features):
            return np.zeros((self.L, 3 * self.n_atoms))

    trajectory, log = rollout(ZeroForecaster(), seed, morse, thresholds, cfg)
"""

from typing import Protocol, runtime_checkable

import numpy as np
from numpy.typing import NDArray


@runtime_checkable
class Forecaster(Protocol):
    """Maps one H x 6N feature window (raw Å units) to L x 3N displacements (Å)."""

    @property
    def H(self) -> int:
        """History length."""
        ...

    @property
    def L(self) -> int:
        """Horizon length."""
        ...

    @property
    def n_atoms(self) -> int:
        """Atom count N the forecaster was built for."""
        ...

    def predict(self, features: NDArray[np.float64]) -> NDArray[np.float64]:
        """Predict displacements for one window.

        Args:
            features: (H, 6N) un-normalized feature rows

        Returns:
            (L, 3N) displacements in Å
        """
        ...


@runtime_checkable
class ThresholdLookup(Protocol):
    """Anything that resolves τ for an atom pair."""

    source: str

    def lookup(self, i: int, j: int, species_i: str, species_j: str) -> float:
        """Threshold τ (eV) for atoms i, j with the given species."""
        ...
