"""Morse potential evaluation, fitting and threshold tables.

E(d) = D_e (1 − exp(−a (d − d_e)))² + b, written with expm1 so the value
at d = d_e is exactly b. Every consumer that compares pair energies with
thresholds (training penalty, guarded rollout, violation metrics) goes
through PairPotential so the same numbers come out everywhere.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from md_forecast.exceptions import (
    DegenerateSamples,
    FitDiverged,
    IndexOutOfRange,
    NonPositiveDistance,
    SelfPair,
)
from md_forecast.models.morse import (
    FitReport,
    Granularity,
    MorseParams,
    MorseTable,
    ThresholdTable,
    format_atom_key,
    format_species_key,
    species_pair,
)
from md_forecast.models.trajectory import Frame, Trajectory
from md_forecast.protocols import ThresholdLookup

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MIN_DISTINCT_DISTANCES = 5
INITIAL_DAMPING = 1e-3
DAMPING_CAP = 1e10
MAX_ITERATIONS = 200
RELATIVE_TOLERANCE = 1e-12
D_E_FLOOR = 1e-6
FLAT_TOLERANCE = 1e-12
_LOG_BOUND = 40.0
_FRAME_CHUNK = 512


# Evaluation


def morse_energy(params: MorseParams, d: ArrayLike) -> FloatArray:
    """Morse energy (eV) at distance(s) d (Å).

    Raises:
        NonPositiveDistance: If any d <= 0
    """
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0):
        raise NonPositiveDistance(f"Morse energy needs d > 0, got min {float(np.min(d))}")
    return _energy(params.D_e, params.a, params.d_e, params.b, d)


def morse_force(params: MorseParams, d: ArrayLike) -> FloatArray:
    """Radial force −dE/dd (eV/Å); positive values push atoms apart."""
    d = np.asarray(d, dtype=np.float64)
    return _radial_force(params.D_e, params.a, params.d_e, d)


def _energy(
    D_e: ArrayLike, a: ArrayLike, d_e: ArrayLike, b: ArrayLike, d: FloatArray
) -> FloatArray:
    return np.asarray(D_e * np.expm1(-a * (d - d_e)) ** 2 + b)


def _radial_force(D_e: ArrayLike, a: ArrayLike, d_e: ArrayLike, d: FloatArray) -> FloatArray:
    x = -a * (d - d_e)
    # dE/dd = -2 D_e a expm1(x) exp(x)
    return np.asarray(2.0 * D_e * a * np.expm1(x) * np.exp(x))


def pair_distance(frame: Frame, i: int, j: int) -> float:
    """Euclidean distance (Å) between atoms i and j of a frame.

    Raises:
        SelfPair: If i == j
        IndexOutOfRange: If either index is outside the frame
    """
    n = frame.n_atoms
    for index in (i, j):
        if not 0 <= index < n:
            raise IndexOutOfRange(f"Atom index {index} out of range for {n} atoms")
    if i == j:
        raise SelfPair(f"Pair ({i}, {j}) is a self pair")
    return float(np.linalg.norm(frame.positions[i] - frame.positions[j]))


def pair_indices(n_atoms: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """All unordered pairs i < j in lexicographic order."""
    i, j = np.triu_indices(n_atoms, k=1)
    return i.astype(np.int64), j.astype(np.int64)


@dataclass(frozen=True, eq=False)
class PairPotential:
    """Per-pair Morse parameters (and optionally τ) for one species layout.

    Arrays are indexed by pair number p over the lexicographic list of
    pairs (i[p], j[p]) with i < j.
    """

    species: tuple[str, ...]
    i: NDArray[np.int64] = field(repr=False)
    j: NDArray[np.int64] = field(repr=False)
    D_e: FloatArray = field(repr=False)
    a: FloatArray = field(repr=False)
    d_e: FloatArray = field(repr=False)
    b: FloatArray = field(repr=False)
    tau: FloatArray | None = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        species: Sequence[str],
        morse: MorseTable,
        thresholds: ThresholdLookup | None = None,
    ) -> "PairPotential":
        """Resolve parameters for every atom pair.

        Raises:
            MissingPairParams: If a species pair has no Morse entry or threshold
        """
        species = tuple(species)
        i, j = pair_indices(len(species))
        params = [morse.get(species[p], species[q]) for p, q in zip(i, j, strict=True)]
        tau = None
        if thresholds is not None:
            tau = np.array(
                [
                    thresholds.lookup(int(p), int(q), species[p], species[q])
                    for p, q in zip(i, j, strict=True)
                ],
                dtype=np.float64,
            )
        return cls(
            species=species,
            i=i,
            j=j,
            D_e=np.array([p.D_e for p in params], dtype=np.float64),
            a=np.array([p.a for p in params], dtype=np.float64),
            d_e=np.array([p.d_e for p in params], dtype=np.float64),
            b=np.array([p.b for p in params], dtype=np.float64),
            tau=tau,
        )

    @property
    def n_pairs(self) -> int:
        return int(self.i.shape[0])

    def distances(
        self, positions: FloatArray, select: NDArray[np.int64] | None = None
    ) -> FloatArray:
        """Pair distances for positions (..., N, 3), optionally a pair subset."""
        i = self.i if select is None else self.i[select]
        j = self.j if select is None else self.j[select]
        diff = positions[..., i, :] - positions[..., j, :]
        return np.sqrt(np.einsum("...k,...k->...", diff, diff))

    def energies(
        self, positions: FloatArray, select: NDArray[np.int64] | None = None
    ) -> FloatArray:
        """Pair energies (eV) for positions (..., N, 3)."""
        d = self.distances(positions, select)
        if select is None:
            return _energy(self.D_e, self.a, self.d_e, self.b, d)
        return _energy(self.D_e[select], self.a[select], self.d_e[select], self.b[select], d)

    def thresholds_for(self, select: NDArray[np.int64] | None = None) -> FloatArray:
        """τ values for all or selected pairs."""
        if self.tau is None:
            raise ValueError("PairPotential was built without thresholds")
        return self.tau if select is None else self.tau[select]

    def pair_key(self, p: int) -> str:
        """'i:j' key of pair number p."""
        return format_atom_key((int(self.i[p]), int(self.j[p])))

    def sample_pairs(self, rng: np.random.Generator, m: int) -> NDArray[np.int64]:
        """m distinct pair numbers drawn uniformly, or all pairs when m >= P."""
        if m >= self.n_pairs:
            return np.arange(self.n_pairs, dtype=np.int64)
        return np.sort(rng.choice(self.n_pairs, size=m, replace=False)).astype(np.int64)


def pair_forces(
    potential: PairPotential, positions: FloatArray, cutoff: float
) -> tuple[FloatArray, float]:
    """Per-atom Morse forces (N, 3) and binding energy, truncated at the cutoff.

    The energy is measured from the dissociation limit (E − D_e − b per pair),
    so pairs crossing the cutoff change it by a negligible tail only.

    Reduction uses np.add.at in pair order, so the result is deterministic.
    """
    diff = positions[potential.i] - positions[potential.j]
    d = np.sqrt(np.einsum("pk,pk->p", diff, diff))
    inside = d < cutoff
    energy = _energy(potential.D_e, potential.a, potential.d_e, potential.b, d)
    magnitude = _radial_force(potential.D_e, potential.a, potential.d_e, d)
    magnitude = np.where(inside, magnitude, 0.0)
    vectors = (magnitude / d)[:, None] * diff
    forces = np.zeros_like(positions)
    np.add.at(forces, potential.i, vectors)
    np.add.at(forces, potential.j, -vectors)
    binding = energy - (potential.D_e + potential.b)
    return forces, float(np.sum(binding[inside]))


# Fitting


def _initial_guess(d: FloatArray, e: FloatArray) -> MorseParams:
    lowest = int(np.argmin(e))
    return MorseParams(
        D_e=max(float(np.max(e) - np.min(e)), D_E_FLOOR),
        a=1.0,
        d_e=float(d[lowest]),
        b=float(e[lowest]),
    )


def _unpack(theta: FloatArray) -> tuple[float, float, float, float]:
    logs = np.clip(theta[:3], -_LOG_BOUND, _LOG_BOUND)
    return float(np.exp(logs[0])), float(np.exp(logs[1])), float(np.exp(logs[2])), float(theta[3])


def _residuals_and_jacobian(
    theta: FloatArray, d: FloatArray, e: FloatArray
) -> tuple[FloatArray, FloatArray]:
    D_e, a, d_e, b = _unpack(theta)
    x = -a * (d - d_e)
    one_minus_u = -np.expm1(x)
    u = np.exp(x)
    residual = D_e * one_minus_u**2 + b - e
    jac = np.empty((d.shape[0], 4))
    jac[:, 0] = D_e * one_minus_u**2
    jac[:, 1] = 2.0 * D_e * one_minus_u * u * (d - d_e) * a
    jac[:, 2] = -2.0 * D_e * one_minus_u * u * a * d_e
    jac[:, 3] = 1.0
    return residual, jac


def _cost(theta: FloatArray, d: FloatArray, e: FloatArray) -> float:
    D_e, a, d_e, b = _unpack(theta)
    residual = D_e * np.expm1(-a * (d - d_e)) ** 2 + b - e
    return float(residual @ residual)


def fit_morse(
    samples: Sequence[tuple[float, float]] | ArrayLike,
    init: MorseParams | None = None,
) -> tuple[MorseParams, FitReport]:
    """Fit Morse parameters to (distance, energy) samples.

    Damped Gauss-Newton (Levenberg-Marquardt) on (log D_e, log a, log d_e, b):
    damping starts at 1e-3, is multiplied by 10 after a rejected step and
    divided by 10 after an accepted one. The fit stops when the relative
    cost change drops below 1e-12, after 200 iterations, or when damping
    passes 1e10.

    Raises:
        NonPositiveDistance: If any distance is <= 0
        DegenerateSamples: Fewer than 5 distinct distances
        FitDiverged: Damping hit the cap before any step reduced the cost
    """
    data = np.asarray(samples, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DegenerateSamples(f"Samples must be (distance, energy) pairs, got {data.shape}")
    d, e = data[:, 0], data[:, 1]
    if np.any(d <= 0):
        raise NonPositiveDistance(f"Sample distances must be > 0, got min {float(np.min(d))}")
    if not np.all(np.isfinite(data)):
        raise DegenerateSamples("Samples contain non-finite values")
    if np.unique(d).size < MIN_DISTINCT_DISTANCES:
        raise DegenerateSamples(
            f"Need at least {MIN_DISTINCT_DISTANCES} distinct distances, "
            f"got {np.unique(d).size}"
        )

    start = init or _initial_guess(d, e)
    theta = np.array([math.log(start.D_e), math.log(start.a), math.log(start.d_e), start.b])
    cost = _cost(theta, d, e)
    scale = max(float(e @ e), 1.0)
    damping = INITIAL_DAMPING
    accepted = 0
    converged = False
    message = "max iterations reached"
    iteration = 0

    for iteration in range(1, MAX_ITERATIONS + 1):
        if cost <= 1e-30 * scale:
            converged, message = True, "exact fit"
            break
        residual, jac = _residuals_and_jacobian(theta, d, e)
        normal = jac.T @ jac
        gradient = jac.T @ residual
        diag = np.maximum(np.diag(normal), 1e-12)
        improved = False
        while damping <= DAMPING_CAP:
            try:
                step = scipy.linalg.solve(
                    normal + damping * np.diag(diag), -gradient, assume_a="pos"
                )
            except (scipy.linalg.LinAlgError, ValueError):
                damping *= 10.0
                continue
            trial = theta + step
            trial_cost = _cost(trial, d, e)
            if np.isfinite(trial_cost) and trial_cost < cost:
                relative = (cost - trial_cost) / cost
                theta, cost = trial, trial_cost
                damping = max(damping / 10.0, 1e-15)
                accepted += 1
                improved = True
                if relative < RELATIVE_TOLERANCE:
                    converged, message = True, "relative cost change below tolerance"
                break
            damping *= 10.0
        if converged:
            break
        if not improved:
            if accepted == 0:
                report = FitReport(
                    rmse=math.sqrt(cost / d.size),
                    iterations=iteration,
                    converged=False,
                    damping=damping,
                    message="damping cap exceeded without cost decrease",
                )
                raise FitDiverged(
                    f"Morse fit diverged: damping exceeded {DAMPING_CAP:g} "
                    f"without cost decrease (rmse={report.rmse:.3g})",
                    report=report,
                )
            converged, message = True, "no further decrease at damping cap"
            break

    D_e, a, d_e, b = _unpack(theta)
    if D_e <= D_E_FLOOR:
        converged, message = False, "D_e collapsed to its lower bound (flat samples)"
    elif np.ptp(e) <= FLAT_TOLERANCE * max(1.0, float(np.max(np.abs(e)))):
        converged, message = False, "energies are flat; parameters are not identifiable"
    params = MorseParams(D_e=D_e, a=a, d_e=d_e, b=b)
    report = FitReport(
        rmse=math.sqrt(cost / d.size),
        iterations=iteration,
        converged=converged,
        damping=damping,
        message=message,
    )
    logger.debug(
        "Morse fit: D_e=%.6g a=%.6g d_e=%.6g b=%.6g rmse=%.3g iterations=%d converged=%s",
        D_e,
        a,
        d_e,
        b,
        report.rmse,
        iteration,
        converged,
    )
    return params, report


def synthesize_samples(
    params: MorseParams,
    n: int = 20,
    d_min: float | None = None,
    d_max: float | None = None,
    noise_ev: float = 0.0,
    rng: np.random.Generator | None = None,
) -> FloatArray:
    """n (distance, energy) samples on an even grid, with optional Gaussian noise.

    The default grid spans 0.4·d_e to 3·d_e.
    """
    lo = d_min if d_min is not None else 0.4 * params.d_e
    hi = d_max if d_max is not None else 3.0 * params.d_e
    distances = np.linspace(lo, hi, n)
    energies = morse_energy(params, distances)
    if noise_ev > 0:
        generator = rng if rng is not None else np.random.default_rng(0)
        energies = energies + generator.normal(0.0, noise_ev, size=n)
    return np.column_stack([distances, energies])


# Thresholds


def compute_thresholds(
    traj: Trajectory,
    morse: MorseTable,
    granularity: Granularity = "species",
    source: str = "train",
) -> ThresholdTable:
    """τ tables: maximum observed Morse energy per pair.

    With "species" granularity every atom pair sharing a species pair is
    pooled. With "atom" granularity the per-pair maxima are stored and the
    pooled species maxima are kept as a fallback for lookups.

    Raises:
        MissingPairParams: If a species pair in the trajectory has no Morse entry
    """
    potential = PairPotential.build(traj.species, morse)
    pair_max = np.full(potential.n_pairs, -np.inf)
    for start in range(0, traj.n_frames, _FRAME_CHUNK):
        chunk = traj.positions[start : start + _FRAME_CHUNK]
        pair_max = np.maximum(pair_max, potential.energies(chunk).max(axis=0))

    species_taus: dict[tuple[str, str], float] = {}
    for p in range(potential.n_pairs):
        key = species_pair(traj.species[potential.i[p]], traj.species[potential.j[p]])
        species_taus[key] = max(species_taus.get(key, -math.inf), float(pair_max[p]))

    atom_taus: dict[tuple[int, int], float] = {}
    if granularity == "atom":
        atom_taus = {
            (int(potential.i[p]), int(potential.j[p])): float(pair_max[p])
            for p in range(potential.n_pairs)
        }
    logger.info(
        "Computed %s thresholds from %d frames (%d species pairs, source=%s)",
        granularity,
        traj.n_frames,
        len(species_taus),
        source,
    )
    for key, tau in sorted(species_taus.items()):
        logger.debug("tau %s = %.6g", format_species_key(key), tau)
    return ThresholdTable(
        granularity=granularity,
        species_taus=species_taus,
        atom_taus=atom_taus,
        source=source,
    )
