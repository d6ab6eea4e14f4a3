"""Forecast accuracy, physical violations and diffusivity.

Errors use per-atom Euclidean norms of 3-vectors, averaged over every
(step, atom). Violations count sampled pairs whose Morse energy strictly
exceeds τ. Diffusivity follows the Einstein relation MSD(t) = 6·D·t in
three dimensions, fitted by least squares on a lag window.
"""

import logging
from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import fft
from scipy.stats import linregress

from md_forecast.exceptions import (
    HorizonMismatch,
    NoAtomsOfSpecies,
    ShapeMismatch,
    WindowOutOfRange,
)
from md_forecast.models.metrics import (
    DiffusivityReport,
    DivergenceReport,
    ForecastErrors,
    ViolationReport,
)
from md_forecast.models.morse import MorseTable
from md_forecast.models.trajectory import Frame, Trajectory
from md_forecast.protocols import ThresholdLookup
from md_forecast.services.morse import PairPotential
from md_forecast.utils.rng import derive_rng

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

SPATIAL_DIMENSIONS = 3
DEFAULT_DIVERGENCE_BOUND = 50.0
_CHUNK = 256


def _norm_errors(pred: FloatArray, truth: FloatArray) -> tuple[float, float]:
    if pred.size == 0:
        return 0.0, 0.0
    norms = np.linalg.norm(pred - truth, axis=-1)
    return float(np.mean(norms**2)), float(np.mean(norms))


def forecast_errors(
    pred: Trajectory, truth: Trajectory, anchor: Frame | None = None
) -> ForecastErrors:
    """MSE/MAE of displacements and positions over an aligned horizon.

    Args:
        pred: predicted frames
        truth: reference frames over the same steps
        anchor: frame preceding the horizon; when given the first
            displacement of each side is measured from it, so L frames
            yield L displacements instead of L - 1

    Raises:
        ShapeMismatch: Atom counts differ
        HorizonMismatch: Frame counts differ
    """
    if pred.n_atoms != truth.n_atoms:
        raise ShapeMismatch(f"pred has {pred.n_atoms} atoms, truth has {truth.n_atoms}")
    if pred.n_frames != truth.n_frames:
        raise HorizonMismatch(
            f"pred covers {pred.n_frames} frames, truth covers {truth.n_frames}"
        )
    if anchor is not None and anchor.n_atoms != pred.n_atoms:
        raise ShapeMismatch(f"anchor has {anchor.n_atoms} atoms, expected {pred.n_atoms}")

    pred_r, truth_r = pred.positions, truth.positions
    if anchor is not None:
        pred_r = np.concatenate([anchor.positions[None], pred_r])
        truth_r = np.concatenate([anchor.positions[None], truth_r])
    mse_delta, mae_delta = _norm_errors(np.diff(pred_r, axis=0), np.diff(truth_r, axis=0))
    mse_r, mae_r = _norm_errors(pred.positions, truth.positions)
    return ForecastErrors(mse_delta=mse_delta, mae_delta=mae_delta, mse_r=mse_r, mae_r=mae_r)


def violations(
    traj: Trajectory,
    morse: MorseTable,
    thresholds: ThresholdLookup,
    m: int,
    seed: int = 0,
    start: int = 0,
) -> ViolationReport:
    """Count pair energies above τ on every frame from `start` on.

    Each frame samples m pairs without replacement from the "eval.pairs"
    stream; m >= N(N-1)/2 checks every pair. V_r = V_n / (L · M) with L
    the number of frames checked and M the pairs per frame.

    Raises:
        MissingPairParams: A pair has no parameters or threshold
    """
    potential = PairPotential.build(traj.species, morse, thresholds)
    tau = potential.thresholds_for()
    positions = traj.positions[start:]
    steps = positions.shape[0]
    m_eff = min(m, potential.n_pairs)
    per_step = np.zeros(steps, dtype=np.int64)

    if m_eff == potential.n_pairs:
        for lo in range(0, steps, _CHUNK):
            energies = potential.energies(positions[lo : lo + _CHUNK])
            per_step[lo : lo + _CHUNK] = np.count_nonzero(energies > tau, axis=-1)
    else:
        rng = derive_rng(seed, "eval.pairs")
        for t in range(steps):
            select = potential.sample_pairs(rng, m_eff)
            per_step[t] = np.count_nonzero(potential.energies(positions[t], select) > tau[select])

    total = int(per_step.sum())
    rate = total / (steps * m_eff) if steps and m_eff else 0.0
    logger.debug(
        "Violations against %s thresholds: V_n=%d over %d steps x %d pairs",
        getattr(thresholds, "source", "?"),
        total,
        steps,
        m_eff,
    )
    return ViolationReport(
        V_n=total,
        V_r=rate,
        per_step=per_step,
        L=steps,
        M=m_eff,
        threshold_source=getattr(thresholds, "source", ""),
        seed=None if m_eff == potential.n_pairs else seed,
    )


def msd_fft(positions: FloatArray) -> FloatArray:
    """Time-origin-averaged MSD per atom by the fast correlation algorithm.

    Args:
        positions: (T, N, 3) unwrapped coordinates

    Returns:
        (T, N) MSD for lags 0..T-1
    """
    n_frames = positions.shape[0]
    x = positions - positions[0]
    sq = np.einsum("tnk,tnk->tn", x, x)
    prefix = np.concatenate([np.zeros((1, sq.shape[1])), np.cumsum(sq, axis=0)[:-1]])
    suffix = np.concatenate(
        [np.zeros((1, sq.shape[1])), np.cumsum(sq[::-1], axis=0)[:-1]]
    )
    counts = (n_frames - np.arange(n_frames))[:, None]
    s1 = (2.0 * sq.sum(axis=0) - prefix - suffix) / counts

    spectrum = fft.rfft(x, n=2 * n_frames, axis=0)
    acf = fft.irfft(spectrum * spectrum.conj(), n=2 * n_frames, axis=0)[:n_frames]
    s2 = acf.sum(axis=-1) / counts

    msd = s1 - 2.0 * s2
    msd[0] = 0.0
    return np.maximum(msd, 0.0)


def msd_single_origin(positions: FloatArray) -> FloatArray:
    """|r(t) − r(0)|² per atom, (T, N)."""
    x = positions - positions[0]
    return np.einsum("tnk,tnk->tn", x, x)


def _default_fit_window(n_frames: int) -> tuple[int, int]:
    start = max(1, n_frames // 10)
    stop = max(start + 2, n_frames // 2)
    return start, min(stop, n_frames)


def diffusivity(
    traj: Trajectory,
    species_filter: str | None = None,
    fit_window: tuple[int, int] | None = None,
    multi_origin: bool = True,
) -> DiffusivityReport:
    """Einstein-relation diffusion coefficient for one species (or all atoms).

    Args:
        traj: unwrapped trajectory
        species_filter: species label, or None for every atom
        fit_window: [start, stop) lag range in frames for the line fit;
            defaults to the span from T/10 to T/2
        multi_origin: average over time origins (single-origin otherwise)

    Raises:
        NoAtomsOfSpecies: The filter matches no atom
        WindowOutOfRange: Fit window outside 0..T or shorter than 2 lags
    """
    if species_filter is None:
        atoms = np.arange(traj.n_atoms)
        label = "all"
    else:
        atoms = traj.species_indices(species_filter)
        label = species_filter
    if atoms.size == 0:
        raise NoAtomsOfSpecies(
            f"No atoms of species '{species_filter}' in {sorted(set(traj.species))}"
        )
    start, stop = fit_window if fit_window is not None else _default_fit_window(traj.n_frames)
    if start < 0 or stop > traj.n_frames or stop - start < 2:
        raise WindowOutOfRange(
            f"Fit window [{start}, {stop}) invalid for {traj.n_frames} frames"
        )

    positions = traj.positions[:, atoms]
    per_atom = msd_fft(positions) if multi_origin else msd_single_origin(positions)
    msd = per_atom.mean(axis=1)
    t_fs = np.arange(traj.n_frames, dtype=np.float64) * traj.dt_fs

    fit = linregress(t_fs[start:stop], msd[start:stop])
    slope = float(fit.slope)
    r_squared = float(fit.rvalue) ** 2
    report = DiffusivityReport(
        species=label,
        D_A2_per_fs=slope / (2 * SPATIAL_DIMENSIONS),
        slope=slope,
        intercept=float(fit.intercept),
        r_squared=r_squared,
        t_fs=t_fs,
        msd_A2=msd,
        fit_start_fs=float(t_fs[start]),
        fit_end_fs=float(t_fs[stop - 1]),
        n_atoms=int(atoms.size),
        multi_origin=multi_origin,
    )
    if r_squared < 0.9 and slope != 0.0:
        logger.warning(
            "MSD fit for %s is poorly linear (R^2=%.3f); D may not be meaningful",
            label,
            r_squared,
        )
    return report


def diffusivity_table(
    traj: Trajectory,
    fit_window: tuple[int, int] | None = None,
    multi_origin: bool = True,
    species: Sequence[str] | None = None,
) -> list[DiffusivityReport]:
    """One report per species, sorted by label."""
    labels = sorted(set(traj.species)) if species is None else list(species)
    return [diffusivity(traj, label, fit_window, multi_origin) for label in labels]


def detect_divergence(
    traj: Trajectory,
    bound: float = DEFAULT_DIVERGENCE_BOUND,
    reference: int = 0,
) -> DivergenceReport:
    """First frame after `reference` whose coordinates leave the bound.

    A frame diverges when any coordinate differs from the reference frame
    by more than `bound` Å.
    """
    origin = traj.positions[reference]
    excursion = np.abs(traj.positions[reference:] - origin).max(axis=(1, 2))
    beyond = np.flatnonzero(excursion > bound)
    step = int(beyond[0]) + reference if beyond.size else None
    if step is not None:
        logger.warning(
            "Trajectory diverged at frame %d (excursion %.3g > %.3g)",
            step,
            float(excursion[beyond[0]]),
            bound,
        )
    return DivergenceReport(
        diverged=step is not None,
        step=step,
        max_excursion=float(excursion.max()) if excursion.size else 0.0,
        bound=bound,
    )
