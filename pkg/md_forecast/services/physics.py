"""Morse-energy penalty on predicted displacements.

Positions are advanced from the window's base frame by the predicted
displacements (r_{t+1} = r_t + Δ_t), chained through the horizon or, in
single-step mode, for the first step only. At every step M pairs are
drawn without replacement; pairs whose energy strictly exceeds τ form the
violating set and the penalty is the mean energy over that set (zero when
it is empty). The violation mask carries no gradient.
"""

import logging
from dataclasses import dataclass

import numpy as np
import torch

from md_forecast.exceptions import ShapeMismatch
from md_forecast.models.morse import MorseTable, ThresholdTable
from md_forecast.models.trajectory import Frame
from md_forecast.models.windows import TargetWindow
from md_forecast.services.morse import PairPotential

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PenaltyResult:
    """Penalty value plus the violating (batch, step, i, j) entries."""

    value: torch.Tensor
    violating: tuple[tuple[int, int, int, int], ...]
    pairs_checked: int
    count: int = 0


@dataclass(frozen=True, eq=False)
class TorchPairPotential:
    """PairPotential arrays as float64 tensors."""

    i: torch.Tensor
    j: torch.Tensor
    D_e: torch.Tensor
    a: torch.Tensor
    d_e: torch.Tensor
    b: torch.Tensor
    tau: torch.Tensor
    n_pairs: int

    @classmethod
    def from_potential(cls, potential: PairPotential) -> "TorchPairPotential":
        def tensor(values: np.ndarray) -> torch.Tensor:
            return torch.from_numpy(np.array(values))

        return cls(
            i=tensor(potential.i),
            j=tensor(potential.j),
            D_e=tensor(potential.D_e),
            a=tensor(potential.a),
            d_e=tensor(potential.d_e),
            b=tensor(potential.b),
            tau=tensor(potential.thresholds_for()),
            n_pairs=potential.n_pairs,
        )


def sample_pair_grid(
    rng: np.random.Generator, batch: int, steps: int, n_pairs: int, m: int
) -> np.ndarray:
    """(batch, steps, min(m, P)) pair numbers, distinct within each (batch, step)."""
    if m >= n_pairs:
        return np.broadcast_to(np.arange(n_pairs), (batch, steps, n_pairs)).copy()
    keys = rng.random((batch, steps, n_pairs))
    return np.sort(np.argpartition(keys, m - 1, axis=-1)[..., :m], axis=-1)


def physics_penalty(
    deltas: torch.Tensor,
    base_positions: torch.Tensor,
    potential: TorchPairPotential,
    m: int,
    rng: np.random.Generator,
    chain: bool = True,
    collect: bool = True,
) -> PenaltyResult:
    """Penalty for a batch of predicted displacements.

    Args:
        deltas: (B, L, 3N) displacements in Å
        base_positions: (B, N, 3) positions the first displacement starts from
        potential: pair parameters and thresholds
        m: pairs sampled per (batch element, step)
        rng: sampling generator, advanced by this call
        chain: advance through all L steps; False vets only the first step
        collect: list the violating entries (counting only when False)
    """
    batch, horizon, _ = deltas.shape
    n_atoms = base_positions.shape[1]
    steps = deltas.reshape(batch, horizon, n_atoms, 3)
    if not chain:
        steps = steps[:, :1]
    positions = base_positions.unsqueeze(1) + torch.cumsum(steps, dim=1)
    n_steps = positions.shape[1]

    select = torch.from_numpy(sample_pair_grid(rng, batch, n_steps, potential.n_pairs, m))
    b_idx = torch.arange(batch).view(batch, 1, 1)
    s_idx = torch.arange(n_steps).view(1, n_steps, 1)
    diff = positions[b_idx, s_idx, potential.i[select]] - positions[
        b_idx, s_idx, potential.j[select]
    ]
    distance = torch.sqrt((diff * diff).sum(dim=-1))
    energy = (
        potential.D_e[select]
        * torch.expm1(-potential.a[select] * (distance - potential.d_e[select])) ** 2
        + potential.b[select]
    )
    mask = (energy > potential.tau[select]).detach()
    count = int(mask.sum())
    if count:
        value = (energy * mask).sum() / count
    else:
        value = torch.zeros((), dtype=energy.dtype)

    violating: tuple[tuple[int, int, int, int], ...] = ()
    if count and collect:
        hits = torch.nonzero(mask).tolist()
        violating = tuple(
            (
                b,
                s,
                int(potential.i[select[b, s, k]]),
                int(potential.j[select[b, s, k]]),
            )
            for b, s, k in hits
        )
    return PenaltyResult(
        value=value,
        violating=violating,
        pairs_checked=int(select.numel()),
        count=count,
    )


def physics_loss(
    pred: TargetWindow,
    base_positions: Frame,
    morse: MorseTable,
    thresholds: ThresholdTable,
    m: int,
    rng: np.random.Generator,
    *,
    species: tuple[str, ...],
    chain: bool = True,
) -> tuple[float, list[tuple[int, int, int]]]:
    """Penalty for one predicted window.

    Returns:
        (value, violating pairs as (step, i, j))

    Raises:
        ShapeMismatch: If species does not label every atom of the base frame
        MissingPairParams: If a sampled pair has no parameters or threshold
    """
    if len(species) != base_positions.n_atoms:
        raise ShapeMismatch(
            f"{len(species)} species labels for {base_positions.n_atoms} atoms"
        )
    potential = TorchPairPotential.from_potential(
        PairPotential.build(species, morse, thresholds)
    )
    deltas = torch.from_numpy(np.array(pred.values, dtype=np.float64))
    base = torch.from_numpy(np.array(base_positions.positions, dtype=np.float64))
    result = physics_penalty(
        deltas.unsqueeze(0), base.unsqueeze(0), potential, m, rng, chain=chain
    )
    return float(result.value), [(s, i, j) for _, s, i, j in result.violating]
