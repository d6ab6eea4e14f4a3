"""Tests for the Morse-energy penalty."""

import numpy as np
import pytest
import torch

from md_forecast.exceptions import ShapeMismatch
from md_forecast.models.morse import MorseTable, ThresholdTable
from md_forecast.models.trajectory import Frame
from md_forecast.models.windows import TargetWindow
from md_forecast.services.morse import PairPotential, morse_energy
from md_forecast.services.physics import (
    TorchPairPotential,
    physics_loss,
    physics_penalty,
    sample_pair_grid,
)
from tests.conftest import MORSE_AA


def _potential(
    species: tuple[str, ...], morse: MorseTable, thresholds: ThresholdTable
) -> TorchPairPotential:
    return TorchPairPotential.from_potential(PairPotential.build(species, morse, thresholds))


def test_zero_displacements_no_violations(
    morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """Resting at equilibrium with zero motion costs nothing."""
    base = Frame(positions=np.array([[0.0, 0.0, 0.0], [MORSE_AA.d_e, 0.0, 0.0]]))
    pred = TargetWindow(np.zeros((3, 6)))

    value, violating = physics_loss(
        pred, base, morse_table, dimer_thresholds, m=10, rng=np.random.default_rng(0),
        species=("A", "A"),
    )

    assert value == 0.0
    assert violating == []


def test_collapsed_pair_costs_its_energy(
    morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """Pushing two atoms to 0.1·d_e costs E(0.1·d_e) for the one violating pair."""
    d_e = MORSE_AA.d_e
    base = Frame(positions=np.array([[0.0, 0.0, 0.0], [d_e, 0.0, 0.0]]))
    step = np.zeros((1, 6))
    step[0, 3] = -0.9 * d_e

    value, violating = physics_loss(
        TargetWindow(step), base, morse_table, dimer_thresholds, m=1,
        rng=np.random.default_rng(0), species=("A", "A"),
    )

    assert value == pytest.approx(float(morse_energy(MORSE_AA, 0.1 * d_e)), rel=1e-12)
    assert violating == [(0, 0, 1)]


def test_exhaustive_penalty_matches_double_loop(morse_table: MorseTable) -> None:
    """With M = all pairs the penalty is the mean energy of violating entries."""
    rng = np.random.default_rng(5)
    species = ("A", "B", "A", "B")
    thresholds = ThresholdTable(
        species_taus={("A", "A"): 0.02, ("A", "B"): 0.02, ("B", "B"): 0.02}
    )
    potential = PairPotential.build(species, morse_table, thresholds)
    base = np.zeros((2, 4, 3))
    base[:, :, 0] = np.arange(4) * 2.5
    deltas = rng.normal(scale=0.3, size=(2, 3, 12))

    result = physics_penalty(
        torch.from_numpy(deltas),
        torch.from_numpy(base),
        TorchPairPotential.from_potential(potential),
        m=100,
        rng=np.random.default_rng(0),
    )

    flagged = []
    for b in range(2):
        positions = base[b].copy()
        for s in range(3):
            positions = positions + deltas[b, s].reshape(4, 3)
            for i in range(4):
                for j in range(i + 1, 4):
                    d = float(np.linalg.norm(positions[i] - positions[j]))
                    energy = float(morse_energy(morse_table.get(species[i], species[j]), d))
                    if energy > 0.02:
                        flagged.append(energy)
    assert result.count == len(flagged)
    assert result.pairs_checked == 2 * 3 * 6
    expected = sum(flagged) / len(flagged) if flagged else 0.0
    assert float(result.value) == pytest.approx(expected, rel=1e-12)


def test_penalty_is_strict(morse_table: MorseTable) -> None:
    """An energy equal to τ is not a violation."""
    base = torch.tensor([[[0.0, 0.0, 0.0], [MORSE_AA.d_e, 0.0, 0.0]]], dtype=torch.float64)
    thresholds = ThresholdTable(species_taus={("A", "A"): 0.0})

    result = physics_penalty(
        torch.zeros((1, 1, 6), dtype=torch.float64),
        base,
        _potential(("A", "A"), morse_table, thresholds),
        m=1,
        rng=np.random.default_rng(0),
    )
    assert result.count == 0
    assert float(result.value) == 0.0


def test_single_step_mode_checks_first_step_only(
    morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """chain=False ignores steps after the first."""
    base = torch.tensor([[[0.0, 0.0, 0.0], [MORSE_AA.d_e, 0.0, 0.0]]], dtype=torch.float64)
    deltas = torch.zeros((1, 2, 6), dtype=torch.float64)
    deltas[0, 1, 3] = -2.0
    potential = _potential(("A", "A"), morse_table, dimer_thresholds)

    chained = physics_penalty(deltas, base, potential, 1, np.random.default_rng(0))
    first = physics_penalty(deltas, base, potential, 1, np.random.default_rng(0), chain=False)

    assert chained.count == 1
    assert first.count == 0
    assert first.pairs_checked == 1


def test_penalty_gradient_flows_through_energy(
    morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """The penalty is differentiable in the displacements."""
    base = torch.tensor([[[0.0, 0.0, 0.0], [MORSE_AA.d_e, 0.0, 0.0]]], dtype=torch.float64)
    deltas = torch.zeros((1, 1, 6), dtype=torch.float64)
    deltas[0, 0, 3] = -1.5
    deltas.requires_grad_(True)

    result = physics_penalty(
        deltas, base, _potential(("A", "A"), morse_table, dimer_thresholds), 1,
        np.random.default_rng(0),
    )
    result.value.backward()

    assert deltas.grad is not None
    # compressing further raises the energy, so the gradient along x of atom 1 is negative
    assert float(deltas.grad[0, 0, 3]) < 0.0


def test_sample_grid_distinct_per_step() -> None:
    """Sampled pairs never repeat within one (batch, step)."""
    grid = sample_pair_grid(np.random.default_rng(1), batch=3, steps=4, n_pairs=10, m=6)

    assert grid.shape == (3, 4, 6)
    for row in grid.reshape(-1, 6):
        assert len(set(row.tolist())) == 6
    full = sample_pair_grid(np.random.default_rng(1), batch=1, steps=1, n_pairs=3, m=9)
    np.testing.assert_array_equal(full[0, 0], [0, 1, 2])


def test_species_must_label_every_atom(
    morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """physics_loss rejects a species tuple shorter than the frame."""
    base = Frame(positions=np.array([[0.0, 0.0, 0.0], [MORSE_AA.d_e, 0.0, 0.0]]))

    with pytest.raises(ShapeMismatch, match="1 species labels for 2 atoms"):
        physics_loss(
            TargetWindow(np.zeros((1, 6))), base, morse_table, dimer_thresholds, m=1,
            rng=np.random.default_rng(0), species=("A",),
        )
