"""Tests for Morse evaluation, pair geometry, fitting and thresholds."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from md_forecast.exceptions import (
    DegenerateSamples,
    FitDiverged,
    IndexOutOfRange,
    NonPositiveDistance,
    SelfPair,
)
from md_forecast.models.morse import MorseParams, MorseTable
from md_forecast.models.trajectory import Frame, Trajectory
from md_forecast.services.morse import (
    PairPotential,
    compute_thresholds,
    fit_morse,
    morse_energy,
    morse_force,
    pair_distance,
    pair_forces,
    synthesize_samples,
)
from tests.conftest import random_walk

UNIT = MorseParams(D_e=1.0, a=1.0, d_e=1.0, b=0.0)
SKEWED = MorseParams(D_e=3.2, a=1.7, d_e=2.1, b=-1.0)


def test_energy_at_equilibrium_is_offset() -> None:
    """E(d_e) = b exactly."""
    assert morse_energy(UNIT, 1.0) == 0.0
    assert morse_energy(SKEWED, 2.1) == -1.0


def test_energy_asymptote() -> None:
    """Far apart the energy approaches D_e + b."""
    assert morse_energy(UNIT, 50.0) == pytest.approx(1.0, abs=1e-12)


def test_energy_matches_scalar_formula() -> None:
    """Vectorized energy equals the scalar closed form."""
    expected = 3.2 * (1.0 - math.exp(-1.7 * (1.0 - 2.1))) ** 2 - 1.0
    assert morse_energy(SKEWED, 1.0) == pytest.approx(expected, rel=1e-12)


def test_energy_rejects_non_positive_distance() -> None:
    """d <= 0 raises NonPositiveDistance."""
    with pytest.raises(NonPositiveDistance):
        morse_energy(UNIT, [1.0, 0.0])


@given(d=st.floats(min_value=0.3, max_value=10.0))
@settings(max_examples=50, deadline=None)
def test_force_is_negative_energy_slope(d: float) -> None:
    """morse_force equals −dE/dd by central differences."""
    h = 1e-6
    slope = (morse_energy(SKEWED, d + h) - morse_energy(SKEWED, d - h)) / (2 * h)
    assert float(morse_force(SKEWED, d)) == pytest.approx(-float(slope), rel=1e-5, abs=1e-7)


def test_pair_distance_345() -> None:
    """3-4-5 triangle."""
    frame = Frame(positions=np.array([[0.0, 0.0, 0.0], [3.0, 4.0, 0.0]]))
    assert pair_distance(frame, 0, 1) == 5.0


def test_pair_distance_coincident_atoms() -> None:
    """Coincident atoms are at distance 0."""
    frame = Frame(positions=np.ones((2, 3)))
    assert pair_distance(frame, 0, 1) == 0.0


def test_pair_distance_matches_norm() -> None:
    """Distance equals an independent norm computation."""
    rng = np.random.default_rng(4)
    frame = Frame(positions=rng.normal(size=(5, 3)))
    expected = float(np.sqrt(np.sum((frame.positions[1] - frame.positions[3]) ** 2)))
    assert pair_distance(frame, 1, 3) == pytest.approx(expected, rel=1e-14)


def test_pair_distance_guards() -> None:
    """Self pairs and out-of-range indices are rejected."""
    frame = Frame(positions=np.zeros((3, 3)))
    with pytest.raises(SelfPair):
        pair_distance(frame, 1, 1)
    with pytest.raises(IndexOutOfRange):
        pair_distance(frame, 0, 3)


def test_pair_potential_resolves_species(morse_table: MorseTable) -> None:
    """Each pair carries the parameters of its species pair."""
    potential = PairPotential.build(("A", "B", "B"), morse_table)

    assert potential.n_pairs == 3
    np.testing.assert_array_equal(potential.i, [0, 0, 1])
    np.testing.assert_array_equal(potential.j, [1, 2, 2])
    np.testing.assert_array_equal(potential.d_e, [2.6, 2.6, 2.8])
    assert potential.pair_key(2) == "1:2"


def test_sample_pairs_distinct_and_exhaustive(morse_table: MorseTable) -> None:
    """Sampled pairs are distinct; m >= P returns every pair."""
    potential = PairPotential.build(("A",) * 6, morse_table)
    rng = np.random.default_rng(0)

    sample = potential.sample_pairs(rng, 5)
    assert len(set(sample.tolist())) == 5
    np.testing.assert_array_equal(potential.sample_pairs(rng, 100), np.arange(15))


def test_pair_forces_are_newtonian(morse_table: MorseTable) -> None:
    """Forces sum to zero and vanish at equilibrium."""
    rng = np.random.default_rng(1)
    potential = PairPotential.build(("A", "B", "A", "B"), morse_table)
    positions = rng.uniform(0, 5, size=(4, 3))

    forces, _ = pair_forces(potential, positions, cutoff=20.0)
    np.testing.assert_allclose(forces.sum(axis=0), 0.0, atol=1e-12)

    dimer = PairPotential.build(("A", "A"), morse_table)
    resting = np.array([[0.0, 0.0, 0.0], [2.4, 0.0, 0.0]])
    forces, energy = pair_forces(dimer, resting, cutoff=10.0)
    np.testing.assert_allclose(forces, 0.0, atol=1e-15)
    assert energy == pytest.approx(-0.4)


def test_fit_recovers_noiseless_parameters() -> None:
    """20 exact samples on 0.8..6.0 Å recover the parameters."""
    samples = synthesize_samples(SKEWED, n=20, d_min=0.8, d_max=6.0)

    params, report = fit_morse(samples)

    assert report.converged
    for fitted, true in zip(params.as_tuple(), SKEWED.as_tuple(), strict=True):
        assert fitted == pytest.approx(true, rel=1e-6)


def test_fit_recovers_noisy_parameters() -> None:
    """σ = 1e-3 eV noise still recovers the parameters to 1e-2."""
    samples = synthesize_samples(
        SKEWED, n=20, d_min=0.8, d_max=6.0, noise_ev=1e-3, rng=np.random.default_rng(7)
    )

    params, _ = fit_morse(samples)

    for fitted, true in zip(params.as_tuple(), SKEWED.as_tuple(), strict=True):
        assert fitted == pytest.approx(true, rel=1e-2)


def test_fit_flat_samples_not_converged() -> None:
    """Constant energies either diverge or end unconverged with b near the constant."""
    samples = np.column_stack([np.linspace(1.0, 5.0, 10), np.full(10, 0.7)])
    try:
        params, report = fit_morse(samples)
    except FitDiverged:
        return
    assert not report.converged
    assert params.b + params.D_e == pytest.approx(0.7, abs=1e-3)


def test_fit_needs_five_distances() -> None:
    """Fewer than five distinct distances is degenerate."""
    samples = np.array([[1.0, 0.1], [2.0, 0.0], [3.0, 0.2], [3.0, 0.3]])
    with pytest.raises(DegenerateSamples):
        fit_morse(samples)


def test_fit_rejects_non_positive_distance() -> None:
    """Distances must be positive."""
    samples = np.column_stack([np.linspace(0.0, 4.0, 6), np.zeros(6)])
    with pytest.raises(NonPositiveDistance):
        fit_morse(samples)


def test_threshold_is_max_energy(morse_table: MorseTable) -> None:
    """τ is the largest energy seen for the pair."""
    d_e = 2.4
    target = [0.1, 0.5, 0.3]
    # invert E = D_e (1 − e^{−a(d−d_e)})² on the compressed branch
    distances = [d_e - math.log(1 + math.sqrt(e / 0.4)) / 1.6 for e in target]
    positions = np.zeros((3, 2, 3))
    positions[:, 1, 0] = distances
    traj = Trajectory(species=("A", "A"), positions=positions)

    table = compute_thresholds(traj, morse_table)

    assert table.species_taus[("A", "A")] == pytest.approx(0.5, rel=1e-10)


def test_threshold_single_frame(morse_table: MorseTable) -> None:
    """One frame: τ is that frame's energy per pair."""
    traj = random_walk(1, 2, species=("A", "B"))
    table = compute_thresholds(traj, morse_table, granularity="atom")

    expected = float(morse_energy(morse_table.get("A", "B"), 2.5))
    assert table.atom_taus[(0, 1)] == pytest.approx(expected)
    assert table.species_taus[("A", "B")] == pytest.approx(expected)


def test_thresholds_match_double_loop(morse_table: MorseTable) -> None:
    """4-atom, 50-frame τ tables equal an exhaustive recomputation."""
    traj = random_walk(50, 4, seed=21, sigma=0.05)
    table = compute_thresholds(traj, morse_table, granularity="atom", source="train")

    for i in range(4):
        for j in range(i + 1, 4):
            params = morse_table.get(traj.species[i], traj.species[j])
            expected = max(
                float(morse_energy(params, pair_distance(frame, i, j)))
                for frame in traj.frames
            )
            assert table.atom_taus[(i, j)] == pytest.approx(expected, rel=1e-12)
    assert table.source == "train"
    assert table.granularity == "atom"
