"""Tests for window specs, column layout and the normalizer."""

import numpy as np
import pytest

from md_forecast.models.windows import (
    STD_FLOOR,
    Normalizer,
    WindowSpec,
    displacement_columns,
    position_columns,
)


def test_window_spec_validation() -> None:
    """H, L and stride must be at least 1."""
    with pytest.raises(ValueError, match="WindowSpec.L"):
        WindowSpec(H=4, L=0)
    assert WindowSpec(H=4, L=2).span == 6


def test_columns_are_atom_major() -> None:
    """Atom i owns feature columns 6i..6i+5: positions then lagged deltas."""
    np.testing.assert_array_equal(position_columns(2), [0, 1, 2, 6, 7, 8])
    np.testing.assert_array_equal(displacement_columns(2), [3, 4, 5, 9, 10, 11])


def test_identity_normalizer_is_noop() -> None:
    """A disabled normalizer returns its input."""
    normalizer = Normalizer.identity(2)
    rows = np.arange(12.0).reshape(1, 12)

    assert not normalizer.enabled
    np.testing.assert_array_equal(normalizer.apply(rows), rows)
    np.testing.assert_array_equal(normalizer.invert_targets(rows[:, :6]), rows[:, :6])


def test_normalizer_round_trip() -> None:
    """invert(apply(x)) returns x."""
    rng = np.random.default_rng(3)
    normalizer = Normalizer(mean=rng.normal(size=12), std=rng.uniform(0.5, 2.0, size=12))
    rows = rng.normal(size=(5, 12))

    np.testing.assert_allclose(normalizer.invert(normalizer.apply(rows)), rows, atol=1e-12)
    targets = rng.normal(size=(5, 6))
    np.testing.assert_allclose(
        normalizer.invert_targets(normalizer.apply_targets(targets)), targets, atol=1e-12
    )


def test_targets_reuse_displacement_statistics() -> None:
    """Target statistics are the lagged-displacement feature columns."""
    mean = np.arange(12.0)
    std = np.arange(1.0, 13.0)
    normalizer = Normalizer(mean=mean, std=std)

    np.testing.assert_array_equal(normalizer.target_mean, [3, 4, 5, 9, 10, 11])
    np.testing.assert_array_equal(normalizer.target_std, [4, 5, 6, 10, 11, 12])
    assert STD_FLOOR > 0
