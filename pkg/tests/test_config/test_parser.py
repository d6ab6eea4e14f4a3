"""Tests for ConfigFileParser."""

import json
from pathlib import Path

import pytest

from md_forecast.config import ConfigFileParser
from md_forecast.config.parser import parse_literal
from md_forecast.exceptions import ConfigError, UnknownConfigKey


@pytest.fixture
def sample_config(tmp_path: Path) -> Path:
    """Create a small pipeline config file."""
    config = tmp_path / "exp.toml"
    config.write_text("""
seed = 7
run_id = "demo"
out_dir = "out"

[simgen]
species_counts = { A = 2, B = 2 }
n_steps = 400

[window]
H = 8
L = 4

[train]
lam = 5e-4
max_epochs = 2

[eval]
lambdas = [0, 1e-4]
""")
    return config


def test_parse_reads_blocks(sample_config: Path) -> None:
    """Verify file values land in their blocks and defaults fill the rest."""
    config = ConfigFileParser(sample_config).parse()

    assert config.seed == 7
    assert config.run_dir == Path("out") / "demo"
    assert config.simgen.species_counts == {"A": 2, "B": 2}
    assert config.window_spec().span == 12
    assert config.train_config().lam == 5e-4
    assert config.eval.lambdas == [0.0, 1e-4]
    assert config.model.backbone == "mixer"


def test_defaults_without_file() -> None:
    """Verify no file gives the documented defaults."""
    config = ConfigFileParser().parse()

    assert (config.window.H, config.window.L) == (64, 16)
    assert config.train.pairs_per_step == 500
    assert config.rollout_config(model_L=16).L == 16
    assert len(config.morse_table()) == 3


def test_overrides_win_over_file(sample_config: Path) -> None:
    """Verify --set values replace file values and parse as TOML literals."""
    parser = ConfigFileParser(
        sample_config,
        overrides=["train.lam=1e-3", "rollout.pii=false", "seed=11", "model.backbone=mlp"],
    )
    config = parser.parse()

    assert config.train.lam == 1e-3
    assert config.rollout.pii is False
    assert config.seed == 11
    assert config.model.backbone == "mlp"


def test_integer_widens_to_float() -> None:
    """Verify ints are accepted for float keys."""
    config = ConfigFileParser(overrides=["train.lam=0"]).parse()
    assert config.train.lam == 0.0
    assert isinstance(config.train.lam, float)


@pytest.mark.parametrize(
    ("override", "key"),
    [("train.lamda=1", "train.lamda"), ("optim.lr=1", "optim"), ("verbose=true", "verbose")],
)
def test_unknown_key_named(override: str, key: str) -> None:
    """Verify unknown blocks and keys raise UnknownConfigKey with the key."""
    with pytest.raises(UnknownConfigKey) as excinfo:
        ConfigFileParser(overrides=[override]).parse()
    assert excinfo.value.key == key


@pytest.mark.parametrize(
    "override",
    ["train.max_epochs=2.5", "rollout.pii=maybe", "window.H=true", "eval.thresholds=valid"],
)
def test_type_errors(override: str) -> None:
    """Verify wrongly typed values are config errors naming the key."""
    key = override.partition("=")[0]
    with pytest.raises(ConfigError, match=key):
        ConfigFileParser(overrides=[override]).parse()


def test_split_error_names_split() -> None:
    """Verify fractions leaving no test segment mention split."""
    with pytest.raises(ConfigError, match="split"):
        ConfigFileParser(overrides=["split.train_frac=0.9", "split.valid_frac=0.2"]).parse()


def test_invalid_domain_values_are_config_errors() -> None:
    """Verify domain validation surfaces as ConfigError with the block name."""
    with pytest.raises(ConfigError, match="train"):
        ConfigFileParser(overrides=["train.learning_rate=0"]).parse()
    with pytest.raises(ConfigError, match="window"):
        ConfigFileParser(overrides=["window.L=0"]).parse()
    with pytest.raises(ConfigError, match="model: Unknown activation"):
        ConfigFileParser(overrides=["model.activation=swish"]).parse()


def test_activation_reaches_architecture() -> None:
    """Verify model.activation is carried into the backbone descriptor."""
    config = ConfigFileParser(overrides=["model.activation=tanh"]).parse()

    assert config.architecture(n_atoms=3).activation == "tanh"


def test_malformed_override() -> None:
    """Verify overrides without '=' are rejected."""
    with pytest.raises(ConfigError, match="block.key=value"):
        ConfigFileParser(overrides=["train.lam"]).parse()


def test_missing_and_malformed_files(tmp_path: Path) -> None:
    """Verify unreadable config files are config errors."""
    with pytest.raises(ConfigError, match="not found"):
        ConfigFileParser(tmp_path / "absent.toml").parse()
    broken = tmp_path / "broken.toml"
    broken.write_text("[train\nlam = 1")
    with pytest.raises(ConfigError, match="Cannot parse"):
        ConfigFileParser(broken).parse()


def test_bad_run_id() -> None:
    """Verify run ids cannot escape out_dir."""
    with pytest.raises(ConfigError, match="run_id"):
        ConfigFileParser(overrides=["run_id=../x"]).parse()


def test_morse_pairs_inline_and_file(tmp_path: Path) -> None:
    """Verify inline pairs and params_file both build the Morse table."""
    config = ConfigFileParser(overrides=['morse.pairs={ "B-A" = [0.6, 1.4, 2.6] }']).parse()
    assert config.morse_table().get("A", "B").b == 0.0

    params = tmp_path / "morse.csv"
    params.write_text("species_i,species_j,D_e,a,d_e,b\nA,A,0.3,1.0,2.0,0\n")
    config = ConfigFileParser(overrides=[f'morse.params_file="{params}"']).parse()
    assert config.morse_table().get("A", "A").D_e == 0.3


def test_bad_morse_pair_key() -> None:
    """Verify malformed pair keys are reported."""
    config = ConfigFileParser(overrides=['morse.pairs={ "AB" = [0.6, 1.4, 2.6] }']).parse()
    with pytest.raises(ConfigError, match="AB"):
        config.morse_table()


def test_resolved_config_written(tmp_path: Path, sample_config: Path) -> None:
    """Verify the resolved config snapshot is sorted JSON of every block."""
    config = ConfigFileParser(sample_config).parse()

    path = config.write_resolved(tmp_path)

    payload = json.loads(path.read_text())
    assert path.name == "resolved_config.json"
    assert payload["seed"] == 7
    assert payload["train"]["lam"] == 5e-4
    assert list(payload) == sorted(payload)


@pytest.mark.parametrize(
    ("text", "expected"),
    [("1e-4", 1e-4), ("false", False), ("[0, 1]", [0, 1]), ("mixer", "mixer"), ('"a b"', "a b")],
)
def test_parse_literal(text: str, expected: object) -> None:
    """Verify TOML literals parse and bare words stay strings."""
    assert parse_literal(text) == expected
