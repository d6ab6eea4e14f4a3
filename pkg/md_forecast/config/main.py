"""Pipeline configuration.

One TOML file with a block per pipeline stage plus global `seed`,
`out_dir` and `run_id`. Every block is a frozen dataclass whose field
names are the config keys; ConfigFileParser rejects anything else.

Example:

    seed = 7
    run_id = "demo"

    [simgen]
    species_counts = { A = 4, B = 4 }
    n_steps = 4000

    [train]
    lam = 5e-4
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Literal

from md_forecast.exceptions import ConfigError
from md_forecast.models.morse import Granularity, MorseParams, MorseTable, species_pair
from md_forecast.models.rollout import FreezePolicy, RolloutConfig
from md_forecast.models.simulation import SimConfig, Thermostat, ThermostatKind
from md_forecast.models.training import ArchitectureSpec, LRSchedule, TrainConfig
from md_forecast.models.windows import WindowSpec
from md_forecast.services.tables import read_morse_table
from md_forecast.utils.io import write_json
from md_forecast.utils.validation import validate_fractions, validate_run_id

logger = logging.getLogger(__name__)

ThresholdChoice = Literal["train", "test"]
TrajectoryFormat = Literal["xyz", "csv"]

DEFAULT_MORSE_PAIRS: dict[str, list[float]] = {
    "A-A": [0.40, 1.6, 2.4, 0.0],
    "A-B": [0.60, 1.4, 2.6, 0.0],
    "B-B": [0.50, 1.5, 2.8, 0.0],
}


@dataclass(frozen=True)
class SimgenBlock:
    """`[simgen]`: reference simulation (keys match SimConfig)."""

    species_counts: dict[str, int] = field(default_factory=lambda: {"A": 4, "B": 4})
    n_steps: int = 6000
    dt_fs: float = 1.0
    temperature_K: float = 800.0
    box_side: float = 12.0
    thermostat: ThermostatKind = "langevin"
    gamma: float = 0.01
    rescale_interval: int = 10
    cutoff: float = 12.0
    masses: dict[str, float] = field(default_factory=dict)
    default_mass_amu: float = 20.0
    reflective_walls: bool = True


@dataclass(frozen=True)
class SplitBlock:
    """`[split]`: contiguous train/valid/test fractions."""

    train_frac: float = 0.7
    valid_frac: float = 0.15


@dataclass(frozen=True)
class MorseBlock:
    """`[morse]`: pair parameters, threshold granularity, sample synthesis.

    `pairs` maps "A-B" to [D_e, a, d_e, b]; `params_file` overrides it.
    """

    pairs: dict[str, list[float]] = field(default_factory=lambda: dict(DEFAULT_MORSE_PAIRS))
    params_file: str = ""
    granularity: Granularity = "species"
    n_samples: int = 20
    noise_ev: float = 0.0


@dataclass(frozen=True)
class WindowBlock:
    """`[window]`: history/horizon lengths and normalization."""

    H: int = 64
    L: int = 16
    stride: int = 1
    normalize: bool = True


@dataclass(frozen=True)
class ModelBlock:
    """`[model]`: backbone choice and widths."""

    backbone: str = "mixer"
    hidden: int = 64
    blocks: int = 2
    activation: str = "gelu"


@dataclass(frozen=True)
class TrainBlock:
    """`[train]`: physics-informed training (keys match TrainConfig)."""

    lam: float = 1e-4
    pairs_per_step: int = 500
    batch_size: int = 16
    learning_rate: float = 0.01
    clip_norm: float = 1.0
    max_epochs: int = 10
    patience: int = 3
    chain_physics: bool = True
    lr_schedule: LRSchedule = "constant"
    plateau_factor: float = 0.5
    plateau_patience: int = 1


@dataclass(frozen=True)
class RolloutBlock:
    """`[rollout]`: autoregressive generation; L = 0 uses the model horizon."""

    total_steps: int = 1000
    L: int = 0
    pii: bool = True
    pairs_per_step: int = 500
    freeze_policy: FreezePolicy = "freeze_all"
    log_every: int = 10


@dataclass(frozen=True)
class EvalBlock:
    """`[eval]`: metrics, grids and output format.

    fit_start/fit_stop are MSD lag indices; fit_stop = 0 picks the default window.
    """

    pairs_per_step: int = 500
    thresholds: ThresholdChoice = "test"
    format: TrajectoryFormat = "xyz"
    divergence_bound: float = 50.0
    fit_start: int = 0
    fit_stop: int = 0
    multi_origin: bool = True
    lambdas: list[float] = field(default_factory=lambda: [0.0, 1e-4, 5e-4, 1e-3])
    repeats: int = 1


BLOCKS: dict[str, type] = {
    "simgen": SimgenBlock,
    "split": SplitBlock,
    "morse": MorseBlock,
    "window": WindowBlock,
    "model": ModelBlock,
    "train": TrainBlock,
    "rollout": RolloutBlock,
    "eval": EvalBlock,
}
GLOBAL_KEYS = ("seed", "out_dir", "run_id")


def block_keys(block: str) -> list[str]:
    """Config keys of a block, in declaration order."""
    return [f.name for f in fields(BLOCKS[block])]


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved configuration for every subcommand."""

    simgen: SimgenBlock = field(default_factory=SimgenBlock)
    split: SplitBlock = field(default_factory=SplitBlock)
    morse: MorseBlock = field(default_factory=MorseBlock)
    window: WindowBlock = field(default_factory=WindowBlock)
    model: ModelBlock = field(default_factory=ModelBlock)
    train: TrainBlock = field(default_factory=TrainBlock)
    rollout: RolloutBlock = field(default_factory=RolloutBlock)
    eval: EvalBlock = field(default_factory=EvalBlock)
    seed: int = 0
    out_dir: str = "runs"
    run_id: str = "default"

    def __post_init__(self) -> None:
        validate_fractions(self.split.train_frac, self.split.valid_frac)
        validate_run_id(self.run_id)
        if self.eval.repeats < 1:
            raise ConfigError(f"eval.repeats must be >= 1, got {self.eval.repeats}")
        if not self.eval.lambdas:
            raise ConfigError("eval.lambdas must list at least one value")
        # Domain objects validate the rest; surface their errors as config errors.
        self.window_spec()
        self.architecture(n_atoms=1)
        self.train_config()
        self.thermostat()

    @property
    def run_dir(self) -> Path:
        """out_dir/run_id, where every artifact of the run is written."""
        return Path(self.out_dir) / self.run_id

    def morse_table(self) -> MorseTable:
        """Morse parameters from `morse.params_file` or inline `morse.pairs`."""
        if self.morse.params_file:
            return read_morse_table(self.morse.params_file)
        entries = {}
        for key, values in self.morse.pairs.items():
            left, sep, right = key.partition("-")
            if not sep or len(values) not in (3, 4):
                raise ConfigError(
                    f"morse.pairs entry '{key}' must be 'A-B' = [D_e, a, d_e, b]"
                )
            try:
                entries[species_pair(left, right)] = MorseParams(*map(float, values))
            except ValueError as e:
                raise ConfigError(f"morse.pairs.{key}: {e}") from e
        return MorseTable(entries)

    def thermostat(self) -> Thermostat:
        try:
            return Thermostat(
                kind=self.simgen.thermostat,
                gamma=self.simgen.gamma,
                interval=self.simgen.rescale_interval,
            )
        except ValueError as e:
            raise ConfigError(f"simgen: {e}") from e

    def sim_config(self) -> SimConfig:
        """SimConfig for `gen-data`, seeded from the global seed."""
        try:
            return SimConfig(
                species_counts=dict(self.simgen.species_counts),
                morse=self.morse_table(),
                box_side=self.simgen.box_side,
                temperature_K=self.simgen.temperature_K,
                n_steps=self.simgen.n_steps,
                dt_fs=self.simgen.dt_fs,
                thermostat=self.thermostat(),
                seed=self.seed,
                cutoff=self.simgen.cutoff,
                masses=dict(self.simgen.masses),
                default_mass_amu=self.simgen.default_mass_amu,
                reflective_walls=self.simgen.reflective_walls,
            )
        except ValueError as e:
            raise ConfigError(f"simgen: {e}") from e

    def window_spec(self) -> WindowSpec:
        try:
            return WindowSpec(H=self.window.H, L=self.window.L, stride=self.window.stride)
        except ValueError as e:
            raise ConfigError(f"window: {e}") from e

    def architecture(self, n_atoms: int) -> ArchitectureSpec:
        try:
            return ArchitectureSpec(
                kind=self.model.backbone,
                H=self.window.H,
                L=self.window.L,
                n_atoms=n_atoms,
                hidden=self.model.hidden,
                blocks=self.model.blocks,
                activation=self.model.activation,
            )
        except ValueError as e:
            raise ConfigError(f"model: {e}") from e

    def train_config(self, lam: float | None = None, seed: int | None = None) -> TrainConfig:
        """TrainConfig from `[train]`, optionally overriding λ and seed."""
        values = asdict(self.train)
        if lam is not None:
            values["lam"] = lam
        try:
            return TrainConfig(**values, seed=self.seed if seed is None else seed)
        except ValueError as e:
            raise ConfigError(f"train: {e}") from e

    def rollout_config(
        self, model_L: int, pii: bool | None = None, seed: int | None = None
    ) -> RolloutConfig:
        """RolloutConfig from `[rollout]`; L = 0 resolves to the model horizon."""
        try:
            return RolloutConfig(
                total_steps=self.rollout.total_steps,
                L=self.rollout.L or model_L,
                pii_enabled=self.rollout.pii if pii is None else pii,
                pairs_per_step=self.rollout.pairs_per_step,
                seed=self.seed if seed is None else seed,
                freeze_policy=self.rollout.freeze_policy,
                log_every=self.rollout.log_every,
            )
        except ValueError as e:
            raise ConfigError(f"rollout: {e}") from e

    def fit_window(self) -> tuple[int, int] | None:
        if self.eval.fit_stop == 0:
            return None
        return (self.eval.fit_start, self.eval.fit_stop)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def write_resolved(self, directory: Path | None = None) -> Path:
        """Snapshot the resolved config as resolved_config.json (sorted keys)."""
        target = (directory or self.run_dir) / "resolved_config.json"
        write_json(self.to_dict(), target)
        logger.debug("Wrote resolved config to %s", target)
        return target
