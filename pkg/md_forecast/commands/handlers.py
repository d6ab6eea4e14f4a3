"""Subcommand handlers.

Each handler takes the Dependencies container and the parsed argparse
namespace, writes its artifacts under out_dir/<run_id>/ and returns an
exit code. Failures are raised; ErrorHandlingMiddleware turns them into
exit codes.
"""

import argparse
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from md_forecast.commands.reports import (
    DIFFUSIVITY_COLUMNS,
    METRIC_COLUMNS,
    diffusivity_rows,
    format_table,
    mean_rows,
    metric_rows,
)
from md_forecast.dependencies import Dependencies
from md_forecast.exceptions import (
    EXIT_OK,
    ConfigError,
    DegenerateSamples,
    FitDiverged,
    NonPositiveDistance,
    PartialFailure,
)
from md_forecast.middleware.timing import TimingStats
from md_forecast.models.metrics import DivergenceReport, ForecastErrors, ViolationReport
from md_forecast.models.morse import (
    MorseParams,
    MorseTable,
    SpeciesPair,
    ThresholdTable,
    format_species_key,
)
from md_forecast.models.trajectory import FloatArray, Trajectory
from md_forecast.models.training import TrainingLog
from md_forecast.services.checkpoint import load_checkpoint, save_checkpoint
from md_forecast.services.dataset import fit_normalizer, make_windows
from md_forecast.services.forecaster import ForecastModel, train
from md_forecast.services.metrics import (
    detect_divergence,
    diffusivity_table,
    forecast_errors,
    violations,
)
from md_forecast.services.morse import compute_thresholds, fit_morse, synthesize_samples
from md_forecast.services.rollout import RolloutRun, batch_rollout, rollout
from md_forecast.services.simgen import generate, split_dataset
from md_forecast.services.tables import (
    read_energy_samples,
    read_morse_table,
    read_thresholds,
    write_energy_samples,
    write_morse_table,
    write_thresholds,
)
from md_forecast.services.trajectory import read_trajectory, write_trajectory
from md_forecast.utils.io import write_json, write_table
from md_forecast.utils.rng import derive_rng, derive_seed
from md_forecast.utils.validation import validate_existing_file

logger = logging.getLogger(__name__)

FIT_COLUMNS = ("pair", "D_e", "a", "d_e", "b", "rmse", "iterations", "converged")
ABLATION_COLUMNS = ("pit", "pif", "mae_delta", "mse_delta", "v_r", "diverged")
SWEEP_COLUMNS = ("lambda", "mae_delta", "v_r")


# Shared helpers


def _split_path(deps: Dependencies, name: str) -> Path:
    return deps.run_dir / f"{name}.{deps.config.eval.format}"


def _load(deps: Dependencies, path: str | Path) -> Trajectory:
    path = validate_existing_file(path, "trajectory file")
    return read_trajectory(path, dt_fs=deps.config.simgen.dt_fs)


def _load_split(deps: Dependencies, name: str, override: str | None = None) -> Trajectory:
    return _load(deps, override or _split_path(deps, name))


def _frame_before(preceding: Trajectory | None, traj: Trajectory) -> FloatArray | None:
    """Last frame of `preceding` when it ends right where `traj` starts."""
    if preceding is None or preceding.species != traj.species:
        return None
    if preceding.start_step + preceding.n_frames != traj.start_step:
        return None
    return preceding.positions[-1]


def _train_thresholds(
    deps: Dependencies,
    morse: MorseTable,
    path: str | None = None,
    train_traj: Trajectory | None = None,
) -> ThresholdTable:
    """τ_train: an explicit file, the run's thresholds_train.csv, or recomputed."""
    if path:
        return read_thresholds(validate_existing_file(path, "threshold file"), source="train")
    saved = deps.run_dir / "thresholds_train.csv"
    if saved.is_file():
        return read_thresholds(saved, source="train")
    traj = train_traj if train_traj is not None else _load_split(deps, "train")
    return compute_thresholds(traj, morse, deps.config.morse.granularity, source="train")


def _train_model(
    deps: Dependencies,
    train_traj: Trajectory,
    valid_traj: Trajectory,
    morse: MorseTable,
    thresholds: ThresholdTable,
    lam: float,
    seed: int,
) -> tuple[ForecastModel, TrainingLog]:
    config = deps.config
    spec = config.window_spec()
    train_windows = make_windows(train_traj, spec)
    valid_windows = make_windows(valid_traj, spec)
    normalizer = fit_normalizer(train_windows, enabled=config.window.normalize)
    model = ForecastModel.create(
        config.architecture(train_traj.n_atoms),
        normalizer=normalizer,
        window=spec,
        species=train_traj.species,
        seed=derive_seed(seed, "train.init"),
        registry=deps.registry,
    )
    model.thresholds_ref = "thresholds_train.csv"
    return train(
        model,
        train_windows,
        valid_windows,
        morse,
        thresholds,
        config.train_config(lam=lam, seed=seed),
    )


@dataclass(frozen=True)
class Evaluation:
    errors: ForecastErrors
    violations: ViolationReport
    divergence: DivergenceReport


def _evaluate(
    deps: Dependencies,
    pred: Trajectory,
    truth: Trajectory,
    history: int,
    morse: MorseTable,
    thresholds: ThresholdTable,
    seed: int,
) -> Evaluation:
    """Score the frames after the first `history` against truth over the same steps."""
    if truth.n_frames > pred.n_frames:
        truth = truth.slice(0, pred.n_frames)
    horizon_pred = pred.slice(history, pred.n_frames)
    horizon_truth = truth.slice(history, truth.n_frames)
    anchor = truth.frame(history - 1) if history > 0 else None
    errors = forecast_errors(horizon_pred, horizon_truth, anchor=anchor)
    report = violations(
        pred, morse, thresholds, deps.config.eval.pairs_per_step, seed=seed, start=history
    )
    divergence = detect_divergence(
        pred, bound=deps.config.eval.divergence_bound, reference=max(history - 1, 0)
    )
    return Evaluation(errors=errors, violations=report, divergence=divergence)


def _eval_thresholds(
    deps: Dependencies,
    morse: MorseTable,
    truth: Trajectory,
    path: str | None = None,
) -> ThresholdTable:
    """Thresholds for reporting V_r: a file, τ_train, or τ from the truth (default)."""
    if path:
        return read_thresholds(validate_existing_file(path, "threshold file"))
    if deps.config.eval.thresholds == "train":
        return _train_thresholds(deps, morse)
    return compute_thresholds(truth, morse, deps.config.morse.granularity, source="test")


def _rollout_steps(deps: Dependencies, test: Trajectory, history: int) -> int:
    steps = min(deps.config.rollout.total_steps, test.n_frames - history)
    if steps < 1:
        raise ConfigError(
            f"Test segment has {test.n_frames} frames; need more than H={history}"
        )
    if steps < deps.config.rollout.total_steps:
        logger.warning(
            "Rollout shortened to %d steps to match the test segment", steps
        )
    return steps


# gen-data


def handle_gen_data(deps: Dependencies, args: argparse.Namespace) -> int:
    """Simulate, split and write train/valid/test trajectories plus a manifest."""
    config = deps.config
    sim = config.sim_config()
    traj = generate(sim)
    segments = split_dataset(
        traj, config.split.train_frac, config.split.valid_frac, spec=config.window_spec()
    )
    counts: dict[str, int] = {}
    for name, segment in zip(("train", "valid", "test"), segments, strict=True):
        path = write_trajectory(segment, _split_path(deps, name), config.eval.format)
        counts[name] = segment.n_frames
        logger.info("Wrote %s: %d frames", path, segment.n_frames)

    manifest: dict[str, Any] = {
        "frames": {**counts, "total": traj.n_frames},
        "seed": config.seed,
        "species_counts": dict(sorted(sim.species_counts.items())),
        "n_atoms": sim.n_atoms,
        "dt_fs": sim.dt_fs,
        "temperature_K": sim.temperature_K,
        "thermostat": sim.thermostat.kind,
        "format": config.eval.format,
    }
    write_json(manifest, deps.run_dir / "manifest.json")
    config.write_resolved()
    print(
        format_table(
            [{"segment": k, "frames": v} for k, v in counts.items()],
            ("segment", "frames"),
            title=f"gen-data: {traj.n_frames} frames, seed={config.seed}",
        )
    )
    return EXIT_OK


# fit-morse


def _synthesize(deps: Dependencies, path: Path) -> None:
    config = deps.config
    table = config.morse_table()
    samples: dict[SpeciesPair, FloatArray] = {}
    for k, key in enumerate(table):
        samples[key] = synthesize_samples(
            table.get(*key),
            n=config.morse.n_samples,
            noise_ev=config.morse.noise_ev,
            rng=derive_rng(config.seed, "morse.samples", k),
        )
    write_energy_samples(samples, path)
    logger.info("Wrote %d synthetic samples per pair to %s", config.morse.n_samples, path)


def handle_fit_morse(deps: Dependencies, args: argparse.Namespace) -> int:
    """Fit one Morse curve per species pair; exit 3 if any pair fails."""
    samples_path = Path(args.energy_csv)
    if args.synthesize:
        _synthesize(deps, samples_path)
    grouped = read_energy_samples(validate_existing_file(samples_path, "energy sample file"))

    fitted: dict[SpeciesPair, MorseParams] = {}
    rows: list[dict[str, Any]] = []
    failed: list[str] = []
    for key, samples in grouped.items():
        label = format_species_key(key)
        try:
            params, report = fit_morse(samples)
        except (FitDiverged, DegenerateSamples, NonPositiveDistance) as e:
            logger.error("Fit failed for %s: %s", label, e)
            failed.append(label)
            continue
        fitted[key] = params
        logger.info(
            "Fitted %s: D_e=%.6g a=%.6g d_e=%.6g b=%.6g rmse=%.3g (%d iterations)",
            label,
            *params.as_tuple(),
            report.rmse,
            report.iterations,
        )
        rows.append(
            {
                "pair": label,
                "D_e": params.D_e,
                "a": params.a,
                "d_e": params.d_e,
                "b": params.b,
                "rmse": report.rmse,
                "iterations": report.iterations,
                "converged": report.converged,
            }
        )

    out = Path(args.output) if args.output else deps.run_dir / "morse_params.csv"
    write_morse_table(MorseTable(fitted), out)
    print(format_table(rows, FIT_COLUMNS, title=f"fit-morse: {len(rows)} pairs -> {out}"))
    if failed:
        raise PartialFailure(f"{len(failed)} of {len(grouped)} pair fits failed", failed)
    return EXIT_OK


# thresholds


def handle_thresholds(deps: Dependencies, args: argparse.Namespace) -> int:
    """Compute τ from a trajectory and Morse parameter file."""
    traj = _load(deps, args.trajectory)
    morse = read_morse_table(validate_existing_file(args.morse_csv, "Morse parameter file"))
    table = compute_thresholds(
        traj, morse, deps.config.morse.granularity, source=args.source or Path(args.trajectory).stem
    )
    out = Path(args.output) if args.output else deps.run_dir / "thresholds.csv"
    write_thresholds(table, out)
    print(
        format_table(
            [{"key": k, "tau": v} for k, v in table.rows()],
            ("key", "tau"),
            title=f"thresholds ({table.granularity}) -> {out}",
        )
    )
    return EXIT_OK


# train


def handle_train(deps: Dependencies, args: argparse.Namespace) -> int:
    """Train a forecaster on the train split, early-stopped on the valid split."""
    config = deps.config
    train_traj = _load_split(deps, "train", args.train)
    valid_traj = _load_split(deps, "valid", args.valid)
    morse = config.morse_table()
    thresholds = compute_thresholds(
        train_traj, morse, config.morse.granularity, source="train"
    )
    write_thresholds(thresholds, deps.run_dir / "thresholds_train.csv")

    model, log = _train_model(
        deps, train_traj, valid_traj, morse, thresholds, config.train.lam, config.seed
    )
    save_checkpoint(model, deps.run_dir / "model.ckpt", config.train_config())
    rows = log.rows()
    write_table(rows, deps.run_dir / "training_log.csv", list(rows[0]) if rows else None)
    config.write_resolved()
    print(
        format_table(
            rows,
            ("epoch", "train_total", "valid_mse", "valid_phys", "valid_violations", "improved"),
            title=f"train: best epoch {log.best_epoch}, valid loss {log.best_valid_loss:.6g}",
        )
    )
    return EXIT_OK


# rollout


def handle_rollout(deps: Dependencies, args: argparse.Namespace) -> int:
    """Roll a checkpoint forward from the first H frames of the test split."""
    config = deps.config
    model = load_checkpoint(validate_existing_file(args.checkpoint, "checkpoint"), deps.registry)
    source = _load_split(deps, "test", args.seed_traj)
    seed_history = source.slice(0, model.H)
    valid_path = _split_path(deps, "valid")
    preceding = None
    if args.seed_traj is None and valid_path.is_file():
        preceding = _load(deps, valid_path)
    prior = _frame_before(preceding, seed_history)
    morse = config.morse_table()
    thresholds = _train_thresholds(deps, morse, args.thresholds)
    pii = False if args.no_pii else None
    cfg = config.rollout_config(model.L, pii=pii)

    timing = TimingStats()
    traj, log = rollout(
        model, seed_history, morse, thresholds, cfg, timing=timing, prior_frame=prior
    )
    out = write_trajectory(traj, deps.run_dir / f"predicted.{config.eval.format}", config.eval.format)
    write_table(log.rows(), deps.run_dir / "rollout_log.csv", list(log.rows()[0]))
    config.write_resolved()
    seconds = timing.total_ms / 1000
    if seconds > 0:
        logger.info(
            "Rollout throughput: %.1f steps/s (%.2fms per window over %d windows)",
            cfg.total_steps / seconds,
            timing.avg_ms,
            timing.count,
        )
    print(
        format_table(
            [
                {
                    "steps": cfg.total_steps,
                    "pii": cfg.pii_enabled,
                    "frozen": log.frozen_steps,
                    "violated": log.violated_steps,
                }
            ],
            ("steps", "pii", "frozen", "violated"),
            title=f"rollout -> {out}",
        )
    )
    return EXIT_OK


# evaluate


def handle_evaluate(deps: Dependencies, args: argparse.Namespace) -> int:
    """Score a predicted trajectory against the truth over the same steps."""
    config = deps.config
    pred = _load(deps, args.pred)
    truth = _load(deps, args.truth)
    history = config.window.H if args.history is None else args.history
    morse = config.morse_table()
    thresholds = _eval_thresholds(deps, morse, truth, args.thresholds)
    result = _evaluate(deps, pred, truth, history, morse, thresholds, config.seed)

    rows = metric_rows(result.errors, result.violations, result.divergence, config.seed)
    write_table(rows, deps.run_dir / "metrics.csv", METRIC_COLUMNS)
    print(format_table(rows, METRIC_COLUMNS, title="evaluate"))
    return EXIT_OK


# ablate


def _grid_rollouts(
    deps: Dependencies,
    models: dict[str, ForecastModel],
    pif_options: tuple[bool, ...],
    seed_history: Trajectory,
    morse: MorseTable,
    thresholds: ThresholdTable,
    steps: int,
    seed: int,
    prior_frame: FloatArray | None = None,
) -> dict[str, Trajectory]:
    config = deps.config
    runs: list[RolloutRun] = []
    for name, model in models.items():
        for pif in pif_options:
            cfg = config.rollout_config(model.L, pii=pif, seed=derive_seed(seed, "rollout"))
            cfg = replace(cfg, total_steps=steps)
            runs.append(RolloutRun(key=f"{name}|pif={int(pif)}", model=model, config=cfg))
    results = batch_rollout(
        runs,
        seed_history,
        morse,
        thresholds,
        max_workers=deps.settings.max_workers,
        prior_frame=prior_frame,
    )
    return {r.key: r.trajectory for r in results if r.trajectory is not None}


def handle_ablate(deps: Dependencies, args: argparse.Namespace) -> int:
    """2x2 grid over physics-informed training and physics-informed inference."""
    config = deps.config
    if config.train.lam <= 0:
        raise ConfigError("ablate needs train.lam > 0 for the physics-informed cells")
    train_traj = _load_split(deps, "train")
    valid_traj = _load_split(deps, "valid")
    test = _load_split(deps, "test")
    morse = config.morse_table()
    tau_train = compute_thresholds(train_traj, morse, config.morse.granularity, source="train")
    tau_eval = _eval_thresholds(deps, morse, test)
    H = config.window.H
    steps = _rollout_steps(deps, test, H)
    truth = test.slice(0, H + steps)
    seed_history = test.slice(0, H)
    prior = _frame_before(valid_traj, seed_history)

    runs: list[dict[str, Any]] = []
    for rep in range(config.eval.repeats):
        rep_seed = derive_seed(config.seed, "ablate", rep)
        # both arms of a repeat start from the same initialization
        init_seed = derive_seed(rep_seed, "ablate.init")
        models: dict[str, ForecastModel] = {}
        for pit in (False, True):
            lam = config.train.lam if pit else 0.0
            logger.info("Ablation repeat %d: training pit=%s (lambda=%g)", rep, pit, lam)
            models[f"pit={int(pit)}"], _ = _train_model(
                deps, train_traj, valid_traj, morse, tau_train, lam, init_seed
            )
        trajectories = _grid_rollouts(
            deps, models, (False, True), seed_history, morse, tau_train, steps, rep_seed,
            prior_frame=prior,
        )
        for key, pred in sorted(trajectories.items()):
            result = _evaluate(deps, pred, truth, H, morse, tau_eval, rep_seed)
            pit_part, pif_part = key.split("|")
            runs.append(
                {
                    "repeat": rep,
                    "pit": int(pit_part.split("=")[1]),
                    "pif": int(pif_part.split("=")[1]),
                    "mae_delta": result.errors.mae_delta,
                    "mse_delta": result.errors.mse_delta,
                    "v_r": result.violations.V_r,
                    "diverged": int(result.divergence.diverged),
                }
            )

    write_table(runs, deps.run_dir / "ablation_runs.csv", ("repeat", *ABLATION_COLUMNS))
    summary = mean_rows(runs, ("pit", "pif"), ("mae_delta", "mse_delta", "v_r", "diverged"))
    write_table(summary, deps.run_dir / "ablation.csv", ABLATION_COLUMNS)
    config.write_resolved()
    print(format_table(summary, (*ABLATION_COLUMNS, "runs"), title="ablate"))
    return EXIT_OK


# sweep-lambda


def handle_sweep_lambda(deps: Dependencies, args: argparse.Namespace) -> int:
    """One model per λ and repeat; reports MAE_Δ and V_r per λ."""
    config = deps.config
    train_traj = _load_split(deps, "train")
    valid_traj = _load_split(deps, "valid")
    test = _load_split(deps, "test")
    morse = config.morse_table()
    tau_train = compute_thresholds(train_traj, morse, config.morse.granularity, source="train")
    tau_eval = _eval_thresholds(deps, morse, test)
    H = config.window.H
    steps = _rollout_steps(deps, test, H)
    truth = test.slice(0, H + steps)
    seed_history = test.slice(0, H)
    prior = _frame_before(valid_traj, seed_history)

    runs: list[dict[str, Any]] = []
    for lam in config.eval.lambdas:
        for rep in range(config.eval.repeats):
            seed = derive_seed(config.seed, f"sweep.{lam:g}", rep)
            logger.info("Sweep: lambda=%g repeat %d, seed=%d", lam, rep, seed)
            model, log = _train_model(deps, train_traj, valid_traj, morse, tau_train, lam, seed)
            trajectories = _grid_rollouts(
                deps, {"model": model}, (config.rollout.pii,), seed_history,
                morse, tau_train, steps, seed, prior_frame=prior,
            )
            (pred,) = trajectories.values()
            result = _evaluate(deps, pred, truth, H, morse, tau_eval, seed)
            best = log.epochs[log.best_epoch].valid if log.best_epoch >= 0 else None
            runs.append(
                {
                    "lambda": lam,
                    "repeat": rep,
                    "mae_delta": result.errors.mae_delta,
                    "v_r": result.violations.V_r,
                    "valid_violations": best.violating_pair_count if best else -1,
                }
            )

    write_table(runs, deps.run_dir / "lambda_sweep_runs.csv", list(runs[0]))
    summary = mean_rows(runs, ("lambda",), ("mae_delta", "v_r"))
    write_table(summary, deps.run_dir / "lambda_sweep.csv", SWEEP_COLUMNS)
    config.write_resolved()
    best_row = min(summary, key=lambda row: row["mae_delta"])
    print(
        format_table(
            summary,
            (*SWEEP_COLUMNS, "runs"),
            title=f"sweep-lambda: best lambda={best_row['lambda']:g}",
        )
    )
    return EXIT_OK


# diffusivity


def handle_diffusivity(deps: Dependencies, args: argparse.Namespace) -> int:
    """Per-species MSD curves and Einstein-relation diffusion coefficients."""
    config = deps.config
    traj = _load(deps, args.trajectory)
    species = [args.species] if args.species else None
    reports = diffusivity_table(
        traj, config.fit_window(), multi_origin=config.eval.multi_origin, species=species
    )
    rows = diffusivity_rows(reports)
    write_table(rows, deps.run_dir / "diffusivity.csv", DIFFUSIVITY_COLUMNS)
    for report in reports:
        write_table(
            [
                {"t_fs": float(t), "msd_A2": float(m)}
                for t, m in zip(report.t_fs, report.msd_A2, strict=True)
            ],
            deps.run_dir / f"msd_{report.species}.csv",
            ("t_fs", "msd_A2"),
        )
    print(format_table(rows, DIFFUSIVITY_COLUMNS, title="diffusivity"))
    return EXIT_OK


HANDLERS = {
    "gen-data": handle_gen_data,
    "fit-morse": handle_fit_morse,
    "thresholds": handle_thresholds,
    "train": handle_train,
    "rollout": handle_rollout,
    "evaluate": handle_evaluate,
    "ablate": handle_ablate,
    "sweep-lambda": handle_sweep_lambda,
    "diffusivity": handle_diffusivity,
}
