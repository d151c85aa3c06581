"""Command line entry point: simulate, train, score, export."""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import batchsim, io as model_io, monitor
from .dataset import apply_normalization, fit_normalization, load_csv, write_csv
from .pipeline import MODE_HULS, MODE_PLAIN, evaluate_model, train_huls, train_plain
from .som import SomConfig

_FAULT_SHORTHAND = {
    "e1": batchsim.FAULT_E1,
    "e2": batchsim.FAULT_E2,
    "e3": batchsim.FAULT_E3,
}

_POLICY_RULES = {
    "quantile": monitor.RULE_QUANTILE,
    "fixed": monitor.RULE_FIXED,
    "mean3sigma": monitor.RULE_MEAN_SIGMA,
}


@click.group()
def main() -> None:
    """Phase discovery and anomaly monitoring for batch-process data."""


@main.command()
@click.option("--train-batches", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--validate-batches", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--faults", default="", help="Comma list of fault batches to append (e1,e2,e3).")
@click.option("--seed", type=int, default=0, envvar="HULS_SEED", show_default=True)
@click.option(
    "--noise",
    type=click.FloatRange(min=0),
    default=0.01,
    show_default=True,
    help="Gaussian noise amplitude on the sensor signals P, F, L.",
)
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=".",
    envvar="HULS_OUT_DIR",
    show_default=True,
)
def simulate(train_batches, validate_batches, faults, seed, noise, out_dir) -> None:
    """Generate a synthetic campaign: train.csv, eval.csv and truth.csv."""
    fault_modes = []
    for token in filter(None, (t.strip().lower() for t in faults.split(","))):
        if token not in _FAULT_SHORTHAND:
            raise click.BadParameter(f"unknown fault {token!r}; choose from e1, e2, e3")
        fault_modes.append(_FAULT_SHORTHAND[token])
    train_ds, eval_ds, truth = batchsim.generate_campaign(
        n_train=train_batches,
        n_validate=validate_batches,
        faults=tuple(fault_modes),
        seed=seed,
        noise=(noise, noise, noise, 0.0, 0.0),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(train_ds, out_dir / "train.csv")
    write_csv(eval_ds, out_dir / "eval.csv")
    batchsim.write_truth_csv(truth, out_dir / "truth.csv")
    click.echo(
        json.dumps(
            {
                "train_csv": str(out_dir / "train.csv"),
                "eval_csv": str(out_dir / "eval.csv"),
                "truth_csv": str(out_dir / "truth.csv"),
                "batches": train_batches + validate_batches + len(fault_modes),
            }
        )
    )


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--batch-column", default="batch", show_default=True)
@click.option("--mode", type=click.Choice([MODE_HULS, MODE_PLAIN]), default=MODE_HULS, show_default=True)
@click.option("--map", "map_rows", type=click.IntRange(min=1), default=67, show_default=True, help="Lattice rows (and columns unless --map-cols is given).")
@click.option("--map-cols", type=click.IntRange(min=1), default=None, help="Lattice columns; defaults to --map.")
@click.option("--epochs", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--alpha", type=click.FloatRange(min=0, min_open=True), default=0.02, show_default=True)
@click.option("--sigma", type=click.FloatRange(min=0, min_open=True), default=2.0, show_default=True)
@click.option("--beta", type=click.FloatRange(min=0, min_open=True), default=0.01, show_default=True)
@click.option("--phi", type=click.FloatRange(min=0), default=10.0, show_default=True)
@click.option("--seed", type=int, default=0, envvar="HULS_SEED", show_default=True)
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), default="model.json", show_default=True)
def train(input_path, batch_column, mode, map_rows, map_cols, epochs, alpha, sigma, beta, phi, seed, output) -> None:
    """Train a model on a CSV and print its quality metrics as one JSON line."""
    try:
        raw = load_csv(input_path, batch_column)
        params = fit_normalization(raw)
        scaled = apply_normalization(raw, params)
        config = SomConfig(
            m=map_rows,
            n=map_cols if map_cols is not None else map_rows,
            epochs=epochs,
            alpha0=alpha,
            sigma0=sigma,
            rng_seed=seed,
        )
        if mode == MODE_HULS:
            model = train_huls(scaled, config, beta=beta, phi=phi, normalization=params)
        else:
            model = train_plain(scaled, config, phi=phi, normalization=params)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    output.parent.mkdir(parents=True, exist_ok=True)
    model_io.save_model(model, output)
    metrics = evaluate_model(model, raw)
    click.echo(
        json.dumps(
            {
                "mode": model.mode,
                "e_q": metrics.e_q,
                "e_t": metrics.e_t,
                "num_clusters": metrics.num_clusters,
                "model": str(output),
            }
        )
    )


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--batch-column", default="batch", show_default=True)
@click.option("--policy", type=click.Choice(sorted(_POLICY_RULES)), default="quantile", show_default=True)
@click.option("--threshold", type=click.FloatRange(min=0, min_open=True), default=None, help="Cutoff for the fixed policy.")
@click.option("--quantile", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.99, show_default=True)
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=".",
    envvar="HULS_OUT_DIR",
    show_default=True,
)
def score(model_path, input_path, batch_column, policy, threshold, quantile, out_dir) -> None:
    """Score a stream: writes trace.csv, summary.csv and phases.csv."""
    try:
        model = model_io.load_model(model_path)
        data = load_csv(input_path, batch_column)
        alarm_policy = monitor.AlarmPolicy(
            rule=_POLICY_RULES[policy], threshold=threshold, quantile=quantile
        )
        resolved = alarm_policy.resolved(
            monitor.resolve_threshold_from_scores(model.training_scores, alarm_policy)
        )
        trace = monitor.score_stream(model, data, resolved)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    monitor.trace_to_csv(trace, out_dir / "trace.csv")
    monitor.summary_to_csv(trace, out_dir / "summary.csv")
    monitor.phases_to_csv(trace, out_dir / "phases.csv")
    click.echo(
        json.dumps(
            {
                "samples": trace.length,
                "alarms": int(trace.alarms.sum()),
                "threshold": trace.threshold,
                "trace": str(out_dir / "trace.csv"),
            }
        )
    )


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--what", type=click.Choice(["umatrix", "clusters", "all"]), default="all", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "pgm"]), default="csv", show_default=True, help="U-matrix format; the cluster map is always CSV.")
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=".",
    envvar="HULS_OUT_DIR",
    show_default=True,
)
def export(model_path, what, fmt, out_dir) -> None:
    """Write the U-matrix and cluster-map grids of a trained model."""
    try:
        model = model_io.load_model(model_path)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if what in ("umatrix", "all"):
        if fmt == "pgm":
            model_io.umatrix_to_pgm(model.umatrix, out_dir / "umatrix.pgm")
            written.append(str(out_dir / "umatrix.pgm"))
        else:
            model_io.umatrix_to_csv(model.umatrix, out_dir / "umatrix.csv")
            written.append(str(out_dir / "umatrix.csv"))
    if what in ("clusters", "all"):
        model_io.clusters_to_csv(model.clusters, out_dir / "clusters.csv")
        written.append(str(out_dir / "clusters.csv"))
    click.echo(json.dumps({"written": written}))


if __name__ == "__main__":
    main()
