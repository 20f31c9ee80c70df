"""Top-level command line interface.

One executable with training, oracle, and reporting subcommands. The data
directory is taken from RDCLAB_DATA_DIR (falls back to the bundled digits
when no MNIST files are found there).
"""

from __future__ import annotations

import csv
import itertools
import math
import sys
from pathlib import Path

import click

from . import evalcli, results, trainer
from .data import load_dataset
from .datamodel import config_from_kv, config_to_kv, dump_kv, parse_kv, run_id
from .oracle import SolveOptions, parse_source_file, solve_rdpc

SWEEP_PREFIX = "sweep."


@click.group()
def main():
    """Rate-distortion-classification/perception compression lab."""


def _workspace(out_dir: str) -> trainer.Workspace:
    return trainer.Workspace(Path(out_dir))


@main.command("pretrain-classifier")
@click.option("--seed", default=0, type=int)
@click.option("--out-dir", default="runs", show_default=True)
@click.option("--epochs", default=50, type=int, show_default=True)
def pretrain_classifier_cmd(seed, out_dir, epochs):
    """Train and checkpoint the shared evaluation classifier."""
    ds = load_dataset()
    path, acc = trainer.pretrain_classifier(
        ds, _workspace(out_dir), seed=seed, epochs=epochs
    )
    click.echo(f"classifier saved to {path} (test accuracy {acc:.4f}, dataset {ds.name})")


@main.command("train")
@click.argument("config_file", type=click.Path(exists=True))
@click.option("--seed", default=None, type=int, help="Override the config seed.")
@click.option("--out-dir", default="runs", show_default=True)
@click.option("--resume/--no-resume", default=True, show_default=True)
def train_cmd(config_file, seed, out_dir, resume):
    """Run one training config (end-to-end or universal)."""
    kv = parse_kv(Path(config_file).read_text())
    if seed is not None:
        kv["seed"] = str(seed)
    config = config_from_kv(kv)
    ws = _workspace(out_dir)
    ds = load_dataset()
    rid = run_id(config)
    if resume and rid in ws.results.run_ids():
        click.echo(f"run {rid} already complete; nothing to do")
        return
    point = trainer.train_run(config, ds, ws)
    ws.results.append(point)
    click.echo(
        f"run {rid}: mse={point.mse:.5f} ce={point.ce:.4f} "
        f"accuracy={point.accuracy:.4f} w1={point.w1_proxy:.4f}"
    )


def _expand_sweep(kv: dict[str, str]) -> list[dict[str, str]]:
    base = {k: v for k, v in kv.items() if not k.startswith(SWEEP_PREFIX)}
    axes = {
        k[len(SWEEP_PREFIX):]: [t for t in v.replace(",", " ").split()]
        for k, v in kv.items()
        if k.startswith(SWEEP_PREFIX)
    }
    if not axes:
        return [base]
    keys = sorted(axes)
    configs = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        cfg = dict(base)
        cfg.update(dict(zip(keys, combo)))
        configs.append(cfg)
    return configs


@main.command("sweep")
@click.argument("sweep_file", type=click.Path(exists=True))
@click.option("--seed", default=None, type=int, help="Override every run's seed.")
@click.option("--out-dir", default="runs", show_default=True)
@click.option("--resume/--no-resume", default=True, show_default=True)
def sweep_cmd(sweep_file, seed, out_dir, resume):
    """Run a sweep file: base config keys plus sweep.<field> value lists."""
    kv = parse_kv(Path(sweep_file).read_text())
    expanded = _expand_sweep(kv)
    if seed is not None:
        for cfg in expanded:
            cfg["seed"] = str(seed)
    configs = tuple(config_from_kv(cfg) for cfg in expanded)
    ws = _workspace(out_dir)
    ds = load_dataset()
    points = trainer.run_sweep(
        trainer.SweepPlan(configs=configs), ds, ws, resume=resume
    )
    click.echo(f"sweep complete: {len(points)}/{len(configs)} runs have results")


def _parse_grid(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


@main.command("oracle")
@click.argument("source_file", type=click.Path(exists=True))
@click.option("--d-grid", required=True, help="Distortion limits, e.g. '0.05 0.1 0.2'.")
@click.option("--c-grid", default="inf", show_default=True, help="Classification limits (bits).")
@click.option("--p-limit", default="inf", show_default=True, help="Perception (TV) limit.")
@click.option("--starts", default=32, type=int, show_default=True)
@click.option("--seed", default=0, type=int)
@click.option("--out", default="oracle_surface.csv", show_default=True)
def oracle_cmd(source_file, d_grid, c_grid, p_limit, starts, seed, out):
    """Compute a rate surface for a tiny discrete source; emit CSV."""
    source = parse_source_file(source_file)
    opts = SolveOptions(n_starts=starts, seed=seed)
    plim = float(p_limit)
    rows = []
    for d in _parse_grid(d_grid):
        for c in _parse_grid(c_grid):
            climit = None if math.isinf(c) else c
            sol = solve_rdpc(source, d, P=plim, C=climit, options=opts)
            rows.append((d, plim, c, sol.status, sol.rate))
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["D", "P", "C", "status", "rate_bits"])
        w.writerows(rows)
    click.echo(f"wrote {len(rows)} surface rows to {out}")


@main.command("export")
@click.option("--out-dir", default="runs", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--out", required=True)
def export_cmd(out_dir, fmt, out):
    """Export the results table to CSV or JSON."""
    points = _workspace(out_dir).results.load()
    if not points:
        click.echo("no results to export", err=True)
        sys.exit(1)
    results.export_table(points, fmt, out)
    click.echo(f"exported {len(points)} rows to {out}")


@main.command("plot")
@click.option("--out-dir", default="runs", show_default=True)
@click.option("--x-axis", default="ce", show_default=True)
@click.option("--y-axis", default="mse", show_default=True)
@click.option("--group-by", default="rate", show_default=True)
@click.option("--out", required=True)
def plot_cmd(out_dir, x_axis, y_axis, group_by, out):
    """Plot a tradeoff chart from the results table."""
    points = _workspace(out_dir).results.load()
    if not points:
        click.echo("no results to plot", err=True)
        sys.exit(1)
    evalcli.plot_tradeoff(points, x_axis, y_axis, group_by, out)
    click.echo(f"wrote {out}")


@main.command("dump-images")
@click.argument("run")
@click.option("--out-dir", default="runs", show_default=True)
@click.option("--n-images", default=8, type=int, show_default=True)
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True)
def dump_images_cmd(run, out_dir, n_images, seed, out):
    """Dump an originals-over-reconstructions grid for a completed run."""
    ws = _workspace(out_dir)
    ds = load_dataset()
    evalcli.dump_reconstructions(
        ws.checkpoint(run, "encoder"),
        ws.checkpoint(run, "decoder"),
        ds,
        n_images,
        out,
        seed=seed,
    )
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
