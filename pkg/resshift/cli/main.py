"""
ResShift CLI - Schedules, degradation, training, sampling, evaluation and verification
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
import numpy as np
import yaml
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from resshift import __version__
from resshift.core.config import (
    Settings,
    config_digest,
    load_run_config,
    preset_config,
    resolve_workers,
)
from resshift.core.errors import ResShiftError, ShapeError
from resshift.core.pipeline import evaluate, sample, train
from resshift.core.schedule import PRESETS, ScheduleParams, build_schedule, schedule_table
from resshift.core.storage import (
    IMAGE_SUFFIXES,
    load_checkpoint,
    load_signal,
    read_tensor,
    save_signal,
    write_json,
    write_schedule_csv,
    write_tensor,
)
from resshift.degrade.datasets import ToyImageDataset, ToyKind, make_pairs
from resshift.degrade.spec import DegradationKind, DegradationSpec
from resshift.oracles import SUITES, OracleRegistry, OracleRunner

console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger("resshift")


def _setup_logging(level: str):
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_time=False, show_path=False)],
        force=True,
    )


def _banner(verb: str, digest: str, seed: int):
    logger.info(f"resshift {__version__} {verb} | config {digest[:16]} | seed {seed}")


def _flag_digest(ctx: click.Context) -> str:
    return config_digest({"verb": ctx.info_name, **{k: str(v) for k, v in ctx.params.items()}})


def _check_batch_output(out_path: str, count: int):
    if count > 1 and Path(out_path).suffix.lower() in IMAGE_SUFFIXES:
        raise click.BadParameter(
            f"{count} images cannot be written to a single image file; use a .rsten path",
            param_hint="--out",
        )


def domain_errors(fn):
    """Report domain failures on stderr and exit with status 1"""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ResShiftError, ValueError, OSError, yaml.YAMLError) as e:
            err_console.print(f"[red]✗[/red] Error: {e}")
            sys.exit(1)

    return wrapper


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--log-level", default=None, help="Logging level (default: RESSHIFT_LOG_LEVEL or INFO)"
)
def cli(log_level):
    """ResShift - Residual-shifting diffusion for image restoration"""
    _setup_logging(log_level or Settings.from_env().log_level)


@cli.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Named schedule")
@click.option("--T", "steps", type=int, help="Number of diffusion steps")
@click.option("--p", type=float, help="Growth exponent of the shifting speed")
@click.option("--kappa", type=float, help="Global noise scale")
@click.option("--signal-power", type=float, default=1.0, show_default=True)
@click.option("--export", "export_path", type=click.Path(dir_okay=False), help="CSV output file")
@click.pass_context
@domain_errors
def schedule(ctx, preset, steps, p, kappa, signal_power, export_path):
    """Print (and optionally export) a shifting schedule"""
    base = PRESETS[preset] if preset else ScheduleParams()
    overrides: Dict[str, Any] = {
        k: v for k, v in {"T": steps, "p": p, "kappa": kappa}.items() if v is not None
    }
    params = ScheduleParams.model_validate({**base.model_dump(), **overrides})
    _banner("schedule", config_digest(params.model_dump(mode="json")), 0)
    rows = schedule_table(build_schedule(params), signal_power)

    table = Table(title=f"Schedule T={params.T} p={params.p} kappa={params.kappa}")
    for column in ("t", "eta", "alpha", "sqrt_eta", "rel_noise"):
        table.add_column(column, style="cyan" if column == "t" else None, justify="right")
    shown = rows if len(rows) <= 20 else rows[:10] + rows[-10:]
    for row in shown:
        table.add_row(
            str(row["t"]), *(f"{row[k]:.6g}" for k in ("eta", "alpha", "sqrt_eta", "rel_noise"))
        )
    console.print(table)

    if export_path:
        write_schedule_csv(export_path, rows)
        console.print(f"[green]✓[/green] Wrote {len(rows)} rows to {export_path}")


def _load_degradation_spec(spec_path: Optional[str], kind: Optional[str], scale: Optional[int]):
    data: Dict[str, Any] = {}
    if spec_path:
        data = yaml.safe_load(Path(spec_path).read_text(encoding="utf-8")) or {}
    if kind:
        data["kind"] = kind
    if scale is not None:
        data["scale"] = scale
    return DegradationSpec.model_validate(data)


@cli.command()
@click.option("--in", "input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--toy", type=click.Choice([k.value for k in ToyKind]), help="Synthesize HQ images")
@click.option("--count", type=int, default=1, show_default=True, help="Number of toy images")
@click.option("--size", type=int, default=32, show_default=True, help="Toy image side")
@click.option("--channels", type=int, default=1, show_default=True, help="Toy image channels")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice([k.value for k in DegradationKind]))
@click.option("--scale", type=int, help="Downsampling factor")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--pairs-out", type=click.Path(dir_okay=False), help="Paired (LQ, HQ) test set")
@click.pass_context
@domain_errors
def degrade(
    ctx, input_path, toy, count, size, channels, spec_path, kind, scale, seed, out_path, pairs_out
):
    """Synthesize LQ observations from HQ images"""
    if bool(input_path) == bool(toy):
        raise click.UsageError("Pass exactly one of --in or --toy")
    spec = _load_degradation_spec(spec_path, kind, scale)
    flags = {k: str(v) for k, v in ctx.params.items()}
    _banner("degrade", config_digest({"spec": spec.model_dump(mode="json"), **flags}), seed)

    if toy:
        images = list(ToyImageDataset(ToyKind(toy), size, channels, count, seed))
        single = False
    else:
        x = load_signal(input_path)
        single = x.ndim == 3
        if x.ndim not in (3, 4):
            raise ShapeError(f"Expected (C, H, W) or (N, C, H, W) input, got {x.shape}")
        images = [x] if single else list(x)

    _check_batch_output(out_path, len(images))
    pairs = make_pairs(images, spec, seed)
    lq = pairs[:, 0]
    is_image = Path(out_path).suffix.lower() in IMAGE_SUFFIXES
    if single or (len(lq) == 1 and is_image):
        save_signal(out_path, lq[0])
    else:
        write_tensor(out_path, lq)
    if pairs_out:
        write_tensor(pairs_out, pairs)
    console.print(
        f"[green]✓[/green] Degraded {len(lq)} image(s) with '{spec.kind.value}' -> {out_path}"
    )


@cli.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--preset", type=click.Choice(["resshift", "resshift-l"]))
@click.option(
    "--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Run directory"
)
@click.option("--seed", type=int, default=None, help="Override the config seed")
@click.option("--iterations", type=int, default=None, help="Override the iteration count")
@domain_errors
def train_cmd(config_path, preset, out_dir, seed, iterations):
    """Train the predictor"""
    if bool(config_path) == bool(preset):
        raise click.UsageError("Pass exactly one of --config or --preset")
    config = load_run_config(config_path) if config_path else preset_config(preset)
    updates: Dict[str, Any] = {}
    if seed is not None:
        updates["seed"] = seed
    if iterations is not None:
        updates["iterations"] = iterations
    if updates:
        config = type(config).model_validate({**config.to_dict(), **updates})
    _banner("train", config_digest(config), config.seed)

    report = train(config, run_dir=out_dir)

    table = Table(title="Training Run")
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Iterations", str(report.batches_consumed))
    table.add_row("Initial loss", f"{report.losses[0]:.6f}")
    table.add_row("Final loss", f"{report.losses[-1]:.6f}")
    table.add_row("Wall clock", f"{report.wall_clock:.1f} s")
    table.add_row("Checkpoint", str(report.checkpoint_path))
    console.print(table)


@cli.command("sample")
@click.option("--ckpt", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--in", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--trace", "trace_dir", type=click.Path(file_okay=False), help="Write every x_t here")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--deterministic", is_flag=True, help="Force all noise to zero")
@click.pass_context
@domain_errors
def sample_cmd(ctx, ckpt, input_path, out_path, trace_dir, seed, deterministic):
    """Restore LQ images with a trained checkpoint"""
    _banner("sample", _flag_digest(ctx), seed)
    checkpoint = load_checkpoint(ckpt)
    s = build_schedule(checkpoint.schedule)
    y = load_signal(input_path)
    single = y.ndim == 3
    batch = [y] if single else list(y)
    _check_batch_output(out_path, len(batch))

    outputs = []
    for i, y_i in enumerate(batch):
        if trace_dir:
            x0, trace = sample(
                checkpoint.params, y_i, s, seed, i, trace=True, deterministic=deterministic
            )
            trace_path = Path(trace_dir)
            trace_path.mkdir(parents=True, exist_ok=True)
            for t, state in trace.states.items():
                write_tensor(trace_path / f"img{i:04d}_x{t:04d}.rsten", state)
        else:
            x0 = sample(checkpoint.params, y_i, s, seed, i, deterministic=deterministic)
        outputs.append(np.clip(x0, 0.0, 1.0))

    if single or Path(out_path).suffix.lower() in IMAGE_SUFFIXES:
        save_signal(out_path, outputs[0])
    else:
        write_tensor(out_path, np.stack(outputs))
    console.print(
        f"[green]✓[/green] Restored {len(outputs)} image(s) in {s.T} steps -> {out_path}"
    )


@cli.command("eval")
@click.option("--ckpt", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--testset", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="JSON metrics report")
@click.pass_context
@domain_errors
def eval_cmd(ctx, ckpt, testset, seed, out_path):
    """Score a checkpoint on a paired (LQ, HQ) test set"""
    _banner("eval", _flag_digest(ctx), seed)
    checkpoint = load_checkpoint(ckpt)
    s = build_schedule(checkpoint.schedule)
    report = evaluate(checkpoint.params, read_tensor(testset), s, seed, workers=resolve_workers())

    table = Table(title=f"Evaluation ({len(report.images)} images)")
    table.add_column("Metric", style="cyan")
    table.add_column("Restored", style="green", justify="right")
    table.add_column("Degraded input", style="yellow", justify="right")
    agg = report.aggregates()
    for metric in ("psnr", "ssim", "mse"):
        restored, degraded = agg[f"mean_{metric}"], agg[f"mean_input_{metric}"]
        table.add_row(metric.upper(), f"{restored:.4f}", f"{degraded:.4f}")
    console.print(table)
    console.print(f"PSNR gain: [bold]{report.psnr_gain:+.2f} dB[/bold]")
    if out_path:
        write_json(out_path, report.to_dict())


@cli.command()
@click.option("--suite", type=click.Choice(SUITES), default="all", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--samples", type=int, default=100_000, show_default=True, help="Monte Carlo draws")
@click.option(
    "--out", "out_path", type=click.Path(dir_okay=False), default="oracle_report.json",
    show_default=True,
)
@click.pass_context
@domain_errors
def verify(ctx, suite, seed, samples, out_path):
    """Run the verification oracles"""
    _banner("verify", _flag_digest(ctx), seed)
    runner = OracleRunner(OracleRegistry(n_samples=samples))
    reports = runner.run_sync(suite, seed)
    write_json(out_path, [r.to_record() for r in reports])

    table = Table(title=f"Oracle suite '{suite}' (seed {seed})")
    table.add_column("Oracle", style="cyan")
    table.add_column("Statistic", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Status")
    for r in reports:
        status = "✅ pass" if r.passed else "❌ FAIL"
        table.add_row(r.name, f"{r.statistic:.3e}", f"{r.tolerance:.3e}", status)
    console.print(table)

    failed = [r for r in reports if not r.passed]
    if failed:
        for r in failed:
            err_console.print(Panel(
                yaml.safe_dump(r.to_record(), sort_keys=True),
                title=f"[bold red]{r.name}[/bold red]",
                border_style="red",
            ))
        sys.exit(1)
    console.print(f"[green]✓[/green] {len(reports)} oracles passed; report -> {out_path}")


if __name__ == "__main__":
    cli()
