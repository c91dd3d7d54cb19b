"""Command-line interface.

Exit codes: 0 success (including zero swings), 1 when at least one swing
has a recorded stage failure, 2 for fatal input/config errors.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from pathlib import Path

import click

from . import synth as synth_mod
from .io import IngestError, read_stream
from .pipeline import (
    ConfigError,
    PipelineConfig,
    find_impact,
    find_swings,
    find_contours,
    locate as run_locate,
    outcome_dict,
    ellipse_dict,
)
from .swing import SwingRange
from .timing import FocalPattern, NoImpactError
from .contours import BallNotFoundError, RacketNotFoundError
from .geometry import default_tip_sign, relative_position
from .plotting import render_impact_map

logger = logging.getLogger("impact_locator")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


def _setup_logging():
    level = os.environ.get("IMPACT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _load_config(config_path, tip_sign, pattern, n_candidates) -> PipelineConfig:
    config = PipelineConfig.from_file(config_path) if config_path else PipelineConfig()
    if tip_sign is not None:
        config = dataclasses.replace(config, tip_sign=tip_sign)
    impact = config.impact
    if pattern is not None:
        impact = dataclasses.replace(impact, pattern=FocalPattern(pattern))
    if n_candidates is not None:
        impact = dataclasses.replace(impact, n_c=n_candidates)
    return dataclasses.replace(config, impact=impact)


def _read(input_path, fmt):
    try:
        return read_stream(input_path, fmt)
    except (IngestError, OSError) as exc:
        raise _fatal(exc)


def _emit(payload, output):
    text = json.dumps(payload, indent=2)
    if output:
        Path(output).write_text(text + "\n")
    else:
        click.echo(text)


def _fatal(exc) -> "click.exceptions.Exit":
    click.echo(f"error: {exc}", err=True)
    return click.exceptions.Exit(EXIT_FATAL)


input_opt = click.option("--input", "input_path", required=True, type=click.Path(exists=True))
config_opt = click.option("--config", "config_path", type=click.Path(exists=True))
output_opt = click.option("--output", type=click.Path())
format_opt = click.option("--format", "fmt", type=click.Choice(["csv", "evts"]))
tip_opt = click.option("--tip-sign", type=click.Choice(["1", "-1"]), callback=lambda c, p, v: int(v) if v else None)
pattern_opt = click.option("--pattern", type=click.Choice([p.value for p in FocalPattern]))
nc_opt = click.option("--n-candidates", type=click.IntRange(min=1))


@click.group()
def main():
    """Locate tennis ball impacts on the racket from event-camera streams."""
    _setup_logging()


@main.command("locate")
@input_opt
@config_opt
@output_opt
@format_opt
@tip_opt
@pattern_opt
@nc_opt
@click.option("--timings", is_flag=True, help="Include wall-clock stage timings (non-deterministic output).")
@click.option("--csv", "csv_path", type=click.Path(), help="Also write a delimited per-swing summary.")
@click.pass_context
def cmd_locate(ctx, input_path, config_path, output, fmt, tip_sign, pattern, n_candidates, timings, csv_path):
    """Run the full pipeline and emit one result per detected swing."""
    try:
        config = _load_config(config_path, tip_sign, pattern, n_candidates)
    except ConfigError as exc:
        raise _fatal(exc)
    _, stream = _read(input_path, fmt)
    outcomes = run_locate(stream, config)
    payload = {"swings": [outcome_dict(o, include_timings=timings) for o in outcomes]}
    _emit(payload, output)
    if csv_path:
        _write_csv_summary(outcomes, csv_path)
    ctx.exit(EXIT_PARTIAL if any(not o.ok for o in outcomes) else EXIT_OK)


def _write_csv_summary(outcomes, csv_path):
    lines = ["t_start,t_end,t_imp,u_pct,v_pct,error"]
    for o in outcomes:
        err = ";".join(f"{e.stage}: {e.message}" for e in o.errors)
        u = "" if o.u_pct is None else f"{o.u_pct:.6g}"
        v = "" if o.v_pct is None else f"{o.v_pct:.6g}"
        t_imp = "" if o.t_imp is None else o.t_imp
        lines.append(f"{o.swing.t_start},{o.swing.t_end},{t_imp},{u},{v},{err}")
    Path(csv_path).write_text("\n".join(lines) + "\n")


@main.command("swing")
@input_opt
@config_opt
@output_opt
@format_opt
@click.pass_context
def cmd_swing(ctx, input_path, config_path, output, fmt):
    """Detect swing time ranges only."""
    try:
        config = _load_config(config_path, None, None, None)
    except ConfigError as exc:
        raise _fatal(exc)
    _, stream = _read(input_path, fmt)
    swings = find_swings(stream, config.swing)
    _emit(
        {"swings": [
            {"t_start": s.t_start, "t_end": s.t_end, "truncated": s.truncated} for s in swings
        ]},
        output,
    )
    ctx.exit(EXIT_OK)


@main.command("impact")
@input_opt
@config_opt
@output_opt
@format_opt
@pattern_opt
@nc_opt
@click.option("--t-start", type=int, help="Swing range start; with --t-end, skips swing detection.")
@click.option("--t-end", type=int)
@click.pass_context
def cmd_impact(ctx, input_path, config_path, output, fmt, pattern, n_candidates, t_start, t_end):
    """Detect the impact timestamp within each swing range."""
    try:
        config = _load_config(config_path, None, pattern, n_candidates)
    except ConfigError as exc:
        raise _fatal(exc)
    _, stream = _read(input_path, fmt)
    if (t_start is None) != (t_end is None):
        raise _fatal("--t-start and --t-end must be given together")
    if t_start is not None:
        swings = [SwingRange(t_start, t_end)]
    else:
        swings = find_swings(stream, config.swing)
    results = []
    failed = False
    for swing in swings:
        entry = {"t_start": swing.t_start, "t_end": swing.t_end}
        try:
            entry["t_imp"] = find_impact(stream, swing, config.impact)
        except NoImpactError as exc:
            entry["error"] = str(exc)
            failed = True
        results.append(entry)
    _emit({"impacts": results}, output)
    ctx.exit(EXIT_PARTIAL if failed else EXIT_OK)


@main.command("contours")
@input_opt
@config_opt
@output_opt
@format_opt
@tip_opt
@click.option("--t-imp", type=int, required=True)
@click.pass_context
def cmd_contours(ctx, input_path, config_path, output, fmt, tip_sign, t_imp):
    """Extract ball/racket ellipses and the uv position at a given t_imp."""
    try:
        config = _load_config(config_path, tip_sign, None, None)
    except ConfigError as exc:
        raise _fatal(exc)
    _, stream = _read(input_path, fmt)
    try:
        racket, ball = find_contours(stream, t_imp, config.contours)
    except (RacketNotFoundError, BallNotFoundError) as exc:
        _emit({"t_imp": t_imp, "error": str(exc)}, output)
        ctx.exit(EXIT_PARTIAL)
        return
    tip = config.tip_sign if config.tip_sign != 0 else default_tip_sign(racket)
    rel = relative_position((ball.cx, ball.cy), racket, tip)
    _emit(
        {
            "t_imp": t_imp,
            "racket": ellipse_dict(racket),
            "ball": ellipse_dict(ball),
            "u_pct": round(rel.u_pct, 6),
            "v_pct": round(rel.v_pct, 6),
            "tip_sign": tip,
        },
        output,
    )
    ctx.exit(EXIT_OK)


@main.command("synth")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--stem", default="scene")
@click.pass_context
def cmd_synth(ctx, spec_path, out_dir, stem):
    """Generate a synthetic scene (EVTS + CSV + ground-truth JSON)."""
    try:
        scenes = synth_mod.load_scenes(spec_path)
        stream, truth = synth_mod.generate_rally(scenes)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise _fatal(f"invalid scene spec: {exc}")
    paths = synth_mod.write_scene(out_dir, stream, truth, stem=stem)
    click.echo(json.dumps({"events": len(stream), **paths}, indent=2))
    ctx.exit(EXIT_OK)


@main.command("plot")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path())
@click.pass_context
def cmd_plot(ctx, results_path, output):
    """Render the impact map (SVG/PNG by extension) from locate output."""
    try:
        data = json.loads(Path(results_path).read_text())
        results = data["swings"] if isinstance(data, dict) else data
        if not isinstance(results, list):
            raise ValueError("expected a list of results or {'swings': [...]}")
    except (ValueError, KeyError) as exc:
        raise _fatal(f"malformed results file: {exc}")
    render_impact_map(results, output)
    ctx.exit(EXIT_OK)


if __name__ == "__main__":
    main()
