"""Command-line front end.

Commands: cross-section, bound, sweep, verify, direct.  Reports are
deterministic: identical config and binary produce byte-identical
report.json (sorted keys, no timestamps or absolute paths in the body);
timing and progress go to stderr logging only.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from .bound import angular_energy_ratio, compute_bound
from .config import RunConfig, load_config
from .direct3d import default_n_s, direct_spectrum, verify_inequality
from .discretize import assemble_h_beta0
from .eigensolve import ground_state, smallest_eigs
from .errors import ConfigError, TwistboundError
from .geometry import Ellipse, Ribbon, build_cross_section
from .profiles import TwistProfile

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2
EXIT_VERIFY_FAIL = 3


def _setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _effective(ctx) -> tuple:
    """Apply flag > environment > config precedence for workers and seed."""
    cfg: RunConfig = ctx.obj["config"]
    workers = cfg.workers
    env_workers = os.environ.get("TWISTBOUND_WORKERS")
    if env_workers is not None:
        workers = int(env_workers)
    if ctx.obj["workers"] is not None:
        workers = ctx.obj["workers"]
    seed = cfg.seed if ctx.obj["seed"] is None else ctx.obj["seed"]
    bound_cfg = dataclasses.replace(cfg.bound, seed=seed, workers=workers)
    return cfg, bound_cfg, Path(ctx.obj["out"]), seed


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x
                        for x in row])


@click.group()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=False), help="Path to the INI config file.")
@click.option("--out", default="out", show_default=True,
              help="Output directory for reports and CSVs.")
@click.option("--workers", type=int, default=None,
              help="Worker pool width (overrides env and config).")
@click.option("--seed", type=int, default=None,
              help="Eigensolver seed (overrides config).")
@click.option("--verbose", is_flag=True, default=False)
@click.pass_context
def main(ctx, config_path, out, workers, seed, verbose):
    """Spectral bounds for perturbed twisted tubes."""
    _setup_logging(verbose)
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)
    if verbose or cfg.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    ctx.obj = {"config": cfg, "out": out, "workers": workers, "seed": seed}


@main.command("cross-section")
@click.pass_context
def cmd_cross_section(ctx):
    """Solve the cross-section problem; write spectrum and field CSVs."""
    cfg, bound_cfg, out_dir, seed = _effective(ctx)
    try:
        h = min(bound_cfg.resolutions)
        cs = build_cross_section(cfg.shape, h)
        h_op = assemble_h_beta0(cs, cfg.profile.beta0)
        e0, f = ground_state(h_op, tol=bound_cfg.tol, seed=seed,
                             block=bound_cfg.block, maxiter=bound_cfg.maxiter,
                             dense_cutoff=bound_cfg.dense_cutoff)
        spec = smallest_eigs(h_op, min(6, cs.n), bound_cfg.tol, seed=seed,
                             block=bound_cfg.block, maxiter=bound_cfg.maxiter,
                             dense_cutoff=bound_cfg.dense_cutoff)
    except TwistboundError as exc:
        click.echo(f"solver error: {exc}", err=True)
        ctx.exit(EXIT_SOLVER)
    _write_csv(out_dir / "spectrum.csv",
               ["index", "h", "eigenvalue", "residual"],
               [(k, cs.h, float(spec.eigenvalues[k]), float(spec.residuals[k]))
                for k in range(spec.m)])
    _write_csv(out_dir / "field_f.csv", ["i", "j", "h", "t2", "t3", "f"],
               [(i, j, cs.h, float(x), float(y), float(v)) for (i, j), x, y, v
                in zip(cs.nodes, cs.t2, cs.t3, f)])
    click.echo(f"E = {e0:.6f}")
    click.echo(f"d = {cs.d:.6f}")
    ctx.exit(EXIT_OK)


def _run_bound(cfg, bound_cfg):
    h = min(bound_cfg.resolutions)
    cs = build_cross_section(cfg.shape, h)
    return compute_bound(cs, cfg.profile, bound_cfg)


@main.command("bound")
@click.pass_context
def cmd_bound(ctx):
    """Compute the spectral bound; write report.json and per_s.csv."""
    cfg, bound_cfg, out_dir, _ = _effective(ctx)
    try:
        report = _run_bound(cfg, bound_cfg)
    except TwistboundError as exc:
        click.echo(f"bound computation failed: {exc}", err=True)
        ctx.exit(EXIT_SOLVER)
    _write_json(out_dir / "report.json", report.to_dict())
    _write_csv(out_dir / "per_s.csv", ["s", "h", "n_neg", "trace_power"],
               [(s, report.h, n, t) for s, n, t in report.per_s])
    click.echo(f"bound = {report.bound:.9e}"
               + ("  [NON-RIGOROUS]" if report.non_rigorous else ""))
    ctx.exit(EXIT_OK)


def _axis_apply(cfg: RunConfig, bound_cfg, axis: str, value: float):
    """Return (shape, profile, bound_cfg) with the axis value applied."""
    shape, profile = cfg.shape, cfg.profile
    if axis == "ellipse-eps":
        if not isinstance(shape, Ellipse):
            raise ConfigError("axis ellipse-eps needs an ellipse shape")
        shape = Ellipse(eps=float(value))
    elif axis == "ribbon-k":
        if not isinstance(shape, Ribbon):
            raise ConfigError("axis ribbon-k needs a ribbon shape")
        shape = Ribbon(k=int(value), eps_r=shape.eps_r)
    elif axis == "resolution":
        bound_cfg = dataclasses.replace(bound_cfg, resolutions=(float(value),))
    elif axis == "amplitude":
        profile = TwistProfile(beta0=profile.beta0, a=float(value),
                               s0=profile.s0)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return shape, profile, bound_cfg


@main.command("sweep")
@click.option("--axis", required=True,
              type=click.Choice(["ellipse-eps", "ribbon-k", "resolution",
                                 "amplitude"]))
@click.option("--values", required=True,
              help="Comma-separated axis values (fractions like 1/32 allowed).")
@click.pass_context
def cmd_sweep(ctx, axis, values):
    """One bound computation per axis value; aggregate into sweep.csv."""
    cfg, bound_cfg, out_dir, seed = _effective(ctx)
    try:
        vals = []
        for tok in values.split(","):
            tok = tok.strip()
            vals.append(float(tok.split("/")[0]) / float(tok.split("/")[1])
                        if "/" in tok else float(tok))
    except ValueError:
        click.echo(f"cannot parse --values {values!r}", err=True)
        ctx.exit(EXIT_CONFIG)

    rows, failures = [], 0
    for v in vals:
        try:
            shape, profile, bc = _axis_apply(cfg, bound_cfg, axis, v)
            run_cfg = dataclasses.replace(cfg, shape=shape, profile=profile)
            report = _run_bound(run_cfg, bc)
            mid = report.per_s[len(report.per_s) // 2]      # s = 0 row
            row = [v, report.h, report.bound, mid[1], report.E, report.d]
            if axis == "ribbon-k":
                h = min(bc.resolutions)
                cs = build_cross_section(shape, h)
                h_op = assemble_h_beta0(cs, profile.beta0)
                _, f = ground_state(h_op, tol=bc.tol, seed=seed,
                                    block=bc.block, maxiter=bc.maxiter,
                                    dense_cutoff=bc.dense_cutoff)
                row.append(angular_energy_ratio(cs, f))
            rows.append(row)
        except (TwistboundError, ConfigError) as exc:
            failures += 1
            log.error("sweep value %s failed: %s", v, exc)
            rows.append([v, "", "error", str(exc), "", ""])
    header = ["value", "h", "bound", "n_neg_s0", "E", "d"]
    if axis == "ribbon-k":
        header.append("angular_ratio")
    _write_csv(out_dir / "sweep.csv", header, rows)

    slope = None
    if axis == "ellipse-eps":
        good = [(v, b) for v, _h, b, *_ in rows
                if isinstance(b, float) and b > 0]
        if len(good) >= 2:
            lv = np.log([g[0] for g in good])
            lb = np.log([g[1] for g in good])
            slope = float(np.polyfit(lv, lb, 1)[0])
            with open(out_dir / "sweep.csv", "a", newline="") as fh:
                fh.write(f"# loglog_slope,{repr(slope)}\n")
            click.echo(f"log-log slope = {slope:.4f}")
    if failures == len(vals):
        click.echo("all sweep values failed", err=True)
        ctx.exit(EXIT_SOLVER)
    ctx.exit(EXIT_OK)


def _run_direct(cfg, bound_cfg, seed):
    d = cfg.direct
    l_trunc = d.L_trunc if d.L_trunc is not None else 3.0 * cfg.profile.s0
    n_s = d.n_s if d.n_s is not None else default_n_s(l_trunc, d.h)
    cs3 = build_cross_section(cfg.shape, d.h)
    return direct_spectrum(cs3, cfg.profile, l_trunc, n_s, d.cap,
                           sigma=bound_cfg.sigma, tol=bound_cfg.tol,
                           seed=seed, block=bound_cfg.block,
                           maxiter=bound_cfg.maxiter)


@main.command("direct")
@click.pass_context
def cmd_direct(ctx):
    """Direct 3D spectrum below threshold; append to report.json."""
    cfg, bound_cfg, out_dir, seed = _effective(ctx)
    try:
        direct = _run_direct(cfg, bound_cfg, seed)
    except TwistboundError as exc:
        click.echo(f"direct solve failed: {exc}", err=True)
        ctx.exit(EXIT_SOLVER)
    report_path = out_dir / "report.json"
    payload = {}
    if report_path.exists():
        with open(report_path) as fh:
            payload = json.load(fh)
    payload["direct"] = direct.to_dict()
    _write_json(report_path, payload)
    _write_csv(out_dir / "spectrum.csv", ["index", "h", "eigenvalue"],
               [(k, direct.h, lam)
                for k, lam in enumerate(direct.eigenvalues_below)])
    click.echo(f"states below threshold: {len(direct.eigenvalues_below)}, "
               f"moment sum = {direct.moment_sum:.9e}")
    ctx.exit(EXIT_OK)


@main.command("verify")
@click.option("--corrupt-bound", type=float, default=None, hidden=True,
              help="Test hook: multiply the bound by this factor first.")
@click.pass_context
def cmd_verify(ctx, corrupt_bound):
    """Bound + direct spectrum + inequality check.  Exit 3 on FAIL."""
    cfg, bound_cfg, out_dir, seed = _effective(ctx)
    if not cfg.direct.enabled:
        click.echo("config error: [direct] enabled must be true for verify",
                   err=True)
        ctx.exit(EXIT_CONFIG)
    try:
        report = _run_bound(cfg, bound_cfg)
        direct = _run_direct(cfg, bound_cfg, seed)
    except TwistboundError as exc:
        click.echo(f"verify failed to compute: {exc}", err=True)
        ctx.exit(EXIT_SOLVER)
    if corrupt_bound is not None:
        report = dataclasses.replace(report, bound=report.bound * corrupt_bound)
    verdict = verify_inequality(direct, report)
    payload = report.to_dict()
    payload["direct"] = direct.to_dict()
    payload["verify"] = verdict.to_dict()
    if corrupt_bound is not None:
        payload["corrupt_bound_factor"] = corrupt_bound
    _write_json(out_dir / "report.json", payload)
    _write_csv(out_dir / "per_s.csv", ["s", "h", "n_neg", "trace_power"],
               [(s, report.h, n, t) for s, n, t in report.per_s])
    click.echo(f"{'PASS' if verdict.passed else 'FAIL'}: moment "
               f"{verdict.moment:.6e} vs bound {verdict.bound:.6e}")
    ctx.exit(EXIT_OK if verdict.passed else EXIT_VERIFY_FAIL)


if __name__ == "__main__":
    main()
