"""Command-line entry point.

Subcommands: synth-map | place | coinfer | pipeline. Every command is
deterministic given config + seed (live LLM mode exempt and labeled as
non-deterministic in the output metadata). Exit codes: 0 success/report,
1 internal error, 2 usage/config error.

Emitted file schemas:
  map CSV      -- `# skyplan-map v1` header, metadata row, then
                  beam_id,ix,iy,rsrp_dbm rows (beam-major, iy, ix order).
  solution.json -- positions, per-UAV rates, sum rate, objective trace.
  sweep.csv    -- one row per (K, method): K,method,sum_rate_bps.
  comparison.csv -- paradigm,split,rho,p_w,f_hz,quality,delay_s,energy_j,feasible.
  rounds.csv   -- round,uav_id,x,y,beam,rate.
"""

from __future__ import annotations

import dataclasses
import json
import math
import sys
from pathlib import Path

import click

from . import __version__
from .coinference import PlanMode, QosBudget, compare_paradigms
from .config import RunConfig, load_config, mode_from_name
from .coverage_map import load_map, save_map, synthesize
from .errors import ConfigError, MapFormatError, SkyplanError
from .pipeline import run_scenario, write_report
from .placement import (
    Method,
    PlacementSolution,
    brute_force_placement,
    llm_placement,
    map_search_placement,
    sca_los_placement,
)

EXIT_INTERNAL = 1
EXIT_USAGE = 2


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option("--threads", type=int, default=None,
              help="Worker thread cap; results are identical for any value.")
@click.version_option(__version__)
@click.pass_context
def main(ctx, threads):
    """Desk-scale planning toolkit: beam coverage maps, UAV placement,
    and co-inference resource planning."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


def _load(config_path) -> RunConfig:
    try:
        return load_config(config_path)
    except ConfigError as exc:
        _fail(str(exc), EXIT_USAGE)


def _load_map_checked(path):
    p = Path(path)
    if not p.exists():
        _fail(f"map file not found: {p}", EXIT_USAGE)
    try:
        return load_map(p)
    except MapFormatError as exc:
        _fail(f"{p}: {exc}", EXIT_USAGE)


@main.command("synth-map")
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="TOML run configuration.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output map CSV path.")
def cmd_synth_map(config_path, out_path):
    """Synthesize a campaign-style coverage map and write it as CSV."""
    cfg = _load(config_path)
    try:
        cmap = synthesize(cfg.synthesis)
        save_map(cmap, out_path)
    except SkyplanError as exc:
        _fail(str(exc), EXIT_INTERNAL)
    except OSError as exc:
        _fail(str(exc), EXIT_USAGE)
    click.echo(f"wrote {out_path}: {cmap.nx} x {cmap.ny} cells, "
               f"{cmap.beam_count} beams, resolution {cmap.resolution} m")
    for b in range(cmap.beam_count):
        plane = cmap.rsrp[b]
        click.echo(f"  beam {b}: RSRP min {plane.min():.2f} dBm, "
                   f"max {plane.max():.2f} dBm")


def _parse_uav_range(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad --uavs range {spec!r}") from None
        if lo_i < 1 or hi_i < lo_i:
            raise ConfigError(f"bad --uavs range {spec!r}")
        return list(range(lo_i, hi_i + 1))
    try:
        k = int(spec)
    except ValueError:
        raise ConfigError(f"bad --uavs value {spec!r}") from None
    if k < 1:
        raise ConfigError("--uavs must be >= 1")
    return [k]


def _solution_dict(sol: PlacementSolution, seed: int, deterministic: bool) -> dict:
    return {
        "method": sol.method_tag.value,
        "positions": sol.positions,
        "serving_beam": sol.serving_beam,
        "per_uav_rate": sol.per_uav_rate,
        "sum_rate": sol.sum_rate,
        "iterations": sol.iterations,
        "objective_trace": sol.objective_trace,
        "max_iter_reached": sol.max_iter_reached,
        "seed": seed,
        "deterministic": deterministic,
    }


@main.command("place")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--map", "map_path", required=True, type=click.Path(),
              help="Coverage map CSV (see synth-map).")
@click.option("--method", "methods", default="search",
              help="Comma-separated subset of sca,search,llm,brute.")
@click.option("--uavs", "uav_spec", default=None,
              help="UAV count K, or a range K_min..K_max for a sweep.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_place(config_path, map_path, methods, uav_spec, out_dir):
    """Compute placements on a map and write solution JSON (+ sweep CSV)."""
    cfg = _load(config_path)
    cmap = _load_map_checked(map_path)
    try:
        method_list = [m.strip() for m in methods.split(",") if m.strip()]
        known = {"sca", "search", "llm", "brute"}
        bad = set(method_list) - known
        if bad or not method_list:
            raise ConfigError(f"unknown method(s): {', '.join(sorted(bad))}")
        if "llm" in method_list and cfg.gateway is None:
            raise ConfigError("method llm requires an [llm] config section")
        ks = _parse_uav_range(uav_spec) if uav_spec else [cfg.placement.uavs]
    except ConfigError as exc:
        _fail(str(exc), EXIT_USAGE)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    is_sweep = uav_spec is not None and ".." in uav_spec
    sweep_rows = []
    first_solution = None
    try:
        for k in ks:
            problem = cfg.placement_problem(uavs=k, cmap=cmap)
            for m in method_list:
                if m == "search":
                    sol = map_search_placement(problem, cmap, cfg.search_config())
                elif m == "sca":
                    sol = sca_los_placement(
                        problem, tol=cfg.placement.sca_tol,
                        max_iter=cfg.placement.sca_max_iter,
                    )
                elif m == "brute":
                    sol = brute_force_placement(
                        problem, cmap, cfg.placement.brute_stride
                    )
                else:
                    sol = llm_placement(problem, cmap, cfg.gateway,
                                        cfg.placement.llm_digest_stride)
                deterministic = not (m == "llm" and not cfg.gateway.is_mock)
                doc = _solution_dict(sol, cfg.seed, deterministic)
                with open(out / f"solution_{m}_k{k}.json", "w") as fh:
                    json.dump(doc, fh, indent=2)
                if first_solution is None:
                    first_solution = doc
                sweep_rows.append((k, m, sol.sum_rate))
                click.echo(f"K={k} method={m}: sum rate {sol.sum_rate:.4e} bit/s")
    except SkyplanError as exc:
        _fail(str(exc), EXIT_INTERNAL)

    if first_solution is not None:
        with open(out / "solution.json", "w") as fh:
            json.dump(first_solution, fh, indent=2)
    if is_sweep:
        with open(out / "sweep.csv", "w") as fh:
            fh.write("K,method,sum_rate_bps\n")
            for k, m, rate in sweep_rows:
                fh.write(f"{k},{m},{rate:.6e}\n")
        click.echo(f"wrote {out / 'sweep.csv'}")


@main.command("coinfer")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--mode", "mode_name",
              type=click.Choice(["quality", "delay", "energy"]),
              required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_coinfer(config_path, mode_name, out_dir):
    """Three-paradigm co-inference comparison for one objective mode.

    Infeasible paradigms are reported as flagged rows, not failures."""
    cfg = _load(config_path)
    mode = mode_from_name(mode_name)
    co = cfg.coinference
    budget = _relax_for_mode(co.budget, mode)
    try:
        report = compare_paradigms(mode, co.profile, co.link, budget, co.rho_max)
    except SkyplanError as exc:
        _fail(str(exc), EXIT_INTERNAL)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for paradigm, plan in report.plans.items():
        if plan is None:
            rows.append({
                "paradigm": paradigm.value, "feasible": False,
                "reason": report.infeasible_reasons.get(paradigm, ""),
            })
            click.echo(f"{paradigm.value}: infeasible "
                       f"({report.infeasible_reasons.get(paradigm, '')})")
            continue
        rows.append({
            "paradigm": paradigm.value, "feasible": True,
            "split": plan.split, "rho": plan.rho, "p_w": plan.p,
            "f_hz": plan.f, "quality": plan.quality, "delay_s": plan.delay,
            "energy_j": plan.energy,
        })
        click.echo(
            f"{paradigm.value}: s={plan.split} rho={plan.rho:.4f} "
            f"p={plan.p:.4f} W f={plan.f:.4e} Hz -> quality {plan.quality:.4f}, "
            f"delay {plan.delay:.4f} s, energy {plan.energy:.4f} J"
        )
    with open(out / "comparison.json", "w") as fh:
        json.dump({"mode": mode.value, "rows": rows}, fh, indent=2)
    with open(out / "comparison.csv", "w") as fh:
        fh.write("paradigm,split,rho,p_w,f_hz,quality,delay_s,energy_j,feasible\n")
        for r in rows:
            if r["feasible"]:
                fh.write(
                    f"{r['paradigm']},{r['split']},{r['rho']:.6f},"
                    f"{r['p_w']:.6e},{r['f_hz']:.6e},{r['quality']:.6f},"
                    f"{r['delay_s']:.6e},{r['energy_j']:.6e},true\n"
                )
            else:
                fh.write(f"{r['paradigm']},,,,,,,,false\n")


def _relax_for_mode(budget: QosBudget, mode: PlanMode) -> QosBudget:
    """Unconstrain the optimized metric so a shared config serves all modes."""
    if mode is PlanMode.MAX_QUALITY:
        return dataclasses.replace(budget, q_min=0.0)
    if mode is PlanMode.MIN_DELAY:
        return dataclasses.replace(budget, t_max=math.inf)
    return dataclasses.replace(budget, e_max=math.inf)


@main.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--map", "map_path", default=None, type=click.Path(),
              help="True-environment map CSV; default: synthesize from config.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_pipeline(config_path, map_path, out_dir):
    """Run the five-stage scenario and write per-round CSV + summary JSON."""
    cfg = _load(config_path)
    cmap = _load_map_checked(map_path) if map_path else None
    try:
        if cmap is None:
            cmap = synthesize(cfg.synthesis)
        scenario = cfg.scenario(cmap)
        # The optimized metric must stay unconstrained inside the planner.
        task = scenario.inference
        task = dataclasses.replace(
            task, budget=_relax_for_mode(task.budget, task.mode)
        )
        scenario = dataclasses.replace(scenario, inference=task)
        report = run_scenario(scenario)
        write_report(report, out_dir)
    except SkyplanError as exc:
        _fail(str(exc), EXIT_INTERNAL)
    click.echo(
        f"pipeline: {report.rounds_used} adaptation round(s), "
        f"sum rate {report.initial_sum_rate:.4e} -> "
        f"{report.final_sum_rate:.4e} bit/s ({report.termination_reason})"
    )
    click.echo(f"wrote {Path(out_dir) / 'summary.json'} and rounds.csv")


if __name__ == "__main__":
    main()
