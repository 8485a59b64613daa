"""Five-stage scenario runner: offline init, sensing, transmission,
execution, and closed-loop adaptation.

The offline stage plans on the idealized predicted channel; every later
stage reads the true coverage map. Adaptation is per-UAV greedy stencil
hill-climbing that accepts only map-sum-rate improvements, so the scored
objective is monotone non-decreasing across rounds.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelModel, dbm_to_mw
from .coinference import (
    ExecutionPlan,
    InfeasibleError,
    InferenceModelProfile,
    LinkProfile,
    PlanMode,
    QosBudget,
    optimize_plan,
)
from .coverage_map import CoverageMap, sample_rsrp, sample_rsrp_all
from .errors import SkyplanError
from .placement import (
    PlacementProblem,
    PlacementSolution,
    evaluate_on_map,
    los_grid_init,
    sca_los_placement,
    _rates_from_pairs,
    _separation_ok,
)


@dataclass(frozen=True)
class AdaptationConfig:
    max_rounds: int = 10
    step: float = 5.0  # stencil spacing, meters
    epsilon: float = 1e-3  # relative improvement threshold
    sensor_noise_sigma: float = 0.0  # dB, optional Gaussian sensing noise
    sensor_noise_seed: int = 0

    def __post_init__(self):
        if self.max_rounds < 0:
            raise SkyplanError("max_rounds must be >= 0")
        if self.epsilon <= 0:
            raise SkyplanError("epsilon must be positive")


@dataclass(frozen=True)
class InferenceTask:
    profile: InferenceModelProfile
    link: LinkProfile
    budget: QosBudget
    mode: PlanMode
    rho_max: float = 0.9


@dataclass(frozen=True)
class ScenarioConfig:
    true_map: CoverageMap
    predicted_channel: ChannelModel
    placement_problem: PlacementProblem
    inference: InferenceTask | None
    adaptation: AdaptationConfig

    def __post_init__(self):
        if self.adaptation.step < self.true_map.resolution:
            raise SkyplanError("adaptation step must be >= map resolution")


@dataclass
class RoundRecord:
    round: int
    positions: list[tuple[float, float]]
    serving_beam: list[int]
    per_uav_rate: list[float]
    map_sum_rate: float
    improvement: float  # relative to the previous round
    plan: ExecutionPlan | None
    plan_error: str | None = None


@dataclass
class ScenarioReport:
    rounds: list[RoundRecord]
    initial_sum_rate: float
    final_sum_rate: float
    rounds_used: int
    termination_reason: str
    offline_solution: PlacementSolution


def _stage(tag: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except SkyplanError as exc:
        raise SkyplanError(f"[stage:{tag}] {exc}") from exc


def _plan_for_positions(
    cfg: ScenarioConfig, scored: PlacementSolution
) -> tuple[ExecutionPlan | None, str | None]:
    """Stages 3-4: realize the serving link of UAV 0 and plan co-inference."""
    if cfg.inference is None:
        return None, None
    task = cfg.inference
    problem = cfg.placement_problem
    beam = scored.serving_beam[0]
    rsrp_dbm = sample_rsrp(cfg.true_map, scored.positions[0], beam)
    gain = dbm_to_mw(rsrp_dbm) / dbm_to_mw(problem.channel.tx_power_per_beam)
    link = dataclasses.replace(task.link, channel_gain=gain)
    try:
        plan = optimize_plan(task.mode, task.profile, link, task.budget,
                             task.rho_max)
        return plan, None
    except InfeasibleError as exc:
        return None, str(exc)


def run_scenario(cfg: ScenarioConfig) -> ScenarioReport:
    """Execute the full offline-to-online loop; deterministic given cfg."""
    problem = cfg.placement_problem
    adapt = cfg.adaptation

    offline = _stage(
        "offline_init", sca_los_placement, problem, los_grid_init(problem)
    )
    positions = list(offline.positions)
    scored = _stage("transmission", evaluate_on_map, positions, problem,
                    cfg.true_map)
    plan, plan_err = _stage("execution", _plan_for_positions, cfg, scored)

    rounds = [RoundRecord(
        round=0, positions=list(positions), serving_beam=scored.serving_beam,
        per_uav_rate=scored.per_uav_rate, map_sum_rate=scored.sum_rate,
        improvement=math.inf, plan=plan, plan_error=plan_err,
    )]
    initial = scored.sum_rate

    noise_rng = np.random.default_rng(adapt.sensor_noise_seed)
    termination = "max_rounds" if adapt.max_rounds > 0 else "adaptation_disabled"
    for rnd in range(1, adapt.max_rounds + 1):
        prev_rate = rounds[-1].map_sum_rate
        positions = _stage(
            "sensing", _adapt_round, cfg, positions, noise_rng
        )
        scored = _stage("transmission", evaluate_on_map, positions, problem,
                        cfg.true_map)
        plan, plan_err = _stage("execution", _plan_for_positions, cfg, scored)
        improvement = (scored.sum_rate - prev_rate) / max(abs(prev_rate), 1e-30)
        rounds.append(RoundRecord(
            round=rnd, positions=list(positions),
            serving_beam=scored.serving_beam, per_uav_rate=scored.per_uav_rate,
            map_sum_rate=scored.sum_rate, improvement=improvement,
            plan=plan, plan_error=plan_err,
        ))
        if improvement < adapt.epsilon:
            termination = f"converged_round_{rnd}"
            break

    return ScenarioReport(
        rounds=rounds,
        initial_sum_rate=initial,
        final_sum_rate=rounds[-1].map_sum_rate,
        rounds_used=len(rounds) - 1,
        termination_reason=termination,
        offline_solution=offline,
    )


def _adapt_round(cfg: ScenarioConfig, positions, noise_rng):
    """Stage 2+5: per-UAV 5-point stencil sensing and accept-if-better moves.

    Sensing noise (when configured) perturbs the comparison only; accepted
    moves are re-scored noise-free by the caller, so monotonicity of the
    recorded map sum rate is preserved by re-checking the true score.
    """
    problem = cfg.placement_problem
    cmap = cfg.true_map
    step = cfg.adaptation.step
    sigma = cfg.adaptation.sensor_noise_sigma
    pts = list(positions)

    def true_score(p):
        return evaluate_on_map(p, problem, cmap).sum_rate

    def sensed_score(p):
        """Sum rate recomputed from per-beam RSRP with Gaussian dB noise."""
        noise_mw = dbm_to_mw(problem.channel.noise_power)
        pairs = []
        for pos in p:
            vals = sample_rsrp_all(cmap, pos)
            vals = vals + noise_rng.normal(0.0, sigma, size=vals.shape)
            mw = 10.0 ** (vals / 10.0)
            serving = int(np.argmax(vals))
            interference = float(mw.sum() - mw[serving])
            pairs.append((serving, float(mw[serving] / (interference + noise_mw))))
        _, total = _rates_from_pairs(pairs, problem.channel.bandwidth)
        return total

    score = sensed_score if sigma > 0 else true_score
    current = true_score(pts)
    for u in range(len(pts)):
        x, y = pts[u]
        stencil = [(x, y), (x + step, y), (x - step, y), (x, y + step),
                   (x, y - step)]
        best_cand = None
        best_sensed = -math.inf
        for cand in stencil:
            if not problem.in_area(cand):
                continue
            ex0, ex1, ey0, ey1 = cmap.extent
            if not (ex0 <= cand[0] <= ex1 and ey0 <= cand[1] <= ey1):
                continue
            trial = pts.copy()
            trial[u] = cand
            if not _separation_ok(trial, problem.min_separation):
                continue
            sensed = score(trial)
            if sensed > best_sensed:
                best_sensed = sensed
                best_cand = cand
        if best_cand is not None and best_cand != (x, y):
            trial = pts.copy()
            trial[u] = best_cand
            true_val = true_score(trial)
            if true_val > current:
                pts[u] = best_cand
                current = true_val
    return pts


def write_report(report: ScenarioReport, out_dir) -> None:
    """Emit summary JSON and per-round CSV (round,uav_id,x,y,beam,rate)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "rounds.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "uav_id", "x", "y", "beam", "rate"])
        for rec in report.rounds:
            for u, (x, y) in enumerate(rec.positions):
                writer.writerow([
                    rec.round, u, f"{x:.4f}", f"{y:.4f}",
                    rec.serving_beam[u], f"{rec.per_uav_rate[u]:.6e}",
                ])
    summary = {
        "initial_sum_rate": report.initial_sum_rate,
        "final_sum_rate": report.final_sum_rate,
        "rounds_used": report.rounds_used,
        "termination_reason": report.termination_reason,
        "rounds": [
            {
                "round": rec.round,
                "positions": rec.positions,
                "serving_beam": rec.serving_beam,
                "map_sum_rate": rec.map_sum_rate,
                "improvement": None if math.isinf(rec.improvement)
                else rec.improvement,
                "plan": None if rec.plan is None else {
                    "paradigm": rec.plan.paradigm.value,
                    "split": rec.plan.split,
                    "rho": rec.plan.rho,
                    "p": rec.plan.p,
                    "f": rec.plan.f,
                    "quality": rec.plan.quality,
                    "delay": rec.plan.delay,
                    "energy": rec.plan.energy,
                },
                "plan_error": rec.plan_error,
            }
            for rec in report.rounds
        ],
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
