"""Multi-UAV placement by sum-rate maximization.

Four routes to a placement, all scored by the same map-backed evaluator:
an idealized LoS-model ascent benchmark (SCA-style), empirical map-driven
local search, an LLM-gateway-backed variant, and a brute-force oracle.
UAVs are aerial users served by the BS beams; UAVs sharing a serving beam
split the bandwidth equally.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    BeamPattern,
    ChannelModel,
    Position3D,
    dbm_to_mw,
    los_rsrp,
)
from .coverage_map import CoverageMap, los_field, sinr_at
from .errors import (
    ConstraintViolationError,
    DomainError,
    EvaluationError,
    SizeError,
)
from .llm_gateway import GatewayConfig, GatewayError, build_prompt, request_placement


class Method(str, enum.Enum):
    SCA_LOS = "SCA_LOS"
    MAP_SEARCH = "MAP_SEARCH"
    LLM = "LLM"
    BRUTE_FORCE = "BRUTE_FORCE"


@dataclass(frozen=True)
class PlacementProblem:
    uav_count: int
    area: tuple[float, float, float, float]  # (x_min, x_max, y_min, y_max)
    altitude: float
    channel: ChannelModel
    beams: list[BeamPattern]
    bs_position: Position3D
    min_separation: float = 10.0

    def __post_init__(self):
        if self.uav_count < 1:
            raise DomainError("uav_count must be >= 1")
        x0, x1, y0, y1 = self.area
        if x1 <= x0 or y1 <= y0:
            raise DomainError("area is degenerate")
        if self.min_separation < 0:
            raise DomainError("min_separation must be >= 0")
        if not self.beams:
            raise DomainError("at least one beam is required")

    def in_area(self, pos: tuple[float, float]) -> bool:
        x0, x1, y0, y1 = self.area
        eps = 1e-9
        return x0 - eps <= pos[0] <= x1 + eps and y0 - eps <= pos[1] <= y1 + eps


@dataclass
class PlacementSolution:
    positions: list[tuple[float, float]]
    serving_beam: list[int]
    per_uav_rate: list[float]
    sum_rate: float
    method_tag: Method
    iterations: int = 0
    objective_trace: list[float] = field(default_factory=list)
    max_iter_reached: bool = False


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 8
    seed: int = 0
    stride: float = 16.0  # initial pattern-search step, meters


def _check_separation(positions, min_sep: float) -> None:
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            if math.dist(positions[i], positions[j]) < min_sep - 1e-9:
                raise ConstraintViolationError(
                    f"UAVs {i} and {j} closer than min_separation {min_sep} m"
                )


def _separation_ok(positions, min_sep: float) -> bool:
    return all(
        math.dist(positions[i], positions[j]) >= min_sep - 1e-9
        for i in range(len(positions))
        for j in range(i + 1, len(positions))
    )


def _rates_from_pairs(
    pairs: list[tuple[int, float]], bandwidth: float
) -> tuple[list[float], float]:
    """Per-UAV Shannon rates with equal bandwidth split per serving beam."""
    counts: dict[int, int] = {}
    for beam, _ in pairs:
        counts[beam] = counts.get(beam, 0) + 1
    rates = [
        (bandwidth / counts[beam]) * math.log2(1.0 + sinr) for beam, sinr in pairs
    ]
    return rates, sum(rates)


def evaluate_on_map(
    positions: list[tuple[float, float]],
    problem: PlacementProblem,
    cmap: CoverageMap,
    method_tag: Method = Method.MAP_SEARCH,
) -> PlacementSolution:
    """Ground-truth scoring of a placement on the empirical map.

    This is the single scoring oracle every placement method reports through.
    """
    if len(positions) != problem.uav_count:
        raise DomainError(
            f"expected {problem.uav_count} positions, got {len(positions)}"
        )
    for pos in positions:
        if not problem.in_area(pos):
            raise ConstraintViolationError(f"position {pos} outside area")
    _check_separation(positions, problem.min_separation)
    pairs = [sinr_at(cmap, pos, problem.channel.noise_power) for pos in positions]
    rates, total = _rates_from_pairs(pairs, problem.channel.bandwidth)
    return PlacementSolution(
        positions=list(positions),
        serving_beam=[b for b, _ in pairs],
        per_uav_rate=rates,
        sum_rate=total,
        method_tag=method_tag,
    )


# ---------------------------------------------------------------------------
# LoS model evaluation (the idealized benchmark's internal objective)


def _los_pairs(positions, problem: PlacementProblem) -> list[tuple[int, float]]:
    noise = dbm_to_mw(problem.channel.noise_power)
    out = []
    for (x, y) in positions:
        p = Position3D(x, y, problem.altitude)
        mw = [
            dbm_to_mw(los_rsrp(problem.channel, pat, problem.bs_position, p))
            for pat in problem.beams
        ]
        serving = max(range(len(mw)), key=lambda b: (mw[b], -b))
        interference = sum(mw) - mw[serving]
        out.append((serving, mw[serving] / (interference + noise)))
    return out


def los_objective(positions, problem: PlacementProblem) -> float:
    """LoS-model sum rate (bits/s) with argmax association and equal split."""
    _, total = _rates_from_pairs(_los_pairs(positions, problem),
                                 problem.channel.bandwidth)
    return total


def evaluate_on_los(
    positions, problem: PlacementProblem, method_tag: Method = Method.SCA_LOS
) -> PlacementSolution:
    pairs = _los_pairs(positions, problem)
    rates, total = _rates_from_pairs(pairs, problem.channel.bandwidth)
    return PlacementSolution(
        positions=list(positions),
        serving_beam=[b for b, _ in pairs],
        per_uav_rate=rates,
        sum_rate=total,
        method_tag=method_tag,
    )


# ---------------------------------------------------------------------------
# Grid metrics shared by search and brute force


@dataclass(frozen=True)
class _GridMetrics:
    """Per-node serving beam and log2(1+sinr) for candidate lattice nodes."""

    xs: np.ndarray  # candidate x coordinates [n]
    ys: np.ndarray  # candidate y coordinates [n]
    beam: np.ndarray  # serving beam per node [n]
    log_term: np.ndarray  # log2(1 + sinr) per node [n]


def _grid_metrics(
    problem: PlacementProblem, cmap: CoverageMap, step_cells: int
) -> _GridMetrics:
    x0, x1, y0, y1 = problem.area
    ex0, ex1, ey0, ey1 = cmap.extent
    if x0 < ex0 - 1e-9 or x1 > ex1 + 1e-9 or y0 < ey0 - 1e-9 or y1 > ey1 + 1e-9:
        raise DomainError("problem area extends outside the map extent")
    ix = np.arange(0, cmap.nx, step_cells)
    iy = np.arange(0, cmap.ny, step_cells)
    gx = cmap.origin[0] + ix * cmap.resolution
    gy = cmap.origin[1] + iy * cmap.resolution
    keep_x = (gx >= x0 - 1e-9) & (gx <= x1 + 1e-9)
    keep_y = (gy >= y0 - 1e-9) & (gy <= y1 + 1e-9)
    ix, gx = ix[keep_x], gx[keep_x]
    iy, gy = iy[keep_y], gy[keep_y]
    sub = cmap.rsrp[:, iy[:, None], ix[None, :]]  # [beams, ny', nx']
    mw = 10.0 ** (sub / 10.0)
    beam = np.argmax(sub, axis=0)
    serving_mw = np.take_along_axis(mw, beam[None], axis=0)[0]
    noise = dbm_to_mw(problem.channel.noise_power)
    sinr = serving_mw / (mw.sum(axis=0) - serving_mw + noise)
    gxx, gyy = np.meshgrid(gx, gy)
    nodata = np.isnan(sub).any(axis=0)
    ok = ~nodata
    return _GridMetrics(
        xs=gxx[ok].ravel(),
        ys=gyy[ok].ravel(),
        beam=beam[ok].ravel(),
        log_term=np.log2(1.0 + sinr[ok]).ravel(),
    )


def _score_indices(idx, gm: _GridMetrics, bandwidth: float) -> float:
    pairs = [(int(gm.beam[i]), 0.0) for i in idx]
    counts: dict[int, int] = {}
    for b, _ in pairs:
        counts[b] = counts.get(b, 0) + 1
    return sum(
        (bandwidth / counts[int(gm.beam[i])]) * gm.log_term[i] for i in idx
    )


def brute_force_placement(
    problem: PlacementProblem, cmap: CoverageMap, grid_stride: float
) -> PlacementSolution:
    """Exhaustive scan of the stride-subsampled node lattice.

    Exact optimum over that discrete set; lexicographic position tie-break.
    Intended for K <= 2; refuses enumerations above 1e8 combinations.
    """
    if grid_stride < cmap.resolution:
        raise DomainError("grid_stride must be >= map resolution")
    step = max(1, round(grid_stride / cmap.resolution))
    gm = _grid_metrics(problem, cmap, step)
    n = gm.xs.size
    if n == 0:
        raise DomainError("no candidate nodes inside the area")
    k = problem.uav_count
    if math.comb(n, k) > 1e8:
        raise SizeError(f"{math.comb(n, k)} combinations exceed the 1e8 limit")
    w = problem.channel.bandwidth

    if k == 1:
        scores = w * gm.log_term
        best = np.lexsort((gm.ys, gm.xs, -scores))[0]
        positions = [(float(gm.xs[best]), float(gm.ys[best]))]
    elif k == 2:
        best_score = -math.inf
        best_pair = None
        min_sep = problem.min_separation
        for i in range(n - 1):
            dx = gm.xs[i + 1:] - gm.xs[i]
            dy = gm.ys[i + 1:] - gm.ys[i]
            feasible = np.hypot(dx, dy) >= min_sep - 1e-9
            if not feasible.any():
                continue
            same = gm.beam[i + 1:] == gm.beam[i]
            pair_score = np.where(
                same,
                0.5 * w * (gm.log_term[i] + gm.log_term[i + 1:]),
                w * (gm.log_term[i] + gm.log_term[i + 1:]),
            )
            pair_score = np.where(feasible, pair_score, -np.inf)
            j_rel = int(np.argmax(pair_score))
            s = float(pair_score[j_rel])
            j = i + 1 + j_rel
            if s > best_score + 1e-12 or (
                abs(s - best_score) <= 1e-12
                and best_pair is not None
                and _pos_key(gm, (i, j)) < _pos_key(gm, best_pair)
            ):
                best_score, best_pair = s, (i, j)
        if best_pair is None:
            raise ConstraintViolationError("no feasible pair under min_separation")
        positions = [
            (float(gm.xs[i]), float(gm.ys[i])) for i in best_pair
        ]
    else:
        best_score = -math.inf
        best_combo = None
        for combo in itertools.combinations(range(n), k):
            pts = [(float(gm.xs[i]), float(gm.ys[i])) for i in combo]
            if not _separation_ok(pts, problem.min_separation):
                continue
            s = _score_indices(combo, gm, w)
            if s > best_score + 1e-12 or (
                abs(s - best_score) <= 1e-12
                and best_combo is not None
                and _pos_key(gm, combo) < _pos_key(gm, best_combo)
            ):
                best_score, best_combo = s, combo
        if best_combo is None:
            raise ConstraintViolationError(
                "no feasible placement under min_separation"
            )
        positions = [(float(gm.xs[i]), float(gm.ys[i])) for i in best_combo]

    sol = evaluate_on_map(positions, problem, cmap, Method.BRUTE_FORCE)
    sol.objective_trace = [sol.sum_rate]
    return sol


def _pos_key(gm: _GridMetrics, combo) -> tuple:
    return tuple(sorted((float(gm.xs[i]), float(gm.ys[i])) for i in combo))


# ---------------------------------------------------------------------------
# Map-driven multi-start pattern search


def _snap_stride(stride: float, resolution: float) -> float:
    """Round up to resolution * 2^m so halving lands exactly on the lattice."""
    if stride <= resolution:
        return resolution
    m = math.ceil(math.log2(stride / resolution))
    return resolution * (2 ** m)


def map_search_placement(
    problem: PlacementProblem,
    cmap: CoverageMap,
    search_cfg: SearchConfig | None = None,
) -> PlacementSolution:
    """Multi-start coordinate pattern search on the empirical map.

    Seeds combine top-rate cells (with and without beam diversity) and seeded
    random feasible placements; each seed is refined by per-UAV moves of
    +-stride with stride halving down to the map resolution. Deterministic
    given search_cfg.seed.
    """
    cfg = search_cfg or SearchConfig()
    gm = _grid_metrics(problem, cmap, 1)
    n = gm.xs.size
    if n == 0:
        raise DomainError("no candidate nodes inside the area")
    k = problem.uav_count
    w = problem.channel.bandwidth
    order = np.lexsort((gm.ys, gm.xs, -gm.log_term))

    if k == 1:
        best = order[0]
        sol = evaluate_on_map(
            [(float(gm.xs[best]), float(gm.ys[best]))], problem, cmap,
            Method.MAP_SEARCH,
        )
        sol.objective_trace = [sol.sum_rate]
        return sol

    node_index: dict[tuple[float, float], int] = {
        (float(gm.xs[i]), float(gm.ys[i])): i for i in range(n)
    }

    def node_score(pts) -> float:
        idx = [node_index.get(p) for p in pts]
        if any(i is None for i in idx):
            return -math.inf
        return _score_indices(idx, gm, w)

    seeds = _search_seeds(problem, gm, order, cfg, k)
    stride0 = _snap_stride(cfg.stride, cmap.resolution)

    best_pts = None
    best_score = -math.inf
    for seed_pts in seeds:
        pts, score = _pattern_search(
            seed_pts, node_score, problem, stride0, cmap.resolution
        )
        if score > best_score or (
            score == best_score and best_pts is not None
            and sorted(pts) < sorted(best_pts)
        ):
            best_pts, best_score = pts, score
    if best_pts is None:
        raise ConstraintViolationError("no feasible seed placement found")
    sol = evaluate_on_map(best_pts, problem, cmap, Method.MAP_SEARCH)
    sol.objective_trace = [sol.sum_rate]
    return sol


def _search_seeds(problem, gm: _GridMetrics, order, cfg: SearchConfig, k: int):
    min_sep = problem.min_separation
    seeds: list[list[tuple[float, float]]] = []

    def greedy(diverse_beams: bool):
        pts: list[tuple[float, float]] = []
        beams_used: set[int] = set()
        for i in order:
            p = (float(gm.xs[i]), float(gm.ys[i]))
            if diverse_beams and int(gm.beam[i]) in beams_used and \
                    len(beams_used) < len(problem.beams):
                continue
            if all(math.dist(p, q) >= min_sep - 1e-9 for q in pts):
                pts.append(p)
                beams_used.add(int(gm.beam[i]))
            if len(pts) == k:
                return pts
        return None

    for diverse in (False, True):
        s = greedy(diverse)
        if s is not None and s not in seeds:
            seeds.append(s)

    rng = np.random.default_rng(cfg.seed)
    attempts = 0
    while len(seeds) < cfg.restarts and attempts < cfg.restarts * 50:
        attempts += 1
        idx = rng.integers(0, gm.xs.size, size=k)
        pts = [(float(gm.xs[i]), float(gm.ys[i])) for i in idx]
        if _separation_ok(pts, min_sep) and pts not in seeds:
            seeds.append(pts)
    return seeds


def _pattern_search(pts, node_score, problem, stride0: float, resolution: float):
    pts = list(pts)
    score = node_score(pts)
    stride = stride0
    while stride >= resolution - 1e-12:
        improved = True
        while improved:
            improved = False
            for u in range(len(pts)):
                x, y = pts[u]
                best_move = None
                best_gain = 0.0
                for dx, dy in ((stride, 0), (-stride, 0), (0, stride), (0, -stride)):
                    cand = (x + dx, y + dy)
                    if not problem.in_area(cand):
                        continue
                    trial = pts.copy()
                    trial[u] = cand
                    if not _separation_ok(trial, problem.min_separation):
                        continue
                    s = node_score(trial)
                    if s - score > best_gain + 1e-12:
                        best_gain = s - score
                        best_move = cand
                if best_move is not None:
                    pts[u] = best_move
                    score += best_gain
                    improved = True
        stride /= 2.0
    return pts, score


# ---------------------------------------------------------------------------
# Idealized LoS-model benchmark (SCA-style monotone ascent)


def los_grid_init(
    problem: PlacementProblem, stride: float = 20.0
) -> list[tuple[float, float]]:
    """Model-based coarse-grid initializer for the LoS benchmark.

    Greedy top-rate picks (with and without beam diversity) on a coarse
    lattice of the LoS objective; no map access.
    """
    x0, x1, y0, y1 = problem.area
    xs = np.arange(x0, x1 + 1e-9, stride)
    ys = np.arange(y0, y1 + 1e-9, stride)
    fld = los_field(problem.channel, problem.beams, problem.bs_position,
                    xs, ys, problem.altitude)
    mw = 10.0 ** (fld / 10.0)
    beam = np.argmax(fld, axis=0)
    serving = np.take_along_axis(mw, beam[None], axis=0)[0]
    noise = dbm_to_mw(problem.channel.noise_power)
    log_term = np.log2(1.0 + serving / (mw.sum(axis=0) - serving + noise))
    gxx, gyy = np.meshgrid(xs, ys)
    gm = _GridMetrics(
        xs=gxx.ravel(), ys=gyy.ravel(),
        beam=beam.ravel(), log_term=log_term.ravel(),
    )
    order = np.lexsort((gm.ys, gm.xs, -gm.log_term))
    cfg = SearchConfig(restarts=2, seed=0, stride=stride)
    candidates = _search_seeds(problem, gm, order, cfg, problem.uav_count)
    if not candidates:
        raise ConstraintViolationError("no feasible initial placement found")
    return max(candidates, key=lambda pts: los_objective(pts, problem))


def sca_los_placement(
    problem: PlacementProblem,
    init_positions: list[tuple[float, float]] | None = None,
    tol: float = 1e-4,
    max_iter: int = 200,
) -> PlacementSolution:
    """Iterative concave-surrogate ascent of the LoS-model sum rate.

    Each outer iteration alternates beam association / bandwidth-share update
    with per-UAV projected gradient steps; the surrogate gradient equals the
    model gradient at the current iterate, and a backtracking line search
    accepts only model-objective improvements, so the trace is non-decreasing
    by construction. The returned rates are LoS-model values; use
    evaluate_on_map for ground truth.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if init_positions is None:
        init_positions = los_grid_init(problem)
    if len(init_positions) != problem.uav_count:
        raise DomainError("init_positions arity mismatch")
    for pos in init_positions:
        if not problem.in_area(pos):
            raise ConstraintViolationError(f"infeasible init position {pos}")
    _check_separation(init_positions, problem.min_separation)

    x0, x1, y0, y1 = problem.area
    pts = [tuple(p) for p in init_positions]
    obj = los_objective(pts, problem)
    trace = [obj]
    h = 0.1  # finite-difference step, meters
    step0 = 50.0
    max_iter_reached = False

    it = 0
    for it in range(1, max_iter + 1):
        for u in range(len(pts)):
            x, y = pts[u]

            def f(px, py):
                trial = pts.copy()
                trial[u] = (px, py)
                return los_objective(trial, problem)

            gx = (f(x + h, y) - f(x - h, y)) / (2 * h)
            gy = (f(x, y + h) - f(x, y - h)) / (2 * h)
            norm = math.hypot(gx, gy)
            if norm == 0.0:
                continue
            dx, dy = gx / norm, gy / norm
            step = step0
            for _ in range(12):
                cand = (
                    min(max(x + step * dx, x0), x1),
                    min(max(y + step * dy, y0), y1),
                )
                trial = pts.copy()
                trial[u] = cand
                if _separation_ok(trial, problem.min_separation):
                    cand_obj = los_objective(trial, problem)
                    if cand_obj > obj:
                        pts[u] = cand
                        obj = cand_obj
                        break
                step /= 2.0
        trace.append(obj)
        prev = trace[-2]
        if (obj - prev) <= tol * max(abs(prev), 1e-30):
            break
    else:
        max_iter_reached = True

    sol = evaluate_on_los(pts, problem, Method.SCA_LOS)
    sol.iterations = it
    sol.objective_trace = trace
    sol.max_iter_reached = max_iter_reached
    return sol


# ---------------------------------------------------------------------------
# LLM-gateway-backed placement


def llm_placement(
    problem: PlacementProblem,
    cmap: CoverageMap,
    gateway: GatewayConfig,
    stride: float = 10.0,
) -> PlacementSolution:
    """Prompt the gateway for coordinates; validate and score on the map.

    Retries infeasible or malformed coordinate sets up to 3 times before
    raising; the returned solution is always re-scored by evaluate_on_map.
    """
    prompt = build_prompt(problem, cmap, stride)
    last_error = "no attempt made"
    for _ in range(3):
        coords = request_placement(prompt, gateway)
        try:
            sol = evaluate_on_map(coords, problem, cmap, Method.LLM)
        except (ConstraintViolationError, DomainError, EvaluationError) as exc:
            last_error = str(exc)
            continue
        sol.objective_trace = [sol.sum_rate]
        return sol
    raise GatewayError(f"llm_infeasible: {last_error}")
