"""Resource-aware co-inference planner.

Quality/delay/energy models over (paradigm, split point, pruning ratio,
transmit power, compute frequency), a constrained optimizer for the three
objective modes, and a brute-force grid oracle. Pruning applies to the
on-device (IAA) sub-model only; energy accounts for the IAA side only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import dbm_to_mw
from .errors import ConfigError, DomainError, SizeError


class Paradigm(str, enum.Enum):
    ON_CLOUD = "ON_CLOUD"
    ON_IAA = "ON_IAA"
    CO_INFERENCE = "CO_INFERENCE"


class PlanMode(str, enum.Enum):
    MAX_QUALITY = "MAX_QUALITY"
    MIN_DELAY = "MIN_DELAY"
    MIN_ENERGY = "MIN_ENERGY"


@dataclass(frozen=True)
class InferenceModelProfile:
    """Layered cost profile of the model to be split and pruned.

    activation_bits_per_boundary[s] is the payload if the model is split
    after layer s; index 0 is the raw input upload, index L the result size.
    quality_table, when present, overrides the parametric quality curve.
    """

    flops_per_layer: list[float]
    activation_bits_per_boundary: list[float]
    q_max: float = 0.40
    gamma: float = 1.5
    quality_table: list[tuple[float, float]] | None = None

    def __post_init__(self):
        if not self.flops_per_layer:
            raise DomainError("at least one layer is required")
        if any(c <= 0 for c in self.flops_per_layer):
            raise DomainError("flops_per_layer must be positive")
        if len(self.activation_bits_per_boundary) != self.layer_count + 1:
            raise DomainError(
                "activation_bits_per_boundary must have layer_count+1 entries"
            )
        if any(b < 0 for b in self.activation_bits_per_boundary):
            raise DomainError("activation sizes must be >= 0")
        if not 0 <= self.q_max <= 1:
            raise DomainError("q_max must lie in [0, 1]")
        if self.gamma <= 0:
            raise DomainError("gamma must be positive")
        if self.quality_table is not None:
            tab = self.quality_table
            if not tab or tab[0][0] != 0.0:
                raise DomainError("quality_table must start at rho = 0")
            if abs(tab[0][1] - self.q_max) > 1e-12:
                raise DomainError("quality_table(0) must equal q_max")
            rhos = [r for r, _ in tab]
            quals = [q for _, q in tab]
            if any(b <= a for a, b in zip(rhos, rhos[1:])):
                raise DomainError("quality_table rho values must increase")
            if any(b > a + 1e-12 for a, b in zip(quals, quals[1:])):
                raise DomainError("quality_table must be non-increasing")

    @property
    def layer_count(self) -> int:
        return len(self.flops_per_layer)


@dataclass(frozen=True)
class LinkProfile:
    """IAA-to-cloud link plus both compute platforms."""

    bandwidth: float  # Hz
    channel_gain: float  # linear power gain
    noise_psd: float  # dBm/Hz
    p_min: float  # W
    p_max: float  # W
    f_min: float  # Hz
    f_max: float  # Hz
    f_cloud: float  # Hz
    cycles_per_flop: float = 1.0
    cloud_cycles_per_flop: float = 1.0
    kappa: float = 1e-27  # J / (cycle * Hz^2), switched-capacitance model

    def __post_init__(self):
        if not 0 < self.p_min <= self.p_max:
            raise DomainError("need 0 < p_min <= p_max")
        if not 0 < self.f_min <= self.f_max:
            raise DomainError("need 0 < f_min <= f_max")
        if self.kappa <= 0:
            raise DomainError("kappa must be positive")
        if self.channel_gain < 0:
            raise DomainError("channel_gain must be >= 0")
        if self.bandwidth <= 0 or self.f_cloud <= 0:
            raise DomainError("bandwidth and f_cloud must be positive")

    @property
    def noise_watts(self) -> float:
        """Total noise power over the link bandwidth, in watts."""
        return dbm_to_mw(self.noise_psd) * 1e-3 * self.bandwidth

    def rate(self, p: float) -> float:
        """Uplink Shannon rate in bits/s at transmit power p watts."""
        return self.bandwidth * math.log2(1.0 + p * self.channel_gain / self.noise_watts)

    def power_for_rate(self, r: float) -> float:
        """Inverse of rate(); may exceed p_max (caller clamps/checks)."""
        if r <= 0:
            return 0.0
        if self.channel_gain == 0:
            return math.inf
        exponent = r / self.bandwidth
        if exponent > 500:
            return math.inf
        return self.noise_watts / self.channel_gain * (2.0**exponent - 1.0)


@dataclass(frozen=True)
class QosBudget:
    t_max: float = math.inf  # s
    e_max: float = math.inf  # J
    q_min: float = 0.0

    def __post_init__(self):
        if self.t_max <= 0 or self.e_max <= 0:
            raise DomainError("budgets must be positive")
        if not 0 <= self.q_min <= 1:
            raise DomainError("q_min must lie in [0, 1]")


@dataclass
class ExecutionPlan:
    paradigm: Paradigm
    split: int
    rho: float
    p: float  # W
    f: float  # Hz
    quality: float
    delay: float  # s
    energy: float  # J

    def objective(self, mode: PlanMode) -> float:
        if mode is PlanMode.MAX_QUALITY:
            return self.quality
        if mode is PlanMode.MIN_DELAY:
            return self.delay
        return self.energy


@dataclass
class InfeasibilityReport:
    """Per-paradigm reason nothing satisfied the budget."""

    reasons: dict[Paradigm, str]


class InfeasibleError(ConfigError):
    def __init__(self, report: InfeasibilityReport):
        self.report = report
        lines = ", ".join(f"{p.value}: {r}" for p, r in report.reasons.items())
        super().__init__(f"no feasible plan ({lines})")


# ---------------------------------------------------------------------------
# Model operations


def quality_of(profile: InferenceModelProfile, rho: float) -> float:
    """Inference quality after pruning a fraction rho of on-IAA weights."""
    if not 0.0 <= rho < 1.0:
        raise DomainError("rho must lie in [0, 1)")
    if profile.quality_table is None:
        return profile.q_max * (1.0 - rho) ** profile.gamma
    tab = profile.quality_table
    if rho <= tab[0][0]:
        return tab[0][1]
    for (r0, q0), (r1, q1) in zip(tab, tab[1:]):
        if rho <= r1:
            t = (rho - r0) / (r1 - r0)
            return q0 + t * (q1 - q0)
    return tab[-1][1]


def iaa_cycles(profile: InferenceModelProfile, link: LinkProfile,
               split: int, rho: float) -> float:
    return link.cycles_per_flop * (1.0 - rho) * sum(profile.flops_per_layer[:split])


def cloud_cycles(profile: InferenceModelProfile, link: LinkProfile,
                 split: int) -> float:
    return link.cloud_cycles_per_flop * sum(profile.flops_per_layer[split:])


def delay_of(plan: ExecutionPlan, profile: InferenceModelProfile,
             link: LinkProfile) -> float:
    """End-to-end delay: IAA compute + activation upload + cloud compute."""
    _check_plan_bounds(plan, profile, link)
    a = iaa_cycles(profile, link, plan.split, plan.rho)
    d = profile.activation_bits_per_boundary[plan.split]
    total = cloud_cycles(profile, link, plan.split) / link.f_cloud
    if a > 0:
        total += a / plan.f
    if d > 0:
        r = link.rate(plan.p)
        if r <= 0:
            return math.inf
        total += d / r
    return total


def energy_of(plan: ExecutionPlan, profile: InferenceModelProfile,
              link: LinkProfile) -> float:
    """IAA-side energy only: DVFS compute term plus transmit term."""
    _check_plan_bounds(plan, profile, link)
    a = iaa_cycles(profile, link, plan.split, plan.rho)
    d = profile.activation_bits_per_boundary[plan.split]
    total = link.kappa * a * plan.f**2 if a > 0 else 0.0
    if d > 0:
        r = link.rate(plan.p)
        if r <= 0:
            return math.inf
        total += plan.p * d / r
    return total


def _check_plan_bounds(plan: ExecutionPlan, profile: InferenceModelProfile,
                       link: LinkProfile) -> None:
    if not 0 <= plan.split <= profile.layer_count:
        raise DomainError(f"split {plan.split} outside [0, {profile.layer_count}]")
    if not 0.0 <= plan.rho < 1.0:
        raise DomainError("rho must lie in [0, 1)")
    tol = 1e-9
    if not link.p_min * (1 - tol) <= plan.p <= link.p_max * (1 + tol):
        raise DomainError("p outside [p_min, p_max]")
    if not link.f_min * (1 - tol) <= plan.f <= link.f_max * (1 + tol):
        raise DomainError("f outside [f_min, f_max]")


def _fill_achieved(plan: ExecutionPlan, profile, link) -> ExecutionPlan:
    plan.quality = quality_of(profile, plan.rho)
    plan.delay = delay_of(plan, profile, link)
    plan.energy = energy_of(plan, profile, link)
    return plan


# ---------------------------------------------------------------------------
# Inner (p, f) subproblem: minimum IAA energy under a compute+transmit
# delay budget, via a 1-D search over the delay split.

_INFEASIBLE = (math.inf, math.nan, math.nan)


def _min_energy_given_delay(a: float, d: float, link: LinkProfile,
                            t_budget: float) -> tuple[float, float, float]:
    """Return (energy, p, f) minimizing IAA energy with A/f + D/r(p) <= t_budget.

    (inf, nan, nan) when no (p, f) in the box meets the budget.
    """
    if t_budget < 0:
        return _INFEASIBLE
    if a == 0 and d == 0:
        return 0.0, link.p_min, link.f_min
    if d == 0:
        f = link.f_min if a / link.f_min <= t_budget else a / t_budget
        if f > link.f_max * (1 + 1e-12):
            return _INFEASIBLE
        f = min(f, link.f_max)
        return link.kappa * a * f**2, link.p_min, f
    r_max = link.rate(link.p_max)
    if r_max <= 0:
        return _INFEASIBLE

    def tx_energy(t_tx_avail: float) -> tuple[float, float] | None:
        """Cheapest (energy, p) uploading d bits within t_tx_avail seconds."""
        need = 0.0 if math.isinf(t_tx_avail) else d / t_tx_avail
        p_req = link.power_for_rate(need)
        if p_req > link.p_max * (1 + 1e-12):
            return None
        p = min(max(p_req, link.p_min), link.p_max)
        return p * d / link.rate(p), p

    if a == 0:
        res = tx_energy(t_budget)
        if res is None:
            return _INFEASIBLE
        e, p = res
        return e, p, link.f_min

    lo = a / link.f_max
    hi = a / link.f_min
    if not math.isinf(t_budget):
        hi = min(hi, t_budget - d / r_max)
    if hi < lo * (1 - 1e-12):
        return _INFEASIBLE
    hi = max(hi, lo)

    def eval_tc(tc: float) -> tuple[float, float, float]:
        f = min(max(a / tc, link.f_min), link.f_max)
        res = tx_energy(t_budget - tc if not math.isinf(t_budget) else math.inf)
        if res is None:
            return _INFEASIBLE
        e_tx, p = res
        return link.kappa * a * f**2 + e_tx, p, f

    # Coarse scan then golden-section refinement around the best bracket.
    n = 17
    tcs = [lo + (hi - lo) * i / (n - 1) for i in range(n)] if hi > lo else [lo]
    evals = [eval_tc(tc) for tc in tcs]
    best_i = min(range(len(tcs)), key=lambda i: evals[i][0])
    best = evals[best_i]
    if len(tcs) > 1:
        a_br = tcs[max(best_i - 1, 0)]
        b_br = tcs[min(best_i + 1, len(tcs) - 1)]
        x, res = _golden_min(lambda tc: eval_tc(tc)[0], a_br, b_br, iters=40)
        cand = eval_tc(x)
        if cand[0] < best[0]:
            best = cand
    return best


def _golden_min(fn, a: float, b: float, iters: int = 40) -> tuple[float, float]:
    """Golden-section minimization of a unimodal scalar function on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


# ---------------------------------------------------------------------------
# Per-(paradigm, split) branch solvers


def _rho_cap(profile: InferenceModelProfile, q_min: float, rho_max: float) -> float | None:
    """Largest rho in [0, rho_max] with quality >= q_min; None if none."""
    if quality_of(profile, 0.0) < q_min - 1e-12:
        return None
    lo, hi = 0.0, rho_max
    if quality_of(profile, hi) >= q_min - 1e-12:
        return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if quality_of(profile, mid) >= q_min - 1e-12:
            lo = mid
        else:
            hi = mid
    return lo


def _branch_min_energy(profile, link, budget, s: int, rho: float):
    a = iaa_cycles(profile, link, s, rho)
    d = profile.activation_bits_per_boundary[s]
    b_cloud = cloud_cycles(profile, link, s) / link.f_cloud
    t_avail = budget.t_max - b_cloud if not math.isinf(budget.t_max) else math.inf
    e, p, f = _min_energy_given_delay(a, d, link, t_avail)
    if math.isinf(e):
        return None
    return e, p, f


def _branch_min_delay(profile, link, budget, s: int, rho: float):
    a = iaa_cycles(profile, link, s, rho)
    d = profile.activation_bits_per_boundary[s]
    b_cloud = cloud_cycles(profile, link, s) / link.f_cloud
    r_max = link.rate(link.p_max)
    if d > 0 and r_max <= 0:
        return None
    t_lo = (a / link.f_max if a > 0 else 0.0) + (d / r_max if d > 0 else 0.0)
    e_lo, p_lo, f_lo = _min_energy_given_delay(a, d, link, t_lo * (1 + 1e-12))
    if math.isinf(budget.e_max):
        # Fastest config outright: full power, full clock.
        p = link.p_max if d > 0 else link.p_min
        f = link.f_max if a > 0 else link.f_min
        return b_cloud + t_lo, p, f
    if e_lo <= budget.e_max * (1 + 1e-9):
        return b_cloud + t_lo, p_lo, f_lo
    r_min = link.rate(link.p_min)
    if d > 0 and r_min <= 0:
        return None
    t_hi = (a / link.f_min if a > 0 else 0.0) + (d / r_min if d > 0 else 0.0)
    e_hi, _, _ = _min_energy_given_delay(a, d, link, t_hi)
    if e_hi > budget.e_max * (1 + 1e-9):
        return None
    lo, hi = t_lo, t_hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        e_mid, _, _ = _min_energy_given_delay(a, d, link, mid)
        if e_mid <= budget.e_max * (1 + 1e-9):
            hi = mid
        else:
            lo = mid
    _, p, f = _min_energy_given_delay(a, d, link, hi)
    return b_cloud + hi, p, f


def _branch_feasible(profile, link, budget, s: int, rho: float):
    """Feasibility under both t_max and e_max; returns (p, f) or None."""
    res = _branch_min_energy(profile, link, budget, s, rho)
    if res is None:
        return None
    e, p, f = res
    if e > budget.e_max * (1 + 1e-9):
        return None
    return p, f


def _solve_branch(mode: PlanMode, profile, link, budget, paradigm: Paradigm,
                  s: int, rho_cap: float):
    """Best plan for one (paradigm, split); None if the branch is infeasible."""
    rho_hi = 0.0 if s == 0 else rho_cap

    if mode is PlanMode.MAX_QUALITY:
        if _branch_feasible(profile, link, budget, s, 0.0) is not None:
            rho_star = 0.0
        elif rho_hi == 0.0 or \
                _branch_feasible(profile, link, budget, s, rho_hi) is None:
            return None
        else:
            lo, hi = 0.0, rho_hi
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _branch_feasible(profile, link, budget, s, mid) is None:
                    lo = mid
                else:
                    hi = mid
            rho_star = hi
        pf = _branch_feasible(profile, link, budget, s, rho_star)
        if pf is None:
            return None
        if quality_of(profile, rho_star) < budget.q_min - 1e-12:
            return None
        p, f = pf
    else:
        # T and E are both non-increasing in rho (pruning only shrinks the
        # on-IAA workload), so the optimum sits at the quality-capped rho.
        rho_star = rho_hi
        solver = (_branch_min_delay if mode is PlanMode.MIN_DELAY
                  else _branch_min_energy)
        res = solver(profile, link, budget, s, rho_star)
        if res is None:
            return None
        _, p, f = res

    plan = ExecutionPlan(
        paradigm=paradigm, split=s, rho=rho_star, p=p, f=f,
        quality=0.0, delay=0.0, energy=0.0,
    )
    _fill_achieved(plan, profile, link)
    if plan.delay > budget.t_max * (1 + 1e-9):
        return None
    if plan.energy > budget.e_max * (1 + 1e-9):
        return None
    if plan.quality < budget.q_min - 1e-9:
        return None
    return plan


def _check_budget(mode: PlanMode, budget: QosBudget) -> None:
    if mode is PlanMode.MAX_QUALITY and budget.q_min > 0:
        raise ConfigError("MAX_QUALITY mode must leave q_min unconstrained (0)")
    if mode is PlanMode.MIN_DELAY and not math.isinf(budget.t_max):
        raise ConfigError("MIN_DELAY mode must leave t_max unconstrained (inf)")
    if mode is PlanMode.MIN_ENERGY and not math.isinf(budget.e_max):
        raise ConfigError("MIN_ENERGY mode must leave e_max unconstrained (inf)")


def _splits_for(paradigm: Paradigm, profile: InferenceModelProfile) -> list[int]:
    if paradigm is Paradigm.ON_CLOUD:
        return [0]
    if paradigm is Paradigm.ON_IAA:
        return [profile.layer_count]
    return list(range(profile.layer_count + 1))


def _better(mode: PlanMode, challenger: ExecutionPlan, incumbent: ExecutionPlan | None) -> bool:
    if incumbent is None:
        return True
    c, i = challenger.objective(mode), incumbent.objective(mode)
    rel = 1e-12 * max(abs(c), abs(i), 1.0)
    if mode is PlanMode.MAX_QUALITY:
        if c > i + rel:
            return True
        if c < i - rel:
            return False
    else:
        if c < i - rel:
            return True
        if c > i + rel:
            return False
    return (challenger.split, challenger.rho, challenger.p, challenger.f) < (
        incumbent.split, incumbent.rho, incumbent.p, incumbent.f
    )


def optimize_plan(
    mode: PlanMode,
    profile: InferenceModelProfile,
    link: LinkProfile,
    budget: QosBudget,
    rho_max: float = 0.9,
    paradigms: tuple[Paradigm, ...] = tuple(Paradigm),
) -> ExecutionPlan:
    """Constrained planner over (paradigm, split, rho, p, f).

    Splits are enumerated; rho is resolved analytically against the quality
    constraint (monotone trade-off); the (p, f) subproblem is a 1-D search
    over the compute/transmit delay split with closed-form power/frequency
    inversions. Raises InfeasibleError when every branch fails its budget.
    """
    _check_budget(mode, budget)
    if not 0.0 <= rho_max < 1.0:
        raise DomainError("rho_max must lie in [0, 1)")
    cap = _rho_cap(profile, budget.q_min, rho_max)
    reasons: dict[Paradigm, str] = {}
    best: ExecutionPlan | None = None
    for paradigm in paradigms:
        if cap is None:
            reasons[paradigm] = "q_min exceeds the unpruned model quality"
            continue
        found = None
        for s in _splits_for(paradigm, profile):
            plan = _solve_branch(mode, profile, link, budget, paradigm, s, cap)
            if plan is not None and _better(mode, plan, found):
                found = plan
        if found is None:
            reasons[paradigm] = _diagnose(profile, link, budget, paradigm)
            continue
        if _better(mode, found, best):
            best = found
    if best is None:
        raise InfeasibleError(InfeasibilityReport(reasons))
    return best


def _diagnose(profile, link, budget, paradigm: Paradigm) -> str:
    """Name the budget that killed every split of a paradigm."""
    for s in _splits_for(paradigm, profile):
        d = profile.activation_bits_per_boundary[s]
        if d > 0 and link.rate(link.p_max) <= 0:
            return "zero uplink rate with a nonzero payload"
    relaxed_t = QosBudget(math.inf, budget.e_max, budget.q_min)
    for s in _splits_for(paradigm, profile):
        if _branch_feasible(profile, link, relaxed_t, s, 0.0) is not None:
            return f"t_max {budget.t_max} s unreachable"
    return f"e_max {budget.e_max} J unreachable"


@dataclass
class ParadigmComparison:
    mode: PlanMode
    plans: dict[Paradigm, ExecutionPlan | None]
    infeasible_reasons: dict[Paradigm, str]

    def objective(self, paradigm: Paradigm) -> float | None:
        plan = self.plans[paradigm]
        return None if plan is None else plan.objective(self.mode)


def compare_paradigms(
    mode: PlanMode,
    profile: InferenceModelProfile,
    link: LinkProfile,
    budget: QosBudget,
    rho_max: float = 0.9,
) -> ParadigmComparison:
    """Run the planner restricted to each paradigm; infeasibility is reported
    per paradigm without aborting the others."""
    plans: dict[Paradigm, ExecutionPlan | None] = {}
    reasons: dict[Paradigm, str] = {}
    for paradigm in Paradigm:
        try:
            plans[paradigm] = optimize_plan(
                mode, profile, link, budget, rho_max, paradigms=(paradigm,)
            )
        except InfeasibleError as exc:
            plans[paradigm] = None
            reasons[paradigm] = exc.report.reasons.get(paradigm, "infeasible")
    return ParadigmComparison(mode=mode, plans=plans, infeasible_reasons=reasons)


def brute_force_plan(
    mode: PlanMode,
    profile: InferenceModelProfile,
    link: LinkProfile,
    budget: QosBudget,
    grid: tuple[int, int, int] = (60, 60, 60),
    rho_max: float = 0.9,
) -> ExecutionPlan:
    """Exhaustive scan over paradigms x splits x uniform (rho, p, f) grids.

    Exact optimum over the grid; ties break toward smaller split, then
    smaller rho, p, f. Grid sizes above 200 per axis are refused.
    """
    _check_budget(mode, budget)
    n_rho, n_p, n_f = grid
    if max(grid) > 200 or min(grid) < 1:
        raise SizeError("grid sizes must lie in [1, 200]")
    rhos = np.linspace(0.0, rho_max, n_rho)
    ps = np.linspace(link.p_min, link.p_max, n_p)
    fs = np.linspace(link.f_min, link.f_max, n_f)
    quals = np.array([quality_of(profile, r) for r in rhos])
    rate = np.array([link.rate(p) for p in ps])

    best: ExecutionPlan | None = None
    for paradigm in Paradigm:
        for s in _splits_for(paradigm, profile):
            local_rhos, local_quals = (rhos, quals)
            if s == 0:
                local_rhos, local_quals = rhos[:1], quals[:1]
            a = np.array(
                [iaa_cycles(profile, link, s, r) for r in local_rhos]
            )[:, None, None]
            d = profile.activation_bits_per_boundary[s]
            b_cloud = cloud_cycles(profile, link, s) / link.f_cloud
            f3 = fs[None, None, :]
            p3 = ps[None, :, None]
            with np.errstate(divide="ignore"):
                t_tx = np.where(rate > 0, d / np.where(rate > 0, rate, 1.0), np.inf)
                t_tx = np.where(d > 0, t_tx, 0.0)[None, :, None]
            delay = b_cloud + a / f3 + t_tx
            energy = link.kappa * a * f3**2 + np.where(d > 0, p3 * t_tx, 0.0)
            q3 = local_quals[:, None, None] + np.zeros_like(delay)
            feasible = (
                (delay <= budget.t_max * (1 + 1e-9))
                & (energy <= budget.e_max * (1 + 1e-9))
                & (q3 >= budget.q_min - 1e-9)
            )
            if not feasible.any():
                continue
            if mode is PlanMode.MAX_QUALITY:
                score = np.where(feasible, q3, -np.inf)
                idx = np.unravel_index(np.argmax(score), score.shape)
            elif mode is PlanMode.MIN_DELAY:
                score = np.where(feasible, delay, np.inf)
                idx = np.unravel_index(np.argmin(score), score.shape)
            else:
                score = np.where(feasible, energy, np.inf)
                idx = np.unravel_index(np.argmin(score), score.shape)
            plan = ExecutionPlan(
                paradigm=paradigm, split=s,
                rho=float(local_rhos[idx[0]]),
                p=float(ps[idx[1]]), f=float(fs[idx[2]]),
                quality=0.0, delay=0.0, energy=0.0,
            )
            _fill_achieved(plan, profile, link)
            if _better(mode, plan, best):
                best = plan
    if best is None:
        raise InfeasibleError(
            InfeasibilityReport({p: "no feasible grid point" for p in Paradigm})
        )
    return best
