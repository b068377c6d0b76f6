"""Cost-optimal initial placement of content copies.

Closed forms cover two regimes: small-cell caching without mobile relaying
(a water-filling allocation driven by a capacity multiplier lambda0) and
mobile seeding without caches (a per-content interior optimum). A projected
coordinate-descent solver handles the general joint problem numerically,
and an exhaustive integer grid search serves as a reference oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .model import ContentClass, CostParams, Placement, ScenarioConfig
from . import analytics
from .workload import PopularityModel, bounded_pareto_pdf

log = logging.getLogger(__name__)

_LAMBDA0_TOL = 1e-9  # bisection stops at |interval| <= tol * c_bh


@dataclass(frozen=True)
class SCAllocationParams:
    """Thresholds of the small-cell water-filling solution for one deadline."""

    gamma: float        # mu_lambda * ttl
    phi: float          # (c_bs_ttl - c_sc) / c_bh
    n_sc: int
    total_cache: float  # sum of cache slots across small cells
    c_bh: float
    lambda0: float = 0.0

    @property
    def l_threshold(self) -> float:
        return (1.0 + self.lambda0 / self.c_bh) / (self.gamma * self.phi)

    @property
    def u_threshold(self) -> float:
        return self.l_threshold * math.exp(self.gamma * self.n_sc)


def _check_sc_preconditions(contents, costs: CostParams, cfg: ScenarioConfig):
    if costs.c_sc >= costs.c_bs_ttl:
        raise ValueError("offloading not cost-meaningful: c_sc must be below c_bs_ttl")
    if costs.c_bh <= 0:
        raise ValueError("c_bh must be positive for the caching trade-off")
    if cfg.mu_lambda <= 0:
        raise ValueError("mu_lambda must be positive")
    for c in contents:
        if c.ttl <= 0:
            raise ValueError(f"content {c.content_id}: ttl must be positive for allocation")


def _sc_alloc_vector(r0s, gammas, phi, n_sc, c_bh, lambda0):
    l_thr = (1.0 + lambda0 / c_bh) / (gammas * phi)
    u_thr = l_thr * np.exp(gammas * n_sc)
    h = np.zeros_like(r0s, dtype=float)
    full = r0s > u_thr
    mid = (~full) & (r0s >= l_thr)
    h[full] = n_sc
    h[mid] = np.log(r0s[mid] / l_thr[mid]) / gammas[mid]
    return h


def optimal_sc_allocation(contents, costs: CostParams,
                          cfg: ScenarioConfig) -> tuple[Placement, float]:
    """Water-filling cache allocation for non-relaying requesters (p_c -> 0).

    Per content, the unconstrained optimum caches everything above an upper
    popularity threshold, nothing below a lower one, and log(R0/L)/gamma in
    between; the capacity multiplier lambda0 is raised by bisection until the
    fleet-wide cache budget is met.
    """
    _check_sc_preconditions(contents, costs, cfg)
    r0s = np.array([float(c.r0_total) for c in contents])
    gammas = np.array([cfg.mu_lambda * c.ttl for c in contents])
    phi = (costs.c_bs_ttl - costs.c_sc) / costs.c_bh
    budget = float(cfg.n_sc * cfg.cache_per_sc)

    def total(lam0):
        return float(np.sum(_sc_alloc_vector(r0s, gammas, phi, cfg.n_sc, costs.c_bh, lam0)))

    lam0 = 0.0
    if total(0.0) > budget:
        hi = float(np.max(costs.c_bh * (gammas * phi * r0s - 1.0))) * 1.0000001 + _LAMBDA0_TOL
        lo = 0.0
        while hi - lo > _LAMBDA0_TOL * costs.c_bh:
            mid = 0.5 * (lo + hi)
            if total(mid) > budget:
                lo = mid
            else:
                hi = mid
        lam0 = hi
    h = _sc_alloc_vector(r0s, gammas, phi, cfg.n_sc, costs.c_bh, lam0)
    return Placement(h_sc0=h, h_mn0=np.zeros_like(h)), float(lam0)


def lambda0_from_density(pop: PopularityModel, m: int, ttl: float, costs: CostParams,
                         cfg: ScenarioConfig) -> float:
    """Capacity multiplier for a popularity density instead of sampled contents.

    Solves E[allocation(R0)] = budget/m over the bounded-Pareto density by
    bracketing bisection; returns 0 when the budget is slack at lambda0 = 0.
    """
    _check_sc_preconditions([ContentClass("density", 1, ttl)], costs, cfg)
    if m < 1:
        raise ValueError("m must be >= 1")
    gamma = cfg.mu_lambda * ttl
    phi = (costs.c_bs_ttl - costs.c_sc) / costs.c_bh
    budget = float(cfg.n_sc * cfg.cache_per_sc)

    def mean_alloc(lam0):
        l_thr = (1.0 + lam0 / costs.c_bh) / (gamma * phi)
        u_thr = l_thr * math.exp(gamma * cfg.n_sc)
        a = max(l_thr, pop.lo)
        b = min(u_thr, pop.hi)
        acc = 0.0
        if b > a:
            val, _ = quad(lambda x: math.log(x / l_thr) / gamma * bounded_pareto_pdf(x, pop),
                          a, b, limit=200)
            acc += val
        if pop.hi > u_thr:
            val, _ = quad(lambda x: bounded_pareto_pdf(x, pop),
                          max(u_thr, pop.lo), pop.hi, limit=200)
            acc += cfg.n_sc * val
        return acc

    target = budget / m
    if mean_alloc(0.0) <= target:
        log.info("capacity constraint slack at lambda0=0 (mean allocation %.6g <= %.6g)",
                 mean_alloc(0.0), target)
        return 0.0
    lo, hi = 0.0, costs.c_bh * (gamma * phi * pop.hi - 1.0) * 1.0000001 + _LAMBDA0_TOL
    while hi - lo > _LAMBDA0_TOL * costs.c_bh:
        mid = 0.5 * (lo + hi)
        if mean_alloc(mid) > target:
            lo = mid
        else:
            hi = mid
    return float(hi)


def optimal_mn_allocation(contents, costs: CostParams, cfg: ScenarioConfig) -> Placement:
    """Per-content optimal number of pushed mobile seeds (no caches).

    The relaxed optimum balances the push cost against opportunistic
    savings; it is clamped into [0, R(0)]. Cost orderings that make the
    interior expression undefined have a constant-sign cost slope, so the
    optimum sits at an endpoint.
    """
    if cfg.p_c <= 0:
        raise ValueError("mobile seeding needs p_c > 0")
    if cfg.mu_lambda <= 0:
        raise ValueError("mu_lambda must be positive")
    if costs.c_bs == costs.c_d2d:
        raise ValueError("c_bs == c_d2d leaves the seeding trade-off undefined")
    num = costs.c_bs_ttl - costs.c_d2d
    den = costs.c_bs - costs.c_d2d
    phi_p = num / den
    h = np.zeros(len(contents))
    for i, c in enumerate(contents):
        if c.ttl <= 0:
            raise ValueError(f"content {c.content_id}: ttl must be positive for allocation")
        r0 = float(c.r0_total)
        x = cfg.mu_lambda * c.ttl * cfg.p_c * r0
        if phi_p < 0.0:
            # opposite cost orderings make the slope one-signed: pushing is
            # either uniformly cheaper (num > 0 > den) or uniformly dearer
            h[i] = r0 if num > 0.0 else 0.0
            continue
        if x == 0.0 or math.expm1(x) == 0.0:
            h[i] = r0 if costs.c_bs_ttl > costs.c_bs else 0.0
            continue
        if x > 1.0:
            # e^{-x}-scaled form stays finite for large x
            opt = r0 * (math.sqrt(phi_p) * math.exp(-x / 2.0) - math.exp(-x)) / (-math.expm1(-x))
        else:
            opt = r0 * (math.sqrt(phi_p) * math.exp(x / 2.0) - 1.0) / math.expm1(x)
        h[i] = min(max(opt, 0.0), r0)
    return Placement(h_sc0=np.zeros(len(contents)), h_mn0=h)


def _mode_flags(mode: str):
    if mode not in ("sc_only", "mn_only", "joint"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode != "mn_only", mode != "sc_only"


def solve_problem1_numeric(contents, costs: CostParams, cfg: ScenarioConfig,
                           mode: str = "joint", n_starts: int = 8, max_sweeps: int = 80,
                           seed=0, tol: float = 1e-7) -> tuple[Placement, dict]:
    """Projected coordinate descent on the relaxed placement problem.

    Multi-start over random feasible points; each sweep minimizes one
    coordinate at a time inside its box (the cache budget caps small-cell
    coordinates), followed by pairwise budget-exchange moves that undo
    first-come-first-served fills. Best effort: returns the best point found
    with a convergence flag.
    """
    use_sc, use_mn = _mode_flags(mode)
    m = len(contents)
    r0s = np.array([float(c.r0_total) for c in contents])
    budget = float(cfg.n_sc * cfg.cache_per_sc)
    n_sc = float(cfg.n_sc)
    rng = np.random.default_rng(seed)

    def cost_of(hsc, hmn):
        return sum(analytics.content_cost(c, hsc[i], hmn[i], cfg, costs)
                   for i, c in enumerate(contents))

    def coord_min(f, ub):
        if ub <= 0.0:
            return 0.0
        res = minimize_scalar(f, bounds=(0.0, ub), method="bounded",
                              options={"xatol": 1e-10 * max(ub, 1.0)})
        # endpoints can beat the interior point on monotone slices
        return min((0.0, ub, min(max(float(res.x), 0.0), ub)), key=f)

    best = None
    iters_total = 0
    converged = False
    for start in range(n_starts):
        if start == 0:
            hsc = np.zeros(m)
            hmn = np.zeros(m)
        else:
            raw = rng.random(m)
            hsc = np.minimum(raw * budget / max(raw.sum(), 1e-12), n_sc) if use_sc else np.zeros(m)
            hmn = rng.random(m) * r0s if use_mn else np.zeros(m)
        cur = cost_of(hsc, hmn)
        for sweep in range(max_sweeps):
            prev = cur
            for i in range(m):
                if use_sc:
                    slack = budget - (hsc.sum() - hsc[i])
                    ub = min(n_sc, max(slack, 0.0))
                    hsc[i] = coord_min(
                        lambda v: analytics.content_cost(contents[i], v, hmn[i], cfg, costs), ub)
                if use_mn:
                    hmn[i] = coord_min(
                        lambda v: analytics.content_cost(contents[i], hsc[i], v, cfg, costs),
                        r0s[i])
            if use_sc and m > 1:
                # budget exchange: shift cache mass between content pairs
                for i in range(m):
                    for j in range(i + 1, m):
                        pair_total = hsc[i] + hsc[j]
                        if pair_total <= 0.0:
                            continue
                        lo_i = max(0.0, pair_total - n_sc)
                        hi_i = min(n_sc, pair_total)

                        def pair_cost(v):
                            return (analytics.content_cost(contents[i], v, hmn[i], cfg, costs)
                                    + analytics.content_cost(contents[j], pair_total - v,
                                                             hmn[j], cfg, costs))
                        res = minimize_scalar(pair_cost, bounds=(lo_i, hi_i), method="bounded",
                                              options={"xatol": 1e-10 * max(hi_i, 1.0)})
                        v = float(np.clip(res.x, lo_i, hi_i))
                        if pair_cost(v) < pair_cost(hsc[i]) - 1e-15:
                            hsc[i], hsc[j] = v, pair_total - v
            cur = cost_of(hsc, hmn)
            iters_total += 1
            if prev - cur <= tol * (1.0 + abs(prev)):
                converged = True
                break
        if best is None or cur < best[0]:
            best = (cur, hsc.copy(), hmn.copy(), start)
    if not converged:
        log.warning("coordinate descent hit the sweep cap without meeting tol=%g", tol)
    placement = Placement(h_sc0=best[1], h_mn0=best[2])
    info = {"mode": mode, "best_cost": best[0], "best_start": best[3],
            "sweeps": iters_total, "converged": bool(converged),
            "budget_used": float(best[1].sum()), "budget": budget}
    return placement, info


def grid_search_oracle(contents, costs: CostParams, cfg: ScenarioConfig,
                       step: int = 1, mode: str = "sc_only",
                       max_points: int = 10**8) -> Placement:
    """Exhaustive integer-grid minimum of the total predicted cost.

    Depth-first over contents with remaining-budget pruning and a
    sum-of-suffix-minima bound; refuses search spaces beyond max_points.
    """
    use_sc, use_mn = _mode_flags(mode)
    m = len(contents)
    budget = int(cfg.n_sc * cfg.cache_per_sc)
    sc_vals = list(range(0, cfg.n_sc + 1, step)) if use_sc else [0]

    space = 1.0
    tables = []   # per content: list of (cost, sc, mn)
    for c in contents:
        mn_vals = list(range(0, c.r0_total + 1, step)) if use_mn else [0]
        space *= len(sc_vals) * len(mn_vals)
        if space > max_points:
            raise ValueError(f"search space exceeds max_points={max_points:g}")
        tables.append([(analytics.content_cost(c, s, v, cfg, costs), s, v)
                       for s in sc_vals for v in mn_vals])

    if not use_sc:
        # no shared constraint: contents separate
        picks = [min(tab) for tab in tables]
        return Placement(h_sc0=np.array([p[1] for p in picks], dtype=float),
                         h_mn0=np.array([p[2] for p in picks], dtype=float))

    suffix_min = [0.0] * (m + 1)
    for i in range(m - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + min(tab[0] for tab in tables[i])

    best_cost = math.inf
    best_sc = [0] * m
    best_mn = [0] * m
    cur_sc = [0] * m
    cur_mn = [0] * m

    def dfs(i, used, acc):
        nonlocal best_cost
        if acc + suffix_min[i] >= best_cost:
            return
        if i == m:
            best_cost = acc
            best_sc[:] = cur_sc
            best_mn[:] = cur_mn
            return
        for cost_i, s, v in tables[i]:
            if used + s > budget:
                continue
            cur_sc[i] = s
            cur_mn[i] = v
            dfs(i + 1, used + s, acc + cost_i)

    dfs(0, 0, 0.0)
    return Placement(h_sc0=np.array(best_sc, dtype=float),
                     h_mn0=np.array(best_mn, dtype=float))


def write_allocation_csv(path, contents, placement: Placement, cfg: ScenarioConfig,
                         costs: CostParams) -> None:
    """Per-content allocation table with real and integerized copies."""
    from .model import integerize
    sc_int = integerize(placement.h_sc0, item_cap=cfg.n_sc,
                        total_cap=cfg.n_sc * cfg.cache_per_sc)
    mn_caps = np.array([c.r0_total for c in contents])
    mn_int = np.minimum(np.round(placement.h_mn0).astype(int), mn_caps)
    with open(path, "w", newline="") as fh:
        fh.write("content_id,r0,ttl,h_sc0_real,h_sc0_int,h_mn0_real,h_mn0_int,predicted_cost\n")
        for i, c in enumerate(contents):
            cost = analytics.content_cost(c, placement.h_sc0[i], placement.h_mn0[i], cfg, costs)
            fh.write(f"{c.content_id},{c.r0_total},{c.ttl:.17g},"
                     f"{placement.h_sc0[i]:.17g},{sc_int[i]},"
                     f"{placement.h_mn0[i]:.17g},{mn_int[i]},{cost:.17g}\n")
