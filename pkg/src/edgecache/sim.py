"""Trace-driven Monte Carlo of content dissemination, plus an exact
continuous-time Markov oracle for small homogeneous populations.

A replication draws the requester set, seeds copies, then scans the contact
trace inside the content's lifetime window: a contact between an active
holder and an unserved requester is a delivery, and the served node joins
the relay pool with probability p_c (decided once, at delivery time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .model import ContentClass, CostParams, ScenarioConfig
from .mctrace import ContactTrace

SRC_SC = 0    # served by a small cell
SRC_D2D = 1   # served by another mobile node
SRC_BS = 2    # served by the macro BS at the deadline


@dataclass(frozen=True)
class DisseminationResult:
    requesters: np.ndarray       # node ids of effective requesters (seeds excluded)
    delivery_time: np.ndarray    # seconds since creation; NaN = waited out the deadline
    delivery_source: np.ndarray  # SRC_SC / SRC_D2D / SRC_BS per requester
    became_holder: np.ndarray    # whether the requester joined the relay pool
    holder_times: np.ndarray     # activation times of mobile holders (0 = pushed seed)
    drop_times: np.ndarray       # times mobile holders stopped relaying
    h_sc0: int
    h_mn0: int
    cost_placement: float
    cost_opportunistic: float
    cost_delayed: float

    @property
    def served_by_sc(self) -> int:
        return int(np.sum(self.delivery_source == SRC_SC))

    @property
    def served_by_d2d(self) -> int:
        return int(np.sum(self.delivery_source == SRC_D2D))

    @property
    def served_at_ttl(self) -> int:
        return int(np.sum(self.delivery_source == SRC_BS))

    @property
    def total_cost(self) -> float:
        return self.cost_placement + self.cost_opportunistic + self.cost_delayed


def run_dissemination(trace: ContactTrace, cfg: ScenarioConfig, content: ContentClass,
                      h_sc0: int, h_mn0: int, seed,
                      costs: CostParams | None = None) -> DisseminationResult:
    """Simulate one content over one trace.

    Ties at identical timestamps are processed in trace order, and a node
    served at time t can relay only at strictly later times. With costs=None
    the realized cost fields are zero.
    """
    h_sc0 = int(h_sc0)
    h_mn0 = int(h_mn0)
    r0_total = int(content.r0_total)
    if r0_total > trace.n_mn:
        raise ValueError(f"population exceeded: r0_total={r0_total} > n_mn={trace.n_mn}")
    if h_sc0 < 0 or h_sc0 > trace.n_sc:
        raise ValueError(f"h_sc0={h_sc0} outside [0, n_sc={trace.n_sc}]")
    if h_mn0 < 0 or h_mn0 > r0_total:
        raise ValueError(f"h_mn0={h_mn0} outside [0, r0_total={r0_total}]")
    t0 = float(content.creation_time)
    ttl = float(content.ttl)
    if trace.horizon + 1e-9 < t0 + ttl:
        raise ValueError(f"trace horizon {trace.horizon:g} ends before the deadline {t0 + ttl:g}")

    rng = np.random.default_rng(seed)
    p_c = cfg.p_c
    lam_d = cfg.lambda_d
    n_mn = trace.n_mn
    n_nodes = trace.n_nodes

    if r0_total == n_mn:
        requesters = np.arange(n_mn)
    else:
        requesters = rng.choice(n_mn, size=r0_total, replace=False)
    seeds = rng.choice(requesters, size=h_mn0, replace=False) if h_mn0 else np.empty(0, dtype=int)
    scs = n_mn + rng.choice(trace.n_sc, size=h_sc0, replace=False) if h_sc0 else np.empty(0, dtype=int)

    INF = math.inf
    hold_t = [INF] * n_nodes   # activation time, relative to creation
    drop_t = [INF] * n_nodes
    is_req = bytearray(n_nodes)
    for s in scs:
        hold_t[s] = -1.0  # active from the start, never drop

    # canonical (sorted) effective requesters
    live = np.setdiff1d(requesters, seeds) if h_mn0 else np.sort(requesters)
    r0 = live.size
    idx_of = {int(n): i for i, n in enumerate(live)}
    for n in live:
        is_req[n] = 1

    holder_times = []
    drop_times = []
    for s in seeds:
        if rng.random() < p_c:
            hold_t[s] = 0.0
            holder_times.append(0.0)
            if lam_d > 0:
                d = rng.exponential(1.0 / lam_d)
                drop_t[s] = d
                drop_times.append(d)

    delivery_time = np.full(r0, np.nan)
    source = np.full(r0, SRC_BS, dtype=np.int8)
    became = np.zeros(r0, dtype=bool)

    lo = int(np.searchsorted(trace.t, t0, side="right"))
    hi = int(np.searchsorted(trace.t, t0 + ttl, side="right"))
    # plain lists keep the per-event scan cheap
    ev_t = (trace.t[lo:hi] - t0).tolist()
    ev_a = trace.a[lo:hi].tolist()
    ev_b = trace.b[lo:hi].tolist()
    unserved = r0
    check_drop = lam_d > 0
    rand = rng.random
    for i in range(hi - lo):
        if unserved == 0:
            break
        a = ev_a[i]
        b = ev_b[i]
        t = ev_t[i]
        if hold_t[a] < t and is_req[b]:
            holder, req = a, b
        elif hold_t[b] < t and is_req[a]:
            holder, req = b, a
        else:
            continue
        if check_drop and holder < n_mn and drop_t[holder] <= t:
            continue
        j = idx_of[req]
        delivery_time[j] = t
        source[j] = SRC_SC if holder >= n_mn else SRC_D2D
        is_req[req] = 0
        unserved -= 1
        if rand() < p_c:
            became[j] = True
            hold_t[req] = t
            holder_times.append(t)
            if check_drop:
                d = t + rng.exponential(1.0 / lam_d)
                drop_t[req] = d
                drop_times.append(d)

    if costs is None:
        phase = (0.0, 0.0, 0.0)
    else:
        n_sc_srv = int(np.sum(source == SRC_SC))
        n_d2d = int(np.sum(source == SRC_D2D))
        n_bs = int(np.sum(source == SRC_BS))
        phase = (costs.c_bh * h_sc0 + costs.c_bs * h_mn0,
                 costs.c_sc * n_sc_srv + costs.c_d2d * n_d2d,
                 costs.c_bs_ttl * n_bs)
    return DisseminationResult(
        requesters=live, delivery_time=delivery_time, delivery_source=source,
        became_holder=became, holder_times=np.sort(np.asarray(holder_times, dtype=float)),
        drop_times=np.sort(np.asarray(drop_times, dtype=float)), h_sc0=h_sc0, h_mn0=h_mn0,
        cost_placement=phase[0], cost_opportunistic=phase[1], cost_delayed=phase[2])


@dataclass(frozen=True)
class EmpiricalCurves:
    """Replication-averaged dissemination curves with 95% normal CIs."""

    times: np.ndarray       # grid, relative to content creation
    h_mean: np.ndarray
    h_lo: np.ndarray
    h_hi: np.ndarray
    r_mean: np.ndarray
    r_lo: np.ndarray
    r_hi: np.ndarray
    p_mean: np.ndarray
    p_lo: np.ndarray
    p_hi: np.ndarray
    mean_delay: float       # censored requesters contribute the full ttl
    delay_ci: float
    mean_cost: float
    cost_ci: float
    cost_phases: tuple      # mean (placement, opportunistic, delayed)
    served_by_sc: float     # per-replication means
    served_by_d2d: float
    served_at_ttl: float
    n_reps: int
    seeds: tuple

    def summary(self) -> dict:
        return {
            "n_reps": self.n_reps,
            "mean_delay": self.mean_delay,
            "delay_ci95": self.delay_ci,
            "mean_cost": self.mean_cost,
            "cost_ci95": self.cost_ci,
            "cost_placement": self.cost_phases[0],
            "cost_opportunistic": self.cost_phases[1],
            "cost_delayed": self.cost_phases[2],
            "served_by_sc": self.served_by_sc,
            "served_by_d2d": self.served_by_d2d,
            "served_at_ttl": self.served_at_ttl,
        }


def _ci_half(x: np.ndarray, axis=0):
    n = x.shape[axis] if x.ndim else len(x)
    if n < 2:
        return np.zeros_like(np.mean(x, axis=axis), dtype=float)
    return 1.96 * np.std(x, axis=axis, ddof=1) / math.sqrt(n)


def replication_seeds(base_seed, n_reps: int, per_rep: int = 2) -> np.ndarray:
    """Derive independent integer seeds: one row of `per_rep` seeds per replication.

    Splitting uses numpy's SeedSequence so streams are reproducible and
    non-overlapping given (base_seed, n_reps).
    """
    ss = np.random.SeedSequence(base_seed)
    state = ss.generate_state(n_reps * per_rep, dtype=np.uint64)
    return state.reshape(n_reps, per_rep)


def run_replications(trace_source, cfg: ScenarioConfig, content: ContentClass,
                     h_sc0: int, h_mn0: int, n_reps: int, base_seed=0,
                     t_grid=None, seeds=None, costs: CostParams | None = None) -> EmpiricalCurves:
    """Replicate run_dissemination and aggregate curves on a time grid.

    trace_source is either a fixed ContactTrace or a callable seed -> trace,
    in which case every replication gets a fresh trace. Explicit `seeds`
    (one per replication, reused for trace and scan) override the derived
    SeedSequence splitting.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    fixed = isinstance(trace_source, ContactTrace)
    if seeds is None:
        seed_rows = replication_seeds(base_seed, n_reps)
    else:
        if len(seeds) != n_reps:
            raise ValueError("need one seed per replication")
        seed_rows = [(s, s) for s in seeds]
    grid = np.linspace(0.0, content.ttl, 51) if t_grid is None else np.asarray(t_grid, dtype=float)

    h_curves = np.empty((n_reps, grid.size))
    r_curves = np.empty((n_reps, grid.size))
    p_curves = np.empty((n_reps, grid.size))
    delays = np.empty(n_reps)
    tot_costs = np.empty(n_reps)
    phases = np.empty((n_reps, 3))
    counts = np.empty((n_reps, 3))
    used = []
    for i in range(n_reps):
        trace_seed, sim_seed = seed_rows[i][0], seed_rows[i][1]
        trace = trace_source if fixed else trace_source(int(trace_seed))
        res = run_dissemination(trace, cfg, content, h_sc0, h_mn0, int(sim_seed), costs=costs)
        used.append(int(sim_seed))
        r0 = res.requesters.size
        dt = res.delivery_time
        served = np.sort(dt[~np.isnan(dt)])
        p_curves[i] = np.searchsorted(served, grid, side="right") / max(r0, 1)
        r_curves[i] = r0 - np.searchsorted(served, grid, side="right")
        gains = np.searchsorted(res.holder_times, grid, side="right")
        losses = np.searchsorted(res.drop_times, grid, side="right")
        h_curves[i] = res.h_sc0 + gains - losses
        delays[i] = float(np.mean(np.where(np.isnan(dt), content.ttl, dt))) if r0 else 0.0
        tot_costs[i] = res.total_cost
        phases[i] = (res.cost_placement, res.cost_opportunistic, res.cost_delayed)
        counts[i] = (res.served_by_sc, res.served_by_d2d, res.served_at_ttl)

    return EmpiricalCurves(
        times=grid,
        h_mean=h_curves.mean(axis=0), h_lo=h_curves.mean(axis=0) - _ci_half(h_curves),
        h_hi=h_curves.mean(axis=0) + _ci_half(h_curves),
        r_mean=r_curves.mean(axis=0), r_lo=r_curves.mean(axis=0) - _ci_half(r_curves),
        r_hi=r_curves.mean(axis=0) + _ci_half(r_curves),
        p_mean=p_curves.mean(axis=0), p_lo=p_curves.mean(axis=0) - _ci_half(p_curves),
        p_hi=p_curves.mean(axis=0) + _ci_half(p_curves),
        mean_delay=float(delays.mean()), delay_ci=float(_ci_half(delays)),
        mean_cost=float(tot_costs.mean()), cost_ci=float(_ci_half(tot_costs)),
        cost_phases=tuple(phases.mean(axis=0)),
        served_by_sc=float(counts[:, 0].mean()), served_by_d2d=float(counts[:, 1].mean()),
        served_at_ttl=float(counts[:, 2].mean()),
        n_reps=n_reps, seeds=tuple(used))


def write_curves_csv(curves: EmpiricalCurves, path) -> None:
    cols = ("h_mean", "h_lo", "h_hi", "r_mean", "r_lo", "r_hi", "p_mean", "p_lo", "p_hi")
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(cols) + "\n")
        for i, t in enumerate(curves.times):
            vals = ",".join(f"{getattr(curves, c)[i]:.17g}" for c in cols)
            fh.write(f"{t:.17g},{vals}\n")


def exact_ctmc_delivery(r0: int, h0: int, p_c: float, lam: float, t: float):
    """Transient solve of the homogeneous dissemination Markov chain.

    State (served s, recruited c <= s); from (m, n) = (h0+c, r0-s) a
    delivery occurs at rate lam*m*n and recruits with probability p_c.
    Uniformization with Poisson tail below 1e-13 keeps truncation error
    under 1e-12. Returns (P{tagged requester served by t}, E[m(t)], E[n(t)]).
    """
    if r0 > 30 or h0 > 10:
        raise ValueError(f"oracle scale exceeded: needs r0 <= 30 and h0 <= 10, got ({r0}, {h0})")
    if r0 < 1 or h0 < 0 or lam < 0 or t < 0:
        raise ValueError("need r0 >= 1, h0 >= 0, lam >= 0, t >= 0")
    if not 0.0 <= p_c <= 1.0:
        raise ValueError("p_c must lie in [0, 1]")

    states = [(s, c) for s in range(r0 + 1) for c in range(s + 1)]
    index = {sc: k for k, sc in enumerate(states)}
    n_states = len(states)
    m_of = np.array([h0 + c for s, c in states], dtype=float)
    n_of = np.array([r0 - s for s, c in states], dtype=float)

    out_rate = lam * m_of * n_of
    big = float(out_rate.max())
    if big == 0.0 or t == 0.0:
        p0 = np.zeros(n_states)
        p0[index[(0, 0)]] = 1.0
        en = float(p0 @ n_of)
        return 1.0 - en / r0, float(p0 @ m_of), en

    P = np.zeros((n_states, n_states))
    for k, (s, c) in enumerate(states):
        rate = out_rate[k]
        stay = 1.0 - rate / big
        P[k, k] += stay
        if rate > 0.0:
            if p_c > 0.0:
                P[k, index[(s + 1, c + 1)]] += (rate / big) * p_c
            if p_c < 1.0:
                P[k, index[(s + 1, c)]] += (rate / big) * (1.0 - p_c)

    mu_pois = big * t
    kmax = int(poisson.isf(1e-13, mu_pois)) + 1
    weights = poisson.pmf(np.arange(kmax + 1), mu_pois)
    v = np.zeros(n_states)
    v[index[(0, 0)]] = 1.0
    acc = weights[0] * v
    for k in range(1, kmax + 1):
        v = v @ P
        acc += weights[k] * v
    acc /= acc.sum()  # renormalize the truncated mixture
    en = float(acc @ n_of)
    em = float(acc @ m_of)
    return 1.0 - en / r0, em, en
