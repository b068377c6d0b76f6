"""Mean-field predictions for opportunistic content dissemination.

The holder/requester populations follow the fluid pair of equations

    dh/dt = p_c * h(t) * r(t) * mu      dr/dt = -h(t) * r(t) * mu

whose closed-form solution yields the delivery probability by the deadline,
the expected delivery delay, the small-cell share of opportunistic
deliveries, and the per-content delivery cost. A generalized integrator
covers content drops by mobile holders and bulk requester arrivals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import ContentClass, CostParams, EffectiveState, ScenarioConfig, effective_state

_PC_LIMIT = 1e-9  # below this, relaying is treated as absent (analytic limits)


def _ab(es: EffectiveState, p_c: float):
    return p_c * es.r0, es.h0


def holders_requesters_at(t, es: EffectiveState, p_c: float, mu: float):
    """Closed-form fluid holder and requester counts at time(s) t.

    Exponentials are kept decaying (numerator and denominator share a factor
    e^{-kt}) so large k*t cannot overflow.
    """
    t_arr = np.asarray(t, dtype=float)
    a, b = _ab(es, p_c)
    k = mu * (a + b)
    if a + b <= 0.0:
        h = np.full_like(t_arr, es.h0, dtype=float)
        r = np.full_like(t_arr, es.r0, dtype=float)
    else:
        decay = np.exp(-k * t_arr)
        den = a * decay + b
        if b == 0.0:
            # no initial holders: nothing spreads
            h = np.zeros_like(t_arr, dtype=float)
            r = np.full_like(t_arr, es.r0, dtype=float)
        else:
            h = b * (a + b) / den
            r = es.r0 * (a + b) * decay / den
    if np.ndim(t) == 0:
        return float(h), float(r)
    return h, r


def delivery_probability(t, es: EffectiveState, p_c: float, mu: float):
    """P{a tagged requester is served by time t} under the fluid model."""
    t_arr = np.asarray(t, dtype=float)
    if es.r0 <= 0.0:
        out = np.ones_like(t_arr, dtype=float)  # no one left to serve
    elif es.h0 <= 0.0:
        out = np.zeros_like(t_arr, dtype=float)
    else:
        a, b = _ab(es, p_c)
        k = mu * (a + b)
        decay = np.exp(-k * t_arr)
        out = np.clip(1.0 - (a + b) * decay / (a * decay + b), 0.0, 1.0)
    if np.ndim(t) == 0:
        return float(out)
    return out


def expected_delay(ttl: float, es: EffectiveState, p_c: float, mu: float) -> float:
    """Mean delivery delay when unserved requesters fall back to the deadline.

    Equals the integral of the survival function 1 - P{T_d <= t} over
    [0, ttl], so it always lies in [0, ttl].
    """
    if ttl < 0:
        raise ValueError(f"ttl must be >= 0, got {ttl}")
    if ttl == 0.0 or es.r0 <= 0.0:
        return 0.0
    a, b = _ab(es, p_c)
    if a + b <= 0.0:
        return float(ttl)  # nothing ever spreads, everyone waits out the deadline
    k = mu * (a + b)
    if p_c < _PC_LIMIT or a == 0.0:
        if b == 0.0:
            return float(ttl)
        return float(-math.expm1(-mu * b * ttl) / (mu * b))
    decay = math.exp(-k * ttl)
    return float(math.log1p(a * (1.0 - decay) / (a * decay + b)) / (mu * a))


def sc_delivery_fraction(ttl: float, h_sc0: float, es: EffectiveState,
                         p_c: float, mu: float) -> float:
    """Fraction of opportunistic deliveries made by small cells, by the deadline.

    Holder growth dilutes the small-cell share: the fraction is the
    time-average of h_sc0/h(t) weighted by the instantaneous delivery flux.
    """
    if es.h0 <= 0.0:
        raise ValueError("sc_delivery_fraction needs at least one initial holder")
    if not 0.0 <= h_sc0 <= es.h0 + 1e-12:
        raise ValueError(f"h_sc0={h_sc0} outside [0, h0={es.h0}]")
    if ttl < 0:
        raise ValueError(f"ttl must be >= 0, got {ttl}")
    ratio = h_sc0 / es.h0
    if ttl == 0.0 or es.r0 <= 0.0 or p_c < _PC_LIMIT:
        return float(ratio)
    _, r_ttl = holders_requesters_at(ttl, es, p_c, mu)
    x = p_c * (es.r0 - r_ttl) / es.h0  # relative holder growth over the window
    if x < 1e-12:
        return float(ratio)
    return float(ratio * math.log1p(x) / x)


def content_cost_phases(content: ContentClass, h_sc0: float, h_mn0: float,
                        cfg: ScenarioConfig, costs: CostParams) -> tuple[float, float, float]:
    """(placement, opportunistic, deadline) cost of serving one content."""
    es = effective_state(content.r0_total, h_sc0, h_mn0, cfg.p_c)
    placement = costs.c_bh * h_sc0 + costs.c_bs * h_mn0
    if es.r0 <= 0.0:
        return placement, 0.0, 0.0
    p = delivery_probability(content.ttl, es, cfg.p_c, cfg.mu_lambda)
    if es.h0 > 0.0:
        q = sc_delivery_fraction(content.ttl, h_sc0, es, cfg.p_c, cfg.mu_lambda)
    else:
        q = 0.0  # no holders, no opportunistic deliveries
    opportunistic = (costs.c_sc * q + costs.c_d2d * (1.0 - q)) * es.r0 * p
    deadline = costs.c_bs_ttl * es.r0 * (1.0 - p)
    return placement, opportunistic, deadline


def content_cost(content: ContentClass, h_sc0: float, h_mn0: float,
                 cfg: ScenarioConfig, costs: CostParams) -> float:
    return float(sum(content_cost_phases(content, h_sc0, h_mn0, cfg, costs)))


def total_cost(contents, placement, cfg: ScenarioConfig, costs: CostParams) -> float:
    return float(sum(content_cost(c, hs, hm, cfg, costs)
                     for c, hs, hm in zip(contents, placement.h_sc0, placement.h_mn0)))


def relative_cost_decrease(cost_without: float, cost_with: float) -> float:
    """Cost saved by offloading, relative to serving everyone at the deadline."""
    if cost_without <= 0.0:
        raise ValueError("undefined baseline: cost_without must be positive")
    return (cost_without - cost_with) / cost_without


def effective_meeting_rate(rate_samples, weight, variant: str) -> float:
    """Average meeting rate under selfishness or rate-aware seeding.

    variant 'selfishness': each contact relays with probability weight(rate),
    giving E[rate * weight(rate)]. variant 'placement': seeds are placed with
    propensity weight(rate), giving E[rate * weight] / E[weight].
    """
    lam = np.asarray(rate_samples, dtype=float)
    if lam.size == 0:
        raise ValueError("rate_samples must be nonempty")
    w = np.asarray([float(weight(x)) for x in lam])
    if variant == "selfishness":
        return float(np.mean(lam * w))
    if variant == "placement":
        wbar = float(np.mean(w))
        if wbar == 0.0:
            raise ValueError("degenerate weighting: mean weight is zero")
        return float(np.mean(lam * w) / wbar)
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class ArrivalSchedule:
    """Bulk requester arrivals (or departures, with negative sizes)."""

    events: tuple  # ((tau, delta_r), ...) with strictly ascending positive taus

    def __post_init__(self):
        taus = [e[0] for e in self.events]
        if any(t <= 0 for t in taus):
            raise ValueError("arrival times must be positive")
        if any(t2 <= t1 for t1, t2 in zip(taus, taus[1:])):
            raise ValueError("arrival times must be strictly ascending")


EMPTY_SCHEDULE = ArrivalSchedule(events=())


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    h: np.ndarray
    r: np.ndarray


def integrate_generalized(es: EffectiveState, p_c: float, mu: float,
                          lambda_d: float, h_sc0: float,
                          arrivals: ArrivalSchedule, t_grid,
                          rtol: float = 1e-10, atol: float = 1e-12) -> Trajectory:
    """Integrate the dissemination pair with holder drops and bulk arrivals.

        dh/dt = p_c*h*r*mu - (h - h_sc0)*lambda_d
        dr/dt = -h*r*mu  (+ jumps of delta_r at each arrival time)

    Small-cell copies never drop, hence the restoring term toward h_sc0.
    Grid points that coincide with an arrival report the post-jump state.
    """
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("t_grid must be a nonempty 1-d array")
    if grid[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError("t_grid must be strictly ascending")

    def rhs(_t, y):
        h, r = y
        return (p_c * h * r * mu - (h - h_sc0) * lambda_d, -h * r * mu)

    t_end = float(grid[-1])
    taus = [(tau, dr) for tau, dr in arrivals.events if tau <= t_end]
    h_out = np.empty_like(grid)
    r_out = np.empty_like(grid)
    h_out[0], r_out[0] = es.h0, es.r0

    y = [float(es.h0), float(es.r0)]
    seg_start = 0.0
    filled = 1
    for tau, delta in taus + [(t_end, 0.0)]:
        if tau > seg_start:
            sol = solve_ivp(rhs, (seg_start, tau), y, dense_output=True,
                            rtol=rtol, atol=atol)
            if not sol.success:
                raise RuntimeError(f"integration failed on [{seg_start:g}, {tau:g}]: {sol.message}")
            inside = grid[(grid > seg_start) & (grid <= tau)]
            if inside.size:
                vals = sol.sol(inside)
                h_out[filled:filled + inside.size] = vals[0]
                r_out[filled:filled + inside.size] = vals[1]
                filled += inside.size
            y = [float(sol.y[0, -1]), float(sol.y[1, -1])]
        if delta:
            y[1] += delta
            if y[1] < 0.0:
                raise ValueError(f"departure at tau={tau:g} drives requesters below zero")
            hit = np.nonzero(grid == tau)[0]
            if hit.size:  # report post-jump state at coinciding grid points
                h_out[hit[0]] = y[0]
                r_out[hit[0]] = y[1]
        seg_start = tau
    return Trajectory(times=grid, h=h_out, r=r_out)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write t,h,r rows at full double precision."""
    with open(path, "w", newline="") as fh:
        fh.write("t,h,r\n")
        for t, h, r in zip(traj.times, traj.h, traj.r):
            fh.write(f"{t:.17g},{h:.17g},{r:.17g}\n")
