"""Synthetic contact traces between mobile nodes and small cells.

Nodes are numbered 0..n_mn-1 for mobile nodes and n_mn..n_mn+n_sc-1 for
small cells. Small cells never meet each other. Two generators are provided:
independent Poisson pair processes over a sampled rate matrix, and a
community waypoint mobility model with edge-triggered range contacts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class ContactEvent:
    t: float
    a: int
    b: int


@dataclass(frozen=True)
class ContactTrace:
    t: np.ndarray        # event times, ascending
    a: np.ndarray        # first node of each contact (a < b)
    b: np.ndarray
    horizon: float
    n_mn: int
    n_sc: int

    def __post_init__(self):
        for name, dtype in (("t", float), ("a", np.int64), ("b", np.int64)):
            arr = np.asarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_events(self) -> int:
        return int(self.t.size)

    @property
    def n_nodes(self) -> int:
        return self.n_mn + self.n_sc

    def events(self):
        for t, a, b in zip(self.t, self.a, self.b):
            yield ContactEvent(float(t), int(a), int(b))


@lru_cache(maxsize=64)
def _eligible_pairs(n_mn: int, n_sc: int):
    mask = eligible_pair_mask(n_mn, n_sc)
    ia, ib = np.nonzero(mask)
    ia.setflags(write=False)
    ib.setflags(write=False)
    return ia, ib


def eligible_pair_mask(n_mn: int, n_sc: int) -> np.ndarray:
    """Upper-triangle mask of pairs that can ever meet (SC-SC excluded)."""
    n = n_mn + n_sc
    iu = np.triu(np.ones((n, n), dtype=bool), k=1)
    both_sc = np.zeros((n, n), dtype=bool)
    both_sc[n_mn:, n_mn:] = True
    return iu & ~both_sc


@dataclass(frozen=True)
class RateMatrix:
    rates: np.ndarray    # symmetric (n,n), zero diagonal, zero SC-SC block
    n_mn: int
    n_sc: int
    mu_lambda: float     # configured mean, not the realized sample mean
    cv_lambda: float

    def eligible_mask(self) -> np.ndarray:
        return eligible_pair_mask(self.n_mn, self.n_sc)


def sample_rate_matrix(n_mn: int, n_sc: int, mu_lambda: float, cv_lambda: float,
                       seed) -> RateMatrix:
    """Draw i.i.d. pairwise meeting rates with the given mean and CV.

    cv_lambda = 0 gives the homogeneous matrix; otherwise rates are gamma
    distributed with shape 1/cv^2 and scale mu*cv^2.
    """
    if n_mn < 1:
        raise ValueError("need at least one mobile node")
    if mu_lambda <= 0:
        raise ValueError("mu_lambda must be positive")
    if cv_lambda < 0:
        raise ValueError("cv_lambda must be >= 0")
    rng = np.random.default_rng(seed)
    n = n_mn + n_sc
    rates = np.zeros((n, n))
    mask = eligible_pair_mask(n_mn, n_sc)
    m = int(mask.sum())
    if cv_lambda == 0.0:
        vals = np.full(m, mu_lambda)
    else:
        shape = 1.0 / cv_lambda**2
        vals = rng.gamma(shape, mu_lambda * cv_lambda**2, size=m)
    rates[mask] = vals
    rates += rates.T
    return RateMatrix(rates=rates, n_mn=n_mn, n_sc=n_sc,
                      mu_lambda=mu_lambda, cv_lambda=cv_lambda)


def generate_poisson_trace(rates: RateMatrix, horizon: float, seed,
                           max_events: int = 10_000_000) -> ContactTrace:
    """Superpose per-pair Poisson contact processes over [0, horizon]."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    ia, ib = _eligible_pairs(rates.n_mn, rates.n_sc)
    lam = rates.rates[ia, ib]
    expected = float(lam.sum() * horizon)
    if expected > max_events:
        raise ValueError(
            f"expected ~{expected:.3g} events exceeds the max_events cap ({max_events})")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam * horizon)
    total = int(counts.sum())
    t = rng.uniform(0.0, horizon, size=total)
    a = np.repeat(ia, counts)
    b = np.repeat(ib, counts)
    # stable sort keeps tied timestamps in pair-major order deterministically
    order = np.argsort(t, kind="stable")
    return ContactTrace(t=t[order], a=a[order], b=b[order], horizon=float(horizon),
                        n_mn=rates.n_mn, n_sc=rates.n_sc)


def generate_community_trace(n_mn: int, sc_grid: int, horizon: float, seed,
                             area_side: float = 1000.0, n_communities: int = 3,
                             local_fraction: float = 0.6, community_side=None,
                             sc_range: float = 100.0, d2d_range: float = 30.0,
                             speed_range=(0.5, 2.0), pause_range=(0.0, 60.0),
                             time_step: float = 1.0) -> ContactTrace:
    """Waypoint mobility with home communities; contacts are range crossings.

    Mobile nodes pick waypoints inside their home community with probability
    local_fraction, else anywhere; small cells sit on a regular grid. An
    event is emitted when a pair transitions from out-of-range to in-range
    (MN-MN within d2d_range, MN-SC within sc_range), stamped at the sampling
    step where the crossing is first seen.
    """
    g = math.isqrt(sc_grid)
    if g * g != sc_grid:
        raise ValueError(f"sc_grid must be a perfect square, got {sc_grid}")
    if n_mn < 1 or horizon <= 0 or time_step <= 0:
        raise ValueError("need n_mn >= 1, horizon > 0, time_step > 0")
    if not 0.0 <= local_fraction <= 1.0:
        raise ValueError("local_fraction must lie in [0, 1]")
    if community_side is None:
        community_side = area_side / 4.0
    if community_side > area_side:
        raise ValueError("community_side cannot exceed area_side")

    rng = np.random.default_rng(seed)
    lo = community_side / 2.0
    hi = area_side - community_side / 2.0
    centers = rng.uniform(lo, max(lo, hi), size=(n_communities, 2))
    home = np.arange(n_mn) % n_communities

    def draw_waypoints(idx):
        pts = np.empty((idx.size, 2))
        local = rng.random(idx.size) < local_fraction
        off = rng.uniform(-community_side / 2.0, community_side / 2.0, size=(idx.size, 2))
        pts[local] = centers[home[idx[local]]] + off[local]
        pts[~local] = rng.uniform(0.0, area_side, size=((~local).sum(), 2))
        return np.clip(pts, 0.0, area_side)

    all_idx = np.arange(n_mn)
    pos = draw_waypoints(all_idx)
    wp = draw_waypoints(all_idx)
    speed = rng.uniform(speed_range[0], speed_range[1], size=n_mn)
    pause = np.zeros(n_mn)

    if g > 0:
        cell = area_side / g
        gx, gy = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
        sc_pos = np.column_stack([(gx.ravel() + 0.5) * cell, (gy.ravel() + 0.5) * cell])
    else:
        sc_pos = np.empty((0, 2))
    n_sc = sc_grid

    ts, aa, bb = [], [], []
    tri = np.triu_indices(n_mn, k=1)

    def in_range(p):
        d_mm = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
        mm = (d_mm <= d2d_range)[tri] if d2d_range > 0 else np.zeros(tri[0].size, bool)
        if n_sc and sc_range > 0:
            d_ms = np.linalg.norm(p[:, None, :] - sc_pos[None, :, :], axis=-1)
            ms = d_ms <= sc_range
        else:
            ms = np.zeros((n_mn, n_sc), dtype=bool)
        return mm, ms

    prev_mm, prev_ms = in_range(pos)
    n_steps = int(math.floor(horizon / time_step))
    for step in range(1, n_steps + 1):
        t = step * time_step
        moving = pause <= 0.0
        if np.any(~moving):
            pause[~moving] -= time_step
        if np.any(moving):
            vec = wp[moving] - pos[moving]
            dist = np.linalg.norm(vec, axis=1)
            reach = speed[moving] * time_step
            arrive = dist <= reach
            mv = np.nonzero(moving)[0]
            go = mv[~arrive]
            pos[go] += vec[~arrive] * (reach[~arrive] / np.maximum(dist[~arrive], 1e-12))[:, None]
            hit = mv[arrive]
            if hit.size:
                pos[hit] = wp[hit]
                pause[hit] = rng.uniform(pause_range[0], pause_range[1], size=hit.size)
                wp[hit] = draw_waypoints(hit)
                speed[hit] = rng.uniform(speed_range[0], speed_range[1], size=hit.size)
        cur_mm, cur_ms = in_range(pos)
        new_mm = cur_mm & ~prev_mm
        for k in np.nonzero(new_mm)[0]:
            ts.append(t)
            aa.append(int(tri[0][k]))
            bb.append(int(tri[1][k]))
        ni, nj = np.nonzero(cur_ms & ~prev_ms)
        for i, j in zip(ni, nj):
            ts.append(t)
            aa.append(int(i))
            bb.append(int(n_mn + j))
        prev_mm, prev_ms = cur_mm, cur_ms

    t_arr = np.asarray(ts, dtype=float)
    a_arr = np.asarray(aa, dtype=np.int64)
    b_arr = np.asarray(bb, dtype=np.int64)
    order = np.lexsort((b_arr, a_arr, t_arr))
    return ContactTrace(t=t_arr[order], a=a_arr[order], b=b_arr[order],
                        horizon=float(horizon), n_mn=n_mn, n_sc=n_sc)


@dataclass(frozen=True)
class TraceStats:
    mu_hat: float        # mean per-pair contact rate over eligible pairs
    cv_hat: float        # dispersion of per-pair rates across pairs
    pair_rates: np.ndarray  # symmetric (n,n) empirical rate matrix


def trace_stats(trace: ContactTrace) -> TraceStats:
    """Estimate per-pair contact rates; zero-event pairs count toward the mean."""
    if trace.n_events == 0:
        raise ValueError("empty trace")
    n = trace.n_nodes
    counts = np.zeros((n, n))
    np.add.at(counts, (trace.a, trace.b), 1.0)
    counts += counts.T
    rates = counts / trace.horizon
    vals = rates[eligible_pair_mask(trace.n_mn, trace.n_sc)]
    mu_hat = float(vals.mean())
    cv_hat = float(vals.std(ddof=1) / mu_hat) if mu_hat > 0 and vals.size > 1 else 0.0
    return TraceStats(mu_hat=mu_hat, cv_hat=cv_hat, pair_rates=rates)


def save_trace(trace: ContactTrace, csv_path, sidecar_path, params: dict | None = None,
               seed=None) -> None:
    """Write the event CSV plus a JSON sidecar with population and parameters."""
    with open(csv_path, "w", newline="") as fh:
        fh.write("t,a,b\n")
        for t, a, b in zip(trace.t, trace.a, trace.b):
            fh.write(f"{t:.9f},{a},{b}\n")
    meta = {
        "n_mn": trace.n_mn,
        "n_sc": trace.n_sc,
        "horizon": trace.horizon,
        "n_events": trace.n_events,
        "params": params or {},
        "seed": seed,
    }
    with open(sidecar_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_trace(csv_path, sidecar_path) -> ContactTrace:
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    if meta.get("n_events") == 0:
        data = np.empty((0, 3))
    else:
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = data.reshape(0, 3)
    return ContactTrace(t=data[:, 0], a=data[:, 1].astype(np.int64),
                        b=data[:, 2].astype(np.int64), horizon=float(meta["horizon"]),
                        n_mn=int(meta["n_mn"]), n_sc=int(meta["n_sc"]))
