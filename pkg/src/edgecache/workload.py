"""Content popularity and request-arrival workloads.

Popularity (requesters per content) follows a bounded Pareto law sampled by
inverse CDF. Daily traffic shape comes from a piecewise-linear intensity
profile driving an inhomogeneous Poisson process of content creations,
scaled so the peak concurrent-content count matches a target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ContentClass


@dataclass(frozen=True)
class PopularityModel:
    lo: float     # smallest request population
    hi: float     # largest request population
    alpha: float  # tail exponent; smaller = heavier tail

    def __post_init__(self):
        if not 0 < self.lo <= self.hi:
            raise ValueError("need 0 < lo <= hi")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def bounded_pareto_pdf(x, pop: PopularityModel) -> float:
    if x < pop.lo or x > pop.hi:
        return 0.0
    if pop.lo == pop.hi:
        return math.inf
    a = pop.alpha
    return (a * pop.lo**a * x**(-a - 1.0)) / (1.0 - (pop.lo / pop.hi)**a)


def bounded_pareto_mean(pop: PopularityModel) -> float:
    lo, hi, a = pop.lo, pop.hi, pop.alpha
    if lo == hi:
        return float(lo)
    norm = 1.0 - (lo / hi)**a
    if a == 1.0:
        return lo * math.log(hi / lo) / norm
    return (lo**a * a / (norm * (a - 1.0))) * (lo**(1.0 - a) - hi**(1.0 - a))


def sample_popularity(pop: PopularityModel, n: int, seed) -> np.ndarray:
    """Integer request populations drawn by inverse CDF, clamped to [lo, hi]."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    if pop.lo == pop.hi:
        return np.full(n, int(round(pop.lo)), dtype=int)
    u = rng.random(n)
    a = pop.alpha
    tail = 1.0 - (pop.lo / pop.hi)**a
    x = pop.lo / (1.0 - u * tail)**(1.0 / a)
    return np.clip(np.round(x), round(pop.lo), round(pop.hi)).astype(int)


@dataclass(frozen=True)
class IntensityProfile:
    """Piecewise-linear daily intensity, normalized to peak 1."""

    times: np.ndarray      # ascending breakpoints in seconds within the day
    values: np.ndarray     # nonnegative intensities at the breakpoints

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 2 or t.shape != v.shape:
            raise ValueError("profile needs matching 1-d arrays with >= 2 breakpoints")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoint times must be strictly ascending")
        if np.any(v < 0):
            raise ValueError("intensities must be >= 0")
        peak = float(v.max())
        if peak <= 0:
            raise ValueError("profile must be positive somewhere")
        v = v / peak
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def value(self, t):
        """Interpolated intensity; clamps outside the breakpoint span."""
        return np.interp(t, self.times, self.values)

    @classmethod
    def from_csv(cls, path) -> "IntensityProfile":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError("profile CSV needs exactly the columns time_s,intensity")
        return cls(times=data[:, 0], values=data[:, 1])


DAY_SECONDS = 86400.0


def build_diurnal_scenario(profile: IntensityProfile, m_max: float, ttl: float,
                           pop: PopularityModel, seed,
                           day_seconds: float = DAY_SECONDS) -> list[ContentClass]:
    """Create one day of contents whose peak concurrency approaches m_max.

    Creations form an inhomogeneous Poisson process with rate
    intensity(t) * m_max / ttl (thinning); each content lives for ttl, so the
    expected number alive at the peak is m_max. Popularities are sampled
    i.i.d. from the bounded Pareto model.
    """
    if m_max <= 0 or ttl <= 0:
        raise ValueError("need m_max > 0 and ttl > 0")
    rng = np.random.default_rng(seed)
    lam_max = m_max / ttl
    t = 0.0
    times = []
    while True:
        t += rng.exponential(1.0 / lam_max)
        if t >= day_seconds:
            break
        if rng.random() < float(profile.value(t)):
            times.append(t)
    sizes = sample_popularity(pop, len(times), rng)
    return [ContentClass(content_id=f"content-{i:05d}", r0_total=int(max(sz, 1)),
                         ttl=float(ttl), creation_time=float(tc))
            for i, (tc, sz) in enumerate(zip(times, sizes))]


def write_profile_csv(profile: IntensityProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("time_s,intensity\n")
        for t, v in zip(profile.times, profile.values):
            fh.write(f"{t:.17g},{v:.17g}\n")
