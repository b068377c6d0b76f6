"""Popularity sampling and diurnal workload generation."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from edgecache.workload import (
    DAY_SECONDS,
    IntensityProfile,
    PopularityModel,
    bounded_pareto_mean,
    bounded_pareto_pdf,
    build_diurnal_scenario,
    sample_popularity,
    write_profile_csv,
)

POP = PopularityModel(lo=10.0, hi=1000.0, alpha=0.5)


def test_popularity_model_validation():
    with pytest.raises(ValueError):
        PopularityModel(lo=0.0, hi=10.0, alpha=1.0)
    with pytest.raises(ValueError):
        PopularityModel(lo=20.0, hi=10.0, alpha=1.0)
    with pytest.raises(ValueError):
        PopularityModel(lo=1.0, hi=10.0, alpha=0.0)


def test_pdf_normalizes_and_mean_matches_quadrature():
    for alpha in (0.5, 1.0, 2.5):
        pop = PopularityModel(lo=10.0, hi=1000.0, alpha=alpha)
        total, _ = quad(lambda x: bounded_pareto_pdf(x, pop), pop.lo, pop.hi, limit=200)
        assert total == pytest.approx(1.0, rel=1e-9)
        mean_q, _ = quad(lambda x: x * bounded_pareto_pdf(x, pop), pop.lo, pop.hi, limit=200)
        assert bounded_pareto_mean(pop) == pytest.approx(mean_q, rel=1e-9)
    assert bounded_pareto_pdf(5.0, POP) == 0.0
    assert bounded_pareto_pdf(2000.0, POP) == 0.0


def test_sample_mean_within_three_standard_errors():
    n = 60000
    x = sample_popularity(POP, n, seed=1)
    mean = bounded_pareto_mean(POP)
    # variance of the continuous law bounds the sampling error well enough
    second, _ = quad(lambda v: v * v * bounded_pareto_pdf(v, POP), POP.lo, POP.hi, limit=200)
    se = math.sqrt((second - mean**2) / n)
    assert abs(x.mean() - mean) <= 3 * se + 0.5  # +0.5 absorbs integer rounding


def test_sample_bounded_support_and_determinism():
    x = sample_popularity(POP, 5000, seed=2)
    assert x.min() >= 10 and x.max() <= 1000
    assert x.dtype.kind == "i"
    y = sample_popularity(POP, 5000, seed=2)
    np.testing.assert_array_equal(x, y)
    assert sample_popularity(POP, 0, seed=3).size == 0


def test_heavier_tail_is_more_skewed():
    heavy = sample_popularity(PopularityModel(10, 1000, 0.5), 40000, seed=4)
    light = sample_popularity(PopularityModel(10, 1000, 2.0), 40000, seed=4)
    assert heavy.mean() > light.mean()
    q90_heavy, q90_light = np.quantile(heavy, 0.9), np.quantile(light, 0.9)
    assert q90_heavy > 3 * q90_light


def test_degenerate_popularity():
    pop = PopularityModel(lo=25.0, hi=25.0, alpha=1.0)
    assert bounded_pareto_mean(pop) == 25.0
    assert (sample_popularity(pop, 100, seed=0) == 25).all()


def test_profile_normalizes_peak_and_interpolates():
    prof = IntensityProfile(times=[0.0, 43200.0, 86400.0], values=[2.0, 8.0, 2.0])
    assert prof.values.max() == 1.0
    assert prof.value(43200.0) == 1.0
    assert prof.value(21600.0) == pytest.approx((0.25 + 1.0) / 2)
    # clamps outside the span
    assert prof.value(-5.0) == 0.25
    assert prof.value(1e9) == 0.25


def test_profile_validation():
    with pytest.raises(ValueError):
        IntensityProfile(times=[0.0], values=[1.0])
    with pytest.raises(ValueError):
        IntensityProfile(times=[0.0, 0.0], values=[1.0, 1.0])
    with pytest.raises(ValueError):
        IntensityProfile(times=[0.0, 1.0], values=[-1.0, 1.0])
    with pytest.raises(ValueError):
        IntensityProfile(times=[0.0, 1.0], values=[0.0, 0.0])


def test_profile_csv_roundtrip(tmp_path):
    prof = IntensityProfile(times=[0.0, 3600.0, 7200.0], values=[1.0, 4.0, 2.0])
    path = tmp_path / "p.csv"
    write_profile_csv(prof, path)
    back = IntensityProfile.from_csv(path)
    np.testing.assert_allclose(back.times, prof.times)
    np.testing.assert_allclose(back.values, prof.values)


def test_zero_intensity_span_creates_nothing():
    prof = IntensityProfile(times=[0.0, 40000.0, 40001.0, 86400.0],
                            values=[0.0, 0.0, 1.0, 1.0])
    contents = build_diurnal_scenario(prof, m_max=50.0, ttl=600.0, pop=POP, seed=5)
    assert all(c.creation_time >= 40000.0 for c in contents)
    assert len(contents) > 0


def test_diurnal_concurrency_tracks_target():
    # flat unit profile: stationary creations at rate m_max/ttl, so the
    # concurrent count away from the boundary has mean m_max (Little's law)
    prof = IntensityProfile(times=[0.0, 86400.0], values=[1.0, 1.0])
    m_max, ttl = 120.0, 3000.0
    rng_probe = np.linspace(ttl, DAY_SECONDS, 97)
    reps = 30
    counts = np.empty((reps, rng_probe.size))
    for k in range(reps):
        contents = build_diurnal_scenario(prof, m_max, ttl, POP, seed=100 + k)
        starts = np.array([c.creation_time for c in contents])
        for j, t in enumerate(rng_probe):
            counts[k, j] = np.sum((starts <= t) & (starts + ttl > t))
    avg = counts.mean()
    assert avg == pytest.approx(m_max, rel=0.05)


def test_diurnal_contents_are_well_formed():
    prof = IntensityProfile(times=[0.0, 43200.0, 86400.0], values=[0.2, 1.0, 0.2])
    contents = build_diurnal_scenario(prof, m_max=80.0, ttl=900.0, pop=POP, seed=6)
    assert len(contents) > 50
    ids = [c.content_id for c in contents]
    assert len(set(ids)) == len(ids)
    assert all(0.0 <= c.creation_time < DAY_SECONDS for c in contents)
    assert all(c.ttl == 900.0 for c in contents)
    assert all(10 <= c.r0_total <= 1000 for c in contents)
    times = [c.creation_time for c in contents]
    assert times == sorted(times)
    # the midday peak attracts more creations than the night
    mid = sum(1 for t in times if 32400 <= t < 54000)
    night = sum(1 for t in times if t < 21600)
    assert mid > 1.5 * night


def test_diurnal_validation():
    prof = IntensityProfile(times=[0.0, 86400.0], values=[1.0, 1.0])
    with pytest.raises(ValueError):
        build_diurnal_scenario(prof, 0.0, 600.0, POP, seed=0)
    with pytest.raises(ValueError):
        build_diurnal_scenario(prof, 10.0, 0.0, POP, seed=0)
