import json
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from treetail import (
    Constant,
    Exponential,
    LogNormal,
    Pareto,
    Shifted,
    Uniform,
    ZetaTail,
    dist_from_json,
)
from treetail.errors import ConfigError, DomainError

RNG = lambda: np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# exact moments
# ---------------------------------------------------------------------------

def test_constant_moments():
    c = Constant(2.0)
    assert c.moment(3) == 8.0
    assert c.moment(0) == 1.0
    assert c.mean() == 2.0
    assert Constant(0.0).moment(-1) == math.inf
    assert Constant(-1.5).moment(2) == 2.25
    assert Constant(-1.5).moment(0.5) is None


def test_uniform_moments():
    assert Uniform(0.0, 1.0).moment(2) == pytest.approx(1.0 / 3.0, rel=1e-15)
    # (b^3 - a^3) / (3 (b - a)) with a = -1, b = 2
    assert Uniform(-1.0, 2.0).moment(2) == pytest.approx(1.0, rel=1e-15)
    assert Uniform(-1.0, 2.0).moment(0.5) is None
    assert Uniform(1.0, 3.0).moment(-1) == pytest.approx(math.log(3.0) / 2.0, rel=1e-15)
    assert Uniform(0.0, 1.0).moment(-1) == math.inf
    assert Uniform(0.0, 0.6).moment(2.5) == pytest.approx(0.6 ** 2.5 / 3.5, rel=1e-15)


def test_exponential_moments():
    e = Exponential(2.0)
    assert e.mean() == 0.5
    assert e.moment(2) == pytest.approx(math.gamma(3.0) / 4.0, rel=1e-15)
    assert e.moment(-0.5) == pytest.approx(math.sqrt(2.0 * math.pi), rel=1e-12)
    assert e.moment(-1) == math.inf


def test_pareto_moments():
    p = Pareto(2.5, 1.0)
    assert p.mean() == pytest.approx(5.0 / 3.0, rel=1e-15)
    assert p.moment(2) == pytest.approx(5.0, rel=1e-15)
    assert p.moment(2.5) == math.inf
    assert Pareto(2.0, 3.0).moment(1) == pytest.approx(6.0, rel=1e-15)


def test_zeta_tail_moments_against_zeta_values():
    """E[N] = sum_k P(N >= k) = zeta(2) when the survival is k^-2."""
    z = ZetaTail(2.0)
    assert z.mean() == pytest.approx(zeta(2, 1), abs=1e-12)
    assert z.moment(2) == math.inf
    # E[1/N] = zeta(3) + zeta(2) - 2, by telescoping 1/(n (n+1)^2)
    assert z.moment(-1) == pytest.approx(zeta(3, 1) + zeta(2, 1) - 2.0, abs=1e-12)
    z3 = ZetaTail(3.0)
    # E[N] = zeta(3), E[N^2] = 2 zeta(2) - zeta(3) via sum (2k+1) (k+1)^-3
    assert z3.mean() == pytest.approx(zeta(3, 1), abs=1e-12)
    assert z3.moment(2) == pytest.approx(2.0 * zeta(2, 1) - zeta(3, 1), abs=1e-11)


def test_lognormal_moments():
    ln = LogNormal(0.0, 1.0)
    assert ln.mean() == pytest.approx(math.exp(0.5), rel=1e-15)
    assert ln.moment(2) == pytest.approx(math.e ** 2, rel=1e-15)
    assert ln.ccdf(1.0) == pytest.approx(0.5, abs=1e-15)


def test_shifted_moments():
    s = Shifted(Exponential(1.0), -0.5)
    assert s.mean() == 0.5
    # E[(X - 1/2)^2] = E X^2 - E X + 1/4 = 2 - 1 + 0.25
    assert s.moment(2) == pytest.approx(1.25, rel=1e-14)
    assert s.moment(0.5) is None
    assert s.support_min() == -0.5
    heavy = Shifted(Pareto(2.0, 1.0), 1.0)
    assert heavy.moment(2) == math.inf
    assert heavy.tail_index() == 2.0
    assert heavy.tail_scale() == 1.0


# ---------------------------------------------------------------------------
# ccdf / quantile
# ---------------------------------------------------------------------------

def test_pareto_ccdf_quantile_roundtrip():
    p = Pareto(2.0, 1.0)
    assert p.ccdf(2.0) == pytest.approx(0.25, rel=1e-15)
    assert p.ccdf(0.5) == 1.0
    x = p.quantile(1.0 - 1e-3)
    assert p.ccdf(x) == pytest.approx(1e-3, rel=1e-12)


def test_zeta_tail_ccdf_is_a_step_function():
    z = ZetaTail(2.0)
    assert z.ccdf(0.5) == 1.0
    assert z.ccdf(1.0) == 0.25
    assert z.ccdf(3.0) == z.ccdf(3.7) == 1.0 / 16.0
    assert z.ccdf(-2.0) == 1.0


def test_zeta_tail_quantile_hits_atom_boundaries():
    z = ZetaTail(2.0)
    assert z.quantile(0.0) == 1.0
    assert z.quantile(0.75) == 1.0  # P(N = 1) = 1 - 2^-2 exactly
    assert z.quantile(0.7500001) == 2.0
    assert z.quantile(1.0 - 1e-6) == pytest.approx(999.0, abs=1.0)


def test_uniform_ccdf_clipping():
    u = Uniform(1.0, 3.0)
    assert u.ccdf(0.0) == 1.0
    assert u.ccdf(2.0) == 0.5
    assert u.ccdf(5.0) == 0.0


@given(st.floats(min_value=0.0, max_value=0.999999))
def test_continuous_quantile_inverts_ccdf(u):
    for dist in (Pareto(2.0, 1.0), Exponential(1.3), Uniform(0.5, 2.5)):
        x = dist.quantile(u)
        assert dist.ccdf(x) == pytest.approx(1.0 - u, abs=1e-9)


@given(st.floats(min_value=0.0, max_value=1.0 - 1e-9),
       st.floats(min_value=0.0, max_value=1.0 - 1e-9))
@settings(max_examples=50)
def test_quantiles_are_monotone(u1, u2):
    lo, hi = sorted((u1, u2))
    for dist in (Pareto(1.5, 2.0), Exponential(0.7), ZetaTail(2.0), LogNormal(0.1, 0.4)):
        assert dist.quantile(lo) <= dist.quantile(hi)


# ---------------------------------------------------------------------------
# sampling agrees with the analytic law
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("dist", [
    Uniform(0.0, 2.0),
    Exponential(1.5),
    Pareto(2.5, 1.0),
    LogNormal(0.0, 0.5),
])
def test_samples_match_cdf(dist):
    samples = dist.sample_many(RNG(), 20_000)
    stat = scipy.stats.kstest(samples, lambda x: 1.0 - np.asarray(dist.ccdf(x))).statistic
    assert stat < 0.015


def test_zeta_tail_samples_match_pmf():
    z = ZetaTail(2.0)
    samples = z.sample_many(RNG(), 50_000)
    assert samples.min() >= 1.0
    assert np.all(samples == np.floor(samples))
    for k in (1, 2, 3, 10):
        observed = float(np.mean(samples > k))
        expected = z.ccdf(float(k))
        se = math.sqrt(expected * (1 - expected) / samples.size)
        assert abs(observed - expected) < 5 * se + 1e-9


def test_sampling_is_reproducible():
    d = Pareto(2.0, 1.0)
    a = d.sample_many(np.random.default_rng(7), 100)
    b = d.sample_many(np.random.default_rng(7), 100)
    np.testing.assert_array_equal(a, b)
    assert d.sample(np.random.default_rng(7)) == a[0]


# ---------------------------------------------------------------------------
# structure and validation
# ---------------------------------------------------------------------------

def test_tail_metadata():
    assert Pareto(2.0, 1.5).tail_index() == 2.0
    assert Pareto(2.0, 1.5).tail_scale() == pytest.approx(1.5 ** 2)
    assert ZetaTail(2.0).tail_index() == 2.0
    assert ZetaTail(2.0).tail_scale() == 1.0
    assert Exponential(1.0).tail_index() is None
    assert Uniform(0.0, 1.0).tail_scale() is None
    assert LogNormal(0.0, 1.0).tail_index() is None


def test_moment_is_finite_uses_tail_index():
    p = Pareto(2.0, 1.0)
    assert p.moment_is_finite(1.9)
    assert not p.moment_is_finite(2.0)
    assert Exponential(1.0).moment_is_finite(50.0)


def test_integer_valuedness():
    assert ZetaTail(2.0).is_integer_valued()
    assert Constant(3.0).is_integer_valued()
    assert not Constant(2.5).is_integer_valued()
    assert not Uniform(0.0, 1.0).is_integer_valued()


def test_domain_validation():
    with pytest.raises(DomainError):
        Uniform(1.0, 1.0)
    with pytest.raises(DomainError):
        Exponential(0.0)
    with pytest.raises(DomainError):
        Pareto(-1.0, 1.0)
    with pytest.raises(DomainError):
        Pareto(2.0, 0.0)
    with pytest.raises(DomainError):
        ZetaTail(0.0)
    with pytest.raises(DomainError):
        LogNormal(0.0, 0.0)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("dist", [
    Constant(1.0),
    Uniform(0.0, 0.6),
    Exponential(2.0),
    Pareto(2.5, 1.0),
    ZetaTail(2.0),
    LogNormal(-0.1, 0.9),
    Shifted(Pareto(2.0, 1.0), -0.25),
])
def test_json_roundtrip(dist):
    doc = dist.to_json()
    json.dumps(doc)  # must be serializable as-is
    back = dist_from_json(doc)
    assert back == dist
    assert back.to_json() == doc


def test_from_json_rejects_malformed_documents():
    with pytest.raises(ConfigError):
        dist_from_json({"kind": "gaussian", "params": {}})
    with pytest.raises(ConfigError):
        dist_from_json({"kind": "pareto", "params": {"alpha": 2.0}})
    with pytest.raises(ConfigError):
        dist_from_json({"kind": "pareto", "params": {"alpha": 2.0, "x_min": 1.0, "junk": 0}})
    with pytest.raises(ConfigError):
        dist_from_json({"kind": "pareto", "params": {"alpha": 2.0, "x_min": 1.0}, "extra": 1})
    with pytest.raises(ConfigError):
        dist_from_json(["pareto"])
    # domain violations surface as DomainError, not ConfigError
    with pytest.raises(DomainError):
        dist_from_json({"kind": "exponential", "params": {"rate": -1.0}})
