import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from fpplab.rng import RngSeed, hash_uniforms, splitmix64
from fpplab.stats import (
    Estimate,
    combined_stderr,
    mean_estimate,
    proportion_estimate,
    wilson_interval,
)


def test_streams_are_reproducible_and_distinct():
    a = RngSeed(7, 3, "mu/n=4").generator().random(5)
    b = RngSeed(7, 3, "mu/n=4").generator().random(5)
    c = RngSeed(7, 4, "mu/n=4").generator().random(5)
    d = RngSeed(7, 3, "mu/n=8").generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_child_labels_nest():
    s = RngSeed(1, 2, "one-arm")
    assert s.child("edges").label == "one-arm/edges"
    assert s.child("edges").replica == 2


def test_splitmix64_reference_values():
    # first outputs of the reference splitmix64 generator started at state 0
    state = np.array([0x9E3779B97F4A7C15, 2 * 0x9E3779B97F4A7C15 % 2**64], dtype=np.uint64)
    out = splitmix64(state - np.uint64(0x9E3779B97F4A7C15))
    assert int(out[0]) == 0xE220A8397B1DCDAF
    assert int(out[1]) == 0x6E789E6AA1B965F4


def test_hash_uniforms_depend_only_on_point():
    rng = np.random.default_rng(0)
    pts = rng.random((50, 2))
    seed = RngSeed(3, 0, "x")
    u_all = hash_uniforms(pts, seed, "salt")
    u_sub = hash_uniforms(pts[10:20], seed, "salt")
    assert np.array_equal(u_all[10:20], u_sub)
    assert np.all((u_all >= 0) & (u_all < 1))


def test_hash_uniforms_are_uniform():
    pts = np.random.default_rng(1).random((20000, 2))
    u = hash_uniforms(pts, RngSeed(5), "ks")
    assert sps.kstest(u, "uniform").pvalue > 1e-3


@given(st.integers(0, 200), st.integers(1, 200))
def test_wilson_matches_closed_form(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    z = sps.norm.ppf(0.975)
    p = k / n
    c = (p + z * z / (2 * n)) / (1 + z * z / n)
    h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    assert lo == pytest.approx(max(0, c - h), abs=1e-12)
    assert hi == pytest.approx(min(1, c + h), abs=1e-12)
    assert lo <= p <= hi


def test_wilson_endpoints_exact():
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0


def test_mean_estimate_normal_interval():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    e = mean_estimate(x, "p")
    assert e.mean == 2.5
    assert e.stderr == pytest.approx(np.std(x, ddof=1) / 2)
    lo, hi = e.ci
    assert hi - e.mean == pytest.approx(1.959963984540054 * e.stderr)
    assert e.replicas == 4 and e.provenance == "p"


def test_constant_samples_have_zero_stderr():
    e = mean_estimate([1.0] * 5)
    assert e.stderr == 0.0 and e.ci == (1.0, 1.0)


def test_proportion_uses_wilson():
    e = proportion_estimate([True, False, False, False])
    assert e.mean == 0.25
    assert e.ci == wilson_interval(1, 4)


def test_combined_stderr():
    a = Estimate(0.0, 3.0, 10)
    b = Estimate(0.0, 4.0, 10)
    assert combined_stderr(a, b) == 5.0
