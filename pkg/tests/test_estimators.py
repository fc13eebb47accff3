import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fpplab.estimators import (
    DegenerateFit,
    ball_shape,
    chamfer_ball_vertices,
    check_renormalization,
    comparison_scales,
    covariance_defect,
    estimate_crossing,
    estimate_ind,
    estimate_mu,
    estimate_one_arm,
    fit_exponent,
    greedy_cover_count,
    hausdorff_support,
    pair_geometry,
    support_directions,
    support_function,
)
from fpplab.metric import RectSpec
from fpplab.models import ModelSpec
from fpplab.stats import combined_stderr, proportion_estimate

CONST = ModelSpec("constant", spacing=0.25, margin=1.0)
BOND = ModelSpec("bernoulli-lattice", p=0.25, margin=0.0)


# -- mu ------------------------------------------------------------------------

def test_mu_constant_is_one_with_zero_stderr():
    curve = estimate_mu(CONST, (1.0, 0.0), [4, 8], 3, seed=1)
    for n in (4, 8):
        e = curve.estimate(n)
        assert e.mean == 1.0 and e.stderr == 0.0
    assert curve.triangle_violations == 0


def test_mu_constant_diagonal_is_chamfer_exact():
    v = (math.sqrt(0.5), math.sqrt(0.5))
    curve = estimate_mu(CONST, v, [2 * math.sqrt(2)], 2, seed=0)
    assert curve.points[0][1].mean == pytest.approx(1.0, rel=1e-12)


def test_mu_lattice_endpoints():
    for p, value in ((0.0, 1.0), (1.0, 0.0)):
        curve = estimate_mu(BOND.with_(p=p), (1.0, 0.0), [4, 8, 16], 5, seed=2)
        assert all(e.mean == value and e.stderr == 0.0 for _, e in curve.points)


def test_mu_streams_are_independent_per_n():
    curve = estimate_mu(BOND, (1.0, 0.0), [8, 16], 20, seed=3)
    assert curve.estimate(8).provenance != curve.estimate(16).provenance
    assert "stream=mu/n=8" in curve.estimate(8).provenance


def test_mu_threads_do_not_change_results():
    a = estimate_mu(BOND, (1.0, 0.0), [8], 12, seed=4, threads=1)
    b = estimate_mu(BOND, (1.0, 0.0), [8], 12, seed=4, threads=2)
    assert np.array_equal(a.samples[8], b.samples[8])


def test_mu_input_validation():
    with pytest.raises(ValueError, match="unit"):
        estimate_mu(CONST, (1.0, 1.0), [4], 2, seed=0)
    with pytest.raises(ValueError, match="increasing"):
        estimate_mu(CONST, (1.0, 0.0), [8, 4], 2, seed=0)
    with pytest.raises(ValueError, match="replicas"):
        estimate_mu(CONST, (1.0, 0.0), [4], 1, seed=0)


# -- exponent fit ------------------------------------------------------------------

def test_fit_exact_power_law():
    pts = [(r, 0.8 * r ** -0.3) for r in (2, 4, 8, 16)]
    e = fit_exponent(pts)
    assert e.mean == pytest.approx(0.3, abs=1e-12)


def test_fit_refuses_degenerate_curves():
    with pytest.raises(DegenerateFit):
        fit_exponent([(2, 0.5), (4, 0.0), (8, 0.1)])
    with pytest.raises(DegenerateFit):
        fit_exponent([(2, 0.5), (4, 0.3)])


def test_fit_window_selects_points():
    pts = [(1, 0.99), (2, 0.5), (4, 0.25), (8, 0.125)]
    assert fit_exponent(pts, (1, 4)).mean == pytest.approx(1.0)


def test_fit_interval_coverage():
    # parametric bootstrap: CI should cover the true exponent about 95% of the time
    rng = np.random.default_rng(11)
    radii, a, n = np.array([4, 8, 16, 32]), 0.4, 4000
    hits = 0
    trials = 400
    for _ in range(trials):
        pts = [(r, proportion_estimate(rng.random(n) < 0.9 * r ** -a)) for r in radii]
        lo, hi = fit_exponent(pts).ci
        hits += lo <= a <= hi
    assert 0.90 <= hits / trials <= 0.99


# -- one-arm and crossings ------------------------------------------------------

def test_one_arm_lattice_endpoints():
    curve = estimate_one_arm(BOND.with_(p=1.0), [3, 5, 7], 4, seed=0)
    assert all(e.mean == 1.0 for _, e in curve.points)
    assert curve.exponent is None and "refused" in curve.note
    curve = estimate_one_arm(BOND.with_(p=0.0), [3, 5], 4, seed=0)
    assert all(e.mean == 0.0 for _, e in curve.points)


def test_one_arm_audit_and_monotone_decay():
    curve = estimate_one_arm(BOND.with_(p=0.5), [3, 6, 12], 300, seed=5, audit=True)
    est = [e for _, e in curve.points]
    for a, b in zip(est, est[1:]):  # independent streams: monotone up to noise
        assert b.mean <= a.mean + 3 * combined_stderr(a, b)
    assert est[2].mean < est[0].mean
    assert curve.exponent is not None


def test_one_arm_colouring_audit():
    m = ModelSpec("voronoi", p=0.5, spacing=0.25)
    curve = estimate_one_arm(m, [2.0, 4.0], 20, seed=6, audit=True)
    assert len(curve.points) == 2


def test_crossing_probability_constant_models():
    white = ModelSpec("constant", density=0.0, spacing=0.5)
    black = ModelSpec("constant", density=1.0, spacing=0.5)
    rect = RectSpec((0, 0), (2, 1), 0)
    assert estimate_crossing(white, rect, [1.0], 0, 3, seed=0)[0][1].mean == 1.0
    assert estimate_crossing(black, rect, [1.0], 0, 3, seed=0)[0][1].mean == 0.0
    with pytest.raises(ValueError, match="lattice"):
        estimate_crossing(BOND, rect, [1.0], 0, 3, seed=0)


def test_voronoi_square_crossing_self_dual_at_half():
    m = ModelSpec("voronoi", p=0.5, spacing=0.25)
    e = estimate_crossing(m, RectSpec((0, 0), (1, 1)), [6.0], 0, 300, seed=7)[0][1]
    assert abs(e.mean - 0.5) < 4 * e.stderr + 0.05


# -- quasi-independence and renormalization ----------------------------------------

def test_covariance_defect_exact_values():
    a = np.array([1, 1, 0, 0], bool)
    assert covariance_defect(a, a).mean == pytest.approx(0.25)
    b = np.array([1, 0, 1, 0], bool)
    assert covariance_defect(a, b).mean == 0.0


def test_covariance_defect_stderr_against_bootstrap():
    rng = np.random.default_rng(0)
    z = rng.random(4000)
    a, b = z < 0.4, (z + 0.3 * rng.random(4000)) < 0.5
    e = covariance_defect(a, b)
    boot = []
    for _ in range(300):
        i = rng.integers(0, 4000, 4000)
        boot.append(covariance_defect(a[i], b[i]).mean)
    assert e.stderr == pytest.approx(np.std(boot), rel=0.2)


def test_pair_geometry_is_disjoint():
    grid, a, b = pair_geometry(BOND, 4.0, 2.0)
    assert b.center[0] - a.center[0] - 2 * a.outer == pytest.approx(2.0)


def test_independent_lattice_regions_have_no_defect():
    e = estimate_ind(BOND.with_(p=0.5), 2.0, 8.0, 0.3, 400, seed=3)
    assert e.mean <= 4 * e.stderr + 1e-12


@pytest.mark.parametrize(
    "Q,R,S,N,n", [(1, 2, 31, 6, 1), (4, 8, 401, 20, 3), (2, 4, 41, 4, 0), (2, 4, 101, 10, 1)]
)
def test_comparison_scales(Q, R, S, N, n):
    assert comparison_scales(Q, R, S) == (N, n)


@given(st.floats(1.5, 30.0))
def test_greedy_cover_beats_arc_lower_bound(rho):
    # one unit disc meets at most an arc of angle 4 asin(1/(2 rho)) of the circle
    lower = math.ceil(2 * math.pi / (4 * math.asin(min(1.0, 1 / (2 * rho)))))
    k = greedy_cover_count(rho, 2)
    assert lower <= k <= 2 * lower + 2


def test_greedy_cover_3d_area_bound():
    rho = 4.0
    # a unit ball meets the sphere in a cap of area 2 pi rho h with h = 1/(2 rho)
    lower = math.ceil(4 * math.pi * rho ** 2 / (math.pi))
    assert greedy_cover_count(rho, 3, resolution=0.2) >= lower


def test_renormalization_vacuous_never_violated():
    rep = check_renormalization(BOND, 2, 4, 41, 0.1, 50, seed=0)
    assert (rep.N, rep.n, rep.vacuous) == (4, 0, True)
    assert rep.rhs == 1.0 and rep.verdict == "holds"
    assert len(rep.explanations) >= 3


def test_renormalization_reports_covering_counts():
    rep = check_renormalization(BOND, 2, 4, 101, 0.1, 50, seed=0)
    assert (rep.N, rep.n) == (10, 1)
    assert len(rep.covering_counts) == 10
    assert rep.c_d == pytest.approx(max(rep.covering_counts) / 101)
    assert rep.verdict in ("holds", "inconclusive", "violated")


# -- ball shape ---------------------------------------------------------------------

def test_support_function_of_square():
    sq = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], float)
    dirs = support_directions(8)
    h = support_function(sq, dirs)
    assert h[0] == pytest.approx(1.0) and h[1] == pytest.approx(math.sqrt(2))
    assert hausdorff_support(h, h) == 0.0


def test_chamfer_ball_is_regular_octagon_on_unit_circle():
    v = chamfer_ball_vertices()
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)
    assert len(v) == 8


def test_ball_shape_constant_density_matches_chamfer():
    m = ModelSpec("constant", spacing=0.25, margin=0.5)
    fit = ball_shape(m, [4.0, 8.0], 2, seed=0)
    assert fit.regime == "norm"
    kh = support_function(chamfer_ball_vertices(), support_directions())
    for t in fit.t_list:
        assert hausdorff_support(fit.mean_support[t], kh) <= 2 * m.spacing / t


def test_ball_shape_white_plane_is_vanishing():
    fit = ball_shape(ModelSpec("constant", density=0.0, spacing=0.5, margin=0.5), [4.0], 2, seed=0)
    assert fit.regime == "vanishing" and fit.hull is None


def test_estimators_reproducible():
    a = estimate_one_arm(BOND.with_(p=0.5), [3, 6], 30, seed=9)
    b = estimate_one_arm(BOND.with_(p=0.5), [3, 6], 30, seed=9)
    assert [e for _, e in a.points] == [e for _, e in b.points]
