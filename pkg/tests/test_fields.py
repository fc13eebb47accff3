import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fpplab import fields
from fpplab.fields import (
    BudgetError,
    EmbeddingError,
    GridSpec,
    KernelSpec,
    ScalarField,
    TruncationError,
    _bf_basis,
    bargmann_fock_tail,
    bargmann_fock_truncation,
    embedding_spectrum,
    empirical_covariance,
    sample_bargmann_fock,
    sample_stationary_spectral,
)
from fpplab.rng import RngSeed
from oracles import poisson_tail_direct


# -- grids -------------------------------------------------------------------

@given(st.floats(0.3, 10), st.sampled_from([0.25, 0.5, 1.0]))
def test_centered_grid_is_symmetric_with_center_node(w, h):
    g = GridSpec.centered([w, w], h)
    assert all(e % 2 == 1 for e in g.extents)
    mid = tuple(e // 2 for e in g.extents)
    assert np.allclose(g.position(mid), 0.0)
    assert g.upper[0] >= w - 1e-9 and g.origin[0] <= -w + 1e-9


def test_grid_rejects_bad_specs():
    with pytest.raises(ValueError, match="spacing"):
        GridSpec(2, (0, 0), 0.0, (3, 3))
    with pytest.raises(ValueError, match="dimension"):
        GridSpec(4, (0,) * 4, 1.0, (2,) * 4)


def test_budget(monkeypatch):
    monkeypatch.setattr(fields, "MAX_NODES", 100)
    with pytest.raises(BudgetError):
        GridSpec(2, (0, 0), 1.0, (11, 10))
    GridSpec(2, (0, 0), 1.0, (10, 10))


def test_scalar_field_rejects_nonfinite():
    g = GridSpec(2, (0, 0), 1.0, (2, 2))
    with pytest.raises(ValueError, match="finite"):
        ScalarField(g, np.array([[0, np.nan], [0, 0]]))


# -- Bargmann-Fock series -------------------------------------------------------

@pytest.mark.parametrize("r,n", [(0.5, 0), (1.0, 2), (2.0, 10), (3.0, 9), (5.0, 60), (6.0, 30)])
def test_bf_tail_matches_direct_poisson_sum(r, n):
    assert bargmann_fock_tail(r, n) == pytest.approx(poisson_tail_direct(r * r, n), rel=1e-9, abs=1e-300)


@given(st.floats(0.1, 8.0), st.sampled_from([1e-3, 1e-6, 1e-9]))
def test_truncation_is_minimal(r, tol):
    n = bargmann_fock_truncation(r, tol)
    assert bargmann_fock_tail(r, n) <= tol
    assert n == 0 or bargmann_fock_tail(r, n - 1) > tol


def test_bf_basis_matches_direct_formula():
    t = np.array([-2.5, -1.0, 0.0, 0.3, 1.7])
    u = _bf_basis(t, 6)
    for i in range(7):
        ref = np.exp(-t * t / 2) * t ** i / math.sqrt(math.factorial(i))
        assert np.allclose(u[i], ref, rtol=1e-12, atol=1e-300)


def test_bf_series_covariance_is_exact_up_to_tail():
    # Var f(x) = sum_i u_i(x1)^2 sum_{j <= N-i} u_j(x2)^2 = 1 - tail
    g = GridSpec.centered([2.0, 2.0], 0.5)
    n = bargmann_fock_truncation(g.max_radius(), 1e-8)
    u1 = _bf_basis(g.axis_coords(0), n)
    u2 = _bf_basis(g.axis_coords(1), n)
    i, j = np.indices((n + 1, n + 1))
    mask = (i + j <= n).astype(float)
    var = np.einsum("ix,ij,jy->xy", u1 ** 2, mask, u2 ** 2)
    assert np.all(np.abs(var - 1) <= 1e-8)


def test_bf_truncation_errors():
    g = GridSpec.centered([3.0, 3.0], 0.5)
    with pytest.raises(TruncationError) as exc:
        sample_bargmann_fock(g, 3, RngSeed(0))
    assert exc.value.required > 3
    with pytest.raises(ValueError, match="two-dimensional"):
        sample_bargmann_fock(GridSpec.centered([1, 1, 1], 0.5), None, RngSeed(0))


def test_bf_budget(monkeypatch):
    monkeypatch.setattr(fields, "MAX_NODES", 200)
    with pytest.raises(BudgetError):
        sample_bargmann_fock(GridSpec.centered([5.0, 5.0], 1.0), None, RngSeed(0))


def test_bf_reproducible():
    g = GridSpec.centered([2.0, 2.0], 0.5)
    a = sample_bargmann_fock(g, None, RngSeed(4, 1, "f"))
    b = sample_bargmann_fock(g, None, RngSeed(4, 1, "f"))
    assert np.array_equal(a.values, b.values)


# -- spectral sampler -------------------------------------------------------------

def test_embedding_spectrum_nonnegative_for_gaussian():
    g = GridSpec.centered([6.0, 6.0], 0.5)
    lam = embedding_spectrum(g, KernelSpec("gaussian", 1.0), 2)
    assert lam.min() > -1e-10


def test_embedding_failure_is_hard_error():
    # a triangle-wave kernel with a long range is not positive definite on a small torus
    k = KernelSpec("tabulated", radii=(0.0, 3.0, 6.0), values=(1.0, -0.9, 0.0))
    g = GridSpec(2, (0, 0), 1.0, (4, 4))
    with pytest.raises(EmbeddingError) as exc:
        sample_stationary_spectral(g, k, RngSeed(0))
    assert exc.value.suggested_padding == 4


def test_padding_must_be_at_least_two():
    with pytest.raises(ValueError):
        embedding_spectrum(GridSpec(2, (0, 0), 1.0, (4, 4)), KernelSpec(), 1)


def test_tabulated_kernel():
    k = KernelSpec("tabulated", radii=(0.0, 1.0, 2.0), values=(2.0, 1.0, 0.5))
    assert np.allclose(k([0.0, 0.5, 1.5, 5.0]), [1.0, 0.75, 0.375, 0.0])


def test_spectral_variance_is_one():
    g = GridSpec.centered([4.0, 4.0], 0.5)
    fs = [sample_stationary_spectral(g, KernelSpec(), RngSeed(1, r)) for r in range(400)]
    e = empirical_covariance(fs, (0, 0))
    assert abs(e.mean - 1) < 4 * e.stderr


def test_empirical_covariance_errors():
    g = GridSpec(2, (0, 0), 1.0, (3, 3))
    f = ScalarField(g, np.zeros((3, 3)))
    with pytest.raises(ValueError, match="empty"):
        empirical_covariance([], (0, 0))
    with pytest.raises(ValueError, match="two"):
        empirical_covariance([f], (0, 0))
    with pytest.raises(ValueError, match="fit"):
        empirical_covariance([f, f], (3, 0))


def test_empirical_covariance_lag_product():
    g = GridSpec(2, (0, 0), 1.0, (2, 3))
    f = ScalarField(g, np.arange(6.0).reshape(2, 3))
    e = empirical_covariance([f, f], (0, 1))
    assert e.mean == pytest.approx(np.mean([0 * 1, 1 * 2, 3 * 4, 4 * 5]))
