import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fpplab.colourings import Colouring, EdgeWeights, constant_colouring, lattice_grid
from fpplab.fields import GridSpec
from fpplab.metric import (
    CHAMFER_ANISOTROPY_2D,
    AnnulusSpec,
    RectSpec,
    annulus_nodes,
    annulus_time,
    annulus_zero_crossing,
    lattice_shortest_time,
    point_time,
    rect_crossing,
    shortest_time,
)
from oracles import (
    PathTrie,
    continuum_step_costs,
    flood_fill_connects,
    flood_fill_crossing,
    king_neighbours,
    lattice_neighbours,
    lattice_step_costs,
)


@pytest.fixture(scope="module")
def king4():
    _, nbrs = king_neighbours((4, 4))
    return {s: PathTrie(nbrs, s) for s in (0, 5)}


@pytest.fixture(scope="module")
def lattice3():
    _, nbrs = lattice_neighbours((3, 3))
    return nbrs, {s: PathTrie(nbrs, s) for s in range(9)}


def test_path_trie_counts_small_graph():
    # path graph 0-1-2: from 0 the simple paths are [0], [0,1], [0,1,2]
    trie = PathTrie([[(1, 1.0)], [(0, 1.0), (2, 1.0)], [(1, 1.0)]], 0)
    assert len(trie) == 3


@given(st.integers(0, 2**32 - 1), st.sampled_from([0, 5]), st.sampled_from([0.25, 1.0]))
def test_continuum_times_equal_path_enumeration(king4, seed, src, h):
    rng = np.random.default_rng(seed)
    dens = rng.random((4, 4)) * rng.integers(0, 2, (4, 4))  # white cells mixed in
    g = GridSpec(2, (0, 0), h, (4, 4))
    t = shortest_time(Colouring(g, dens, "generic"), np.array([src]))
    trie = king4[src]
    ref = trie.min_cost(continuum_step_costs(trie, dens.ravel(), h))
    assert np.max(np.abs(t.time.ravel() - ref)) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(0, 8))
def test_lattice_times_equal_path_enumeration(lattice3, seed, src):
    rng = np.random.default_rng(seed)
    w = (rng.random((2, 3)) * rng.integers(0, 2, (2, 3)), rng.random((3, 2)))
    ew = EdgeWeights(lattice_grid((3, 3)), w)
    t = lattice_shortest_time(ew, np.array([src]))
    trie = lattice3[1][src]
    ref = trie.min_cost(lattice_step_costs(trie, ew.weights))
    assert np.max(np.abs(t.ravel() - ref)) <= 1e-12


def test_lattice_targets_subset():
    ew = EdgeWeights(lattice_grid((3, 3)), (np.ones((2, 3)), np.ones((3, 2))))
    assert lattice_shortest_time(ew, (0, 0), targets=np.array([[2, 2], [0, 1]])).tolist() == [4.0, 1.0]


@given(st.integers(0, 20), st.integers(0, 20))
def test_constant_density_is_chamfer_distance(a, b):
    h = 0.25
    g = GridSpec(2, (0, 0), h, (21, 21))
    t = point_time(constant_colouring(g), (0, 0), (a, b))
    lo, hi = sorted((a, b))
    assert t == pytest.approx(h * ((hi - lo) + math.sqrt(2) * lo), rel=1e-12)
    assert t <= CHAMFER_ANISOTROPY_2D * h * math.hypot(a, b) + 1e-12


def test_multi_source_and_mask():
    g = GridSpec(2, (0, 0), 1.0, (1, 5))
    c = constant_colouring(g)
    t = shortest_time(c, np.array([[0, 0], [0, 4]]))
    assert t.time.tolist() == [[0.0, 1.0, 2.0, 1.0, 0.0]]
    mask = np.array([[True, True, False, True, True]])
    t = shortest_time(c, (0, 0), mask=mask)
    assert np.isinf(t.time[0, 4]) and not t.reachable[0, 3]


def test_source_errors():
    g = GridSpec(2, (0, 0), 1.0, (2, 2))
    with pytest.raises(ValueError, match="outside"):
        shortest_time(constant_colouring(g), (5, 5))
    with pytest.raises(ValueError, match="empty"):
        shortest_time(constant_colouring(g), np.zeros((2, 2), bool))


# -- pseudometric axioms on small random colourings ------------------------------

def _random_colouring(seed, n=8, h=0.5):
    rng = np.random.default_rng(seed)
    g = GridSpec(2, (0, 0), h, (n, n))
    return Colouring(g, rng.random((n, n)) * (rng.random((n, n)) < 0.7), "generic")


@given(st.integers(0, 10**6), st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), min_size=3, max_size=3))
def test_symmetry_and_triangle(seed, pts):
    c = _random_colouring(seed)
    x, y, z = pts
    assert point_time(c, x, y) == point_time(c, y, x)
    assert point_time(c, x, z) <= (point_time(c, x, y) + point_time(c, y, z)) * (1 + 1e-12)


@given(st.integers(0, 10**6), st.sampled_from([0.5, 2.0, 4.0, 0.125]))
def test_homogeneity_power_of_two_is_exact(seed, s):
    c = _random_colouring(seed)
    a = shortest_time(c, (0, 0)).time
    b = shortest_time(c.scaled(s), (0, 0)).time
    assert np.array_equal(b, s * a)


@given(st.integers(0, 10**6), st.floats(0.1, 10))
def test_homogeneity_general_scale(seed, s):
    c = _random_colouring(seed)
    a = shortest_time(c, (0, 0)).time
    b = shortest_time(c.scaled(s), (0, 0)).time
    assert np.allclose(b, s * a, rtol=1e-12, atol=0)


@given(st.integers(0, 10**6))
def test_monotone_in_density(seed):
    c = _random_colouring(seed)
    bump = np.random.default_rng(seed + 1).random(c.grid.extents)
    d = Colouring(c.grid, c.density + bump, "generic")
    assert np.all(shortest_time(c, (3, 3)).time <= shortest_time(d, (3, 3)).time)


# -- crossings ---------------------------------------------------------------------

def test_rect_crossing_exhaustive_3x3():
    g = GridSpec(2, (0, 0), 1.0, (3, 3))
    rect = RectSpec((0, 0), (2, 2), 0)
    for bits in range(2 ** 9):
        dens = np.array([(bits >> k) & 1 for k in range(9)], float).reshape(3, 3)
        c = Colouring(g, dens, "voronoi")
        for colour in (0, 1):
            for axis in (0, 1):
                r = RectSpec(rect.lower, rect.upper, axis)
                assert rect_crossing(c, r, colour) == flood_fill_crossing(dens == colour, axis)


def test_rect_crossing_sub_box():
    g = GridSpec(2, (-1, -1), 0.5, (9, 9))
    dens = np.ones((9, 9))
    dens[:, 2] = 0  # white line y = 0 along axis 0
    c = Colouring(g, dens, "voronoi")
    assert rect_crossing(c, RectSpec((-0.5, -0.5), (0.5, 0.5), 0), 0)
    assert not rect_crossing(c, RectSpec((-0.5, -0.5), (0.5, 0.5), 1), 0)
    with pytest.raises(ValueError, match="two-valued"):
        rect_crossing(Colouring(g, np.full((9, 9), 0.5), "generic"), RectSpec((0, 0), (1, 1)), 0)


@given(st.integers(0, 10**6), st.floats(0.2, 0.8))
def test_annulus_zero_crossing_matches_flood_fill_and_time(seed, p):
    g = GridSpec.centered([4.0, 4.0], 0.5)
    rng = np.random.default_rng(seed)
    dens = (rng.random(g.extents) >= p).astype(float)
    c = Colouring(g, dens, "voronoi")
    ann = AnnulusSpec((0.0, 0.0), 1.0, 3.0)
    inner, outer, region = annulus_nodes(g, ann)
    ref = flood_fill_connects((dens == 0) & region, inner, outer)
    assert annulus_zero_crossing(c, ann) == ref
    assert ref == (annulus_time(c, ann) == 0.0)


def test_annulus_shells_and_errors():
    g = GridSpec.centered([4.0, 4.0], 0.5)
    inner, outer, region = annulus_nodes(g, AnnulusSpec((0, 0), 1.0, 3.0))
    r = np.linalg.norm(g.coordinates(), axis=-1)
    band = 0.5 * math.sqrt(2) / 2
    assert np.array_equal(inner, np.abs(r - 1) <= band)
    assert np.all(region[inner | outer])
    with pytest.raises(ValueError, match="fit"):
        annulus_nodes(g, AnnulusSpec((0, 0), 1.0, 4.0))
    with pytest.raises(ValueError):
        AnnulusSpec((0, 0), 2.0, 1.0)


def test_annulus_time_constant_density():
    # crossing time of the annulus is at least the Euclidean gap between shells
    g = GridSpec.centered([6.0, 6.0], 0.25)
    t = annulus_time(constant_colouring(g), AnnulusSpec((0, 0), 1.0, 5.0))
    band = 0.25 * math.sqrt(2) / 2
    assert 4.0 - 2 * band - 1e-12 <= t <= 4.0 + 1e-9


def test_annulus_lattice():
    g = lattice_grid((11, 11), origin=(-5, -5))
    ew = EdgeWeights(g, (np.zeros((10, 11)), np.zeros((11, 10))))
    ann = AnnulusSpec((0, 0), 1.0, 4.0)
    assert annulus_zero_crossing(ew, ann) and annulus_time(ew, ann) == 0.0
    ew = EdgeWeights(g, (np.ones((10, 11)), np.ones((11, 10))))
    assert not annulus_zero_crossing(ew, ann) and annulus_time(ew, ann) > 0


def test_three_dimensional_engine():
    g = GridSpec(3, (0, 0, 0), 1.0, (3, 3, 3))
    t = point_time(constant_colouring(g), (0, 0, 0), (2, 2, 2))
    assert t == pytest.approx(2 * math.sqrt(3))
