import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import cKDTree

from koopman_attractors.space import (
    BudgetExceededError, ClosedSet, StateSpace, circle_set, directed_distance,
    distance_to_set, grid_size, hausdorff, in_neighborhood, make_grid, points_set, thin,
)

SPACES = [
    StateSpace.circle(),
    StateSpace.compactified_line(),
    StateSpace.compactified_halfline(),
    StateSpace.box([(0.0, 1.0), (-1.0, 2.0)]),
    StateSpace.annulus(1.0, 2.0),
]


def _random_points(space, rng, n):
    lo, hi = np.array(space.chart_bounds).T
    pts = rng.uniform(lo, hi, (4 * n, space.dim))
    return pts[space.membership(pts)][:n]


def test_circle_grid_is_equispaced():
    g = make_grid(StateSpace.circle(), math.pi / 8)
    assert len(g) == 16
    np.testing.assert_allclose(g.points[:, 0], np.arange(16) * math.pi / 8)


def test_compactified_line_grid_contains_infinity():
    s = StateSpace.compactified_line()
    g = make_grid(s, 0.1)
    assert s.is_infinity(g.points).sum() == 1
    assert np.all(np.diff(g.points[:, 0]) <= 0.1 + 1e-12)


def test_annulus_grid_covering_audit():
    space = StateSpace.annulus(1.0, 2.0)
    g = make_grid(space, 0.05)
    r = np.hypot(*g.points.T)
    assert r.min() >= 1.0 - 1e-12 and r.max() <= 2.0 + 1e-12
    # nearest-neighbour audit on a much finer polar probe grid
    rr, tt = np.meshgrid(np.linspace(1, 2, 201), np.linspace(0, 2 * np.pi, 2001))
    probe = space.from_polar(rr.ravel(), tt.ravel())
    d, _ = cKDTree(g.points).query(probe)
    assert d.max() <= 0.05


@pytest.mark.parametrize("space", SPACES, ids=lambda s: s.kind)
def test_grid_points_are_members(space):
    g = make_grid(space, 0.1)
    assert space.membership(g.points).all()
    assert len(g) == grid_size(space, 0.1)


def test_budget_exceeded():
    with pytest.raises(BudgetExceededError):
        make_grid(StateSpace.annulus(), 1e-3, budget=10_000)


def test_distance_examples():
    half = StateSpace.compactified_halfline()
    zero = points_set(half, [[0.0]])
    assert distance_to_set(half, zero, half.point(0.0)) == 0.0
    assert in_neighborhood(half, zero, 0.1, half.point(0.05))
    assert not in_neighborhood(half, zero, 0.1, half.point(math.inf))

    ann = StateSpace.annulus()
    circ = circle_set(ann)
    x = ann.from_polar(1.5, 0.7)[0]
    assert distance_to_set(ann, circ, x) == pytest.approx(0.5, abs=1e-4)
    assert in_neighborhood(ann, circ, 0.2, ann.from_polar(1.1, 2.0)[0])
    poles = points_set(ann, [[1, 0], [-1, 0]])
    assert distance_to_set(ann, poles, [0.0, 1.0]) == pytest.approx(math.sqrt(2))


def test_compactified_line_glues_both_ends():
    s = StateSpace.compactified_line()
    a, b = s.point(1e8), s.point(-1e8)
    assert s.metric(a, b)[0] < 1e-7
    assert s.metric(s.point(math.inf), s.point(-math.inf))[0] == 0.0


def test_hausdorff_and_directed():
    s = StateSpace.box([(0, 1)])
    a, b = [[0.0], [1.0]], [[0.0], [0.5], [1.0]]
    assert directed_distance(s, a, b) == 0.0
    assert directed_distance(s, b, a) == pytest.approx(0.5)
    assert hausdorff(s, a, b) == pytest.approx(0.5)


def test_thin_is_an_eps_net():
    s = StateSpace.annulus()
    pts = make_grid(s, 0.02).points
    net = thin(s, pts, 0.1)
    d, _ = cKDTree(net).query(pts)
    assert d.max() <= 0.1 + 1e-12
    pair_d = cKDTree(net).query(net, k=2)[0][:, 1]
    assert pair_d.min() > 0.1


def test_closed_set_rejects_empty():
    with pytest.raises(ValueError):
        ClosedSet(StateSpace.circle(), np.empty((0, 1)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), which=st.sampled_from(range(len(SPACES))))
def test_metric_axioms(seed, which):
    space = SPACES[which]
    rng = np.random.default_rng(seed)
    x, y, z = (_random_points(space, rng, 20) for _ in range(3))
    n = min(len(x), len(y), len(z))
    x, y, z = x[:n], y[:n], z[:n]
    dxy, dyx = space.metric(x, y), space.metric(y, x)
    np.testing.assert_allclose(dxy, dyx, atol=1e-12)
    assert np.all(space.metric(x, x) <= 1e-12)
    assert np.all(space.metric(x, z) <= dxy + space.metric(y, z) + 1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), which=st.sampled_from(range(len(SPACES))))
def test_distance_is_lipschitz_and_neighbourhoods_monotone(seed, which):
    space = SPACES[which]
    rng = np.random.default_rng(seed)
    M = points_set(space, _random_points(space, rng, 5))
    x, y = _random_points(space, rng, 30), _random_points(space, rng, 30)
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    dx, dy = distance_to_set(space, M, x), distance_to_set(space, M, y)
    assert np.all(np.abs(dx - dy) <= space.metric(x, y) + 1e-9)
    small = in_neighborhood(space, M, 0.3, x)
    big = in_neighborhood(space, M, 0.6, x)
    assert np.all(big[small])
