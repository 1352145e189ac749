import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cell_volume, mass_factor, random_polygon
from toric_ma.convexfun import Obstacle, PLConvexFunction, box_grid, convex_envelope, rooftop, support_function
from toric_ma.errors import NonConvexInput
from toric_ma.geometry import ConvexBody, box, intersection, support
from toric_ma.ma_measure import boundary_nodes, full_mass_check, ma, subgradient_cell

UNIT = ConvexBody([[0.0], [1.0]])
SQUARE = box([0, 0], [1, 1])


def three_slope():
    # slopes 0, 1/2, 1 with kinks at -1 and 1
    x = np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
    v = np.maximum.reduce([np.full_like(x, -0.5), 0.5 * x, x - 0.5])
    return PLConvexFunction(UNIT, x, v)


def random_convex(rng, P, nodes, spread=1.0):
    A = np.array([P.vertices[rng.integers(len(P.vertices))] for _ in range(6)])
    w = rng.dirichlet(np.ones(len(P.vertices)), size=6) @ P.vertices
    slopes = np.vstack([A, w])
    vals = np.max(nodes @ slopes.T + spread * rng.normal(size=len(slopes)), axis=1)
    return convex_envelope(Obstacle(P, nodes, vals))


class TestSubgradientCell:
    def test_support_function_origin_cell_is_body(self):
        h = support_function(SQUARE, box_grid(2, 2.0, 5))
        i = int(np.flatnonzero(np.all(h.nodes == 0, axis=1))[0])
        cell = subgradient_cell(h, i)
        assert cell.volume == pytest.approx(1.0)
        assert {tuple(v) for v in np.round(cell.vertices, 12)} == {(0, 0), (1, 0), (1, 1), (0, 1)}

    def test_affine_function_has_point_cells(self):
        a = np.array([0.3, 0.6])
        nodes = box_grid(2, 2.0, 5)
        h = PLConvexFunction(SQUARE, nodes, nodes @ a)
        cell = subgradient_cell(h, 12)
        assert cell.volume == 0.0
        assert np.allclose(cell.vertices, a)

    def test_three_slope_cells(self):
        h = three_slope()
        assert sorted(subgradient_cell(h, 2).vertices[:, 0]) == pytest.approx([0.0, 0.5])
        assert sorted(subgradient_cell(h, 4).vertices[:, 0]) == pytest.approx([0.5, 1.0])

    def test_obstacle_is_rejected(self):
        with pytest.raises(NonConvexInput):
            subgradient_cell(Obstacle(UNIT, [[0.0], [1.0]], [1.0, 0.0]), 0)

    def test_cells_match_halfspace_intersection(self):
        rng = np.random.default_rng(1)
        P = ConvexBody([[0, 0], [2, 0], [2, 1], [0.5, 1.5]])
        nodes = rng.uniform(-2, 2, (30, 2))
        h = random_convex(rng, P, nodes)
        for i in range(len(nodes)):
            assert subgradient_cell(h, i).volume == pytest.approx(
                cell_volume(P.vertices, h.nodes, h.values, i), abs=1e-9
            )

    def test_cells_match_halfspace_intersection_3d(self):
        rng = np.random.default_rng(2)
        P = box([0, 0, 0], [1, 1, 1])
        nodes = rng.uniform(-1, 1, (25, 3))
        h = random_convex(rng, P, nodes, spread=0.3)
        for i in range(len(nodes)):
            assert subgradient_cell(h, i).volume == pytest.approx(
                cell_volume(P.vertices, h.nodes, h.values, i), abs=1e-9
            )


class TestMA:
    def test_support_function_single_atom(self):
        h = support_function(SQUARE, box_grid(2, 2.0, 5))
        res = ma(h)
        origin = np.all(h.nodes == 0, axis=1)
        assert res.masses[origin][0] == pytest.approx(0.5)
        assert np.all(res.masses[~origin] == 0.0)
        assert res.total == pytest.approx(0.5) and res.boundary_remainder == 0.0

    def test_shift_invariance_is_exact(self):
        rng = np.random.default_rng(3)
        h = random_convex(rng, SQUARE, box_grid(2, 2.0, 7))
        a, b = ma(h), ma(h.shift(7.0))
        assert np.array_equal(a.masses, b.masses) and a.total == b.total
        # rebuilt from scratch the cells see rounded differences only
        c = ma(PLConvexFunction(SQUARE, h.nodes, h.values + 7.0))
        assert np.allclose(a.masses, c.masses, rtol=0, atol=1e-12)

    def test_three_slope_masses(self):
        res = ma(three_slope())
        assert res.masses[2] == pytest.approx(0.25) and res.masses[4] == pytest.approx(0.25)
        assert res.total == pytest.approx(0.5)

    def test_total_equals_sum(self):
        rng = np.random.default_rng(4)
        res = ma(random_convex(rng, SQUARE, box_grid(2, 2.0, 9)))
        assert res.total == pytest.approx(res.masses.sum(), abs=1e-12)

    def test_serialisation(self):
        d = ma(three_slope()).to_dict()
        assert set(d) == {"masses", "total", "boundary_remainder"}

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_tiles_body(self, seed):
        rng = np.random.default_rng(seed)
        P = ConvexBody(random_polygon(rng, 0, 3))
        res = ma(random_convex(rng, P, rng.uniform(-3, 3, (40, 2))))
        assert res.total <= mass_factor(2) * P.volume + 1e-9
        assert res.total + res.boundary_remainder == pytest.approx(mass_factor(2) * P.volume, abs=1e-9)

    def test_cells_do_not_overlap(self):
        rng = np.random.default_rng(5)
        h = random_convex(rng, SQUARE, rng.uniform(-2, 2, (40, 2)))
        cells = [c for c in ma(h).cells if c.volume > 0]
        for _ in range(60):
            i, j = rng.choice(len(cells), 2, replace=False)
            assert intersection(cells[i], cells[j]).volume <= 1e-9

    def test_remainder_shrinks_with_box(self):
        # the reference potential never reaches the slopes 0 and 1, so the
        # boundary cells always hold a little mass
        rem = []
        for R in (2.0, 4.0, 8.0):
            x = np.linspace(-R, R, int(8 * R) + 1)
            h = PLConvexFunction(UNIT, x, 0.5 * np.logaddexp(0.0, 2 * x))
            res = ma(h)
            rem.append(res.boundary_remainder)
            assert res.total + res.boundary_remainder == pytest.approx(0.5, abs=1e-12)
        assert rem[0] > rem[1] > rem[2] > 0

    def test_locality(self):
        x = np.linspace(-3, 3, 13)
        v = 0.1 * x**2
        body = ConvexBody([[-2.0], [2.0]])
        h = PLConvexFunction(body, x, v)
        v2 = v.copy()
        v2[-1] += 0.5  # raises the far end only
        h2 = PLConvexFunction(body, x, v2)
        a, b = ma(h), ma(h2)
        assert np.allclose(a.masses[:10], b.masses[:10], atol=1e-15)


def test_boundary_nodes_of_grid():
    nodes = box_grid(2, 1.0, 3)
    mask = boundary_nodes(nodes)
    assert mask.sum() == 8 and not mask[4]


class TestFullMass:
    def test_examples(self):
        nodes = box_grid(2, 2.0, 5)
        h = support_function(SQUARE, nodes)
        assert full_mass_check(h)
        assert full_mass_check(rooftop(h, h.shift(-3.0)))

    def test_smaller_body_declared_larger(self):
        nodes = box_grid(2, 2.0, 5)
        Q = box([0, 0], [0.5, 1])
        h = PLConvexFunction(SQUARE, nodes, support(Q, nodes))
        assert not full_mass_check(h)
        assert ma(h).total == pytest.approx(0.25)


def ordered_pair(rng, P, nodes):
    """Convex ``h <= g`` with the same body."""
    g = random_convex(rng, P, nodes)
    k = random_convex(rng, P, nodes, spread=2.0)
    return rooftop(g, k), g


@pytest.mark.parametrize("seed", range(10))
def test_comparison_shadow(seed):
    rng = np.random.default_rng(seed)
    h, g = ordered_pair(rng, SQUARE, rng.uniform(-2, 2, (30, 2)))
    mh, mg = ma(h), ma(g)
    # the extension's masses, boundary nodes included
    wh = mh.masses + mh.boundary_masses
    wg = mg.masses + mg.boundary_masses
    below = h.values < g.values - 1e-9
    assert wg[below].sum() <= wh[below].sum() + 1e-9
