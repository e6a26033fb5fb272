import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_weyl import geometry
from spectral_weyl.errors import InvalidArgumentError, InvalidBodyError, InvalidDomainError
from spectral_weyl.geometry import ConvexBody, Domain

L_SHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]


# -- domains ---------------------------------------------------------------


def test_volumes():
    assert geometry.volume(Domain.box([[0, 2], [1, 4]])) == 6.0
    assert geometry.volume(Domain.unit_cube(3)) == 1.0
    union = Domain.box_union([[[0, 1], [0, 1]], [[1, 3], [0, 1]]])
    assert geometry.volume(union) == 3.0
    assert geometry.volume(Domain.polygon2d(L_SHAPE)) == pytest.approx(3.0, abs=1e-15)


def test_polygon_orientation_is_normalised():
    cw = Domain.polygon2d(L_SHAPE[::-1])
    ccw = Domain.polygon2d(L_SHAPE)
    assert geometry.volume(cw) == pytest.approx(geometry.volume(ccw))
    assert cw.polygon == ccw.polygon or set(cw.polygon) == set(ccw.polygon)


def test_perimeter():
    assert geometry.perimeter(Domain.polygon2d(L_SHAPE)) == pytest.approx(8.0)
    assert geometry.perimeter(Domain.unit_cube(2)) == pytest.approx(4.0)
    assert geometry.perimeter(Domain.unit_cube(3)) == pytest.approx(6.0)


@pytest.mark.parametrize("bad", [
    {"dimension": 2, "kind": "box", "boxes": [[[0, 1], [1, 1]]]},
    {"dimension": 2, "kind": "box-union", "boxes": [[[0, 2], [0, 2]], [[1, 3], [1, 3]]]},
    {"dimension": 2, "kind": "polygon2d", "polygon": [[0, 0], [1, 1], [1, 0], [0, 1]]},
    {"dimension": 2, "kind": "polygon2d", "polygon": [[0, 0], [1, 0]]},
    {"dimension": 2, "kind": "polygon2d", "polygon": [[0, 0], [1, 0], [2, 0]]},
    {"dimension": 2, "kind": "box"},
])
def test_invalid_domains(bad):
    with pytest.raises(InvalidDomainError):
        Domain.from_dict(bad)


def test_domain_roundtrip():
    for dom in (Domain.unit_cube(2), Domain.polygon2d(L_SHAPE),
                Domain.box_union([[[0, 1]], [[2, 3]]])):
        assert Domain.from_dict(dom.to_dict()) == dom


def test_translate_and_scale():
    dom = Domain.polygon2d(L_SHAPE)
    assert geometry.volume(dom.scaled(2)) == pytest.approx(12.0)
    assert geometry.volume(dom.translated([5, -1])) == pytest.approx(3.0)


# -- bodies and norms -------------------------------------------------------


def test_norms():
    x = np.array([[3.0, -4.0]])
    assert geometry.norm_K(ConvexBody.ball(2), x)[0] == pytest.approx(5.0)
    assert geometry.norm_K(ConvexBody.cube(2), x)[0] == pytest.approx(4.0)
    assert geometry.norm_K(ConvexBody.ball(2, 2.0), x)[0] == pytest.approx(2.5)
    cross = ConvexBody.polytope([[1, 1], [1, -1], [-1, 1], [-1, -1]])
    assert geometry.norm_K(cross, x)[0] == pytest.approx(7.0)


def test_body_aliases_and_validation():
    assert ConvexBody.from_dict({"dimension": 2, "kind": "euclidean-ball"}).kind in ("ball", "euclidean-ball")
    with pytest.raises(InvalidBodyError):
        ConvexBody.polytope([[1, 0], [0, 1]])  # unbounded
    with pytest.raises(InvalidBodyError):
        ConvexBody.polytope([[1, 0], [0, 1], [-1, 0], [0, -2], [1, 1]])  # not symmetric


def test_body_volumes():
    assert geometry.body_volume(ConvexBody.ball(2)) == pytest.approx(math.pi)
    assert geometry.body_volume(ConvexBody.ball(3)) == pytest.approx(4 * math.pi / 3)
    assert geometry.body_volume(ConvexBody.cube(3)) == pytest.approx(8.0)
    cross2 = ConvexBody.polytope([[1, 1], [1, -1], [-1, 1], [-1, -1]])
    assert geometry.body_volume(cross2) == pytest.approx(2.0)
    signs = np.array(np.meshgrid(*[[-1, 1]] * 3)).reshape(3, -1).T
    assert geometry.body_volume(ConvexBody.polytope(signs)) == pytest.approx(4 / 3)


def test_polytope_volume_qmc():
    normals = np.vstack([np.eye(4), -np.eye(4)])
    est, half = geometry.polytope_volume_qmc(ConvexBody.polytope(normals), n_samples=2**14, seed=3)
    assert abs(est - 16.0) <= max(half, 1e-9) + 1e-9


vec = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=2)
BODIES = [ConvexBody.ball(2), ConvexBody.cube(2),
          ConvexBody.polytope([[1, 1], [1, -1], [-1, 1], [-1, -1], [2, 0], [-2, 0]])]


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.floats(-50, 50, allow_nan=False), st.sampled_from(range(len(BODIES))))
def test_norm_homogeneity_and_triangle(x, y, t, k):
    body = BODIES[k]
    x, y = np.array(x), np.array(y)
    nx, ny = body.norm(x[None])[0], body.norm(y[None])[0]
    assert body.norm((t * x)[None])[0] == pytest.approx(abs(t) * nx, rel=1e-9, abs=1e-9)
    assert body.norm((x + y)[None])[0] <= nx + ny + 1e-9 * (1 + nx + ny)


# -- boundary neighbourhoods ------------------------------------------------


def test_neighbourhood_exact_square():
    sq = Domain.unit_cube(2)
    assert geometry.boundary_neighborhood_measure(sq, 0.1) == pytest.approx(1.2**2 - 0.8**2)
    assert geometry.boundary_neighborhood_measure(sq, 0.001) == pytest.approx(0.008, rel=1e-9)
    # h larger than half the side fills the inside
    assert geometry.boundary_neighborhood_measure(sq, 0.6) == pytest.approx(2.2**2)


@pytest.mark.parametrize("h", [0.1, 0.01, 0.001])
def test_grid_agrees_with_exact_on_boxes(h):
    sq = Domain.unit_cube(2)
    exact = geometry.boundary_neighborhood(sq, h, "exact")
    grid = geometry.boundary_neighborhood(sq, h, "grid")
    assert grid.value == pytest.approx(exact.value, rel=0.02)
    assert grid.resolution <= h / 16


def test_polygon_neighbourhood_paths_agree():
    dom = Domain.polygon2d(L_SHAPE)
    exact = geometry.boundary_neighborhood_measure(dom, 0.01, "exact")
    grid = geometry.boundary_neighborhood_measure(dom, 0.01, "grid")
    # straight rectilinear boundary of length 8: 2 h per unit length
    assert exact == pytest.approx(0.16, rel=1e-9)
    assert grid == pytest.approx(exact, rel=0.02)


def test_box_union_neighbourhood_ignores_shared_faces():
    union = Domain.box_union([[[0, 1], [0, 1]], [[1, 2], [0, 1]]])
    rect = Domain.box([[0, 2], [0, 1]])
    assert geometry.boundary_neighborhood_measure(union, 0.05) == pytest.approx(
        geometry.boundary_neighborhood_measure(rect, 0.05, "exact"), rel=0.02)


def test_neighbourhood_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        geometry.boundary_neighborhood_measure(Domain.unit_cube(2), 0.0)
    with pytest.raises(InvalidArgumentError):
        geometry.boundary_neighborhood_measure(Domain.unit_cube(2), 0.1, "magic")


def test_sup_distance_to_segments():
    edges = np.array([[[0.0, 0.0], [1.0, 1.0]]])
    pts = np.array([[1.0, 0.0], [2.0, 2.0], [-1.0, 0.5]])
    # brute force over a fine parameter grid
    t = np.linspace(0, 1, 100001)
    seg = t[:, None] * np.array([1.0, 1.0])
    brute = [np.min(np.max(np.abs(seg - p), axis=1)) for p in pts]
    assert np.allclose(geometry.sup_distance_to_segments(pts, edges), brute, atol=1e-5)


# -- Minkowski content ------------------------------------------------------


def test_minkowski_content_square_and_polygon():
    est = geometry.minkowski_content_estimate(Domain.unit_cube(2), 1.0, [0.1, 0.05, 0.025])
    assert est.content == pytest.approx(4.0, rel=0.05)
    assert not est.wrong_alpha
    l_est = geometry.minkowski_content_estimate(Domain.polygon2d(L_SHAPE), 1.0, [0.01, 0.005])
    assert l_est.content == pytest.approx(8.0, rel=1e-6)


def test_wrong_alpha_flagged():
    est = geometry.minkowski_content_estimate(Domain.unit_cube(2), 1.5, [0.1, 0.01, 0.001])
    assert est.wrong_alpha
    assert est.trend == "vanishing"
    # below d - 1 is outside the admissible range
    with pytest.raises(InvalidArgumentError):
        geometry.minkowski_content_estimate(Domain.unit_cube(2), 0.5, [0.1, 0.01])


# -- inscribed cubes and isoperimetry -------------------------------------


def test_inscribed_cube():
    assert geometry.inscribed_cube_side(Domain.box([[0, 3], [0, 1]])) == 1.0
    union = Domain.box_union([[[0, 1], [0, 1]], [[1, 3], [0, 2]]])
    assert geometry.inscribed_cube_side(union) == 2.0
    assert geometry.inscribed_cube_side(Domain.polygon2d(L_SHAPE)) == pytest.approx(1.0, rel=1e-3)
    tri = Domain.polygon2d([(0, 0), (1, 0), (0, 1)])
    assert geometry.inscribed_cube_side(tri) == pytest.approx(0.5, rel=1e-3)


def test_comb_polygon():
    comb = geometry.comb_polygon(40, 1 / 80, 0.5)
    assert geometry.volume(comb) == pytest.approx(0.75)
    assert geometry.perimeter(comb) == pytest.approx(43.0)
    rec = geometry.polygon_isoperimetric_check(comb)
    assert rec.epsilon == pytest.approx(0.5, rel=1e-3)
    assert rec.constant_c >= 0.25
    with pytest.raises(InvalidDomainError):
        geometry.comb_polygon(40, 0.05, 0.5)
