"""Domains, convex bodies and the boundary geometry of domains.

Distances to the boundary are measured in the sup norm, so the
``h``-neighbourhood of the boundary of a box is the box inflated by ``h``
minus the box deflated by ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, spatial, stats

from .errors import (
    InvalidArgumentError,
    InvalidBodyError,
    InvalidDomainError,
    UnsupportedDomainError,
)

DOMAIN_KINDS = ("box", "box-union", "polygon2d")
BODY_KINDS = ("ball", "cube", "polytope")
_BODY_ALIASES = {
    "euclidean-ball": "ball",
    "sup-cube": "cube",
    "symmetric-polytope": "polytope",
}

# finest cell side used by grid counting, as a fraction of h
GRID_FRACTION = 16


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """A bounded region: an axis-aligned box, a union of boxes, or a polygon.

    Polygons are stored counter-clockwise regardless of input orientation.
    """

    dimension: int
    kind: str
    boxes: tuple = ()
    polygon: tuple = ()

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise InvalidDomainError(f"unknown domain kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise InvalidDomainError("dimension must be a positive integer")
        if self.kind == "polygon2d":
            object.__setattr__(self, "polygon", _check_polygon(self.polygon))
            if self.dimension != 2:
                raise InvalidDomainError("polygon2d domains are two-dimensional")
        else:
            boxes = tuple(
                tuple((float(a), float(b)) for a, b in box) for box in self.boxes
            )
            object.__setattr__(self, "boxes", boxes)
            _check_boxes(boxes, self.dimension, single=self.kind == "box")

    # -- constructors -----------------------------------------------------

    @classmethod
    def box(cls, bounds: Sequence[Sequence[float]]) -> "Domain":
        return cls(len(bounds), "box", boxes=(tuple(map(tuple, bounds)),))

    @classmethod
    def unit_cube(cls, d: int) -> "Domain":
        return cls.box([(0.0, 1.0)] * d)

    @classmethod
    def box_union(cls, boxes) -> "Domain":
        boxes = [tuple(map(tuple, b)) for b in boxes]
        if not boxes:
            raise InvalidDomainError("box-union needs at least one box")
        return cls(len(boxes[0]), "box-union", boxes=tuple(boxes))

    @classmethod
    def polygon2d(cls, vertices) -> "Domain":
        return cls(2, "polygon2d", polygon=tuple(map(tuple, vertices)))

    @classmethod
    def from_dict(cls, data: dict) -> "Domain":
        try:
            d = int(data["dimension"])
            kind = data["kind"]
            if kind == "polygon2d":
                return cls(d, kind, polygon=tuple(map(tuple, data["polygon"])))
            return cls(d, kind, boxes=tuple(tuple(map(tuple, b)) for b in data["boxes"]))
        except (KeyError, TypeError) as exc:
            raise InvalidDomainError(f"malformed domain description: {exc}") from exc

    def to_dict(self) -> dict:
        out = {"dimension": self.dimension, "kind": self.kind}
        if self.kind == "polygon2d":
            out["polygon"] = [list(v) for v in self.polygon]
        else:
            out["boxes"] = [[list(iv) for iv in box] for box in self.boxes]
        return out

    # -- derived geometry -------------------------------------------------

    def bounding_box(self) -> np.ndarray:
        """``(d, 2)`` array of per-coordinate ``[min, max]``."""
        if self.kind == "polygon2d":
            v = np.asarray(self.polygon)
            return np.stack([v.min(axis=0), v.max(axis=0)], axis=1)
        b = np.asarray(self.boxes)  # (nbox, d, 2)
        return np.stack([b[:, :, 0].min(axis=0), b[:, :, 1].max(axis=0)], axis=1)

    def translated(self, shift) -> "Domain":
        shift = np.asarray(shift, dtype=float)
        if self.kind == "polygon2d":
            return Domain.polygon2d(np.asarray(self.polygon) + shift)
        boxes = np.asarray(self.boxes) + shift[None, :, None]
        return Domain(self.dimension, self.kind, boxes=tuple(map(tuple, boxes.tolist())))

    def scaled(self, factor: float) -> "Domain":
        if self.kind == "polygon2d":
            return Domain.polygon2d(np.asarray(self.polygon) * factor)
        boxes = np.asarray(self.boxes) * factor
        return Domain(self.dimension, self.kind, boxes=tuple(map(tuple, boxes.tolist())))

    def edges(self) -> np.ndarray:
        """Polygon edges as an ``(m, 2, 2)`` array of (start, end) pairs."""
        if self.kind != "polygon2d":
            raise UnsupportedDomainError("edges are defined for polygon2d domains only")
        v = np.asarray(self.polygon)
        return np.stack([v, np.roll(v, -1, axis=0)], axis=1)


def _check_boxes(boxes, d, single):
    if not boxes:
        raise InvalidDomainError("no boxes given")
    if single and len(boxes) != 1:
        raise InvalidDomainError("kind 'box' takes exactly one box")
    arr = np.asarray(boxes, dtype=float)
    if arr.ndim != 3 or arr.shape[1] != d or arr.shape[2] != 2:
        raise InvalidDomainError(f"boxes must be lists of {d} intervals [a, b]")
    if not np.all(np.isfinite(arr)):
        raise InvalidDomainError("box bounds must be finite")
    if np.any(arr[:, :, 1] <= arr[:, :, 0]):
        raise InvalidDomainError("every box needs b_j > a_j in each coordinate")
    for i in range(len(arr)):
        for j in range(i + 1, len(arr)):
            overlap = np.minimum(arr[i, :, 1], arr[j, :, 1]) - np.maximum(arr[i, :, 0], arr[j, :, 0])
            if np.all(overlap > 0):
                raise InvalidDomainError(f"boxes {i} and {j} overlap")


def _check_polygon(vertices):
    from shapely.geometry import LinearRing

    try:
        v = np.asarray(vertices, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidDomainError("polygon vertices must be real pairs") from exc
    if v.ndim != 2 or v.shape[1] != 2:
        raise InvalidDomainError("polygon vertices must be real pairs")
    if len(v) >= 2 and np.allclose(v[0], v[-1]):
        v = v[:-1]
    if len(v) < 3:
        raise InvalidDomainError("polygon needs at least 3 vertices")
    if np.any(np.all(v == np.roll(v, -1, axis=0), axis=1)):
        raise InvalidDomainError("polygon has repeated consecutive vertices")
    if not LinearRing(v).is_simple:
        raise InvalidDomainError("polygon is self-intersecting")
    area = _signed_area(v)
    if abs(area) <= 1e-14 * max(1.0, float(np.ptp(v)) ** 2):
        raise InvalidDomainError("degenerate polygon (zero area)")
    if area < 0:
        v = v[::-1]
    return tuple(map(tuple, v.tolist()))


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def volume(domain: Domain) -> float:
    """Lebesgue measure of the domain (exact for every supported kind)."""
    if domain.kind == "polygon2d":
        area = _signed_area(np.asarray(domain.polygon))
        if area <= 0:
            raise InvalidDomainError("degenerate polygon (zero area)")
        return area
    b = np.asarray(domain.boxes)
    return float(np.sum(np.prod(b[:, :, 1] - b[:, :, 0], axis=1)))


def perimeter(domain: Domain) -> float:
    """Euclidean length of a polygon boundary, or surface area of a single box."""
    if domain.kind == "polygon2d":
        e = domain.edges()
        return float(np.sum(np.linalg.norm(e[:, 1] - e[:, 0], axis=1)))
    if domain.kind == "box":
        sides = np.diff(np.asarray(domain.boxes[0]), axis=1).ravel()
        if domain.dimension == 1:
            return 2.0
        total = 0.0
        for j in range(domain.dimension):
            total += 2.0 * float(np.prod(np.delete(sides, j)))
        return total
    raise UnsupportedDomainError("perimeter of a box union is not tracked")


# ---------------------------------------------------------------------------
# Convex bodies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexBody:
    """An origin-symmetric convex body ``K``.

    ``radius`` is the Euclidean radius of a ball or the half-side of a cube.
    Polytopes are given as halfspaces ``<n_i, x> <= 1`` closed under
    ``n_i -> -n_i``.
    """

    dimension: int
    kind: str
    radius: float = 1.0
    halfspaces: tuple = ()
    _normals: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = _BODY_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in BODY_KINDS:
            raise InvalidBodyError(f"unknown body kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise InvalidBodyError("dimension must be a positive integer")
        if kind == "polytope":
            normals = np.asarray(self.halfspaces, dtype=float)
            if normals.ndim != 2 or normals.shape[1] != self.dimension or len(normals) == 0:
                raise InvalidBodyError("halfspaces must be a non-empty list of d-vectors")
            if not np.all(np.isfinite(normals)):
                raise InvalidBodyError("halfspace normals must be finite")
            for n in normals:
                if not np.any(np.all(np.abs(normals + n) <= 1e-12 * (1 + np.abs(n)), axis=1)):
                    raise InvalidBodyError("polytope is not origin-symmetric (missing -n_i)")
            # symmetric normals positively span R^d iff they span it linearly
            if np.linalg.matrix_rank(normals) < self.dimension:
                raise InvalidBodyError("unbounded polytope: normals do not span R^d")
            object.__setattr__(self, "halfspaces", tuple(map(tuple, normals.tolist())))
            object.__setattr__(self, "_normals", normals)
        else:
            if not (self.radius > 0 and math.isfinite(self.radius)):
                raise InvalidBodyError("radius must be positive and finite")
            object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def ball(cls, d: int, radius: float = 1.0) -> "ConvexBody":
        return cls(d, "ball", radius=radius)

    @classmethod
    def cube(cls, d: int, radius: float = 1.0) -> "ConvexBody":
        return cls(d, "cube", radius=radius)

    @classmethod
    def polytope(cls, halfspaces) -> "ConvexBody":
        halfspaces = np.asarray(halfspaces, dtype=float)
        return cls(halfspaces.shape[1], "polytope", halfspaces=tuple(map(tuple, halfspaces)))

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexBody":
        try:
            kind = data["kind"]
            d = int(data["dimension"])
            if _BODY_ALIASES.get(kind, kind) == "polytope":
                return cls(d, kind, halfspaces=tuple(map(tuple, data["halfspaces"])))
            return cls(d, kind, radius=float(data.get("radius", 1.0)))
        except (KeyError, TypeError) as exc:
            raise InvalidBodyError(f"malformed body description: {exc}") from exc

    def to_dict(self) -> dict:
        out = {"dimension": self.dimension, "kind": self.kind}
        if self.kind == "polytope":
            out["halfspaces"] = [list(n) for n in self.halfspaces]
        else:
            out["radius"] = self.radius
        return out

    def norm(self, x) -> np.ndarray | float:
        """Minkowski functional; see :func:`norm_K`."""
        return norm_K(self, x)

    def half_widths(self) -> np.ndarray:
        """Per-coordinate extent: ``K`` lies inside ``prod [-w_j, w_j]``."""
        if self.kind != "polytope":
            return np.full(self.dimension, self.radius)
        return _polytope_half_widths(self.halfspaces)


def _polytope_half_widths(halfspaces) -> np.ndarray:
    normals = np.asarray(halfspaces)
    d = normals.shape[1]
    widths = np.empty(d)
    for j in range(d):
        c = np.zeros(d)
        c[j] = -1.0
        res = optimize.linprog(c, A_ub=normals, b_ub=np.ones(len(normals)), bounds=[(None, None)] * d)
        if res.status != 0:
            raise InvalidBodyError("unbounded polytope")
        widths[j] = -res.fun
    return widths


def norm_K(body: ConvexBody, x) -> np.ndarray | float:
    """Minkowski functional ``inf{t > 0 : x in tK}``.

    Accepts a single point of shape ``(d,)`` or a batch ``(..., d)``.
    """
    x = np.asarray(x, dtype=float)
    if body.kind == "ball":
        out = np.sqrt(np.sum(x * x, axis=-1)) / body.radius
    elif body.kind == "cube":
        out = np.max(np.abs(x), axis=-1) / body.radius
    else:
        out = np.maximum(np.max(x @ body._normals.T, axis=-1), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def body_volume(body: ConvexBody) -> float:
    """Volume ``|K|``.

    Exact for balls and cubes and, through a convex-hull decomposition, for
    polytopes in dimension three or less.  Higher-dimensional polytopes fall
    back on :func:`polytope_volume_qmc`.
    """
    d = body.dimension
    if body.kind == "ball":
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * body.radius**d
    if body.kind == "cube":
        return (2.0 * body.radius) ** d
    normals = body._normals
    if d == 1:
        return 2.0 / float(np.max(np.abs(normals)))
    if d <= 3:
        hs = np.hstack([normals, -np.ones((len(normals), 1))])
        inter = spatial.HalfspaceIntersection(hs, np.zeros(d))
        return float(spatial.ConvexHull(inter.intersections).volume)
    estimate, _ = polytope_volume_qmc(body)
    return estimate


def polytope_volume_qmc(body: ConvexBody, n_samples: int = 2**16, seed: int = 0,
                        replicates: int = 16) -> tuple[float, float]:
    """Randomised quasi-Monte Carlo volume with a 95% half-width.

    Returns ``(estimate, halfwidth)`` computed from ``replicates``
    independently scrambled Sobol sequences.
    """
    d = body.dimension
    w = body.half_widths()
    box_vol = float(np.prod(2 * w))
    m = max(1, n_samples // replicates)
    means = []
    for rep in range(replicates):
        u = stats.qmc.Sobol(d, scramble=True, seed=np.random.default_rng([seed, rep])).random(m)
        x = (2 * u - 1) * w
        means.append(box_vol * np.mean(norm_K(body, x) <= 1.0))
    means = np.asarray(means)
    half = 1.96 * means.std(ddof=1) / math.sqrt(replicates) if replicates > 1 else float("nan")
    return float(means.mean()), float(half)


# ---------------------------------------------------------------------------
# Boundary neighbourhoods and Minkowski content
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NeighborhoodMeasure:
    """Measure of ``{x : dist(x, boundary) < h}`` and how it was obtained."""

    h: float
    value: float
    method: str
    resolution: float | None = None


def boundary_neighborhood_measure(domain: Domain, h: float, method: str = "auto") -> float:
    """Measure of the open two-sided ``h``-neighbourhood of the boundary."""
    return boundary_neighborhood(domain, h, method).value


def boundary_neighborhood(domain: Domain, h: float, method: str = "auto") -> NeighborhoodMeasure:
    """Like :func:`boundary_neighborhood_measure` but keeps the method and resolution.

    ``method`` is ``"auto"`` (grid counting for box unions, exact
    otherwise), ``"exact"`` (single boxes, and polygons through the union of
    edge tubes) or ``"grid"``.
    """
    if not h > 0:
        raise InvalidArgumentError("h must be positive")
    h = float(h)
    if method == "auto":
        method = "grid" if domain.kind == "box-union" else "exact"
    if method == "exact":
        if domain.kind == "box":
            sides = np.diff(np.asarray(domain.boxes[0]), axis=1).ravel()
            value = float(np.prod(sides + 2 * h) - np.prod(np.maximum(sides - 2 * h, 0.0)))
            return NeighborhoodMeasure(h, value, "exact")
        if domain.kind == "polygon2d":
            from shapely.ops import unary_union

            tubes = [_edge_tube(p, q, h) for p, q in domain.edges()]
            return NeighborhoodMeasure(h, float(unary_union(tubes).area), "exact")
        raise UnsupportedDomainError("no exact neighbourhood measure for box unions")
    if method == "grid":
        value, resolution = _grid_neighborhood(domain, h)
        return NeighborhoodMeasure(h, value, "grid", resolution)
    raise InvalidArgumentError(f"unknown method {method!r}")


def _edge_tube(p, q, r):
    """Segment ``[p, q]`` dilated by the axis-aligned square of half-side ``r``."""
    from shapely.geometry import MultiPoint

    corners = np.array([[-r, -r], [r, -r], [r, r], [-r, r]])
    pts = np.vstack([np.asarray(p) + corners, np.asarray(q) + corners])
    return MultiPoint(pts).convex_hull


def sup_distance_to_segments(points: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Sup-norm distance from each point to the nearest of the segments.

    ``points`` is ``(n, 2)`` and ``edges`` is ``(m, 2, 2)``.  Along a segment
    the distance is a convex piecewise-linear function of the parameter, so
    its minimum sits at an endpoint, a zero of one coordinate difference, or
    a crossing of the two.
    """
    points = np.asarray(points, dtype=float)
    a = edges[None, :, 0, :]
    u = edges[None, :, 1, :] - a
    rel = points[:, None, :] - a  # (n, m, 2)
    A, B = rel[..., 0], rel[..., 1]
    ux, uy = u[..., 0], u[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cands = [
            np.zeros_like(A),
            np.ones_like(A),
            A / ux,
            B / uy,
            (A - B) / (ux - uy),
            (A + B) / (ux + uy),
        ]
    best = np.full(A.shape, np.inf)
    for t in cands:
        t = np.clip(np.nan_to_num(t, nan=0.0, posinf=0.0, neginf=0.0), 0.0, 1.0)
        val = np.maximum(np.abs(A - t * ux), np.abs(B - t * uy))
        best = np.minimum(best, val)
    return best.min(axis=1)


def _near_sup_distance(points: np.ndarray, edges: np.ndarray, cap: float) -> np.ndarray:
    """Sup-norm distance to the segments where it is below ``cap``, ``inf`` elsewhere."""
    dist = np.full(len(points), np.inf)
    if len(points) == 0:
        return dist
    tree = spatial.cKDTree(points)
    for e in edges:
        mid = e.mean(axis=0)
        reach = float(np.max(np.abs(e[1] - e[0]))) / 2 + cap
        idx = np.asarray(tree.query_ball_point(mid, reach, p=np.inf), dtype=int)
        if idx.size:
            dist[idx] = np.minimum(dist[idx], sup_distance_to_segments(points[idx], e[None]))
    return dist


def _box_overlap(boxes: np.ndarray, centers: np.ndarray, w: float) -> np.ndarray:
    """Measure of ``Omega ∩ (c + [-w, w]^d)`` for each center (box kinds)."""
    lo = centers[:, None, :] - w
    hi = centers[:, None, :] + w
    ext = np.minimum(hi, boxes[None, :, :, 1]) - np.maximum(lo, boxes[None, :, :, 0])
    return np.prod(np.clip(ext, 0.0, None), axis=2).sum(axis=1)


def _grid_neighborhood(domain: Domain, h: float, chunk: int = 200_000):
    """Adaptive grid count of the neighbourhood measure.

    Cells are refined only while they straddle the level set of the distance
    function; at the finest level (side <= h/16) a cell counts when its
    centre lies in the neighbourhood.
    """
    d = domain.dimension
    bb = domain.bounding_box()
    lo = bb[:, 0] - h
    side0 = float(np.max(bb[:, 1] - bb[:, 0]) + 2 * h) * (1 + 1e-9)
    levels = max(0, math.ceil(math.log2(side0 * GRID_FRACTION / h)))
    resolution = side0 / 2**levels

    if domain.kind == "polygon2d":
        edges = domain.edges()

        def classify(c, s, final):
            dist = _near_sup_distance(c, edges, h + s)
            if final:
                return dist < h, np.zeros(len(c), bool)
            return dist + s < h, dist - s >= h
    else:
        boxes = np.asarray(domain.boxes)

        def classify(c, s, final):
            inside = np.empty(len(c), bool)
            outside = np.empty(len(c), bool)
            step = max(1, chunk // len(boxes))
            for i in range(0, len(c), step):
                cc = c[i:i + step]
                if final:
                    w = h
                    full = (2 * w) ** d
                    m = _box_overlap(boxes, cc, w)
                    inside[i:i + step] = (m > 1e-12 * full) & (m < full * (1 - 1e-12))
                    outside[i:i + step] = False
                    continue
                inner = max(h - s, 0.0)
                m_in = _box_overlap(boxes, cc, inner) if inner > 0 else np.zeros(len(cc))
                full_in = (2 * inner) ** d
                inside[i:i + step] = (inner > 0) & (m_in > 1e-12 * full_in) & (m_in < full_in * (1 - 1e-12))
                outer = h + s
                full_out = (2 * outer) ** d
                m_out = _box_overlap(boxes, cc, outer)
                outside[i:i + step] = (m_out <= 1e-12 * full_out) | (m_out >= full_out * (1 - 1e-12))
            return inside, outside

    offsets = np.array(np.meshgrid(*[[-0.5, 0.5]] * d, indexing="ij")).reshape(d, -1).T
    centers = (lo + side0 / 2)[None, :]
    side = side0
    total = 0.0
    for level in range(levels + 1):
        final = level == levels
        inside, outside = classify(centers, side / 2, final)
        total += inside.sum() * side**d
        if final:
            break
        pending = centers[~(inside | outside)]
        side /= 2
        centers = (pending[:, None, :] + offsets[None, :, :] * side).reshape(-1, d)
        if len(centers) == 0:
            break
    return float(total), resolution


@dataclass(frozen=True)
class MinkowskiEstimate:
    """Neighbourhood measures and the boundary content they imply.

    ``ratios[i] = measures[i] / (2 h_i^(d - alpha))``; ``content`` is their
    maximum.  ``trend`` says whether the ratios drift as ``h`` shrinks, which
    signals that ``alpha`` is not the boundary dimension.
    """

    alpha: float
    scales: tuple
    measures: tuple
    ratios: tuple
    content: float
    spread: float
    trend: str
    wrong_alpha: bool
    method: str
    resolutions: tuple

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "scales": list(self.scales),
            "measures": list(self.measures),
            "ratios": list(self.ratios),
            "content": self.content,
            "spread": self.spread,
            "trend": self.trend,
            "wrong_alpha": self.wrong_alpha,
            "method": self.method,
            "resolutions": list(self.resolutions),
        }


# ratio spread tolerated before alpha is flagged as wrong
CONTENT_SPREAD_TOL = 0.10


def minkowski_content_estimate(domain: Domain, alpha: float, scales: Sequence[float],
                               method: str = "auto") -> MinkowskiEstimate:
    d = domain.dimension
    scales = [float(h) for h in scales]
    if not scales:
        raise InvalidArgumentError("empty scale list")
    if not (d - 1 <= alpha < d):
        raise InvalidArgumentError(f"alpha must lie in [{d - 1}, {d})")
    if any(h <= 0 for h in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise InvalidArgumentError("scales must be positive and strictly decreasing")
    results = [boundary_neighborhood(domain, h, method) for h in scales]
    measures = [r.value for r in results]
    ratios = [m / (2 * h ** (d - alpha)) for m, h in zip(measures, scales)]
    content = max(ratios)
    spread = (max(ratios) - min(ratios)) / content if content > 0 else 0.0
    wrong = spread > CONTENT_SPREAD_TOL
    if not wrong:
        trend = "stable"
    else:
        trend = "diverging" if ratios[-1] > ratios[0] else "vanishing"
    return MinkowskiEstimate(
        alpha=float(alpha),
        scales=tuple(scales),
        measures=tuple(measures),
        ratios=tuple(ratios),
        content=float(content),
        spread=float(spread),
        trend=trend,
        wrong_alpha=wrong,
        method=results[0].method,
        resolutions=tuple(r.resolution for r in results),
    )


# ---------------------------------------------------------------------------
# Inscribed cubes
# ---------------------------------------------------------------------------


def inscribed_cube_side(domain: Domain, rtol: float = 1e-3) -> float:
    """Side of a large axis-aligned cube contained in the domain.

    Exact (best member box) for box kinds.  For polygons a binary search on
    the half-side ``r`` keeps the polygon minus the union of its edges dilated
    by the square ``[-r, r]^2``; the search stops once the bracket is below
    ``rtol/10`` relative, and the feasible end is returned, so the result is a
    certified lower bound.
    """
    if domain.kind != "polygon2d":
        b = np.asarray(domain.boxes)
        return float(np.max(np.min(b[:, :, 1] - b[:, :, 0], axis=1)))

    from shapely.geometry import Polygon
    from shapely.ops import unary_union

    poly = Polygon(domain.polygon)
    edges = domain.edges()
    bb = domain.bounding_box()

    def feasible(r):
        tubes = unary_union([_edge_tube(p, q, r) for p, q in edges])
        core = poly.difference(tubes)
        return not core.is_empty and core.area > 0

    lo, hi = 0.0, 0.5 * float(np.min(bb[:, 1] - bb[:, 0]))
    if feasible(hi):
        return 2 * hi
    while hi - lo > 0.1 * rtol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return 2 * lo


@dataclass(frozen=True)
class IsoperimetricRecord:
    perimeter: float
    volume: float
    epsilon: float
    constant_c: float

    def to_dict(self) -> dict:
        return {
            "perimeter": self.perimeter,
            "volume": self.volume,
            "epsilon": self.epsilon,
            "constant_c": self.constant_c,
        }


def polygon_isoperimetric_check(domain: Domain) -> IsoperimetricRecord:
    """Measured constant ``c = perimeter * epsilon / area`` of a polygon."""
    if domain.kind != "polygon2d":
        raise UnsupportedDomainError("isoperimetric check needs a polygon2d domain")
    per = perimeter(domain)
    vol = volume(domain)
    eps = inscribed_cube_side(domain)
    return IsoperimetricRecord(per, vol, eps, per * eps / vol)


def comb_polygon(teeth: int, tooth_width: float, tooth_height: float,
                 base_height: float = 0.5, width: float = 1.0) -> Domain:
    """A ``width x base_height`` block with evenly spaced teeth on top.

    The first tooth is flush with the left edge and the last with the right
    edge.
    """
    if teeth < 2:
        raise InvalidDomainError("a comb needs at least two teeth")
    gap = (width - teeth * tooth_width) / (teeth - 1)
    if gap <= 0:
        raise InvalidDomainError("teeth do not fit on the base")
    top = base_height + tooth_height
    x0 = [i * (tooth_width + gap) for i in range(teeth)]
    x1 = [x + tooth_width for x in x0]
    x1[-1] = width
    verts = [(0.0, 0.0), (width, 0.0)]
    for i in reversed(range(teeth)):
        verts += [(x1[i], base_height), (x1[i], top), (x0[i], top), (x0[i], base_height)]
    # the outermost base corners are collinear with the sides
    return Domain.polygon2d(verts[:2] + verts[3:-1])
