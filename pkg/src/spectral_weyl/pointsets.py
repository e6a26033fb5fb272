"""Exponent sets: explicit lists, lattices and column-shifted cube tilings."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy import spatial

from .errors import (
    InvalidArgumentError,
    InvalidPointSetError,
    UndefinedSeparationError,
)
from .geometry import ConvexBody, norm_K

POINTSET_KINDS = ("explicit", "lattice", "column-tiling", "example1")

# absolute Euclidean tolerance for "lies on the sphere"
SPHERE_TOL = 1e-9
# above this many points separation uses a k-d tree instead of all pairs
BRUTE_FORCE_LIMIT = 10_000


@dataclass(frozen=True)
class Window:
    """The closed ball ``center + radius * K``."""

    body: ConvexBody
    radius: float
    center: tuple = None

    def __post_init__(self):
        if not self.radius >= 0:
            raise InvalidArgumentError("window radius must be >= 0")
        center = self.center
        if center is None:
            center = (0.0,) * self.body.dimension
        center = tuple(float(c) for c in center)
        if len(center) != self.body.dimension:
            raise InvalidArgumentError("window center has the wrong dimension")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return norm_K(self.body, np.asarray(points) - np.asarray(self.center)) <= self.radius


@dataclass(frozen=True, eq=False)
class PointSet:
    """A discrete set ``Lambda`` in ``R^d``.

    Generator kinds are never materialised as a whole; they produce the
    points inside a :class:`Window` on demand.  ``shift`` translates every
    kind.
    """

    dimension: int
    kind: str
    points: np.ndarray = None
    basis: np.ndarray = None
    offsets: Mapping = None
    radii: tuple = ()
    shift: tuple = None
    _basis_inv: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        d = self.dimension
        if self.kind not in POINTSET_KINDS:
            raise InvalidPointSetError(f"unknown point-set kind {self.kind!r}")
        if int(d) != d or d < 1:
            raise InvalidPointSetError("dimension must be a positive integer")
        shift = np.zeros(d) if self.shift is None else np.asarray(self.shift, dtype=float)
        if shift.shape != (d,):
            raise InvalidPointSetError("shift has the wrong dimension")
        object.__setattr__(self, "shift", shift)
        if self.kind == "explicit":
            pts = np.asarray(self.points if self.points is not None else np.empty((0, d)), dtype=float)
            if pts.size == 0:
                pts = np.empty((0, d))
            if pts.ndim != 2 or pts.shape[1] != d:
                raise InvalidPointSetError(f"explicit points must be {d}-vectors")
            pts = pts + shift
            order = np.lexsort(pts.T[::-1]) if len(pts) else np.arange(0)
            object.__setattr__(self, "points", pts[order])
        elif self.kind == "lattice":
            basis = np.eye(d) if self.basis is None else np.asarray(self.basis, dtype=float)
            if basis.shape != (d, d) or abs(np.linalg.det(basis)) < 1e-300:
                raise InvalidPointSetError("lattice basis must be an invertible d x d matrix")
            object.__setattr__(self, "basis", basis)
            object.__setattr__(self, "_basis_inv", np.linalg.inv(basis))
        else:
            if d < 2:
                raise InvalidPointSetError("column tilings need dimension >= 2")
            if self.kind == "column-tiling":
                table = {}
                for v, t in dict(self.offsets or {}).items():
                    v = tuple(int(c) for c in np.atleast_1d(v))
                    if len(v) != d - 1:
                        raise InvalidPointSetError("offset keys must be (d-1)-vectors")
                    if not 0.0 <= t < 1.0:
                        raise InvalidPointSetError(f"offset {t} outside [0, 1)")
                    table[v] = float(t)
                object.__setattr__(self, "offsets", table)
            else:
                radii = tuple(float(r) for r in self.radii)
                if any(r < 1 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
                    raise InvalidPointSetError("radii must be strictly increasing and >= 1")
                object.__setattr__(self, "radii", radii)

    # -- column offsets ---------------------------------------------------

    def column_offsets(self, columns: np.ndarray) -> np.ndarray:
        """Offset ``t(v)`` in ``[0, 1)`` for each column index row ``v``."""
        columns = np.atleast_2d(np.asarray(columns))
        if self.kind == "column-tiling":
            return np.array([self.offsets.get(tuple(int(c) for c in v), 0.0) for v in columns])
        if self.kind == "example1":
            return example1_offsets(columns, self.radii)
        raise InvalidPointSetError("column offsets exist only for column tilings")

    def assigned_radius(self, columns: np.ndarray) -> np.ndarray:
        """Sphere radius each column was moved onto (``nan`` if unmoved)."""
        columns = np.atleast_2d(np.asarray(columns, dtype=float))
        sq = np.sum(columns * columns, axis=1)
        out = np.full(len(columns), np.nan)
        for R in reversed(self.radii):
            out[sq <= R * R] = R
        return out

    # -- enumeration ------------------------------------------------------

    def _blocks(self, window: Window) -> Iterator[np.ndarray]:
        """Candidate points covering the window, in index order, one slab at a time."""
        d = self.dimension
        center = np.asarray(window.center)
        hw = window.radius * window.body.half_widths()
        if self.kind == "explicit":
            yield self.points
            return
        if self.kind == "lattice":
            rel = self._basis_inv @ (center - self.shift)
            ext = np.abs(self._basis_inv) @ hw
            lo = np.ceil(rel - ext - 1e-9).astype(int)
            hi = np.floor(rel + ext + 1e-9).astype(int)
            if np.any(hi < lo):
                return
            rest = [np.arange(lo[j], hi[j] + 1) for j in range(1, d)]
            tail = (np.array(np.meshgrid(*rest, indexing="ij")).reshape(d - 1, -1).T
                    if d > 1 else np.zeros((1, 0), dtype=int))
            for first in range(lo[0], hi[0] + 1):
                idx = np.hstack([np.full((len(tail), 1), first), tail])
                yield idx @ self.basis.T + self.shift
            return
        # column tilings: lattice in the first d-1 coordinates, shifted Z in the last
        rel = center - self.shift
        lo = np.ceil(rel[:-1] - hw[:-1] - 1e-9).astype(int)
        hi = np.floor(rel[:-1] + hw[:-1] + 1e-9).astype(int)
        if np.any(hi < lo):
            return
        zlo, zhi = rel[-1] - hw[-1], rel[-1] + hw[-1]
        ranges = [range(lo[j], hi[j] + 1) for j in range(d - 1)]
        for head in itertools.product(*ranges[:1]):
            cols = np.array(list(itertools.product(head, *ranges[1:])), dtype=int).reshape(-1, d - 1)
            t = self.column_offsets(cols)
            kmin = np.ceil(zlo - t - 1e-9).astype(int)
            kmax = np.floor(zhi - t + 1e-9).astype(int)
            counts = np.maximum(kmax - kmin + 1, 0)
            if counts.sum() == 0:
                continue
            rep = np.repeat(np.arange(len(cols)), counts)
            starts = np.repeat(kmin, counts)
            within = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
            k = starts + within
            pts = np.hstack([cols[rep].astype(float), (k + t[rep])[:, None]])
            yield pts + self.shift

    def enumerate(self, window: Window) -> np.ndarray:
        """All points ``lam`` with ``||lam - center||_K <= radius`` as an ``(n, d)`` array."""
        self._check_window(window)
        parts = [b[window.contains(b)] for b in self._blocks(window)]
        parts = [p for p in parts if len(p)]
        return np.vstack(parts) if parts else np.empty((0, self.dimension))

    def count(self, window: Window) -> int:
        """Number of points in the window, without keeping them."""
        self._check_window(window)
        return int(sum(int(np.count_nonzero(window.contains(b))) for b in self._blocks(window)))

    def _check_window(self, window: Window):
        if window.body.dimension != self.dimension:
            raise InvalidPointSetError(
                f"window of dimension {window.body.dimension} for a {self.dimension}-dimensional set"
            )

    def translated(self, x) -> "PointSet":
        """``Lambda + x`` as a point set of the same kind."""
        x = np.asarray(x, dtype=float)
        if self.kind == "explicit":
            return PointSet(self.dimension, "explicit", points=self.points + x)
        return PointSet(self.dimension, self.kind, basis=self.basis, offsets=self.offsets,
                        radii=self.radii, shift=self.shift + x)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dimension": self.dimension}
        if self.kind == "explicit":
            out["points"] = self.points.tolist()
        elif self.kind == "lattice":
            out["basis"] = self.basis.tolist()
        elif self.kind == "column-tiling":
            out["offsets"] = [list(v) + [t] for v, t in sorted(self.offsets.items())]
        else:
            out["radii"] = list(self.radii)
        if np.any(self.shift):
            out["shift"] = self.shift.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PointSet":
        """Build from a generator spec (see the README for the JSON layout)."""
        try:
            kind = data["kind"]
            d = int(data["dimension"])
            shift = data.get("shift")
            if kind == "explicit":
                return cls(d, kind, points=np.asarray(data.get("points", []), dtype=float).reshape(-1, d),
                           shift=shift)
            if kind == "lattice":
                basis = data.get("basis")
                if basis is None and "scale" in data:
                    basis = float(data["scale"]) * np.eye(d)
                return cls(d, kind, basis=basis, shift=shift)
            if kind == "column-tiling":
                offsets = {tuple(int(c) for c in row[:-1]): float(row[-1])
                           for row in data.get("offsets", [])}
                return cls(d, kind, offsets=offsets, shift=shift)
            if kind == "example1":
                return cls(d, kind, radii=tuple(data.get("radii", [])), shift=shift)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPointSetError(f"malformed generator spec: {exc}") from exc
        raise InvalidPointSetError(f"unknown point-set kind {data.get('kind')!r}")


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def explicit(points) -> PointSet:
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise InvalidPointSetError("explicit points must be a 2-d array")
    return PointSet(points.shape[1], "explicit", points=points)


def lattice(d: int, basis=None, scale: float | None = None) -> PointSet:
    """``basis @ Z^d``; ``scale`` is a shortcut for ``scale * identity``."""
    if basis is None and scale is not None:
        basis = scale * np.eye(d)
    return PointSet(d, "lattice", basis=basis)


def column_tiling_spectrum(d: int, offsets: Mapping[Sequence[int], float]) -> PointSet:
    """``{(v, k + t(v)) : v in Z^(d-1), k in Z}``; columns missing from ``offsets`` stay at 0.

    Unit cubes translated by these points tile space, so the set is a
    spectrum of ``[0, 1]^d``.
    """
    return PointSet(d, "column-tiling", offsets=offsets)


def example1_offsets(columns: np.ndarray, radii: Sequence[float]) -> np.ndarray:
    """Offsets that put one defining vertex of each column on its sphere.

    Column ``v`` goes to the smallest radius ``R >= |v|``; its offset is the
    fractional part of ``sqrt(R^2 - |v|^2)``.  Columns beyond the last radius
    keep offset 0.
    """
    columns = np.atleast_2d(np.asarray(columns, dtype=float))
    sq = np.sum(columns * columns, axis=1)
    out = np.zeros(len(columns))
    done = np.zeros(len(columns), bool)
    for R in radii:
        sel = (~done) & (sq <= R * R)
        height = np.sqrt(R * R - sq[sel])
        out[sel] = height - np.floor(height)
        done |= sel
    return out


def construct_example1(d: int, radii: Sequence[float], window: Window | None = None) -> PointSet:
    """Column-shifted cube-tiling spectrum with defining vertices on spheres.

    With ``window`` the points inside it are materialised into an explicit set.
    """
    ps = PointSet(d, "example1", radii=tuple(radii))
    if window is None:
        return ps
    return PointSet(d, "explicit", points=ps.enumerate(window))


# ---------------------------------------------------------------------------
# Measurements on point sets
# ---------------------------------------------------------------------------


def separation(ps: PointSet, window: Window) -> float:
    """Minimum pairwise Euclidean distance among the points in the window."""
    pts = ps.enumerate(window)
    return min_distance(pts)


def min_distance(pts: np.ndarray) -> float:
    n = len(pts)
    if n < 2:
        raise UndefinedSeparationError("separation needs at least two points")
    if n > BRUTE_FORCE_LIMIT:
        dist, _ = spatial.cKDTree(pts).query(pts, k=2)
        return float(dist[:, 1].min())
    best = math.inf
    step = max(1, 4_000_000 // n)
    for i in range(0, n, step):
        block = pts[i:i + step]
        diff = block[:, None, :] - pts[None, :, :]
        dd = np.sum(diff * diff, axis=-1)
        rows = np.arange(len(block))
        dd[rows, rows + i] = np.inf
        best = min(best, float(dd.min()))
    return math.sqrt(best)


def on_sphere_count(ps: PointSet, radius: float, *, tol: float = SPHERE_TOL,
                    upper_half: bool = True, assigned_only: bool = False) -> int:
    """Points with ``| |lam| - radius | <= tol`` (Euclidean norm).

    ``upper_half`` keeps only points with a non-negative last coordinate.
    ``assigned_only`` (example1 sets) keeps only the columns that were moved
    onto this sphere.
    """
    d = ps.dimension
    pts = ps.enumerate(Window(ConvexBody.ball(d), radius + 1.0))
    r = np.sqrt(np.sum(pts * pts, axis=1))
    mask = np.abs(r - radius) <= tol
    if upper_half:
        mask &= pts[:, -1] >= 0
    if assigned_only:
        if ps.kind != "example1":
            raise InvalidPointSetError("assigned_only applies to example1 sets")
        assigned = ps.assigned_radius(pts[:, :-1] - ps.shift[:-1])
        mask &= np.isclose(assigned, radius, rtol=0, atol=tol)
    return int(mask.sum())


@dataclass(frozen=True)
class LandauDensity:
    """Extreme counts over sampled cube centres; inner approximations of ``D_R^+-``."""

    R: float
    D_plus: int
    D_minus: int
    normalized_plus: float
    normalized_minus: float
    argmax: tuple
    argmin: tuple
    n_centers: int
    sampling: dict

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "D_plus": self.D_plus,
            "D_minus": self.D_minus,
            "normalized_plus": self.normalized_plus,
            "normalized_minus": self.normalized_minus,
            "argmax": list(self.argmax),
            "argmin": list(self.argmin),
            "n_centers": self.n_centers,
            "sampling": self.sampling,
        }


def center_grid(search_box, spacing: float) -> np.ndarray:
    """Grid of points with the given spacing covering the closed box."""
    search_box = np.asarray(search_box, dtype=float)
    axes = []
    for lo, hi in search_box:
        n = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
        axes.append(lo + spacing * np.arange(n))
    return np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T


def landau_density(ps: PointSet, R: float, search_box, centers=None,
                   spacing: float = 0.25) -> LandauDensity:
    """Max and min of ``#(Lambda ∩ Q_R(x))`` over sampled centres ``x``.

    ``Q_R(x)`` is the closed cube of side ``2R``.  Without explicit
    ``centers`` a grid of the given spacing (at most 0.25) over
    ``search_box`` is used.
    """
    if not R > 0:
        raise InvalidArgumentError("R must be positive")
    d = ps.dimension
    search_box = np.asarray(search_box, dtype=float).reshape(d, 2)
    if centers is None:
        if not 0 < spacing <= 0.25:
            raise InvalidArgumentError("center grid spacing must be in (0, 0.25]")
        centers = center_grid(search_box, spacing)
        sampling = {"kind": "grid", "spacing": spacing, "search_box": search_box.tolist()}
    else:
        centers = np.asarray(centers, dtype=float).reshape(-1, d)
        sampling = {"kind": "explicit", "n": len(centers)}
    if len(centers) == 0:
        raise InvalidArgumentError("empty center set")
    lo, hi = centers.min(axis=0), centers.max(axis=0)
    mid = (lo + hi) / 2
    reach = R + np.max((hi - lo) / 2)
    pts = ps.enumerate(Window(ConvexBody.cube(d), reach, tuple(mid)))
    counts = np.zeros(len(centers), dtype=np.int64)
    if len(pts):
        step = max(1, 2_000_000 // len(pts))
        for i in range(0, len(centers), step):
            c = centers[i:i + step]
            inside = np.all(np.abs(pts[None, :, :] - c[:, None, :]) <= R, axis=2)
            counts[i:i + step] = inside.sum(axis=1)
    imax, imin = int(np.argmax(counts)), int(np.argmin(counts))
    vol = (2 * R) ** d
    return LandauDensity(
        R=float(R),
        D_plus=int(counts[imax]),
        D_minus=int(counts[imin]),
        normalized_plus=float(counts[imax] / vol),
        normalized_minus=float(counts[imin] / vol),
        argmax=tuple(centers[imax].tolist()),
        argmin=tuple(centers[imin].tolist()),
        n_centers=len(centers),
        sampling=sampling,
    )


# ---------------------------------------------------------------------------
# Point list files
# ---------------------------------------------------------------------------


def read_point_list(path) -> PointSet:
    """One point per line, space-separated decimals; ``#`` starts a comment."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError as exc:
                raise InvalidPointSetError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InvalidPointSetError(f"{path}: no points")
    d = len(rows[0])
    if any(len(r) != d for r in rows):
        raise InvalidPointSetError(f"{path}: points of mixed dimension")
    return PointSet(d, "explicit", points=np.array(rows))


def format_point_list(points: np.ndarray, header: str = "") -> str:
    lines = [f"# {ln}" for ln in header.splitlines()]
    lines += [" ".join(f"{c:.17g}" for c in p) for p in points]
    return "\n".join(lines) + "\n"
