"""Verdicts on exponent sets: orthogonality, tiling sums, frame bounds,
counting curves with error-exponent fits, and empty-cube bounds."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import FitUnavailableError, InvalidArgumentError, UndefinedSeparationError
from .fourier import DEFAULT_SAMPLES, PowerSpectrum, TailCertificate, tail_certificate
from .geometry import (
    ConvexBody,
    Domain,
    body_volume,
    inscribed_cube_side,
    minkowski_content_estimate,
    perimeter,
    volume,
)
from .pointsets import PointSet, Window, min_distance

ORTHOGONALITY_TOL = 1e-9
TILING_SAFETY = 1.5
MAX_FRAME_RATIO = 1e6
DEFAULT_TRUNCATION = 100.0
VERDICTS = ("orthogonal-basis-consistent", "frame-consistent", "inconsistent")


def worker_count() -> int:
    """Worker cap from ``SPECTRAL_WEYL_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SPECTRAL_WEYL_THREADS", "1")))
    except ValueError:
        return 1


def _ordered_map(func, items):
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# ---------------------------------------------------------------------------
# Orthogonality and tiling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrthogonalityResult:
    max_residual: float
    worst_pair: tuple | None
    n_points: int
    n_pairs: int
    tol: float
    passed: bool
    vacuous: bool = False

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "worst_pair": None if self.worst_pair is None else [list(p) for p in self.worst_pair],
            "n_points": self.n_points,
            "n_pairs": self.n_pairs,
            "tol": self.tol,
            "passed": self.passed,
            "vacuous": self.vacuous,
        }


def check_orthogonality(ps: PointSet, dom: Domain, w: Window, tol: float = ORTHOGONALITY_TOL,
                        block: int = 256) -> OrthogonalityResult:
    """Largest ``f(lam - mu)`` over all distinct pairs in the window."""
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    pts = ps.enumerate(w)
    n = len(pts)
    if n < 2:
        return OrthogonalityResult(0.0, None, n, 0, tol, True, vacuous=True)
    spectrum = PowerSpectrum(dom)
    best, worst = -1.0, None
    for i in range(0, n - 1, block):
        rows = pts[i:i + block]
        # pairs (i', j) with j > i'
        cols = pts[i + 1:]
        diff = rows[:, None, :] - cols[None, :, :]
        vals = spectrum(diff.reshape(-1, ps.dimension)).reshape(len(rows), len(cols))
        ii, jj = np.meshgrid(np.arange(len(rows)), np.arange(len(cols)), indexing="ij")
        vals[jj < ii] = -1.0  # j index is offset by i + 1
        k = int(np.argmax(vals))
        if vals.flat[k] > best:
            r, c = divmod(k, len(cols))
            best = float(vals.flat[k])
            worst = (tuple(rows[r].tolist()), tuple(cols[c].tolist()))
    return OrthogonalityResult(best, worst, n, n * (n - 1) // 2, tol, best <= tol)


@dataclass(frozen=True)
class TilingResidual:
    x: tuple
    T: float
    sum: float
    residual: float
    bound: float
    density_factor: float
    n_terms: int

    def to_dict(self) -> dict:
        return {
            "x": list(self.x),
            "T": self.T,
            "sum": self.sum,
            "residual": self.residual,
            "bound": self.bound,
            "density_factor": self.density_factor,
            "n_terms": self.n_terms,
        }


def _default_body(d: int) -> ConvexBody:
    return ConvexBody.ball(d)


def _tiling_sum(spectrum, body, pts, x, T):
    rel = x[None, :] - pts
    mask = body.norm(rel) <= T
    vals = spectrum(rel[mask]) if mask.any() else np.zeros(0)
    return float(np.sum(vals)), int(mask.sum())


def tiling_residual(ps: PointSet, dom: Domain, x, T: float = DEFAULT_TRUNCATION, *,
                    body: ConvexBody | None = None,
                    certificate: TailCertificate | None = None,
                    n_samples: int = DEFAULT_SAMPLES, seed: int = 0) -> TilingResidual:
    """Truncated tiling sum ``sum_{||lam - x||_K <= T} f(x - lam)`` against ``|Omega|^2``.

    The dropped terms are bounded by the tail certificate at ``T`` times the
    local density ``count(T) / (|K| T^d)``.
    """
    body = body or _default_body(ps.dimension)
    x = np.asarray(x, dtype=float)
    if certificate is None:
        certificate = tail_certificate(PowerSpectrum(dom), body, T, n_samples=n_samples, seed=seed)
    pts = ps.enumerate(Window(body, T, tuple(x)))
    if len(pts) == 0:
        raise InvalidArgumentError("truncation window holds no points")
    total, n = _tiling_sum(PowerSpectrum(dom), body, pts, x, T)
    rho = n / (body_volume(body) * T**ps.dimension)
    return TilingResidual(
        x=tuple(x.tolist()),
        T=float(T),
        sum=total,
        residual=abs(total - volume(dom) ** 2),
        bound=rho * certificate.tail_bound,
        density_factor=rho,
        n_terms=n,
    )


@dataclass(frozen=True)
class FrameBounds:
    """Sampled frame bounds, normalised by ``|Omega|^2``."""

    A_hat: float
    B_hat: float
    min_sum: float
    max_sum: float
    bound: float
    samples: tuple
    certificate: TailCertificate
    sampling: dict

    def to_dict(self) -> dict:
        return {
            "A_hat": self.A_hat,
            "B_hat": self.B_hat,
            "min_sum": self.min_sum,
            "max_sum": self.max_sum,
            "bound": self.bound,
            "samples": [s.to_dict() for s in self.samples],
            "certificate": self.certificate.to_dict(),
            "sampling": self.sampling,
        }


def default_centers(ps: PointSet, n: int = 32, seed: int = 0, box=None):
    """Scrambled Sobol centres and the sampling description.

    Lattices are sampled over their fundamental cell; other sets over
    ``box`` (default ``[0, 1]^d``).
    """
    d = ps.dimension
    u = stats.qmc.Sobol(d, scramble=True, seed=np.random.default_rng([seed, 7919])).random(n)
    if ps.kind == "lattice" and box is None:
        return u @ ps.basis.T + ps.shift, {
            "kind": "sobol-fundamental-cell", "n": n, "seed": seed, "basis": ps.basis.tolist(),
        }
    box = np.array([[0.0, 1.0]] * d) if box is None else np.asarray(box, dtype=float)
    centers = box[:, 0] + u * (box[:, 1] - box[:, 0])
    return centers, {"kind": "sobol-box", "n": n, "seed": seed, "box": box.tolist()}


def estimate_frame_bounds(ps: PointSet, dom: Domain, sample_centers=None,
                          T: float = DEFAULT_TRUNCATION, *, body: ConvexBody | None = None,
                          n_centers: int = 32, seed: int = 0, n_samples: int = DEFAULT_SAMPLES,
                          certificate: TailCertificate | None = None) -> FrameBounds:
    """Sampled lower/upper frame bounds from tiling sums.

    ``A_hat`` is the smallest normalised sum minus the normalised tail bound
    and ``B_hat`` the largest plus it.
    """
    body = body or _default_body(ps.dimension)
    if sample_centers is None:
        centers, sampling = default_centers(ps, n_centers, seed)
    else:
        centers = np.asarray(sample_centers, dtype=float).reshape(-1, ps.dimension)
        sampling = {"kind": "explicit", "n": len(centers)}
    if len(centers) < 32:
        raise InvalidArgumentError("frame-bound estimation needs at least 32 centers")
    if certificate is None:
        certificate = tail_certificate(PowerSpectrum(dom), body, T, n_samples=n_samples, seed=seed)
    spectrum = PowerSpectrum(dom)
    lo, hi = centers.min(axis=0), centers.max(axis=0)
    mid = (lo + hi) / 2
    # every window ||lam - x||_K <= T sits in the cube window around mid
    reach = T * float(np.max(body.half_widths())) + float(np.max(hi - lo))
    pts = ps.enumerate(Window(ConvexBody.cube(ps.dimension), reach, tuple(mid)))
    kvol = body_volume(body) * T**ps.dimension
    omega2 = volume(dom) ** 2

    def one(x):
        total, n = _tiling_sum(spectrum, body, pts, x, T)
        rho = n / kvol
        return TilingResidual(tuple(x.tolist()), float(T), total, abs(total - omega2),
                              rho * certificate.tail_bound, rho, n)

    samples = _ordered_map(one, list(centers))
    sums = np.array([s.sum for s in samples])
    bound = max(s.bound for s in samples)
    return FrameBounds(
        A_hat=float(sums.min() / omega2 - bound / omega2),
        B_hat=float(sums.max() / omega2 + bound / omega2),
        min_sum=float(sums.min()),
        max_sum=float(sums.max()),
        bound=float(bound),
        samples=tuple(samples),
        certificate=certificate,
        sampling=sampling,
    )


@dataclass(frozen=True)
class VerificationReport:
    orthogonality_max_residual: float
    worst_pair: tuple | None
    orthogonality: OrthogonalityResult
    separation: float | None
    tiling_samples: tuple
    tail: TailCertificate
    A_hat: float
    B_hat: float
    verdict: str
    claim: str
    settings: dict

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "claim": self.claim,
            "orthogonality_max_residual": self.orthogonality_max_residual,
            "worst_pair": None if self.worst_pair is None else [list(p) for p in self.worst_pair],
            "orthogonality": self.orthogonality.to_dict(),
            "separation": self.separation,
            "tiling_samples": [s.to_dict() for s in self.tiling_samples],
            "tail": self.tail.to_dict(),
            "A_hat": self.A_hat,
            "B_hat": self.B_hat,
            "settings": self.settings,
        }


def orthogonality_window_radius(ps: PointSet, dom: Domain, body: ConvexBody,
                                target: int = 1000) -> float:
    """Radius whose K-ball should hold about ``target`` points of a density-``|Omega|`` set."""
    return (target / (body_volume(body) * volume(dom))) ** (1 / ps.dimension)


def verify(ps: PointSet, dom: Domain, *, claim: str = "auto", tol: float = ORTHOGONALITY_TOL,
           T: float = DEFAULT_TRUNCATION, window: Window | None = None,
           centers=None, n_centers: int = 32, seed: int = 0,
           n_samples: int = DEFAULT_SAMPLES, safety: float = TILING_SAFETY,
           body: ConvexBody | None = None) -> VerificationReport:
    """Run the orthogonality, separation, tiling and frame-bound checks.

    ``claim`` selects what is being verified: ``"spectrum"`` (orthogonal
    basis), ``"frame"``, or ``"auto"`` (the strongest verdict that holds).
    """
    if claim not in ("auto", "spectrum", "frame"):
        raise InvalidArgumentError(f"unknown claim {claim!r}")
    body = body or _default_body(ps.dimension)
    if window is None:
        window = Window(body, orthogonality_window_radius(ps, dom, body))
    orth = check_orthogonality(ps, dom, window, tol)
    try:
        sep = min_distance(ps.enumerate(window))
    except UndefinedSeparationError:
        sep = None
    frame = estimate_frame_bounds(ps, dom, centers, T, body=body, n_centers=n_centers,
                                  seed=seed, n_samples=n_samples)
    omega2 = volume(dom) ** 2
    orthogonal_ok = (orth.max_residual <= tol and not orth.vacuous and all(
        s.residual <= s.bound * safety + tol * omega2 for s in frame.samples))
    noise_floor = frame.bound / omega2
    frame_ok = frame.A_hat > noise_floor and frame.B_hat / frame.A_hat < MAX_FRAME_RATIO
    if claim == "spectrum":
        verdict = VERDICTS[0] if orthogonal_ok else VERDICTS[2]
    elif claim == "frame":
        verdict = VERDICTS[1] if frame_ok else VERDICTS[2]
    else:
        verdict = VERDICTS[0] if orthogonal_ok else VERDICTS[1] if frame_ok else VERDICTS[2]
    settings = {
        "tol": tol, "T": T, "safety": safety, "seed": seed, "n_samples": n_samples,
        "window": {"body": window.body.to_dict(), "radius": window.radius,
                   "center": list(window.center)},
        "body": body.to_dict(), "sampling": frame.sampling,
    }
    return VerificationReport(
        orthogonality_max_residual=orth.max_residual,
        worst_pair=orth.worst_pair,
        orthogonality=orth,
        separation=sep,
        tiling_samples=frame.samples,
        tail=frame.certificate,
        A_hat=frame.A_hat,
        B_hat=frame.B_hat,
        verdict=verdict,
        claim=claim,
        settings=settings,
    )


# ---------------------------------------------------------------------------
# Counting curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    alpha_hat: float
    C_hat: float
    residual: float
    points_used: int
    envelope: tuple
    eta: float

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "C_hat": self.C_hat,
            "residual": self.residual,
            "points_used": self.points_used,
            "envelope": [list(p) for p in self.envelope],
            "eta": self.eta,
        }


@dataclass(frozen=True)
class CountingCurve:
    """Samples ``(R, N(R), E(R))`` with ``E = N - |K| |Omega| R^d``."""

    body: ConvexBody
    domain: Domain
    center: tuple
    main_coefficient: float
    samples: tuple
    fit: ExponentFit | None = field(default=None)

    @property
    def radii(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def counts(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def errors(self) -> np.ndarray:
        return np.array([s[2] for s in self.samples])

    def to_csv(self) -> str:
        lines = ["R,N,E"]
        lines += [f"{R:.15g},{N:d},{E:.15g}" for R, N, E in self.samples]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "body": self.body.to_dict(),
            "domain": self.domain.to_dict(),
            "center": list(self.center),
            "main_coefficient": self.main_coefficient,
            "n_samples": len(self.samples),
            "fit": None if self.fit is None else self.fit.to_dict(),
        }


def counting_curve(ps: PointSet, dom: Domain, body: ConvexBody, radii, center=None) -> CountingCurve:
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(np.diff(radii) <= 0):
        raise InvalidArgumentError("radii must be a non-empty increasing list")
    d = ps.dimension
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    pts = ps.enumerate(Window(body, float(radii[-1]), tuple(center)))
    norms = np.sort(body.norm(pts - center)) if len(pts) else np.empty(0)
    counts = np.searchsorted(norms, radii, side="right")
    coef = body_volume(body) * volume(dom)
    samples = tuple(
        (float(R), int(N), float(N - coef * R**d)) for R, N in zip(radii, counts)
    )
    return CountingCurve(body, dom, tuple(center.tolist()), coef, samples)


def fit_error_exponent(curve: CountingCurve, eta: float = 0.5) -> ExponentFit:
    """Log-log fit of the upper envelope of ``|E(R)|``.

    Samples with ``|E| <= eta`` are dropped; of the rest, the largest ``|E|``
    in each dyadic block ``[2^k, 2^(k+1))`` enters a least-squares line.
    """
    R, E = curve.radii, np.abs(curve.errors)
    use = E > eta
    if use.sum() < 8:
        raise FitUnavailableError(f"only {int(use.sum())} samples with |E| > {eta}")
    R, E = R[use], E[use]
    block = np.floor(np.log2(R)).astype(int)
    env = []
    for b in np.unique(block):
        sel = np.flatnonzero(block == b)
        k = sel[np.argmax(E[sel])]
        env.append((float(R[k]), float(E[k])))
    if len(env) < 2:
        raise FitUnavailableError("samples span fewer than two dyadic blocks")
    lx, ly = np.log(np.array(env)).T
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return ExponentFit(
        alpha_hat=float(slope),
        C_hat=float(math.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid**2))),
        points_used=len(env),
        envelope=tuple(env),
        eta=float(eta),
    )


def error_envelope_constant(curve: CountingCurve, alpha: float | None = None) -> float:
    """Smallest ``C`` with ``|E(R)| <= C R^alpha`` on every sample (default ``alpha = d - 1``)."""
    d = curve.body.dimension
    alpha = d - 1 if alpha is None else alpha
    return float(np.max(np.abs(curve.errors) / curve.radii**alpha))


def center_spread(ps: PointSet, dom: Domain, body: ConvexBody, radii, centers,
                  alpha: float | None = None) -> dict:
    """Error constants ``max |E(R)| / R^alpha`` of counting curves at several centres.

    Uniformity over all translates cannot be checked finitely; the spread
    over the sampled centres is what gets recorded.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, ps.dimension)
    consts = [error_envelope_constant(counting_curve(ps, dom, body, radii, c), alpha) for c in centers]
    return {
        "centers": centers.tolist(),
        "constants": consts,
        "min": float(min(consts)),
        "max": float(max(consts)),
        "spread": float(max(consts) / min(consts)) if min(consts) > 0 else math.inf,
    }


# ---------------------------------------------------------------------------
# Empty cubes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmptyCube:
    """Largest open cube inside ``search_box`` free of points."""

    side: float
    corner: tuple
    delta: float
    flag: str | None = None

    @property
    def R_star(self) -> float:
        return self.side / 2

    def to_dict(self) -> dict:
        return {"side": self.side, "R_star": self.R_star, "corner": list(self.corner),
                "delta": self.delta, "flag": self.flag}


def largest_empty_cube(ps: PointSet, search_box, delta: float = 1e-3,
                       chunk: int = 2_000_000) -> EmptyCube:
    """Largest axis-aligned cube in ``search_box`` whose open interior misses ``Lambda``.

    A maximal empty cube can be slid down in each coordinate until its lower
    face meets a point coordinate or the box, so only lower corners drawn
    from those coordinates are tried; for each, the largest admissible side
    is computed directly.  The result is exact, so it is in particular
    within ``delta`` of the optimum.
    """
    if not delta > 0:
        raise InvalidArgumentError("delta must be positive")
    d = ps.dimension
    box = np.asarray(search_box, dtype=float).reshape(d, 2)
    if np.any(box[:, 1] <= box[:, 0]):
        raise InvalidArgumentError("search box is empty")
    mid = box.mean(axis=1)
    half = float(np.max(box[:, 1] - box[:, 0]) / 2)
    pts = ps.enumerate(Window(ConvexBody.cube(d), half, tuple(mid)))
    if len(pts):
        pts = pts[np.all((pts >= box[:, 0]) & (pts <= box[:, 1]), axis=1)]
    if len(pts) == 0:
        side = float(np.min(box[:, 1] - box[:, 0]))
        return EmptyCube(side, tuple(box[:, 0].tolist()), delta, flag="no-points")
    axes = [np.unique(np.concatenate([[box[j, 0]], pts[pts[:, j] < box[j, 1], j]])) for j in range(d)]
    corners = np.array(np.meshgrid(*axes, indexing="ij")).reshape(d, -1).T
    best, best_corner = -1.0, None
    step = max(1, chunk // (len(pts) * d))
    for i in range(0, len(corners), step):
        c = corners[i:i + step]
        side = np.min(box[:, 1][None, :] - c, axis=1)
        gap = pts[None, :, :] - c[:, None, :]
        blocking = np.all(gap > 0, axis=2)
        reach = np.where(blocking, gap.max(axis=2), np.inf)
        side = np.minimum(side, reach.min(axis=1))
        k = int(np.argmax(side))
        if side[k] > best:
            best, best_corner = float(side[k]), tuple(c[k].tolist())
    return EmptyCube(best, best_corner, delta)


@dataclass(frozen=True)
class EmptyCubeReport:
    """Measured empty-cube radius against the two constant-free bounds.

    ``bound_minkowski = radicand^(1/(d - alpha))`` with
    ``radicand = B |boundary|_alpha / (A |Omega|)``, and
    ``bound_inscribed = (B / A) / epsilon``.
    """

    R_star: float
    side: float
    radicand: float
    bound_minkowski: float
    bound_inscribed: float
    c1: float
    c2: float
    alpha: float
    A: float
    B: float
    content: float
    volume: float
    epsilon: float
    comparison_ratio: float | None
    empty_cube: EmptyCube
    search_box: tuple

    def to_dict(self) -> dict:
        return {
            "R_star": self.R_star,
            "side": self.side,
            "radicand": self.radicand,
            "bound_minkowski": self.bound_minkowski,
            "bound_inscribed": self.bound_inscribed,
            "c1": self.c1,
            "c2": self.c2,
            "alpha": self.alpha,
            "A": self.A,
            "B": self.B,
            "content": self.content,
            "volume": self.volume,
            "epsilon": self.epsilon,
            "comparison_ratio": self.comparison_ratio,
            "empty_cube": self.empty_cube.to_dict(),
            "search_box": [list(iv) for iv in self.search_box],
        }


def default_content_scales(dom: Domain) -> list[float]:
    """Scales well below the smallest feature (edge or box side) of the domain."""
    if dom.kind == "polygon2d":
        e = dom.edges()
        feature = float(np.min(np.linalg.norm(e[:, 1] - e[:, 0], axis=1)))
    else:
        feature = float(np.min(np.diff(np.asarray(dom.boxes), axis=2)))
    return [feature * f for f in (0.1, 0.05, 0.025)]


def check_empty_cube_bounds(dom: Domain, ps: PointSet, alpha: float, A: float, B: float,
                            search_box, *, content: float | None = None, scales=None,
                            method: str = "auto", delta: float = 1e-3) -> EmptyCubeReport:
    d = dom.dimension
    if not alpha < d:
        raise InvalidArgumentError("alpha must be below the dimension")
    if not (A > 0 and B >= A):
        raise InvalidArgumentError("frame bounds need 0 < A <= B")
    eps = inscribed_cube_side(dom)
    if content is None:
        if scales is None:
            scales = default_content_scales(dom)
        content = minkowski_content_estimate(dom, alpha, scales, method).content
    vol = volume(dom)
    radicand = B * content / (A * vol)
    bound_minkowski = radicand ** (1.0 / (d - alpha))
    bound_inscribed = (B / A) / eps
    empty = largest_empty_cube(ps, search_box, delta)
    ratio = perimeter(dom) * eps / vol if dom.kind == "polygon2d" else None
    return EmptyCubeReport(
        R_star=empty.R_star,
        side=empty.side,
        radicand=float(radicand),
        bound_minkowski=float(bound_minkowski),
        bound_inscribed=float(bound_inscribed),
        c1=float(empty.R_star / bound_minkowski),
        c2=float(empty.R_star / bound_inscribed),
        alpha=float(alpha),
        A=float(A),
        B=float(B),
        content=float(content),
        volume=float(vol),
        epsilon=float(eps),
        comparison_ratio=ratio,
        empty_cube=empty,
        search_box=tuple(map(tuple, np.asarray(search_box, dtype=float).reshape(d, 2).tolist())),
    )


def empty_cube_table(reports: dict) -> dict:
    """Corpus table of empty-cube reports with the largest implied constants."""
    rows = []
    for name, rep in reports.items():
        rows.append({
            "name": name,
            "R_star": rep.R_star,
            "bound_minkowski": rep.bound_minkowski,
            "bound_inscribed": rep.bound_inscribed,
            "c1": rep.c1,
            "c2": rep.c2,
            "comparison_ratio": rep.comparison_ratio,
        })
    c1_max = max(r["c1"] for r in rows)
    c2_max = max(r["c2"] for r in rows)
    for r in rows:
        r["within_bounds"] = bool(
            r["R_star"] <= min(c1_max * r["bound_minkowski"], c2_max * r["bound_inscribed"]) * (1 + 1e-12)
        )
    return {"rows": rows, "c1_max": c1_max, "c2_max": c2_max}
