"""Fourier transforms of indicator functions and integrals of the power spectrum.

The transform convention is ``chi_hat(xi) = int_Omega exp(-2 pi i x.xi) dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import CertificateUnavailableError, InvalidArgumentError
from .geometry import ConvexBody, Domain, body_volume, norm_K, volume

# below EXACT_LIMIT the sinc factor is taken as its limit, below SERIES_LIMIT
# a two-term Taylor series is used
EXACT_LIMIT = 1e-14
SERIES_LIMIT = 1e-8

DEFAULT_SAMPLES = 2**16
DEFAULT_REPLICATES = 16


def _sinc_factor(xi: np.ndarray, length: np.ndarray) -> np.ndarray:
    """``sin(pi L xi) / (pi L xi)`` with the removable singularity handled."""
    u = np.pi * length * xi
    ax = np.abs(xi)
    out = np.ones_like(u)
    direct = ax >= SERIES_LIMIT
    series = (ax >= EXACT_LIMIT) & ~direct
    out[direct] = np.sin(u[direct]) / u[direct]
    out[series] = 1.0 - u[series] ** 2 / 6.0
    return out


def _as_points(xi, d):
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi = np.atleast_2d(xi)
    if xi.shape[-1] != d:
        raise InvalidArgumentError(f"frequency points must have {d} coordinates")
    return xi, single


def _box_ft(box: np.ndarray, xi: np.ndarray) -> np.ndarray:
    a, b = box[:, 0], box[:, 1]
    length = b - a
    phase = np.exp(-1j * np.pi * (a + b) * xi)
    return np.prod(length * phase * _sinc_factor(xi, length), axis=-1)


def _homogeneous_series(u: np.ndarray, terms: int = 24) -> np.ndarray:
    """``sum_k c^k h_k(u) / (k + 2)!`` with ``c = -2 pi i``.

    ``h_k`` are the complete homogeneous polynomials in the three nodes
    ``u[..., 0:3]``.
    """
    c = -2j * np.pi
    # h[k] for the nodes added so far, built up one node at a time
    h = [u[..., 0] ** k for k in range(terms)]
    for j in (1, 2):
        uj = u[..., j]
        for k in range(1, terms):
            h[k] = h[k] + uj * h[k - 1]
    total = np.zeros(u.shape[:-1], dtype=complex)
    for k in range(terms - 1, -1, -1):
        total = total + c**k * h[k] / math.factorial(k + 2)
    return total


def _triangle_factor(nodes: np.ndarray) -> np.ndarray:
    """``int_T exp(-2 pi i x.xi) dx / (2 |T|)`` from the projected vertices.

    This is the second divided difference of ``exp(-2 pi i t) / c^2`` at the
    three nodes ``a.xi, b.xi, c.xi``, evaluated by a series when the nodes
    are close and by first differences otherwise.
    """
    c = -2j * np.pi
    mean = nodes.mean(axis=-1)
    u = nodes - mean[..., None]
    spread = np.max(np.abs(u), axis=-1)
    out = np.empty(nodes.shape[:-1], dtype=complex)
    small = 2 * np.pi * spread < 1.0
    if np.any(small):
        out[small] = _homogeneous_series(u[small])
    big = ~small
    if np.any(big):
        s = np.sort(u[big], axis=-1)
        x, y, z = s[:, 0], s[:, 1], s[:, 2]

        def first(p, q):
            return c * np.exp(c * (p + q) / 2) * np.sinc(q - p)

        out[big] = (first(x, y) - first(y, z)) / ((x - z) * c * c)
    return out * np.exp(c * mean)


def _polygon_ft(vertices: np.ndarray, xi: np.ndarray) -> np.ndarray:
    # fan of signed triangles (v0, vi, vi+1); the fan areas sum to the polygon area
    v0 = vertices[0]
    a = vertices[1:-1] - v0
    b = vertices[2:] - v0
    area2 = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    nodes = np.stack(
        [np.zeros((len(xi), len(a))), xi @ a.T, xi @ b.T], axis=-1
    )  # (n, m, 3)
    tri = _triangle_factor(nodes.reshape(-1, 3)).reshape(len(xi), len(a))
    return np.exp(-2j * np.pi * (xi @ v0)) * (tri @ area2)


def ft_indicator(domain: Domain, xi) -> complex | np.ndarray:
    """Fourier transform of the indicator of ``domain`` at ``xi``.

    ``xi`` may be a single point ``(d,)`` (returns a complex number) or a
    batch ``(n, d)``.
    """
    pts, single = _as_points(xi, domain.dimension)
    if domain.kind == "polygon2d":
        out = _polygon_ft(np.asarray(domain.polygon), pts)
    else:
        out = np.zeros(len(pts), dtype=complex)
        for box in domain.boxes:
            out += _box_ft(np.asarray(box), pts)
    return complex(out[0]) if single else out


def ft_envelope(domain: Domain, xi) -> float | np.ndarray:
    """A pointwise upper bound for ``|chi_hat|`` that decays monotonically.

    Boxes use ``|sin u / u| <= min(1, 1/|u|)`` per coordinate; polygons use
    the same bound on each edge term of the divergence-theorem formula, capped
    by the area.
    """
    pts, single = _as_points(xi, domain.dimension)
    if domain.kind == "polygon2d":
        edges = domain.edges()
        p, q = edges[:, 0], edges[:, 1]
        dvec = q - p
        normal = np.stack([dvec[:, 1], -dvec[:, 0]], axis=1)
        r2 = np.sum(pts * pts, axis=1)
        proj = np.abs(pts @ normal.T)
        along = np.pi * np.abs(pts @ dvec.T)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = proj * np.minimum(1.0, 1.0 / along)
            amp = terms.sum(axis=1) / (2 * np.pi * r2)
        amp = np.where(r2 > 0, np.minimum(amp, volume(domain)), volume(domain))
    else:
        amp = np.zeros(len(pts))
        for box in domain.boxes:
            length = np.diff(np.asarray(box), axis=1).ravel()
            with np.errstate(divide="ignore"):
                per = length * np.minimum(1.0, 1.0 / (np.pi * length * np.abs(pts)))
            amp += np.prod(per, axis=1)
    return float(amp[0]) if single else amp


@dataclass(frozen=True)
class PowerSpectrum:
    """``f = |chi_hat_Omega|^2`` for a fixed domain.

    With ``cache="memo"`` single-point evaluations are memoised on their
    exact coordinates; values are idempotent so concurrent fills are benign.
    """

    domain: Domain
    cache: str = "none"
    _memo: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __call__(self, x):
        return power_spectrum_eval(self, x)

    def envelope(self, x):
        return ft_envelope(self.domain, x) ** 2


def power_spectrum_eval(ps: PowerSpectrum, x) -> float | np.ndarray:
    x_arr = np.asarray(x, dtype=float)
    if ps.cache == "memo" and x_arr.ndim == 1:
        key = tuple(x_arr.tolist())
        hit = ps._memo.get(key)
        if hit is None:
            hit = abs(ft_indicator(ps.domain, x_arr)) ** 2
            ps._memo[key] = hit
        return hit
    val = ft_indicator(ps.domain, x_arr)
    return abs(val) ** 2 if np.ndim(val) == 0 else np.abs(val) ** 2


# ---------------------------------------------------------------------------
# Shell and tail integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShellEstimate:
    """Randomised QMC estimate of a power-spectrum integral over ``K_2R \\ K_R``."""

    R: float
    estimate: float
    stderr: float
    n_samples: int
    n_in_shell: int
    integrand: str
    underflow: bool = False

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "n_in_shell": self.n_in_shell,
            "integrand": self.integrand,
            "underflow": self.underflow,
        }


def shell_integral(ps: PowerSpectrum, body: ConvexBody, R: float, *,
                   n_samples: int = DEFAULT_SAMPLES, seed: int = 0,
                   integrand: str = "spectrum",
                   replicates: int = DEFAULT_REPLICATES) -> ShellEstimate:
    """Integral of ``f`` (or of its envelope) over the shell ``R < ||x||_K <= 2R``.

    Scrambled Sobol points fill the bounding box of ``K_2R`` and points
    outside the shell are rejected.  The standard error comes from the
    spread of ``replicates`` independent scramblings.
    """
    if not R > 0:
        raise InvalidArgumentError("R must be positive")
    if integrand not in ("spectrum", "envelope"):
        raise InvalidArgumentError(f"unknown integrand {integrand!r}")
    d = body.dimension
    w = 2 * R * body.half_widths()
    box_vol = float(np.prod(2 * w))
    per = max(2, n_samples // replicates)
    m = 1 << (per - 1).bit_length()  # Sobol balance wants powers of two
    func = ps.envelope if integrand == "envelope" else ps
    means = np.empty(replicates)
    inside_total = 0
    positive = False
    for rep in range(replicates):
        u = stats.qmc.Sobol(d, scramble=True, seed=np.random.default_rng([seed, rep])).random(m)
        x = (2 * u - 1) * w
        nk = norm_K(body, x)
        mask = (nk > R) & (nk <= 2 * R)
        inside_total += int(mask.sum())
        vals = np.zeros(m)
        if mask.any():
            vals[mask] = func(x[mask])
            positive = positive or bool(np.any(vals[mask] > 0))
        means[rep] = box_vol * _pairwise_mean(vals)
    stderr = float(means.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else float("nan")
    return ShellEstimate(
        R=float(R),
        estimate=float(means.mean()) if positive else 0.0,
        stderr=stderr if positive else 0.0,
        n_samples=m * replicates,
        n_in_shell=inside_total,
        integrand=integrand,
        underflow=not positive,
    )


def _pairwise_mean(vals: np.ndarray) -> float:
    # numpy's sum is pairwise for contiguous float arrays, so the order is fixed
    return float(np.sum(vals) / len(vals))


@dataclass(frozen=True)
class TailCertificate:
    """Upper estimate of ``int_{K_T^c} f`` built from dyadic shells.

    Shells at radii ``T, 2T, 4T, ...`` are integrated with the monotone
    envelope of ``f`` (so the bound also covers lattice sums of ``f``) and
    the un-summed remainder is extrapolated geometrically from the fitted
    decay slope, weakened by one standard error.
    """

    T: float
    tail_bound: float
    method: str
    radii: tuple
    shells: tuple
    stderrs: tuple
    slope: float
    slope_stderr: float
    remainder: float
    n_samples: int
    seed: int
    body: dict
    domain: dict

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "tail_bound": self.tail_bound,
            "method": self.method,
            "radii": list(self.radii),
            "shells": list(self.shells),
            "stderrs": list(self.stderrs),
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "remainder": self.remainder,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "body": self.body,
            "domain": self.domain,
        }


# shells below this contribute nothing at double precision
SHELL_FLOOR = 1e-15


def tail_certificate(ps: PowerSpectrum, body: ConvexBody, T: float, *,
                     max_shells: int = 8, n_samples: int = DEFAULT_SAMPLES,
                     seed: int = 0) -> TailCertificate:
    if not T >= 1:
        raise InvalidArgumentError("truncation radius T must be >= 1")
    radii, shells, errs = [], [], []
    floor_hit = False
    for j in range(max_shells):
        R = T * 2.0**j
        est = shell_integral(ps, body, R, n_samples=n_samples, seed=seed, integrand="envelope")
        radii.append(R)
        shells.append(est.estimate + est.stderr)
        errs.append(est.stderr)
        if est.estimate < SHELL_FLOOR:
            floor_hit = True
            break
    logs = [(math.log(r), math.log(s)) for r, s in zip(radii, shells) if s > 0]
    if len(logs) < 2:
        if floor_hit and sum(shells) < SHELL_FLOOR:
            slope, slope_err = -math.inf, 0.0
        else:
            raise CertificateUnavailableError("too few positive shells to measure decay")
    else:
        lx, ly = np.array(logs).T
        if len(logs) > 2:
            coef, cov = np.polyfit(lx, ly, 1, cov=True)
            slope, slope_err = float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))
        else:
            slope = float((ly[1] - ly[0]) / (lx[1] - lx[0]))
            slope_err = 0.0
    conservative = slope + slope_err
    if conservative >= 0:
        raise CertificateUnavailableError(
            f"power spectrum shows no decay (slope {slope:.3g} +/- {slope_err:.2g})"
        )
    ratio = 2.0**conservative
    remainder = shells[-1] * ratio / (1 - ratio) if math.isfinite(conservative) else 0.0
    return TailCertificate(
        T=float(T),
        tail_bound=float(sum(shells) + remainder),
        method="shell-sum" if floor_hit else "fitted-decay",
        radii=tuple(radii),
        shells=tuple(shells),
        stderrs=tuple(errs),
        slope=slope,
        slope_stderr=slope_err,
        remainder=float(remainder),
        n_samples=n_samples,
        seed=seed,
        body=body.to_dict(),
        domain=ps.domain.to_dict(),
    )


def ball_integral(ps: PowerSpectrum, body: ConvexBody, T: float, *,
                  n_samples: int = DEFAULT_SAMPLES, seed: int = 0,
                  replicates: int = DEFAULT_REPLICATES) -> tuple[float, float]:
    """QMC estimate of ``int_{K_T} f`` with its standard error."""
    d = body.dimension
    w = T * body.half_widths()
    box_vol = float(np.prod(2 * w))
    m = 1 << (max(2, n_samples // replicates) - 1).bit_length()
    means = np.empty(replicates)
    for rep in range(replicates):
        u = stats.qmc.Sobol(d, scramble=True, seed=np.random.default_rng([seed, rep])).random(m)
        x = (2 * u - 1) * w
        mask = norm_K(body, x) <= T
        vals = np.zeros(m)
        vals[mask] = ps(x[mask])
        means[rep] = box_vol * _pairwise_mean(vals)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(replicates))


def domain_body_volume(domain: Domain, body: ConvexBody) -> float:
    """``|K| |Omega|``, the leading coefficient of the counting function."""
    return body_volume(body) * volume(domain)
