import math

import numpy as np
import pytest
from scipy import integrate

from spectral_weyl import fourier
from spectral_weyl.errors import CertificateUnavailableError, InvalidArgumentError
from spectral_weyl.geometry import ConvexBody, Domain

L_SHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
TRIANGLE = [(0, 0), (1, 0), (0.3, 0.8)]


def _quad_ft_1d(a, b, xi):
    re = integrate.quad(lambda t: math.cos(2 * math.pi * t * xi), a, b, limit=200)[0]
    im = integrate.quad(lambda t: -math.sin(2 * math.pi * t * xi), a, b, limit=200)[0]
    return complex(re, im)


def _quad_ft_polygon(vertices, xi):
    """Strip-wise double quadrature of exp(-2 pi i x.xi) over a convex polygon."""
    from shapely.geometry import LineString, Polygon

    poly = Polygon(vertices)
    x0, _, x1, _ = poly.bounds

    def y_range(x):
        seg = poly.intersection(LineString([(x, -1e3), (x, 1e3)]))
        ys = [c[1] for c in seg.coords] if not seg.is_empty else [0.0, 0.0]
        return min(ys), max(ys)

    def part(fn):
        return integrate.dblquad(lambda y, x: fn(2 * math.pi * (x * xi[0] + y * xi[1])),
                                 x0, x1, lambda x: y_range(x)[0], lambda x: y_range(x)[1],
                                 epsabs=1e-11, epsrel=1e-10)[0]

    return complex(part(math.cos), -part(math.sin))


def test_interval_closed_form():
    dom = Domain.unit_cube(1)
    assert abs(fourier.ft_indicator(dom, [0.5])) == pytest.approx(2 / math.pi, rel=1e-14)
    assert fourier.ft_indicator(dom, [0.0]) == pytest.approx(1.0)
    assert abs(fourier.ft_indicator(dom, [3.0])) < 1e-15


@pytest.mark.parametrize("xi", [0.0, 1e-16, 1e-10, 1e-6, 0.37, 2.5, 17.3])
def test_interval_against_quadrature(xi):
    dom = Domain.box([[-0.2, 0.9]])
    assert fourier.ft_indicator(dom, [xi]) == pytest.approx(_quad_ft_1d(-0.2, 0.9, xi), abs=1e-12)


def test_box_is_product_of_intervals():
    dom = Domain.box([[0, 2], [1, 1.5]])
    xi = np.array([0.3, -1.7])
    expected = _quad_ft_1d(0, 2, xi[0]) * _quad_ft_1d(1, 1.5, xi[1])
    assert fourier.ft_indicator(dom, xi) == pytest.approx(expected, abs=1e-12)


def test_batch_and_single_agree():
    dom = Domain.polygon2d(L_SHAPE)
    xs = np.array([[0.1, 0.2], [0.0, 0.0], [3.0, -1.0]])
    batch = fourier.ft_indicator(dom, xs)
    for x, b in zip(xs, batch):
        assert fourier.ft_indicator(dom, x) == pytest.approx(b, abs=1e-15)


def test_polygon_matches_box_union():
    poly = Domain.polygon2d(L_SHAPE)
    union = Domain.box_union([[[0, 2], [0, 1]], [[0, 1], [1, 2]]])
    rng = np.random.default_rng(1)
    xs = np.vstack([rng.normal(scale=3, size=(200, 2)), [[0, 0], [1e-12, 0], [0, 2.0], [1.0, 1.0]]])
    assert np.max(np.abs(fourier.ft_indicator(poly, xs) - fourier.ft_indicator(union, xs))) < 1e-12


@pytest.mark.parametrize("xi", [(0.0, 0.0), (1e-9, 2e-9), (0.4, 0.0), (1.3, -0.7), (5.0, 5.0), (1.0, -1.0)])
def test_triangle_against_quadrature(xi):
    dom = Domain.polygon2d(TRIANGLE)
    got = fourier.ft_indicator(dom, np.array(xi))
    assert got == pytest.approx(_quad_ft_polygon(TRIANGLE, xi), abs=1e-9)


def test_ft_value_at_zero_is_area():
    dom = Domain.polygon2d(L_SHAPE)
    assert fourier.ft_indicator(dom, [0.0, 0.0]) == pytest.approx(3.0)


def test_envelope_dominates():
    rng = np.random.default_rng(5)
    xs = rng.normal(scale=10, size=(2000, 2))
    for dom in (Domain.polygon2d(L_SHAPE), Domain.polygon2d(TRIANGLE),
                Domain.box_union([[[0, 1], [0, 1]], [[1, 3], [0, 0.5]]])):
        amp = np.abs(fourier.ft_indicator(dom, xs))
        assert np.all(fourier.ft_envelope(dom, xs) >= amp - 1e-12)


def test_power_spectrum_memo_matches():
    dom = Domain.unit_cube(2)
    plain = fourier.PowerSpectrum(dom)
    memo = fourier.PowerSpectrum(dom, cache="memo")
    x = np.array([0.5, 0.25])
    assert memo(x) == pytest.approx(plain(x))
    assert memo(x) == memo(x)
    assert len(memo._memo) == 1


def test_shell_integral_1d_closed_form():
    # int_{R < |x| <= 2R} sinc^2 has an elementary closed form via Si
    from scipy.special import sici

    ps = fourier.PowerSpectrum(Domain.unit_cube(1))

    def tail(R):  # int_{|x| > R} sin^2(pi x)/(pi x)^2
        return 2 * (math.sin(math.pi * R) ** 2 / (math.pi**2 * R) + (1 - 2 * sici(2 * math.pi * R)[0] / math.pi) / 2)

    R = 4.0
    truth = tail(R) - tail(2 * R)
    est = fourier.shell_integral(ps, ConvexBody.ball(1), R, n_samples=2**16, seed=0)
    assert est.estimate == pytest.approx(truth, abs=5 * est.stderr + 1e-5)


def test_tail_certificate_1d_window():
    ps = fourier.PowerSpectrum(Domain.unit_cube(1))
    cert = fourier.tail_certificate(ps, ConvexBody.ball(1), 100.0, seed=0)
    # the envelope tail is exactly 2 / (pi^2 T); the certificate must sit close above it
    assert 2 / (math.pi**2 * 100) <= cert.tail_bound * 1.01
    assert cert.tail_bound <= 2 / (math.pi**2 * 99) * 1.02
    assert cert.slope == pytest.approx(-1.0, abs=0.05)


def test_tail_certificate_shrinks_with_T():
    ps = fourier.PowerSpectrum(Domain.unit_cube(2))
    body = ConvexBody.ball(2)
    c64 = fourier.tail_certificate(ps, body, 64.0)
    c128 = fourier.tail_certificate(ps, body, 128.0)
    assert c128.tail_bound < c64.tail_bound
    assert c128.tail_bound / c64.tail_bound == pytest.approx(0.5, abs=0.1)


def test_tail_bounds_true_spectrum_tail():
    ps = fourier.PowerSpectrum(Domain.unit_cube(1))
    cert = fourier.tail_certificate(ps, ConvexBody.ball(1), 50.0)
    true_tail = 2 * integrate.quad(lambda x: ps(np.array([x])), 50, 5000, limit=5000)[0]
    assert true_tail <= cert.tail_bound


def test_shell_and_certificate_errors():
    ps = fourier.PowerSpectrum(Domain.unit_cube(1))
    with pytest.raises(InvalidArgumentError):
        fourier.shell_integral(ps, ConvexBody.ball(1), 0.0)
    with pytest.raises(InvalidArgumentError):
        fourier.shell_integral(ps, ConvexBody.ball(1), 1.0, integrand="other")
    with pytest.raises(InvalidArgumentError):
        fourier.tail_certificate(ps, ConvexBody.ball(1), 0.5)


def test_certificate_unavailable_without_decay(monkeypatch):
    ps = fourier.PowerSpectrum(Domain.unit_cube(1))

    def flat(*args, **kwargs):
        return fourier.ShellEstimate(R=args[2], estimate=1.0, stderr=0.0, n_samples=1,
                                     n_in_shell=1, integrand="envelope")

    monkeypatch.setattr(fourier, "shell_integral", flat)
    with pytest.raises(CertificateUnavailableError):
        fourier.tail_certificate(ps, ConvexBody.ball(1), 10.0)


def test_ball_integral_parseval():
    # int f = |Omega| by Plancherel; most of the mass sits inside a moderate ball
    ps = fourier.PowerSpectrum(Domain.unit_cube(1))
    est, err = fourier.ball_integral(ps, ConvexBody.ball(1), 200.0, n_samples=2**16)
    assert est == pytest.approx(1.0, abs=2 / (math.pi**2 * 200) + 5 * err + 1e-4)


def test_domain_body_volume():
    assert fourier.domain_body_volume(Domain.unit_cube(2), ConvexBody.ball(2)) == pytest.approx(math.pi)
