"""Acceptance criteria, one test per criterion.

A summary line per criterion is printed at the end of the run (see conftest).
Tolerances are pinned to the stated acceptance values.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from spectral_weyl import analysis, fourier, geometry, pointsets
from spectral_weyl.geometry import ConvexBody, Domain
from spectral_weyl.pointsets import Window

pytestmark = pytest.mark.acceptance


def _timed(limit):
    class _T:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, *exc):
            self.elapsed = time.perf_counter() - self.t0
            if exc[0] is None:
                assert self.elapsed < limit, f"took {self.elapsed:.1f}s, limit {limit}s"
    return _T()


def test_criterion_1_tiling_identity():
    rng = np.random.default_rng(20240101)
    with _timed(10.0):
        for d in (1, 2):
            lam = pointsets.lattice(d)
            dom = Domain.unit_cube(d)
            body = ConvexBody.ball(d)
            cert = fourier.tail_certificate(fourier.PowerSpectrum(dom), body, 100.0, seed=0)
            if d == 1:
                assert cert.tail_bound <= 3e-3
            xs = rng.uniform(0.0, 1.0, size=(64, d))
            for x in xs:
                r = analysis.tiling_residual(lam, dom, x, 100.0, body=body, certificate=cert)
                assert r.sum <= 1.0 + 1e-12
                assert r.residual <= r.bound, (d, x, r.residual, r.bound)


def test_criterion_2_frame_sandwich():
    with _timed(10.0):
        lam = pointsets.lattice(1, scale=0.5)
        dom = Domain.unit_cube(1)
        fb = analysis.estimate_frame_bounds(lam, dom, T=100.0, seed=0)
        assert 1.97 <= fb.A_hat <= 2.03
        assert 1.97 <= fb.B_hat <= 2.03
        body = ConvexBody.ball(1)
        curve = analysis.counting_curve(lam, dom, body, [50.0, 100.0, 200.0])
        for R, N, _ in curve.samples:
            density = N / (2 * R)
            assert fb.A_hat - 0.1 <= density <= fb.B_hat + 0.1


def test_criterion_3_weyl_main_term_and_envelope():
    with _timed(60.0):
        z2 = pointsets.lattice(2)
        sq = Domain.unit_cube(2)
        radii = np.arange(10.0, 300.0 + 1e-9, 1.0)
        curve = analysis.counting_curve(z2, sq, ConvexBody.ball(2), radii)
        N = curve.counts
        assert np.all(np.abs(N - math.pi * radii**2) <= 8 * radii)
        fit = analysis.fit_error_exponent(curve, eta=0.5)
        assert fit.alpha_hat <= 1.1
        half = np.arange(0.5, 300.0, 1.0)
        cube_curve = analysis.counting_curve(z2, sq, ConvexBody.cube(2), half)
        assert np.all(cube_curve.errors == 0.0)


def test_criterion_4_cube_norm_lattice_error():
    radii = np.arange(10.3, 200.3 + 1e-9, 2.0)
    curve = analysis.counting_curve(pointsets.lattice(2), Domain.unit_cube(2), ConvexBody.cube(2), radii)
    fit = analysis.fit_error_exponent(curve, eta=0.5)
    assert abs(fit.alpha_hat - 1.0) <= 0.15


def test_criterion_5_example1_sharpness():
    with _timed(120.0):
        ps = pointsets.PointSet(2, "example1", radii=(10.0, 40.0, 160.0))
        # columns moved onto each sphere contribute exactly one point each
        assigned = [pointsets.on_sphere_count(ps, r, tol=1e-9, assigned_only=True) for r in (10, 40, 160)]
        assert assigned == [21, 60, 240]
        # the unmoved column v = 0 also meets the larger integer spheres
        total = [pointsets.on_sphere_count(ps, r, tol=1e-9) for r in (10, 40, 160)]
        assert total == [21, 61, 241]

        dom = Domain.unit_cube(2)
        window = Window(ConvexBody.ball(2), math.sqrt(1000 / math.pi))
        n = ps.count(window)
        assert 900 <= n <= 1100
        orth = analysis.check_orthogonality(ps, dom, window)
        assert orth.max_residual <= 1e-15

        curve = analysis.counting_curve(ps, dom, ConvexBody.ball(2), [160.0 - 1e-6, 160.0])
        jump = curve.samples[1][2] - curve.samples[0][2]
        assert jump >= 239


def test_criterion_6_landau_densities():
    with _timed(30.0):
        dens = pointsets.landau_density(pointsets.lattice(2), 50.0, [[0, 3], [0, 3]], spacing=0.1)
        assert 0.95 <= dens.normalized_plus <= 1.05
        assert 0.95 <= dens.normalized_minus <= 1.05


def test_criterion_7_minkowski_content():
    sq = Domain.unit_cube(2)
    est = geometry.minkowski_content_estimate(sq, 1.0, [0.1, 0.01, 0.001], method="grid")
    assert abs(est.content - 4.0) <= 0.05 * 4.0
    cube = Domain.unit_cube(3)
    est3 = geometry.minkowski_content_estimate(cube, 2.0, [0.04, 0.02, 0.01], method="grid")
    assert abs(est3.content - 6.0) <= 0.08 * 6.0
    wrong = geometry.minkowski_content_estimate(sq, 1.5, [0.1, 0.01, 0.001])
    assert wrong.wrong_alpha


def test_criterion_8_shell_decay():
    ps = fourier.PowerSpectrum(Domain.unit_cube(2))
    body = ConvexBody.ball(2)
    radii = [4.0 * 2**k for k in range(6)]
    vals = [fourier.shell_integral(ps, body, R, n_samples=2**18, seed=0).estimate for R in radii]
    slope = np.polyfit(np.log(radii), np.log(vals), 1)[0]
    assert abs(slope + 1.0) <= 0.3


def test_criterion_9_empty_cube_pipeline(data_dir):
    z2 = pointsets.lattice(2)
    box = [[0, 10], [0, 10]]
    assert abs(analysis.largest_empty_cube(z2, box, 1e-3).side - 1.0) <= 1e-3
    gap = pointsets.read_point_list(data_dir / "gap_lattice.txt")
    assert abs(analysis.largest_empty_cube(gap, box, 1e-3).side - 3.0) <= 1e-3

    corpus = json.loads((data_dir / "polygon_corpus.json").read_text())
    reports = {}
    for e in corpus["entries"]:
        d = e["domain"]
        dom = Domain.from_dict(d if isinstance(d, dict) else json.loads((data_dir / d).read_text()))
        ps = pointsets.PointSet.from_dict(e["generator"])
        reports[e["name"]] = analysis.check_empty_cube_bounds(dom, ps, 1.0, e["A"], e["B"], e["search_box"])
    comb = reports["comb"]
    assert comb.bound_inscribed < comb.radicand
    for rep in reports.values():
        assert rep.comparison_ratio >= 0.25
    table = analysis.empty_cube_table(reports)
    assert all(row["within_bounds"] for row in table["rows"])


def _run_cli(args, env=None):
    return subprocess.run([sys.executable, "-m", "spectral_weyl.cli", *args],
                          capture_output=True, text=True, env=env)


def test_criterion_10_determinism(tmp_path, data_dir):
    runs = {
        "verify.json": ["verify", "--domain", str(data_dir / "interval.json"),
                        "--generator", str(data_dir / "half_z1.json"), "--seed", "7"],
        "count.csv": ["count", "--domain", str(data_dir / "unit_square.json"),
                      "--generator", str(data_dir / "z2.json"), "--radii", "10:60:2.5"],
        "empty.json": ["empty-cube", "--corpus", str(data_dir / "polygon_corpus.json")],
        "density.json": ["density", "--generator", str(data_dir / "z2.json"),
                         "--radius", "5", "--search-box", "0,1", "--spacing", "0.25"],
    }
    env_threads = dict(os.environ, SPECTRAL_WEYL_THREADS="4")
    for name, args in runs.items():
        out = tmp_path / name
        contents = []
        for env in (None, None, env_threads):
            res = _run_cli([*args, "--out", str(out)], env=env)
            assert res.returncode == 0, res.stderr
            files = [out.read_bytes()]
            if name.endswith(".csv"):
                files.append(out.with_suffix(".json").read_bytes())
            contents.append(files)
            out.unlink()
        assert contents[0] == contents[1] == contents[2], name
