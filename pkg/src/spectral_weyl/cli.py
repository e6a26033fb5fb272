"""Command-line front end: ``spectral-weyl <command> [options]``.

Exit codes: 0 ok, 1 verdict failed, 2 input error, 3 internal error.
Errors are reported as a JSON object on standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from . import analysis, geometry, io, pointsets
from .errors import FitUnavailableError, SpectralWeylError
from .fourier import DEFAULT_SAMPLES
from .geometry import ConvexBody, Domain
from .pointsets import PointSet, Window

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(io.InputError):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p, *, domain=True, body=False, points=True):
    if domain:
        p.add_argument("--domain", metavar="PATH", help="domain JSON")
    if body:
        p.add_argument("--body", metavar="PATH", help="convex body JSON (default: Euclidean ball)")
    if points:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--points", metavar="PATH", help="point list file")
        g.add_argument("--generator", metavar="PATH", help="generator spec JSON")
    p.add_argument("--seed", type=int, default=0, help="seed for scrambled sampling")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spectral-weyl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="orthogonality, tiling and frame-bound verdict")
    _add_common(p, body=True)
    p.add_argument("--tol", type=float, default=analysis.ORTHOGONALITY_TOL)
    p.add_argument("--trunc", type=float, default=analysis.DEFAULT_TRUNCATION, help="truncation radius T")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="QMC points per replicate")
    p.add_argument("--claim", choices=("auto", "spectrum", "frame"), default="auto")
    p.add_argument("--centers", type=int, default=32, help="number of tiling-sum centres")
    p.add_argument("--center-box", metavar="BOX", help="centre box for non-lattice sets")
    p.add_argument("--window", type=float, help="orthogonality window radius")

    p = sub.add_parser("count", help="counting curve N(R), E(R) and error-exponent fit")
    _add_common(p, body=True)
    p.add_argument("--radii", required=True, metavar="SPEC", help='"start:stop:step" or list')
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--center", metavar="X", help="centre of the K-balls (default origin)")
    p.add_argument("--report", metavar="PATH", help="fit report JSON (default: OUT with .json)")

    p = sub.add_parser("density", help="Landau densities over a centre grid")
    _add_common(p)
    p.add_argument("--radius", type=float, required=True, help="half-side R of the cubes")
    p.add_argument("--search-box", required=True, metavar="BOX")
    p.add_argument("--spacing", type=float, default=0.25)

    p = sub.add_parser("empty-cube", help="largest empty cube against the two bounds")
    _add_common(p)
    p.add_argument("--search-box", metavar="BOX")
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--alpha", type=float, help="Minkowski exponent (default d - 1)")
    p.add_argument("--A", dest="A", type=float, help="lower frame bound (default: estimated)")
    p.add_argument("--B", dest="B", type=float, help="upper frame bound (default: estimated)")
    p.add_argument("--trunc", type=float, default=analysis.DEFAULT_TRUNCATION)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--corpus", metavar="PATH", help="corpus JSON; emits the comparison table")

    p = sub.add_parser("example1", help="materialise the column-shifted spectrum in a window")
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--radii", default="", metavar="LIST", help="sphere radii, may be empty")
    p.add_argument("--window", type=float, required=True, help="Euclidean window radius")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", help="point list file (default: stdout)")

    p = sub.add_parser("domain-info", help="volume, boundary content and inscribed cube")
    _add_common(p, points=False)
    p.add_argument("--alpha", type=float, help="Minkowski exponent (default d - 1)")
    p.add_argument("--scales", metavar="LIST", help="neighbourhood scales h")
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _config(args, **extra) -> io.RunConfig:
    known = {k: getattr(args, k, None) for k in (
        "domain", "body", "points", "generator", "radii", "tol", "delta", "eta", "samples", "out")}
    known["trunc"] = getattr(args, "trunc", None)
    rest = {k: v for k, v in vars(args).items() if k not in known and k not in ("command", "seed")}
    rest.update(extra)
    return io.RunConfig(command=args.command, seed=args.seed, extra=rest, **known)


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


def _pointset(args) -> PointSet:
    return io.load_pointset(args.points, args.generator)


def _body(args, d: int) -> ConvexBody:
    if getattr(args, "body", None) is None:
        return ConvexBody.ball(d)
    body = io.load_body(args.body)
    if body.dimension != d:
        raise io.InputError("body and point set dimensions differ")
    return body


def _check_dims(*objs):
    dims = {o.dimension for o in objs}
    if len(dims) != 1:
        raise io.InputError(f"dimension mismatch: {sorted(dims)}")


def _emit(text: str, path) -> None:
    if path:
        io.atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _emit_report(config, result, path) -> dict:
    report = io.make_report(config, result)
    io.validate_report(report)
    _emit(io.dumps(report), path)
    return report


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    _require(args, "domain")
    dom = io.load_domain(args.domain)
    ps = _pointset(args)
    _check_dims(dom, ps)
    body = _body(args, ps.dimension)
    centers = None
    if args.center_box is not None:
        centers, _ = analysis.default_centers(ps, args.centers, args.seed,
                                              box=io.parse_box(args.center_box, ps.dimension))
    window = Window(body, args.window) if args.window is not None else None
    rep = analysis.verify(ps, dom, claim=args.claim, tol=args.tol, T=args.trunc, window=window,
                          centers=centers, n_centers=args.centers, seed=args.seed,
                          n_samples=args.samples, body=body)
    result = rep.to_dict()
    result["domain"] = dom.to_dict()
    result["pointset"] = ps.to_dict()
    _emit_report(_config(args), result, args.out)
    return EXIT_OK if rep.verdict != "inconsistent" else EXIT_VERDICT


def cmd_count(args) -> int:
    _require(args, "domain")
    dom = io.load_domain(args.domain)
    ps = _pointset(args)
    _check_dims(dom, ps)
    body = _body(args, ps.dimension)
    radii = io.parse_radii(args.radii)
    center = None
    if args.center is not None:
        center = io.parse_float_list(args.center, "center")
        if len(center) != ps.dimension:
            raise io.InputError("--center has the wrong dimension")
    curve = analysis.counting_curve(ps, dom, body, radii, center)
    result = curve.to_dict()
    try:
        fit = analysis.fit_error_exponent(curve, args.eta)
        result["fit"] = fit.to_dict()
        result["fit_warning"] = None
    except FitUnavailableError as exc:
        result["fit"] = None
        result["fit_warning"] = str(exc)
        print(json.dumps({"warning": {"type": "FitUnavailableError", "message": str(exc)}}),
              file=sys.stderr)
    result["error_constant"] = analysis.error_envelope_constant(curve)
    result["samples"] = [list(s) for s in curve.samples]
    config = _config(args)
    if args.out:
        io.atomic_write(args.out, curve.to_csv())
        report_path = args.report or str(Path(args.out).with_suffix(".json"))
        _emit_report(config, result, report_path)
    else:
        _emit_report(config, result, args.report)
    return EXIT_OK


def cmd_density(args) -> int:
    ps = _pointset(args)
    box = io.parse_box(args.search_box, ps.dimension)
    dens = pointsets.landau_density(ps, args.radius, box, spacing=args.spacing)
    result = dens.to_dict()
    if args.domain is not None:
        dom = io.load_domain(args.domain)
        _check_dims(dom, ps)
        vol = geometry.volume(dom)
        result["relative_plus"] = dens.normalized_plus / vol
        result["relative_minus"] = dens.normalized_minus / vol
    _emit_report(_config(args), result, args.out)
    return EXIT_OK


def _empty_cube_entry(dom: Domain, ps: PointSet, box, *, alpha, A, B, delta, trunc, samples, seed):
    _check_dims(dom, ps)
    alpha = dom.dimension - 1 if alpha is None else alpha
    frame = None
    if A is None or B is None:
        fb = analysis.estimate_frame_bounds(ps, dom, T=trunc, seed=seed, n_samples=samples)
        frame = {"A_hat": fb.A_hat, "B_hat": fb.B_hat, "sampling": fb.sampling,
                 "tail_bound": fb.certificate.tail_bound}
        A = fb.A_hat if A is None else A
        B = fb.B_hat if B is None else B
    rep = analysis.check_empty_cube_bounds(dom, ps, alpha, A, B, box, delta=delta)
    out = rep.to_dict()
    out["frame_estimate"] = frame
    return rep, out


def cmd_empty_cube(args) -> int:
    common = dict(alpha=args.alpha, A=args.A, B=args.B, delta=args.delta,
                  trunc=args.trunc, samples=args.samples, seed=args.seed)
    if args.corpus is not None:
        return _empty_cube_corpus(args, common)
    _require(args, "domain", "search_box")
    dom = io.load_domain(args.domain)
    ps = _pointset(args)
    box = io.parse_box(args.search_box, ps.dimension)
    _, result = _empty_cube_entry(dom, ps, box, **common)
    _emit_report(_config(args), result, args.out)
    return EXIT_OK


def _empty_cube_corpus(args, common) -> int:
    base = Path(args.corpus).resolve().parent
    data = io.load_json(args.corpus)
    entries = data.get("entries") if isinstance(data, dict) else None
    if not entries:
        raise io.InputError(f"{args.corpus}: corpus needs a non-empty 'entries' list")
    reports, rows = {}, []
    for i, e in enumerate(entries):
        try:
            name = str(e.get("name", f"entry-{i}"))
            d = e["domain"]
            dom = Domain.from_dict(d) if isinstance(d, dict) else io.load_domain(base / d)
            if "generator" in e:
                g = e["generator"]
                ps = PointSet.from_dict(g) if isinstance(g, dict) else io.load_pointset(generator=base / g)
            else:
                ps = io.load_pointset(points=base / e["points"])
            box = io.parse_box(json.dumps(e["search_box"]), ps.dimension)
        except (KeyError, AttributeError, TypeError) as exc:
            raise io.InputError(f"corpus entry {i}: missing or malformed field {exc}") from exc
        opts = dict(common)
        for key in ("alpha", "A", "B"):
            if key in e:
                opts[key] = float(e[key])
        rep, out = _empty_cube_entry(dom, ps, box, **opts)
        reports[name] = rep
        out["name"] = name
        rows.append(out)
    result = {"entries": rows, "table": analysis.empty_cube_table(reports)}
    _emit_report(_config(args), result, args.out)
    return EXIT_OK


def cmd_example1(args) -> int:
    d = args.dimension
    if d < 1:
        raise io.InputError("--dimension must be at least 1")
    radii = io.parse_float_list(args.radii, "radii")
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise io.InputError("radii must be positive and increasing")
    if not args.window > 0:
        raise io.InputError("--window must be positive")
    gen = PointSet(d, "example1", radii=tuple(radii))
    pts = gen.enumerate(Window(ConvexBody.ball(d), args.window))
    counts = {f"{r:g}": pointsets.on_sphere_count(gen, r) for r in radii if r <= args.window - 1}
    header = "\n".join([
        f"{io.TOOL} {__version__} example1",
        f"dimension {d} radii {json.dumps(radii)} window {args.window!r}",
        f"points {len(pts)}",
    ])
    _emit(pointsets.format_point_list(pts, header), args.out)
    if args.out:
        summary = {"points": len(pts), "on_sphere_upper_half": counts, "out": args.out}
        sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_domain_info(args) -> int:
    _require(args, "domain")
    dom = io.load_domain(args.domain)
    alpha = dom.dimension - 1 if args.alpha is None else args.alpha
    scales = (io.parse_float_list(args.scales, "scales") if args.scales
              else analysis.default_content_scales(dom))
    est = geometry.minkowski_content_estimate(dom, alpha, scales)
    result = {
        "domain": dom.to_dict(),
        "volume": geometry.volume(dom),
        "bounding_box": dom.bounding_box().tolist(),
        "inscribed_cube_side": geometry.inscribed_cube_side(dom),
        "minkowski": est.to_dict(),
        "perimeter": None,
        "isoperimetric": None,
    }
    if dom.kind == "polygon2d" or dom.kind == "box":
        result["perimeter"] = geometry.perimeter(dom)
    if dom.kind == "polygon2d":
        result["isoperimetric"] = geometry.polygon_isoperimetric_check(dom).to_dict()
    _emit_report(_config(args), result, args.out)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "count": cmd_count,
    "density": cmd_density,
    "empty-cube": cmd_empty_cube,
    "example1": cmd_example1,
    "domain-info": cmd_domain_info,
}


def _fail(exc: BaseException, code: int) -> int:
    err = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        for name in ("samples", "centers"):
            v = getattr(args, name, None)
            if v is not None and v <= 0:
                raise UsageError(f"--{name} must be positive")
        _config(args)  # validates the numeric knobs before any work
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](args)
    except SpectralWeylError as exc:
        return _fail(exc, EXIT_INPUT if isinstance(exc, (ValueError, TypeError)) else EXIT_INTERNAL)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
