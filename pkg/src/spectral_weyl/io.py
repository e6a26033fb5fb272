"""File loading, run configuration, report envelopes and atomic writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import InvalidArgumentError, SpectralWeylError
from .geometry import ConvexBody, Domain
from .pointsets import PointSet, read_point_list

TOOL = "spectral-weyl"


class InputError(SpectralWeylError, ValueError):
    """Unreadable or malformed input file."""


def load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _wrap(build, data, path):
    try:
        return build(data)
    except SpectralWeylError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_domain(path) -> Domain:
    data = load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: domain must be a JSON object")
    return _wrap(Domain.from_dict, data, path)


def load_body(path) -> ConvexBody:
    data = load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: body must be a JSON object")
    return _wrap(ConvexBody.from_dict, data, path)


def load_pointset(points=None, generator=None) -> PointSet:
    """Point set from a point-list file or a generator spec, exactly one of them."""
    if (points is None) == (generator is None):
        raise InvalidArgumentError("give exactly one of --points and --generator")
    if points is not None:
        try:
            return read_point_list(points)
        except (ValueError, TypeError) as exc:
            if isinstance(exc, SpectralWeylError):
                raise
            raise InputError(f"{points}: {exc}") from exc
        except OSError as exc:
            raise InputError(f"cannot read {points}: {exc.strerror}") from exc
    data = load_json(generator)
    if not isinstance(data, dict):
        raise InputError(f"{generator}: generator spec must be a JSON object")
    return _wrap(PointSet.from_dict, data, generator)


def parse_radii(spec: str) -> list[float]:
    """Radii from ``"start:stop:step"`` (stop inclusive) or a comma/JSON list.

    The result must be a non-empty strictly increasing list of positive reals.
    """
    spec = str(spec).strip()
    try:
        if spec.startswith("["):
            radii = [float(r) for r in json.loads(spec)]
        elif ":" in spec:
            parts = [float(p) for p in spec.split(":")]
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            start, stop, step = parts
            if not step > 0:
                raise ValueError("step must be positive")
            n = math.floor((stop - start) / step + 1e-9)
            # start + k*step rounded to step's precision keeps 10.3 + 2k clean
            radii = [float(np.round(start + k * step, 12)) for k in range(n + 1)]
        elif spec:
            radii = [float(r) for r in spec.split(",")]
        else:
            radii = []
    except (ValueError, TypeError) as exc:
        raise InvalidArgumentError(f"bad radii spec {spec!r}: {exc}") from exc
    if not radii:
        raise InvalidArgumentError(f"radii spec {spec!r} is empty")
    if any(not (r > 0 and math.isfinite(r)) for r in radii) or any(
        b <= a for a, b in zip(radii, radii[1:])
    ):
        raise InvalidArgumentError(f"radii spec {spec!r} must be positive and increasing")
    return radii


def parse_float_list(spec: str, name: str) -> list[float]:
    spec = str(spec).strip()
    if not spec:
        return []
    try:
        if spec.startswith("["):
            return [float(v) for v in json.loads(spec)]
        return [float(v) for v in spec.split(",")]
    except (ValueError, TypeError) as exc:
        raise InvalidArgumentError(f"bad {name} {spec!r}") from exc


def parse_box(spec: str, d: int) -> list[list[float]]:
    """Box from ``"a1,b1,...,ad,bd"`` or a JSON ``[[a1, b1], ...]``; ``"a,b"`` repeats."""
    vals = parse_float_list(str(spec).replace("[", " ").replace("]", " ").strip().strip(","), "box")
    if len(vals) == 2:
        vals = vals * d
    if len(vals) != 2 * d:
        raise InvalidArgumentError(f"box {spec!r} needs {2 * d} numbers")
    box = [vals[2 * j:2 * j + 2] for j in range(d)]
    if any(b <= a for a, b in box):
        raise InvalidArgumentError(f"box {spec!r} is empty")
    return box


@dataclass
class RunConfig:
    """Everything needed to rerun a command; embedded in every report."""

    command: str
    domain: str | None = None
    body: str | None = None
    points: str | None = None
    generator: str | None = None
    radii: str | None = None
    tol: float | None = None
    trunc: float | None = None
    delta: float | None = None
    eta: float | None = None
    samples: int | None = None
    seed: int = 0
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("tol", "trunc", "delta", "eta", "samples"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidArgumentError(f"--{name} must be positive")
        if self.seed < 0:
            raise InvalidArgumentError("--seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def make_report(config: RunConfig, result: dict) -> dict:
    return _clean({
        "tool": TOOL,
        "version": __version__,
        "command": config.command,
        "config": config.to_dict(),
        "result": result,
    })


def dumps(obj) -> str:
    """Stable JSON text: sorted keys, shortest round-trip float repr."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_schema(name: str) -> dict:
    text = resources.files("spectral_weyl.schemas").joinpath(f"{name}.json").read_text("utf-8")
    return json.loads(text)


def validate_report(report: dict, name: str | None = None) -> None:
    """Validate a report against its published schema (``report.command`` by default)."""
    jsonschema.validate(report, load_schema(name or report["command"]))
