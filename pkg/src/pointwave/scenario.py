"""Scenario files: a YAML tree describing model, initial data, and outputs.

Parsing validates every field and reports problems as :class:`ConfigError`
carrying the dotted field path and, when known, the source line. A parsed
:class:`Scenario` serializes back to a mapping that reparses to an equal
value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .dalembert import Coupling, InitialData, ModelConfig, Piece, PositionFunction
from .signal import PolyExpTerm

__all__ = [
    "ConfigError",
    "Shape",
    "OracleSettings",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "dump_scenario",
]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        self.message = message
        where = f"line {line}, " if line is not None else ""
        super().__init__(f"{where}field '{path}': {message}")


# shape kind -> (required fields, optional fields with defaults)
SHAPE_FIELDS: dict[str, tuple[tuple[str, ...], dict[str, Any]]] = {
    "bump": (("center", "half_width"), {"height": 1.0, "order": 4}),
    "triangle": (("center", "half_width"), {"height": 1.0}),
    "step": (("at",), {"height": 1.0, "side": "right"}),
    "smooth_step": (("at", "width"), {"height": 1.0, "side": "right"}),
    "constant": (("value",), {}),
    "polynomial": (("left", "right", "coefficients"), {"anchor": None}),
    "piece": (("left", "right", "terms"), {"anchor": None}),
}


@dataclass(frozen=True)
class Shape:
    """One initial-data building block; ``params`` is a sorted tuple of pairs."""

    kind: str
    params: tuple

    def get(self, key):
        return dict(self.params)[key]

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        for k, v in self.params:
            if k == "terms":
                out[k] = [dict(t) for t in v]
            elif k == "coefficients":
                out[k] = list(v)
            else:
                out[k] = v
        return out

    def build(self) -> PositionFunction:
        p = dict(self.params)
        if self.kind == "bump":
            return PositionFunction.bump(p["center"], p["half_width"], p["height"], p["order"])
        if self.kind == "triangle":
            return PositionFunction.triangle(p["center"], p["half_width"], p["height"])
        if self.kind == "step":
            return PositionFunction.step(p["at"], p["height"], p["side"])
        if self.kind == "smooth_step":
            return PositionFunction.smooth_step(p["at"], p["width"], p["height"], p["side"])
        if self.kind == "constant":
            return PositionFunction.constant(p["value"])
        left = -math.inf if p["left"] is None else p["left"]
        right = math.inf if p["right"] is None else p["right"]
        if self.kind == "polynomial":
            return PositionFunction.polynomial(left, right, p["coefficients"], p["anchor"])
        terms = tuple(PolyExpTerm(t["coef"], t["power"], t["rate"]) for t in (dict(x) for x in p["terms"]))
        return PositionFunction((Piece(left, right, terms, p["anchor"]),))


@dataclass(frozen=True)
class OracleSettings:
    n_cells: tuple[int, ...] = (1000, 2000, 4000)
    courant: float = 0.75
    tolerance: float = 2e-2
    # None skips the energy check (data with jumps carry unbounded energy)
    energy_tolerance: float | None = 1e-3
    min_order: float | None = None
    # tolerances apply to levels with at least this many cells
    threshold_cells: int = 2000


@dataclass(frozen=True)
class Scenario:
    model: ModelConfig
    displacement: tuple[Shape, ...] = ()
    velocity_primitive: tuple[Shape, ...] = ()
    travelling: int | None = None
    horizon: float = 1.0
    probes: tuple[float, ...] = ()
    snapshots: tuple[float, ...] = ()
    snapshot_window: tuple[float, float] | None = None
    samples: int = 401
    output: str = "out"
    oracle: OracleSettings = field(default_factory=OracleSettings)

    def initial_data(self) -> InitialData:
        disp = PositionFunction(tuple(p for s in self.displacement for p in s.build().pieces))
        if self.travelling is not None:
            return InitialData.travelling(disp, self.model.c, self.travelling)
        prim = PositionFunction(tuple(p for s in self.velocity_primitive for p in s.build().pieces))
        return InitialData(disp, prim)

    def to_dict(self) -> dict:
        def coupling(cp: Coupling):
            return {"type": cp.kind, "gamma": cp.gamma} if cp.kind == "damper" else {"type": cp.kind}

        init: dict[str, Any] = {"displacement": [s.to_dict() for s in self.displacement]}
        if self.travelling is not None:
            init["travelling"] = self.travelling
        else:
            init["velocity_primitive"] = [s.to_dict() for s in self.velocity_primitive]
        oracle: dict[str, Any] = {
            "n_cells": list(self.oracle.n_cells),
            "courant": self.oracle.courant,
            "tolerance": self.oracle.tolerance,
            "energy_tolerance": self.oracle.energy_tolerance,
            "threshold_cells": self.oracle.threshold_cells,
        }
        if self.oracle.min_order is not None:
            oracle["min_order"] = self.oracle.min_order
        out: dict[str, Any] = {
            "model": {
                "c": self.model.c,
                "x_a": self.model.x_a,
                "x_b": self.model.x_b,
                "coupling_a": coupling(self.model.coupling_a),
                "coupling_b": coupling(self.model.coupling_b),
            },
            "initial_data": init,
            "horizon": self.horizon,
            "probes": list(self.probes),
            "snapshots": list(self.snapshots),
            "samples": self.samples,
            "output": self.output,
            "oracle": oracle,
        }
        if self.snapshot_window is not None:
            out["snapshot_window"] = list(self.snapshot_window)
        return out


# -- parsing ----------------------------------------------------------------


def _line_map(text: str) -> dict[str, int]:
    """Dotted path -> 1-based source line, from the YAML node tree."""
    out: dict[str, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        if node is None:
            return
        out[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = str(k.value)
                sub = f"{path}.{key}" if path else key
                walk(v, sub)
                out[sub] = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, f"{path}[{i}]")

    walk(root, "")
    return out


def _parent(path: str) -> str:
    if path.endswith("]"):
        return path[: path.rindex("[")]
    return path.rsplit(".", 1)[0] if "." in path else ""


class _Reader:
    def __init__(self, lines: dict[str, int]):
        self.lines = lines

    def fail(self, path: str, message: str):
        # missing fields report the line of their nearest present parent
        probe = path
        while probe not in self.lines and probe:
            probe = _parent(probe)
        raise ConfigError(path, message, self.lines.get(probe))

    def mapping(self, value, path: str, allowed: set[str]) -> dict:
        if value is None:
            value = {}
        if not isinstance(value, dict):
            self.fail(path or "<root>", "expected a mapping")
        for key in value:
            if key not in allowed:
                sub = f"{path}.{key}" if path else str(key)
                self.fail(sub, f"unknown field; expected one of {sorted(allowed)}")
        return value

    def number(self, value, path: str, *, minimum=None, strict=False, allow_none=False, finite=True):
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        v = float(value)
        if finite and not math.isfinite(v):
            self.fail(path, "must be finite")
        if minimum is not None:
            if strict and not v > minimum:
                self.fail(path, f"must be > {minimum}")
            if not strict and not v >= minimum:
                self.fail(path, f"must be >= {minimum}")
        return v

    def integer(self, value, path: str, minimum: int | None = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}")
        return int(value)

    def numbers(self, value, path: str, **kw) -> tuple[float, ...]:
        if value is None:
            return ()
        if not isinstance(value, list):
            self.fail(path, "expected a list of numbers")
        return tuple(self.number(v, f"{path}[{i}]", **kw) for i, v in enumerate(value))


def _coupling(r: _Reader, value, path: str) -> Coupling:
    if value is None:
        return Coupling.absent()
    value = r.mapping(value, path, {"type", "gamma"})
    kind = value.get("type", "absent")
    if kind not in ("absent", "pin", "damper"):
        r.fail(f"{path}.type", f"must be absent, pin or damper, got {kind!r}")
    if kind == "damper":
        if "gamma" not in value:
            r.fail(f"{path}.gamma", "required for a damper")
        return Coupling.damper(r.number(value["gamma"], f"{path}.gamma", minimum=0.0))
    if "gamma" in value:
        r.fail(f"{path}.gamma", f"only meaningful for a damper, not {kind!r}")
    return Coupling(kind)


def _shape(r: _Reader, value, path: str) -> Shape:
    if not isinstance(value, dict) or "kind" not in value:
        r.fail(path, f"expected a mapping with 'kind' in {sorted(SHAPE_FIELDS)}")
    kind = value["kind"]
    if kind not in SHAPE_FIELDS:
        r.fail(f"{path}.kind", f"unknown shape {kind!r}; expected one of {sorted(SHAPE_FIELDS)}")
    required, optional = SHAPE_FIELDS[kind]
    r.mapping(value, path, {"kind", *required, *optional})
    params: dict[str, Any] = {}
    for key in required:
        if key not in value:
            r.fail(f"{path}.{key}", "required")
    for key in (*required, *optional):
        raw = value.get(key, optional.get(key))
        sub = f"{path}.{key}"
        if key in ("left", "right", "anchor"):
            params[key] = r.number(raw, sub, allow_none=True)
        elif key == "order":
            params[key] = r.integer(raw, sub, minimum=1)
        elif key == "side":
            if raw not in ("left", "right"):
                r.fail(sub, "must be 'left' or 'right'")
            params[key] = raw
        elif key in ("half_width", "width"):
            params[key] = r.number(raw, sub, minimum=0.0, strict=True)
        elif key == "coefficients":
            params[key] = r.numbers(raw, sub)
            if not params[key]:
                r.fail(sub, "needs at least one coefficient")
        elif key == "terms":
            if not isinstance(raw, list) or not raw:
                r.fail(sub, "expected a nonempty list of {coef, power, rate}")
            terms = []
            for i, t in enumerate(raw):
                tp = f"{sub}[{i}]"
                t = r.mapping(t, tp, {"coef", "power", "rate"})
                if "coef" not in t:
                    r.fail(f"{tp}.coef", "required")
                terms.append(
                    (
                        ("coef", r.number(t["coef"], f"{tp}.coef")),
                        ("power", r.integer(t.get("power", 0), f"{tp}.power", minimum=0)),
                        ("rate", r.number(t.get("rate", 0.0), f"{tp}.rate")),
                    )
                )
            params[key] = tuple(terms)
        else:
            params[key] = r.number(raw, sub)
    if kind in ("polynomial", "piece"):
        left = -math.inf if params["left"] is None else params["left"]
        right = math.inf if params["right"] is None else params["right"]
        if not left < right:
            r.fail(f"{path}.right", "must exceed left")
        if left == -math.inf and params["anchor"] is None:
            r.fail(f"{path}.anchor", "required when left is unbounded")
    return Shape(kind, tuple(sorted(params.items())))


def _shapes(r: _Reader, value, path: str) -> tuple[Shape, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        r.fail(path, "expected a list of shapes")
    return tuple(_shape(r, v, f"{path}[{i}]") for i, v in enumerate(value))


def parse_scenario(data, lines: dict[str, int] | None = None) -> Scenario:
    r = _Reader(lines or {})
    top = r.mapping(
        data,
        "",
        {"model", "initial_data", "horizon", "probes", "snapshots", "snapshot_window", "samples", "output", "oracle"},
    )
    if "model" not in top:
        r.fail("model", "required")
    m = r.mapping(top["model"], "model", {"c", "x_a", "x_b", "coupling_a", "coupling_b"})
    for key in ("c", "x_a", "x_b"):
        if key not in m:
            r.fail(f"model.{key}", "required")
    c = r.number(m["c"], "model.c", minimum=0.0, strict=True)
    x_a = r.number(m["x_a"], "model.x_a")
    x_b = r.number(m["x_b"], "model.x_b")
    if x_b < x_a:
        r.fail("model.x_b", "must be >= x_a")
    ca = _coupling(r, m.get("coupling_a"), "model.coupling_a")
    cb = _coupling(r, m.get("coupling_b"), "model.coupling_b")
    if ca.present and cb.present and not x_b > x_a:
        r.fail("model.x_b", "two couplings need x_b > x_a")
    model = ModelConfig(c, x_a, x_b, ca, cb)

    init = r.mapping(top.get("initial_data"), "initial_data", {"displacement", "velocity_primitive", "travelling"})
    disp = _shapes(r, init.get("displacement"), "initial_data.displacement")
    prim = _shapes(r, init.get("velocity_primitive"), "initial_data.velocity_primitive")
    travelling = init.get("travelling")
    if travelling is not None:
        if travelling not in (1, -1) or isinstance(travelling, bool):
            r.fail("initial_data.travelling", "must be 1 (rightward) or -1 (leftward)")
        if prim:
            r.fail("initial_data.velocity_primitive", "not allowed together with travelling")

    if "horizon" not in top:
        r.fail("horizon", "required")
    horizon = r.number(top["horizon"], "horizon", minimum=0.0, strict=True)
    probes = r.numbers(top.get("probes"), "probes")
    snapshots = r.numbers(top.get("snapshots"), "snapshots", minimum=0.0)
    window = top.get("snapshot_window")
    if window is not None:
        window = r.numbers(window, "snapshot_window")
        if len(window) != 2 or not window[0] < window[1]:
            r.fail("snapshot_window", "expected [x_lo, x_hi] with x_lo < x_hi")
    samples = r.integer(top.get("samples", 401), "samples", minimum=2)
    output = top.get("output", "out")
    if not isinstance(output, str) or not output:
        r.fail("output", "expected a nonempty path string")

    o = r.mapping(
        top.get("oracle"), "oracle", {"n_cells", "courant", "tolerance", "energy_tolerance", "min_order", "threshold_cells"}
    )
    defaults = OracleSettings()
    cells = o.get("n_cells", list(defaults.n_cells))
    if isinstance(cells, int) and not isinstance(cells, bool):
        cells = [cells]
    if not isinstance(cells, list) or not cells:
        r.fail("oracle.n_cells", "expected an integer or a nonempty list of integers")
    n_cells = tuple(r.integer(v, f"oracle.n_cells[{i}]", minimum=16) for i, v in enumerate(cells))
    if list(n_cells) != sorted(set(n_cells)):
        r.fail("oracle.n_cells", "refinement levels must be strictly increasing")
    courant = r.number(o.get("courant", defaults.courant), "oracle.courant", minimum=0.0, strict=True)
    if courant > 1:
        r.fail("oracle.courant", "must be <= 1 for stability")
    oracle = OracleSettings(
        n_cells=n_cells,
        courant=courant,
        tolerance=r.number(o.get("tolerance", defaults.tolerance), "oracle.tolerance", minimum=0.0, strict=True),
        energy_tolerance=r.number(
            o.get("energy_tolerance", defaults.energy_tolerance),
            "oracle.energy_tolerance",
            minimum=0.0,
            strict=True,
            allow_none=True,
        ),
        min_order=r.number(o.get("min_order"), "oracle.min_order", allow_none=True),
        threshold_cells=r.integer(
            o.get("threshold_cells", defaults.threshold_cells), "oracle.threshold_cells", minimum=1
        ),
    )
    return Scenario(
        model=model,
        displacement=disp,
        velocity_primitive=prim,
        travelling=travelling,
        horizon=horizon,
        probes=probes,
        snapshots=snapshots,
        snapshot_window=tuple(window) if window is not None else None,
        samples=samples,
        output=output,
        oracle=oracle,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<syntax>", str(getattr(exc, "problem", exc)), mark.line + 1 if mark else None) from None
    return parse_scenario(data, _line_map(text))


def dump_scenario(s: Scenario) -> str:
    return yaml.safe_dump(s.to_dict(), sort_keys=False)
