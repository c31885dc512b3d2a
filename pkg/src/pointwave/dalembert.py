"""Free field from initial data and field reconstruction from point responses.

Initial data are piecewise polynomial-exponential functions of position, so
the free field seen at a fixed point is an exact :class:`Signal` in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .signal import (
    PolyExpTerm,
    Signal,
    add,
    integrate,
    mpexp,
    mpf,
    scale,
    window,
)

__all__ = [
    "Piece",
    "PositionFunction",
    "InitialData",
    "Coupling",
    "ModelConfig",
    "free_field",
    "free_trace",
    "reconstruct_field",
    "source_integral_check",
]


@dataclass(frozen=True)
class Piece:
    """``sum terms(x - anchor)`` on ``[left, right)``; ``anchor`` defaults to ``left``."""

    left: float
    right: float
    terms: tuple[PolyExpTerm, ...]
    anchor: float | None = None

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError(f"empty piece [{self.left}, {self.right})")
        if self.anchor is None:
            if not math.isfinite(self.left):
                raise ValueError("a piece unbounded on the left needs an explicit anchor")
            object.__setattr__(self, "anchor", float(self.left))
        object.__setattr__(self, "terms", tuple(self.terms))

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.left) & (x < self.right)
        xi = np.where(inside, x - self.anchor, 0.0)
        out = np.zeros(x.shape)
        for t in self.terms:
            out += float(t.coefficient) * xi**t.power * np.exp(t.rate * xi)
        return np.where(inside, out, 0.0)

    def derivative(self) -> "Piece":
        terms = []
        for t in self.terms:
            if t.power > 0:
                terms.append(PolyExpTerm(t.coefficient * t.power, t.power - 1, t.rate))
            if t.rate != 0:
                terms.append(PolyExpTerm(t.coefficient * t.rate, t.power, t.rate))
        return Piece(self.left, self.right, tuple(terms), self.anchor)


@dataclass(frozen=True)
class PositionFunction:
    """Sum of pieces; zero wherever no piece applies."""

    pieces: tuple[Piece, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.zeros(x_arr.shape)
        for p in self.pieces:
            out += p.eval(x_arr)
        return float(out) if out.ndim == 0 else out

    def __add__(self, other: "PositionFunction") -> "PositionFunction":
        return PositionFunction(self.pieces + other.pieces)

    def scaled(self, k: float) -> "PositionFunction":
        return PositionFunction(
            tuple(
                Piece(p.left, p.right, tuple(PolyExpTerm(k * t.coefficient, t.power, t.rate) for t in p.terms), p.anchor)
                for p in self.pieces
            )
        )

    def derivative(self) -> "PositionFunction":
        """Pointwise derivative; jumps between pieces are ignored."""
        return PositionFunction(tuple(p.derivative() for p in self.pieces))

    def restricted(self, lo: float, hi: float) -> "PositionFunction":
        """The part of ``self`` on ``[lo, hi)``, zero elsewhere."""
        pieces = []
        for p in self.pieces:
            left, right = max(p.left, lo), min(p.right, hi)
            if left < right:
                pieces.append(Piece(left, right, p.terms, p.anchor))
        return PositionFunction(tuple(pieces))

    def held(self, lo: float, hi: float) -> "PositionFunction":
        """``self`` on ``[lo, hi)``, frozen at its end values outside.

        This is the primitive of a derivative cut down to ``[lo, hi)``.
        """
        out = self.restricted(lo, hi).pieces
        if math.isfinite(lo):
            out += (Piece(-math.inf, lo, (PolyExpTerm(float(self(lo))),), lo),)
        if math.isfinite(hi):
            out += (Piece(hi, math.inf, (PolyExpTerm(self.left_limit(hi)),)),)
        return PositionFunction(out)

    def left_limit(self, x0: float) -> float:
        total = 0.0
        for p in self.pieces:
            if p.left < x0 <= p.right:
                xi = x0 - p.anchor
                total += sum(float(t.coefficient) * xi**t.power * math.exp(t.rate * xi) for t in p.terms)
        return total

    @property
    def breakpoints(self) -> list[float]:
        pts = set()
        for p in self.pieces:
            pts.update(v for v in (p.left, p.right) if math.isfinite(v))
        return sorted(pts)

    # -- common shapes --------------------------------------------------

    @classmethod
    def zero(cls) -> "PositionFunction":
        return cls(())

    @classmethod
    def constant(cls, value: float) -> "PositionFunction":
        return cls((Piece(-math.inf, math.inf, (PolyExpTerm(value),), anchor=0.0),))

    @classmethod
    def step(cls, at: float, height: float = 1.0, side: str = "right") -> "PositionFunction":
        """``height`` for ``x >= at`` (``side="right"``) or ``x < at`` (``side="left"``)."""
        if side == "right":
            return cls((Piece(at, math.inf, (PolyExpTerm(height),)),))
        if side == "left":
            return cls((Piece(-math.inf, at, (PolyExpTerm(height),), anchor=at),))
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    @classmethod
    def polynomial(cls, left: float, right: float, coefficients, anchor: float | None = None):
        """Polynomial in ``x - anchor`` on ``[left, right)``, lowest degree first."""
        terms = tuple(PolyExpTerm(float(c), k) for k, c in enumerate(coefficients) if c != 0)
        return cls((Piece(left, right, terms, anchor),))

    @classmethod
    def triangle(cls, center: float, half_width: float, height: float = 1.0):
        w = half_width
        return cls(
            (
                Piece(center - w, center, (PolyExpTerm(height / w, 1),)),
                Piece(center, center + w, (PolyExpTerm(height), PolyExpTerm(-height / w, 1))),
            )
        )

    @classmethod
    def smooth_step(cls, at: float, width: float, height: float = 1.0, side: str = "right"):
        """Step with a C2 quintic ramp of ``width`` ending at ``at``.

        ``side="left"`` is ``height`` left of ``at - width`` falling to 0 at
        ``at``; ``side="right"`` mirrors it (0 left of ``at``, ``height`` from
        ``at + width``).
        """
        if not width > 0:
            raise ValueError("width must be > 0")
        ramp = Polynomial([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])  # 0 -> 1 on [0, 1]
        if side == "right":
            poly = height * ramp(Polynomial([0.0, 1.0 / width]))
            return cls((Piece(at, at + width, _poly_terms(poly)), Piece(at + width, math.inf, (PolyExpTerm(height),))))
        if side == "left":
            poly = height * (1 - ramp(Polynomial([0.0, 1.0 / width])))
            return cls(
                (
                    Piece(-math.inf, at - width, (PolyExpTerm(height),), anchor=at - width),
                    Piece(at - width, at, _poly_terms(poly)),
                )
            )
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    @classmethod
    def bump(cls, center: float, half_width: float, height: float = 1.0, order: int = 4):
        """``height * (1 - ((x - center) / half_width)^2)^order`` on its support."""
        w = half_width
        xi = Polynomial([-1.0, 1.0 / w])  # (y - w) / w with y = x - (center - w)
        poly = height * (1 - xi**2) ** order
        return cls.polynomial(center - w, center + w, poly.coef)


def _poly_terms(poly: Polynomial) -> tuple[PolyExpTerm, ...]:
    return tuple(PolyExpTerm(float(c), k) for k, c in enumerate(poly.coef) if c != 0)


@dataclass(frozen=True)
class InitialData:
    """Displacement ``u(0, x)`` and any primitive of the initial velocity."""

    displacement: PositionFunction = field(default_factory=PositionFunction)
    velocity_primitive: PositionFunction = field(default_factory=PositionFunction)

    @property
    def breakpoints(self) -> list[float]:
        return sorted(set(self.displacement.breakpoints) | set(self.velocity_primitive.breakpoints))

    def restricted(self, lo: float, hi: float) -> "InitialData":
        """Displacement and velocity cut down to ``[lo, hi)``."""
        return InitialData(self.displacement.restricted(lo, hi), self.velocity_primitive.held(lo, hi))

    @classmethod
    def travelling(cls, profile: PositionFunction, c: float, direction: int = +1) -> "InitialData":
        """Data whose free evolution is ``profile(x - direction * c * t)``."""
        if direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        return cls(profile, profile.scaled(-direction * c))


@dataclass(frozen=True)
class Coupling:
    kind: str = "absent"
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("absent", "pin", "damper"):
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.kind == "damper" and not self.gamma >= 0:
            raise ValueError(f"damper gamma must be >= 0, got {self.gamma}")

    @classmethod
    def absent(cls) -> "Coupling":
        return cls("absent")

    @classmethod
    def pin(cls) -> "Coupling":
        return cls("pin")

    @classmethod
    def damper(cls, gamma: float) -> "Coupling":
        return cls("damper", float(gamma))

    @property
    def present(self) -> bool:
        return self.kind != "absent"


@dataclass(frozen=True)
class ModelConfig:
    c: float
    x_a: float
    x_b: float
    coupling_a: Coupling = field(default_factory=Coupling)
    coupling_b: Coupling = field(default_factory=Coupling)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"wave speed must be > 0, got {self.c}")
        if not self.x_a <= self.x_b:
            raise ValueError(f"need x_a <= x_b, got {self.x_a} > {self.x_b}")
        if self.coupling_a.present and self.coupling_b.present and self.T <= 0:
            raise ValueError("two couplings need distinct positions (T > 0)")

    @property
    def T(self) -> float:
        return (self.x_b - self.x_a) / self.c


# -- free field ------------------------------------------------------------


def free_field(d: InitialData, c: float, t, x):
    """d'Alembert solution of the uncoupled problem at ``(t, x)``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t < 0):
        raise ValueError("free_field needs t >= 0")
    right, left = x + c * t, x - c * t
    out = 0.5 * (d.displacement(right) + d.displacement(left))
    out = out + (d.velocity_primitive(right) - d.velocity_primitive(left)) / (2.0 * c)
    return float(out) if np.ndim(out) == 0 else out


def _travelling_trace(fn: PositionFunction, c: float, x0: float, direction: int) -> Signal:
    """``t -> fn(x0 + direction * c * t)`` for ``t >= 0``."""
    parts = []
    for p in fn.pieces:
        if direction > 0:
            t_in, t_out = (p.left - x0) / c, (p.right - x0) / c
        else:
            t_in, t_out = (x0 - p.right) / c, (x0 - p.left) / c
        t_start = max(0.0, t_in)
        if not t_out > t_start:
            continue
        # xi = x0 + dir*c*t - anchor = dir*c*tau + delta,  tau = t - t_start
        delta = mpf(x0) + direction * mpf(c) * mpf(t_start) - mpf(p.anchor)
        slope = direction * mpf(c)
        terms = []
        for term in p.terms:
            w = term.coefficient * mpexp(term.rate * delta)
            for k in range(term.power + 1):
                coef = w * math.comb(term.power, k) * delta ** (term.power - k) * slope**k
                terms.append(PolyExpTerm(coef, k, term.rate * slope))
        parts.append(window(terms, t_start, t_out))
    return add(*parts)


def free_trace(d: InitialData, c: float, x0: float, horizon: float = math.inf) -> Signal:
    """The free field at ``x0`` as an exact signal of time."""
    parts = []
    for fn, weight in ((d.displacement, 0.5), (d.velocity_primitive, 0.5 / c)):
        fwd = _travelling_trace(fn, c, x0, +1)
        bwd = _travelling_trace(fn, c, x0, -1)
        if fn is d.displacement:
            parts.append(scale(add(fwd, bwd), weight))
        else:
            parts.append(scale(add(fwd, scale(bwd, -1.0)), weight))
    out = add(*parts)
    if math.isfinite(horizon):
        out = out.truncate(horizon)
    return out.relabel(f"u0(t, {x0:g})")


# -- reconstruction ---------------------------------------------------------


def reconstruct_field(F_a: Signal | None, F_b: Signal | None, cfg: ModelConfig, d: InitialData, t, x):
    """``F_a(t - |x-x_a|/c) + F_b(t - |x-x_b|/c) + u0(t, x)``; ``None`` means no source."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.asarray(free_field(d, cfg.c, t, x), dtype=float)
    if F_a is not None:
        out = out + F_a.eval(t - np.abs(x - cfg.x_a) / cfg.c)
    if F_b is not None:
        out = out + F_b.eval(t - np.abs(x - cfg.x_b) / cfg.c)
    return float(out) if out.ndim == 0 else out


def source_integral_check(F_src: Signal, gamma: float, F: Signal, horizon: float, n: int = 200) -> float:
    """``max |F(t) + 2 gamma int_0^t F_src|`` over ``n`` points of ``[0, horizon]``."""
    t = np.linspace(0.0, horizon, n)
    integral = integrate(F_src)
    return float(np.max(np.abs(F.eval(t) + 2.0 * gamma * integral.eval(t))))
