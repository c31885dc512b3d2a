"""Solvers for a string with one or two point interactions.

All cases reduce to the retarded responses ``F_a``, ``F_b`` emitted at the
interaction points; the field is then

    u(t, x) = F_a(t - |x - x_a|/c) + F_b(t - |x - x_b|/c) + u0(t, x),

and the traces obey ``Q_a = F_a + F_b(. - T) + Q0a`` (and symmetrically).
A pin forces the trace to zero; a damper of strength gamma emits
``F = -2 gamma int_0^t Q``. Every series is cut by support, so results on
``[0, horizon]`` are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dalembert import Coupling, InitialData, ModelConfig, free_field, free_trace, reconstruct_field
from .operators import delayed_cosh, delayed_exp, delayed_sinh, geometric_resolvent
from .signal import (
    Signal,
    add,
    convolve,
    exp_convolve,
    integrate,
    mul_exp,
    scale,
    shift,
    zero,
)

__all__ = [
    "ForcePair",
    "SolutionBundle",
    "solve",
    "solve_free",
    "solve_single_pin",
    "solve_single_damper",
    "solve_two_pins",
    "solve_pin_damper",
    "pin_damper_source",
    "pin_damper_exp_series",
    "solve_two_dampers",
    "solve_two_dampers_equal_gamma",
    "unroll_recursion",
]


@dataclass(frozen=True)
class ForcePair:
    F_a: Signal
    F_b: Signal
    horizon: float


@dataclass(frozen=True)
class SolutionBundle:
    config: ModelConfig
    data: InitialData
    forces: ForcePair
    trace_a: Signal
    trace_b: Signal
    free_trace_a: Signal
    free_trace_b: Signal

    @property
    def horizon(self) -> float:
        return self.forces.horizon

    def field(self, t, x):
        """Field at ``(t, x)``.

        A pin splits the string: beyond it only the data on that side
        matter, so those points use the clamped half-line formula and are
        exactly zero when that side starts at rest.
        """
        cfg = self.config
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        out = np.array(reconstruct_field(self.forces.F_a, self.forces.F_b, cfg, self.data, t, x), dtype=float)
        sides = []
        if cfg.coupling_a.kind == "pin":
            sides.append((x < cfg.x_a, cfg.x_a, -math.inf, cfg.x_a))
        if cfg.coupling_b.kind == "pin":
            sides.append((x > cfg.x_b, cfg.x_b, cfg.x_b, math.inf))
        for beyond, xp, lo, hi in sides:
            if np.any(beyond):
                out[beyond] = _half_line(self.data.restricted(lo, hi), cfg.c, xp, t[beyond], x[beyond])
        return float(out) if out.ndim == 0 else out


def _half_line(d: InitialData, c: float, xp: float, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Free field minus its echo off a clamp at ``xp``."""
    ret = t - np.abs(x - xp) / c
    echo = np.where(ret >= 0, free_field(d, c, np.maximum(ret, 0.0), np.full_like(x, xp)), 0.0)
    return free_field(d, c, t, x) - echo


def _check_horizon(horizon: float):
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be finite and > 0, got {horizon}")


def _bundle(cfg: ModelConfig, d: InitialData, F_a: Signal, F_b: Signal, horizon: float, q0a=None, q0b=None):
    q0a = q0a if q0a is not None else free_trace(d, cfg.c, cfg.x_a, horizon)
    q0b = q0b if q0b is not None else free_trace(d, cfg.c, cfg.x_b, horizon)
    F_a = F_a.truncate(horizon).relabel("F_a")
    F_b = F_b.truncate(horizon).relabel("F_b")
    T = cfg.T
    trace_a = add(F_a, shift(F_b, T), q0a).truncate(horizon).relabel("Q_a")
    trace_b = add(shift(F_a, T), F_b, q0b).truncate(horizon).relabel("Q_b")
    return SolutionBundle(
        config=cfg,
        data=d,
        forces=ForcePair(F_a, F_b, horizon),
        trace_a=trace_a,
        trace_b=trace_b,
        free_trace_a=q0a.relabel("Q0a"),
        free_trace_b=q0b.relabel("Q0b"),
    )


def _swap(cfg: ModelConfig):
    """Which side carries the 'first' coupling; used to relabel a <-> b."""
    return cfg.coupling_b.present and not cfg.coupling_a.present


def _neumann_pair(op_a, op_b, src_a: Signal, src_b: Signal, delay: float, horizon: float):
    """Solve ``F_a = op_a(F_b) + src_a``, ``F_b = op_b(F_a) + src_b`` by support.

    Both operators must retard by at least ``delay`` > 0, so the N-th
    iterate switches on no earlier than ``N * delay``.
    """
    acc_a, acc_b = [src_a], [src_b]
    cur_a, cur_b = src_a, src_b
    n = 0
    while not (cur_a.is_zero() and cur_b.is_zero()):
        n += 1
        if n * delay > horizon:
            break
        cur_a, cur_b = op_a(cur_b).truncate(horizon), op_b(cur_a).truncate(horizon)
        acc_a.append(cur_a)
        acc_b.append(cur_b)
    return add(*acc_a).truncate(horizon), add(*acc_b).truncate(horizon)


# -- single interaction ------------------------------------------------------


def solve_free(d: InitialData, cfg: ModelConfig, horizon: float) -> SolutionBundle:
    _check_horizon(horizon)
    return _bundle(cfg, d, zero(), zero(), horizon)


def _single(d: InitialData, cfg: ModelConfig, horizon: float, kind: str) -> SolutionBundle:
    _check_horizon(horizon)
    swapped = _swap(cfg)
    coupling = cfg.coupling_b if swapped else cfg.coupling_a
    other = cfg.coupling_a if swapped else cfg.coupling_b
    if coupling.kind != kind or other.present:
        raise ValueError(f"expected exactly one {kind} coupling, got {cfg.coupling_a} / {cfg.coupling_b}")
    x0 = cfg.x_b if swapped else cfg.x_a
    q0 = free_trace(d, cfg.c, x0, horizon)
    if kind == "pin":
        F = scale(q0, -1.0)
    else:
        F = scale(exp_convolve(q0, coupling.gamma, 0.0), -2.0 * coupling.gamma)
    if swapped:
        return _bundle(cfg, d, zero(), F, horizon, q0b=q0)
    return _bundle(cfg, d, F, zero(), horizon, q0a=q0)


def solve_single_pin(d: InitialData, cfg: ModelConfig, horizon: float) -> SolutionBundle:
    """One pin: the point response cancels the free trace, ``F = -Q0``."""
    return _single(d, cfg, horizon, "pin")


def solve_single_damper(d: InitialData, cfg: ModelConfig, horizon: float) -> SolutionBundle:
    """One damper: ``F = -2 gamma I_{gamma,0} Q0`` solves ``F' = -2 gamma (F + Q0)``, ``F(0) = 0``."""
    return _single(d, cfg, horizon, "damper")


# -- two interactions --------------------------------------------------------


def _require_two(cfg: ModelConfig, kinds: tuple[str, str]):
    got = {cfg.coupling_a.kind, cfg.coupling_b.kind}
    if sorted((cfg.coupling_a.kind, cfg.coupling_b.kind)) != sorted(kinds):
        raise ValueError(f"expected couplings {kinds}, got {sorted(got)}")
    if not cfg.T > 0:
        raise ValueError("two interaction points need T > 0")


def solve_two_pins(d: InitialData, cfg: ModelConfig, horizon: float) -> SolutionBundle:
    """Two pins: alternating image series ``F_a = -Q0a - F_b(. - T)`` and vice versa.

    ``bundle.field(t, x)`` evaluates the field.
    """
    _check_horizon(horizon)
    _require_two(cfg, ("pin", "pin"))
    T = cfg.T
    q0a = free_trace(d, cfg.c, cfg.x_a, horizon)
    q0b = free_trace(d, cfg.c, cfg.x_b, horizon)
    F_a, F_b = _neumann_pair(
        lambda f: scale(shift(f, T), -1.0),
        lambda f: scale(shift(f, T), -1.0),
        scale(q0a, -1.0),
        scale(q0b, -1.0),
        T,
        horizon,
    )
    return _bundle(cfg, d, F_a, F_b, horizon, q0a, q0b)


def pin_damper_source(q0_pin: Signal, q0_damp: Signal, gamma: float, T: float) -> Signal:
    """The free part ``I0`` of the damper trace when the other point is pinned.

    ``I0 = int_{0+}^t e^{-2 gamma (t-u)} dg(u) + e^{-2 gamma t} g(0+)`` with
    ``g = Q0_damp - Q0_pin(. - T)``. Integrating by parts gives
    ``I0 = g - 2 gamma I_{gamma,0} g``, which also picks up the jumps of g.
    """
    g = add(q0_damp, scale(shift(q0_pin, T), -1.0))
    return add(g, scale(exp_convolve(g, gamma, 0.0), -2.0 * gamma)).relabel("I0")


def pin_damper_exp_series(I0: Signal, gamma: float, T: float, horizon: float) -> Signal:
    """Damper trace through the delayed exponential kernel.

    ``Q = I0 + lam' int_0^t Exp(lam', 2T, t-u-2T) e^{-2 gamma (t-u)} I0(u) du``
    with ``lam' = 2 gamma e^{4 gamma T}``.
    """
    lam = 2.0 * gamma * math.exp(4.0 * gamma * T)
    if gamma == 0:
        return I0.truncate(horizon)
    kernel = scale(mul_exp(shift(delayed_exp(lam, 2.0 * T, horizon), 2.0 * T), -2.0 * gamma), lam)
    kernel = kernel.truncate(horizon)
    return add(I0, convolve(kernel, I0.truncate(horizon))).truncate(horizon).relabel("Q_damper")


def solve_pin_damper(d: InitialData, cfg: ModelConfig, horizon: float, method: str = "resolvent") -> SolutionBundle:
    """Pin at one point, damper at the other.

    The damper trace solves ``Q = 2 gamma I_{gamma,2T} Q + I0``; the damper
    emits ``-2 gamma int Q`` and the pin cancels whatever reaches it.
    ``method`` picks the Neumann resolvent or the delayed-exponential series.
    """
    _check_horizon(horizon)
    _require_two(cfg, ("pin", "damper"))
    T = cfg.T
    pin_is_a = cfg.coupling_a.kind == "pin"
    gamma = (cfg.coupling_b if pin_is_a else cfg.coupling_a).gamma
    x_pin, x_damp = (cfg.x_a, cfg.x_b) if pin_is_a else (cfg.x_b, cfg.x_a)
    q0_pin = free_trace(d, cfg.c, x_pin, horizon)
    q0_damp = free_trace(d, cfg.c, x_damp, horizon)
    I0 = pin_damper_source(q0_pin, q0_damp, gamma, T)
    if method == "resolvent":
        Q = geometric_resolvent(gamma, 2.0 * T, I0, horizon)
    elif method == "exp_series":
        Q = pin_damper_exp_series(I0, gamma, T, horizon)
    else:
        raise ValueError(f"unknown method {method!r}")
    F_damp = scale(integrate(Q), -2.0 * gamma)
    F_pin = add(scale(q0_pin, -1.0), scale(shift(F_damp, T), -1.0))
    if pin_is_a:
        return _bundle(cfg, d, F_pin, F_damp, horizon, q0_pin, q0_damp)
    return _bundle(cfg, d, F_damp, F_pin, horizon, q0_damp, q0_pin)


def solve_two_dampers(d: InitialData, cfg: ModelConfig, horizon: float) -> SolutionBundle:
    """Two dampers via the alternating Neumann sum of

    ``F_a = -2 g_a I_{g_a,T} F_b - 2 g_a I_{g_a,0} Q0a`` and the mirror equation.
    """
    _check_horizon(horizon)
    _require_two(cfg, ("damper", "damper"))
    T = cfg.T
    ga, gb = cfg.coupling_a.gamma, cfg.coupling_b.gamma
    q0a = free_trace(d, cfg.c, cfg.x_a, horizon)
    q0b = free_trace(d, cfg.c, cfg.x_b, horizon)
    src_a = scale(exp_convolve(q0a, ga, 0.0), -2.0 * ga)
    src_b = scale(exp_convolve(q0b, gb, 0.0), -2.0 * gb)
    F_a, F_b = _neumann_pair(
        lambda f: scale(exp_convolve(f, ga, T), -2.0 * ga),
        lambda f: scale(exp_convolve(f, gb, T), -2.0 * gb),
        src_a,
        src_b,
        T,
        horizon,
    )
    return _bundle(cfg, d, F_a, F_b, horizon, q0a, q0b)


def solve_two_dampers_equal_gamma(d: InitialData, cfg: ModelConfig, horizon: float) -> SolutionBundle:
    """Two equal dampers through the delayed Cosh/Sinh kernels.

    With ``lam = 2 g e^{2 g T}``, ``C(s) = Cosh(lam, T, s) e^{-2 g s}`` and
    ``S(s) = Sinh(lam, T, s) e^{-2 g s}``:
    ``F_a = -2 g C * Q0a + 2 g S * Q0b`` and ``F_b`` with the traces swapped.
    """
    _check_horizon(horizon)
    _require_two(cfg, ("damper", "damper"))
    ga, gb = cfg.coupling_a.gamma, cfg.coupling_b.gamma
    if ga != gb:
        raise ValueError(f"equal-gamma closed form needs gamma_a == gamma_b, got {ga}, {gb}")
    g, T = ga, cfg.T
    q0a = free_trace(d, cfg.c, cfg.x_a, horizon)
    q0b = free_trace(d, cfg.c, cfg.x_b, horizon)
    if g == 0:
        return _bundle(cfg, d, zero(), zero(), horizon, q0a, q0b)
    lam = 2.0 * g * math.exp(2.0 * g * T)
    even = mul_exp(delayed_cosh(lam, T, horizon), -2.0 * g)
    odd = mul_exp(delayed_sinh(lam, T, horizon), -2.0 * g)
    F_a = add(scale(convolve(even, q0a), -2.0 * g), scale(convolve(odd, q0b), 2.0 * g))
    F_b = add(scale(convolve(even, q0b), -2.0 * g), scale(convolve(odd, q0a), 2.0 * g))
    return _bundle(cfg, d, F_a, F_b, horizon, q0a, q0b)


# -- dispatch ----------------------------------------------------------------


def solve(d: InitialData, cfg: ModelConfig, horizon: float) -> SolutionBundle:
    """Pick the solver matching the couplings, relabelling a <-> b as needed."""
    kinds = sorted(k for k in (cfg.coupling_a.kind, cfg.coupling_b.kind) if k != "absent")
    if not kinds:
        return solve_free(d, cfg, horizon)
    if kinds == ["pin"]:
        return solve_single_pin(d, cfg, horizon)
    if kinds == ["damper"]:
        return solve_single_damper(d, cfg, horizon)
    if kinds == ["pin", "pin"]:
        return solve_two_pins(d, cfg, horizon)
    if kinds == ["damper", "pin"]:
        return solve_pin_damper(d, cfg, horizon)
    return solve_two_dampers(d, cfg, horizon)


def unroll_recursion(bundle: SolutionBundle, depth: int) -> ForcePair:
    """Responses rebuilt from the unrolled recurrence on trace excesses.

    ``F_a = D_a - D_b(. - T) + D_a(. - 2T) - ...`` with ``D = Q - Q0``; the
    terms ``k = 0..depth`` make the result exact on ``[0, (depth+1) T)``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    T = bundle.config.T
    if not T > 0:
        raise ValueError("the recurrence needs T > 0")
    D_a = add(bundle.trace_a, scale(bundle.free_trace_a, -1.0))
    D_b = add(bundle.trace_b, scale(bundle.free_trace_b, -1.0))
    horizon = min(bundle.horizon, (depth + 1) * T)
    parts_a, parts_b = [], []
    for k in range(depth + 1):
        sign = -1.0 if k % 2 else 1.0
        same_a, same_b = (D_b, D_a) if k % 2 else (D_a, D_b)
        parts_a.append(scale(shift(same_a, k * T), sign))
        parts_b.append(scale(shift(same_b, k * T), sign))
    F_a = add(*parts_a).truncate(horizon)
    F_b = add(*parts_b).truncate(horizon)
    return ForcePair(F_a, F_b, horizon)


def max_residual(a: Signal, b: Signal, horizon: float, n: int = 200) -> float:
    t = np.linspace(0.0, horizon, n)
    return float(np.max(np.abs(a.eval(t) - b.eval(t))))
