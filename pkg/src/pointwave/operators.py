"""Retarded exponential-convolution operators and delayed special functions.

``RetardedOp(gamma, delay)`` acts as

    (I f)(t) = int_delay^t exp(-2 gamma (t - u)) f(u - delay) du,

with the integral read as zero when ``t < delay``. Powers have the closed
kernel  s^(N-1)/(N-1)! exp(-2 gamma s)  at lag ``s = t - N delay - u``.
The delayed exponential and its odd/even parts are finite sums on any
finite window, so every constructor here takes an explicit horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate as _quad

from .signal import (
    PolyExpTerm,
    atom,
    Signal,
    kernel_convolve,
    mpf,
    add,
    exp_convolve,
    scale,
)

__all__ = [
    "RetardedOp",
    "apply",
    "compose_power",
    "delayed_exp",
    "delayed_sinh",
    "delayed_cosh",
    "delayed_series_terms",
    "geometric_resolvent",
    "summed_kernel_eval",
]


@dataclass(frozen=True)
class RetardedOp:
    gamma: float
    delay: float = 0.0

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")

    def __call__(self, f: Signal) -> Signal:
        return apply(self, f)

    def power(self, n: int, f: Signal) -> Signal:
        return compose_power(self.gamma, self.delay, n, f)


def apply(op: RetardedOp, f: Signal) -> Signal:
    return exp_convolve(f, op.gamma, op.delay)


def compose_power(gamma: float, delay: float, n: int, f: Signal) -> Signal:
    """``I_{gamma,delay}^n f`` through the closed power kernel."""
    if n < 1:
        raise ValueError("compose_power needs n >= 1; the zeroth power is the identity")
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    kernel = (PolyExpTerm(mpf(1) / math.factorial(n - 1), n - 1, -2.0 * gamma),)
    return kernel_convolve(f, kernel, n * delay)


def delayed_series_terms(horizon: float, delay: float, parity: str | None = None) -> list[int]:
    """Indices N with ``N * delay <= horizon``, optionally only odd or even ones."""
    if delay <= 0:
        raise ValueError(f"delay must be > 0, got {delay}")
    if not math.isfinite(horizon) or horizon < 0:
        raise ValueError(f"horizon must be finite and >= 0, got {horizon}")
    top = math.floor(horizon / delay)
    ns = range(top + 1)
    if parity == "odd":
        return [n for n in ns if n % 2 == 1]
    if parity == "even":
        return [n for n in ns if n % 2 == 0]
    return list(ns)


def _delayed_sum(lam: float, delay: float, horizon: float, keep: set[int], label: str) -> Signal:
    parts = []
    fact = 1
    lam_n = mpf(1)
    lam = mpf(lam)
    for n in range(math.floor(horizon / delay) + 1):
        if n > 0:
            fact *= n
            lam_n *= lam
        if n in keep:
            parts.append(atom(lam_n / fact, n, 0.0, n * delay))
    return Signal(add(*parts).segments, label=label, horizon=horizon)


def delayed_exp(lam: float, delay: float, horizon: float) -> Signal:
    """``sum_N lam^N (t - N delay)^N / N! * 1_+(t - N delay)`` on ``[0, horizon]``."""
    ns = set(delayed_series_terms(horizon, delay))
    return _delayed_sum(lam, delay, horizon, ns, "Exp")


def delayed_sinh(lam: float, delay: float, horizon: float) -> Signal:
    ns = set(delayed_series_terms(horizon, delay, "odd"))
    return _delayed_sum(lam, delay, horizon, ns, "Sinh")


def delayed_cosh(lam: float, delay: float, horizon: float) -> Signal:
    ns = set(delayed_series_terms(horizon, delay, "even"))
    return _delayed_sum(lam, delay, horizon, ns, "Cosh")


def geometric_resolvent(gamma: float, delay: float, g: Signal, horizon: float) -> Signal:
    """Solve ``q = 2 gamma I_{gamma,delay} q + g`` on ``[0, horizon]``.

    The Neumann sum is finite there: the N-th power only switches on at
    ``N * delay``, so terms are dropped by support, never by size.
    """
    if delay <= 0:
        raise ValueError(f"delay must be > 0, got {delay}")
    if not math.isfinite(horizon):
        raise ValueError("horizon must be finite")
    g = g.truncate(horizon)
    total = [g]
    term = g
    n = 0
    while gamma != 0 and not term.is_zero():
        n += 1
        if n * delay > horizon:
            break
        term = scale(exp_convolve(term, gamma, delay), 2.0 * gamma).truncate(horizon)
        total.append(term)
    return add(*total).truncate(horizon).relabel("resolvent")


def summed_kernel_eval(
    gamma: float,
    delay: float,
    f: Signal,
    t: float,
    *,
    with_base_integral: bool = False,
    parity: str | None = None,
) -> float:
    """Pointwise value of ``sum_N (2 gamma)^N I_{gamma,delay}^N [I_{gamma,0}] f`` by quadrature.

    Each power is evaluated in its shifted-integral form

        int_{N delay}^t (t-u)^m / m! exp(-2 gamma (t-u)) f(u - N delay) du

    with ``m = N`` when ``with_base_integral`` is set and ``m = N - 1``
    otherwise (the N = 0 term is then ``f(t)`` itself). Independent of the
    exact convolution code; used to cross-check it.
    """
    total = 0.0
    n_max = math.floor(t / delay) if delay > 0 else 0
    for n in range(n_max + 1):
        if parity == "odd" and n % 2 == 0:
            continue
        if parity == "even" and n % 2 == 1:
            continue
        m = n if with_base_integral else n - 1
        weight = (2.0 * gamma) ** n
        if m < 0:
            total += weight * float(f.eval(t))
            continue
        lo = n * delay
        if t <= lo:
            continue
        breaks = [s + lo for s in f.starts if lo < s + lo < t]

        def integrand(u, m=m, lo=lo):
            s = t - u
            return s**m / math.factorial(m) * math.exp(-2.0 * gamma * s) * float(f.eval(u - lo))

        val, _ = _quad.quad(integrand, lo, t, points=breaks or None, limit=400, epsabs=1e-14, epsrel=1e-13)
        total += weight * val
    return total
