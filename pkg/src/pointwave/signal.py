"""Exact causal signals: piecewise sums of polynomial-exponential terms.

A :class:`Signal` is zero before its first segment. Segment ``k`` covers
``[start_k, start_{k+1})`` (the last one runs forever) and holds terms in
local time ``tau = t - start_k``:

    s(t) = sum_j c_j tau^p_j exp(r_j tau)

Anchoring in local time keeps coefficients well conditioned; a pulse that
has passed is an empty segment, not a cancellation of two long tails.
The class is closed under retardation, sums, exponential weights,
integration from zero and convolution with polynomial-exponential kernels.

Closed forms such as  int_0^tau e^{-a(tau-u)} u^p du  are sums of terms of
size p!/a^(p+1) that cancel down to something of size tau^(p+1)/(p+1), so
coefficients live in a private extended-precision context. Evaluation
takes a vectorized float path and redoes only the points where that sum
cancels badly.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from mpmath.ctx_mp import MPContext

from .csvio import format_float, write_columns

__all__ = [
    "InsufficientHorizon",
    "WORKING_DIGITS",
    "mpf",
    "mpexp",
    "PolyExpTerm",
    "Segment",
    "Signal",
    "zero",
    "heaviside",
    "atom",
    "window",
    "reanchor",
    "shift",
    "add",
    "scale",
    "mul_exp",
    "integrate",
    "exp_convolve",
    "kernel_convolve",
    "convolve",
    "components",
    "sample",
    "format_float",
    "write_csv",
]

WORKING_DIGITS = 60
_mp = MPContext()
_mp.dps = WORKING_DIGITS
_ZERO = _mp.mpf(0)

# slack on horizon checks so that sample grids may end exactly at the horizon
_HORIZON_RTOL = 1e-12
# rates closer than this (relative) are merged in convolutions; float rate
# arithmetic like (r + m) - m must not produce 1/(tiny difference) blowups
_RESONANCE_RTOL = 1e-13
# float evaluation is redone in extended precision where sum|terms| exceeds
# this multiple of |sum|
_CANCELLATION_LIMIT = 8.0


def mpf(value):
    """Coerce to the extended-precision number type used for coefficients."""
    return _mp.mpf(value)


def mpexp(value):
    return _mp.exp(value)


class InsufficientHorizon(ValueError):
    """A signal was evaluated past the time window on which it is exact."""


@dataclass(frozen=True)
class PolyExpTerm:
    """``coefficient * tau**power * exp(rate * tau)``.

    The coefficient is held in extended precision; the rate is a float so
    that equal rates can be recognized exactly.
    """

    coefficient: object
    power: int = 0
    rate: float = 0.0

    def __post_init__(self):
        if self.power < 0 or int(self.power) != self.power:
            raise ValueError(f"power must be a nonnegative integer, got {self.power}")
        object.__setattr__(self, "coefficient", _mp.mpf(self.coefficient))
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "rate", float(self.rate))


@dataclass(frozen=True)
class Segment:
    start: float
    terms: tuple[PolyExpTerm, ...] = ()


def _consolidate(terms: Iterable[PolyExpTerm]) -> tuple[PolyExpTerm, ...]:
    acc: dict[tuple[int, float], object] = defaultdict(lambda: _ZERO)
    for term in terms:
        acc[(term.power, term.rate)] += term.coefficient
    out = [PolyExpTerm(c, p, r) for (p, r), c in acc.items() if c != 0]
    out.sort(key=lambda term: (term.rate, term.power))
    return tuple(out)


def _eval_terms(terms: Sequence[PolyExpTerm], tau):
    """Extended-precision value of ``sum terms`` at local time ``tau``."""
    tau = _mp.mpf(tau)
    total = _ZERO
    for t in terms:
        total += t.coefficient * tau**t.power * _mp.exp(t.rate * tau)
    return total


class Signal:
    """Immutable causal signal; see the module docstring.

    ``horizon`` marks the end of the window on which the value is exact.
    Evaluating later raises :class:`InsufficientHorizon`.
    """

    def __init__(
        self,
        segments: Iterable[Segment] = (),
        label: str | None = None,
        horizon: float = math.inf,
    ):
        kept: list[Segment] = []
        last = -math.inf
        for seg in segments:
            start = float(seg.start)
            if not math.isfinite(start) or start < 0.0:
                raise ValueError(f"segment start must be finite and >= 0, got {start}")
            if start <= last:
                raise ValueError("segment starts must be strictly increasing")
            last = start
            terms = _consolidate(seg.terms)
            # leading and repeated empty segments carry no information
            if not terms and (not kept or not kept[-1].terms):
                continue
            kept.append(Segment(start, terms))
        self.segments: tuple[Segment, ...] = tuple(kept)
        self.label = label
        self.horizon = float(horizon)

    # -- inspection ------------------------------------------------------

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def n_terms(self) -> int:
        return sum(len(seg.terms) for seg in self.segments)

    @property
    def starts(self) -> tuple[float, ...]:
        return tuple(seg.start for seg in self.segments)

    @property
    def first_start(self) -> float:
        """Switch-on time; ``inf`` for the zero signal."""
        return self.segments[0].start if self.segments else math.inf

    def lengths(self) -> list[float]:
        starts = self.starts
        return [b - a for a, b in zip(starts, starts[1:])] + [math.inf] * bool(starts)

    def is_zero(self) -> bool:
        return not self.segments

    def __repr__(self):
        name = f" {self.label!r}" if self.label else ""
        return (
            f"<Signal{name}: {self.n_segments} segments, {self.n_terms} terms, "
            f"horizon={self.horizon}>"
        )

    # -- evaluation ------------------------------------------------------

    @cached_property
    def _arrays(self):
        n = len(self.segments)
        width = max(1, max((len(seg.terms) for seg in self.segments), default=0))
        starts = np.array(self.starts, dtype=float)
        coefs = np.zeros((n, width))
        powers = np.zeros((n, width))
        rates = np.zeros((n, width))
        for i, seg in enumerate(self.segments):
            for j, term in enumerate(seg.terms):
                coefs[i, j] = float(term.coefficient)
                powers[i, j] = term.power
                rates[i, j] = term.rate
        return starts, coefs, powers, rates

    def eval(self, t):
        """Value at ``t`` (scalar or array); zero before the first segment."""
        t_arr = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(t_arr)):
            raise ValueError("evaluation time must be finite")
        if t_arr.size and math.isfinite(self.horizon):
            limit = self.horizon + _HORIZON_RTOL * max(1.0, abs(self.horizon))
            if np.max(t_arr) > limit:
                raise InsufficientHorizon(
                    f"signal {self.label or ''} is exact up to t={self.horizon}, "
                    f"asked for t={float(np.max(t_arr))}"
                )
        flat = t_arr.reshape(-1)
        out = np.zeros(flat.shape)
        if self.segments:
            starts, coefs, powers, rates = self._arrays
            idx = np.searchsorted(starts, flat, side="right") - 1
            live = idx >= 0
            if np.any(live):
                i = idx[live]
                tau = (flat[live] - starts[i])[:, None]
                with np.errstate(over="ignore", invalid="ignore"):
                    vals = coefs[i] * tau ** powers[i] * np.exp(rates[i] * tau)
                    total = vals.sum(axis=1)
                    bulk = np.abs(vals).sum(axis=1)
                bad = ~(bulk <= _CANCELLATION_LIMIT * np.abs(total))
                if np.any(bad):
                    pos = np.flatnonzero(live)
                    for k in np.flatnonzero(bad):
                        seg = self.segments[i[k]]
                        tau_k = _mp.mpf(flat[pos[k]]) - _mp.mpf(seg.start)
                        total[k] = float(_eval_terms(seg.terms, tau_k))
                out[live] = total
        if t_arr.ndim == 0:
            return float(out[0])
        return out.reshape(t_arr.shape)

    __call__ = eval

    # -- sugar -----------------------------------------------------------

    def __add__(self, other: "Signal") -> "Signal":
        return add(self, other)

    def __sub__(self, other: "Signal") -> "Signal":
        return add(self, scale(other, -1.0))

    def __neg__(self) -> "Signal":
        return scale(self, -1.0)

    def __mul__(self, k: float) -> "Signal":
        return scale(self, k)

    __rmul__ = __mul__

    def relabel(self, label: str | None) -> "Signal":
        return Signal(self.segments, label=label, horizon=self.horizon)

    def truncate(self, horizon: float) -> "Signal":
        """Drop segments starting after ``horizon`` and cap the horizon there."""
        horizon = min(float(horizon), self.horizon)
        kept = [seg for seg in self.segments if seg.start <= horizon]
        return Signal(kept, label=self.label, horizon=horizon)


# -- constructors -----------------------------------------------------------


def zero(horizon: float = math.inf) -> Signal:
    return Signal((), horizon=horizon)


def heaviside(start: float = 0.0, height: float = 1.0) -> Signal:
    return Signal([Segment(start, (PolyExpTerm(height),))])


def atom(coefficient: float, power: int = 0, rate: float = 0.0, start: float = 0.0) -> Signal:
    """``coefficient * (t-start)^power * exp(rate (t-start)) * 1_+(t-start)``."""
    return Signal([Segment(start, (PolyExpTerm(coefficient, power, rate),))])


def window(terms: Sequence[PolyExpTerm], start: float, end: float = math.inf) -> Signal:
    """``terms`` (in ``t - start``) on ``[start, end)``, zero elsewhere."""
    segs = [Segment(start, tuple(terms))]
    if math.isfinite(end):
        if not end > start:
            raise ValueError(f"empty window [{start}, {end})")
        segs.append(Segment(end, ()))
    return Signal(segs)


def reanchor(terms: Sequence[PolyExpTerm], delta: float) -> list[PolyExpTerm]:
    """Rewrite terms in ``tau`` as terms in ``tau - delta``.

    (u + delta)^p = sum_k C(p, k) delta^(p-k) u^k.
    """
    if delta == 0:
        return list(terms)
    delta = _mp.mpf(delta)
    out = []
    for term in terms:
        weight = term.coefficient * _mp.exp(term.rate * delta)
        for k in range(term.power + 1):
            coef = weight * math.comb(term.power, k) * delta ** (term.power - k)
            out.append(PolyExpTerm(coef, k, term.rate))
    return out


# -- linear operations ------------------------------------------------------


def shift(s: Signal, delay: float) -> Signal:
    """Retard by ``delay``: ``s(t - delay) * 1_+(t - delay)``."""
    if delay < 0:
        raise ValueError(f"shift delay must be >= 0 (causal), got {delay}")
    if delay == 0:
        return s
    moved: list[Segment] = []
    for seg in s.segments:
        start = seg.start + delay
        # rounding can merge nearby starts; the earlier segment then has no width
        if moved and start <= moved[-1].start:
            moved[-1] = Segment(moved[-1].start, seg.terms)
        else:
            moved.append(Segment(start, seg.terms))
    return Signal(moved, label=s.label, horizon=s.horizon + delay)


def add(*signals: Signal) -> Signal:
    """Pointwise sum; breakpoints are merged and terms re-anchored."""
    horizon = min((s.horizon for s in signals), default=math.inf)
    live = [s for s in signals if s.segments]
    if not live:
        return zero(horizon)
    if len(live) == 1:
        return Signal(live[0].segments, horizon=horizon)
    breaks = sorted({seg.start for s in live for seg in s.segments})
    acc: list[list[PolyExpTerm]] = [[] for _ in breaks]
    for s in live:
        segs = s.segments
        k = -1
        for i, b in enumerate(breaks):
            while k + 1 < len(segs) and segs[k + 1].start <= b:
                k += 1
            if k >= 0:
                acc[i].extend(reanchor(segs[k].terms, _mp.mpf(b) - _mp.mpf(segs[k].start)))
    return Signal([Segment(b, tuple(terms)) for b, terms in zip(breaks, acc)], horizon=horizon)


def scale(s: Signal, k: float) -> Signal:
    if k == 0:
        return zero(s.horizon)
    k = _mp.mpf(k)
    return Signal(
        [
            Segment(seg.start, tuple(PolyExpTerm(k * t.coefficient, t.power, t.rate) for t in seg.terms))
            for seg in s.segments
        ],
        label=s.label,
        horizon=s.horizon,
    )


def mul_exp(s: Signal, mu: float) -> Signal:
    """Multiply by ``exp(mu * t)`` in global time."""
    if mu == 0:
        return s
    segs = []
    for seg in s.segments:
        w = _mp.exp(_mp.mpf(mu) * seg.start)
        segs.append(
            Segment(seg.start, tuple(PolyExpTerm(w * t.coefficient, t.power, t.rate + mu) for t in seg.terms))
        )
    return Signal(segs, label=s.label, horizon=s.horizon)


# -- convolutions -----------------------------------------------------------


def _convolve_atoms(p: int, a: float, q: int, b: float) -> list[PolyExpTerm]:
    """Terms of  int_0^s (s-u)^p e^{a(s-u)} u^q e^{bu} du  as a function of s.

    The Laplace transform is p! q! / ((z-a)^(p+1) (z-b)^(q+1)); for a != b
    it splits into partial fractions. Equal rates are the resonant case and
    give one term of degree p+q+1. Rates are compared exactly.
    """
    pq = math.factorial(p) * math.factorial(q)
    if abs(a - b) <= _RESONANCE_RTOL * max(1.0, abs(a), abs(b)):
        return [PolyExpTerm(_mp.mpf(pq) / math.factorial(p + q + 1), p + q + 1, a)]
    d = _mp.mpf(b) - _mp.mpf(a)
    out = []
    for i in range(p + 1):
        coef = (-1) ** (q + 1) * math.comb(q + p - i, p - i) * d ** (-(q + 1 + p - i))
        out.append(PolyExpTerm(pq * coef / math.factorial(i), i, a))
    for j in range(q + 1):
        coef = (-1) ** (p + 1) * math.comb(p + q - j, q - j) * (-d) ** (-(p + 1 + q - j))
        out.append(PolyExpTerm(pq * coef / math.factorial(j), j, b))
    return out


def _single_rate_convolve(s: Signal, m: int, alpha: float) -> list[Signal]:
    """``w_k = int_0^t (t-u)^k/k! e^{alpha(t-u)} s(u) du`` for ``k = 0..m``.

    Walks the segments carrying ``w_k(start)`` forward: inside a segment the
    history contributes  sum_j tau^j/j! e^{alpha tau} w_{k-j}(start).
    """
    state = [_ZERO] * (m + 1)
    per_k: list[list[Segment]] = [[] for _ in range(m + 1)]
    for seg, length in zip(s.segments, s.lengths()):
        new_state = []
        for k in range(m + 1):
            terms = [
                PolyExpTerm(state[k - j] / math.factorial(j), j, alpha)
                for j in range(k + 1)
                if state[k - j] != 0
            ]
            inv = _mp.mpf(1) / math.factorial(k)
            for st in seg.terms:
                for out in _convolve_atoms(k, alpha, st.power, st.rate):
                    terms.append(PolyExpTerm(inv * st.coefficient * out.coefficient, out.power, out.rate))
            terms = _consolidate(terms)
            per_k[k].append(Segment(seg.start, terms))
            if math.isfinite(length):
                new_state.append(_eval_terms(terms, length))
        state = new_state
    return [Signal(segs, horizon=s.horizon) for segs in per_k]


def kernel_convolve(s: Signal, kernel: Sequence[PolyExpTerm], delay: float = 0.0) -> Signal:
    """``int_0^{t-delay} k(t-delay-u) s(u) du * 1_+(t-delay)`` with ``k = sum(kernel)``."""
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    by_rate: dict[float, dict[int, object]] = defaultdict(lambda: defaultdict(lambda: _ZERO))
    for kt in kernel:
        by_rate[kt.rate][kt.power] += kt.coefficient
    parts = []
    for alpha, powers in by_rate.items():
        ws = _single_rate_convolve(s, max(powers), alpha)
        for p, coef in powers.items():
            if coef != 0:
                parts.append(scale(ws[p], coef * math.factorial(p)))
    out = add(*parts) if parts else zero(s.horizon)
    return shift(out, delay)


def integrate(s: Signal) -> Signal:
    """``t -> int_0^t s(u) du``."""
    return kernel_convolve(s, (PolyExpTerm(1.0),))


def exp_convolve(s: Signal, gamma: float, delay: float) -> Signal:
    """``t -> int_0^{t-delay} exp(-2 gamma (t-delay-u)) s(u) du * 1_+(t-delay)``."""
    return kernel_convolve(s, (PolyExpTerm(1.0, 0, -2.0 * gamma),), delay)


def components(s: Signal) -> list[tuple[float, tuple[PolyExpTerm, ...]]]:
    """Step-activated pieces with ``s = sum_k (terms_k in t - a_k) * 1_+(t - a_k)``.

    Piece ``k`` is segment ``k`` minus segment ``k-1`` continued past its end.
    """
    out = []
    prev = None
    for seg in s.segments:
        if prev is None:
            out.append((seg.start, seg.terms))
        else:
            carried = reanchor(prev.terms, seg.start - prev.start)
            diff = list(seg.terms) + [PolyExpTerm(-t.coefficient, t.power, t.rate) for t in carried]
            out.append((seg.start, _consolidate(diff)))
        prev = seg
    return [(a, terms) for a, terms in out if terms]


def convolve(kernel: Signal, s: Signal) -> Signal:
    """Causal convolution ``t -> int_0^t kernel(t-u) s(u) du``."""
    parts = [kernel_convolve(s, terms, start) for start, terms in components(kernel)]
    horizon = min(kernel.horizon + s.first_start, s.horizon + kernel.first_start)
    if math.isnan(horizon):
        horizon = math.inf
    out = add(*parts) if parts else zero()
    return Signal(out.segments, horizon=horizon)


# -- sampling ---------------------------------------------------------------


def sample(s: Signal, t_start: float, t_end: float, n_points: int):
    """``(t, s(t))`` on an even grid including both ends."""
    t = np.linspace(t_start, t_end, n_points)
    return t, s.eval(t)


def write_csv(path, s: Signal, t_start: float, t_end: float, n_points: int, name: str = "value"):
    """Write ``t,<name>`` rows with 17 significant digits and LF endings."""
    t, v = sample(s, t_start, t_end, n_points)
    return write_columns(path, ["t", name], [t, v])
