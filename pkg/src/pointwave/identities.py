"""Randomized checks of the retarded-operator algebra.

Each identity maps a :class:`Case` to the max absolute difference of its two
sides over an even sample grid. Case ``k`` of seed ``s`` draws from
``numpy.random.default_rng([s, k])``, so any failure is reproducible from
the pair alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operators import RetardedOp, apply, compose_power
from .signal import PolyExpTerm, Segment, Signal, heaviside, integrate, mul_exp, scale, shift

__all__ = [
    "Case",
    "random_signal",
    "random_case",
    "IDENTITIES",
    "SuiteReport",
    "run_suite",
    "TOLERANCE",
]

TOLERANCE = 1e-10

# well-separated values keep every draw away from near-resonant rate pairs
GAMMAS = (0.15, 0.35, 0.8)
RATES = (0.0, -0.3, -0.7, -1.0, -1.6, 0.5)
DELAYS = (0.0, 0.25, 0.5, 0.8, 1.3)
HORIZON = 6.0
N_SAMPLES = 200


@dataclass(frozen=True)
class Case:
    seed: int
    index: int
    f: Signal
    gamma_1: float
    gamma_2: float
    delay_1: float
    delay_2: float
    power: int


def random_signal(rng: np.random.Generator, max_segments: int = 3, max_terms: int = 3, max_power: int = 3) -> Signal:
    n_seg = int(rng.integers(1, max_segments + 1))
    starts = np.sort(rng.choice(np.arange(0, 21) / 10.0, size=n_seg, replace=False))
    segs = []
    for start in starts:
        terms = [
            PolyExpTerm(
                float(rng.uniform(-1.0, 1.0)),
                int(rng.integers(0, max_power + 1)),
                float(rng.choice(RATES)),
            )
            for _ in range(int(rng.integers(1, max_terms + 1)))
        ]
        segs.append(Segment(float(start), tuple(terms)))
    return Signal(segs, label="f")


def random_case(seed: int, index: int) -> Case:
    rng = np.random.default_rng([seed, index])
    f = random_signal(rng)
    g1, g2 = (float(v) for v in rng.choice(GAMMAS, size=2))
    t1, t2 = (float(v) for v in rng.choice(DELAYS, size=2))
    n = int(rng.integers(1, 7))
    return Case(seed, index, f, g1, g2, t1, t2, n)


def _gap(lhs: Signal, rhs: Signal) -> float:
    t = np.linspace(0.0, HORIZON, N_SAMPLES)
    return float(np.max(np.abs(lhs.eval(t) - rhs.eval(t))))


def commutativity(case: Case) -> float:
    one = RetardedOp(case.gamma_1, case.delay_1)
    two = RetardedOp(case.gamma_2, case.delay_2)
    return _gap(one(two(case.f)), two(one(case.f)))


def fusion(case: Case) -> float:
    g = case.gamma_1
    lhs = apply(RetardedOp(g, case.delay_1), apply(RetardedOp(g, case.delay_2), case.f))
    rhs = apply(RetardedOp(g, case.delay_1 + case.delay_2), apply(RetardedOp(g, 0.0), case.f))
    return _gap(lhs, rhs)


def conjugation(case: Case) -> float:
    """``I_{g,T} f = e^{-2g(t-T)} I_{0,T}(e^{2g t} f)``; T = 0 is plain conjugation."""
    g, T = case.gamma_1, case.delay_1
    lhs = apply(RetardedOp(g, T), case.f)
    inner = shift(integrate(mul_exp(case.f, 2.0 * g)), T)
    rhs = scale(mul_exp(inner, -2.0 * g), float(np.exp(2.0 * g * T)))
    return _gap(lhs, rhs)


def power_kernel(case: Case) -> float:
    op = RetardedOp(case.gamma_1, case.delay_1)
    repeated = case.f
    for _ in range(case.power):
        repeated = op(repeated)
    return _gap(repeated, compose_power(case.gamma_1, case.delay_1, case.power, case.f))


IDENTITIES: dict[str, Callable[[Case], float]] = {
    "commutativity": commutativity,
    "fusion": fusion,
    "conjugation": conjugation,
    "power_kernel": power_kernel,
}


@dataclass(frozen=True)
class SuiteReport:
    seed: int
    n_cases: int
    max_residual: dict
    worst_index: dict
    seconds: float

    @property
    def passed(self) -> bool:
        return all(v < TOLERANCE for v in self.max_residual.values())

    def failures(self) -> list[tuple[str, int, float]]:
        return [
            (name, self.worst_index[name], value)
            for name, value in self.max_residual.items()
            if not value < TOLERANCE
        ]


def run_suite(seed: int = 42, n_cases: int = 50) -> SuiteReport:
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    t0 = time.perf_counter()
    worst = {name: 0.0 for name in IDENTITIES}
    where = {name: -1 for name in IDENTITIES}
    for k in range(n_cases):
        case = random_case(seed, k)
        for name, check in IDENTITIES.items():
            r = check(case)
            if not r <= worst[name]:
                worst[name], where[name] = r, k
    return SuiteReport(seed, n_cases, worst, where, time.perf_counter() - t0)


def constant_fusion_residual(gamma: float = 0.35, delay_1: float = 0.5, delay_2: float = 0.75) -> float:
    """Fusion on the unit step, whose images are exactly representable."""
    f = heaviside()
    lhs = apply(RetardedOp(gamma, delay_1), apply(RetardedOp(gamma, delay_2), f))
    rhs = apply(RetardedOp(gamma, delay_1 + delay_2), apply(RetardedOp(gamma, 0.0), f))
    return _gap(lhs, rhs)
