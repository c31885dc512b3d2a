"""Acceptance criteria, one test each.

Every test prints a ``PASS``/``FAIL criterion N`` line; the lines are
repeated in the terminal summary. Run as ``pytest tests/test_acceptance.py``
or directly as ``python tests/test_acceptance.py``.
"""

import functools
import math
import time
from pathlib import Path

import numpy as np

from pointwave.cli import cmd_simulate, compare_levels
from pointwave.dalembert import Coupling, InitialData, ModelConfig, PositionFunction, reconstruct_field
from pointwave.fdtd import GridSpec, run_probes
from pointwave.identities import TOLERANCE, run_suite
from pointwave.models import (
    pin_damper_source,
    solve,
    solve_pin_damper,
    solve_two_dampers,
    solve_two_dampers_equal_gamma,
)
from pointwave.operators import delayed_cosh, delayed_exp, delayed_sinh
from pointwave.scenario import load_scenario
from pointwave.signal import add, exp_convolve, scale, shift

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
FDTD_TOL = 2e-2
FDTD_CELLS = 2000


@functools.lru_cache(maxsize=None)
def oracle_levels(name: str):
    s = load_scenario(SCENARIOS / name)
    bundle = solve(s.initial_data(), s.model, s.horizon)
    return s, compare_levels(s, bundle)


def at_cells(results, n):
    return next(r for r in results if r.n_cells == n)


def sup_gap(a, b, t):
    return float(np.max(np.abs(a.eval(t) - b.eval(t))))


def test_criterion_1_operator_algebra(criterion):
    report = run_suite(seed=42, n_cases=50)
    worst = max(report.max_residual.values())
    ok = report.passed and worst < 1e-10 and report.seconds < 10
    parts = ", ".join(f"{k} {v:.1e}" for k, v in report.max_residual.items())
    criterion(1, ok, f"max residuals {parts} (< {TOLERANCE:g}); 50 cases in {report.seconds:.2f} s (< 10 s)")


def test_criterion_2_delayed_functions(criterion):
    # the residual is formed as a signal so it is not limited by the double
    # spacing of the values themselves (about 3e-11 once Exp reaches 1e5)
    worst, rounded, windows = 0.0, 0.0, True
    for lam, T in ((0.5, 0.3), (1.7, 0.6), (3.3, 0.45), (2.0, 1.0)):
        H = 8.0
        e, s, c = delayed_exp(lam, T, H), delayed_sinh(lam, T, H), delayed_cosh(lam, T, H)
        t = np.linspace(0.0, H, 801)
        gap = add(e, scale(s, -1.0), scale(c, -1.0))
        worst = max(worst, float(np.max(np.abs(gap.eval(t)))))
        ev = e.eval(t)
        rounded = max(rounded, float(np.max(np.abs(ev - s.eval(t) - c.eval(t)) / np.maximum(1.0, np.abs(ev)))))
        lead = np.linspace(0.0, T, 100, endpoint=False)
        lead2 = np.linspace(0.0, 2 * T, 100, endpoint=False)
        windows &= bool(np.all(e.eval(lead) == 1.0) and np.all(s.eval(lead) == 0.0) and np.all(c.eval(lead2) == 1.0))
    criterion(
        2,
        worst < 1e-12 and windows,
        f"|Exp - Sinh - Cosh| = {worst:.1e} (< 1e-12), relative gap of rounded values {rounded:.1e}; "
        f"leading windows exact: {windows}",
    )


def test_criterion_3_pins(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    # single pin with an incoming pulse
    d = InitialData.travelling(PositionFunction.bump(-1.0, 0.5, 1.0, order=3), 1.0, 1)
    pin = solve(d, ModelConfig(1.0, 0.0, 0.0, Coupling.pin()), 6.0)
    t = np.linspace(0.0, 6.0, 2001)
    at_pin = float(np.max(np.abs(pin.field(t, np.zeros_like(t)))))
    # two pins: nothing leaks outside
    s, results = oracle_levels("two_pins.yaml")
    two = solve(s.initial_data(), s.model, s.horizon)
    tr = rng.uniform(0.0, s.horizon, 400)
    outside = max(
        float(np.max(np.abs(two.field(tr, np.full_like(tr, x)))))
        for x in (s.model.x_a - 2.0, s.model.x_a - 0.3, s.model.x_a, s.model.x_b, s.model.x_b + 0.3, s.model.x_b + 2.0)
    )
    errs = [r.linf_rel for r in results]
    fine = at_cells(results, FDTD_CELLS).linf_rel
    improving = all(b < a for a, b in zip(errs, errs[1:]))
    seconds = time.perf_counter() - t0
    ok = at_pin < 1e-10 and outside < 1e-10 and fine <= FDTD_TOL and improving and seconds < 30
    criterion(
        3,
        ok,
        f"|u(t,x_a)| <= {at_pin:.1e}; outside two pins <= {outside:.1e}; "
        f"FDTD L_inf rel {fine:.2e} at {FDTD_CELLS} cells (<= {FDTD_TOL:g}), "
        f"refinement {' > '.join(f'{e:.1e}' for e in errs)}; {seconds:.1f} s (< 30 s)",
    )


def test_criterion_4_single_damper(criterion):
    g = 0.4
    d = InitialData.travelling(PositionFunction.step(0.0, 1.0, "left"), 1.0, 1)
    b = solve(d, ModelConfig(1.0, 0.0, 0.0, Coupling.damper(g)), 6.0)
    t = np.linspace(0.0, 6.0, 601)
    closed = float(np.max(np.abs(b.trace_a.eval(t) - np.exp(-2 * g * t))))
    _, results = oracle_levels("single_damper_ramp.yaml")
    fine = at_cells(results, FDTD_CELLS).linf_rel
    criterion(
        4,
        closed < 1e-10 and fine <= FDTD_TOL,
        f"unit step trace vs exp(-2 gamma t): {closed:.1e} (< 1e-10); "
        f"smoothed-step FDTD L_inf rel {fine:.2e} at {FDTD_CELLS} cells (<= {FDTD_TOL:g})",
    )


def test_criterion_5_pin_damper(criterion):
    s = load_scenario(SCENARIOS / "pin_damper.yaml")
    d, cfg, H = s.initial_data(), s.model, s.horizon
    gamma, T = cfg.coupling_b.gamma, cfg.T
    res = solve_pin_damper(d, cfg, H, "resolvent")
    ser = solve_pin_damper(d, cfg, H, "exp_series")
    methods = sup_gap(res.trace_b, ser.trace_b, np.linspace(0.0, H, 200))

    source = pin_damper_source(res.free_trace_a, res.free_trace_b, gamma, T)
    early = np.linspace(0.0, 2 * T, 400, endpoint=False)
    head = float(np.max(np.abs(res.trace_b.eval(early) - source.eval(early))))

    # Q' + 2g Q - 2g Q(t - 2T) = g', with g the pin-reflected free trace at the damper
    Q = res.trace_b
    drive = add(res.free_trace_b, scale(shift(res.free_trace_a, T), -1.0))
    h = 1e-4
    breaks = np.array(sorted(set(Q.starts) | set(drive.starts)))
    tt = [t for t in np.linspace(0.01, H - 0.01, 500) if np.min(np.abs(breaks - t)) > 3 * h]

    def d5(f, t):
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    ode = max(
        abs(d5(Q, t) + 2 * gamma * Q(t) - 2 * gamma * (Q(t - 2 * T) if t >= 2 * T else 0.0) - d5(drive, t)) for t in tt
    )
    ok = methods < 1e-10 and head == 0.0 and ode < 1e-8
    criterion(
        5,
        ok,
        f"resolvent vs Exp-series {methods:.1e} (< 1e-10); Q_b - I0 on [0,2T) = {head:g}; "
        f"delay-ODE residual {ode:.1e} (< 1e-8) at {len(tt)} points",
    )


def test_criterion_6_two_dampers(criterion):
    s = load_scenario(SCENARIOS / "two_dampers.yaml")
    d, cfg, H = s.initial_data(), s.model, s.horizon
    ga, gb, T = cfg.coupling_a.gamma, cfg.coupling_b.gamma, cfg.T
    b = solve_two_dampers(d, cfg, H)
    Fa, Fb = b.forces.F_a, b.forces.F_b
    t = np.linspace(0.0, H, 400)
    rhs_a = scale(add(exp_convolve(Fb, ga, T), exp_convolve(b.free_trace_a, ga, 0.0)), -2 * ga)
    rhs_b = scale(add(exp_convolve(Fa, gb, T), exp_convolve(b.free_trace_b, gb, 0.0)), -2 * gb)
    fixed = max(sup_gap(Fa, rhs_a, t), sup_gap(Fb, rhs_b, t))

    eq_cfg = ModelConfig(cfg.c, cfg.x_a, cfg.x_b, Coupling.damper(0.5), Coupling.damper(0.5))
    general = solve_two_dampers(d, eq_cfg, H)
    closed = solve_two_dampers_equal_gamma(d, eq_cfg, H)
    equal = max(sup_gap(general.forces.F_a, closed.forces.F_a, t), sup_gap(general.forces.F_b, closed.forces.F_b, t))

    _, results = oracle_levels("two_dampers.yaml")
    fine = at_cells(results, FDTD_CELLS).linf_rel
    ok = fixed < 1e-10 and equal < 1e-10 and fine <= FDTD_TOL
    criterion(
        6,
        ok,
        f"fixed-point residual {fixed:.1e} (< 1e-10); equal-gamma closed form vs general {equal:.1e} (< 1e-10); "
        f"FDTD L_inf rel {fine:.2e} at {FDTD_CELLS} cells (<= {FDTD_TOL:g})",
    )


def test_criterion_7_energy(criterion):
    drifts = {}
    for name in ("pin_damper.yaml", "two_dampers.yaml", "single_damper_ramp.yaml"):
        _, results = oracle_levels(name)
        for r in results:
            if r.n_cells >= FDTD_CELLS:
                drifts[f"{name[:-5]}@{r.n_cells}"] = r.energy_drift
    worst = max(drifts.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in drifts.items())
    criterion(7, worst < 1e-3, f"relative energy drift {detail} (< 1e-3)")


def test_criterion_8_sign_of_far_source(criterion):
    s = load_scenario(SCENARIOS / "pin_damper.yaml")
    d, cfg, H = s.initial_data(), s.model, s.horizon
    b = solve(d, cfg, H)
    run = run_probes(d, cfg, GridSpec.build(cfg, H, FDTD_CELLS, s.probes), s.probes)

    def error(F_b):
        exact = np.stack(
            [reconstruct_field(b.forces.F_a, F_b, cfg, d, run.t, np.full_like(run.t, x)) for x in run.probe_x], axis=1
        )
        return float(np.max(np.abs(run.values - exact)))

    plus, minus = error(b.forces.F_b), error(scale(b.forces.F_b, -1.0))
    ratio = minus / plus if plus > 0 else math.inf
    criterion(
        8,
        plus <= FDTD_TOL and ratio >= 10,
        f"'+F_b' L_inf {plus:.2e} (<= {FDTD_TOL:g}); '-F_b' L_inf {minus:.2e}; ratio {ratio:.0f} (>= 10)",
    )


def test_criterion_9_determinism(criterion, tmp_path):
    s = load_scenario(SCENARIOS / "two_dampers.yaml")
    a, b = tmp_path / "a", tmp_path / "b"
    cmd_simulate(s, str(a))
    cmd_simulate(s, str(b))
    names = sorted(p.name for p in a.iterdir())
    same = names == sorted(p.name for p in b.iterdir()) and all(
        (a / n).read_bytes() == (b / n).read_bytes() for n in names
    )
    criterion(9, same, f"{len(names)} CSV files byte-identical across two runs: {same}")


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q"]))
