import math

import numpy as np
import pytest

from pointwave.dalembert import Coupling, InitialData, ModelConfig, PositionFunction, free_field
from pointwave.models import (
    pin_damper_source,
    solve,
    solve_pin_damper,
    solve_single_damper,
    solve_single_pin,
    solve_two_dampers,
    solve_two_dampers_equal_gamma,
    solve_two_pins,
    unroll_recursion,
)
from pointwave.dalembert import source_integral_check
from pointwave.signal import add, scale, shift

H = 8.0
GRID = np.linspace(0.0, H, 401)
RNG = np.random.default_rng(2024)

interior = InitialData(PositionFunction.bump(0.7, 0.4, 1.0, order=3))
incoming = InitialData.travelling(PositionFunction.bump(-1.0, 0.5, 1.0, order=3), 1.0, 1)
mixed = InitialData(PositionFunction.triangle(0.4, 0.3), PositionFunction.bump(1.1, 0.3, 0.5, order=2))


def cfg(a, b, x_a=0.0, x_b=1.5, c=1.0):
    return ModelConfig(c, x_a, x_b, a, b)


def sup(s, t=GRID):
    return float(np.max(np.abs(s.eval(t))))


def trace_residuals(bundle):
    T = bundle.config.T
    ra = add(bundle.trace_a, scale(add(bundle.forces.F_a, shift(bundle.forces.F_b, T), bundle.free_trace_a), -1))
    rb = add(bundle.trace_b, scale(add(shift(bundle.forces.F_a, T), bundle.forces.F_b, bundle.free_trace_b), -1))
    t = np.linspace(0, bundle.horizon, 401)
    return sup(ra, t), sup(rb, t)


ALL_CASES = [
    (Coupling.pin(), Coupling.absent()),
    (Coupling.absent(), Coupling.pin()),
    (Coupling.damper(0.4), Coupling.absent()),
    (Coupling.absent(), Coupling.damper(0.4)),
    (Coupling.pin(), Coupling.pin()),
    (Coupling.pin(), Coupling.damper(0.5)),
    (Coupling.damper(0.5), Coupling.pin()),
    (Coupling.damper(0.3), Coupling.damper(0.7)),
    (Coupling.damper(0.45), Coupling.damper(0.45)),
]


@pytest.mark.parametrize("ca,cb", ALL_CASES)
@pytest.mark.parametrize("d", [interior, incoming, mixed], ids=["interior", "incoming", "mixed"])
def test_solver_invariants(ca, cb, d):
    b = solve(d, cfg(ca, cb), H)
    assert max(trace_residuals(b)) < 1e-10
    for cp, Q, F in ((ca, b.trace_a, b.forces.F_a), (cb, b.trace_b, b.forces.F_b)):
        if cp.kind == "pin":
            assert sup(Q) < 1e-10
        elif cp.kind == "damper":
            assert source_integral_check(Q, cp.gamma, F, H, 401) < 1e-10
            assert F(0.0) == 0.0
        else:
            assert F.is_zero()


@pytest.mark.parametrize("ca,cb", ALL_CASES)
def test_horizon_exactness(ca, cb):
    short = solve(incoming, cfg(ca, cb), 4.0)
    long = solve(incoming, cfg(ca, cb), 9.0)
    t = np.linspace(0, 4.0, 201)
    for a, b in ((short.forces.F_a, long.forces.F_a), (short.forces.F_b, long.forces.F_b)):
        np.testing.assert_allclose(a.eval(t), b.eval(t), atol=1e-13, rtol=0)


def test_zero_data_gives_zero_everything():
    for ca, cb in ALL_CASES:
        b = solve(InitialData(), cfg(ca, cb), H)
        assert b.forces.F_a.is_zero() and b.forces.F_b.is_zero()
        assert b.field(3.0, 0.7) == 0.0


# -- single pin ---------------------------------------------------------------


def test_single_pin_trace_vanishes_at_random_times():
    b = solve_single_pin(incoming, cfg(Coupling.pin(), Coupling.absent()), H)
    t = RNG.uniform(0, H, 100)
    assert np.max(np.abs(b.trace_a.eval(t))) < 1e-10
    assert np.max(np.abs(b.field(t, np.zeros_like(t)))) < 1e-10


def test_single_pin_field_formula():
    c = cfg(Coupling.pin(), Coupling.absent())
    b = solve_single_pin(incoming, c, H)
    for t, x in ((1.5, 0.4), (2.2, -0.3), (3.0, 1.0)):
        ret = t - abs(x)
        want = free_field(incoming, 1.0, t, x) - (free_field(incoming, 1.0, ret, 0.0) if ret >= 0 else 0.0)
        assert b.field(t, x) == pytest.approx(want, abs=1e-12)


def test_single_solvers_reject_wrong_couplings():
    with pytest.raises(ValueError):
        solve_single_pin(interior, cfg(Coupling.damper(0.1), Coupling.absent()), H)
    with pytest.raises(ValueError):
        solve_single_damper(interior, cfg(Coupling.pin(), Coupling.pin()), H)
    with pytest.raises(ValueError):
        solve_single_pin(interior, cfg(Coupling.pin(), Coupling.absent()), math.inf)


# -- single damper ------------------------------------------------------------


def test_single_damper_zero_gamma_is_free():
    b = solve_single_damper(incoming, cfg(Coupling.damper(0.0), Coupling.absent()), H)
    assert b.forces.F_a.is_zero()
    assert b.field(2.0, 0.5) == pytest.approx(free_field(incoming, 1.0, 2.0, 0.5))


def test_single_damper_unit_step_closed_form():
    g = 0.4
    d = InitialData.travelling(PositionFunction.step(0.0, 1.0, "left"), 1.0, 1)
    b = solve_single_damper(d, cfg(Coupling.damper(g), Coupling.absent(), x_b=0.0), H)
    for t in np.linspace(0.0, H, 20):
        assert b.trace_a(t) == pytest.approx(math.exp(-2 * g * t), abs=1e-12)


def test_single_damper_ode():
    g = 0.6
    b = solve_single_damper(incoming, cfg(Coupling.damper(g), Coupling.absent()), H)
    F, Q0 = b.forces.F_a, b.free_trace_a
    h = 1e-5
    for t in (0.7, 1.3, 2.9):
        dF = (F(t + h) - F(t - h)) / (2 * h)
        assert dF == pytest.approx(-2 * g * (F(t) + Q0(t)), abs=1e-8)


# -- two pins -----------------------------------------------------------------


def test_two_pins_confine_interior_data():
    b = solve_two_pins(interior, cfg(Coupling.pin(), Coupling.pin()), H)
    t = RNG.uniform(0, H, 300)
    for x in (-2.0, -0.3, 1.6, 3.1):
        assert np.max(np.abs(b.field(t, np.full_like(t, x)))) < 1e-10
    assert np.max(np.abs(b.field(t, np.zeros_like(t)))) < 1e-10
    assert np.max(np.abs(b.field(t, np.full_like(t, 1.5)))) < 1e-10


def test_two_pins_image_series():
    # alternating images: -u0(t-|x-xa|, xa) - u0(t-|x-xb|, xb) + u0(t-|x-xa|-T, xb) + ...
    c = cfg(Coupling.pin(), Coupling.pin())
    b = solve_two_pins(interior, c, H)
    T = c.T

    def u0(t, x):
        return free_field(interior, 1.0, t, x) if t >= 0 else 0.0

    for t, x in ((1.1, 0.4), (3.3, 1.0), (6.2, 0.9)):
        total = u0(t, x)
        for k in range(12):
            sign = -1 if k % 2 == 0 else 1
            da, db = t - abs(x - c.x_a) - k * T, t - abs(x - c.x_b) - k * T
            src_a, src_b = (c.x_a, c.x_b) if k % 2 == 0 else (c.x_b, c.x_a)
            total += sign * (u0(da, src_a) + u0(db, src_b))
        assert b.field(t, x) == pytest.approx(total, abs=1e-12)


# -- pin + damper -------------------------------------------------------------


def test_pin_damper_zero_gamma_is_pin_echo():
    c = cfg(Coupling.pin(), Coupling.damper(0.0))
    b = solve_pin_damper(interior, c, H)
    want = add(b.free_trace_b, scale(shift(b.free_trace_a, c.T), -1))
    assert sup(add(b.trace_b, scale(want, -1))) < 1e-12


def test_pin_damper_trace_equals_source_before_echo():
    c = cfg(Coupling.pin(), Coupling.damper(0.5))
    b = solve_pin_damper(interior, c, H)
    I0 = pin_damper_source(b.free_trace_a, b.free_trace_b, 0.5, c.T)
    t = np.linspace(0, 2 * c.T, 200, endpoint=False)
    assert np.max(np.abs(b.trace_b.eval(t) - I0.eval(t))) < 1e-14


def test_pin_damper_methods_agree():
    c = cfg(Coupling.pin(), Coupling.damper(0.5))
    r = solve_pin_damper(mixed, c, H, "resolvent")
    e = solve_pin_damper(mixed, c, H, "exp_series")
    assert sup(add(r.trace_b, scale(e.trace_b, -1)), np.linspace(0, H, 200)) < 1e-10


def test_pin_damper_relabelling_is_a_mirror():
    # damper at a + pin at b is the mirror image of pin at a + damper at b
    prof = PositionFunction.bump(0.5, 0.3, 1.0, order=3)
    mirror = PositionFunction.bump(1.0, 0.3, 1.0, order=3)
    left = solve(InitialData(prof), cfg(Coupling.pin(), Coupling.damper(0.5)), H)
    right = solve(InitialData(mirror), cfg(Coupling.damper(0.5), Coupling.pin()), H)
    np.testing.assert_allclose(left.trace_b.eval(GRID), right.trace_a.eval(GRID), atol=1e-12)


def test_pin_damper_source_captures_jumps():
    # a step arriving at the damper: I0 jumps with the data, then decays
    d = InitialData.travelling(PositionFunction.step(1.0, 1.0, "left"), 1.0, 1)
    c = cfg(Coupling.pin(), Coupling.damper(0.3), x_a=-5.0, x_b=1.5)
    b = solve_pin_damper(d, c, 4.0)
    assert b.trace_b(0.4) == 0.0
    assert b.trace_b(0.5) == pytest.approx(1.0)
    assert b.trace_b(1.5) == pytest.approx(math.exp(-0.6), rel=1e-12)


def test_pin_damper_rejects_bad_method():
    with pytest.raises(ValueError):
        solve_pin_damper(interior, cfg(Coupling.pin(), Coupling.damper(0.5)), H, "guess")


# -- two dampers --------------------------------------------------------------


def test_two_dampers_zero_gamma():
    b = solve_two_dampers(interior, cfg(Coupling.damper(0.0), Coupling.damper(0.0)), H)
    assert b.forces.F_a.is_zero() and b.forces.F_b.is_zero()
    e = solve_two_dampers_equal_gamma(interior, cfg(Coupling.damper(0.0), Coupling.damper(0.0)), H)
    assert e.forces.F_a.is_zero()


def test_two_dampers_decouple_when_one_gamma_vanishes():
    two = solve_two_dampers(incoming, cfg(Coupling.damper(0.6), Coupling.damper(0.0)), H)
    one = solve_single_damper(incoming, cfg(Coupling.damper(0.6), Coupling.absent()), H)
    assert sup(add(two.forces.F_a, scale(one.forces.F_a, -1))) < 1e-14


def test_two_dampers_fixed_point_residuals():
    from pointwave.signal import exp_convolve

    ga, gb = 0.3, 0.7
    c = cfg(Coupling.damper(ga), Coupling.damper(gb))
    b = solve_two_dampers(mixed, c, H)
    Fa, Fb = b.forces.F_a, b.forces.F_b
    rhs_a = add(scale(exp_convolve(Fb, ga, c.T), -2 * ga), scale(exp_convolve(b.free_trace_a, ga, 0), -2 * ga))
    rhs_b = add(scale(exp_convolve(Fa, gb, c.T), -2 * gb), scale(exp_convolve(b.free_trace_b, gb, 0), -2 * gb))
    t = np.linspace(0, H, 200)
    assert sup(add(Fa, scale(rhs_a, -1)), t) < 1e-10
    assert sup(add(Fb, scale(rhs_b, -1)), t) < 1e-10


def test_equal_gamma_closed_form_matches_general():
    c = cfg(Coupling.damper(0.45), Coupling.damper(0.45))
    g = solve_two_dampers(mixed, c, H)
    e = solve_two_dampers_equal_gamma(mixed, c, H)
    t = np.linspace(0, H, 200)
    assert sup(add(g.forces.F_a, scale(e.forces.F_a, -1)), t) < 1e-10
    assert sup(add(g.forces.F_b, scale(e.forces.F_b, -1)), t) < 1e-10


def test_equal_gamma_symmetric_data_gives_equal_forces():
    c = cfg(Coupling.damper(0.5), Coupling.damper(0.5), x_a=-0.75, x_b=0.75)
    d = InitialData(PositionFunction.bump(0.0, 0.4, 1.0, order=3))
    e = solve_two_dampers_equal_gamma(d, c, H)
    assert sup(add(e.forces.F_a, scale(e.forces.F_b, -1))) < 1e-13


def test_equal_gamma_requires_equal_gammas():
    with pytest.raises(ValueError):
        solve_two_dampers_equal_gamma(interior, cfg(Coupling.damper(0.3), Coupling.damper(0.4)), H)


# -- unrolled recursion ---------------------------------------------------------


@pytest.mark.parametrize("ca,cb", [c for c in ALL_CASES if c[0].present and c[1].present])
def test_unrolled_recursion_reproduces_solver(ca, cb):
    c = cfg(ca, cb)
    b = solve(mixed, c, H)
    depth = math.ceil(H / c.T) + 1
    f = unroll_recursion(b, depth)
    assert f.horizon == H
    assert sup(add(f.F_a, scale(b.forces.F_a, -1))) < 1e-10
    assert sup(add(f.F_b, scale(b.forces.F_b, -1))) < 1e-10


def test_unrolled_recursion_depth_one():
    c = cfg(Coupling.damper(0.3), Coupling.damper(0.7))
    b = solve(mixed, c, H)
    f = unroll_recursion(b, 1)
    assert f.horizon == pytest.approx(2 * c.T)
    Da = add(b.trace_a, scale(b.free_trace_a, -1))
    Db = add(b.trace_b, scale(b.free_trace_b, -1))
    want = add(Da, scale(shift(Db, c.T), -1))
    t = np.linspace(0, 2 * c.T, 100, endpoint=False)
    np.testing.assert_allclose(f.F_a.eval(t), want.eval(t), atol=1e-14)


def test_unrolled_recursion_of_zero_traces():
    b = solve(InitialData(), cfg(Coupling.damper(0.3), Coupling.pin()), H)
    f = unroll_recursion(b, 3)
    assert f.F_a.is_zero() and f.F_b.is_zero()


def test_unrolled_recursion_validation():
    b = solve(interior, cfg(Coupling.pin(), Coupling.pin()), H)
    with pytest.raises(ValueError):
        unroll_recursion(b, 0)


# -- field beyond a pin -----------------------------------------------------------


@pytest.mark.parametrize("ca,cb", [c for c in ALL_CASES if "pin" in (c[0].kind, c[1].kind)])
def test_field_beyond_pin_matches_reconstruction(ca, cb):
    # two-sided data so both halves carry signal
    d = InitialData(
        PositionFunction.bump(-0.8, 0.4, 1.0, order=3) + PositionFunction.bump(2.3, 0.4, 0.7, order=3),
        PositionFunction.bump(0.7, 0.3, 0.5, order=2) + PositionFunction.step(-1.5, 0.3, "left"),
    )
    c = cfg(ca, cb)
    b = solve(d, c, H)
    from pointwave.dalembert import reconstruct_field

    t = RNG.uniform(0, H, 200)
    for x in (-2.1, -0.5, 0.4, 1.2, 1.9, 3.0):
        xs = np.full_like(t, x)
        want = reconstruct_field(b.forces.F_a, b.forces.F_b, c, d, t, xs)
        np.testing.assert_allclose(b.field(t, xs), want, atol=1e-12)


def test_field_shapes():
    b = solve(interior, cfg(Coupling.pin(), Coupling.pin()), H)
    assert isinstance(b.field(1.0, -0.5), float) and b.field(1.0, -0.5) == 0.0
    assert b.field(np.array([1.0, 2.0]), 0.4).shape == (2,)
    assert b.field(1.0, np.array([-1.0, 0.4, 2.0])).shape == (3,)


def test_restricted_data():
    prof = PositionFunction.bump(0.0, 1.0, 1.0, order=2)
    d = InitialData(prof, prof)
    r = d.restricted(-math.inf, 0.25)
    assert r.displacement(0.1) == prof(0.1) and r.displacement(0.3) == 0.0
    assert r.velocity_primitive(5.0) == pytest.approx(prof(0.25))
    assert r.velocity_primitive(-0.5) == prof(-0.5)
