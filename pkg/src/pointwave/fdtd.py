"""Finite-difference reference solver for the string with point couplings.

Leapfrog in time and three-point differences in space for

    u_tt = c^2 u_xx - 4 gamma_a c delta(x - x_a) u(t, x_a) - (same at x_b),

with each delta carried by the single node at the interaction point
(weight 1/dx) and pins clamped to zero. The grid is laid out so both
interaction points are nodes and the ends sit outside the numerical domain
of dependence of every node of interest up to the final time, so the
Dirichlet ends can never influence the recorded values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .csvio import write_columns
from .dalembert import InitialData, ModelConfig, free_field

__all__ = [
    "OracleInstability",
    "GridSpec",
    "GridState",
    "ProbeRun",
    "initial_state",
    "step",
    "run_probes",
    "level_energy",
    "staggered_energy",
    "write_probe_csv",
    "write_energy_csv",
    "MAX_GAMMA_DT",
    "BLOWUP_FACTOR",
]

MAX_GAMMA_DT = 0.1
BLOWUP_FACTOR = 1e6


class OracleInstability(RuntimeError):
    """The discrete solution grew past the blow-up guard."""


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_cells: int
    dt: float
    n_steps: int
    c: float

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValueError("need at least 2 cells")
        if not self.x_max > self.x_min:
            raise ValueError("empty domain")
        if not (self.dt > 0 and self.n_steps >= 0):
            raise ValueError("dt must be > 0 and n_steps >= 0")
        if self.courant > 1.0 + 1e-12:
            raise ValueError(f"courant number {self.courant:.4f} exceeds 1")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def courant(self) -> float:
        return self.c * self.dt / self.dx

    @property
    def t_final(self) -> float:
        return self.n_steps * self.dt

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_cells + 1)

    def node(self, x0: float) -> int:
        """Index of the node nearest ``x0``."""
        i = int(round((x0 - self.x_min) / self.dx))
        if not 0 < i < self.n_cells:
            raise ValueError(f"position {x0} is not strictly inside the grid")
        return i

    def node_x(self, x0: float) -> float:
        return self.x_min + self.node(x0) * self.dx

    @classmethod
    def build(
        cls,
        cfg: ModelConfig,
        horizon: float,
        n_cells: int,
        points: Sequence[float] = (),
        courant: float = 0.75,
    ) -> "GridSpec":
        """Grid with ``n_cells`` cells whose nodes include x_a and x_b.

        ``points`` (probes, say) and the interaction points must stay out of
        reach of the ends until ``horizon``; the margin uses the discrete
        signal speed ``dx/dt = c/courant``, which bounds any leak exactly.
        """
        if not 0 < courant <= 1:
            raise ValueError(f"courant must be in (0, 1], got {courant}")
        if not (math.isfinite(horizon) and horizon > 0):
            raise ValueError(f"horizon must be finite and > 0, got {horizon}")
        c = cfg.c
        lo = min([cfg.x_a, cfg.x_b, *points])
        hi = max([cfg.x_a, cfg.x_b, *points])
        # margin in units of dx is (c/courant) H / dx + a few cells: solve for dx
        extra_cells = 4
        reach = c / courant * horizon
        dx0 = (hi - lo + 2 * reach) / (n_cells - 2 * extra_cells)
        if not dx0 > 0:
            raise ValueError("too few cells for the requested window")
        gap = cfg.x_b - cfg.x_a
        if gap > 0:
            # dx divides the gap; round down the count so dx >= dx0
            m = max(1, math.floor(gap / dx0 * (1 + 1e-12)))
            dx = gap / m
        else:
            dx = dx0
        left_cells = math.ceil((cfg.x_a - lo + reach) / dx - 1e-9) + extra_cells
        x_min = cfg.x_a - left_cells * dx
        x_max = x_min + n_cells * dx
        if x_max < hi + reach + dx:
            raise ValueError("grid construction failed to cover the window; increase n_cells")
        n_steps = max(1, math.ceil(horizon / (courant * dx / c) - 1e-9))
        dt = horizon / n_steps
        spec = cls(x_min, x_max, n_cells, dt, n_steps, c)
        for xp in (cfg.x_a, cfg.x_b):
            spec.node(xp)
        return spec


@dataclass
class GridState:
    u_prev: np.ndarray
    u_curr: np.ndarray
    step_index: int = 0
    energy_log: list = field(default_factory=list)


def _couplings(spec: GridSpec, cfg: ModelConfig):
    """``(pinned node indices, [(node, stiffness)])`` for the two points."""
    pins, springs = [], []
    for coupling, xp in ((cfg.coupling_a, cfg.x_a), (cfg.coupling_b, cfg.x_b)):
        if coupling.kind == "pin":
            pins.append(spec.node(xp))
        elif coupling.kind == "damper" and coupling.gamma != 0:
            if coupling.gamma * spec.dt > MAX_GAMMA_DT:
                raise ValueError(
                    f"gamma*dt = {coupling.gamma * spec.dt:.3g} exceeds {MAX_GAMMA_DT}; refine the grid"
                )
            springs.append((spec.node(xp), 4.0 * coupling.gamma * cfg.c / spec.dx))
    return pins, springs


def _accel(u: np.ndarray, spec: GridSpec, springs) -> np.ndarray:
    a = np.zeros_like(u)
    a[1:-1] = spec.c**2 * (u[2:] - 2.0 * u[1:-1] + u[:-2]) / spec.dx**2
    for k, stiff in springs:
        a[k] -= stiff * u[k]
    return a


def initial_state(d: InitialData, cfg: ModelConfig, spec: GridSpec) -> GridState:
    """Levels 0 and 1.

    Level 1 is the free field at ``dt`` (exact, so travelling jumps start
    moving) minus the coupling's ``dt^2/2`` Taylor term; this matches the
    usual Taylor start to third order where the data are smooth.
    """
    x = spec.x
    u0 = np.asarray(d.displacement(x), dtype=float)
    pins, springs = _couplings(spec, cfg)
    u1 = np.asarray(free_field(d, spec.c, spec.dt, x), dtype=float)
    for k, stiff in springs:
        u1[k] -= 0.5 * spec.dt**2 * stiff * u0[k]
    u1[0], u1[-1] = u0[0], u0[-1]
    for k in pins:
        u1[k] = 0.0
    return GridState(u0, u1, 1, [])


def step(state: GridState, spec: GridSpec, cfg: ModelConfig) -> GridState:
    """One leapfrog step; the coupling is taken at the current level."""
    pins, springs = _couplings(spec, cfg)
    return _step(state, spec, pins, springs)


def _step(state: GridState, spec: GridSpec, pins, springs) -> GridState:
    u, up = state.u_curr, state.u_prev
    un = 2.0 * u - up + spec.dt**2 * _accel(u, spec, springs)
    un[0], un[-1] = u[0], u[-1]
    for k in pins:
        un[k] = 0.0
    return GridState(u, un, state.step_index + 1, state.energy_log)


def level_energy(u_prev, u_curr, u_next, spec: GridSpec, cfg: ModelConfig) -> float:
    """Energy at the middle level plus ``2 gamma c u^2`` at each damper node.

    u_t is centered in time and summed by the trapezoidal rule; u_x uses cell
    differences, centered at cell midpoints, so kinks at pinned nodes are
    resolved rather than smeared.
    """
    ut = (u_next - u_prev) / (2.0 * spec.dt)
    ux = np.diff(u_curr) / spec.dx
    e = 0.5 * float(np.trapezoid(ut**2, dx=spec.dx)) + 0.5 * spec.c**2 * float(np.sum(ux**2)) * spec.dx
    for coupling, xp in ((cfg.coupling_a, cfg.x_a), (cfg.coupling_b, cfg.x_b)):
        if coupling.kind == "damper":
            e += 2.0 * coupling.gamma * spec.c * float(u_curr[spec.node(xp)]) ** 2
    return e


def staggered_energy(u_curr, u_next, spec: GridSpec, cfg: ModelConfig) -> float:
    """Half-step energy that the scheme conserves exactly (up to rounding)."""
    ut = (u_next - u_curr) / spec.dt
    dn = np.diff(u_next) / spec.dx
    dc = np.diff(u_curr) / spec.dx
    e = 0.5 * float(np.sum(ut**2)) * spec.dx + 0.5 * spec.c**2 * float(np.sum(dn * dc)) * spec.dx
    for coupling, xp in ((cfg.coupling_a, cfg.x_a), (cfg.coupling_b, cfg.x_b)):
        if coupling.kind == "damper":
            k = spec.node(xp)
            e += 2.0 * coupling.gamma * spec.c * float(u_next[k] * u_curr[k])
    return e


@dataclass(frozen=True)
class ProbeRun:
    spec: GridSpec
    probe_x: np.ndarray
    t: np.ndarray
    values: np.ndarray  # shape (n_times, n_probes)
    energy_t: np.ndarray
    energy: np.ndarray
    staggered: np.ndarray

    def energy_drift(self) -> float:
        """``max |E(t) - E(0)| / E(0)`` over the logged levels."""
        e0 = self.energy[0]
        if e0 == 0:
            return 0.0
        return float(np.max(np.abs(self.energy - e0)) / abs(e0))


def run_probes(
    d: InitialData,
    cfg: ModelConfig,
    spec: GridSpec,
    probes: Sequence[float],
    energy_every: int = 1,
) -> ProbeRun:
    """March to ``spec.t_final`` recording probe nodes at every level.

    Probes snap to their nearest node; ``probe_x`` reports where.
    """
    idx = [spec.node(p) for p in probes]
    probe_x = spec.x_min + spec.dx * np.array(idx, dtype=float)
    pins, springs = _couplings(spec, cfg)
    state = initial_state(d, cfg, spec)
    scale0 = max(float(np.max(np.abs(state.u_prev))), float(np.max(np.abs(state.u_curr))))
    limit = BLOWUP_FACTOR * scale0

    n = spec.n_steps
    values = np.empty((n + 1, len(idx)))
    values[0] = state.u_prev[idx]
    if n >= 1:
        values[1] = state.u_curr[idx]
    e_t, e_v, e_s = [], [], []
    for level in range(1, n):
        nxt = _step(state, spec, pins, springs)
        if (level - 1) % energy_every == 0:
            e_t.append(level * spec.dt)
            e_v.append(level_energy(state.u_prev, state.u_curr, nxt.u_curr, spec, cfg))
            e_s.append(staggered_energy(state.u_curr, nxt.u_curr, spec, cfg))
        state = nxt
        values[level + 1] = state.u_curr[idx]
        if scale0 > 0 and not float(np.max(np.abs(state.u_curr))) <= limit:
            raise OracleInstability(
                f"|u| exceeded {BLOWUP_FACTOR:g} x initial scale at t={state.step_index * spec.dt:.6g}"
            )
    state.energy_log.extend(zip(e_t, e_v))
    t = spec.dt * np.arange(n + 1)
    return ProbeRun(spec, probe_x, t, values, np.array(e_t), np.array(e_v), np.array(e_s))


def write_probe_csv(path, run: ProbeRun):
    header = ["t"] + [f"probe_{k + 1}" for k in range(run.values.shape[1])]
    return write_columns(path, header, [run.t, *run.values.T])


def write_energy_csv(path, run: ProbeRun):
    return write_columns(path, ["t", "E"], [run.energy_t, run.energy])

