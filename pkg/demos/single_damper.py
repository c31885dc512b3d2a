"""A unit step hits a lone damper.

The damper trace decays as exp(-2 gamma t) and the transmitted field keeps
the same shape downstream. A sharp step cannot be resolved by finite
differences, so the grid comparison at the end uses a smoothed step.
"""

import numpy as np

from pointwave import Coupling, InitialData, ModelConfig, PositionFunction, solve
from pointwave.fdtd import GridSpec, run_probes

gamma = 0.4
cfg = ModelConfig(c=1.0, x_a=0.0, x_b=0.0, coupling_a=Coupling.damper(gamma))

step = InitialData.travelling(PositionFunction.step(0.0, 1.0, "left"), c=1.0, direction=1)
sol = solve(step, cfg, horizon=5.0)

print("t      Q_a(t)            exp(-2 gamma t)")
for t in np.linspace(0.0, 5.0, 6):
    print(f"{t:4.1f}   {sol.trace_a(t):.15f}  {np.exp(-2 * gamma * t):.15f}")

# Transmitted field one unit past the damper is the trace, one unit later.
print("\nu(t, 1) - Q_a(t - 1):", abs(sol.field(3.0, 1.0) - sol.trace_a(2.0)))

# Smoothed step against the grid solver at a few resolutions.
ramp = InitialData.travelling(PositionFunction.smooth_step(-0.3, 0.3, 1.0, "left"), c=1.0, direction=1)
exact = solve(ramp, cfg, horizon=5.0)
probes = [-1.0, 0.0, 1.5]
print("\ncells   max |FDTD - exact|")
for n in (500, 1000, 2000, 4000):
    run = run_probes(ramp, cfg, GridSpec.build(cfg, 5.0, n, probes), probes)
    ref = np.stack([exact.field(run.t, np.full_like(run.t, x)) for x in run.probe_x], axis=1)
    print(f"{n:5d}   {np.max(np.abs(run.values - ref)):.3e}")
