"""Delayed exponentials and the method of steps.

Exp(lam, T, t) is a finite sum on any bounded window, solves
y'(t) = lam y(t - T) with y = 1 on [0, T), and splits into odd and even
parts (Sinh, Cosh). Here the delay equation is also integrated by brute
force, one delay interval at a time, as an independent check.
"""

import numpy as np
from scipy.integrate import solve_ivp

from pointwave.operators import delayed_cosh, delayed_exp, delayed_sinh

lam, T, H = 0.9, 0.7, 5.0
exp_, sinh_, cosh_ = delayed_exp(lam, T, H), delayed_sinh(lam, T, H), delayed_cosh(lam, T, H)

# Method of steps: on [kT, (k+1)T) the history is known, so y' is a known function.
history = lambda s: 1.0  # y on [0, T)
grid, values = [np.linspace(0.0, T, 50, endpoint=False)], [np.ones(50)]
for k in range(1, int(np.ceil(H / T))):
    prev = history
    sol = solve_ivp(
        lambda t, y, prev=prev: [lam * prev(t - T)],
        (k * T, (k + 1) * T),
        [prev(k * T - 1e-12) if k > 1 else 1.0],
        dense_output=True,
        rtol=1e-12,
        atol=1e-14,
    )
    tk = np.linspace(k * T, (k + 1) * T, 50, endpoint=False)
    grid.append(tk)
    values.append(sol.sol(tk)[0])
    history = (lambda s, f=sol.sol, p=prev, lo=k * T: float(f(s)[0]) if s >= lo else p(s))

t = np.concatenate(grid)
steps = np.concatenate(values)
mask = t <= H
print("max |Exp - method of steps|:", np.max(np.abs(exp_.eval(t[mask]) - steps[mask])))
print("max |Exp - Sinh - Cosh|     :", np.max(np.abs(exp_.eval(t[mask]) - sinh_.eval(t[mask]) - cosh_.eval(t[mask]))))
print("segments on [0, H]          :", len(exp_.segments))
