"""Explicit Euler for a stochastic delay equation with a constant lag.

The test equation is

    dZ = [a Z + b Z(t - tau)^l1] dt + [beta1 + beta2 Z + beta3 Z(t - tau)^l2] dW

with history xi(t) = t + 1 on [-tau, 0].  Delayed values are read from the
grid point at or below t - tau, so the scheme only ever looks backwards.
"""
import numpy as np

from sdde_euler import (AffineHistory, TestProblemParams, build_test_problem, ensemble,
                        integrate, table1_params)
from sdde_euler.convergence import batched_noise

params = table1_params()
problem = build_test_problem(params)
print(params)
print("condition tags:", problem.condition_tags)

n = 2 ** 8                     # steps per delay period
ws = ensemble(7, range(5), 0.0, problem.horizon, 2 * n)
path = integrate(problem, batched_noise(ws, 1), n)
print(f"h = {path.h:g}, {path.num_steps} steps, batch of {path.states.shape[1]}")
print("Z(T) per path:", np.round(path.terminal[:, 0], 5))

# the same call with zero noise is the deterministic Euler recursion
det = build_test_problem(TestProblemParams(a=0.0, b=1.0, beta1=0.0, beta2=0.0,
                                           beta3=0.0, xi=AffineHistory(0.0, 1.0)))
for n in (4, 16, 64):
    x = integrate(det, np.zeros(2 * n), n).terminal[0]
    print(f"dX = X(t-1) dt, X = 1 before 0: n = {n:3d}  X(2) = {x:.6f}  (exact 3.5)")
