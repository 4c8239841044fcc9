"""Two by-products of the analysis checked numerically.

The mean p-th power jump between the scheme at s and at the grid point
below s scales like h^{p/2}.  The p-th moment of the running supremum stays
bounded as the step shrinks.
"""
from sdde_euler import (build_test_problem, ensemble, increment_scaling, integrate,
                        moment_estimate, table1_params)
from sdde_euler.convergence import batched_noise

problem = build_test_problem(table1_params())

levels = [2 ** k for k in range(5, 10)]
slope, values = increment_scaling(problem, 42, levels, 500, p=2.0)
for n, v in zip(levels, values):
    print(f"n = {n:4d}: E int |X(s) - X(kappa(s))|^2 ds = {v:.3e}")
print(f"slope against n: {slope:.3f} (expect -1)")

fine = 2 ** 10
ws = ensemble(42, range(1000), 0.0, problem.horizon, 2 * fine)
for k in range(5, 11):
    path = integrate(problem, batched_noise(ws, fine // 2 ** k), 2 ** k)
    est = moment_estimate(path, 2.0)
    print(f"n = 2^{k:<2d} E sup |X|^2 = {est.value:.4f}")
