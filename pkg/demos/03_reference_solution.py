"""A reference solution from variation of constants.

For the linear-in-Z test family the solution on each delay period is
Z(t) = Phi(t) [Z(t0) + integrals of Phi^{-1} times the delayed terms], with
Phi the geometric Brownian motion factor.  The integrals are left-point sums
on the fine grid of the very same Brownian path the Euler scheme uses.
"""
from sdde_euler import (AffineHistory, TestProblemParams, exact_solution,
                        fundamental_factor, generate_increments, method_of_steps_ode,
                        table1_params)

w = generate_increments(42, 3, 0.0, 2.0, 2 ** 14)

# with b = beta1 = beta3 = 0 the formula collapses to Phi alone
gbm = TestProblemParams(a=-8.0, b=0.0, beta1=0.0, beta2=1.0, beta3=0.0,
                        xi=AffineHistory(1.0, 1.0))
z = exact_solution(gbm, w).terminal
phi = fundamental_factor(gbm.a, gbm.beta2, w, 0, w.fine_steps)
print(f"GBM check: oracle {z:.12e}  Phi(T) {phi:.12e}")

# quadrature refinement on one path
params = table1_params()
for factor in (64, 16, 4, 1):
    sol = exact_solution(params, w, factor=factor)
    print(f"quadrature step {sol.quadrature_step:.2e}: Z(T) = {sol.terminal:.8f}")

# without noise the method of steps gives an ODE reference
print("dX = X(t-1) dt at t = 2:", method_of_steps_ode(
    TestProblemParams(a=0.0, b=1.0, beta1=0.0, beta2=0.0, beta3=0.0,
                      xi=AffineHistory(0.0, 1.0)), 2.0))
