"""Yosida distance between bounded generators.

For matrices the Yosida approximations converge to the matrices themselves,
so the distance should settle at the spectral norm of the difference.  The
script prints the tail of the mu-grid samples for a non-normal pair, then
compares the distance with the integral constant of a bounded perturbation.
"""

import numpy as np

from yosida_lab import class_P_constant, yosida_distance

rng = np.random.default_rng(7)
A = np.array([[-1.0, 25.0], [0.0, -2.0]])
C = 0.1 * rng.standard_normal((2, 2))

est = yosida_distance(A, A + C)
print("mu        sample")
for mu, s in zip(est.mu_grid[::8], est.samples[::8]):
    print(f"{mu:9.3g} {s:.10f}")
print(f"estimate {est.value:.10f}  ||C|| = {np.linalg.norm(C, 2):.10f}  "
      f"converged={est.converged}")

# The integral constant K = int_0^1 ||C exp(tA)|| dt drops below ||C|| as
# soon as exp(tA) contracts (A = -I), and then it cannot bound the distance.
# Transient growth of a non-normal A can push K above ||C||.
for A0, C0 in [(-np.eye(1), np.eye(1)), (A, C)]:
    K = class_P_constant(A0, C0)
    d = yosida_distance(A0, A0 + C0).value
    print(f"K = {K:.6f}   d_Y = {d:.6f}   d_Y <= K: {d <= K + 1e-4}")
