"""Spectrum of the scalar delay equation x'(t) = b x(t - 1).

The Chebyshev discretization of the solution semigroup generator has a
rightmost eigenvalue that converges spectrally to the rightmost root of
lam = b exp(-lam).  The roots are also located independently with the
argument principle, which is the cross-check used by the dichotomy test.
"""

import numpy as np

from yosida_lab import DelaySystem, assemble_generator, dichotomy_of_delay_system
from yosida_lab.delay import scalar_system_roots

for b in (0.5, -1.0, -np.pi / 2, -2.0):
    system = DelaySystem([[0.0]], 1.0, [[b]])
    roots = scalar_system_roots(system)
    print(f"b = {b:+.4f}: rightmost root {roots[0].lam:.10f}")
    for N in (4, 8, 12, 16, 20):
        ev = np.linalg.eigvals(assemble_generator(system, N).G.array())
        err = np.min(np.abs(ev - roots[0].lam))
        print(f"    N = {N:2d}  error {err:.2e}")

# b = -pi/2 puts a pair of roots on the imaginary axis: no dichotomy.
for b in (0.5, -1.0, -np.pi / 2):
    rep = dichotomy_of_delay_system(DelaySystem([[0.0]], 1.0, [[b]]), [None], N=20)
    print(f"b = {b:+.4f}: hyperbolic={rep.hyperbolic} gap={rep.gap:.3g}")
