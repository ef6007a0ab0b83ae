"""Different delay functionals give generators with different domains.

phi(t) = 1 + (1 + t) b0 satisfies the splicing condition phi'(0) = b0 phi(-1)
of x'(t) = b0 x(t - 1) but misses that of x'(t) = b1 x(t - 1) by b0 - b1.
"""

from yosida_lab import demo_domain_noninclusion

for b0, b1 in [(0.3, 0.3), (0.3, 0.5), (1.0, 0.0)]:
    rep = demo_domain_noninclusion(b0, b1)
    print(f"b0={b0} b1={b1}: residual0={rep.residual0:.1e}  residual1={rep.residual1:.12f}")
