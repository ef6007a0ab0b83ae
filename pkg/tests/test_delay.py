import numpy as np
import pytest
import scipy.optimize
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from yosida_lab.delay import (
    DelaySystem,
    ScalarCharacteristic,
    Strip,
    _OnContour,
    assemble_generator,
    bary_row,
    bary_weights,
    char_roots_rd,
    cheb_diff,
    cheb_nodes,
    clenshaw_curtis,
    dichotomy_of_delay_system,
    generator_yosida_distance,
    resolvent_via_F_J,
    scalar_system_roots,
    splicing_residual,
)
from yosida_lab.errors import (
    ContourFailure,
    DiscretizationInconsistency,
    InvalidInput,
    LambdaTooSmall,
    MeshMismatch,
    TooLarge,
)
from yosida_lab.linops import resolvent

seeds = st.integers(0, 2**32 - 1)


def rightmost(G):
    ev = np.linalg.eigvals(G.array())
    return ev[np.argmax(ev.real)]


def crossing_parameters(a, r=1.0, n=1):
    """(xi, b) with ``i xi + a + b exp(-i xi r) = -n**2``.

    Dense scan of xi for a sign change of the real part with ``b`` eliminated
    through the imaginary part, then a two-equation real Newton solve.
    """
    c = a + n * n

    def eqs(v):
        xi, b = v
        return [c + b * np.cos(xi * r), xi - b * np.sin(xi * r)]

    xs = np.linspace(0.05, np.pi / r - 0.05, 4000)
    bs = xs / np.sin(xs * r)
    re = c + bs * np.cos(xs * r)
    k = np.flatnonzero(np.sign(re[:-1]) != np.sign(re[1:]))[0]
    sol = scipy.optimize.fsolve(eqs, [xs[k], bs[k]], xtol=1e-14)
    return sol


# ---------------------------------------------------------------- Chebyshev tools


def test_mesh_orientation():
    m = cheb_nodes(8, 2.0)
    assert m[0] == 0.0 and m[-1] == -2.0 and np.all(np.diff(m) < 0)


@pytest.mark.parametrize("N", [4, 9, 16])
def test_differentiation_exact_on_polynomials(N):
    r = 1.7
    t = cheb_nodes(N, r)
    coef = np.random.default_rng(N).standard_normal(N + 1)
    p = np.polynomial.Polynomial(coef)
    np.testing.assert_allclose(cheb_diff(N, r) @ p(t), p.deriv()(t), atol=1e-9 * np.abs(coef).sum() * N * N)


def test_barycentric_interpolation():
    N, r = 12, 1.0
    t = cheb_nodes(N, r)
    p = np.polynomial.Polynomial(np.random.default_rng(0).standard_normal(N + 1))
    w = bary_weights(N)
    for theta in (-0.123, -0.5, -0.999):
        assert bary_row(t, w, theta) @ p(t) == pytest.approx(p(theta), rel=1e-12, abs=1e-12)
    row = bary_row(t, w, t[3])
    assert row[3] == 1.0 and np.count_nonzero(row) == 1


@pytest.mark.parametrize("n", [4, 7, 20])
def test_clenshaw_curtis_exact(n):
    x, w = clenshaw_curtis(n)
    for k in range(n + 1):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert w @ x ** k == pytest.approx(exact, abs=1e-13)


# ---------------------------------------------------------------- systems


def test_delay_system_validation():
    with pytest.raises(InvalidInput):
        DelaySystem([[0.0]], 0.0, [[1.0]])
    with pytest.raises(InvalidInput):
        DelaySystem([[0.0]], 1.0, [[1.0]], ((-1.5, 0.1),))
    with pytest.raises(InvalidInput):
        DelaySystem([[0.0]], 1.0, [[1.0]], ((-0.5, 0.1), (-0.5, 0.2)))
    with pytest.raises(InvalidInput):
        DelaySystem(np.eye(2), 1.0, [[1.0]])
    s = DelaySystem(np.eye(2), 1.0, np.eye(2), ((-0.5, 0.1),))
    assert s.B_kernel[0][1].entries[1, 1] == 0.1
    assert s.functional_norm() == pytest.approx(1.1)


def test_assemble_scalar_splicing_row():
    b = 0.7
    gen = assemble_generator(DelaySystem([[0.0]], 1.0, [[b]]), 10)
    G = gen.G.array()
    expected = np.zeros(11)
    expected[-1] = b
    np.testing.assert_array_equal(G[0], expected)
    np.testing.assert_allclose(G[1:], gen.D[1:])
    assert gen.mesh[0] == 0.0 and gen.G.dim == 11


def test_assemble_errors_and_node_reuse():
    s = DelaySystem([[0.0]], 1.0, [[0.5]])
    with pytest.raises(InvalidInput):
        assemble_generator(s, 3)
    with pytest.raises(TooLarge):
        assemble_generator(DelaySystem(np.eye(50), 1.0, np.eye(50)), 80)
    mesh = cheb_nodes(10, 1.0)
    on_node = DelaySystem([[0.0]], 1.0, [[0.5]], ((float(mesh[4]), 0.25),))
    G = assemble_generator(on_node, 10).G.array()
    assert G[0, 4] == 0.25 and G[0, -1] == 0.5


def test_assemble_is_deterministic():
    s = DelaySystem([[0.3, 1.0], [0.0, -1.0]], 1.3, np.eye(2), ((-0.4, np.ones((2, 2))),))
    assert np.array_equal(assemble_generator(s, 12).G.entries, assemble_generator(s, 12).G.entries)


def test_no_delay_limit():
    vals = [rightmost(assemble_generator(DelaySystem([[-1.0]], 1.0, [[0.0]]), N).G)
            for N in (6, 12, 20)]
    assert abs(vals[-1] + 1.0) < 1e-10


def test_critical_delay_case():
    gen = assemble_generator(DelaySystem([[0.0]], 1.0, [[-np.pi / 2]]), 20)
    ev = np.linalg.eigvals(gen.G.array())
    for target in (0.5j * np.pi, -0.5j * np.pi):
        assert np.min(np.abs(ev - target)) < 1e-8


@pytest.mark.parametrize("b", [0.5, 1.0, -0.3, 2.0])
def test_spectral_convergence_scalar(b):
    # rightmost root of lam = b exp(-lam) is W(b) (principal Lambert branch)
    exact = complex(scipy.special.lambertw(b))
    if b < 0 or b > 1.5:
        exact = scalar_system_roots(DelaySystem([[0.0]], 1.0, [[b]]))[0].lam
    approx = rightmost(assemble_generator(DelaySystem([[0.0]], 1.0, [[b]]), 20).G)
    assert abs(approx - exact) <= 1e-6


def test_splicing_residual_on_domain_function():
    gen = assemble_generator(DelaySystem([[0.0]], 1.0, [[0.3]]), 16)
    phi = 1.0 + (1.0 + gen.mesh) * 0.3
    assert np.abs(splicing_residual(gen, phi)).max() < 1e-12


# ---------------------------------------------------------------- resolvent


def test_F_J_zero_and_delay_free():
    sys0 = DelaySystem([[-0.5, 1.0], [0.0, -1.0]], 1.0, np.zeros((2, 2)))
    gen = assemble_generator(sys0, 24)
    np.testing.assert_array_equal(resolvent_via_F_J(gen, 5.0, np.zeros((25, 2))), 0)
    lam = 3.0
    psi = np.stack([np.cos(gen.mesh), np.sin(2 * gen.mesh)], axis=1)
    got = resolvent_via_F_J(gen, lam, psi)
    RA = resolvent(sys0.A, lam).entries
    # closed form for psi = (cos t, sin 2t)
    t = gen.mesh
    i1 = (np.exp(lam * t) * lam - lam * np.cos(t) + np.sin(t)) / (lam ** 2 + 1)
    i2 = (2 * np.exp(lam * t) - lam * np.sin(2 * t) - 2 * np.cos(2 * t)) / (lam ** 2 + 4)
    want = np.exp(lam * t)[:, None] * (RA @ psi[0])[None, :] - np.stack([i1, i2], axis=1)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_F_J_scalar_example():
    gen = assemble_generator(DelaySystem([[0.0]], 1.0, [[0.5]]), 20)
    psi = np.ones((21, 1))
    direct = resolvent(gen.G, 10.0).entries @ psi.ravel()
    np.testing.assert_allclose(resolvent_via_F_J(gen, 10.0, psi).ravel(), direct, atol=1e-10)


def test_F_J_lambda_too_small():
    gen = assemble_generator(DelaySystem([[0.0]], 1.0, [[0.5]]), 10)
    with pytest.raises(LambdaTooSmall):
        resolvent_via_F_J(gen, 0.4, np.ones((11, 1)))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_F_J_matches_direct_resolvent(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    r = float(rng.choice([0.5, 1.0, 2.0]))
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, n))
    sys0 = DelaySystem(A, r, B, ((-0.37 * r, 0.3 * rng.standard_normal((n, n))),))
    N = 24
    gen = assemble_generator(sys0, N)
    lam = np.linalg.norm(A, 2) + sys0.functional_norm() + 1.0
    # smooth history: Chebyshev series with geometrically decaying coefficients
    coef = rng.standard_normal((N + 1, n)) * 0.5 ** np.arange(N + 1)[:, None]
    x = 2 * gen.mesh / r + 1
    psi = np.polynomial.chebyshev.chebval(x, coef).T
    got = resolvent_via_F_J(gen, lam, psi).ravel()
    direct = resolvent(gen.G, lam).entries @ psi.ravel()
    assert np.linalg.norm(got - direct) <= 1e-6 * (1 + np.linalg.norm(psi))


# ---------------------------------------------------------------- characteristic roots


def test_roots_delay_free():
    roots = char_roots_rd(1.0, 0.0, 1.0, 2)
    assert len(roots) == 1 and roots[0].lam == pytest.approx(-5.0, abs=1e-14)


def test_roots_stable_example_sorted_and_polished():
    roots = char_roots_rd(1.0, 0.5, 1.0, 1)
    assert roots[0].lam.real < 0
    assert all(x.lam.real >= y.lam.real for x, y in zip(roots, roots[1:]))
    for z in roots:
        assert abs(z.lam + 1.0 + 0.5 * np.exp(-z.lam) + 1.0) <= 1e-10
        assert z.residual <= 1e-10 and z.mode_n == 1


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_roots_detect_axis_crossing(a):
    xi, b = crossing_parameters(a)
    roots = char_roots_rd(a, b, 1.0, 1)
    axis = [z for z in roots if abs(z.lam.real) <= 1e-8]
    assert len(axis) == 2
    assert max(abs(z.lam.imag) for z in axis) == pytest.approx(xi, abs=1e-8)


def test_roots_count_matches_argument_principle_oracle():
    # count roots of z + 2 + 0.5 exp(-z) in a box by a dense contour integral of f'/f
    f = ScalarCharacteristic(-2.0, [(-1.0, -0.5)])
    x0, x1, y0, y1 = -6.0, 2.0, -40.0, 40.0
    s = np.linspace(0, 1, 200001)
    edges = [x0 + (x1 - x0) * s + 1j * y0, x1 + 1j * (y0 + (y1 - y0) * s),
             x1 - (x1 - x0) * s + 1j * y1, x0 + 1j * (y1 - (y1 - y0) * s)]
    z = np.concatenate(edges)
    wind = np.sum(np.angle(f(z[1:]) / f(z[:-1]))) / (2 * np.pi)
    roots = char_roots_rd(1.0, 0.5, 1.0, 1, search=Strip(x0, x1, y1))
    assert len(roots) == round(wind)


def test_contour_failure_after_retries(monkeypatch):
    def always_on_contour(self, *args, **kwargs):
        raise _OnContour

    monkeypatch.setattr(ScalarCharacteristic, "winding", always_on_contour)
    with pytest.raises(ContourFailure):
        char_roots_rd(1.0, 0.5, 1.0, 1)


# ---------------------------------------------------------------- dichotomy of delay systems


def modal_system(a, b, r, modes):
    n2 = np.array(modes, dtype=float) ** 2
    return DelaySystem(np.diag(-n2 - a), r, -b * np.eye(len(modes)))


def test_delay_dichotomy_examples():
    rep = dichotomy_of_delay_system(modal_system(1.0, 0.5, 1.0, range(1, 11)), range(1, 11))
    assert rep.hyperbolic and len(rep.modes) == 10
    axis = dichotomy_of_delay_system(modal_system(-1.0, 0.0, 1.0, [1]), [1])
    assert not axis.hyperbolic
    unstable = dichotomy_of_delay_system(DelaySystem([[0.0]], 1.0, [[1.0]]), [None], N=20)
    assert unstable.hyperbolic and unstable.rank == 20
    w = scipy.optimize.newton(lambda x: x - np.exp(-x), 0.5)
    assert w == pytest.approx(0.5671432904, abs=1e-9)
    assert unstable.modes[0]["rightmost_root"] == pytest.approx(w, abs=1e-12)


def test_delay_dichotomy_full_path_matches_modal():
    s = modal_system(1.0, 0.5, 1.0, [1, 2, 3])
    full = dichotomy_of_delay_system(s, None, N=16)
    modal = dichotomy_of_delay_system(s, [1, 2, 3], N=16)
    assert full.hyperbolic == modal.hyperbolic
    assert full.gap == pytest.approx(modal.gap, rel=1e-8)
    assert full.rank == modal.rank
    np.testing.assert_allclose(full.projection.array(), modal.projection.array().real, atol=1e-8)


def test_delay_dichotomy_modal_needs_diagonal():
    with pytest.raises(InvalidInput):
        dichotomy_of_delay_system(DelaySystem([[0.0, 1.0], [0.0, 0.0]], 1.0, np.eye(2)), [1, 2])
    with pytest.raises(InvalidInput):
        dichotomy_of_delay_system(modal_system(1.0, 0.5, 1.0, [1, 2]), [1])


def test_delay_dichotomy_inconsistency_is_raised():
    # at N = 4 the crossing pair is not resolved, so the discretized semigroup
    # looks hyperbolic while the characteristic equation has axis roots
    xi, b = crossing_parameters(1.0)
    with pytest.raises(DiscretizationInconsistency) as info:
        dichotomy_of_delay_system(modal_system(1.0, b, 1.0, [1]), [1], N=4)
    assert info.value.discrete_witness is not None and info.value.root_witness


@pytest.mark.parametrize("a", [-3.0, -1.0, 0.0, 0.5, 2.0])
@pytest.mark.parametrize("b", [-2.0, 0.0, 0.5, 3.0])
def test_modal_verdict_matches_root_scan(a, b):
    s = modal_system(a, b, 1.0, [1])
    rep = dichotomy_of_delay_system(s, [1], N=20)
    roots = char_roots_rd(a, b, 1.0, 1)
    assert rep.hyperbolic == (not any(abs(z.lam.real) <= 1e-8 for z in roots))


# ---------------------------------------------------------------- generator distances


def test_generator_distance_examples():
    s0 = modal_system(1.0, 0.5, 1.0, [1, 2])
    g0 = assemble_generator(s0, 12)
    same = generator_yosida_distance(g0, g0)
    assert same.dY_G == same.dY_A == same.dY_B == 0.0
    sB = DelaySystem(s0.A, 1.0, s0.B_point.entries + 0.05 * np.eye(2))
    rep = generator_yosida_distance(g0, assemble_generator(sB, 12))
    assert rep.dY_B == pytest.approx(0.05) and rep.dY_A == 0.0
    assert rep.dY_G <= 0.1 + rep.tol and rep.bound_holds
    sA = DelaySystem(s0.A.entries + 0.02 * np.eye(2), 1.0, s0.B_point)
    rep = generator_yosida_distance(g0, assemble_generator(sA, 12))
    assert rep.dY_A == pytest.approx(0.02, rel=1e-4)
    assert rep.dY_G <= 0.02 + rep.tol and rep.bound_holds


def test_generator_distance_mesh_mismatch():
    s0 = modal_system(1.0, 0.5, 1.0, [1])
    with pytest.raises(MeshMismatch):
        generator_yosida_distance(assemble_generator(s0, 8), assemble_generator(s0, 10))
    s1 = modal_system(1.0, 0.5, 2.0, [1])
    with pytest.raises(MeshMismatch):
        generator_yosida_distance(assemble_generator(s0, 8), assemble_generator(s1, 8))


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from([8, 16, 24]))
def test_generator_distance_bound(seed, N):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    A0, B0 = rng.standard_normal((n, n)), rng.standard_normal((n, n))
    s0 = DelaySystem(A0, 1.0, B0)
    s1 = DelaySystem(A0 + 0.05 * rng.standard_normal((n, n)), 1.0,
                     B0 + 0.05 * rng.standard_normal((n, n)),
                     ((-0.3, 0.05 * rng.standard_normal((n, n))),))
    rep = generator_yosida_distance(assemble_generator(s0, N), assemble_generator(s1, N))
    assert rep.bound_holds
