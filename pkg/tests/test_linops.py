import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from yosida_lab.errors import BranchCutViolation, InvalidOperator, SingularResolvent
from yosida_lab.linops import (
    OperatorMatrix,
    dumps_text,
    expm_array,
    fractional_power,
    from_json_dict,
    load_matrix,
    loads_text,
    matrix_exp,
    operator_norm,
    resolvent,
    save_matrix,
    semigroup_bound,
    spectrum,
    to_json_dict,
)

seeds = st.integers(0, 2**32 - 1)


def rand_matrix(seed, lo=1, hi=8, complex_=False):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(lo, hi + 1))
    a = rng.standard_normal((n, n))
    if complex_:
        a = a + 1j * rng.standard_normal((n, n))
    return a


def spd(seed, n=4, lo=0.5, hi=20.0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q @ np.diag(rng.uniform(lo, hi, n)) @ q.T


# ---------------------------------------------------------------- OperatorMatrix


def test_operator_rejects_nonsquare_and_nonfinite():
    with pytest.raises(InvalidOperator):
        OperatorMatrix(np.ones((2, 3)))
    with pytest.raises(InvalidOperator):
        OperatorMatrix([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(InvalidOperator):
        operator_norm([[np.inf]])


def test_operator_is_immutable_copy():
    a = np.eye(2)
    op = OperatorMatrix(a)
    a[0, 0] = 5.0
    assert op.entries[0, 0] == 1.0
    with pytest.raises(ValueError):
        op.entries[0, 0] = 2.0


# ---------------------------------------------------------------- norms, resolvent


def test_operator_norm_examples():
    assert operator_norm(np.eye(3)) == pytest.approx(1.0)
    assert operator_norm(np.zeros((2, 2))) == 0.0
    assert operator_norm(np.diag([-1.0, 2.0])) == pytest.approx(2.0)


def test_resolvent_examples():
    np.testing.assert_allclose(resolvent([[0.0]], 2.0).entries, [[0.5]])
    np.testing.assert_allclose(resolvent(np.diag([1.0, -1.0]), 3.0).entries,
                               np.diag([0.5, 0.25]))
    np.testing.assert_allclose(resolvent([[0.0, 1.0], [0.0, 0.0]], 1.0).entries,
                               [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)


def test_resolvent_at_eigenvalue_raises_with_eigenvalue():
    with pytest.raises(SingularResolvent) as info:
        resolvent(np.diag([1.0, 2.0]), 2.0)
    assert info.value.eigenvalue == pytest.approx(2.0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(-5, 5), st.floats(-5, 5))
def test_resolvent_residual(seed, re, im):
    a = rand_matrix(seed, complex_=True)
    lam = complex(re, im)
    if np.min(np.abs(np.linalg.eigvals(a) - lam)) < 1e-3:
        return
    R = resolvent(a, lam).entries
    res = np.linalg.norm((lam * np.eye(len(a)) - a) @ R - np.eye(len(a)), 2)
    assert res <= 1e-10 * (1 + np.linalg.norm(R, 2) * np.linalg.norm(a, 2))


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(1.0, 10.0), st.floats(1.0, 10.0))
def test_resolvent_identity(seed, dl, dm):
    a = rand_matrix(seed)
    na = np.linalg.norm(a, 2)
    lam, mu = na + 1 + dl, na + 1 + dm
    Rl, Rm = resolvent(a, lam).entries, resolvent(a, mu).entries
    err = np.linalg.norm(Rl - Rm - (mu - lam) * Rl @ Rm, 2)
    assert err <= 1e-9 / max(na, 1e-12) or err <= 1e-15


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(2.0, 1e6))
def test_neumann_decay(seed, factor):
    a = rand_matrix(seed)
    na = np.linalg.norm(a, 2)
    mu = factor * max(na, 1e-3)
    err = np.linalg.norm(mu * resolvent(a, mu).entries - np.eye(len(a)), 2)
    assert err <= 2 * na / mu + 1e-12


# ---------------------------------------------------------------- exponential


def test_matrix_exp_examples():
    a = rand_matrix(3)
    np.testing.assert_array_equal(matrix_exp(a, 0.0).entries, np.eye(len(a)))
    np.testing.assert_allclose(matrix_exp(np.diag([-1.0, 2.0])).entries,
                               np.diag([np.exp(-1), np.exp(2)]), rtol=1e-14)
    np.testing.assert_allclose(matrix_exp([[0.0, 1.0], [0.0, 0.0]]).entries,
                               [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(1e-3, 100.0))
def test_expm_matches_scipy(seed, scale):
    a = rand_matrix(seed, complex_=seed % 2 == 1)
    a = a * (scale / np.linalg.norm(a, 2))
    ours, ref = expm_array(a), scipy.linalg.expm(a)
    # normwise relative accuracy, allowing for the conditioning of exp
    err = np.linalg.norm(ours - ref, 1) / np.linalg.norm(ref, 1)
    assert err <= 1e-12 * max(1.0, scale)


@pytest.mark.parametrize("s,t", [(0.1, 0.5), (0.5, 1.0), (1.0, 1.0), (0.1, 0.1)])
def test_semigroup_property(s, t):
    for seed in range(10):
        a = rand_matrix(seed)
        lhs = expm_array((s + t) * a)
        err = np.linalg.norm(lhs - expm_array(s * a) @ expm_array(t * a), 2)
        assert err <= 1e-10 * (1 + np.linalg.norm(lhs, 2))


# ---------------------------------------------------------------- spectrum


def test_spectrum_examples():
    np.testing.assert_allclose(np.sort(spectrum(np.diag([1.0, 2.0, 3.0])).eigenvalues.real),
                               [1, 2, 3])
    rot = spectrum([[0.0, -1.0], [1.0, 0.0]]).eigenvalues
    np.testing.assert_allclose(sorted(rot, key=lambda z: z.imag), [-1j, 1j], atol=1e-15)
    golden = np.sort(spectrum([[1.0, 1.0], [1.0, 0.0]]).eigenvalues.real)
    np.testing.assert_allclose(golden, [(1 - np.sqrt(5)) / 2, (1 + np.sqrt(5)) / 2])


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_spectrum_residuals_and_condition(seed):
    a = rand_matrix(seed, complex_=True)
    res = spectrum(a)
    assert len(res.eigenvalues) == len(a)
    assert res.condition_estimate >= 1.0
    for lam, v in zip(res.eigenvalues, res.eigenvectors.T):
        assert np.linalg.norm(a @ v - lam * v) <= 1e-8 * np.linalg.norm(a, 2) * np.linalg.norm(v)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_spectrum_of_exp_for_normal(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    lam = rng.uniform(-2, 2, n) + 1j * rng.uniform(-3, 3, n)
    a = q @ np.diag(lam) @ q.conj().T
    got = spectrum(matrix_exp(a)).eigenvalues
    want = np.exp(lam)
    for z in want:
        assert np.min(np.abs(got - z)) <= 1e-8


# ---------------------------------------------------------------- growth bound


def test_semigroup_bound_examples():
    b = semigroup_bound(np.diag([-1.0, -2.0]), 5.0)
    assert b.M == pytest.approx(1.0)
    assert b.omega == pytest.approx(-1.0, abs=1e-8)
    b0 = semigroup_bound(np.zeros((2, 2)), 5.0)
    assert b0.M == 1.0 and b0.omega == pytest.approx(0.0, abs=1e-8)


def test_semigroup_bound_nonnormal_transient():
    a = np.array([[-1.0, 10.0], [0.0, -1.0]])
    b = semigroup_bound(a, 10.0)
    assert b.M > 1.0
    # dense sampling oracle: the certificate holds wherever we look on the window
    ts = np.linspace(0, 10.0, 2001)
    vals = [np.linalg.norm(scipy.linalg.expm(t * a), 2) * np.exp(-b.omega * t) for t in ts]
    peak = max(vals)
    # e^{-t}(1 + 10 t) peaks at t = 0.9 with value 10 e^{-0.9}
    assert peak == pytest.approx(b.M, rel=1e-3)
    assert b.T_check == 10.0


# ---------------------------------------------------------------- fractional power


def test_fractional_power_examples():
    np.testing.assert_allclose(fractional_power(np.eye(3), 0.5).entries, np.eye(3))
    np.testing.assert_allclose(fractional_power(np.diag([4.0, 9.0]), 0.5).entries,
                               np.diag([2.0, 3.0]))
    q = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    a = q @ np.diag([1.0, 16.0]) @ q.T
    eig = np.sort(np.linalg.eigvalsh(fractional_power(a, 0.25).array()))
    np.testing.assert_allclose(eig, [1.0, 2.0], rtol=1e-12)


def test_fractional_power_branch_cut():
    with pytest.raises(BranchCutViolation):
        fractional_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(BranchCutViolation):
        fractional_power(np.diag([1.0, 0.0]), 0.5)


def test_fractional_power_defective_path():
    a = np.array([[2.0, 1.0], [0.0, 2.0]])
    half = fractional_power(a, 0.5).array()
    np.testing.assert_allclose(half @ half, a, rtol=1e-10, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.05, 1.0))
def test_fractional_power_inverts(seed, alpha):
    a = spd(seed)
    p = fractional_power(a, alpha).array()
    w, v = np.linalg.eigh(p)
    back = v @ np.diag(w ** (1 / alpha)) @ v.T
    assert np.linalg.norm(back - a, 2) <= 1e-8 * np.linalg.norm(a, 2)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.05, 0.5), st.floats(0.05, 0.5))
def test_fractional_power_composition(seed, alpha, beta):
    a = spd(seed)
    ab = fractional_power(a, alpha + beta).array()
    prod = fractional_power(a, alpha).array() @ fractional_power(a, beta).array()
    assert np.linalg.norm(prod - ab, 2) <= 1e-8 * np.linalg.norm(ab, 2)


# ---------------------------------------------------------------- I/O


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_matrix_io_round_trips_bit_exact(seed):
    a = OperatorMatrix(rand_matrix(seed, complex_=True) * 10.0 ** np.random.default_rng(seed).integers(-300, 300))
    assert np.array_equal(from_json_dict(to_json_dict(a)).entries, a.entries)
    assert np.array_equal(loads_text(dumps_text(a)).entries, a.entries)


def test_matrix_files(tmp_path):
    a = OperatorMatrix(rand_matrix(7, complex_=True))
    for name in ("m.json", "m.txt"):
        save_matrix(a, tmp_path / name)
        assert np.array_equal(load_matrix(tmp_path / name).entries, a.entries)
    (tmp_path / "bad.txt").write_text("1 0 2\n")
    with pytest.raises(InvalidOperator):
        load_matrix(tmp_path / "bad.txt")
    with pytest.raises(InvalidOperator):
        load_matrix(tmp_path / "missing.json")
