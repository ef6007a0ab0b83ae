"""Dense-matrix operator core.

Norms, resolvents, spectra, the matrix exponential, semigroup growth
certificates and principal fractional powers for finite-dimensional
stand-ins of linear operators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import (
    BranchCutViolation,
    ExpOverflow,
    InvalidOperator,
    SingularResolvent,
    SpectrumFailure,
)

EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Immutable square complex matrix standing in for a linear operator.

    Spectral data (eigenvalues, norm) is computed lazily and cached.
    """

    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex, copy=True)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidOperator(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidOperator("operator has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.any(self.entries.imag)

    def array(self) -> np.ndarray:
        """Writable copy, real dtype when the imaginary part vanishes."""
        if self.is_real:
            return self.entries.real.copy()
        return self.entries.copy()

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        try:
            w = np.linalg.eigvals(self.array())
        except np.linalg.LinAlgError as exc:
            raise SpectrumFailure(str(exc)) from exc
        w.setflags(write=False)
        return w

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2)) if self.dim else 0.0

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real))

    def __add__(self, other):
        return OperatorMatrix(self.entries + _as_array(other))

    def __sub__(self, other):
        return OperatorMatrix(self.entries - _as_array(other))

    def __neg__(self):
        return OperatorMatrix(-self.entries)

    def __rmul__(self, scalar):
        return OperatorMatrix(scalar * self.entries)

    def __matmul__(self, other):
        return OperatorMatrix(self.entries @ _as_array(other))

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<OperatorMatrix{tag} dim={self.dim}>"


def _as_array(x) -> np.ndarray:
    return x.entries if isinstance(x, OperatorMatrix) else np.asarray(x)


def as_operator(x, label: str = "") -> OperatorMatrix:
    if isinstance(x, OperatorMatrix):
        return x
    return OperatorMatrix(x, label=label)


def identity(n: int) -> OperatorMatrix:
    return OperatorMatrix(np.eye(n))


@dataclass(frozen=True)
class SemigroupBound:
    """Grid certificate ``||exp(tA)|| <= M exp(omega t)`` on ``t_grid``."""

    M: float
    omega: float
    t_grid: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not self.M >= 1.0:
            raise ValueError(f"M must be >= 1, got {self.M}")

    @property
    def T_check(self) -> float:
        return float(self.t_grid[-1]) if self.t_grid else 0.0


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    condition_estimate: float
    eigenvectors: np.ndarray = field(repr=False, default=None)


# --------------------------------------------------------------------------
# basic operations


def operator_norm(A) -> float:
    """Induced 2-norm (largest singular value)."""
    return as_operator(A).norm


def resolvent(A, lam: complex) -> OperatorMatrix:
    """Return ``(lam I - A)^{-1}``.

    Raises
    ------
    SingularResolvent
        If ``lam`` lies within ``dim * eps * ||A||`` of an eigenvalue.
    """
    A = as_operator(A)
    n = A.dim
    tol = n * EPS * max(A.norm, 1.0)
    dist = np.abs(A.eigenvalues - lam)
    k = int(np.argmin(dist))
    if dist[k] <= tol:
        raise SingularResolvent(A.eigenvalues[k], lam)
    return OperatorMatrix(_resolvent_array(A.array(), lam))


def _resolvent_array(a: np.ndarray, lam: complex) -> np.ndarray:
    n = a.shape[0]
    m = -a.astype(complex if np.iscomplexobj(a) or np.iscomplexobj(lam) else float)
    m[np.diag_indices(n)] += lam
    return scipy.linalg.solve(m, np.eye(n, dtype=m.dtype), check_finite=False)


# --------------------------------------------------------------------------
# matrix exponential: scaling and squaring, diagonal Pade approximants

_PADE_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
               7: 9.504178996162932e-1, 9: 2.097847961257068,
               13: 5.371920351148152}

_PADE_COEFFS = {
    3: (120., 60., 12., 1.),
    5: (30240., 15120., 3360., 420., 30., 1.),
    7: (17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.),
    9: (17643225600., 8821612800., 2075673600., 302702400., 30270240.,
        2162160., 110880., 3960., 90., 1.),
    13: (64764752532480000., 32382376266240000., 7771770303897600.,
         1187353796428800., 129060195264000., 10559470521600.,
         670442572800., 33522128640., 1323241920., 40840800., 960960.,
         16380., 182., 1.),
}


def _pade_uv(a: np.ndarray, m: int):
    b = _PADE_COEFFS[m]
    ident = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    powers = [ident, a2]
    while len(powers) < (m + 1) // 2 + 1:
        powers.append(powers[-1] @ a2)
    u = a @ sum(b[2 * k + 1] * powers[k] for k in range((m + 1) // 2))
    v = sum(b[2 * k] * powers[k] for k in range((m + 1) // 2))
    return u, v


def expm_array(a: np.ndarray) -> np.ndarray:
    """``exp(a)`` for a dense array by Higham's scaling-and-squaring."""
    a = np.asarray(a)
    n = a.shape[0]
    if n == 0:
        return a.copy()
    norm1 = np.linalg.norm(a, 1)
    if not np.isfinite(norm1):
        raise ExpOverflow("non-finite input to matrix exponential")
    if norm1 == 0.0:
        return np.eye(n, dtype=a.dtype)
    for m in (3, 5, 7, 9):
        if norm1 <= _PADE_THETA[m]:
            u, v = _pade_uv(a, m)
            return scipy.linalg.solve(v - u, v + u, check_finite=False)
    s = max(0, int(np.ceil(np.log2(norm1 / _PADE_THETA[13]))))
    u, v = _pade_uv(a / 2.0 ** s, 13)
    x = scipy.linalg.solve(v - u, v + u, check_finite=False)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            x = x @ x
    if not np.all(np.isfinite(x)):
        raise ExpOverflow(f"exp overflowed (||A||_1 = {norm1:.3g})")
    return x


def matrix_exp(A, t: float = 1.0) -> OperatorMatrix:
    """``exp(tA)``."""
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    A = as_operator(A)
    return OperatorMatrix(expm_array(t * A.array()))


# --------------------------------------------------------------------------
# spectra and growth bounds


def spectrum(A) -> SpectrumResult:
    """Eigenvalues with multiplicity and the eigenvector condition number."""
    A = as_operator(A)
    try:
        w, v = np.linalg.eig(A.array())
    except np.linalg.LinAlgError as exc:
        raise SpectrumFailure(str(exc)) from exc
    with np.errstate(divide="ignore"):
        cond = float(np.linalg.cond(v)) if A.dim else 1.0
    if not np.isfinite(cond):
        cond = np.inf
    return SpectrumResult(w, max(cond, 1.0), v)


def default_t_grid(T_check: float, n: int = 256) -> np.ndarray:
    """Uniform on ``[0, min(1, T)]`` and log-spaced beyond ``t = 1``."""
    if T_check <= 1.0:
        return np.linspace(0.0, T_check, n)
    n_lin = n // 2
    lin = np.linspace(0.0, 1.0, n_lin, endpoint=False)
    log = np.geomspace(1.0, T_check, n - n_lin)
    return np.concatenate([lin, log])


def semigroup_bound(A, T_check: float = 10.0, grid: int = 256) -> SemigroupBound:
    """Grid certificate for the growth of ``exp(tA)`` on ``[0, T_check]``.

    ``omega`` is the spectral abscissa plus ``1e-9`` and ``M`` the largest
    sampled value of ``||exp(tA)|| exp(-omega t)``, clamped below by 1.
    Only the sampled times are certified.
    """
    if not T_check > 0:
        raise ValueError("T_check must be positive")
    A = as_operator(A)
    omega = A.spectral_abscissa + 1e-9
    ts = default_t_grid(T_check, grid)
    # exp on a uniform step, then repeated multiplication, is cheaper but
    # accumulates error on long windows; evaluate each point directly.
    a = A.array()
    M = 1.0
    for t in ts:
        M = max(M, np.linalg.norm(expm_array(t * a), 2) * np.exp(-omega * t))
    return SemigroupBound(float(M), float(omega), tuple(float(t) for t in ts))


# --------------------------------------------------------------------------
# fractional powers


def fractional_power(A, alpha: float) -> OperatorMatrix:
    """Principal power ``A**alpha`` for ``A`` with spectrum in Re z > 0.

    A well-conditioned eigenbasis is used directly; otherwise the Schur
    based algorithm from scipy handles the (near) defective case.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    A = as_operator(A)
    w = A.eigenvalues
    if np.any(w.real <= 0):
        bad = w[np.argmin(w.real)]
        raise BranchCutViolation(f"eigenvalue {bad} is not in the open right half-plane")
    if alpha == 1.0:
        return A
    sr = spectrum(A)
    if sr.condition_estimate < 1e6:
        v = sr.eigenvectors
        x = (v * sr.eigenvalues ** alpha) @ np.linalg.inv(v)
    else:
        x = scipy.linalg.fractional_matrix_power(A.array(), alpha)
    if A.is_real:
        x = x.real
    return OperatorMatrix(x)


# --------------------------------------------------------------------------
# matrix I/O


def to_json_dict(A) -> dict:
    A = as_operator(A)
    return {"dim": A.dim, "re": A.entries.real.tolist(), "im": A.entries.imag.tolist()}


def from_json_dict(d: dict) -> OperatorMatrix:
    try:
        re = np.array(d["re"], dtype=float)
        im = np.array(d.get("im", np.zeros_like(re)), dtype=float)
        n = int(d.get("dim", re.shape[0]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidOperator(f"malformed matrix JSON: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise InvalidOperator(f"matrix JSON shape mismatch for dim {n}")
    return OperatorMatrix(re + 1j * im)


def dumps_text(A) -> str:
    """Row-major text: one line per row of ``re im`` pairs."""
    A = as_operator(A)
    lines = []
    for row in A.entries:
        lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


def loads_text(text: str) -> OperatorMatrix:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    n = len(rows)
    if any(len(r) != 2 * n for r in rows):
        raise InvalidOperator("text matrix must have 2*dim numbers per row")
    try:
        vals = np.array([[float(x) for x in r] for r in rows]).reshape(n, n, 2)
    except ValueError as exc:
        raise InvalidOperator(f"malformed text matrix: {exc}") from exc
    return OperatorMatrix(vals[..., 0] + 1j * vals[..., 1])


def save_matrix(A, path) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(to_json_dict(A)))
    else:
        path.write_text(dumps_text(A))


def load_matrix(path) -> OperatorMatrix:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidOperator(f"cannot read matrix file {path}: {exc}") from exc
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            return from_json_dict(json.loads(text))
        except ValueError as exc:
            raise InvalidOperator(f"malformed matrix JSON: {exc}") from exc
    return loads_text(text)
