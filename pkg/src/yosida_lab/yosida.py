"""Yosida approximations and numerical Yosida distances.

The Yosida approximation of ``A`` at ``mu`` is ``mu**2 R(mu, A) - mu I``,
and the Yosida distance of two operators is the limsup of
``||A_mu - B_mu||`` as ``mu -> +inf``.  For matrices the limit exists and
equals ``||A - B||``; here it is estimated from a log-spaced mu-grid so that
discretized unbounded operators can be treated the same way.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .errors import DivergentClassP, InconclusiveVerification
from .linops import (
    OperatorMatrix,
    SemigroupBound,
    _resolvent_array,
    as_operator,
    expm_array,
    resolvent,
    semigroup_bound,
)


@dataclass(frozen=True)
class MuGrid:
    """Configuration of the mu-grid used to estimate the limsup."""

    n: int = 64
    decades: float = 8.0
    mu0: float | None = None
    slope_tol: float = 1e-2
    spread_tol: float = 1e-3

    def grid(self, *ops: OperatorMatrix) -> np.ndarray:
        mu0 = self.mu0
        if mu0 is None:
            abscissa = max(max(op.spectral_abscissa for op in ops), 0.0)
            mu0 = 2.0 * (1.0 + abscissa)
        return np.geomspace(mu0, mu0 * 10.0 ** self.decades, self.n)


@dataclass
class YosidaDistanceEstimate:
    value: float
    mu_grid: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    tail_slope: float
    tail_spread: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "converged": self.converged,
            "tail_slope": self.tail_slope,
            "tail_spread": self.tail_spread,
            "mu_grid": [float(m) for m in self.mu_grid],
            "samples": [float(s) for s in self.samples],
        }


def yosida_approx(A, mu: float) -> OperatorMatrix:
    """Yosida approximation ``mu**2 R(mu, A) - mu I``.

    Evaluated in the algebraically equal form ``mu R(mu, A) A``, which does
    not cancel two O(mu) terms.
    """
    A = as_operator(A)
    R = resolvent(A, mu)
    return OperatorMatrix(mu * (R.entries @ A.entries))


def _canonical_pair(A: OperatorMatrix, B: OperatorMatrix):
    if A.entries.tobytes() > B.entries.tobytes():
        return B, A
    return A, B


def yosida_samples(A, B, mu_grid) -> np.ndarray:
    """``||A_mu - B_mu||`` at each mu, via ``mu**2 R(mu,A) (A - B) R(mu,B)``."""
    A, B = _canonical_pair(as_operator(A), as_operator(B))
    a, b = A.array(), B.array()
    diff = a - b
    out = np.empty(len(mu_grid))
    if not np.any(diff):
        out[:] = 0.0
        return out
    for k, mu in enumerate(mu_grid):
        # validates mu against both spectra
        resolvent(A, mu), resolvent(B, mu)
        ra = _resolvent_array(a, mu)
        rb = _resolvent_array(b, mu)
        out[k] = mu * mu * np.linalg.norm(ra @ diff @ rb, 2)
    return out


def _tail_diagnostics(mu_grid, samples):
    q = max(2, len(samples) // 4)
    tail_mu, tail = mu_grid[-q:], samples[-q:]
    top = float(np.max(tail))
    if top <= 1e-300:
        return 0.0, 0.0, 0.0
    spread = float((top - np.min(tail)) / top)
    logs = np.log(np.maximum(tail, 1e-300))
    slope = float(np.polyfit(np.log(tail_mu), logs, 1)[0])
    return top, slope, spread


def yosida_distance(A, B, cfg: MuGrid | None = None) -> YosidaDistanceEstimate:
    """Estimate ``limsup_mu ||A_mu - B_mu||``.

    The value is the maximum of the last quartile of samples.  The estimate
    is flagged converged when the log-log slope of that quartile is within
    ``slope_tol`` of zero and its relative spread is below ``spread_tol``.
    A non-converged estimate is returned, not raised.
    """
    cfg = cfg or MuGrid()
    A, B = as_operator(A), as_operator(B)
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch {A.dim} != {B.dim}")
    mus = cfg.grid(A, B)
    samples = yosida_samples(A, B, mus)
    value, slope, spread = _tail_diagnostics(mus, samples)
    converged = abs(slope) <= cfg.slope_tol and spread <= cfg.spread_tol
    return YosidaDistanceEstimate(value, mus, samples, slope, spread, converged)


# --------------------------------------------------------------------------
# perturbation inequalities


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, **self.details}


def verify_bounded_perturbation_bound(A, C, bound: SemigroupBound | None = None,
                                      cfg: MuGrid | None = None) -> BoundCheck:
    """Check ``d_Y(A, A + C) <= M**2 ||C||`` for a growth bound ``(M, omega)`` of ``A``."""
    A, C = as_operator(A), as_operator(C)
    if bound is None:
        bound = semigroup_bound(A)
    est = yosida_distance(A, A + C, cfg)
    if not est.converged:
        raise InconclusiveVerification(
            f"Yosida distance did not converge (slope {est.tail_slope:.3g}, "
            f"spread {est.tail_spread:.3g})")
    rhs = bound.M ** 2 * C.norm
    return BoundCheck(est.value, rhs, est.value <= rhs + 1e-6,
                      {"M": bound.M, "omega": bound.omega, "norm_C": C.norm})


def class_P_constant(A, C, delta: float = 1e-8, atol: float = 1e-6) -> float:
    """``K = int_0^1 ||C exp(tA)|| dt`` by adaptive Gauss-Kronrod quadrature.

    The integral is taken over ``(delta, 1]`` on a grid graded toward zero;
    the piece below ``delta`` is bounded by ``delta * K_delta``.
    """
    A, C = as_operator(A), as_operator(C)
    if not np.any(C.entries):
        return 0.0
    a, c = A.array(), C.array()

    def k_t(t):
        return np.linalg.norm(c @ expm_array(t * a), 2)

    breaks = [p for p in (1e-6, 1e-4, 1e-2, 1e-1) if p > delta]
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.integrate.IntegrationWarning)
        try:
            val, err = scipy.integrate.quad(k_t, delta, 1.0, points=breaks,
                                            epsabs=atol * 0.1, epsrel=1e-10, limit=200)
        except scipy.integrate.IntegrationWarning as exc:
            raise DivergentClassP(str(exc)) from exc
    if err > atol:
        raise DivergentClassP(f"quadrature error estimate {err:.3g} exceeds {atol:.3g}")
    return float(val + delta * k_t(delta))


def verify_class_P_bound(A, C, cfg: MuGrid | None = None, **quad) -> BoundCheck:
    """Compare ``d_Y(A, A + C)`` with the integral constant ``K``."""
    A, C = as_operator(A), as_operator(C)
    K = class_P_constant(A, C, **quad)
    est = yosida_distance(A, A + C, cfg)
    return BoundCheck(est.value, K, est.value <= K + 1e-4,
                      {"K": K, "converged": est.converged})


def common_growth_bound(A, B, T_check: float, grid: int = 256):
    """Shared ``(M, omega)`` for two generators: componentwise maxima."""
    ba = semigroup_bound(A, T_check, grid)
    bb = semigroup_bound(B, T_check, grid)
    return max(ba.M, bb.M), max(ba.omega, bb.omega)


@dataclass
class DifferenceBoundReport:
    t: list
    lhs: list
    rhs: list
    holds_at: list
    d_Y: float
    M: float
    omega: float

    @property
    def holds(self) -> bool:
        return all(self.holds_at)

    def to_dict(self) -> dict:
        return {"t": self.t, "lhs": self.lhs, "rhs": self.rhs, "holds_at": self.holds_at,
                "holds": self.holds, "d_Y": self.d_Y, "M": self.M, "omega": self.omega}


def semigroup_difference_bound(A, B, t_grid, M: float, omega: float,
                               cfg: MuGrid | None = None) -> DifferenceBoundReport:
    """Check ``||exp(tA) - exp(tB)|| <= t M**2 exp(4 omega t) d_Y(A, B)``.

    ``omega`` is clamped to be non-negative: the estimate is proven for a
    growth bound, and a negative rate would tighten it beyond what is shown.
    """
    A, B = as_operator(A), as_operator(B)
    omega = max(float(omega), 0.0)
    dY = yosida_distance(A, B, cfg).value
    a, b = A.array(), B.array()
    ts, lhs, rhs, ok = [], [], [], []
    for t in t_grid:
        t = float(t)
        left = float(np.linalg.norm(expm_array(t * a) - expm_array(t * b), 2))
        right = t * M * M * np.exp(4.0 * omega * t) * dY
        ts.append(t)
        lhs.append(left)
        rhs.append(float(right))
        ok.append(bool(left <= right * (1 + 1e-6) + 1e-9))
    return DifferenceBoundReport(ts, lhs, rhs, ok, dY, float(M), omega)
