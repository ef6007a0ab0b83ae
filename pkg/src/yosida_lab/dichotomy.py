"""Exponential dichotomy of matrix semigroups.

A semigroup ``T(t) = exp(tG)`` is hyperbolic exactly when the spectrum of
``T(1)`` misses the unit circle.  The dichotomy projection is the Riesz
projection of ``T(1)`` for the part of the spectrum inside the unit disc,
computed by the trapezoid rule on ``|z| = 1`` and cross-checked against the
projection obtained from an ordered Schur form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import NotHyperbolic
from .linops import OperatorMatrix, as_operator, expm_array, to_json_dict

GAP_TOL = 1e-8
DEFAULT_T_GRID = tuple(0.25 * k for k in range(33))


@dataclass
class DichotomyReport:
    hyperbolic: bool
    gap: float
    projection: OperatorMatrix | None
    N: float | None
    alpha: float | None
    t_grid_checked: list = field(default_factory=list)
    rank: int = 0
    riesz_points: int = 0
    riesz_schur_discrepancy: float = float("nan")
    modes: list | None = None

    def to_dict(self) -> dict:
        return {
            "hyperbolic": self.hyperbolic,
            "gap": self.gap,
            "N": self.N,
            "alpha": self.alpha,
            "rank": self.rank,
            "riesz_points": self.riesz_points,
            "riesz_schur_discrepancy": self.riesz_schur_discrepancy,
            "t_grid_checked": list(self.t_grid_checked),
            "modes": self.modes,
            "projection": None if self.projection is None else to_json_dict(self.projection),
        }


def riesz_projection(T: np.ndarray, n_points: int = 256, tol: float = 1e-12,
                     max_points: int = 16384):
    """Riesz projection of ``T`` for the spectrum inside the unit circle.

    Trapezoid rule in ``n_points`` nodes, doubled until two successive
    rules agree to ``tol`` (relative) or ``max_points`` is reached.

    Returns
    -------
    P : ndarray
    points : int
        Number of nodes of the final rule.
    converged : bool
    """
    tri, q = scipy.linalg.schur(np.asarray(T, dtype=complex), output="complex")
    n = tri.shape[0]
    ident = np.eye(n)

    def partial(k, offset):
        # sum over nodes exp(2 pi i (j + offset)/k), j = 0..k-1
        acc = np.zeros((n, n), dtype=complex)
        for j in range(k):
            z = np.exp(2j * np.pi * (j + offset) / k)
            acc += z * scipy.linalg.solve_triangular(z * ident - tri, ident)
        return acc

    k = n_points
    s = partial(k, 0.0)
    P = s / k
    converged = False
    while True:
        if k >= max_points:
            break
        s = s + partial(k, 0.5)
        k *= 2
        P_new = s / k
        change = np.linalg.norm(P_new - P, 2)
        P = P_new
        if change <= tol * (1.0 + np.linalg.norm(P, 2)):
            converged = True
            break
    P = q @ P @ q.conj().T
    if not np.iscomplexobj(T):
        P = P.real
    return P, k, converged


def _ordered_schur(a: np.ndarray, inside):
    tri, q, k = scipy.linalg.schur(a.astype(complex), output="complex", sort=inside)
    s11, s12, s22 = tri[:k, :k], tri[:k, k:], tri[k:, k:]
    if 0 < k < a.shape[0]:
        z = scipy.linalg.solve_sylvester(s11, -s22, -s12)
    else:
        z = np.zeros((k, a.shape[0] - k), dtype=complex)
    return q, s11, s22, z, k


def schur_projection(T: np.ndarray) -> np.ndarray:
    """Spectral projection for ``|z| < 1`` from an ordered Schur form."""
    T = np.asarray(T)
    q, s11, s22, z, k = _ordered_schur(T, lambda x: abs(x) < 1.0)
    n = T.shape[0]
    p = np.zeros((n, n), dtype=complex)
    p[:k, :k] = np.eye(k)
    p[:k, k:] = -z
    P = q @ p @ q.conj().T
    return P if np.iscomplexobj(T) else P.real


def _unit_circle_gap(eigs) -> float:
    return float(np.min(np.abs(np.abs(eigs) - 1.0)))


def check_hyperbolic(G, gap_tol: float = GAP_TOL, t_grid=DEFAULT_T_GRID,
                     riesz_points: int = 256, quantify: bool = True) -> DichotomyReport:
    """Decide hyperbolicity from ``sigma(T(1))`` and quantify the dichotomy.

    ``alpha`` is the smaller of ``-max log|z|`` over the stable part and
    ``min log|z|`` over the unstable part of ``sigma(T(1))``, less ``1e-9``.
    ``N`` is the smallest constant for which both decay estimates hold at
    every time in ``t_grid``.  With ``quantify=False`` only the verdict,
    gap and unstable rank are computed.
    """
    G = as_operator(G)
    g = G.array()
    T1 = expm_array(g)
    eigs = np.linalg.eigvals(T1)
    gap = _unit_circle_gap(eigs)
    if not gap > gap_tol:
        return DichotomyReport(False, gap, None, None, None, [])

    mods = np.abs(eigs)
    rank = int(np.sum(mods < 1.0))
    if not quantify:
        return DichotomyReport(True, gap, None, None, None, [], rank)
    stable, unstable = mods[mods < 1.0], mods[mods > 1.0]
    rates = []
    if stable.size:
        rates.append(-np.log(stable.max()))
    if unstable.size:
        rates.append(np.log(unstable.min()))
    alpha = float(min(rates) - 1e-9)

    P_riesz, npts, _ = riesz_projection(T1, riesz_points)
    P_schur = schur_projection(T1)
    disc = float(np.linalg.norm(P_riesz - P_schur, 2))
    P = P_riesz
    if disc > 1e-8 * (1.0 + np.linalg.norm(P_schur, 2)):
        # the contour rule has not resolved eigenvalues close to the circle
        P = P_schur

    # decoupled Schur form of the generator: T(t)P and T(-t)(I-P) without
    # ever forming exp(-tG) on the stable part
    _, s11, s22, z, k = _ordered_schur(g, lambda x: x.real < 0.0)
    left = np.hstack([np.eye(k), -z])
    right = np.vstack([z, np.eye(g.shape[0] - k)])
    N = 1.0
    ts = [float(t) for t in t_grid]
    for t in ts:
        w = np.exp(alpha * t)
        if k:
            N = max(N, np.linalg.norm(expm_array(t * s11) @ left, 2) * w)
        if k < g.shape[0]:
            N = max(N, np.linalg.norm(right @ expm_array(-t * s22), 2) * w)
    return DichotomyReport(True, gap, OperatorMatrix(P), float(N), alpha, ts,
                           rank, npts, disc)


def circle_resolvent_profile(T1: np.ndarray, n_points: int = 512):
    """Samples of ``sigma_min(zI - T1)`` at ``n_points`` nodes on ``|z| = 1``."""
    tri = scipy.linalg.schur(np.asarray(T1, dtype=complex), output="complex")[0]
    ident = np.eye(tri.shape[0])

    def smin(theta):
        m = np.exp(1j * theta) * ident - tri
        return float(np.linalg.svd(m, compute_uv=False)[-1])

    thetas = 2 * np.pi * np.arange(n_points) / n_points
    return thetas, np.array([smin(th) for th in thetas]), smin


def persistence_margin(G0, n_points: int = 512) -> float:
    """Perturbation size of ``T(1)`` that cannot destroy hyperbolicity.

    This is ``min_{|z|=1} 1/||R(z, T(1))||``: sampled at ``n_points``
    nodes, then each sampled local minimum is refined by a bounded scalar
    search.  If ``||T(1) - S(1)||`` is below this value, no eigenvalue of
    ``S(1)`` can reach the circle.
    """
    G0 = as_operator(G0)
    T1 = expm_array(G0.array())
    if not _unit_circle_gap(np.linalg.eigvals(T1)) > GAP_TOL:
        raise NotHyperbolic("generator does not define a hyperbolic semigroup")
    thetas, vals, smin = circle_resolvent_profile(T1, n_points)
    h = thetas[1] - thetas[0]
    best = float(vals.min())
    n = len(vals)
    for i in range(n):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[(i + 1) % n]:
            res = scipy.optimize.minimize_scalar(
                smin, bounds=(thetas[i] - h, thetas[i] + h), method="bounded",
                options={"xatol": 1e-12})
            best = min(best, float(res.fun))
    return best


@dataclass
class PersistenceReport:
    d_T1: float
    margin: float
    predicted_persist: bool
    actual_hyperbolic: bool

    @property
    def sound(self) -> bool:
        return self.actual_hyperbolic or not self.predicted_persist

    def to_dict(self) -> dict:
        return {"d_T1": self.d_T1, "margin": self.margin,
                "predicted_persist": self.predicted_persist,
                "actual_hyperbolic": self.actual_hyperbolic, "sound": self.sound}


def verify_persistence(G0, G1, margin: float | None = None) -> PersistenceReport:
    """Compare ``||T(1) - S(1)||`` with the persistence margin of ``G0``."""
    G0, G1 = as_operator(G0), as_operator(G1)
    if margin is None:
        margin = persistence_margin(G0)
    d = float(np.linalg.norm(expm_array(G0.array()) - expm_array(G1.array()), 2))
    actual = check_hyperbolic(G1).hyperbolic
    return PersistenceReport(d, margin, d < margin, actual)
