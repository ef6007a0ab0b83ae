"""Delayed reaction-diffusion models on ``[0, pi]`` with Dirichlet ends.

The unperturbed problem is ``w_t = w_xx - a w - b w(t - r)``.  The spatial
operator is realized either exactly on the first ``n_modes`` sine modes or
by second-order finite differences.  The delayed term enters with a minus
sign so that the modal characteristic equation reads
``lam + a + b exp(-lam r) = -n**2``.

Two perturbation families are supported:

``"instantaneous"``
    ``eps1 w_xx + eps2 w_x - eps3(x) w`` plus a delay functional made of
    point masses ``eps4``.
``"delayed_gradient"``
    ``eps1 w_xx - eps3(x) w`` plus ``eps5 w_x(t - r)`` and the ``eps4``
    point masses; measured in the norm ``||(-A0)^(1/2) x||``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .delay import DelaySystem
from .errors import InvalidInput, InvalidPerturbation
from .linops import OperatorMatrix, fractional_power

EXAMPLES = ("instantaneous", "delayed_gradient")


@dataclass(frozen=True)
class ReactionDiffusionConfig:
    a: float
    b: float
    r: float
    n_modes: int = 5
    spatial_disc: str = "modal"
    m: int = 64

    def __post_init__(self):
        if self.spatial_disc not in ("modal", "fd"):
            raise InvalidInput(f"unknown spatial discretization {self.spatial_disc!r}")
        if self.spatial_disc == "fd" and self.m < 8:
            raise InvalidInput("finite differences need m >= 8 grid points")
        if self.n_modes < 1 or self.r <= 0:
            raise InvalidInput("need n_modes >= 1 and r > 0")

    @property
    def dim(self) -> int:
        return self.n_modes if self.spatial_disc == "modal" else self.m - 2


@dataclass(frozen=True)
class PerturbationConfig:
    """Perturbation coefficients.

    ``eps3`` is either a constant (``eps3_const``) or samples on a uniform
    grid of ``[0, pi]`` including both ends (``eps3_samples``).  Kernel
    atoms are ``(theta, weight)`` pairs, the weight a scalar or a matrix.
    """

    eps1: float = 0.0
    eps2: float = 0.0
    eps3_const: float = 0.0
    eps3_samples: tuple | None = None
    eps4_atoms: tuple = ()
    eps5: float = 0.0

    @property
    def eps3_sup(self) -> float:
        if self.eps3_samples is not None:
            return float(np.max(np.abs(self.eps3_samples)))
        return abs(self.eps3_const)

    @property
    def var_eps4(self) -> float:
        total = 0.0
        for _, w in self.eps4_atoms:
            total += np.linalg.norm(w, 2) if np.ndim(w) else abs(w)
        return float(total)

    def eps3_at(self, x: np.ndarray) -> np.ndarray:
        if self.eps3_samples is None:
            return np.full_like(x, self.eps3_const, dtype=float)
        s = np.asarray(self.eps3_samples, dtype=float)
        return np.interp(x, np.linspace(0.0, np.pi, len(s)), s)


# --------------------------------------------------------------------------
# spatial operators


def fd_grid(m: int) -> np.ndarray:
    """Interior points of the ``m``-point uniform grid on ``[0, pi]``."""
    return np.linspace(0.0, np.pi, m)[1:-1]


def second_derivative(cfg: ReactionDiffusionConfig) -> np.ndarray:
    if cfg.spatial_disc == "modal":
        k = np.arange(1, cfg.n_modes + 1)
        return np.diag(-(k * k).astype(float))
    n = cfg.m - 2
    h = np.pi / (cfg.m - 1)
    return (np.diag(np.full(n - 1, 1.0), -1) + np.diag(np.full(n, -2.0))
            + np.diag(np.full(n - 1, 1.0), 1)) / (h * h)


def first_derivative(cfg: ReactionDiffusionConfig) -> np.ndarray:
    """Central differences, or the Galerkin matrix of d/dx on orthonormal sines."""
    if cfg.spatial_disc == "modal":
        k = np.arange(1, cfg.n_modes + 1, dtype=float)
        mm, nn = np.meshgrid(k, k, indexing="ij")
        odd = (mm + nn) % 2 == 1
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(odd, (2.0 / np.pi) * 2.0 * mm * nn / (mm * mm - nn * nn), 0.0)
        return d
    n = cfg.m - 2
    h = np.pi / (cfg.m - 1)
    return (np.diag(np.full(n - 1, 1.0), 1) - np.diag(np.full(n - 1, 1.0), -1)) / (2 * h)


def multiplication(cfg: ReactionDiffusionConfig, pert: PerturbationConfig) -> np.ndarray:
    """Matrix of ``y -> eps3(x) y``."""
    if pert.eps3_samples is None:
        return pert.eps3_const * np.eye(cfg.dim)
    if cfg.spatial_disc == "fd":
        return np.diag(pert.eps3_at(fd_grid(cfg.m)))
    x = np.linspace(0.0, np.pi, 4097)
    e = pert.eps3_at(x)
    k = np.arange(1, cfg.n_modes + 1)
    s = np.sin(np.outer(k, x))
    return (2.0 / np.pi) * scipy.integrate.trapezoid(e * s[:, None, :] * s[None, :, :], x, axis=-1)


# --------------------------------------------------------------------------
# builders


def build_unperturbed(cfg: ReactionDiffusionConfig) -> DelaySystem:
    """``A0 = A_T - a I`` and the delayed coefficient ``-b I``."""
    n = cfg.dim
    A0 = second_derivative(cfg) - cfg.a * np.eye(n)
    return DelaySystem(OperatorMatrix(A0, "A0"), cfg.r, OperatorMatrix(-cfg.b * np.eye(n), "B0"))


def _atom_matrix(w, n):
    return np.asarray(w, dtype=float) if np.ndim(w) else w * np.eye(n)


def build_perturbed(cfg: ReactionDiffusionConfig, pert: PerturbationConfig,
                    example: str = "instantaneous") -> DelaySystem:
    """Perturbed system; with an all-zero ``pert`` it equals :func:`build_unperturbed`."""
    if example not in EXAMPLES:
        raise InvalidInput(f"example must be one of {EXAMPLES}")
    if example == "delayed_gradient" and pert.eps2 != 0:
        raise InvalidPerturbation("the delayed-gradient family has no eps2 term")
    if example == "instantaneous" and pert.eps5 != 0:
        raise InvalidPerturbation("eps5 belongs to the delayed-gradient family")
    base = build_unperturbed(cfg)
    n = cfg.dim
    A = base.A.array()
    if pert.eps1:
        A = A + pert.eps1 * second_derivative(cfg)
    if pert.eps2:
        A = A + pert.eps2 * first_derivative(cfg)
    if pert.eps3_samples is not None or pert.eps3_const:
        A = A - multiplication(cfg, pert)
    B = base.B_point.array()
    if pert.eps5:
        B = B + pert.eps5 * first_derivative(cfg)
    kernel = tuple((float(th), _atom_matrix(w, n)) for th, w in pert.eps4_atoms)
    return DelaySystem(OperatorMatrix(A, "A1"), cfg.r, OperatorMatrix(B, "B1"), kernel)


def perturbation_operator(cfg: ReactionDiffusionConfig, pert: PerturbationConfig) -> np.ndarray:
    """``eps1 y'' + eps2 y' - eps3 y`` as a matrix."""
    return (pert.eps1 * second_derivative(cfg) + pert.eps2 * first_derivative(cfg)
            - multiplication(cfg, pert))


# --------------------------------------------------------------------------
# checks


@dataclass
class RelativeBoundReport:
    lhs_samples: np.ndarray = field(repr=False)
    rhs_samples: np.ndarray = field(repr=False)
    rhs_displayed: np.ndarray = field(repr=False)
    holds: bool
    displayed_form_holds: bool
    seed: int

    def to_dict(self) -> dict:
        ratio = self.lhs_samples / np.maximum(self.rhs_samples, 1e-300)
        return {"holds": self.holds, "displayed_form_holds": self.displayed_form_holds,
                "n_samples": int(len(self.lhs_samples)), "max_ratio": float(ratio.max()),
                "seed": self.seed}


def sample_vectors(cfg: ReactionDiffusionConfig, count: int, seed: int) -> np.ndarray:
    """Half smooth sine series with decaying coefficients, half white noise."""
    rng = np.random.default_rng(seed)
    x = fd_grid(cfg.m)
    k = np.arange(1, 17)
    smooth = rng.standard_normal((count - count // 2, len(k))) / k ** 2 @ np.sin(np.outer(k, x))
    rough = rng.standard_normal((count // 2, len(x)))
    return np.vstack([smooth, rough])


def check_relative_boundedness(cfg: ReactionDiffusionConfig, pert: PerturbationConfig,
                               n_samples: int = 200, seed: int = 0) -> RelativeBoundReport:
    """Relative bound of the perturbation against ``A0`` on sample vectors.

    Checks ``||A1 y|| <= (eps1 + eps2/2) ||A0 y|| + (18 eps2 + sup|eps3|) ||y||``,
    the form that follows from ``||y'|| <= 18 ||y|| + ||y''||/2``.  Whether
    the form without the ``18 eps2`` term also held is reported alongside.
    """
    if cfg.spatial_disc != "fd":
        raise InvalidInput("the relative bound is checked on the finite-difference path")
    A0 = build_unperturbed(cfg).A.array()
    A1 = perturbation_operator(cfg, pert)
    Y = sample_vectors(cfg, n_samples, seed)
    lhs = np.linalg.norm(Y @ A1.T, axis=1)
    a0y = np.linalg.norm(Y @ A0.T, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    e1, e2, e3 = abs(pert.eps1), abs(pert.eps2), pert.eps3_sup
    rhs = (e1 + e2 / 2) * a0y + (18 * e2 + e3) * ny
    shown = (e1 + e2 / 2) * a0y + e3 * ny
    slack = 1e-9 * (1.0 + rhs)
    return RelativeBoundReport(lhs, rhs, shown, bool(np.all(lhs <= rhs + slack)),
                               bool(np.all(lhs <= shown + 1e-9 * (1.0 + shown))), seed)


@dataclass
class FunctionalBoundReport:
    dY_value: float
    bound: float
    holds: bool

    def to_dict(self) -> dict:
        return {"dY_value": self.dY_value, "bound": self.bound, "holds": self.holds}


def alpha_norm_weight(cfg: ReactionDiffusionConfig, alpha: float = 0.5) -> np.ndarray:
    """``(-A0)^alpha`` for the unperturbed spatial operator."""
    A0 = build_unperturbed(cfg).A
    return fractional_power(-A0, alpha).array()


def functional_atoms(cfg: ReactionDiffusionConfig, pert: PerturbationConfig) -> dict:
    """Point masses of the delay-functional perturbation, keyed by node."""
    n = cfg.dim
    atoms = {}
    if pert.eps5:
        atoms[-cfg.r] = pert.eps5 * first_derivative(cfg)
    for th, w in pert.eps4_atoms:
        th = float(th)
        atoms[th] = atoms.get(th, 0.0) + _atom_matrix(w, n)
    return atoms


def check_functional_perturbation(cfg: ReactionDiffusionConfig, pert: PerturbationConfig,
                                  alpha: float = 0.5, headroom: float = 0.05
                                  ) -> FunctionalBoundReport:
    """Norm of the delay-functional perturbation on ``C([-r, 0], X^alpha)``.

    For point masses at distinct nodes the functional norm is the sum of
    ``||W_j (-A0)^(-alpha)||``; it is compared with ``eps5 + Var(eps4)``.
    """
    W = alpha_norm_weight(cfg, alpha)
    W_inv = np.linalg.inv(W)
    value = sum(float(np.linalg.norm(m @ W_inv, 2)) for m in functional_atoms(cfg, pert).values())
    bound = abs(pert.eps5) + pert.var_eps4
    return FunctionalBoundReport(value, bound, value <= bound * (1 + headroom) + 1e-9)
