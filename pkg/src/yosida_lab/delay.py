"""Delay equations ``u'(t) = A u(t) + B u_t`` on a Chebyshev phase space.

The history segment ``phi`` on ``[-r, 0]`` is represented by its values at
the Chebyshev-Gauss-Lobatto nodes ``theta_0 = 0 > ... > theta_N = -r``.
The generator of the solution semigroup acts as differentiation on every
node except ``theta = 0``, where the splicing condition
``phi'(0) = A phi(0) + B phi`` takes over.  ``B`` is a sum of point
evaluations ``sum_j W_j phi(theta_j)``; off-mesh nodes are evaluated by
barycentric interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dichotomy import DichotomyReport, check_hyperbolic
from .errors import (
    ContourFailure,
    DiscretizationInconsistency,
    InconclusiveVerification,
    InvalidInput,
    LambdaTooSmall,
    MeshMismatch,
    TooLarge,
)
from .linops import OperatorMatrix, as_operator, resolvent
from .yosida import MuGrid, yosida_distance

DIM_CAP = 4000


# --------------------------------------------------------------------------
# Chebyshev machinery


def cheb_nodes(N: int, r: float = 1.0) -> np.ndarray:
    """Gauss-Lobatto nodes on ``[-r, 0]``, starting at 0."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    theta = 0.5 * r * (x - 1.0)
    theta[0], theta[-1] = 0.0, -r
    return theta


def bary_weights(N: int) -> np.ndarray:
    w = (-1.0) ** np.arange(N + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def cheb_diff(N: int, r: float = 1.0) -> np.ndarray:
    """Differentiation matrix on :func:`cheb_nodes` (negative-sum trick)."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D * (2.0 / r)


def bary_row(nodes: np.ndarray, weights: np.ndarray, theta: float) -> np.ndarray:
    """Interpolation row ``l`` with ``p(theta) = l @ values``."""
    diff = theta - nodes
    hit = np.flatnonzero(diff == 0.0)
    row = np.zeros(len(nodes))
    if hit.size:
        row[hit[0]] = 1.0
        return row
    q = weights / diff
    return q / q.sum()


def clenshaw_curtis(n: int):
    """Nodes (descending, on [-1, 1]) and weights of the ``n+1`` point rule."""
    theta = np.pi * np.arange(n + 1) / n
    x = np.cos(theta)
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    ii = np.arange(1, n)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(n * theta[ii]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / n
    return x, w


# --------------------------------------------------------------------------
# systems and generators


@dataclass(frozen=True, eq=False)
class DelaySystem:
    """Data of ``u'(t) = A u(t) + B_point u(t - r) + sum_j W_j u(t + theta_j)``."""

    A: OperatorMatrix
    r: float
    B_point: OperatorMatrix
    B_kernel: tuple = ()

    def __post_init__(self):
        A = as_operator(self.A)
        B = as_operator(self.B_point)
        if not self.r > 0:
            raise InvalidInput("delay r must be positive")
        if B.dim != A.dim:
            raise InvalidInput("B_point and A must have the same dimension")
        atoms, seen = [], set()
        for theta, W in self.B_kernel:
            theta = float(theta)
            W = as_operator(W) if np.ndim(W) else OperatorMatrix(W * np.eye(A.dim))
            if not -self.r <= theta <= 0.0:
                raise InvalidInput(f"kernel node {theta} outside [-r, 0]")
            if theta in seen:
                raise InvalidInput(f"duplicate kernel node {theta}")
            if W.dim != A.dim:
                raise InvalidInput("kernel weight has the wrong dimension")
            seen.add(theta)
            atoms.append((theta, W))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B_point", B)
        object.__setattr__(self, "B_kernel", tuple(atoms))
        object.__setattr__(self, "r", float(self.r))

    @property
    def n(self) -> int:
        return self.A.dim

    def atoms(self) -> dict:
        """Point masses of ``B`` keyed by node, the delayed term at ``-r``."""
        out = {-self.r: self.B_point.array()}
        for theta, W in self.B_kernel:
            out[theta] = out.get(theta, 0.0) + W.array()
        return out

    def functional_norm(self) -> float:
        """``||B_point|| + sum ||W_j||``."""
        return self.B_point.norm + sum(W.norm for _, W in self.B_kernel)

    def functional_distance(self, other: DelaySystem) -> float:
        """Total variation norm of the difference of the two delay functionals."""
        a, b = self.atoms(), other.atoms()
        total = 0.0
        for theta in set(a) | set(b):
            d = np.asarray(a.get(theta, 0.0)) - np.asarray(b.get(theta, 0.0))
            if np.ndim(d):
                total += np.linalg.norm(d, 2)
        return float(total)


@dataclass(frozen=True, eq=False)
class DiscretizedGenerator:
    mesh: np.ndarray
    G: OperatorMatrix
    system: DelaySystem
    D: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.mesh) - 1

    def functional_row(self) -> np.ndarray:
        """Matrix of ``phi -> B phi`` on stacked node values (node-major)."""
        sys = self.system
        w = bary_weights(self.N)
        row = np.zeros((sys.n, sys.n * (self.N + 1)), dtype=complex)
        for theta, W in sys.atoms().items():
            row += np.kron(bary_row(self.mesh, w, theta), W)
        return row


def assemble_generator(sys: DelaySystem, N: int, dim_cap: int = DIM_CAP) -> DiscretizedGenerator:
    """Pseudospectral generator of the solution semigroup.

    State ordering is node-major: entries ``j*n:(j+1)*n`` hold ``phi(theta_j)``.
    """
    if N < 4:
        raise InvalidInput("N must be at least 4")
    n = sys.n
    if n * (N + 1) > dim_cap:
        raise TooLarge(f"generator dimension {n * (N + 1)} exceeds cap {dim_cap}")
    mesh = cheb_nodes(N, sys.r)
    D = cheb_diff(N, sys.r)
    G = np.kron(D, np.eye(n)).astype(complex)
    G[:n, :] = 0.0
    G[:n, :n] = sys.A.entries
    w = bary_weights(N)
    for theta, W in sys.atoms().items():
        G[:n, :] += np.kron(bary_row(mesh, w, theta), W)
    if not np.any(G.imag):
        G = G.real
    return DiscretizedGenerator(mesh, OperatorMatrix(G, label="delay generator"), sys, D)


def splicing_residual(gen: DiscretizedGenerator, phi: np.ndarray) -> np.ndarray:
    """``phi'(0) - A phi(0) - B phi`` for node values ``phi`` of shape (N+1, n)."""
    phi = np.asarray(phi).reshape(gen.N + 1, gen.system.n)
    dphi0 = gen.D[0] @ phi
    return dphi0 - gen.system.A.entries @ phi[0] - gen.functional_row() @ phi.reshape(-1)


# --------------------------------------------------------------------------
# resolvent by the two-operator construction


def _signed_integrals(gen: DiscretizedGenerator, lam: float, psi: np.ndarray, order: int):
    """``int_0^t exp(lam (t - s)) psi(s) ds`` at every mesh node ``t``."""
    x, wq = clenshaw_curtis(order)
    w = bary_weights(gen.N)
    out = np.zeros_like(psi, dtype=complex)
    for j, t in enumerate(gen.mesh):
        if t == 0.0:
            continue
        s = 0.5 * t * (1.0 - x)  # nodes on [t, 0]
        rows = np.array([bary_row(gen.mesh, w, si) for si in s])
        vals = np.exp(lam * (t - s))[:, None] * (rows @ psi)
        # int_0^t = -int_t^0
        out[j] = -(0.5 * abs(t)) * (wq @ vals)
    return out


def resolvent_via_F_J(gen: DiscretizedGenerator, lam: float, psi, order: int | None = None):
    """Solve ``(lam - G) phi = psi`` as ``(I - F_lam) phi = J_lam psi``.

    ``J_lam psi(t) = exp(lam t) R(lam, A) psi(0) - int_0^t exp(lam (t-s)) psi(s) ds``
    and ``F_lam phi(t) = exp(lam t) R(lam, A) B phi``.  For ``t < 0`` the
    integral is the signed one.  Returns node values of shape (N+1, n).
    """
    sys = gen.system
    n, N = sys.n, gen.N
    psi = np.asarray(psi, dtype=complex).reshape(N + 1, n)
    RA = resolvent(sys.A, lam).entries
    f_norm = np.linalg.norm(RA, 2) * sys.functional_norm()
    if f_norm >= 1.0:
        raise LambdaTooSmall(f"||R(lam, A)|| ||B|| = {f_norm:.3g} >= 1 at lam = {lam}")
    order = order or (N + 40)
    e = np.exp(lam * gen.mesh)
    J = e[:, None] * (RA @ psi[0])[None, :] - _signed_integrals(gen, lam, psi, order)
    F = np.kron(e[:, None], RA @ gen.functional_row())
    phi = np.linalg.solve(np.eye(n * (N + 1)) - F, J.reshape(-1))
    return phi.reshape(N + 1, n)


# --------------------------------------------------------------------------
# characteristic roots of scalar equations


@dataclass(frozen=True)
class CharRoot:
    lam: complex
    mode_n: int | None
    residual: float


@dataclass(frozen=True)
class Strip:
    sigma_min: float
    sigma_max: float
    omega: float


class _OnContour(Exception):
    pass


class ScalarCharacteristic:
    """``f(z) = z - c0 - sum_j beta_j exp(z theta_j)`` with ``theta_j <= 0``."""

    def __init__(self, c0: complex, atoms):
        self.c0 = complex(c0)
        self.atoms = [(float(th), complex(b)) for th, b in atoms if b != 0]

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = z - self.c0
        for th, b in self.atoms:
            out = out - b * np.exp(z * th)
        return out

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for th, b in self.atoms:
            out = out - b * th * np.exp(z * th)
        return out

    def scale(self, z):
        s = np.abs(z) + abs(self.c0)
        for th, b in self.atoms:
            s = s + abs(b) * np.abs(np.exp(z * th))
        return s

    def newton(self, z0, maxiter=60):
        z = complex(z0)
        for _ in range(maxiter):
            dz = complex(self(z)) / complex(self.deriv(z))
            z -= dz
            if not np.isfinite(z):
                return None
            if abs(dz) <= 1e-15 * max(1.0, abs(z)):
                break
        return z

    def residual(self, z) -> float:
        return float(abs(self(z)))

    # argument principle ---------------------------------------------------

    def winding(self, x0, x1, y0, y1, base=64, max_pts=1 << 16) -> int:
        corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
        pts = []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            m = max(8, int(base * abs(b - a) / max(x1 - x0, y1 - y0)))
            pts.append(a + (b - a) * np.arange(m) / m)
        z = np.concatenate(pts + [corners[:1]])
        for _ in range(30):
            f = self(z)
            if np.any(np.abs(f) <= 1e-12 * self.scale(z)):
                raise _OnContour
            step = np.angle(f[1:] / f[:-1])
            bad = np.abs(step) > 0.4
            if not bad.any():
                break
            if len(z) > max_pts:
                raise _OnContour
            mids = 0.5 * (z[:-1] + z[1:])[bad]
            z = np.insert(z, np.flatnonzero(bad) + 1, mids)
        total = step.sum() / (2 * np.pi)
        k = int(round(total))
        if abs(total - k) > 1e-3:
            raise _OnContour
        return k

    def roots_in_box(self, x0, x1, y0, y1, min_size=1e-6):
        """All roots in ``[x0, x1] x [y0, y1]`` by recursive bisection."""
        found = []
        box = self._robust_box(x0, x1, y0, y1)
        stack = [box]
        while stack:
            (x0, x1, y0, y1), count = stack.pop()
            if count == 0:
                continue
            if count == 1:
                z = self.newton(complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
                h = 1e-9 * max(1.0, abs(x1 - x0) + abs(y1 - y0))
                if z is not None and x0 - h <= z.real <= x1 + h and y0 - h <= z.imag <= y1 + h:
                    found.append(z)
                    continue
            if max(x1 - x0, y1 - y0) < min_size:
                z = self.newton(complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
                found.extend([z] * count)
                continue
            stack.extend(self._split(x0, x1, y0, y1, count))
        return found

    def _robust_box(self, x0, x1, y0, y1):
        size = max(x1 - x0, y1 - y0)
        for k in range(4):
            d = 1e-6 * size * k
            try:
                return (x0 - d, x1 + d, y0 - d, y1 + d), self.winding(x0 - d, x1 + d, y0 - d, y1 + d)
            except _OnContour:
                continue
        raise ContourFailure(f"root on the contour of box [{x0}, {x1}] x [{y0}, {y1}]")

    def _split(self, x0, x1, y0, y1, count):
        horizontal = (x1 - x0) >= (y1 - y0)
        lo, hi = (x0, x1) if horizontal else (y0, y1)
        for k in range(4):
            cut = 0.5 * (lo + hi) + 1e-6 * (hi - lo) * k * 1.618
            halves = [(x0, cut, y0, y1), (cut, x1, y0, y1)] if horizontal else \
                     [(x0, x1, y0, cut), (x0, x1, cut, y1)]
            try:
                counts = [self.winding(*h) for h in halves]
            except _OnContour:
                continue
            if sum(counts) != count:
                continue
            return list(zip(halves, counts))
        raise ContourFailure("could not split box without touching a root")


def _sorted(roots):
    return sorted(roots, key=lambda z: (-z.real, z.imag))


def default_strip(a: float, b: float, r: float, n: int) -> Strip:
    """Default search strip; roots with ``Re >= 0`` satisfy ``Re <= |b|``."""
    return Strip(-(n * n + a + abs(b) + 10.0), abs(b) + 1.0, 2 * np.pi / r * 10.0)


def char_roots_rd(a: float, b: float, r: float, n: int = 1, search: Strip | None = None):
    """Roots of ``lam + a + b exp(-lam r) = -n**2`` in a vertical strip.

    Sorted by descending real part; each root is Newton-polished.
    """
    search = search or default_strip(a, b, r, n)
    f = ScalarCharacteristic(-(a + n * n), [(-r, -b)])
    roots = f.roots_in_box(search.sigma_min, search.sigma_max, -search.omega, search.omega)
    return [CharRoot(complex(z), n, f.residual(z)) for z in _sorted(roots)]


def scalar_system_roots(sys: DelaySystem, search: Strip | None = None, mode_n=None):
    """Characteristic roots of a scalar (n = 1) delay system."""
    if sys.n != 1:
        raise InvalidInput("scalar_system_roots needs a scalar system")
    atoms = [(th, complex(W[0, 0])) for th, W in sys.atoms().items()]
    f = ScalarCharacteristic(complex(sys.A.entries[0, 0]), atoms)
    if search is None:
        # every root with Re >= -1 satisfies |z| <= |c0| + e^r sum |beta|
        bound = abs(f.c0) + np.exp(sys.r) * sum(abs(b) for _, b in f.atoms) + 1.0
        search = Strip(-1.0, bound, max(bound, 2 * np.pi / sys.r * 10.0))
    roots = f.roots_in_box(search.sigma_min, search.sigma_max, -search.omega, search.omega)
    return [CharRoot(complex(z), mode_n, f.residual(z)) for z in _sorted(roots)]


# --------------------------------------------------------------------------
# dichotomy of delay systems


def _is_diagonal(m: np.ndarray) -> bool:
    return not np.any(m - np.diag(np.diag(m)))


def _mode_system(sys: DelaySystem, k: int) -> DelaySystem:
    kernel = tuple((th, W.entries[k:k + 1, k:k + 1]) for th, W in sys.B_kernel)
    return DelaySystem(OperatorMatrix(sys.A.entries[k:k + 1, k:k + 1]), sys.r,
                       OperatorMatrix(sys.B_point.entries[k:k + 1, k:k + 1]), kernel)


def dichotomy_of_delay_system(sys: DelaySystem, modes=None, N: int = 20,
                              axis_tol: float = 1e-8) -> DichotomyReport:
    """Hyperbolicity of the solution semigroup of a delay system.

    With ``modes`` (one mode label per state component) the system must be
    diagonal; each mode is discretized and tested separately and the
    verdict is cross-validated against an imaginary-axis scan of that
    mode's characteristic roots.  Without ``modes`` the full generator is
    tested directly.
    """
    if modes is None:
        return check_hyperbolic(assemble_generator(sys, N).G)
    modes = list(modes)
    if len(modes) != sys.n:
        raise InvalidInput("need one mode label per state component")
    mats = [sys.A.entries, sys.B_point.entries] + [W.entries for _, W in sys.B_kernel]
    if not all(_is_diagonal(m) for m in mats):
        raise InvalidInput("modal analysis needs diagonal A, B_point and kernel weights")

    n, size = sys.n, N + 1
    reports, witnesses = [], []
    for k, label in enumerate(modes):
        sub = _mode_system(sys, k)
        rep = check_hyperbolic(assemble_generator(sub, N).G)
        roots = scalar_system_roots(sub, mode_n=label)
        axis = [z for z in roots if abs(z.lam.real) <= axis_tol]
        if rep.hyperbolic != (not axis):
            raise DiscretizationInconsistency(
                f"mode {label}: discretized verdict {rep.hyperbolic}, root scan found "
                f"{len(axis)} axis roots", rep, roots[:5])
        reports.append(rep)
        witnesses.append({"mode": label, "hyperbolic": rep.hyperbolic, "gap": rep.gap,
                          "rightmost_root": roots[0].lam if roots else None})

    hyperbolic = all(r.hyperbolic for r in reports)
    gap = min(r.gap for r in reports)
    if not hyperbolic:
        rep = DichotomyReport(False, gap, None, None, None, [])
    else:
        # modes decouple: scatter each block into the node-major ordering
        P = np.zeros((n * size, n * size), dtype=complex)
        for k, r in enumerate(reports):
            idx = np.arange(size) * n + k
            P[np.ix_(idx, idx)] = r.projection.entries
        rep = DichotomyReport(True, gap, OperatorMatrix(P),
                              max(r.N for r in reports), min(r.alpha for r in reports),
                              reports[0].t_grid_checked, sum(r.rank for r in reports),
                              max(r.riesz_points for r in reports),
                              max(r.riesz_schur_discrepancy for r in reports))
    rep.modes = witnesses
    return rep


# --------------------------------------------------------------------------
# Yosida distance between generators


@dataclass
class GeneratorDistanceReport:
    dY_G: float
    dY_A: float
    dY_B: float
    bound_holds: bool
    tol: float

    @property
    def rhs(self) -> float:
        return 2.0 * self.dY_B + self.dY_A

    def to_dict(self) -> dict:
        return {"dY_G": self.dY_G, "dY_A": self.dY_A, "dY_B": self.dY_B,
                "rhs": self.rhs, "tol": self.tol, "bound_holds": self.bound_holds}


def generator_yosida_distance(gen0: DiscretizedGenerator, gen1: DiscretizedGenerator,
                              cfg: MuGrid | None = None, strict: bool = True
                              ) -> GeneratorDistanceReport:
    """Check ``d_Y(G0, G1) <= 2 d_Y(B0, B1) + d_Y(A0, A1)``.

    ``d_Y(B0, B1)`` is the norm of the difference of the two delay
    functionals, since they are bounded maps from the history space.
    """
    if gen0.system.n != gen1.system.n or gen0.mesh.shape != gen1.mesh.shape \
            or not np.allclose(gen0.mesh, gen1.mesh, rtol=0, atol=1e-14):
        raise MeshMismatch("generators do not share a mesh and state dimension")
    eG = yosida_distance(gen0.G, gen1.G, cfg)
    eA = yosida_distance(gen0.system.A, gen1.system.A, cfg)
    if strict and not (eG.converged and eA.converged):
        raise InconclusiveVerification("Yosida distance estimate did not converge")
    dB = gen0.system.functional_distance(gen1.system)
    rhs = 2.0 * dB + eA.value
    tol = 1e-3 * (1.0 + rhs)
    return GeneratorDistanceReport(eG.value, eA.value, dB, eG.value <= rhs + tol, tol)
