"""Experiment orchestration: perturbation sweeps, the domain demo and
regression baselines.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import serialize
from .delay import (
    DelaySystem,
    assemble_generator,
    dichotomy_of_delay_system,
    generator_yosida_distance,
    scalar_system_roots,
    splicing_residual,
)
from .dichotomy import check_hyperbolic, persistence_margin, verify_persistence
from .errors import BaseNotHyperbolic, InvalidInput
from .linops import OperatorMatrix, expm_array
from .models import (
    PerturbationConfig,
    ReactionDiffusionConfig,
    build_perturbed,
    build_unperturbed,
    check_functional_perturbation,
    check_relative_boundedness,
)
from .yosida import (
    class_P_constant,
    common_growth_bound,
    semigroup_difference_bound,
    verify_bounded_perturbation_bound,
    yosida_distance,
)

KNOBS = ("eps1", "eps3_sup", "eps5", "var_eps4", "b_shift", "A_shift_norm")
EPS3_SAMPLES = 65


def thread_count() -> int:
    """Worker cap from ``YOSIDA_LAB_THREADS`` (default 1)."""
    raw = os.environ.get("YOSIDA_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInput(f"YOSIDA_LAB_THREADS must be an integer, got {raw!r}") from None


def ordered_map(fn, items, threads: int | None = None) -> list:
    """``map`` that may run in threads but always returns results in input order."""
    threads = thread_count() if threads is None else threads
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter family of perturbations of a reaction-diffusion base.

    ``eps3_sup`` scales a seeded smooth profile with unit sup-norm and
    ``A_shift_norm`` a seeded direction of unit spectral norm; the other
    knobs are deterministic.
    """

    base: ReactionDiffusionConfig
    knob: str
    values: tuple
    N: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.knob not in KNOBS:
            raise InvalidInput(f"knob must be one of {KNOBS}")
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0 or np.any(v < 0) or np.any(np.diff(v) <= 0):
            raise InvalidInput("sweep values must be non-negative and strictly increasing")
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    @property
    def example(self) -> str:
        return "delayed_gradient" if self.knob == "eps5" else "instantaneous"

    def to_dict(self) -> dict:
        return {"base": self.base.__dict__, "knob": self.knob, "values": list(self.values),
                "N": self.N, "seed": self.seed}


@dataclass
class SweepResult:
    """Rows in knob order.

    ``breakpoint`` is the first knob value at which the dichotomy is lost or
    changes type (the stable rank differs from the base), since on a grid a
    crossing of the unit circle is seen as a change of rank.
    """

    rows: list
    breakpoint: float | None
    margin: float
    base_stable_rank: int
    spec: SweepSpec

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "seed": self.spec.seed, "margin": self.margin,
                "base_stable_rank": self.base_stable_rank, "breakpoint": self.breakpoint,
                "rows": self.rows}


def eps3_profile(seed: int, n: int = EPS3_SAMPLES) -> np.ndarray:
    """Smooth random samples on ``[0, pi]`` with max absolute value 1."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, np.pi, n)
    k = np.arange(0, 7)
    f = (rng.standard_normal(len(k)) / (1.0 + k) ** 2) @ np.cos(np.outer(k, x))
    return f / np.max(np.abs(f))


def shift_direction(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((n, n))
    return C / np.linalg.norm(C, 2)


def sweep_system(spec: SweepSpec, value: float) -> DelaySystem:
    """The perturbed delay system at one knob value."""
    base, knob = spec.base, spec.knob
    if knob == "b_shift":
        return build_unperturbed(replace(base, b=base.b + value))
    if knob == "A_shift_norm":
        sys0 = build_unperturbed(base)
        A1 = sys0.A.array() + value * shift_direction(spec.seed, base.dim)
        return DelaySystem(OperatorMatrix(A1), base.r, sys0.B_point)
    if knob == "eps1":
        pert = PerturbationConfig(eps1=value)
    elif knob == "eps3_sup":
        pert = PerturbationConfig(eps3_samples=tuple(value * eps3_profile(spec.seed)))
    elif knob == "eps5":
        pert = PerturbationConfig(eps5=value)
    else:
        pert = PerturbationConfig(eps4_atoms=((-base.r / 2, value),) if value else ())
    return build_perturbed(base, pert, spec.example)


def run_sweep(spec: SweepSpec, threads: int | None = None) -> SweepResult:
    """Distances, dichotomy verdict and persistence prediction per knob value."""
    sys0 = build_unperturbed(spec.base)
    gen0 = assemble_generator(sys0, spec.N)
    base = check_hyperbolic(gen0.G, quantify=False)
    if not base.hyperbolic:
        raise BaseNotHyperbolic(f"base system is not hyperbolic (gap {base.gap:.3g})")
    margin = persistence_margin(gen0.G)
    T0 = expm_array(gen0.G.array())

    def row(value):
        sys1 = sweep_system(spec, value)
        gen1 = assemble_generator(sys1, spec.N)
        eG = yosida_distance(gen0.G, gen1.G)
        rep = check_hyperbolic(gen1.G, quantify=False)
        d_T1 = float(np.linalg.norm(T0 - expm_array(gen1.G.array()), 2))
        return {
            "knob_value": value,
            "dY_A": yosida_distance(sys0.A, sys1.A).value,
            "dY_B": sys0.functional_distance(sys1),
            "dY_G": eG.value,
            "dY_G_converged": eG.converged,
            "gap": rep.gap,
            "hyperbolic": rep.hyperbolic,
            "stable_rank": rep.rank if rep.hyperbolic else None,
            "d_T1": d_T1,
            "predicted_persist": d_T1 < margin,
        }

    rows = ordered_map(row, spec.values, threads)
    brk = None
    for r in rows:
        if not r["hyperbolic"] or r["stable_rank"] != base.rank:
            brk = r["knob_value"]
            break
    return SweepResult(rows, brk, margin, base.rank, spec)


# --------------------------------------------------------------------------
# domain demo


@dataclass
class DomainReport:
    b0: float
    b1: float
    residual0: float
    residual1: float
    N: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def demo_domain_noninclusion(b0: float, b1: float, N: int = 16) -> DomainReport:
    """Splicing residuals of ``phi(t) = 1 + (1 + t) b0`` for ``x' = b_i x(t - 1)``.

    ``phi`` lies in the domain of the first generator, so its residual
    vanishes; for the second the residual is ``b0 - b1``.  Generators whose
    delay functionals differ therefore have different domains.
    """
    res = []
    for b in (b0, b1):
        sys = DelaySystem(OperatorMatrix([[0.0]]), 1.0, OperatorMatrix([[b]]))
        gen = assemble_generator(sys, N)
        phi = 1.0 + (1.0 + gen.mesh) * b0
        res.append(float(np.abs(splicing_residual(gen, phi[:, None])).max()))
    return DomainReport(float(b0), float(b1), res[0], res[1], N)


# --------------------------------------------------------------------------
# regression baselines


def _random_pair(rng, dim):
    A = rng.standard_normal((dim, dim))
    B = A + 0.5 * rng.standard_normal((dim, dim))
    return A, B


def _reg_operators(seed):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(12):
        A, B = _random_pair(rng, int(rng.integers(2, 9)))
        est = yosida_distance(A, B)
        pairs.append({"value": est.value, "norm_diff": float(np.linalg.norm(A - B, 2)),
                      "converged": est.converged})
    bounded = []
    for _ in range(6):
        n = int(rng.integers(2, 6))
        A = -np.eye(n) + np.triu(rng.standard_normal((n, n)) * 3.0, 1)
        C = 0.3 * rng.standard_normal((n, n))
        bounded.append(verify_bounded_perturbation_bound(A, C).to_dict())
    diff = []
    for _ in range(6):
        A, B = _random_pair(rng, int(rng.integers(2, 5)))
        M, om = common_growth_bound(A, B, 2.0)
        diff.append(semigroup_difference_bound(A, B, (0.25, 0.5, 1.0, 2.0), M, om).to_dict())
    return {"seed": seed, "yosida_distance": pairs, "bounded_perturbation": bounded,
            "class_P_closed_form": class_P_constant(-np.eye(1), np.eye(1)),
            "difference_bound": diff}


def _reg_dichotomy(seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(10):
        n = int(rng.integers(2, 6))
        G = rng.standard_normal((n, n))
        rep = check_hyperbolic(G)
        item = {"hyperbolic": rep.hyperbolic, "gap": rep.gap,
                "eigenvalues": sorted(np.linalg.eigvals(G).tolist(),
                                      key=lambda z: (round(z.real, 9), round(z.imag, 9)))}
        if rep.hyperbolic:
            item.update(alpha=rep.alpha, N=rep.N, rank=rep.rank,
                        margin=persistence_margin(G))
        out.append(item)
    G0 = np.diag([-1.0, 1.0])
    return {"seed": seed, "generators": out,
            "persistence": [verify_persistence(G0, G0 - np.diag([0.0, d])).to_dict()
                            for d in (0.5, 1.0, 2.0)]}


def _reg_delay(seed):
    rng = np.random.default_rng(seed)
    pairs = []
    for N in (8, 16, 24):
        n = int(rng.integers(1, 3))
        A0 = rng.standard_normal((n, n))
        B0 = rng.standard_normal((n, n))
        s0 = DelaySystem(A0, 1.0, B0)
        s1 = DelaySystem(A0 + 0.05 * rng.standard_normal((n, n)), 1.0,
                         B0 + 0.05 * rng.standard_normal((n, n)),
                         ((-0.3, 0.05 * rng.standard_normal((n, n))),))
        pairs.append(generator_yosida_distance(assemble_generator(s0, N),
                                               assemble_generator(s1, N)).to_dict())
    scalar = DelaySystem([[0.0]], 1.0, [[0.5]])
    eigs = np.linalg.eigvals(assemble_generator(scalar, 20).G.array())
    discrete = eigs[np.argmax(eigs.real)]
    roots = scalar_system_roots(scalar)
    return {"seed": seed, "generator_bound": pairs,
            "rightmost_root_discrete": complex(discrete),
            "rightmost_root_analytic": roots[0].lam}


def assumption_grid(N: int = 20, n_max: int = 10) -> list:
    """Dichotomy verdicts for the sufficient-condition grid of the model."""
    out = []
    for a in (0.5, 1.0, 2.0):
        for r in (0.5, 1.0, 2.0):
            for b in (0.1, 0.5 / r, 0.9 / r):
                cfg = ReactionDiffusionConfig(a, b, r, n_max)
                rep = dichotomy_of_delay_system(build_unperturbed(cfg),
                                                modes=range(1, n_max + 1), N=N)
                out.append({"a": a, "b": b, "r": r, "hyperbolic": rep.hyperbolic,
                            "gap": rep.gap,
                            "rightmost_root": rep.modes[0]["rightmost_root"]})
    return out


def _reg_models(seed):
    rng = np.random.default_rng(seed)
    fd = ReactionDiffusionConfig(1.0, 0.5, 1.0, spatial_disc="fd", m=48)
    c62 = []
    for _ in range(3):
        pert = PerturbationConfig(eps1=float(rng.uniform(0, 0.2)),
                                  eps2=float(rng.uniform(-0.2, 0.2)),
                                  eps3_samples=tuple(rng.uniform(-0.3, 0.3, 9)))
        c62.append(check_relative_boundedness(fd, pert, seed=seed).to_dict())
    c64 = []
    for _ in range(3):
        pert = PerturbationConfig(eps5=float(rng.uniform(0, 0.1)),
                                  eps4_atoms=((-0.5, float(rng.uniform(0, 0.05))),))
        c64.append(check_functional_perturbation(
            ReactionDiffusionConfig(1.0, 0.5, 1.0, 6), pert).to_dict())
    return {"seed": seed, "relative_bound": c62, "functional_bound": c64,
            "assumption_grid": assumption_grid(),
            "domain_demo": [demo_domain_noninclusion(0.3, 0.5).to_dict(),
                            demo_domain_noninclusion(1.0, 0.0).to_dict()]}


def _reg_sweep(seed):
    spec = SweepSpec(ReactionDiffusionConfig(1.0, 0.5, 1.0, 3), "b_shift",
                     tuple(np.linspace(0.0, 3.0, 7)), N=12, seed=seed)
    return run_sweep(spec).to_dict()


REGRESSION_CASES = {
    "operators": _reg_operators,
    "dichotomy": _reg_dichotomy,
    "delay": _reg_delay,
    "models": _reg_models,
    "sweep": _reg_sweep,
}

_ABS_KEYS = ("eig", "root", "lam")


def compare_fields(base, cur, path: str = "", rel: float = 1e-6, eig_abs: float = 1e-8):
    """Field-level differences between two JSON trees.

    Eigenvalue-like fields (names containing ``eig``, ``root`` or ``lam``)
    are compared absolutely, other numbers relatively.
    """
    diffs = []
    if isinstance(base, dict) and isinstance(cur, dict):
        for k in sorted(set(base) | set(cur)):
            p = f"{path}.{k}" if path else k
            if k not in base or k not in cur:
                diffs.append((p, "field missing on one side"))
            else:
                diffs += compare_fields(base[k], cur[k], p, rel, eig_abs)
        return diffs
    if isinstance(base, list) and isinstance(cur, list):
        if len(base) != len(cur):
            return [(path, f"length {len(base)} != {len(cur)}")]
        for i, (x, y) in enumerate(zip(base, cur)):
            diffs += compare_fields(x, y, f"{path}[{i}]", rel, eig_abs)
        return diffs
    num = (int, float)
    if isinstance(base, num) and isinstance(cur, num) \
            and not isinstance(base, bool) and not isinstance(cur, bool):
        if any(s in path.lower() for s in _ABS_KEYS):
            ok = abs(base - cur) <= eig_abs
        else:
            ok = abs(base - cur) <= rel * max(abs(base), abs(cur)) + 1e-12
        return [] if ok else [(path, f"{base!r} != {cur!r}")]
    if base != cur:
        return [(path, f"{base!r} != {cur!r}")]
    return []


@dataclass
class RegressionSummary:
    passed: bool
    blessed: bool
    mismatches: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "blessed": self.blessed, "files": self.files,
                "mismatches": [{"field": f, "detail": d} for f, d in self.mismatches]}


def regression_suite(baseline_dir, bless: bool = False, out_dir=None, seed: int = 0,
                     cases=None) -> RegressionSummary:
    """Recompute the regression cases and compare them with stored baselines.

    With ``bless`` the baselines are (re)written.  ``out_dir`` receives the
    freshly computed JSON files.
    """
    baseline_dir = Path(baseline_dir)
    names = list(cases or REGRESSION_CASES)
    if not bless:
        missing = [n for n in names if not (baseline_dir / f"{n}.json").exists()]
        if missing:
            raise InvalidInput(f"no baseline for {missing} in {baseline_dir}; run with --bless")
    texts = dict(zip(names, ordered_map(lambda n: serialize.dumps(REGRESSION_CASES[n](seed)),
                                        names)))
    for target in [d for d in (out_dir, baseline_dir if bless else None) if d is not None]:
        Path(target).mkdir(parents=True, exist_ok=True)
        for n, text in texts.items():
            (Path(target) / f"{n}.json").write_text(text)
    files = [f"{n}.json" for n in names]
    if bless:
        return RegressionSummary(True, True, [], files)
    mismatches = []
    for n in names:
        base = json.loads((baseline_dir / f"{n}.json").read_text())
        cur = json.loads(texts[n])
        mismatches += [(f"{n}.json:{p}", d) for p, d in compare_fields(base, cur)]
    return RegressionSummary(not mismatches, False, mismatches, files)
