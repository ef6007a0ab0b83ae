"""``yosida-lab`` command line front end.

Exit codes: 0 success, 2 failed verification, 3 numerical inconclusiveness,
4 bad input.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import serialize
from .delay import (
    DelaySystem,
    assemble_generator,
    char_roots_rd,
    dichotomy_of_delay_system,
    generator_yosida_distance,
    scalar_system_roots,
)
from .dichotomy import check_hyperbolic
from .errors import InvalidInput, YosidaLabError
from .harness import SweepSpec, demo_domain_noninclusion, regression_suite, run_sweep
from .linops import load_matrix, to_json_dict
from .models import (
    PerturbationConfig,
    ReactionDiffusionConfig,
    build_perturbed,
    check_functional_perturbation,
    check_relative_boundedness,
)
from .yosida import MuGrid, yosida_distance

EXIT_OK, EXIT_FAIL = 0, 2


def _emit(payload, path) -> None:
    text = serialize.dumps(payload)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> tuple[dict, Path]:
    if not args.config:
        raise InvalidInput("this command needs --config")
    return serialize.load_config(args.config), Path(args.config).resolve().parent


def _matrix(value, root: Path) -> np.ndarray:
    if isinstance(value, str):
        return load_matrix(root / value).array()
    return np.atleast_2d(np.asarray(value, dtype=float))


def _need(cfg: dict, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise InvalidInput(f"config is missing {missing}")


# --------------------------------------------------------------------------
# config -> objects


def delay_system_from_config(cfg: dict, root: Path = Path(".")):
    """Delay system and mode labels from a config mapping.

    Either ``A``/``B`` matrices (inline or file names) or the modal model
    ``a``, ``b`` and ``modes`` (an int ``n_max`` or a list of mode numbers).
    """
    _need(cfg, "r")
    kernel = tuple((float(k["theta"]), _matrix(k["weight"], root) if not
                    isinstance(k["weight"], (int, float)) else float(k["weight"]))
                   for k in cfg.get("kernel", ()))
    if "A" in cfg:
        _need(cfg, "B")
        return DelaySystem(_matrix(cfg["A"], root), float(cfg["r"]),
                           _matrix(cfg["B"], root), kernel), None
    _need(cfg, "a", "b")
    modes = cfg.get("modes", 1)
    modes = list(range(1, int(modes) + 1)) if isinstance(modes, int) else [int(m) for m in modes]
    n2 = np.array(modes, dtype=float) ** 2
    A = np.diag(-n2 - float(cfg["a"]))
    B = -float(cfg["b"]) * np.eye(len(modes))
    return DelaySystem(A, float(cfg["r"]), B, kernel), modes


def model_from_config(cfg: dict):
    _need(cfg, "a", "b", "r")
    if "m" in cfg:
        rd = ReactionDiffusionConfig(float(cfg["a"]), float(cfg["b"]), float(cfg["r"]),
                                     spatial_disc="fd", m=int(cfg["m"]))
    else:
        rd = ReactionDiffusionConfig(float(cfg["a"]), float(cfg["b"]), float(cfg["r"]),
                                     n_modes=int(cfg.get("n_modes", 5)))
    samples = cfg.get("eps3_samples")
    pert = PerturbationConfig(
        eps1=float(cfg.get("eps1", 0.0)), eps2=float(cfg.get("eps2", 0.0)),
        eps3_const=float(cfg.get("eps3_const", 0.0)),
        eps3_samples=None if samples is None else tuple(float(s) for s in samples),
        eps4_atoms=tuple((float(a["theta"]), float(a["weight"]))
                         for a in cfg.get("eps4_atoms", ())),
        eps5=float(cfg.get("eps5", 0.0)))
    return rd, pert, cfg.get("example", "instantaneous")


def sweep_from_config(cfg: dict, seed=None) -> SweepSpec:
    _need(cfg, "knob", "values")
    rd, _, _ = model_from_config(cfg)
    values = cfg["values"]
    if isinstance(values, dict):
        values = np.linspace(float(values["start"]), float(values["stop"]), int(values["num"]))
    return SweepSpec(rd, cfg["knob"], tuple(values), N=int(cfg.get("N", 12)),
                     seed=int(cfg.get("seed", 0) if seed is None else seed))


# --------------------------------------------------------------------------
# commands


def cmd_ydist(args) -> int:
    try:
        n, decades = args.grid.split(",")
        grid = MuGrid(n=int(n), decades=float(decades))
    except ValueError:
        raise InvalidInput(f"--grid expects 'points,decades', got {args.grid!r}") from None
    est = yosida_distance(load_matrix(args.a), load_matrix(args.b), grid)
    _emit(est, args.json)
    return EXIT_OK if est.converged else 3


def cmd_dicho(args) -> int:
    rep = check_hyperbolic(load_matrix(args.gen))
    _emit(rep, args.json)
    return EXIT_OK


def cmd_delay(args) -> int:
    cfg, root = _config(args)
    sys0, modes = delay_system_from_config(cfg, root)
    N = int(cfg.get("N", 20))
    if args.action == "roots":
        if modes is not None and not sys0.B_kernel:
            out = [{"mode": n, "roots": char_roots_rd(float(cfg["a"]), float(cfg["b"]),
                                                       sys0.r, n)} for n in modes]
        elif sys0.n == 1:
            out = [{"mode": None, "roots": scalar_system_roots(sys0)}]
        else:
            raise InvalidInput("roots need a scalar or modal system")
        _emit({"modes": [{"mode": o["mode"], "roots": [
            {"lam": z.lam, "residual": z.residual} for z in o["roots"]]} for o in out]},
            args.json)
        return EXIT_OK
    if args.action == "dicho":
        _emit(dichotomy_of_delay_system(sys0, modes, N), args.json)
        return EXIT_OK
    if "perturbed" not in cfg:
        raise InvalidInput("delay ydist needs a [perturbed] table")
    sys1, _ = delay_system_from_config({**cfg, **cfg["perturbed"]}, root)
    rep = generator_yosida_distance(assemble_generator(sys0, N), assemble_generator(sys1, N))
    _emit(rep, args.json)
    return EXIT_OK if rep.bound_holds else EXIT_FAIL


def cmd_model(args) -> int:
    cfg, _ = _config(args)
    rd, pert, example = model_from_config(cfg)
    if args.action == "build":
        s = build_perturbed(rd, pert, example)
        _emit({"A": to_json_dict(s.A), "B_point": to_json_dict(s.B_point), "r": s.r,
               "B_kernel": [{"theta": th, "weight": to_json_dict(W)} for th, W in s.B_kernel]},
              args.json)
        return EXIT_OK
    if args.action == "check62":
        if rd.spatial_disc != "fd":
            rd = replace(rd, spatial_disc="fd")
        rep = check_relative_boundedness(rd, pert, seed=args.seed)
    else:
        rep = check_functional_perturbation(rd, pert)
    _emit(rep, args.json)
    return EXIT_OK if rep.holds else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg, _ = _config(args)
    res = run_sweep(sweep_from_config(cfg, args.seed_given))
    if args.csv:
        serialize.write_csv(args.csv, res.rows)
    if args.json or not args.csv:
        _emit(res, args.json)
    return EXIT_OK


def cmd_demo_domain(args) -> int:
    _emit(demo_domain_noninclusion(args.b0, args.b1, args.N), args.json)
    return EXIT_OK


def cmd_regress(args) -> int:
    summary = regression_suite(args.baseline, bless=args.bless, out_dir=args.out,
                               seed=args.seed)
    _emit(summary, args.json)
    if not summary.passed:
        for f, d in summary.mismatches:
            print(f"mismatch {f}: {d}", file=sys.stderr)
    return EXIT_OK if summary.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="yosida-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config file")
    common.add_argument("--json", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ydist", parents=[common], help="Yosida distance of two matrices")
    s.add_argument("--a", required=True, help="matrix file (JSON or text)")
    s.add_argument("--b", required=True, help="matrix file (JSON or text)")
    s.add_argument("--grid", default="64,8", help="mu-grid as 'points,decades'")
    s.set_defaults(fn=cmd_ydist)

    s = sub.add_parser("dicho", parents=[common], help="dichotomy of exp(tG)")
    s.add_argument("--gen", required=True, help="generator matrix file")
    s.set_defaults(fn=cmd_dicho)

    s = sub.add_parser("delay", parents=[common], help="delay-system tools")
    s.add_argument("action", choices=("roots", "dicho", "ydist"))
    s.set_defaults(fn=cmd_delay)

    s = sub.add_parser("model", parents=[common], help="reaction-diffusion model tools")
    s.add_argument("action", choices=("build", "check62", "check64"))
    s.set_defaults(fn=cmd_model)

    s = sub.add_parser("sweep", parents=[common], help="perturbation sweep")
    s.add_argument("--csv", help="write rows as CSV")
    s.set_defaults(fn=cmd_sweep)

    s = sub.add_parser("demo-domain", parents=[common], help="domain non-inclusion demo")
    s.add_argument("--b0", type=float, default=0.3)
    s.add_argument("--b1", type=float, default=0.5)
    s.add_argument("--N", type=int, default=16)
    s.set_defaults(fn=cmd_demo_domain)

    s = sub.add_parser("regress", parents=[common], help="compare against baselines")
    s.add_argument("--baseline", required=True, help="baseline directory")
    s.add_argument("--bless", action="store_true", help="(re)write the baselines")
    s.add_argument("--out", help="directory for the freshly computed JSON")
    s.set_defaults(fn=cmd_regress)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.seed_given = args.seed
    if args.seed is None:
        args.seed = 0
    try:
        return args.fn(args)
    except YosidaLabError as exc:
        print(f"yosida-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"yosida-lab: bad input: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
