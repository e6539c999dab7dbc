"""
Command-line front end.

    lagoc solve      --config run.json --out results/
    lagoc conjugate  --problem min_effort_beam --out results/
    lagoc check      --config lq.json --out results/

A config is one JSON document::

    {
      "problem": "forced_pendulum",            # or "lq": {"Q1": [[...]], ...}
      "boundary": {"q0": [1], "v0": [0], "qT": [0], "vT": [0]},
      "T": 2.0,
      "integrator": {"method": "DP45", "abs_tol": 1e-10, "rel_tol": 1e-10},
      "shooting": {"z0": [0, 0], "tol": 1e-9, "max_iter": 30},
      "conjugate": {"t_skip": null, "n_scan": 2000, "tol_t": 1e-8},
      "output": {"n_samples": 2001}
    }

Exit codes: 0 success, 1 configuration or runtime error, 2 shooting did not
converge (``solve`` only; the summary is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .checks import run_all
from .conjugate import ASSUMPTIONS, optimality_verdict
from .control import legendre_check
from .errors import LagocError, NoConvergence
from .lq import LQProblem, kalman_check, to_generic
from .numerics import IntegratorOptions
from .problem import BoundaryData, validate
from .registry import REGISTRY, get_problem
from .shooting import ShootingOptions, solve

log = logging.getLogger("lagoc")

LQ_KEYS = ("Q1", "Q2", "R", "A1", "A2", "B")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: Optional[str] = None
    lq: Optional[dict] = None
    boundary: Optional[dict] = None
    T: Optional[float] = None
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    z0: Optional[list] = None
    shooting: dict = field(default_factory=dict)
    t_skip: Optional[float] = None
    n_scan: int = 2000
    tol_t: float = 1e-8
    n_samples: int = 2001


def _positive(name, value):
    if value is None:
        return None
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number") from None
    if not np.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be positive")
    return value


def parse_config(doc: dict, problem_override: Optional[str] = None, require_T: bool = True) -> RunConfig:
    """Validate a decoded JSON config into a :class:`RunConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {"problem", "lq", "boundary", "T", "integrator", "shooting", "conjugate", "output"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = RunConfig()
    if problem_override is not None:
        cfg.problem = problem_override
    else:
        cfg.problem, cfg.lq = doc.get("problem"), doc.get("lq")
        if (cfg.problem is None) == (cfg.lq is None):
            raise ConfigError("exactly one of 'problem' and 'lq' must be given")
    if cfg.problem is not None and cfg.problem not in REGISTRY:
        raise ConfigError(f"unknown problem {cfg.problem!r}; known: {', '.join(sorted(REGISTRY))}")
    if cfg.lq is not None:
        missing = [k for k in LQ_KEYS if k not in cfg.lq]
        if missing:
            raise ConfigError(f"lq is missing {', '.join(missing)}")
        if "boundary" not in doc:
            raise ConfigError("an lq problem needs explicit boundary data")

    cfg.boundary = doc.get("boundary")
    if cfg.boundary is not None:
        missing = [k for k in ("q0", "v0", "qT", "vT") if k not in cfg.boundary]
        if missing:
            raise ConfigError(f"boundary is missing {', '.join(missing)}")
    if "T" not in doc and require_T:
        raise ConfigError("horizon 'T' is required")
    cfg.T = _positive("T", doc.get("T"))

    integ = dict(doc.get("integrator") or {})
    try:
        cfg.integrator = IntegratorOptions(
            integ.get("method", "DP45"),
            _positive("integrator.abs_tol", integ.get("abs_tol", 1e-10)),
            _positive("integrator.rel_tol", integ.get("rel_tol", 1e-10)),
            _positive("integrator.h_fixed", integ.get("h_fixed")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    shoot = dict(doc.get("shooting") or {})
    cfg.z0 = shoot.pop("z0", None)
    if "tol" in shoot:
        shoot["tol"] = _positive("shooting.tol", shoot["tol"])
    cfg.shooting = shoot

    conj = dict(doc.get("conjugate") or {})
    cfg.t_skip = _positive("conjugate.t_skip", conj.get("t_skip"))
    cfg.n_scan = int(conj.get("n_scan", 2000))
    cfg.tol_t = _positive("conjugate.tol_t", conj.get("tol_t", 1e-8))
    if cfg.n_scan < 2:
        raise ConfigError("conjugate.n_scan must be at least 2")
    cfg.n_samples = int((doc.get("output") or {}).get("n_samples", 2001))
    if cfg.n_samples < 2:
        raise ConfigError("output.n_samples must be at least 2")
    return cfg


def build_problem(cfg: RunConfig):
    """``(problem, lq_or_None, notes)`` for the configured source."""
    boundary = None
    if cfg.boundary is not None:
        b = cfg.boundary
        T = cfg.T if cfg.T is not None else 1.0
        try:
            boundary = BoundaryData(b["q0"], b["v0"], b["qT"], b["vT"], T)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad boundary data: {exc}") from None
    if cfg.lq is not None:
        try:
            lq = LQProblem(*(cfg.lq[k] for k in LQ_KEYS), boundary)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad lq problem: {exc}") from None
        p = to_generic(lq, "lq")
    else:
        p = get_problem(cfg.problem, boundary)
        lq = p.meta.get("lq")
        if cfg.T is not None and boundary is None:
            p = p.with_boundary(p.boundary.replace(T=cfg.T))
            if lq is not None:
                lq = lq.with_boundary(p.boundary)
    report = validate(p)
    if report.violations:
        raise ConfigError("; ".join(report.violations))
    notes = list(lq.notes) if lq is not None else []
    return p, lq, notes


def _shooting_options(cfg: RunConfig) -> ShootingOptions:
    try:
        return ShootingOptions(integrator=cfg.integrator, n_samples=cfg.n_samples, **cfg.shooting)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad shooting options: {exc}") from None


def _solve(p, cfg: RunConfig):
    try:
        return solve(p, cfg.z0, _shooting_options(cfg))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def write_json(path: Path, obj) -> None:
    # floats use Python's shortest round-trip repr, which is lossless
    path.write_text(json.dumps(obj, indent=2, allow_nan=True) + "\n")


def write_csv(path: Path, header: list, rows: np.ndarray) -> None:
    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def _labels(prefix, n):
    return [f"{prefix}{i + 1}" for i in range(n)]


def extremal_table(p, extremal, n: int):
    t, states, controls = extremal.sample(n)
    nq = p.nq
    header = ["t", *_labels("q", nq), *_labels("qdot", nq), *_labels("kappa", nq),
              *_labels("kappadot", nq), *_labels("u", p.m)]
    return header, np.column_stack([t, states, controls])


def _floats(a):
    return None if a is None else [float(x) for x in np.ravel(a)]


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    p, _, notes = build_problem(cfg)
    log.info("solving %s on [0, %g]", p.name, p.T)
    summary = {"problem": p.name, "T": p.T, "assumptions": ASSUMPTIONS, "notes": notes}
    try:
        ext = _solve(p, cfg)
    except NoConvergence as exc:
        summary.update(status="no-convergence", message=str(exc), z=_floats(exc.best),
                       residual=exc.residual if exc.residual is None else float(exc.residual),
                       residual_history=[float(r) for r in exc.history])
        write_json(out / "summary.json", summary)
        log.error("shooting did not converge: %s", exc)
        return 2
    header, rows = extremal_table(p, ext, max(cfg.n_samples, 1000))
    write_csv(out / "extremal.csv", header, rows)
    legendre = legendre_check(p, ext)
    summary.update(status="converged", z=_floats(ext.z), J=float(ext.J), residual=float(ext.residual),
                   iterations=int(ext.iterations), residual_history=[float(r) for r in ext.residual_history],
                   legendre=legendre.verdict, legendre_min=legendre.overall_min)
    write_json(out / "summary.json", summary)
    log.info("converged in %d iterations, J = %.12g", ext.iterations, ext.J)
    return 0


def cmd_conjugate(cfg: RunConfig, out: Path) -> int:
    p, _, notes = build_problem(cfg)
    log.info("solving %s on [0, %g]", p.name, p.T)
    ext = _solve(p, cfg)
    log.info("propagating Jacobi bundles")
    report = optimality_verdict(p, ext, cfg.t_skip, cfg.n_scan, cfg.tol_t, n_points=max(cfg.n_samples, 1000))
    doc = {"problem": p.name, "notes": notes, **report.to_dict()}
    write_json(out / "conjugate.json", doc)
    if report.t.size:
        rows = np.column_stack([report.t, report.D["hamiltonian"], report.D["lagrangian"]])
        write_csv(out / "det.csv", ["t", "D_ham", "D_lag"], rows)
    log.info("verdict: %s (t_c = %s)", report.verdict, report.t_c)
    return 0


def control_rank_note(p, extremal, n: int = 101) -> Optional[str]:
    """Warning when ``f_u`` loses column rank somewhere along the extremal."""
    _, states, controls = extremal.sample(n)
    nq = p.nq
    for s, u in zip(states, controls):
        fu = p.dynamics.first(s[:nq], s[nq:2 * nq], u)[2]
        if np.linalg.matrix_rank(fu) < p.m:
            return "warning: control matrix df/du is rank deficient along the extremal"
    return None


def cmd_check(cfg: RunConfig, out: Path) -> int:
    p, lq, notes = build_problem(cfg)
    log.info("checking %s", p.name)
    errors = {}
    if lq is not None:
        kalman = kalman_check(lq)
        notes.append(f"Kalman rank {kalman.rank} of {2 * lq.nq}" + ("" if kalman.satisfied else " (not controllable)"))
    try:
        ext = _solve(p, cfg)
    except LagocError as exc:
        ext = None
        errors["extremal"] = str(exc)
    if ext is not None:
        note = control_rank_note(p, ext)
        if note:
            notes.append(note)
            log.warning("%s", note)
    results = {k: v.to_dict() for k, v in run_all(p, ext, lq).items()}
    if ext is None:
        for name in ("flow_equivalence", "conservation"):
            results[name] = {"passed": False, "error": errors["extremal"]}
    all_passed = all(r["passed"] for r in results.values())
    write_json(out / "check.json", {"problem": p.name, "all_passed": all_passed, "notes": notes,
                                    "properties": results})
    for name, r in results.items():
        log.info("%-18s %s", name, "pass" if r["passed"] else "FAIL")
    return 0 if all_passed else 1


COMMANDS = {"solve": cmd_solve, "conjugate": cmd_conjugate, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    common.add_argument("--problem", help="registry problem name; overrides the config's problem source")
    common.add_argument("--quiet", action="store_true", help="no progress messages on stderr")
    parser = argparse.ArgumentParser(prog="lagoc", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="shoot for an extremal, write extremal.csv and summary.json")
    sub.add_parser("conjugate", parents=[common], help="conjugate-time verdict, write conjugate.json and det.csv")
    sub.add_parser("check", parents=[common], help="run property suites, write check.json")
    return parser


def load_config(args) -> RunConfig:
    if args.config is None:
        if args.problem is None:
            raise ConfigError("give --config or --problem")
        return parse_config({}, args.problem, require_T=False)
    try:
        doc = json.loads(args.config.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return parse_config(doc, args.problem)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="lagoc: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = load_config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 1
    except (LagocError, np.linalg.LinAlgError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
