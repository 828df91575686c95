"""``blowup-lab`` command line entry point."""
from __future__ import annotations

import argparse
import datetime as _dt
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMAS, ConfigError, emit_config, parse_config, problem_params
from .data import bump_data
from .exponents import AdmissibilityError, ProblemParams, classify
from .hypergeom import hyp2f1
from .reporting import dumps_json, sha256_file, write_csv, write_text_atomic

log = logging.getLogger("blowup_lab")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2


# ---------------------------------------------------------------- plumbing


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the clock so repeated runs are byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
         else _dt.datetime.now(_dt.timezone.utc))
    return t.isoformat(timespec="seconds")


class Run:
    """Collects outputs of one subcommand and writes the manifest last."""

    def __init__(self, subcommand: str, out_dir, config: dict):
        self.subcommand = subcommand
        self.out = None if out_dir is None else Path(out_dir)
        self.config = config
        self.started = _timestamp()
        self.files: list[Path] = []
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    def add(self, path) -> Path:
        self.files.append(Path(path))
        return Path(path)

    def json(self, name: str, obj) -> Path | None:
        if self.out is None:
            return None
        return self.add(write_text_atomic(self.out / name, dumps_json(obj)))

    def finish(self) -> Path | None:
        if self.out is None:
            return None
        inventory = [{"path": str(p.relative_to(self.out)), "sha256": sha256_file(p),
                      "bytes": p.stat().st_size} for p in self.files]
        manifest = {"subcommand": self.subcommand, "tool_version": __version__,
                    "config": self.config, "started": self.started, "finished": _timestamp(),
                    "outputs": inventory}
        return write_text_atomic(self.out / "manifest.json", dumps_json(manifest))


def _emit(obj) -> None:
    sys.stdout.write(dumps_json(obj))


def _fail(kind: str, message: str, code: int = EXIT_ERROR) -> int:
    _emit({"ok": False, "error": kind, "message": message})
    return code


def _overrides(args, keys) -> dict:
    out = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    for k in keys:
        v = getattr(args, k.replace(".", "_"), None)
        if v is not None:
            out[k] = v
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------- subcommands


def cmd_exponents(args) -> int:
    params = ProblemParams(n=args.n, A=args.A, B=args.B, p=args.p,
                           allow_hardy_endpoint=args.allow_hardy_endpoint)
    rep = classify(params).to_dict()
    run = Run("exponents", args.out, {"n": params.n, "A": params.A, "B": params.B, "p": params.p,
                                       "allow_hardy_endpoint": params.allow_hardy_endpoint})
    run.json("exponents.json", rep)
    run.finish()
    _emit(rep)
    return EXIT_OK


def cmd_hypergeom(args) -> int:
    zs = _float_list(args.z)
    vals = np.atleast_1d(hyp2f1(args.alpha, args.beta, args.gamma, np.array(zs), method=args.method))
    _emit({"alpha": args.alpha, "beta": args.beta, "gamma": args.gamma, "method": args.method,
           "z": zs, "value": vals.tolist()})
    return EXIT_OK


def cmd_testfn(args) -> int:
    from .testfn import TestFunctionSpec, envelope, psi, residual_convergence

    params = ProblemParams(n=args.n, A=args.A, B=args.B, p=args.p)
    spec = TestFunctionSpec(params, args.beta, args.lam)
    window = (1.0, 2.0, 0.5, 1.5)
    conv = residual_convergence(spec, window, args.h, levels=3)
    rng = np.random.default_rng(args.seed)
    t = rng.uniform(0.0, args.t_span, args.samples)
    r = rng.uniform(0.0, 1.0, args.samples) * (t + args.lam) * (1 - 1e-9)
    ratio = psi(spec, t, r) / envelope(spec, t, r)
    lo, hi = float(np.min(ratio)), float(np.max(ratio))
    orders = [o for o in conv["order"] if np.isfinite(o)]
    # a residual already at roundoff on the coarse step has no observable order
    roundoff = max(conv["residual"]) < 1e-8
    order_ok = roundoff or (bool(orders) and abs(orders[-1] - 2.0) <= 0.2)
    env_ok = lo > 0 and hi / lo <= 50.0
    rep = {"params": dict(params.__dict__), "beta": args.beta, "lambda": args.lam,
           "window": list(window), "convergence": conv, "residual_at_roundoff": roundoff,
           "envelope_ratio": {"min": lo, "max": hi, "spread": hi / lo if lo > 0 else None,
                              "samples": args.samples, "seed": args.seed},
           "pass": bool(order_ok and env_ok)}
    run = Run("testfn verify", args.out, {"n": args.n, "A": args.A, "B": args.B, "p": args.p,
                                           "beta": args.beta, "lambda": args.lam, "h": args.h})
    run.json("testfn.json", rep)
    run.finish()
    _emit(rep)
    return EXIT_OK if rep["pass"] else EXIT_CHECK_FAILED


def cmd_lemmas(args) -> int:
    from .lemmas import run_check

    rep = run_check(args.check)
    rows = rep.pop("rows")
    run = Run("lemmas", args.out, {"check": args.check})
    run.add(write_csv(run.out / f"{args.check}.csv", ["label", "T", "value"], rows))
    run.json(f"{args.check}.json", rep)
    run.finish()
    _emit(rep)
    return EXIT_OK if rep["pass"] else EXIT_CHECK_FAILED


def cmd_solve(args) -> int:
    from .solver import RadialGrid, detect_blowup, solve_fd, write_snapshots
    from .solver.blowup import potential_coefficient

    cfg = parse_config(SCHEMAS["solve"], args.config,
                       _overrides(args, ["n", "A", "B", "p", "epsilon", "t_max"]))
    params = problem_params(cfg)
    data = bump_data(cfg["data.amplitude"])
    run = Run("solve", args.out, cfg)
    run.add(write_text_atomic(run.out / "config.resolved", emit_config(cfg)))
    log.info("solve n=%s A=%s B=%s p=%s eps=%s", params.n, params.A, params.B, params.p, params.epsilon)
    if cfg["refine.levels"] >= 2:
        res = detect_blowup(params, data, cfg["grid.dr"], cfg["t_max"], threshold=cfg["threshold"],
                            levels=cfg["refine.levels"], cfl=cfg["grid.cfl"],
                            nonlinear=cfg["nonlinear"]).to_dict()
    else:
        grid = RadialGrid.for_horizon(cfg["t_max"], cfg["grid.dr"], cfg["grid.cfl"],
                                      potential_coefficient(params))
        sol = solve_fd(params, data, grid, threshold=cfg["threshold"], nonlinear=cfg["nonlinear"])
        res = {"status": sol.status, "T_num": sol.T_num, "censored": sol.status == "Completed",
               "dr_levels": [grid.dr]}
    if cfg["snapshot.dt"] > 0:
        grid = RadialGrid.for_horizon(cfg["t_max"], cfg["grid.dr"], cfg["grid.cfl"],
                                      potential_coefficient(params))
        sol = solve_fd(params, data, grid, threshold=cfg["threshold"], nonlinear=cfg["nonlinear"],
                       snapshot_dt=cfg["snapshot.dt"])
        path = run.out / "snapshots.bin"
        write_snapshots(path, sol)
        run.add(path)
    body = {"config": cfg, "classification": classify(params).to_dict(), "result": res}
    run.json("result.json", body)
    run.finish()
    _emit(body)
    return EXIT_OK if res["status"] != "Unstable" else EXIT_CHECK_FAILED


def cmd_odi(args) -> int:
    from .odi import OdiConfig, fit_odi, odi_sweep
    from .sweep import max_workers

    cfg = OdiConfig(C1=args.C1, C2=args.C2, alpha_odi=args.alpha_odi, beta_odi=args.beta_odi,
                    p=args.p, kappa=args.kappa, epsilon=1.0)
    eps = _float_list(args.eps_grid) if args.eps_grid else np.logspace(-1, -3, 9).tolist()
    recs = odi_sweep(args.mode, cfg, eps, workers=max_workers())
    run = Run("odi", args.out, {"mode": args.mode, **cfg.__dict__, "eps_grid": eps})
    if run.out is not None:
        run.add(write_csv(run.out / "odi.csv", ["epsilon", "T_star", "log_T_star", "censored"],
                          [(r.epsilon, r.T_star, r.log_T_star, r.censored) for r in recs]))
    try:
        fit = fit_odi(args.mode, cfg, recs).to_dict()
        err = None
    except ValueError as exc:
        fit, err = None, str(exc)
    body = {"mode": args.mode, "config": cfg.__dict__, "fit": fit, "fit_error": err,
            "records": [{"epsilon": r.epsilon, "log_T_star": r.log_T_star, "censored": r.censored}
                        for r in recs]}
    run.json("odi_fit.json", body)
    run.finish()
    _emit(body)
    return EXIT_OK if fit is not None else EXIT_CHECK_FAILED


def cmd_sweep(args) -> int:
    from .sweep import SweepConfig, default_eps_grid, fit_exponent, report_for, run_sweep, write_sweep_outputs

    cfg = parse_config(SCHEMAS["sweep"], args.config, _overrides(args, []))
    sc = SweepConfig(n=cfg["n"], A=cfg["A"], B=cfg["B"], p=cfg["p"], amplitude=cfg["data.amplitude"],
                     dr=cfg["grid.dr"], cfl=cfg["grid.cfl"], t_max=cfg["t_max"],
                     threshold=cfg["threshold"], levels=cfg["refine.levels"],
                     nonlinear=cfg["nonlinear"])
    eps = (_float_list(cfg["sweep.eps_grid"]) if cfg["sweep.eps_grid"]
           else default_eps_grid(cfg["sweep.eps_max"], cfg["sweep.eps_min"], cfg["sweep.ratio"]))
    run = Run("sweep", args.out, cfg)
    run.add(write_text_atomic(run.out / "config.resolved", emit_config(cfg)))
    recs = run_sweep(sc, eps)
    try:
        fit, err = fit_exponent(recs, report_for(sc)), None
    except ValueError as exc:
        fit, err = None, str(exc)
    for p in write_sweep_outputs(run.out, sc, recs, fit, err):
        run.add(p)
    run.finish()
    _emit({"fit": fit, "fit_error": err, "n_records": len(recs),
           "censored": sum(r.censored for r in recs)})
    return EXIT_OK if fit is not None else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blowup-lab", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    def problem(p, need=True, with_p=True):
        p.add_argument("--n", type=int, required=need, default=None if need else 3)
        p.add_argument("--A", type=float, required=need, default=None if need else 0.0)
        p.add_argument("--B", type=float, required=need, default=None if need else 0.0)
        if with_p:
            p.add_argument("--p", type=float, required=need, default=None if need else 2.0)

    e = sub.add_parser("exponents", help="critical exponents and case classification")
    problem(e)
    e.add_argument("--allow-hardy-endpoint", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_exponents)

    h = sub.add_parser("hypergeom", help="debugging access to the 2F1 evaluator")
    hs = h.add_subparsers(dest="action", required=True)
    he = hs.add_parser("eval")
    he.add_argument("--alpha", type=float, required=True)
    he.add_argument("--beta", type=float, required=True)
    he.add_argument("--gamma", type=float, required=True)
    he.add_argument("--z", required=True, help="one value or a comma-separated list in [0, 1)")
    he.add_argument("--method", default="auto", choices=["auto", "series", "euler"])
    he.set_defaults(func=cmd_hypergeom)

    t = sub.add_parser("testfn", help="adjoint test-function diagnostics")
    ts = t.add_subparsers(dest="action", required=True)
    tv = ts.add_parser("verify")
    problem(tv, with_p=False)
    tv.add_argument("--p", type=float, default=2.0)
    tv.add_argument("--beta", type=float, required=True)
    tv.add_argument("--lambda", dest="lam", type=float, default=2.0)
    tv.add_argument("--h", type=float, default=0.02)
    tv.add_argument("--samples", type=int, default=10_000)
    tv.add_argument("--t-span", type=float, default=50.0)
    tv.add_argument("--seed", type=int, default=0)
    tv.add_argument("--out")
    tv.set_defaults(func=cmd_testfn)

    lm = sub.add_parser("lemmas", help="scaling and integral-identity checks")
    lm.add_argument("--check", required=True, choices=["s-scaling", "master-inequality", "h-identity"])
    lm.add_argument("--out", default=".")
    lm.set_defaults(func=cmd_lemmas)

    s = sub.add_parser("solve", help="one PDE solve with blow-up detection")
    s.add_argument("--config")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    for k, typ in (("n", int), ("A", float), ("B", float), ("p", float), ("epsilon", float)):
        s.add_argument(f"--{k}", type=typ)
    s.add_argument("--t-max", dest="t_max", type=float)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("odi", help="blow-up of the scalar ODI systems")
    o.add_argument("--mode", required=True, choices=["volterra", "strauss-crit", "fujita-crit"])
    o.add_argument("--eps-grid", help="comma-separated epsilons (default: 9 points from 1e-1 to 1e-3)")
    o.add_argument("--p", type=float, default=2.0)
    o.add_argument("--kappa", type=float, default=0.5)
    o.add_argument("--alpha-odi", type=float, default=1.0)
    o.add_argument("--beta-odi", type=float, default=0.0)
    o.add_argument("--C1", type=float, default=1.0)
    o.add_argument("--C2", type=float, default=1.0)
    o.add_argument("--out")
    o.set_defaults(func=cmd_odi)

    w = sub.add_parser("sweep", help="epsilon sweep and lifespan-exponent fit")
    w.add_argument("--config")
    w.add_argument("--set", action="append", metavar="KEY=VALUE")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr,
                        format="%(asctime)s level=%(levelname)s logger=%(name)s msg=%(message)s")
    try:
        return args.func(args)
    except AdmissibilityError as exc:
        return _fail("AdmissibilityError", str(exc))
    except ConfigError as exc:
        return _fail("ConfigError", str(exc))
    except (ValueError, RuntimeError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
