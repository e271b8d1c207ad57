"""
Command line front end.

    python -m conebr.cli kernel --sigma 2 --lambda 4 --delta 0.5 --pair 1,0,2,3
    python -m conebr.cli crossval --sigma 1.5 --n-points 20
    python -m conebr.cli normgrowth --sigma 2 --delta 0.1 --lambdas 8,16,32,64

Parameters come from defaults, then an INI file (``--config``; a
``[common]`` section and one section per command), then command line flags.
``--dump-config`` prints the effective configuration and exits.  Tables are
CSV with one ``#`` metadata line (version and config digest) above the header;
reports are JSON.  Exit codes: 0 success, 1 tolerance not met, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import check_de_decay, check_diffraction_halfpower, check_ge_decay
from .cone_kernel import REDUCTION_CONVENTIONS, ConeKernelConfig, kernel, reduction_identity_residual
from .euclid import BRParams
from .geometry import ConeParams, ConePoint
from .operator import (
    BoundaryCondition,
    SectorParams,
    convergence_experiment,
    convergence_grid,
    critical_delta,
    kernel_l1_sup,
    operator_norm_probe,
    probe_grids,
    sector_kernel,
    smooth_bump,
)
from .oracle import oracle_kernel
from .quadrature import QuadratureConfig
from .util import config_digest, fmt, to_plain


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma separated numbers, got {text!r}") from exc


def _pair(text):
    vals = _floats(text)
    if len(vals) != 4:
        raise UsageError(f"pair must be r1,theta1,r2,theta2; got {text!r}")
    return vals


def _p_value(text):
    t = str(text).strip().lower()
    if t in ("inf", "infinity"):
        return math.inf
    try:
        p = float(t)
    except ValueError as exc:
        raise UsageError(f"bad exponent {text!r}") from exc
    if p < 1:
        raise UsageError("p must be >= 1")
    return p


def _p_list(text):
    return [_p_value(v) for v in str(text).split(",") if v.strip()]


# name -> (converter, default, help)
COMMON = {
    "sigma": (float, 2.0, "cone radius"),
    "lam": (float, 1.0, "frequency cutoff lambda"),
    "delta": (float, 0.5, "Bochner-Riesz order"),
    "tol": (float, 1e-10, "relative quadrature tolerance"),
    "seed": (int, 0, "random seed"),
}

COMMANDS = {
    "kernel": {
        "pair": (lambda v: [_pair(p) for p in v] if isinstance(v, list) else [_pair(p) for p in str(v).split(";") if p.strip()],
                 [], "point pair r1,theta1,r2,theta2 (repeatable; ';' separates pairs in a config file)"),
    },
    "crossval": {
        "n_points": (int, 50, "number of random pairs"),
        "r_min": (float, 0.5, "smallest r1 + r2"),
        "r_max": (float, 3.0, "largest r1 + r2"),
        "threshold": (float, 1e-6, "largest acceptable relative error"),
    },
    "normgrowth": {
        "p": (_p_value, math.inf, "exponent (inf uses sup_x int |K|)"),
        "lambdas": (_floats, [8.0, 16.0, 32.0, 64.0], "comma separated lambdas"),
        "radius": (float, 64.0, "outer radius of the y integral (p = inf)"),
        "x_radii": (_floats, [0.0, 1.0], "sample |x| in units of 1/lambda (p = inf)"),
        "n_theta": (int, 64, "angular nodes (p = inf)"),
        "family": (str, "bumps", "probe family for finite p: bumps or randomized"),
        "n_samples": (int, 8, "probe functions for finite p"),
        "probe_tol": (float, 1e-7, "quadrature tolerance of the probe"),
    },
    "converge": {
        "p": (_p_list, [2.0, 4.0, 6.0], "comma separated exponents"),
        "delta_offset": (float, 0.2, "delta = critical index + offset"),
        "lambdas": (_floats, [4.0, 8.0, 16.0, 32.0], "comma separated lambdas"),
        "center": (float, 1.0, "bump centre radius"),
        "bump_radius": (float, 0.5, "bump radius"),
        "out_radius": (float, 2.5, "outer radius of the grid"),
        "probe_tol": (float, 1e-6, "quadrature tolerance"),
    },
    "sector": {
        "alpha": (float, 1.2, "sector opening angle"),
        "bc": (str, "dirichlet", "dirichlet or neumann"),
        "n_points": (int, 10, "random pairs"),
    },
    "bounds": {
        "which": (str, "all", "ge, de, halfpower or all"),
        "n_samples": (int, 50, "samples per report"),
        "k_min": (int, 1, "smallest dyadic index"),
        "k_max": (int, 8, "largest dyadic index"),
    },
    "reduction": {
        "n_points": (int, 20, "random pairs on the smaller cone"),
        "convention": (str, "auto", "one of the named conventions or auto"),
        "threshold": (float, 1e-8, "largest acceptable residual"),
    },
}


@dataclass
class ExperimentConfig:
    """Effective parameters of one run; serialisable and digestible."""

    command: str
    params: dict = field(default_factory=dict)

    def digest(self) -> str:
        return config_digest({"command": self.command, "params": self.params, "version": __version__})

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp[self.command] = {k: _ini_value(v) for k, v in self.params.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _ini_value(v):
    if isinstance(v, list):
        if v and isinstance(v[0], list):
            return ";".join(",".join(fmt(float(x)) for x in p) for p in v)
        return ",".join(fmt(float(x)) for x in v)
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def _opt(name):
    return "--lambda" if name == "lam" else "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conebr", description="Bochner-Riesz kernels on flat cones")
    parser.add_argument("--version", action="version", version=f"conebr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in COMMANDS.items():
        sp = sub.add_parser(cmd, help=f"{cmd} experiment")
        sp.add_argument("--config", help="INI file with [common] and [%s] sections" % cmd)
        sp.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
        sp.add_argument("--output", "-o", help="output path (default stdout)")
        sp.add_argument("--report", help="JSON summary path for tabular commands (default stderr)")
        for name, (_, default, help_) in {**COMMON, **opts}.items():
            kw = {"dest": name, "default": None, "help": f"{help_} (default {default!r})"}
            if cmd == "kernel" and name == "pair":
                kw["action"] = "append"
            sp.add_argument(_opt(name), **kw)
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Defaults, then the config file, then flags."""
    opts = {**COMMON, **COMMANDS[args.command]}
    raw = {k: d for k, (_, d, _) in opts.items()}
    if args.config:
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config!r}")
        for section in ("common", args.command):
            if cp.has_section(section):
                for k, v in cp.items(section):
                    key = k.replace("-", "_")
                    key = "lam" if key == "lambda" else key
                    if key not in opts:
                        raise UsageError(f"unknown key {k!r} in section [{section}]")
                    raw[key] = v
    for k in opts:
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = v
    params = {}
    for k, (conv, default, _) in opts.items():
        v = raw[k]
        try:
            params[k] = v if (v is default) else conv(v)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {k}: {v!r}") from exc
    return ExperimentConfig(args.command, params)


def _check_common(p):
    try:
        ConeParams(p["sigma"])
        BRParams(p["lam"], p["delta"])
        QuadratureConfig(tol=p["tol"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _csv(header, rows, cfg: ExperimentConfig) -> str:
    out = [f"# conebr {__version__} command={cfg.command} config_digest={cfg.digest()}", ",".join(header)]
    out += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(out) + "\n"


def _json_value(v, indent=0):
    pad = "  " * (indent + 1)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(x, indent + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        return "[" + ", ".join(_json_value(x, indent + 1) for x in v) + "]"
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return f"{v:.17g}" if math.isfinite(v) else json.dumps(str(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return json.dumps(str(v))


def _json(report: dict, cfg: ExperimentConfig) -> str:
    doc = {"version": __version__, "command": cfg.command, "config_digest": cfg.digest(),
           "config": to_plain(cfg.params), **report}
    return _json_value(doc) + "\n"


def _kcfg(p, tol=None) -> ConeKernelConfig:
    return ConeKernelConfig(ConeParams(p["sigma"]), BRParams(p["lam"], p["delta"]),
                            QuadratureConfig(tol=tol if tol is not None else p["tol"]))


def cmd_kernel(cfg: ExperimentConfig):
    p = cfg.params
    if not p["pair"]:
        raise UsageError("kernel needs at least one --pair")
    kc = _kcfg(p)
    rows = []
    for r1, t1, r2, t2 in p["pair"]:
        try:
            x, y = kc.cone.point(r1, t1), kc.cone.point(r2, t2)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        kb = kernel(x, y, kc)
        rows.append((r1, t1, r2, t2, kb.geometric, kb.diffractive, kb.total))
    header = ["r1", "theta1", "r2", "theta2", "geometric", "diffractive", "total"]
    return _csv(header, rows, cfg), None, 0


def _random_pairs(rng, n, cone, r_min, r_max):
    out = []
    for i in range(n):
        s = rng.uniform(r_min, r_max)
        a = rng.uniform(0.0, 1.0)
        # every fourth pair sits within 1e-2 of the shadow boundary
        dth = math.pi + rng.uniform(-1e-2, 1e-2) if i % 4 == 3 else rng.uniform(0.0, cone.period)
        t2 = rng.uniform(0.0, cone.period)
        out.append((cone.point(a * s, t2 + dth), cone.point((1.0 - a) * s, t2)))
    return out


def cmd_crossval(cfg: ExperimentConfig):
    p = cfg.params
    if p["n_points"] < 1:
        raise UsageError("n_points must be positive")
    kc = _kcfg(p)
    rng = np.random.default_rng(p["seed"])
    floor = 1e-8 * kc.br.lam**2
    per = []
    for x, y in _random_pairs(rng, p["n_points"], kc.cone, p["r_min"], p["r_max"]):
        k = kernel(x, y, kc).total
        o = oracle_kernel(x, y, kc.cone, kc.br)
        per.append({"r1": x.r, "theta1": x.theta, "r2": y.r, "theta2": y.theta, "kernel": k, "oracle": o,
                    "rel_err": abs(k - o) / max(abs(o), floor)})
    worst = max(q["rel_err"] for q in per)
    report = {"n_points": len(per), "max_rel_err": worst, "threshold": p["threshold"], "per_point": per}
    return _json(report, cfg), None, 0 if worst <= p["threshold"] else 1


def fit_exponent(lambdas, values) -> float:
    """Least-squares slope of ``log value`` against ``log lam``."""
    return float(np.polyfit(np.log(lambdas), np.log(values), 1)[0])


def cmd_normgrowth(cfg: ExperimentConfig):
    p = cfg.params
    cone = ConeParams(p["sigma"])
    quad = QuadratureConfig(tol=p["probe_tol"])
    rows = []
    for lam in p["lambdas"]:
        br = BRParams(lam, p["delta"])
        if math.isinf(p["p"]):
            v, _ = kernel_l1_sup(cone, br, p["radius"], tuple(p["x_radii"]), p["n_theta"], quad=quad)
        else:
            gin, gout = probe_grids(cone, lam)
            v = operator_norm_probe(br, ConeKernelConfig(cone, br, quad), p["p"], p["family"], gin, gout,
                                    p["n_samples"], p["seed"]).max_ratio
        rows.append((lam, v))
    lams = [r[0] for r in rows]
    vals = [r[1] for r in rows]
    summary = {"exponent": fit_exponent(lams, vals) if len(rows) > 1 else float("nan"),
               "predicted_exponent_pinf": max(0.0, 0.5 - p["delta"]),
               "variation": max(vals) / min(vals) - 1.0}
    return _csv(["lambda", "probe_norm"], rows, cfg), _json(summary, cfg), 0


def cmd_converge(cfg: ExperimentConfig):
    p = cfg.params
    cone = ConeParams(p["sigma"])
    lam_max = max(p["lambdas"])
    grid = convergence_grid(cone, lam_max, p["out_radius"])
    rc, rad = p["center"], p["bump_radius"]
    if not (0 < rad < rc):
        raise UsageError("need 0 < bump_radius < center")

    def bump(r, t):
        dt = np.abs(np.mod(t + 0.5 * cone.period, cone.period) - 0.5 * cone.period)
        d2 = r * r + rc * rc - 2.0 * r * rc * np.cos(np.minimum(dt, math.pi))
        return smooth_bump(np.sqrt(np.maximum(d2, 0.0)) / rad)

    f = grid.sample(bump)
    groups = {}
    for q in p["p"]:
        groups.setdefault(critical_delta(q) + p["delta_offset"], []).append(q)
    rows, ok = [], True
    for delta, ps in groups.items():
        table = convergence_experiment(f, ps, delta, p["lambdas"], QuadratureConfig(tol=p["probe_tol"]))
        for j, q in enumerate(ps):
            col = [row[1 + j] for row in table]
            ok &= all(b < a for a, b in zip(col, col[1:]))
            rows += [(row[0], q, delta, row[1 + j]) for row in table]
    rows.sort(key=lambda r: (r[1], r[0]))
    return _csv(["lambda", "p", "delta", "rel_error"], rows, cfg), None, 0 if ok else 1


def cmd_sector(cfg: ExperimentConfig):
    p = cfg.params
    try:
        sp = SectorParams(p["alpha"], BoundaryCondition(p["bc"].lower()))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    br = BRParams(p["lam"], p["delta"])
    quad = QuadratureConfig(tol=p["tol"])
    rng = np.random.default_rng(p["seed"])
    rows = []
    for _ in range(p["n_points"]):
        r1, r2 = rng.uniform(0.1, 3.0, 2)
        t2 = rng.uniform(0.0, sp.alpha)
        for t1, edge in ((0.0, 1), (sp.alpha, 1), (rng.uniform(0.0, sp.alpha), 0)):
            v = sector_kernel(ConePoint(r1, t1), ConePoint(r2, t2), sp, br, quad)
            rows.append((r1, t1, r2, t2, v, edge))
    return _csv(["r1", "theta1", "r2", "theta2", "kernel", "on_boundary"], rows, cfg), None, 0


def cmd_bounds(cfg: ExperimentConfig):
    p = cfg.params
    kc = _kcfg(p)
    which = p["which"].lower()
    if which not in ("ge", "de", "halfpower", "all"):
        raise UsageError("which must be ge, de, halfpower or all")
    reports = []
    n = p["n_samples"]
    if which in ("ge", "all"):
        reports.append(check_ge_decay(kc, n, p["seed"]))
    if which in ("de", "all"):
        reports.append(check_de_decay(kc, n, p["seed"]))
    if which in ("halfpower", "all"):
        reports.append(check_diffraction_halfpower(kc, (p["k_min"], p["k_max"]), n, p["seed"]))
    return _json({"reports": [to_plain(r) for r in reports]}, cfg), None, 0


def cmd_reduction(cfg: ExperimentConfig):
    p = cfg.params
    kc = _kcfg(p)
    small = ConeParams(0.5 * kc.cone.sigma)
    rng = np.random.default_rng(p["seed"])
    pairs = _random_pairs(rng, p["n_points"], small, 0.5, 3.0)
    names = list(REDUCTION_CONVENTIONS) if p["convention"] == "auto" else [p["convention"]]
    for n in names:
        if n not in REDUCTION_CONVENTIONS:
            raise UsageError(f"unknown convention {n!r}; choose from {sorted(REDUCTION_CONVENTIONS)}")
    res = {n: [reduction_identity_residual(x, y, kc, n) for x, y in pairs] for n in names}
    best = min(names, key=lambda n: max(res[n]))
    rows = [(x.r, x.theta, y.r, y.theta, r, best) for (x, y), r in zip(pairs, res[best])]
    summary = {"convention": best, "max_residual": {n: max(v) for n, v in res.items()}}
    code = 0 if max(res[best]) <= p["threshold"] else 1
    return _csv(["r1", "theta1", "r2", "theta2", "residual", "convention"], rows, cfg), _json(summary, cfg), code


HANDLERS = {
    "kernel": cmd_kernel,
    "crossval": cmd_crossval,
    "normgrowth": cmd_normgrowth,
    "converge": cmd_converge,
    "sector": cmd_sector,
    "bounds": cmd_bounds,
    "reduction": cmd_reduction,
}


def _write(path, text, stream):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        stream.write(text)
        stream.flush()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        _check_common(cfg.params)
        if args.dump_config:
            sys.stdout.write(cfg.to_ini())
            return 0
        primary, summary, code = HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"conebr {args.command}: error: {exc}", file=sys.stderr)
        return 2
    _write(args.output, primary, sys.stdout)
    if summary is not None:
        _write(args.report, summary, sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
