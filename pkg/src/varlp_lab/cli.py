"""``varlp-lab`` command line.

Exit codes: 0 bounded/pass, 1 growing/fail, 2 inconclusive, 64 bad
configuration, 70 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report as rpt
from .conditions import ConditionParams, ConditionReport, Verdict, ussc_alpha_bound
from .errors import ConvergenceError, VarlpError
from .exponent import Cube, ExponentField, GridFunction, discretize, field_from_dict, load_exponent
from .norms import luxemburg_norm
from .operators import maximal
from .rearrange import rearrange
from .studies import (
    DEFAULT_RADIUS,
    FAMILY_CONDITIONS,
    NINF_LEVELS,
    apdot_study,
    combine_verdicts,
    family_study,
    lh0_study,
    lhinf_study,
    ninf_study,
    ussc_study,
)

EX_CONFIG = 64
EX_SOFTWARE = 70
CONDITIONS = ("lh0", "lhinf", "ninf", "apdot", "uinf", "ussc", "strf", "weakf", "intcon")
_GRID_FLAGS = ("lam", "tau", "r", "gamma0", "K", "c", "p_inf", "alpha", "N")


class ConfigError(Exception):
    """Malformed command line or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class RunConfig:
    command: str
    condition: str | None = None
    exponent: ExponentField | None = None
    m: int | None = None
    depth: int | None = None
    levels: int | None = None
    seed: int = 0
    out: str | None = None
    fmt: str = "json"
    grids: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def value(self, name, default=None):
        vals = self.grids.get(name)
        if not vals:
            return default
        if len(vals) != 1:
            raise ConfigError(f"--{name.replace('_', '-')} takes one value here")
        return vals[0]


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _param_value(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _exponent_from_args(a) -> ExponentField | None:
    if a.exponent and a.family:
        raise ConfigError("give either --exponent or --family, not both")
    if a.exponent:
        try:
            return load_exponent(a.exponent)
        except OSError as exc:
            raise ConfigError(f"cannot read exponent file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"exponent file is not valid JSON: {exc}") from exc
    if a.family:
        params = {}
        for item in a.param or []:
            if "=" not in item:
                raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            params[k.strip()] = _param_value(v.strip())
        box = Cube.centered(a.box_radius, a.dim)
        return field_from_dict({"kind": a.family, "dimension": a.dim, "domain": box.to_dict(),
                                "params": params})
    return None


def _config(a) -> RunConfig:
    grids = {k: getattr(a, k) for k in _GRID_FLAGS if getattr(a, k, None) is not None}
    opts = {k: getattr(a, k) for k in ("mode", "samples", "quad_points", "radius", "log_N", "n",
                                       "function", "support", "window_cap", "tol")
            if getattr(a, k, None) is not None}
    for k in ("m", "depth", "levels"):
        v = getattr(a, k, None)
        if v is not None and v < (0 if k == "depth" else 1):
            raise ConfigError(f"--{k} out of range")
    if a.seed < 0 or a.seed >= 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    return RunConfig(a.command, getattr(a, "condition", None), _exponent_from_args(a), a.m, a.depth,
                     a.levels, a.seed, a.out, a.format, grids, opts)


def _require_exponent(cfg: RunConfig) -> ExponentField:
    if cfg.exponent is None:
        raise ConfigError("this command needs --exponent FILE or --family NAME")
    return cfg.exponent


# ---------------------------------------------------------------------------
# Running one condition


def far_value(p: ExponentField) -> float | None:
    """``p`` at ``1e150`` along the first axis, a guess at its limit; ``None``
    when ``p`` is not defined there."""
    x = np.zeros((1, p.dimension))
    x[0, 0] = 1e150
    try:
        v = float(p(x)[0])
    except VarlpError:
        return None
    return v if math.isfinite(v) else None


def _default_p_inf(p: ExponentField) -> float:
    v = far_value(p)
    if v is None:
        raise ConfigError("no limit estimate for this exponent; pass --p-inf")
    return v


def _pick(tp: dict, cfg: RunConfig, name: str, default=None):
    """Scan tuple value first; flags are read only when the tuple lacks ``name``."""
    return tp[name] if name in tp else cfg.value(name, default)


def _params(cfg: RunConfig, **over) -> ConditionParams:
    base = dict(lam=0.125, tau=0.125)
    for name in ("lam", "tau", "r", "gamma0", "K", "c", "p_inf", "alpha"):
        v = _pick(over, cfg, name)
        if v is not None:
            base[name] = v
    return ConditionParams(**base)


def run_condition(cfg: RunConfig, condition: str, tuple_params: dict | None = None) -> ConditionReport:
    """One condition for one parameter tuple (``tuple_params`` overrides flags)."""
    p = _require_exponent(cfg)
    tp = tuple_params or {}
    levels = cfg.levels or (NINF_LEVELS if condition == "ninf" else 4)
    radius = cfg.options.get("radius", DEFAULT_RADIUS)
    if condition == "lh0":
        return lh0_study(p, samples=cfg.options.get("samples"), levels=levels)
    if condition == "lhinf":
        p_inf = _pick(tp, cfg, "p_inf")
        if p_inf is None:
            p_inf = _default_p_inf(p)
        return lhinf_study(p, p_inf, radius, levels, cfg.options.get("samples"))
    if condition == "ninf":
        c = _pick(tp, cfg, "c", math.exp(-2))
        p_inf = _pick(tp, cfg, "p_inf")
        if p_inf is None:
            p_inf = _default_p_inf(p)
        return ninf_study(p, c, p_inf, radius, levels, cfg.m or 4096)
    if condition == "apdot":
        return apdot_study(p, depth=8 if cfg.depth is None else cfg.depth, levels=levels, m=cfg.m or 64)
    if condition == "ussc":
        N = _pick(tp, cfg, "N", math.e)
        return ussc_study(p, _pick(tp, cfg, "alpha"), N, cfg.options.get("n"),
                          cfg.options.get("log_N"), cfg.options.get("samples") or 4096)
    if condition in FAMILY_CONDITIONS:
        params = _params(cfg, **tp)
        return family_study(condition, p, params, levels=levels,
                            depth=4 if cfg.depth is None else cfg.depth, m=cfg.m or 4096,
                            mode=cfg.options.get("mode", "rearrangement"),
                            quad_points=cfg.options.get("quad_points", 64))
    raise ConfigError(f"unknown condition {condition!r}")


def default_grid(p: ExponentField, condition: str, n: int | None = None) -> dict:
    """Parameter grid scanned when no grid flags are given."""
    p_grid = [float(x) for x in np.linspace(p.p_minus, p.p_plus, 5)]
    far = far_value(p)
    if far is not None and far not in p_grid:
        p_grid.append(far)
    if condition == "ninf":
        return {"c": [math.exp(-2), 0.25, 0.5, 0.75], "p_inf": p_grid}
    if condition == "lhinf":
        return {"p_inf": p_grid}
    if condition == "ussc":
        bound = ussc_alpha_bound(p.p_minus, n or p.dimension)
        return {"alpha": [bound * f for f in (0.25, 0.5, 0.75)]}
    if condition in FAMILY_CONDITIONS:
        return {"r": [1.25, 1.5, 2.0], "gamma0": [0.25, 0.4]}
    return {}


def scan_tuples(cfg: RunConfig, condition: str) -> list:
    grid = default_grid(_require_exponent(cfg), condition, cfg.options.get("n"))
    grid.update({k: v for k, v in cfg.grids.items() if v})
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


# ---------------------------------------------------------------------------
# Output


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_reports(cfg: RunConfig, reports, rows, summary=None, command=None):
    command = command or (f"{cfg.command} {cfg.condition}" if cfg.condition else cfg.command)
    if cfg.fmt == "csv":
        _emit(cfg, rpt.dumps_csv(rows, cfg.seed))
    else:
        _emit(cfg, rpt.dumps_json(rpt.document(reports, cfg.seed, command, rows, summary)))


# ---------------------------------------------------------------------------
# Commands


def cmd_check(cfg: RunConfig) -> int:
    rep = run_condition(cfg, cfg.condition)
    _emit_reports(cfg, [rep], rpt.report_rows(rep))
    return rep.exit_code


def cmd_scan(cfg: RunConfig) -> int:
    tuples = scan_tuples(cfg, cfg.condition)
    reports, rows, summary = [], [], []
    for tp in tuples:
        rep = run_condition(cfg, cfg.condition, tp)
        reports.append(rep)
        rows += rpt.report_rows(rep, cubes=False)
        summary.append({"params": tp, "levels": rep.levels, "verdict": rep.verdict.value})
    overall = combine_verdicts(r.verdict for r in reports)
    summary.append({"overall": overall.value})
    _emit_reports(cfg, reports, rows, summary)
    return overall.exit_code


def example_exponents() -> dict:
    """The example exponents with their documented parameters (1-D)."""
    wide = Cube.centered(DEFAULT_RADIUS)
    return {
        "lh_prototype": ExponentField.family("lh_prototype", domain_box=wide, base=2.0, amp=1.0),
        "sinloglog": ExponentField.family("sinloglog", domain_box=wide, c=2.4, alpha=0.4),
        "sinintegral_loglog": ExponentField.family("sinintegral", domain_box=wide, c=2.5,
                                                   alpha=1.0, t0=16.0, phi="loglog"),
        "sinintegral_one": ExponentField.family("sinintegral", domain_box=wide, c=2.5, alpha=1.0,
                                                phi="one"),
        "step": ExponentField.step(2.0, 3.0),
        "constant": ExponentField.constant(2.0, domain_box=wide),
    }


def _sinintegral_ussc(p: ExponentField) -> list:
    """ussc with several check alphas, each with a cutoff where
    ``amplitude / phi(N) = 0.8 alpha``."""
    amp = float(p.params.get("alpha", 1.0))
    out = []
    phi = p.params.get("phi", "log")
    for alpha in (0.05, 0.2, 0.5, 1.0):
        target = 1.25 * amp / alpha
        log_N = {"log": target, "loglog": math.exp(target), "sqrtlog": target**2}.get(phi)
        if log_N is None:
            break
        out.append(ussc_study(p, alpha, None, 1, log_N=max(log_N, math.log(p.params.get("t0", math.e)))))
    return out


def run_examples(levels: int = 4) -> tuple:
    """Battery over the example exponents: ``(reports, summary)``."""
    reports, summary = [], []
    uinf_params = ConditionParams(lam=0.125, tau=0.125, r=1.5, gamma0=0.25)
    for name, p in example_exponents().items():
        row = {"exponent": name}
        rep = lh0_study(p, levels=levels)
        reports.append(rep)
        row["lh0"] = rep.verdict.value
        lhinf = [lhinf_study(p, pi, DEFAULT_RADIUS, levels) for pi in default_grid(p, "lhinf")["p_inf"]]
        reports += lhinf
        row["lhinf"] = combine_verdicts(r.verdict for r in lhinf).value
        grid = default_grid(p, "ninf")
        ninf = [ninf_study(p, c, pi) for c in grid["c"] for pi in grid["p_inf"]]
        reports += ninf
        row["ninf"] = combine_verdicts(r.verdict for r in ninf).value
        if p.kind == "step":
            row["ussc"] = "n/a"
        elif p.kind == "sinintegral":
            uss = _sinintegral_ussc(p) or [ussc_study(p)]
            reports += uss
            row["ussc"] = Verdict.PASS.value if all(r.verdict == Verdict.PASS for r in uss) else \
                Verdict.FAIL.value
        else:
            rep = ussc_study(p)
            reports.append(rep)
            row["ussc"] = rep.verdict.value
        base = Cube.centered(DEFAULT_RADIUS) if p.kind != "step" else p.domain_box
        rep = family_study("uinf", p, uinf_params, base=base, levels=levels, depth=4, m=4096,
                           mode="levelset")
        reports.append(rep)
        row["uinf"] = rep.verdict.value
        if p.kind == "step":
            rep = apdot_study(p, depth=8, levels=levels, m=64)
            reports.append(rep)
            row["apdot"] = rep.verdict.value
        summary.append(row)
    return reports, summary


def cmd_examples(cfg: RunConfig) -> int:
    reports, summary = run_examples(cfg.levels or 4)
    rows = [r for rep in reports for r in rpt.report_rows(rep, cubes=False)]
    _emit_reports(cfg, reports, rows, summary, command="examples")
    cols = ["exponent", "lh0", "lhinf", "ninf", "ussc", "uinf", "apdot"]
    lines = ["  ".join(f"{c:>18}" for c in cols)]
    lines += ["  ".join(f"{str(r.get(c, '-')):>18}" for c in cols) for r in summary]
    print("\n".join(lines), file=sys.stderr)
    return 0


def _function_grid(cfg: RunConfig, p: ExponentField | None) -> GridFunction:
    source = cfg.options.get("function", "ones")
    if source not in ("ones", "random", "indicator"):
        try:
            return GridFunction.from_dict(json.loads(Path(source).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read function file: {exc}") from exc
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"malformed function file: {exc}") from exc
    box = p.domain_box if p is not None else Cube.centered(4.0)
    m = cfg.m or 256
    g = GridFunction.constant(box, m, 1.0)
    if source == "random":
        return g.with_values(np.random.default_rng(cfg.seed).random(g.n_cells))
    if source == "indicator":
        lo, hi = cfg.options.get("support") or [0.0, 1.0]
        ctr = g.centers()
        inside = np.all((ctr >= lo) & (ctr < hi), axis=-1)
        return g.with_values(inside.astype(float))
    return g


def cmd_rearrange(cfg: RunConfig) -> int:
    p = _require_exponent(cfg)
    g = discretize(p, p.domain_box, cfg.m or 256)
    prof = rearrange(g)
    if cfg.fmt == "csv":
        lines = ["t_start,t_end,value"]
        for a, w, v in zip(prof.starts, prof.widths, prof.values):
            lines.append(f"{rpt.fmt_float(a)},{rpt.fmt_float(a + w)},{rpt.fmt_float(v)}")
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        _emit(cfg, rpt.dumps_json({"seed": cfg.seed, "command": "rearrange", "profile": prof.to_dict()}))
    return 0


def cmd_norm(cfg: RunConfig) -> int:
    p = _require_exponent(cfg)
    f = _function_grid(cfg, p)
    pg = discretize(p, f.cube, f.m)
    res = luxemburg_norm(f, pg, cfg.options.get("tol", 1e-10))
    doc = {"seed": cfg.seed, "command": "norm", "result": res.to_dict(), "cube": f.cube.to_dict(), "m": f.m}
    if cfg.fmt == "csv":
        _emit(cfg, f"value,residual,iterations\n{rpt.fmt_float(res.value)},"
                   f"{rpt.fmt_float(res.residual)},{res.iterations}\n")
    else:
        _emit(cfg, rpt.dumps_json(doc))
    return 0


def cmd_maximal(cfg: RunConfig) -> int:
    f = _function_grid(cfg, cfg.exponent)
    cap = cfg.options.get("window_cap")
    mf = maximal(f, cap)
    if cfg.fmt == "csv":
        ctr = mf.centers()
        lines = [",".join([f"x{i}" for i in range(mf.dim)] + ["f", "Mf"])]
        for c, a, b in zip(ctr, f.values, mf.values):
            lines.append(",".join([rpt.fmt_float(x) for x in c] + [rpt.fmt_float(a), rpt.fmt_float(b)]))
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        _emit(cfg, rpt.dumps_json({"seed": cfg.seed, "command": "maximal",
                                   "window_cap": cap if cap is not None else mf.m,
                                   "maximal": mf.to_dict()}))
    return 0


COMMANDS = {"check": cmd_check, "scan": cmd_scan, "examples": cmd_examples,
            "rearrange": cmd_rearrange, "norm": cmd_norm, "maximal": cmd_maximal}


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("exponent and output")
    g.add_argument("--exponent", help="exponent definition (JSON file)")
    g.add_argument("--family", help="builtin family instead of a file: constant, step, lh_prototype, "
                                    "sinloglog, sinlog, sinintegral")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="family parameter (repeatable)")
    g.add_argument("--dim", type=int, default=1)
    g.add_argument("--box-radius", type=float, default=8.0, help="half side of the domain box for --family")
    g.add_argument("--m", type=int, help="cells per side")
    g.add_argument("--depth", type=int, help="dyadic depth (first generation for apdot)")
    g.add_argument("--levels", type=int, help="nesting levels")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (default stdout)")
    g.add_argument("--format", choices=("json", "csv"), default="json")

    cond = _Parser(add_help=False)
    c = cond.add_argument_group("condition parameters (comma lists scan in `scan`)")
    for name in _GRID_FLAGS:
        c.add_argument(f"--{name.replace('_', '-')}", dest=name, type=_float_list)
    c.add_argument("--log-N", dest="log_N", type=float, help="log of the ussc cutoff")
    c.add_argument("--n", type=int, help="space dimension for ussc (default: exponent dimension)")
    c.add_argument("--radius", type=float, help=f"base radius for lhinf/ninf (default {DEFAULT_RADIUS:g})")
    c.add_argument("--mode", choices=("rearrangement", "levelset", "bruteforce"))
    c.add_argument("--samples", type=int)
    c.add_argument("--quad-points", dest="quad_points", type=int)

    parser = _Parser(prog="varlp-lab", description="Variable-exponent Lebesgue space condition lab")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("check", "scan"):
        sp = sub.add_parser(name, parents=[common, cond])
        sp.add_argument("condition", choices=CONDITIONS)
    sub.add_parser("examples", parents=[common])
    sub.add_parser("rearrange", parents=[common])
    sp = sub.add_parser("norm", parents=[common])
    sp.add_argument("--function", help="ones | random | indicator | GridFunction JSON file")
    sp.add_argument("--support", type=_float_list, help="indicator interval a,b (every axis)")
    sp.add_argument("--tol", type=float)
    sp = sub.add_parser("maximal", parents=[common])
    sp.add_argument("--function", help="ones | random | indicator | GridFunction JSON file")
    sp.add_argument("--support", type=_float_list, help="indicator interval a,b (every axis)")
    sp.add_argument("--window-cap", dest="window_cap", type=int)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"varlp-lab: configuration error: {exc}", file=sys.stderr)
        return EX_CONFIG
    except ConvergenceError as exc:
        print(f"varlp-lab: numerical failure: {exc}", file=sys.stderr)
        return EX_SOFTWARE
    except (VarlpError, ValueError, KeyError, TypeError) as exc:
        print(f"varlp-lab: invalid configuration: {exc}", file=sys.stderr)
        return EX_CONFIG
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"varlp-lab: numerical failure: {exc}", file=sys.stderr)
        return EX_SOFTWARE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
