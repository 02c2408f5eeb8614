"""Command-line front end: ``fibrenorm <subcommand> [options]``.

Settings come from built-in defaults, then an optional ``key = value`` config
file (``family.x1 = -0.4``; sections ``f.`` and ``g.`` describe the two maps
of ``conjugacy``), then ``FIBRENORM_MAX_BITS``, then command-line flags.

Exit codes: 0 success, 1 a ``verify`` check failed, 2 invalid input,
3 precision ceiling, 4 depth not reached, 5 inconclusive.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .conjugacy import conjugacy_report
from .dynamics import branch_grid, first_return_samples
from .errors import (DepthMismatch, FibRenormError, Inconclusive, NotConverged,
                     NotRenormalizable, PrecisionCeiling)
from .fibsearch import COORDINATES, FamilySpec, bisect_fibonacci
from .flatmap import eval_map, standard_point
from .invariants import extract_invariants
from .numerics import DEFAULT_MAX_BITS, PrecisionContext
from .renorm import RenormState, Trajectory, residual, run_trajectory
from .spectral import build_L, eigen_closed_form, jacobian_block_check, project_eigenbasis, w_star

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_CEILING, EXIT_DEPTH, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4, 5

SUBCOMMANDS = ("spectral", "renorm", "locate", "invariants", "conjugacy", "verify")

DEFAULTS = {
    "ell": "1.5",
    "depth": "8",
    "precision_bits": "256",
    "max_bits": str(DEFAULT_MAX_BITS),
    "output": "",
    "format": "",
    "trajectory_depth": "",
    "min_width_bits": "",
    "family.x1": "-0.4",
    "family.x2": "",
    "family.x3": "0.1",
    "family.x4": "0.97",
    "family.s": "0.5",
    "family.varying": "x2",
    "family.bracket": "",
    "family.param": "",
}
FAMILY_KEYS = ("x1", "x2", "x3", "x4", "s", "varying", "bracket", "param")

CSV_COLUMNS = ("n", "x1", "x2", "x3", "x4", "s", "S1", "S2", "S3", "S4", "S5",
               "y2", "y3", "y4", "y5", "alpha", "Lambda",
               "eps_u", "eps_s", "eps_minus", "eps_zero")


class ConfigError(ValueError):
    pass


class DepthNotReached(FibRenormError):
    pass


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            values[key] = value
    return values


def _parse_pairs(text):
    out = {}
    for item in filter(None, (p.strip() for p in text.split(";"))):
        if "=" not in item:
            raise ConfigError(f"expected key=value in '{item}'")
        k, v = (p.strip() for p in item.split("=", 1))
        out[k] = v
    return out


def resolve_config(args):
    """Merge defaults, config file, environment and flags into one flat dict."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    if os.environ.get("FIBRENORM_MAX_BITS"):
        cfg["max_bits"] = os.environ["FIBRENORM_MAX_BITS"]
    flags = {"ell": args.ell, "depth": args.depth, "precision_bits": args.bits,
             "max_bits": args.max_bits, "output": args.output, "format": args.format,
             "trajectory_depth": getattr(args, "trajectory_depth", None),
             "min_width_bits": getattr(args, "min_width_bits", None)}
    for key in FAMILY_KEYS:
        flags["family." + key] = getattr(args, key, None)
    for section in ("f", "g"):
        text = getattr(args, section, None)
        if text:
            for k, v in _parse_pairs(text).items():
                flags[f"{section}.{k}"] = v
    cfg.update({k: str(v) for k, v in flags.items() if v is not None})
    return cfg


def config_hash(cfg):
    text = "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _number(cfg, key):
    try:
        return Fraction(cfg[key])
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key} must be a number, got {cfg.get(key)!r}") from exc


def _integer(cfg, key, minimum=0):
    try:
        value = int(cfg[key])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{key} must be an integer, got {cfg.get(key)!r}") from exc
    if value < minimum:
        raise ConfigError(f"{key} must be at least {minimum}")
    return value


def _ell(cfg):
    ell = _number(cfg, "ell")
    if not 1 < ell < 2:
        raise ConfigError("ell must satisfy 1 < ell < 2")
    return ell


def _context(cfg, bits=None):
    bits = bits or _integer(cfg, "precision_bits", 64)
    max_bits = _integer(cfg, "max_bits", 64)
    if bits > max_bits:
        raise ConfigError(f"precision_bits {bits} exceeds max_bits {max_bits}")
    return PrecisionContext(bits=bits, max_bits=max_bits)


def _section(cfg, name):
    """Family settings of section ``name``, falling back to ``family.*``."""
    return {k: cfg.get(f"{name}.{k}", cfg.get(f"family.{k}", "")) for k in FAMILY_KEYS}


def _family(cfg, fam, ctx):
    ell = _ell(cfg)
    nums = {}
    for key in ("x1", "x3", "x4", "s"):
        try:
            nums[key] = Fraction(fam[key])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"family coordinate {key} must be a number") from exc
    x2 = Fraction(fam["x2"]) if fam["x2"] else nums["x3"] / 2
    varying = fam["varying"] or "x2"
    if varying not in COORDINATES:
        raise ConfigError(f"varying must be one of {COORDINATES}")
    if fam["bracket"]:
        parts = fam["bracket"].split(",")
        if len(parts) != 2:
            raise ConfigError("bracket must be 'lo,hi'")
        bracket = tuple(Fraction(p.strip()) for p in parts)
    elif varying == "x2":
        bracket = (nums["x3"] / 10 ** 4, nums["x3"] * (1 - Fraction(1, 10 ** 4)))
    else:
        bracket = None
    try:
        base = standard_point(ell, nums["x1"], x2, nums["x3"], nums["x4"], nums["s"], ctx)
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"invalid family base: {exc}") from exc
    return FamilySpec(base, varying, bracket)


def _point_value(fam):
    """Fixed parameter for the family, if the section pins one."""
    if fam["param"]:
        return Fraction(fam["param"])
    return None


def _fmt(ctx, x):
    if x is None:
        return ""
    digits = min(50, math.floor(ctx.bits * 0.301))
    return ctx.mp.nstr(x, digits, min_fixed=-4, max_fixed=6)


def to_hex(x):
    """Exact binary image of an mpf: ``[-]0x<mantissa>p<exponent>``."""
    if x is None:
        return ""
    mp = x.context
    if x == 0:
        return "0x0p0"
    man, exp = mp.mpf(x).man_exp
    sign = "-" if x < 0 else ""
    return f"{sign}0x{man:x}p{exp}"


def from_hex(text, ctx):
    if not text:
        return None
    sign = -1 if text.startswith("-") else 1
    body = text.lstrip("-")
    man, exp = body[2:].split("p")
    return ctx.mp.ldexp(ctx.mp.mpf(sign * int(man, 16)), int(exp))


def trajectory_rows(traj):
    """Per-level values in :data:`CSV_COLUMNS` order (``None`` where undefined)."""
    ed = eigen_closed_form(traj.ell, traj.ctx)
    rows = []
    for st in traj.states:
        X = st.X
        S = st.S if st.S is not None else (None,) * 5
        w = st.w if st.w is not None else (None,) * 4
        eps = (None,) * 4
        if 0 < st.n <= len(traj.residuals) and st.w is not None:
            eps = tuple(project_eigenbasis(traj.residuals[st.n - 1], ed))
        rows.append((st.n, X.x1, X.x2, X.x3, X.x4, X.s, *S, *w, st.alpha, st.Lambda, *eps))
    return rows


def write_trajectory_csv(traj, fh):
    """Decimal columns in fixed order, then a ``<name>_hex`` column for each."""
    ctx = traj.ctx
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(CSV_COLUMNS) + [c + "_hex" for c in CSV_COLUMNS[1:]])
    for row in trajectory_rows(traj):
        writer.writerow([row[0]] + [_fmt(ctx, v) for v in row[1:]] + [to_hex(v) for v in row[1:]])


def read_trajectory_csv(fh, ell, bits=None):
    """Rebuild the ``w``-level data of a trajectory from its hex columns.

    Only what invariant extraction needs is restored: ``w_n``, ``S_n``,
    ``alpha_n``, ``Lambda_n`` and the residuals, which are recomputed from
    consecutive ``w``.
    """
    rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError("empty trajectory file")
    need = max((len(bin(int(v.lstrip("-")[2:].split("p")[0], 16))) - 2
                for r in rows for k, v in r.items() if k.endswith("_hex") and v), default=64)
    ctx = PrecisionContext(bits=max(bits or 64, need, 64))
    states = []
    for r in rows:
        if not r["y2_hex"]:
            break
        S = tuple(from_hex(r[f"S{i}_hex"], ctx) for i in range(1, 6))
        w = tuple(from_hex(r[f"y{i}_hex"], ctx) for i in range(2, 6))
        states.append(RenormState(n=int(r["n"]), X=None, S=S, w=w,
                                  alpha=from_hex(r["alpha_hex"], ctx), Lambda=from_hex(r["Lambda_hex"], ctx)))
    L = build_L(ell, ctx)
    ws = w_star(ell, ctx, "derived")
    res = [residual(ctx, L, ws, a.w, b.w) for a, b in zip(states, states[1:])]
    return Trajectory(states=states, residuals=res, precision_used=ctx.bits)


def provenance(cfg, bits, depth):
    return {"ell": cfg["ell"], "precision_bits": bits, "depth": depth,
            "version": __version__, "config_hash": config_hash(cfg)}


def _emit(cfg, text, key="output"):
    path = cfg.get(key, "")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _trajectory_text(traj, fmt):
    if fmt == "json":
        ctx = traj.ctx
        rows = [dict(zip(CSV_COLUMNS, [r[0]] + [_fmt(ctx, v) for v in r[1:]]))
                for r in trajectory_rows(traj)]
        return rows
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    return buf.getvalue()


def _depth_check(traj, depth):
    if traj.failure is not None and traj.failure[0] <= depth:
        n, side = traj.failure
        raise DepthNotReached(f"map is not renormalizable at level {n} ({side}); "
                              f"requested depth {depth}")


# subcommands

def cmd_spectral(cfg):
    ctx = _context(cfg)
    ed = eigen_closed_form(_ell(cfg), ctx)
    out = ed.as_dict()
    out["provenance"] = provenance(cfg, ctx.bits, None)
    _emit(cfg, _json(out))


def cmd_renorm(cfg):
    ctx = _context(cfg)
    depth = _integer(cfg, "depth")
    fam = _family(cfg, _section(cfg, "family"), ctx)
    param = _point_value(_section(cfg, "family"))
    X0 = fam.base if param is None else (lambda c: fam.point(param, c))
    traj = run_trajectory(X0, depth, ctx)
    fmt = cfg["format"] or "csv"
    text = _trajectory_text(traj, fmt)
    if fmt == "json":
        text = _json({"trajectory": text, "failure": traj.failure,
                      "provenance": provenance(cfg, traj.precision_used, depth)})
    _emit(cfg, text)
    _depth_check(traj, depth)


def _locate(cfg, fam, ctx, depth, trajectory_depth=None):
    if fam.bracket is None:
        raise ConfigError(f"a bracket is required when varying {fam.varying}")
    mwb = cfg.get("min_width_bits", "")
    min_width = Fraction(1, 2 ** int(mwb)) if mwb else None
    return bisect_fibonacci(fam, depth, ctx, min_width=min_width, trajectory_depth=trajectory_depth)


def _search_dict(res):
    width = res.bracket_width
    return {
        "parameter": str(res.parameter),
        "parameter_decimal": f"{float(res.parameter):.17g}",
        "bracket": [str(res.bracket[0]), str(res.bracket[1])],
        "bracket_width_log2": width.numerator.bit_length() - width.denominator.bit_length(),
        "achieved_depth": res.achieved_depth,
        "steps": res.steps,
        "bits": res.bits,
    }


def cmd_locate(cfg):
    ctx = _context(cfg)
    depth = _integer(cfg, "depth", 1)
    td = _integer(cfg, "trajectory_depth") if cfg["trajectory_depth"] else None
    fam = _family(cfg, _section(cfg, "family"), ctx)
    res = _locate(cfg, fam, ctx, depth, td)
    out = _search_dict(res)
    out["provenance"] = provenance(cfg, res.bits, depth)
    _emit(cfg, _json(out))
    if cfg.get("trajectory_csv"):
        _emit(cfg, _trajectory_text(res.trajectory, "csv"), "trajectory_csv")


def _trajectory_for(cfg, name, ctx, depth):
    """Trajectory of section ``name``: a pinned parameter is run, otherwise located."""
    section = _section(cfg, name)
    fam = _family(cfg, section, ctx)
    param = _point_value(section)
    if param is None and section["x2"] and section["varying"] == "x2" and not section["bracket"]:
        param = Fraction(section["x2"])
    if param is not None:
        bits = max(ctx.bits, 2 * param.denominator.bit_length() + 128)
        traj = run_trajectory(lambda c: fam.point(param, c), depth, ctx.with_bits(min(bits, ctx.max_bits)))
    else:
        traj = _locate(cfg, fam, ctx, depth + 2, depth).trajectory
    _depth_check(traj, depth)
    return traj


def cmd_invariants(cfg):
    ctx = _context(cfg)
    depth = _integer(cfg, "depth", 6)
    ell = _ell(cfg)
    if cfg.get("trajectory"):
        with open(cfg["trajectory"], encoding="utf-8") as fh:
            traj = read_trajectory_csv(fh, ell, ctx.bits)
        bits = traj.precision_used
    else:
        traj = _trajectory_for(cfg, "family", ctx, depth)
        bits = traj.precision_used
    ed = eigen_closed_form(ell, PrecisionContext(bits=bits, max_bits=max(bits, ctx.max_bits)))
    est = extract_invariants(traj, ed)
    out = est.as_dict()
    out["provenance"] = provenance(cfg, bits, len(traj.states) - 1)
    _emit(cfg, _json(out))


def cmd_conjugacy(cfg):
    ctx = _context(cfg)
    depth = _integer(cfg, "depth", 6)
    trajs, ests = [], []
    for name in ("f", "g"):
        ell = Fraction(cfg.get(f"{name}.ell", cfg["ell"]))
        sub = dict(cfg, ell=str(ell))
        traj = _trajectory_for(sub, name, ctx, depth)
        trajs.append(traj)
        ests.append(extract_invariants(traj, eigen_closed_form(ell, traj.ctx)))
    report = conjugacy_report(trajs[0], trajs[1], ests[0], ests[1])
    out = report.as_dict()
    out["provenance"] = provenance(cfg, max(t.precision_used for t in trajs), depth)
    _emit(cfg, _json(out))
    if cfg.get("dh_csv") and report.dh_table:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "A", "B", "C", "D"])
        c = trajs[0].ctx
        for row in report.dh_table:
            writer.writerow([row["n"]] + [_fmt(c, row[I]) for I in "ABCD"])
        _emit(cfg, buf.getvalue(), "dh_csv")
    if report.flags:
        for flag in report.flags:
            print(f"warning: {flag}", file=sys.stderr)


def cmd_verify(cfg):
    """Dynamical oracle against the formulaic step, and the Jacobian block check."""
    ctx = _context(cfg)
    depth = _integer(cfg, "depth", 2)
    traj = _trajectory_for(cfg, "family", ctx, depth)
    mp = traj.ctx.mp
    tol = mp.ldexp(mp.one, -(traj.precision_used // 4))
    oracle = []
    for n in range(1, depth + 1):
        A, B = traj.states[n - 1].X, traj.states[n].X
        grid = branch_grid(B, 16, A.x1)
        samples = first_return_samples(A, grid)
        err = max(abs(v - eval_map(B, y / A.x1)) / abs(v) for (t, v), y in zip(samples, grid))
        oracle.append({"level": n, "rel_err": float(err), "ok": bool(err < tol),
                       "return_times": sorted({t for t, _ in samples})})
    blocks = []
    for level in range(2, depth + 1, 2):
        rep = jacobian_block_check(traj, level)
        blocks.append({"level": level, "column_err": float(max(abs(e) for e in rep.column_rel_err)),
                       "reduced_err": float(rep.reduced_err)})
    decreasing = all(b["reduced_err"] < a["reduced_err"] for a, b in zip(blocks, blocks[1:]))
    ok = all(o["ok"] for o in oracle) and decreasing
    out = {"oracle": oracle, "jacobian_blocks": blocks, "jacobian_decreasing": decreasing,
           "passed": ok, "provenance": provenance(cfg, traj.precision_used, depth)}
    _emit(cfg, _json(out))
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {"spectral": cmd_spectral, "renorm": cmd_renorm, "locate": cmd_locate,
            "invariants": cmd_invariants, "conjugacy": cmd_conjugacy, "verify": cmd_verify}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--ell", help="critical exponent, 1 < ell < 2")
    common.add_argument("--depth", help="renormalization depth")
    common.add_argument("--bits", help="working precision in bits")
    common.add_argument("--max-bits", dest="max_bits", help="precision ceiling in bits")
    common.add_argument("--output", "-o", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="trajectory output format")
    fam = argparse.ArgumentParser(add_help=False)
    for key in ("x1", "x2", "x3", "x4", "s"):
        fam.add_argument(f"--{key}", help=f"family base coordinate {key}")
    fam.add_argument("--varying", help="coordinate varied by the family (default x2)")
    fam.add_argument("--bracket", help="parameter bracket 'lo,hi'")
    fam.add_argument("--param", help="exact family parameter (skips the search)")

    parser = argparse.ArgumentParser(prog="fibrenorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fibrenorm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectral", parents=[common], help="eigen-data of the linear model")
    sub.add_parser("renorm", parents=[common, fam], help="trajectory of one point")
    p = sub.add_parser("locate", parents=[common, fam], help="bisect for the Fibonacci parameter")
    p.add_argument("--trajectory-depth", dest="trajectory_depth")
    p.add_argument("--min-width-bits", dest="min_width_bits", help="stop only below 2**-N bracket width")
    p.add_argument("--trajectory-csv", dest="trajectory_csv", help="also write the trajectory CSV here")
    p = sub.add_parser("invariants", parents=[common, fam], help="invariants of a trajectory")
    p.add_argument("--trajectory", help="trajectory CSV to read instead of computing one")
    p = sub.add_parser("conjugacy", parents=[common], help="classify the conjugacy of two maps")
    p.add_argument("--f", help="settings of the first map, 'x1=-0.4;s=0.5;...'")
    p.add_argument("--g", help="settings of the second map")
    p.add_argument("--dh-csv", dest="dh_csv", help="write the Dh table here")
    sub.add_parser("verify", parents=[common, fam], help="oracle and Jacobian cross-checks")
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        for extra in ("trajectory_csv", "trajectory", "dh_csv"):
            if getattr(args, extra, None):
                cfg[extra] = getattr(args, extra)
        code = COMMANDS[args.command](cfg)
        return EXIT_OK if code is None else code
    except (ConfigError, OSError, DepthMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PrecisionCeiling as exc:
        print(f"precision ceiling: {exc}", file=sys.stderr)
        return EXIT_CEILING
    except (DepthNotReached, NotRenormalizable, NotConverged) as exc:
        print(f"depth not reached: {exc}", file=sys.stderr)
        return EXIT_DEPTH
    except Inconclusive as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None):
    sys.exit(run(argv))
