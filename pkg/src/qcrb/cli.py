"""Command-line front end.

    qcrb fisher   --family r-fixed:0.5 --theta 1.5707963,0
    qcrb bounds   --family r-fixed:0.5 --theta 1.5707963,0 --G 1,0,0
    qcrb frontier --family r-fixed:0.5 --kind asymptotic --y -2:2:41 --z -2:2:41
    qcrb povm     --family r-fixed:0.5 --theta 1.5707963,0 --G 1,0,0 --copies 2
    qcrb sweep    --family r-fixed:0.5 --param r0 --range 0.25:1:4 --G 1,0,0

Exit status: 0 success, 1 usage, 2 domain/parameter error, 3 numeric or
search failure.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, bounds, families, infogeo, povmopt
from .errors import ParameterError, QcrbError

EXIT_OK, EXIT_USAGE = 0, 1

SWEEP_COLUMNS = ("step_value", "C", "C_A", "C_R", "searched", "gap_C_CA")
FRONTIER_COLUMNS = ("y", "z", "x", "v11", "v12", "v22")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# serialization


def _fmt(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "null"
    return format(float(x), ".17g")


def to_json(obj, indent=2, _level=0):
    """JSON text with every real written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)) or obj is None:
        return _fmt(obj)
    return json.dumps(str(obj))


def to_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else _fmt(row[c]) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument parsing


def parse_reals(text, name):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated reals, got {text!r}") from None


def parse_range(text, name):
    """``start:stop:steps`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, steps = text.split(":")
            values = list(np.linspace(float(start), float(stop), int(steps)))
        else:
            values = parse_reals(text, name)
    except ValueError:
        raise UsageError(f"--{name}: cannot parse range {text!r}") from None
    if not values:
        raise UsageError(f"--{name}: empty range")
    return values


def _join_negative_values(argv):
    # let "--y -2:2:41" through; argparse only accepts plain negative numbers
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and tok[:1] == "-" and tok[1:2].isdigit():
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def build_parser():
    parser = _Parser(prog="qcrb", description="Quantum Cramer-Rao type bounds for qubit and thermal families.")
    parser.add_argument("--version", action="version", version=f"qcrb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, theta=True, weight=True):
        p.add_argument("--family", required=True, help="full | r-fixed:<r0> | phi-zero | thermal:<N>:<fock_dim>")
        if theta:
            p.add_argument("--theta", help="parameter point, comma-separated radians")
        if weight:
            p.add_argument("--G", dest="G", help="weight matrix: row-major entries, or g1,g2,g3 when d=2")
        p.add_argument("--output", "-o", help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    def search(p):
        p.add_argument("--m", type=int, help="outcome count")
        p.add_argument("--restarts", type=int, default=16)
        p.add_argument("--iters", type=int, default=120)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--copies", type=int, default=1)

    common(sub.add_parser("fisher", help="SLD/RLD Fisher matrices and SLDs"), weight=False)
    common(sub.add_parser("bounds", help="C, C_A and C_R at one point"))
    p = sub.add_parser("frontier", help="covariance frontier grid")
    common(p)
    p.add_argument("--kind", choices=("single", "asymptotic"), default="asymptotic")
    p.add_argument("--y", default="-2:2:41")
    p.add_argument("--z", default="-2:2:41")
    p = sub.add_parser("povm", help="brute-force POVM search")
    common(p)
    search(p)
    p = sub.add_parser("sweep", help="bounds along r0 or copy number")
    common(p)
    search(p)
    p.add_argument("--param", choices=("r0", "n_copies"), required=True)
    p.add_argument("--range", dest="range_", required=True, help="start:stop:steps or list")
    p.add_argument("--search", action="store_true", help="also run the POVM search (r0 sweeps)")
    return parser


def _family(args):
    return families.StateFamily.parse(args.family)


def _theta(args, family):
    if getattr(args, "theta", None):
        return np.array(parse_reals(args.theta, "theta"))
    defaults = {
        families.QUBIT_FULL: [0.5, np.pi / 2, 0.0],
        families.QUBIT_R_FIXED: [np.pi / 2, 0.0],
        families.QUBIT_PHI_ZERO: [0.5, np.pi / 2],
        families.DISPLACED_THERMAL: [0.0, 0.0],
    }
    return np.array(defaults[family.kind])


def _weight(args, family):
    if not getattr(args, "G", None):
        return np.eye(family.param_dim)
    return bounds.weight_matrix(parse_reals(args.G, "G"), family.param_dim)


def _seed(args):
    env = os.environ.get("QCRB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"QCRB_SEED must be an integer, got {env!r}") from None
    return args.seed


# ---------------------------------------------------------------------------
# commands


def cmd_fisher(args):
    family = _family(args)
    theta = _theta(args, family)
    fp = families.eval_derivs(family, theta)
    slds = infogeo.slds(fp)
    J = infogeo.sld_fisher(fp.rho, slds)
    try:
        Jt = infogeo.rld_fisher_at(fp).to_dict()
    except QcrbError as exc:
        Jt = None
        note = str(exc)
    else:
        note = None
    result = {
        "J": J.to_dict(),
        "Jt": Jt,
        "slds": [{"real": L.real.tolist(), "imag": L.imag.tolist()} for L in slds] if fp.dim <= 8 else None,
        "notes": {"Jt": note} if note else {},
    }
    return result, None


def _bounds_result(report, family):
    out = report.to_dict()
    if family.kind == families.QUBIT_PHI_ZERO:
        out["K_VA"] = {"V": np.linalg.inv(report.J.entries).tolist(), "provenance": bounds.PAPER_CLAIM}
    return out


def cmd_bounds(args):
    family = _family(args)
    report = bounds.compute_bounds(family, _theta(args, family), _weight(args, family))
    rows = [{"C": report.C, "C_A": report.C_A, "C_R": report.C_R}]
    return _bounds_result(report, family), (("C", "C_A", "C_R"), rows)


def cmd_frontier(args):
    family = _family(args)
    G = _weight(args, family)
    ys, zs = parse_range(args.y, "y"), parse_range(args.z, "z")
    if family.kind == families.QUBIT_R_FIXED:
        kind = bounds.RFIXED_SINGLE if args.kind == "single" else bounds.RFIXED_ASYMPTOTIC
        r = family.r0
        columns = FRONTIER_COLUMNS
        block = G
    elif family.kind == families.QUBIT_FULL and args.kind == "asymptotic":
        theta = _theta(args, family)
        if abs(theta[1] - np.pi / 2) > 1e-6 or abs(theta[2]) > 1e-6:
            raise ParameterError("the full-family frontier is available only at (r, pi/2, 0)")
        kind, r = bounds.FULL_ASYMPTOTIC, float(theta[0])
        columns = ("y", "z", "x", "v00", "v11", "v12", "v22")
        block = G[1:, 1:]
    else:
        raise ParameterError(f"no explicit {args.kind} frontier for family {family.kind!r}")
    rows = []
    for y in ys:
        for z in zs:
            pt = bounds.frontier_point(kind, r=r, y=y, z=z)
            v = pt.V[-2:, -2:]
            row = {"y": y, "z": z, "x": pt.x, "v11": v[0, 0], "v12": v[0, 1], "v22": v[1, 1]}
            if kind == bounds.FULL_ASYMPTOTIC:
                row["v00"] = pt.V[0, 0]
            rows.append(row)
    result = {"kind": kind, "r": r, "rows": rows}
    if np.linalg.eigvalsh(block).min() > 0:
        value, best = bounds.frontier_min(kind, G, r=r)
        result["min"] = {"value": value, "point": best.to_dict()}
    return result, (columns, rows)


def _search(family, theta, G, copies, args, seed):
    fp = families.eval_derivs(family, theta)
    return povmopt.optimize(
        fp, G, n_copies=copies, m=args.m, restarts=args.restarts, iters=args.iters, seed=seed
    )


def cmd_povm(args):
    family = _family(args)
    theta, G = _theta(args, family), _weight(args, family)
    res = _search(family, theta, G, args.copies, args, _seed(args))
    report = bounds.compute_bounds(family, theta, G)
    result = res.to_dict()
    result["reference"] = {"C": report.C, "C_A": report.C_A, "C_R": report.C_R}
    return result, None


def cmd_sweep(args):
    family = _family(args)
    values = parse_range(args.range_, "range")
    G = _weight(args, family)
    seed = _seed(args)
    rows = []
    if args.param == "r0":
        if family.kind != families.QUBIT_R_FIXED:
            raise ParameterError("an r0 sweep needs an r-fixed family")
        theta = _theta(args, family)
        for r0 in values:
            fam = families.StateFamily(families.QUBIT_R_FIXED, r0=float(r0))
            rep = bounds.compute_bounds(fam, theta, G)
            searched = _search(fam, theta, G, args.copies, args, seed).best_value if args.search else None
            rows.append(_sweep_row(r0, rep, searched))
    else:
        theta = _theta(args, family)
        rep = bounds.compute_bounds(family, theta, G)
        for n in values:
            if n < 1 or n != int(n):
                raise UsageError(f"copy counts must be positive integers, got {n}")
            args.m = None
            searched = _search(family, theta, G, int(n), args, seed).best_value
            rows.append(_sweep_row(int(n), rep, searched))
    return {"param": args.param, "rows": rows}, (SWEEP_COLUMNS, rows)


def _sweep_row(step, rep, searched):
    gap = rep.C - rep.C_A if rep.C is not None and rep.C_A is not None else None
    return {"step_value": step, "C": rep.C, "C_A": rep.C_A, "C_R": rep.C_R, "searched": searched, "gap_C_CA": gap}


COMMANDS = {
    "fisher": cmd_fisher,
    "bounds": cmd_bounds,
    "frontier": cmd_frontier,
    "povm": cmd_povm,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# report validation


def validate_report(env):
    """Re-check a parsed report envelope against its invariants.

    Returns a list of problems; empty means the report is consistent.
    """
    problems = []
    for key in ("version", "config", "result", "wall_ms"):
        if key not in env:
            problems.append(f"missing key {key!r}")
    if problems:
        return problems
    command, res = env["config"].get("command"), env["result"]
    if command == "bounds":
        c, ca, cr = res["C"], res["C_A"], res["C_R"]
        if bounds.check_ordering(c, ca, cr) != res["ordering_ok"]:
            problems.append("ordering_ok disagrees with the reported values")
        j = np.array(res["J"]["real"])
        if np.max(np.abs(j - j.T)) > 1e-12:
            problems.append("J is not symmetric")
    elif command == "fisher":
        j = np.array(res["J"]["real"])
        if np.max(np.abs(j - j.T)) > 1e-12 or np.linalg.eigvalsh(j).min() < -1e-9:
            problems.append("J is not symmetric PSD")
    elif command == "frontier":
        for row in res["rows"]:
            x = bounds.frontier_x(res["kind"], res["r"], row["y"], row["z"])
            if abs(x - row["x"]) > 1e-10 * max(1.0, abs(x)):
                problems.append(f"row ({row['y']}, {row['z']}) violates the frontier equation")
                break
    elif command == "sweep":
        for row in res["rows"]:
            if row["gap_C_CA"] is not None and abs(row["C"] - row["C_A"] - row["gap_C_CA"]) > 1e-9:
                problems.append(f"gap column inconsistent at {row['step_value']}")
    elif command == "povm":
        ref = res["reference"]
        floor = ref["C_R"] if ref["C_R"] is not None else ref["C_A"]
        if floor is not None and res["best_value"] < floor - 1e-6:
            problems.append("searched value falls below the RLD floor")
    return problems


# ---------------------------------------------------------------------------
# entry point


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        argv = sys.argv[1:] if argv is None else list(argv)
        args = build_parser().parse_args(_join_negative_values(argv))
        start = time.perf_counter()
        result, table = COMMANDS[args.command](args)
        wall = (time.perf_counter() - start) * 1e3
        config = {k: v for k, v in vars(args).items() if k not in ("output",)}
        if "range_" in config:
            config["range"] = config.pop("range_")
        if args.command in ("povm", "sweep"):
            config["seed"] = _seed(args)
        if args.format == "csv":
            if table is None:
                raise UsageError(f"{args.command} has no CSV form; use --format json")
            text = to_csv(*table)
        else:
            envelope = {"version": __version__, "config": config, "result": result, "wall_ms": wall}
            text = to_json(envelope) + "\n"
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except QcrbError as exc:
        print(f"error: {exc}", file=stderr)
        return exc.exit_code
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
