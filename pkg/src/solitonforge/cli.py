"""Command-line front end: ``solitonforge <command> ...``.

Exit codes: 0 success, 1 verification failed / infeasible / oracle mismatch,
2 input error, 3 internal invariant violation.
"""

import argparse
import hashlib
import logging
import sys
from fractions import Fraction

from . import __version__, catalog, oracle
from .catalog import SelfTestFailure
from .errors import (
    AsymmetryDetected,
    NonAffineResidual,
    ParseError,
    SolitonForgeError,
)
from .geometry import curvature
from .parser import format_model, parse_scalar
from .soliton import (
    NonUnitPivot,
    assemble_system,
    classify,
    default_ansatz,
    gradient_check,
    solve,
    verify,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
INTERNAL_ERRORS = (AsymmetryDetected, NonAffineResidual, SelfTestFailure, NonUnitPivot)


class InputError(SolitonForgeError):
    """Bad command-line input."""


class Report:
    """Ordered key/value document with an optional human rendering."""

    def __init__(self, command):
        self.items = [("command", command)]
        self.status = EXIT_OK

    def add(self, key, value):
        self.items.append((key, _text(value)))

    def section(self, title):
        self.items.append((None, title))

    def machine(self):
        lines = [f"{k} = {v}" for k, v in self.items if k is not None]
        lines.append(f"exit_status = {self.status}")
        return "\n".join(lines) + "\n"

    def human(self):
        lines = []
        for k, v in self.items:
            if k is None:
                lines.append(f"\n== {v} ==")
            else:
                lines.append(f"{k}: {v}")
        return "\n".join(lines).lstrip("\n") + "\n"


def _text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "to_str"):
        return value.to_str()
    if isinstance(value, float):
        return format(value, ".6e")
    return str(value)


def _model_hash(model):
    return hashlib.sha256(format_model(model).encode()).hexdigest()[:16]


def _load(args, report):
    try:
        model = catalog.load_model(args.model)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    report.add("model", model.name)
    report.add("model_hash", _model_hash(model))
    return model


def _parse_pin(text, model):
    name, sep, value = text.partition("=")
    name = name.strip()
    if not sep or name not in model.params:
        raise InputError(f"--pin expects NAME=RATIONAL with NAME a parameter, got {text!r}")
    try:
        q = Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"--pin value {value!r} is not a rational") from None
    if "pm1" in model.constraints.get(name, ()) and abs(q) != 1:
        raise InputError(f"{name} is a sign parameter and can only be pinned to 1 or -1")
    return name, q


def _field(model, name):
    if name not in model.fields:
        known = ", ".join(sorted(model.fields)) or "none"
        raise InputError(f"model {model.name} has no vector field {name!r} (known: {known})")
    return model.fields[name]


# -- commands -------------------------------------------------------------


def cmd_curvature(args, report):
    m = _load(args, report)
    cv = curvature(m)
    n = m.dim
    report.section("connection")
    for k in range(n):
        for i in range(n):
            for j in range(n):
                e = cv.gamma[k][i][j]
                if not e.is_zero():
                    report.add(f"gamma[{k + 1}][{i + 1}][{j + 1}]", e)
    report.section("curvature slices R(d_i, d_j), entry [l][k] = d_l component of R(d_i, d_j) d_k")
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(n):
                for k in range(n):
                    e = cv.slices[i][j][l][k]
                    if not e.is_zero():
                        report.add(f"R[{i + 1}][{j + 1}][{l + 1}][{k + 1}]", e)
    report.section("ricci")
    for i in range(n):
        for j in range(i, n):
            e = cv.ricci[i][j]
            if not e.is_zero():
                report.add(f"ricci[{i + 1}][{j + 1}]", e)
    report.add("scalar_curvature", cv.scalar)


def cmd_verify(args, report):
    m = _load(args, report)
    X = _field(m, args.field)
    if args.lam is None:
        if args.field not in m.solitons:
            raise InputError("--lambda is required for a field without a recorded soliton constant")
        lam = m.solitons[args.field]
    else:
        try:
            lam = parse_scalar(args.lam, m.ctx)
        except ParseError as exc:
            raise InputError(f"--lambda: {exc}") from None
    ok, res = verify(m, X, lam)
    report.add("field", args.field)
    report.add("lambda", lam)
    report.add("verified", ok)
    for i in range(m.dim):
        for j in range(i, m.dim):
            if not res[i][j].is_zero():
                report.add(f"residual[{i + 1}][{j + 1}]", res[i][j])
    if not ok:
        report.status = EXIT_FAIL


def cmd_solve(args, report):
    m = _load(args, report)
    for text in args.pin or []:
        name, q = _parse_pin(text, m)
        m = m.pin(name, q)
        report.add("pinned", f"{name} = {q}")
    if args.degree < 0 or args.freq_depth < 0:
        raise InputError("--degree and --freq-depth must be nonnegative")
    ansatz = default_ansatz(m, args.degree, args.freq_depth)
    system = assemble_system(m, ansatz)
    report.add("ansatz_degree", args.degree)
    report.add("ansatz_freq_depth", args.freq_depth)
    report.add("unknowns", len(system.columns))
    report.add("equations", len(system.rows))
    result = solve(system)
    if not result.feasible:
        report.add("status", "infeasible")
        report.add("certificate", result.certificate())
        report.add("certificate_location", result.location)
        report.add("certificate_source_row", result.source_text)
        report.status = EXIT_FAIL
        return
    report.add("status", "feasible")
    report.add("rank", result.rank)
    if result.lam is None:
        report.add("lambda", "undetermined")
    else:
        report.add("lambda", result.lam)
    report.add("lambda_forced", result.lambda_forced)
    if result.lambda_forced and result.lam.is_const:
        report.add("classification", classify(result.lam))
    report.add("free_constants", result.free_count)
    dens = result.pivot_denominators
    report.add("pivot_denominators", ", ".join(d.to_str() for d in dens) if dens else "none")
    for i, c in enumerate(result.particular.comps):
        report.add(f"particular[{i + 1}]", c)
    for a, (h, hl) in enumerate(zip(result.homogeneous, result.homogeneous_lam)):
        for i, c in enumerate(h.comps):
            report.add(f"direction[{a + 1}][{i + 1}]", c)
        if not hl.is_zero():
            report.add(f"direction[{a + 1}][lambda]", hl)
    taken = set(m.ctx.params) | set(m.ctx.coords)
    prefix = next(p for p in ("C", "K", "Q", "Z") if not any(n.startswith(p) for n in taken))
    _, general = result.general(prefix)
    report.add("general_constants", " ".join(f"{prefix}{a + 1}" for a in range(result.free_count)) or "none")
    for i, c in enumerate(general.comps):
        report.add(f"general[{i + 1}]", c)


def cmd_gradient(args, report):
    m = _load(args, report)
    X = _field(m, args.field)
    verdict = gradient_check(m, X)
    report.add("field", args.field)
    report.add("verdict", verdict.tag)
    if not verdict.gradient:
        i, j = verdict.witness_index
        report.add("witness_index", f"{i + 1},{j + 1}")
        report.add("witness", verdict.witness)


def cmd_oracle(args, report):
    m = _load(args, report)
    if args.points <= 0:
        raise InputError("--points must be positive")
    if not args.h > 0:
        raise InputError("--h must be positive")
    report.add("seed", args.seed)
    report.add("points", args.points)
    report.add("h", args.h)
    report.add("rel_tol", oracle.DEFAULT_REL)
    report.add("abs_tol", oracle.DEFAULT_ABS)
    passed = True
    for n, setting in enumerate(oracle.settings_for(m), start=1):
        _, comps = oracle.run(m, setting, args.points, seed=args.seed, h=args.h)
        label = ", ".join(f"{k}={v}" for k, v in setting.items()) or "none"
        report.add(f"setting[{n}].params", label)
        for c in comps:
            report.add(f"setting[{n}].{c.name}.max_abs", c.max_abs)
            report.add(f"setting[{n}].{c.name}.max_rel", c.max_rel)
            report.add(f"setting[{n}].{c.name}.pass", c.passed)
            passed &= c.passed
    report.add("pass", passed)
    if not passed:
        report.status = EXIT_FAIL


def cmd_catalog(args, report):
    if args.action == "list":
        for mid in catalog.list_ids():
            report.add("id", mid)
        return
    if not args.id:
        raise InputError("catalog show needs a model id")
    try:
        entry = catalog.get(args.id)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    report.add("id", entry.id)
    report.add("model_hash", _model_hash(entry.model))
    report.add("provenance", entry.provenance)
    m = entry.model
    for i in range(m.dim):
        for j in range(i, m.dim):
            e = m.metric[i][j]
            if not e.is_zero():
                report.add(f"g[{i + 1}][{j + 1}]", e)
    for name, (X, lam) in entry.solutions.items():
        report.add("known_soliton", name)
        for i, c in enumerate(X.comps):
            report.add(f"{name}[{i + 1}]", c)
        report.add(f"{name}.lambda", lam)


# -- entry point ----------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="solitonforge", description="Exact Ricci-soliton toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curvature", help="connection, curvature slices, Ricci and scalar curvature")
    c.add_argument("model")
    c.set_defaults(run=cmd_curvature)

    s = sub.add_parser("soliton", help="verify or solve the soliton equation")
    ssub = s.add_subparsers(dest="action", required=True)
    v = ssub.add_parser("verify")
    v.add_argument("model")
    v.add_argument("--field", required=True)
    v.add_argument("--lambda", dest="lam", default=None, help="expression such as -2/mu")
    v.set_defaults(run=cmd_verify)
    sv = ssub.add_parser("solve")
    sv.add_argument("model")
    sv.add_argument("--pin", action="append", metavar="NAME=RATIONAL")
    sv.add_argument("--degree", type=int, default=2)
    sv.add_argument("--freq-depth", type=int, default=2)
    sv.set_defaults(run=cmd_solve)

    g = sub.add_parser("gradient-check", help="is the field a gradient (closed 1-form)?")
    g.add_argument("model")
    g.add_argument("--field", required=True)
    g.set_defaults(run=cmd_gradient)

    o = sub.add_parser("oracle", help="finite-difference cross-check of Gamma and Ricci")
    o.add_argument("model")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--points", type=int, default=100)
    o.add_argument("--h", type=float, default=oracle.DEFAULT_H)
    o.set_defaults(run=cmd_oracle)

    k = sub.add_parser("catalog", help="list or show built-in models")
    k.add_argument("action", choices=("list", "show"))
    k.add_argument("id", nargs="?")
    k.set_defaults(run=cmd_catalog)
    return p


def _glue_negative_values(argv):
    """Let ``--lambda -2/mu`` through: argparse would read ``-2/mu`` as an option."""
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--lambda", "--pin"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def run(argv=None, stdout=None, stderr=None):
    """Execute a command; returns (exit code, Report or None)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_OK if exc.code == 0 else EXIT_INPUT), None
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, stream=stderr)
    words = [args.command] + ([args.action] if getattr(args, "action", None) else [])
    target = getattr(args, "model", None) or getattr(args, "id", None)
    report = Report(" ".join(words + ([target] if target else [])))
    try:
        args.run(args, report)
    except INTERNAL_ERRORS as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_INTERNAL, None
    except (SolitonForgeError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=stderr)
        return EXIT_INPUT, None
    stdout.write(report.machine() if args.format == "machine" else report.human())
    return report.status, report


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
