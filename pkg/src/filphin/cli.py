"""Command-line front end.

Exit codes: 0 success (or verdict equal), 1 verdict unequal, 2 input error or
failed validation, 3 internal inconsistency in the extension-class check.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import exactlin as xl
from . import instancegen as ig
from . import linvariants as lv
from . import phinmod as pm
from . import sscoh as sc

EXIT_OK, EXIT_UNEQUAL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _emit(out, fmt: str, obj: dict, text_lines: list[str]) -> None:
    if fmt == "structured":
        out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    else:
        out.write("\n".join(text_lines) + "\n")


def _load(paths: list[str]) -> list[tuple[str, ig.InstanceFile]]:
    out = []
    for path in paths:
        try:
            out.append((path, ig.read(path)))
        except OSError as exc:
            raise InputError("%s: %s" % (path, exc.strerror or exc)) from None
        except ig.InstanceFormatError as exc:
            raise InputError("%s: %s" % (path, exc)) from None
    return out


def _blocks(files, twist):
    """Yield ``(path, file, block, m)``; with ``twist`` set, each module is re-twisted to it."""
    for path, inst in files:
        for b in inst.primes:
            if twist is None or twist == b.m:
                yield path, inst, b, b.m
            else:
                M = pm.retwist(b.module, b.m, twist)
                yield path, inst, ig.PrimeBlock(b.label, M, twist, dict(b.expected)), twist


# --- validate


def cmd_validate(args, out) -> int:
    files = _load(args.inputs)
    results, lines, code = [], [], EXIT_OK
    for path, inst, b, m in _blocks(files, args.twist):
        try:
            rep = pm.validate(b.module, m, inst.hypotheses)
        except pm.MalformedModuleError as exc:
            raise InputError("%s [%s]: %s" % (path, b.label, exc)) from None
        if not rep.ok:
            code = EXIT_INPUT
        results.append({
            "file": path,
            "label": b.label,
            "m": m,
            "ok": rep.ok,
            "axioms": {k: {"status": r.status, "witness": r.witness} for k, r in rep.results.items()},
            "hypotheses": {k: ("declared" if v else "undeclared") for k, v in rep.hypotheses.items()},
        })
        lines.append("%s [%s] m = %d: %s" % (path, b.label, m, "admissible" if rep.ok else "NOT admissible"))
        lines.extend("  " + s for s in rep.lines())
    _emit(out, args.format, {"format": "filphin-validate/1", "results": results}, lines)
    return code


def _require_valid(path, inst, b, m):
    try:
        rep = pm.validate(b.module, m, inst.hypotheses)
    except pm.MalformedModuleError as exc:
        raise InputError("%s [%s]: %s" % (path, b.label, exc)) from None
    if not rep.ok:
        bad = ["(%s) %s" % (k, rep.results[k].witness or rep.results[k].status) for k in rep.failed() + rep.skipped()]
        raise InputError("%s [%s]: not admissible: %s" % (path, b.label, "; ".join(bad)))


# --- fm / gb


def cmd_fm(args, out) -> int:
    files = _load(args.inputs)
    results, lines = [], []
    for path, inst, b, m in _blocks(files, args.twist):
        _require_valid(path, inst, b, m)
        L = lv.fm_invariant(b.module, m)
        row = {"file": path, "label": b.label, "m": m, "L_FM": xl.format_scalar(L), "degenerate": lv.is_degenerate(L)}
        line = "%s [%s] L_FM = %s" % (path, b.label, xl.format_scalar(L))
        if lv.is_degenerate(L):
            line += " (degenerate)"
        if args.operator is not None:
            vals = [lv.fm_operator(b.module, m, args.operator, embedding=s) for s in range(b.module.e)]
            row["operator"] = args.operator
            row["L_op"] = [xl.format_scalar(x) for x in vals]
            line += "; L^(%d) = %s" % (args.operator, ", ".join(map(xl.format_scalar, vals)))
        results.append(row)
        lines.append(line)
    _emit(out, args.format, {"format": "filphin-fm/1", "results": results}, lines)
    return EXIT_OK


def cmd_gb(args, out) -> int:
    files = _load(args.inputs)
    results, lines = [], []
    for path, inst, b, m in _blocks(files, args.twist):
        _require_valid(path, inst, b, m)
        d = lv.gb_local_data(b.module, m)
        results.append({
            "file": path, "label": b.label, "m": m,
            "L_W": xl.format_scalar(d.L_W), "a": xl.format_scalar(d.a), "b": xl.format_scalar(d.b),
        })
        lines.append("%s [%s] L(W) = %s  (a = %s, b = %s)" % (path, b.label, *map(xl.format_scalar, (d.L_W, d.a, d.b))))
    _emit(out, args.format, {"format": "filphin-gb/1", "results": results}, lines)
    return EXIT_OK


# --- compare


def _report_lines(title: str, rep: lv.LReport) -> list[str]:
    f = xl.format_scalar
    lines = [title] if title else []
    for r in rep.primes:
        lines.append("prime %s (p = %d, n = %d, e = %d, m = %d)" % (r.label, r.p, r.n, r.e, r.m))
        lines.append("  L_FM = %s" % f(r.L_FM))
        lines.append("  L(W) = %s" % f(r.L_W))
        for s, row in enumerate(r.L_ops):
            lines.append("  L_ops[%d] = %s" % (s, ", ".join(f(x) for x in row)))
        lines.append("  step1 = %s" % r.step1)
        if r.step3_scalar is not None:
            lines.append("  step3 scalar c = %s" % f(r.step3_scalar))
        if r.w_ranks:
            lines.append("  w_ranks = %s" % (tuple(r.w_ranks),))
        if r.degenerate:
            lines.append("  degenerate (L_FM = 0)")
    lines.append("L_GB = %s" % f(rep.L_GB))
    lines.append("prod(-L_FM) = %s" % f(rep.product))
    lines.append("verdict = %s" % rep.verdict)
    return lines


def _compare_one(paths, files, twist):
    mods, labels, hyp = [], [], {}
    for path, inst, b, m in _blocks(files, twist):
        _require_valid(path, inst, b, m)
        mods.append((b.module, m))
        labels.append(b.label)
        hyp = {k: hyp.get(k, True) and v for k, v in inst.hypotheses.items()}
    ms = {m for _, m in mods}
    if len(ms) != 1:
        raise InputError("primes use different twists %s; pass --twist to align them or --each" % sorted(ms))
    rep = lv.compare(mods, labels, hyp)
    d = rep.to_dict()
    d["inputs"] = list(paths)
    return rep, d


def cmd_compare(args, out) -> int:
    files = _load(args.inputs)
    groups = [([p], [(p, i)]) for p, i in files] if args.each else [([p for p, _ in files], files)]
    reports, lines, code = [], [], EXIT_OK
    for paths, fs in groups:
        rep, d = _compare_one(paths, fs, args.twist)
        reports.append(d)
        lines.extend(_report_lines(", ".join(paths) if args.each else "", rep))
        if not rep.equal:
            code = EXIT_UNEQUAL
    obj = reports[0] if not args.each else {"format": "filphin-report-set/1", "reports": reports}
    _emit(out, args.format, obj, lines)
    return code


# --- generate


def _parse_weights(raw: list[str], e: int) -> tuple:
    ws = []
    for item in raw:
        try:
            ws.append(tuple(int(x) for x in item.split(",")))
        except ValueError:
            raise InputError("--weights %r: expected comma-separated integers" % item) from None
    if len(ws) == 1 and e > 1:
        ws = ws * e
    return tuple(ws)


def cmd_generate(args, out) -> int:
    try:
        L = xl.parse_scalar(args.L)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError("--L %r: %s" % (args.L, exc)) from None
    try:
        spec = ig.GenSpec(
            p=args.p, n=args.n, e=args.e, m=args.m, weights=_parse_weights(args.weights, args.e),
            planted_L=L, seed=args.seed, degenerate=args.degenerate, conjugate=not args.no_conjugate,
        )
        inst = ig.instance_from_specs([spec], [args.label] if args.label else None)
    except (ValueError, ig.GenerationError) as exc:
        raise InputError(str(exc)) from None
    text = ig.dumps(inst)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


# --- cohomology


def cmd_cohomology(args, out) -> int:
    files = _load(args.inputs)
    results, lines = [], []
    for path, inst, b, _ in _blocks(files, None):
        M = b.module
        t = args.twist if args.twist is not None else 0
        if t:
            M = pm.tate_twist(M, t)
        try:
            C = sc.build_st(M) if args.complex == "st" else sc.build_cris(M)
            dim, reps = sc.h(C, args.degree)
        except sc.ComplexError as exc:
            raise InputError("%s [%s]: %s" % (path, b.label, exc)) from None
        rs = [[xl.format_scalar(x) for x in r.rep] for r in reps]
        results.append({"file": path, "label": b.label, "complex": args.complex, "twist": t, "degree": args.degree, "dim": dim, "representatives": rs})
        lines.append("%s [%s] H^%d(C_%s), twist %d: dim = %d" % (path, b.label, args.degree, args.complex, t, dim))
        lines.extend("  (%s)" % ", ".join(r) for r in rs)
    _emit(out, args.format, {"format": "filphin-cohomology/1", "results": results}, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="filphin", description="L-invariants of filtered (phi, N)-modules")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, twist=True):
        p.add_argument("inputs", nargs="+", help="instance files")
        p.add_argument("--format", choices=("text", "structured"), default="text")
        if twist:
            p.add_argument("--twist", type=int, default=None, help="Tate-twist every prime so that its m becomes this value")

    common(sub.add_parser("validate", help="check the admissibility axioms"))
    p = sub.add_parser("fm", help="flag-route L-invariant")
    common(p)
    p.add_argument("--operator", type=int, default=None, metavar="I", help="also print L^(I)")
    common(sub.add_parser("gb", help="homological-route local ratio L(W)"))
    p = sub.add_parser("compare", help="both sides and the verdict")
    common(p)
    p.add_argument("--each", action="store_true", help="compare every file on its own instead of merging")
    p = sub.add_parser("cohomology", help="cohomology of the semistable or crystalline complex")
    common(p, twist=False)
    p.add_argument("--twist", type=int, default=None, help="compute for the Tate twist M(t)")
    p.add_argument("--complex", choices=("st", "cris"), default="st")
    p.add_argument("--degree", type=int, default=1)

    p = sub.add_parser("generate", help="write a generated instance")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--e", type=int, default=1)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--weights", action="append", required=True, help="comma-separated, once per embedding")
    p.add_argument("--L", required=True, help="planted value as a fraction string")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-conjugate", action="store_true", help="keep the eigenbasis (no change of basis)")
    p.add_argument("--degenerate", action="store_true", help="allow L = 0")
    p.add_argument("--label", default=None)
    p.add_argument("--out", default=None)
    return ap


COMMANDS = {
    "validate": cmd_validate,
    "fm": cmd_fm,
    "gb": cmd_gb,
    "compare": cmd_compare,
    "generate": cmd_generate,
    "cohomology": cmd_cohomology,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except lv.Step1MismatchError as exc:
        err.write("internal inconsistency: %s\n" % exc)
        return EXIT_INTERNAL
    except (InputError, pm.AdmissibilityError, pm.MalformedModuleError, lv.LInvariantError, sc.ComplexError) as exc:
        err.write("error: %s\n" % exc)
        return EXIT_INPUT


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
