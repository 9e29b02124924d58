"""Command-line front end.

Subcommands: validate, reflect, check, recover, classifier, gallery.
Exit codes: 0 all pass/match, 1 check failure or regression mismatch,
2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ParseError, RecoveryError, ValidationError, WorkbenchError
from .fileio import (element_labels, load_bisite, load_category,
                     load_presheaf, load_topology, parse_nat, sniff_kind,
                     write_nat, write_presheaf, write_topology)
from .gallery import (CASE_NAMES, TABLE_ORACLES, gallery_bisites,
                      identity_oracle, run_case)
from .presheaf import is_iso
from .reflector import (BisiteReflection, CONDITIONS, build_probe_set,
                        certify_reflection, check_classifies,
                        check_e_equals_biseparated, normalize_condition,
                        recover_j, recover_k, run_checks, weak_classifier)
from .sites import (BiSite, biseparated_reflect, is_sheaf, is_separated,
                    separated_reflection, sheafify, trivial_topology)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(
        prog="finsite",
        description="Exact computations with presheaves on finite sites: "
                    "sheafification, separated and biseparated reflections, "
                    "limit-preservation checks, topology recovery.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(required=True)

    v = sub.add_parser("validate", help="validate input files")
    v.add_argument("paths", nargs="+")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("reflect", help="reflect a presheaf")
    r.add_argument("--site", required=True)
    r.add_argument("--presheaf", required=True)
    r.add_argument("--j")
    r.add_argument("--k")
    r.add_argument("--mode", choices=("sheafify", "separated",
                                      "biseparated"))
    r.add_argument("--out-dir", default=".")
    r.add_argument("--certify", action="store_true",
                   help="run the orthogonality oracle on the result")
    r.add_argument("--bound", type=int, default=3)
    r.add_argument("--format", choices=("text", "json"), default="text")
    r.set_defaults(func=cmd_reflect)

    c = sub.add_parser("check", help="run condition checkers on a "
                                     "reflection")
    c.add_argument("reflection",
                   help="gallery:<name>, table:<name>, identity, or "
                        "bisite:<file> (with --site)")
    c.add_argument("--site")
    c.add_argument("--conditions", default="all",
                   help="comma-separated conditions or 'all'")
    c.add_argument("--bound", type=int, default=3)
    c.add_argument("--expect-fail", default="",
                   help="comma-separated conditions expected to fail")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.set_defaults(func=cmd_check)

    rec = sub.add_parser("recover", help="recover the two topologies from "
                                         "a reflection")
    rec.add_argument("reflection")
    rec.add_argument("--site")
    rec.add_argument("--out-dir", default=".")
    rec.add_argument("--bound", type=int, default=3)
    rec.add_argument("--format", choices=("text", "json"), default="text")
    rec.set_defaults(func=cmd_recover)

    cl = sub.add_parser("classifier", help="weak subobject classifier of a "
                                           "bisite reflection")
    cl.add_argument("--site", required=True)
    cl.add_argument("--j", default="trivial")
    cl.add_argument("--k", required=True)
    cl.add_argument("--bound", type=int, default=2)
    cl.add_argument("--out-dir", default=".")
    cl.add_argument("--format", choices=("text", "json"), default="text")
    cl.set_defaults(func=cmd_classifier)

    g = sub.add_parser("gallery", help="built-in example suite")
    gsub = g.add_subparsers(required=True)
    gl = gsub.add_parser("list")
    gl.set_defaults(func=cmd_gallery_list)
    gr = gsub.add_parser("run")
    gr.add_argument("name", nargs="?")
    gr.add_argument("--all", action="store_true")
    gr.add_argument("--format", choices=("text", "json"), default="text")
    gr.set_defaults(func=cmd_gallery_run)
    return p


def emit(args, command, inputs, results, ok):
    if args.format == "json":
        print(json.dumps({
            "tool_version": __version__,
            "command": command,
            "inputs": inputs,
            "results": results,
        }, indent=2, default=str))
    return EXIT_OK if ok else EXIT_FAIL


def _result(name, verdict, exhaustive=None, witness=None, **extra):
    out = {"name": name, "verdict": verdict}
    if exhaustive is not None:
        out["exhaustive"] = exhaustive
    if witness:
        out["witness"] = witness
    out.update(extra)
    return out


# ---------------------------------------------------------------------------


def cmd_validate(args):
    results = []
    ok = True
    cat = None
    registry = {}
    for path in args.paths:
        text = Path(path).read_text()
        try:
            kind = sniff_kind(text)
            if kind == "category":
                cat = load_category(path)
                registry = {}
                note = (f"{len(cat.objects)} objects, "
                        f"{len(cat.morphisms)} morphisms")
            elif cat is None:
                raise ParseError("load a category file first", path=path)
            elif kind == "presheaf":
                F = load_presheaf(path, cat)
                if F.name:
                    registry[F.name] = F
                note = "functorial"
            elif kind == "nat":
                parse_nat(text, registry, cat, path=path)
                note = "natural"
            elif kind == "topology":
                load_topology(path, cat)
                note = "axioms hold"
            elif kind == "bisite":
                load_bisite(path, cat)
                note = "first topology contained in the second"
            results.append(_result(path, "ok", note=note))
        except (ParseError, ValidationError) as exc:
            ok = False
            results.append(_result(path, "error", witness=str(exc)))
    if args.format == "text":
        for r in results:
            tail = r.get("note") or r.get("witness") or ""
            print(f"{r['name']}: {r['verdict']}  {tail}")
    code = emit(args, "validate", list(args.paths), results, ok)
    return EXIT_INPUT if not ok else code


def cmd_reflect(args):
    cat = load_category(args.site)
    F = load_presheaf(args.presheaf, cat)
    jt = load_topology(args.j, cat) if args.j else None
    kt = load_topology(args.k, cat) if args.k else None
    mode = args.mode
    if mode is None:
        mode = "biseparated" if (jt and kt) else "sheafify"
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = []
    ok = True

    if mode == "biseparated":
        jt = jt or trivial_topology(cat)
        if kt is None:
            raise ValidationError("biseparated reflection needs --k")
        bs = BiSite(cat, jt, kt)
        res = biseparated_reflect(F, bs)
        LF, unit = res.presheaf, res.unit
        results.append(_result("sheaf+separated", "ok"))
    elif mode == "sheafify":
        t = kt or jt
        if t is None:
            raise ValidationError("sheafify needs --j or --k")
        res = sheafify(F, t)
        LF, unit = res.presheaf, res.unit
        results.append(_result("sheaf", "ok" if is_sheaf(LF, t) else "fail"))
    else:
        t = kt or jt
        if t is None:
            raise ValidationError("separated reflection needs --j or --k")
        res = separated_reflection(F, t)
        LF, unit = res.presheaf, res.unit
        results.append(_result(
            "separated", "ok" if is_separated(LF, t) else "fail"))

    LF.name = f"L_{F.name or 'F'}"
    out_psh = outdir / f"{LF.name}.psh"
    out_nat = outdir / f"unit_{F.name or 'F'}.nat"
    out_psh.write_text(write_presheaf(LF))
    out_nat.write_text(write_nat(unit, name="unit", source_name=F.name,
                                 target_name=LF.name))
    results.append(_result("unit", "iso" if is_iso(unit) else "not-iso"))
    if args.certify:
        bs = BiSite(cat, jt or trivial_topology(cat),
                    kt or jt or trivial_topology(cat))
        oracle = BisiteReflection(bs)
        probes = build_probe_set(oracle, bound=args.bound)
        cert = certify_reflection(F, LF, unit, probes)
        results.append(_result("orthogonality", "pass" if cert else "fail",
                               exhaustive=True,
                               witness=None if cert else cert.detail))
        ok = ok and bool(cert)
    if args.format == "text":
        print(f"wrote {out_psh} and {out_nat}")
        for r in results:
            print(f"{r['name']}: {r['verdict']}")
    return emit(args, "reflect", [args.site, args.presheaf], results, ok)


def resolve_reflection(args):
    """Reflection descriptors: gallery:<name> / table:<name> / identity /
    bisite:<file>, or a descriptor file with a 'reflection ...' line.

    Returns (oracle, probe keyword arguments).  Gallery names reuse the
    case's tuned probe configuration (widened mono family, hand-picked
    witnesses); --bound overrides the default carrier bound.
    """
    from .gallery import _CASES, simple_graphs_oracle
    spec = args.reflection
    if Path(spec).is_file():
        text = Path(spec).read_text()
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(" ")
            if head != "reflection":
                raise ParseError(f"expected 'reflection ...', got {line!r}",
                                 path=spec)
            kind, _, value = rest.strip().partition(" ")
            spec = f"{kind}:{value.strip()}" if value else kind
            break
    kind, _, value = spec.partition(":")
    probe_kwargs = {"bound": args.bound}
    if kind in ("gallery", "table"):
        case = _CASES.get(value)
        if case is not None:
            probe_kwargs = {
                "bound": args.bound if args.bound != 3 else case.bound,
                "mono_bound": case.mono_bound,
                "extra_objects": case.extras() if case.extras else (),
            }
            return case.oracle(), probe_kwargs
        if value == "identity":
            return identity_oracle(), probe_kwargs
        raise ValidationError(f"unknown built-in reflection {value!r}")
    if kind == "identity":
        site = load_category(args.site) if args.site else None
        return identity_oracle(site), probe_kwargs
    if kind == "bisite":
        if not args.site:
            raise ValidationError("bisite reflections need --site")
        cat = load_category(args.site)
        bs = load_bisite(value, cat)
        return BisiteReflection(bs, name=bs.name), probe_kwargs
    raise ValidationError(f"unknown reflection descriptor {spec!r}")


def cmd_check(args):
    oracle, probe_kwargs = resolve_reflection(args)
    conditions = (CONDITIONS if args.conditions == "all"
                  else tuple(normalize_condition(c.strip())
                             for c in args.conditions.split(",")))
    expect_fail = {normalize_condition(c.strip())
                   for c in args.expect_fail.split(",") if c.strip()}
    probes = build_probe_set(oracle, **probe_kwargs)
    reports = run_checks(oracle, probes, conditions)
    ok = True
    results = []
    for cond in conditions:
        rep = reports[cond]
        expected = "fail" if cond in expect_fail else "pass"
        matched = rep.verdict == expected
        ok = ok and matched
        results.append(rep.to_json() | {"expected": expected})
        if args.format == "text":
            mark = "" if matched else "  <-- unexpected"
            print(f"{rep}{mark}")
    return emit(args, "check", [args.reflection], results, ok)


def cmd_recover(args):
    oracle, probe_kwargs = resolve_reflection(args)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = []
    ok = True
    jt = recover_j(oracle)
    (outdir / "recovered_j.top").write_text(write_topology(jt))
    results.append(_result("recover-j", "ok",
                           covers={c: [sorted(s.members)
                                       for s in jt.covers[c]]
                                   for c in oracle.base.objects}))
    try:
        kt = recover_k(oracle)
        (outdir / "recovered_k.top").write_text(write_topology(kt))
        results.append(_result("recover-k", "ok",
                               covers={c: [sorted(s.members)
                                           for s in kt.covers[c]]
                                       for c in oracle.base.objects}))
        probes = build_probe_set(oracle, **probe_kwargs)
        rep = check_e_equals_biseparated(oracle, jt, kt, probes)
        results.append(rep.to_json())
        ok = rep.ok
    except RecoveryError as exc:
        results.append(_result("recover-k", "fail", witness=str(exc)))
        ok = False
    if args.format == "text":
        for r in results:
            tail = r.get("witness") or r.get("covers") or ""
            print(f"{r['name']}: {r['verdict']}  {tail}")
    return emit(args, "recover", [args.reflection], results, ok)


def cmd_classifier(args):
    cat = load_category(args.site)
    jt = (trivial_topology(cat) if args.j == "trivial"
          else load_topology(args.j, cat))
    kt = (trivial_topology(cat) if args.k == "trivial"
          else load_topology(args.k, cat))
    bs = BiSite(cat, jt, kt)
    oracle = BisiteReflection(bs)
    result = weak_classifier(bs, oracle)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    result.omega_prime.name = "omega_prime"
    (outdir / "omega_prime.psh").write_text(
        write_presheaf(result.omega_prime))
    probes = build_probe_set(oracle, bound=args.bound)
    rep = check_classifies(result, bs, probes, oracle)
    results = [
        _result("local", "pass" if result.obligations["local"] else "fail"),
        _result("retraction",
                "pass" if result.obligations["retraction"] else "fail"),
        rep.to_json(),
    ]
    ok = all(r.get("verdict") == "pass" for r in results)
    if args.format == "text":
        sizes = {c: len(result.omega_prime.carrier(c)) for c in cat.objects}
        print(f"omega_prime sizes: {sizes}; wrote "
              f"{outdir / 'omega_prime.psh'}")
        for r in results:
            print(f"{r['name']}: {r['verdict']}")
    return emit(args, "classifier", [args.site, args.j, args.k], results, ok)


def cmd_gallery_list(args):
    for name in CASE_NAMES:
        print(name)
    return EXIT_OK


def cmd_gallery_run(args):
    names = CASE_NAMES if args.all else (args.name,)
    if names == (None,):
        raise ValidationError("gallery run needs a case name or --all")
    ok = True
    results = []
    for name in names:
        res = run_case(name)
        ok = ok and res.ok
        results.append({
            "name": name,
            "verdict": "pass" if res.ok else "fail",
            "matrix": {c: res.reports[c].verdict for c in CONDITIONS},
            "expected": res.expected,
        })
        if args.format == "text":
            print("\n".join(res.lines()))
    return emit(args, "gallery run", list(names), results, ok)


if __name__ == "__main__":
    sys.exit(main())
