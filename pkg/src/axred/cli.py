"""Command-line front end.

Exit codes: 0 run completed, 2 bad configuration or parse error, 3 an
``--expect-*`` gate failed, 4 an acceptance criterion failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import acceptance
from .analysis import (ResultStatus, check_independence, check_redundancy, model_summary, norm_model,
                       verdict_dict, verify_involution_identities, verify_norm_derivations, identity_formula)
from .domains import RationalGrid, RationalSample, field_from_order, format_rational, multiplicative_maps, parse_field
from .domains import all_self_maps, classify_map
from .errors import AxredError
from .search import SearchSpec, SearchStatus, enumerate_models
from .syntax import CARRIER, LINEAR_ALGEBRA, SCALAR, VALUE
from .theories import fixture_names, get_fixture, get_theory, resolve_theory

EXIT_OK, EXIT_CONFIG, EXIT_EXPECT, EXIT_ACCEPT = 0, 2, 3, 4
SHOW_ALL = 4


class ConfigError(Exception):
    pass


# -- argument helpers --------------------------------------------------------------

def parse_sizes(text):
    """'1..3' or '1,2,4' or '2'."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            sizes = list(range(int(lo), int(hi) + 1))
        else:
            sizes = [int(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad --sizes value {text!r}") from None
    if not sizes or any(s < 1 for s in sizes):
        raise ConfigError(f"--sizes needs positive sizes, got {text!r}")
    return sizes


def parse_sample(text):
    """Comma-separated rationals, or ';'-separated points with comma coordinates."""
    try:
        if ";" in text:
            pts = [tuple(Fraction(c.strip()) for c in p.split(",")) for p in text.split(";") if p.strip()]
            return RationalSample(tuple(pts))
        return RationalSample.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad sample {text!r}: {exc}") from None


def _add_domain_flags(p, sizes_default=None):
    p.add_argument("--sizes", default=sizes_default, help="carrier sizes, e.g. 1..3 or 2,3")
    p.add_argument("--grid", help="value-sort codomain, comma-separated exact rationals (0,1/2,1,2)")
    p.add_argument("--field", help="scalar field token: gf2 gf3 gf4 gf5 gf7 gf8 gf9 gf11 gf13 gf16")
    p.add_argument("--dim", type=int, help="dimension of the linear-algebra carrier")
    p.add_argument("--sample", help="rational carrier sample: 0,1,-1 or points 0,0;1,0;0,1")
    p.add_argument("--scalars", help="rational scalar sample, comma-separated")


def _add_search_flags(p):
    p.add_argument("--threads", type=int, default=1, help="worker processes for the search (default 1)")
    p.add_argument("--max-nodes", type=int, help="node budget per search (env AXRED_BUDGET_NODES)")
    p.add_argument("--max-seconds", type=float, help="wall-clock cap per search")
    p.add_argument("--ordering", choices=("mrv", "lex"), default="mrv")
    p.add_argument("--no-propagate", action="store_true", help="disable forward checking")
    p.add_argument("--json", action="store_true", help="emit a JSON report")


def build_specs(theory, args):
    """One SearchSpec per carrier size (or a single one for sampled/linear-algebra carriers)."""
    sig = theory.signature
    bindings = {}
    if args.field and args.scalars:
        raise ConfigError("--field and --scalars both bind the scalar sort")
    scalars = sig.sorts_of_kind(SCALAR)
    values = sig.sorts_of_kind(VALUE)
    carriers = sig.sorts_of_kind(CARRIER)
    if (args.field or args.scalars) and not scalars:
        raise ConfigError(f"theory {theory.name} has no scalar sort")
    if args.grid and not values:
        raise ConfigError(f"theory {theory.name} has no value sort for --grid")
    try:
        for s in scalars:
            if args.field:
                bindings[s.name] = parse_field(args.field)
            elif args.scalars:
                bindings[s.name] = RationalSample.parse(args.scalars)
            else:
                raise ConfigError(f"scalar sort {s.name} needs --field or --scalars")
        for s in values:
            if not args.grid:
                raise ConfigError(f"value sort {s.name} needs --grid")
            bindings[s.name] = RationalGrid.parse(args.grid)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    except AxredError as exc:
        raise ConfigError(str(exc)) from None
    common = dict(max_nodes=args.max_nodes, max_seconds=args.max_seconds, ordering=args.ordering,
                  propagate=not args.no_propagate)
    if theory.mode == LINEAR_ALGEBRA:
        if args.sizes or args.sample:
            raise ConfigError("linear-algebra theories take --dim, not --sizes or --sample")
        return [SearchSpec(theory, bindings, dim=args.dim, **common)]
    if args.dim is not None:
        raise ConfigError("--dim applies to linear-algebra theories only")
    if args.sample:
        if args.sizes:
            raise ConfigError("--sample and --sizes both bind the carrier")
        sample = parse_sample(args.sample)
        return [SearchSpec(theory, {**bindings, **{c.name: sample for c in carriers}}, **common)]
    if not args.sizes:
        raise ConfigError("carrier sorts need --sizes or --sample")
    return [SearchSpec(theory, {**bindings, **{c.name: n for c in carriers}}, **common)
            for n in parse_sizes(args.sizes)]


def _theory(name):
    try:
        return resolve_theory(name)
    except AxredError as exc:
        raise ConfigError(str(exc)) from None


# -- rendering ---------------------------------------------------------------------

def _fmt_model(summary, indent="      "):
    lines = []
    for sym, rows in summary.items():
        if isinstance(rows, dict):
            if not rows:
                continue
            cells = " ".join(f"{k}={v}" for k, v in rows.items())
            lines.append(f"{indent}{sym}: {cells}")
        else:
            lines.append(f"{indent}{sym} = {rows}")
    return lines


def render_report(d):
    out = []
    head = d["analysis"]
    if head == "redundancy":
        out.append(f"redundancy: {d['reduced']} => {d['theory']}")
    else:
        out.append(f"{head}: {d['theory']}")
    for s in d["specs"]:
        out.append("  spec: " + ", ".join(f"{k}={v}" for k, v in s.items()))
    for r in d["results"]:
        extra = f" ({r['countermodels']} found)" if r.get("countermodels") else ""
        out.append(f"  {r['axiom']:<8} {r['status']}{extra}  models={r['models']} "
                   f"checked={r['checked']} skipped={r['skipped']}")
        if "witness" in r:
            shown = r["countermodel_list"] if 1 < r["countermodels"] <= SHOW_ALL else [r["witness"]]
            for k, w in enumerate(shown):
                if len(shown) > 1:
                    out.append(f"    countermodel {k + 1}:")
                out.extend(_fmt_model(w["model"]))
                if w.get("assignment"):
                    out.append("      at " + ", ".join(f"{k}={v}" for k, v in w["assignment"].items())
                               + f"  [{w['spec']}]")
        if r.get("budget_exceeded"):
            out.append("      budget exceeded at: " + " | ".join(r["budget_exceeded"]))
    st = d["stats"]
    out.append("  stats: " + " ".join(f"{k}={v}" for k, v in st.items()))
    return "\n".join(out)


def _emit(args, data, text):
    if args.json:
        print(json.dumps(data, indent=2, sort_keys=False))
    else:
        print(text)


# -- commands ------------------------------------------------------------------------

def cmd_check_redundancy(args):
    reduced, full = _theory(args.reduced), _theory(args.full)
    specs = build_specs(reduced, args)
    report = check_redundancy(reduced, full, specs, threads=args.threads)
    d = report.to_dict()
    _emit(args, d, render_report(d))
    if args.expect_confirmed and not report.all_confirmed:
        return EXIT_EXPECT
    return EXIT_OK


def cmd_independence(args):
    theory = _theory(args.theory)
    specs = build_specs(theory, args)
    report = check_independence(theory, specs, threads=args.threads)
    d = report.to_dict()
    _emit(args, d, render_report(d))
    if args.expect_all_witnessed and not report.all_witnessed:
        return EXIT_EXPECT
    return EXIT_OK


def cmd_enumerate(args):
    theory = _theory(args.theory)
    specs = build_specs(theory, args)
    blocks, text = [], []
    for spec in specs:
        out = enumerate_models(spec, threads=args.threads, limit=args.limit, dedupe=args.dedupe)
        models = [model_summary(m) for m in out.models]
        blocks.append({"spec": spec.describe(), "status": out.status.value, "count": out.count,
                       "models": models, "stats": out.stats.as_dict()})
        label = f" ({len(out.models)} up to relabeling)" if args.dedupe else ""
        text.append(f"{theory.name} [{spec.label()}]: {out.status.value}, {out.count} models{label}")
        if not args.count_only:
            for i, m in enumerate(models):
                text.append(f"  model {i}")
                text.extend(_fmt_model(m, "    "))
        text.append("  stats: " + " ".join(f"{k}={v}" for k, v in out.stats.as_dict().items()))
    data = {"analysis": "enumerate", "theory": theory.name, "specs": [s.describe() for s in specs],
            "results": [{"axiom": "*", "status": b["status"], "checked": b["count"], "skipped": 0,
                         "sizes": [b["spec"]], "models": b["count"],
                         **({} if args.count_only else {"listing": b["models"]})} for b in blocks],
            "stats": {"nodes": sum(b["stats"]["nodes"] for b in blocks)}}
    _emit(args, data, "\n".join(text))
    return EXIT_OK


def cmd_classify_smaps(args):
    tokens = args.field.split(",") if args.field else ["gf2", "gf3", "gf4"]
    results, text = [], []
    for tok in tokens:
        try:
            f = parse_field(tok)
        except (AxredError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        maps = multiplicative_maps(f)
        brute = None
        if f.q <= 5 or args.brute_force:
            brute = sorted(v for v in all_self_maps(f) if classify_map(f, v) is not None)
        agree = brute is None or brute == [m.values for m in maps]
        buckets = {}
        for m in maps:
            buckets[m.bucket.value] = buckets.get(m.bucket.value, 0) + 1
        results.append({"axiom": f.token, "status": "OK" if agree else "MISMATCH", "checked": len(maps),
                        "skipped": 0, "sizes": [f.q], "buckets": buckets,
                        "maps": [{"values": [f.name(v) for v in m.values], "bucket": m.bucket.value} for m in maps],
                        "oracle": None if brute is None else len(brute)})
        text.append(f"{f.token}: {len(maps)} multiplicative maps "
                    + " ".join(f"{k}={v}" for k, v in buckets.items())
                    + ("" if brute is None else f"  (brute force: {len(brute)})"))
        for m in maps:
            text.append("  " + " ".join(f"{f.name(a)}->{f.name(v)}" for a, v in enumerate(m.values))
                        + f"  {m.bucket.value}")
    _emit(args, {"analysis": "classify-smaps", "theory": "-", "specs": [], "results": results, "stats": {}},
          "\n".join(text))
    if any(r["status"] != "OK" for r in results):
        return EXIT_EXPECT
    return EXIT_OK


def cmd_verify_identities(args):
    if args.fixture:
        try:
            models = [get_fixture(args.fixture).interpretation]
        except AxredError as exc:
            raise ConfigError(str(exc)) from None
        specs = []
        label = args.fixture
    else:
        theory = _theory(args.theory)
        if theory.mode != LINEAR_ALGEBRA:
            raise ConfigError("verify-identities needs a linear-algebra theory")
        specs = build_specs(theory, args)
        out = enumerate_models(specs[0], threads=args.threads)
        models = out.models
        label = theory.name
    results, text = [], []
    failed = False
    for i, m in enumerate(models):
        verdicts = verify_involution_identities(m)
        text.append(f"model {i}: " + "; ".join(f"{k}={v}" for k, v in _flatten(model_summary(m)).items()))
        by_guard = {}
        for v in verdicts:
            by_guard.setdefault(v.guard, []).append(v)
            d = verdict_dict(v, m, identity_formula(v.axiom, m))
            d.update({"sizes": [i], "guard": v.guard, "guard_applies": v.guard_applies})
            results.append(d)
            if v.guard_applies and v.status.value != "HOLDS":
                failed = True
        for guard, vs in by_guard.items():
            applies = "applies" if vs[0].guard_applies else "does not apply"
            text.append(f"  [{guard}] ({applies})")
            for v in vs:
                w = ""
                if v.witness:
                    w = "  at " + ", ".join(f"{k}={x}" for k, x in
                                            v.witness_names(m, identity_formula(v.axiom, m)).items())
                text.append(f"    {v.axiom:<24} {v.status.value}{w}")
    data = {"analysis": "identities", "theory": label, "specs": [s.describe() for s in specs],
            "results": results, "stats": {"models": len(models)}}
    _emit(args, data, "\n".join(text) if text else f"{label}: no models")
    if args.expect_hold and failed:
        return EXIT_EXPECT
    return EXIT_OK


def _flatten(summary):
    out = {}
    for k, v in summary.items():
        if isinstance(v, dict):
            out.update(v)
        else:
            out[k] = v
    return out


def cmd_verify_norm(args):
    sample = parse_sample(args.sample or ",".join(acceptance.NORM_SAMPLE))
    try:
        scalars = RationalSample.parse(args.scalars or ",".join(acceptance.NORM_SCALARS))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    if args.values:
        try:
            vals = [Fraction(v) for v in args.values.split(",")]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc)) from None
        if len(vals) != len(sample):
            raise ConfigError(f"--values needs {len(sample)} entries, one per sample point")
        norm = vals
    elif args.norm == "zero":
        norm = [0] * len(sample)
    elif sample.is_vector:
        norm = [max(abs(c) for c in p) for p in sample.points]
    else:
        norm = [abs(p) for p in sample.points]
    interp = norm_model(sample, scalars, norm)
    rep = verify_norm_derivations(interp)
    results, text = [], []
    text.append("norm: " + " ".join(f"{sample.name(i)}->{format_rational(v)}"
                                    for i, v in enumerate(interp.tables["norm"].values)))
    for v in rep.all():
        d = verdict_dict(v)
        d["sizes"] = [len(sample)]
        if v.witness:
            d["witness"] = {k: (sample.name(x) if k == "x" or k == "y" else format_rational(x))
                            for k, x in v.witness.items()}
        results.append(d)
        w = f"  at {d['witness']}" if v.witness else ""
        text.append(f"  {v.axiom:<20} {v.status.value:<8} checked={v.checked} skipped={v.skipped}{w}")
    data = {"analysis": "norm-derivations", "theory": "norm.reduced",
            "specs": [{"V": [sample.name(i) for i in range(len(sample))],
                       "K": [format_rational(s) for s in scalars.points]}],
            "results": results, "stats": {"consistent": rep.consistent}}
    if args.witnesses:
        theory = get_theory("norm.reduced")
        plane = RationalSample(acceptance.NORM_PLANE) if not sample.is_vector else sample
        spec = SearchSpec(theory, {"V": plane, "K": scalars,
                                   "Real": RationalGrid.parse(args.grid or acceptance.NORM_GRID)})
        report = check_independence(theory, [spec])
        data["independence"] = report.to_dict()
        text.append(render_report(report.to_dict()))
    _emit(args, data, "\n".join(text))
    if args.expect_hold and not rep.steps_hold:
        return EXIT_EXPECT
    return EXIT_OK


def cmd_verify_paper(args):
    only = None
    if args.only:
        try:
            only = {int(x) for x in args.only.split(",")}
        except ValueError:
            raise ConfigError(f"bad --only value {args.only!r}") from None
    if args.fixtures_dir and not os.path.isdir(args.fixtures_dir):
        raise ConfigError(f"fixtures directory {args.fixtures_dir!r} does not exist")
    try:
        results = acceptance.run_all(fixtures_dir=args.fixtures_dir, only=only)
    except AxredError as exc:
        results = [acceptance.CriterionResult(0, "setup", False, [str(exc)])]
        print(f"acceptance failed: {exc}", file=sys.stderr)
        return EXIT_ACCEPT
    rows = {}
    for r in results:
        rows.setdefault(r.row, []).append(r)
    text = []
    for row, rs in rows.items():
        ok = all(r.passed for r in rs)
        text.append(f"{row:<16} {'PASS' if ok else 'FAIL'}  criteria {','.join(str(r.number) for r in rs)}")
    for r in results:
        text.append("  " + r.line())
        for d in r.details:
            text.append("      " + d)
    data = {"analysis": "acceptance", "theory": "all", "specs": [],
            "results": [{"axiom": f"criterion {r.number}", "status": "PASS" if r.passed else "FAIL",
                         "checked": 1, "skipped": 0, "sizes": [], "row": r.row, "title": r.title,
                         "details": r.details, "elapsed_s": round(r.elapsed, 3)} for r in results],
            "stats": {"passed": sum(r.passed for r in results), "total": len(results)}}
    _emit(args, data, "\n".join(text))
    failing = [r for r in results if not r.passed]
    if failing:
        first = failing[0]
        print(f"acceptance failed: criterion {first.number} ({first.title}): "
              f"{first.details[0] if first.details else ''}", file=sys.stderr)
        return EXIT_ACCEPT
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="axred", description="Finite-model checks of axiom-system reductions.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("check-redundancy", help="search models of a reduced system for violations of the full one")
    r.add_argument("--reduced", required=True)
    r.add_argument("--full", required=True)
    _add_domain_flags(r)
    _add_search_flags(r)
    r.add_argument("--expect-confirmed", action="store_true", help="exit 3 unless every derived axiom is confirmed")
    r.set_defaults(func=cmd_check_redundancy)

    i = sub.add_parser("independence", help="look for a witness model for each axiom")
    i.add_argument("--theory", required=True)
    _add_domain_flags(i)
    _add_search_flags(i)
    i.add_argument("--expect-all-witnessed", action="store_true", help="exit 3 unless every axiom has a witness")
    i.set_defaults(func=cmd_independence)

    e = sub.add_parser("enumerate", help="list every model of a theory")
    e.add_argument("--theory", required=True)
    _add_domain_flags(e)
    _add_search_flags(e)
    e.add_argument("--limit", type=int)
    e.add_argument("--dedupe", action="store_true", help="merge models equal up to carrier relabeling")
    e.add_argument("--count-only", action="store_true")
    e.set_defaults(func=cmd_enumerate)

    c = sub.add_parser("classify-smaps", help="multiplicative self-maps of finite fields")
    c.add_argument("--field", help="comma-separated field tokens (default gf2,gf3,gf4)")
    c.add_argument("--brute-force", action="store_true", help="cross-check against all self-maps for q > 5 too")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_classify_smaps)

    v = sub.add_parser("verify-identities", help="trace and star identities on involution algebras")
    v.add_argument("--theory", default="invol.reduced")
    v.add_argument("--fixture", help=f"check a builtin fixture instead ({', '.join(fixture_names())})")
    _add_domain_flags(v)
    _add_search_flags(v)
    v.add_argument("--expect-hold", action="store_true", help="exit 3 if an applicable identity fails")
    v.set_defaults(func=cmd_verify_identities)

    n = sub.add_parser("verify-norm", help="norm derivation steps on a rational sample")
    n.add_argument("--sample")
    n.add_argument("--scalars")
    n.add_argument("--norm", choices=("abs", "zero"), default="abs")
    n.add_argument("--values", help="explicit norm values, one per sample point")
    n.add_argument("--witnesses", action="store_true", help="also search independence witnesses")
    n.add_argument("--grid", help="codomain for the witness search (default 0,1/2,1,2,3)")
    n.add_argument("--expect-hold", action="store_true")
    n.add_argument("--json", action="store_true")
    n.set_defaults(func=cmd_verify_norm)

    a = sub.add_parser("verify-paper", help="run the full acceptance suite")
    a.add_argument("--fixtures-dir", help="read fixtures from this directory instead of the builtin set")
    a.add_argument("--only", help="comma-separated criterion numbers")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_verify_paper)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"axred: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AxredError as exc:
        print(f"axred: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
