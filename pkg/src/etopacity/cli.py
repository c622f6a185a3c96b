"""Command-line interface."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import arith, opacity
from .geometry import PolySet
from .model import ModelError, double_system, load_model, substitute, validate
from .oracle import check_opacity_concrete, table_to_csv
from .pet import ZoneAutomatonError, build_zone_automaton, expr_pretty, expr_to_text, normalize, regex_extract
from .zonegraph import COMPLETE, ExplorationBudget, explore

ENV_STATES = "ETOPACITY_MAX_STATES"
ENV_DEPTH = "ETOPACITY_MAX_DEPTH"


class UsageError(Exception):
    pass


def _budget(args) -> ExplorationBudget:
    states = args.max_states or int(os.environ.get(ENV_STATES, 10000))
    depth = args.max_depth or int(os.environ.get(ENV_DEPTH, 256))
    return ExplorationBudget(states, depth)


def _valuation(text: str, params) -> dict[str, int]:
    v = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise UsageError(f"bad valuation item {item!r} (expected name=value)")
        k, val = item.split("=", 1)
        k = k.strip()
        if k not in params:
            raise UsageError(f"unknown parameter {k!r}")
        try:
            v[k] = int(val)
        except ValueError:
            raise UsageError(f"parameter {k} needs a natural number, got {val!r}") from None
        if v[k] < 0:
            raise UsageError(f"parameter {k} must be non-negative")
    missing = [p for p in params if p not in v]
    if missing:
        raise UsageError(f"valuation misses parameter {missing[0]}")
    return v


def _polyset(ps: PolySet, pretty: bool):
    if pretty:
        return ps.pretty()
    return {"variables": list(ps.variables), "disjuncts": ps.to_json()}


def _emit(obj, args) -> None:
    if args.pretty:
        if isinstance(obj, dict):
            for k, val in obj.items():
                if isinstance(val, (dict, list)):
                    val = json.dumps(val, sort_keys=True)
                print(f"{k}: {val}")
        else:
            print(obj)
    else:
        print(json.dumps(obj, sort_keys=True, indent=2))


def cmd_validate(args) -> int:
    pta = load_model(args.model)
    diag = validate(pta)
    _emit({"clocks": diag.clocks, "class": list(diag.pta_class), "parameters": diag.parameters,
           "reset_free": diag.reset_free, "exact_pet": diag.exact_pet, "messages": list(diag.messages),
           "locations": len(pta.locations), "edges": len(pta.edges)}, args)
    return 0


def cmd_pet(args) -> int:
    pta = load_model(args.model)
    method = args.method
    if method == "auto":
        method = "zones" if len(pta.clocks) == 1 else "semialg"
    budget = _budget(args)
    if method == "semialg":
        from .model import build_pet_target
        from .pet import pet_semialg
        res = pet_semialg(pta, budget)
        if args.dot:
            target = build_pet_target(pta)
            graph = explore(target, {target.final}, budget)
            _write(args.dot, graph.to_dot(target))
        _emit({"method": "semialg", "status": res.status, "pet": _polyset(res.result, args.pretty)}, args)
        return 0 if res.status == COMPLETE else 1
    if len(pta.clocks) != 1:
        raise UsageError("the zones method needs exactly one clock")
    za = build_zone_automaton(pta, budget)
    expr = regex_extract(za)
    terms = normalize(expr, za.variables)
    if args.dot:
        _write(args.dot, za.to_dot())
    out = {"method": "zones", "status": COMPLETE,
           "zone_automaton": {f"{a}->{b}": _polyset(z, args.pretty) for (a, b), z in za.transitions},
           "terms": [t.pretty() if args.pretty else t.to_json() for t in terms]}
    if args.emit_expr:
        out["expression"] = expr_pretty(expr) if args.pretty else expr_to_text(expr)
    _emit(out, args)
    return 0


SYNTH = {"eos": opacity.eos_synth, "fos": opacity.fos_synth, "d-eos": opacity.d_eos,
         "d-fos": opacity.d_fos, "diff": opacity.diff_set}


def cmd_synth(args) -> int:
    pta = load_model(args.model)
    res = SYNTH[args.problem](pta, _budget(args))
    _emit({"problem": args.problem, "status": res.status, "result": _polyset(res.result, args.pretty)}, args)
    return 0 if res.status == COMPLETE else 1


def cmd_check(args) -> int:
    pta = load_model(args.model)
    v = _valuation(args.valuation, pta.params)
    verdict = opacity.check_valuation(pta, v, args.mode, _budget(args))
    out = verdict.to_json()
    out["valuation"] = v
    _emit(out, args)
    return 0


def cmd_bounded(args) -> int:
    pta = load_model(args.model)
    if len(pta.clocks) != 1:
        raise UsageError("bounded checks need exactly one clock")
    fn = opacity.foe_bounded if args.problem == "foe" else opacity.eoe_bounded
    verdict = fn(pta, args.pmax, jobs=args.jobs)
    _emit({"problem": args.problem, "status": f"bounded({args.pmax})", "result": verdict.to_json()}, args)
    return 0


def cmd_oracle(args) -> int:
    pta = load_model(args.model)
    v = _valuation(args.valuation, pta.params)
    ta = substitute(pta, v)
    scale = Fraction(1)
    bound = args.bound
    if args.doubled:
        ta = double_system(ta)
        scale = Fraction(1, 2)
        bound = 2 * bound
    table = check_opacity_concrete(ta, bound)
    if args.csv:
        _write(args.csv, table_to_csv({Fraction(d) * scale: c for d, c in table.items()}))
    _emit({"valuation": v, "bound": args.bound,
           "table": {str(Fraction(d) * scale): c for d, c in sorted(table.items())}}, args)
    return 0


def cmd_export(args) -> int:
    pta = load_model(args.model)
    if len(pta.clocks) != 1:
        raise UsageError("export needs exactly one clock")
    priv, pub = opacity.doubled_projection_terms(pta, _budget(args))
    out = {}
    if args.smt:
        _write(args.smt, arith.emit_smt(arith.eoe_query(priv, pub)))
        out["smt"] = args.smt
    if args.lpsl:
        if len(pta.params) != 1:
            raise UsageError("LpSl export needs exactly one parameter")
        (p,) = pta.params
        data = {}
        for name, terms in (("private", priv), ("public", pub)):
            lp, m, low = arith.to_lpsl(terms, p)
            data[name] = {"lpsl": lp.to_json(), "threshold": m,
                          "low_valuations": {str(k): s.to_json() for k, s in low.items()}}
        _write(args.lpsl, json.dumps(data, sort_keys=True, indent=2) + "\n")
        out["lpsl"] = args.lpsl
    if not out:
        raise UsageError("nothing to export (use --smt and/or --lpsl)")
    _emit(out, args)
    return 0


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="etopacity", description="Execution-time opacity of parametric timed automata.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("model", help="model file")
        p.add_argument("--pretty", action="store_true", help="human-readable output instead of JSON")
        p.add_argument("--max-states", type=int, default=None, help=f"exploration budget (env {ENV_STATES})")
        p.add_argument("--max-depth", type=int, default=None, help=f"exploration depth (env {ENV_DEPTH})")
        return p

    common(sub.add_parser("validate", help="parse and report the model class"))
    p = common(sub.add_parser("pet", help="parametric execution times"))
    p.add_argument("--method", choices=["auto", "semialg", "zones"], default="auto")
    p.add_argument("--emit-expr", action="store_true")
    p.add_argument("--dot", metavar="FILE")
    p = common(sub.add_parser("synth", help="opacity synthesis"))
    p.add_argument("--problem", choices=sorted(SYNTH), required=True)
    p = common(sub.add_parser("check", help="opacity at one valuation"))
    p.add_argument("--valuation", default="")
    p.add_argument("--mode", choices=["exist", "full"], default="exist")
    p = common(sub.add_parser("bounded", help="search valuations up to a bound"))
    p.add_argument("--problem", choices=["foe", "eoe"], required=True)
    p.add_argument("--pmax", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p = common(sub.add_parser("oracle", help="discrete-time enumeration of durations"))
    p.add_argument("--valuation", default="")
    p.add_argument("--bound", type=int, required=True)
    p.add_argument("--doubled", action="store_true", help="enumerate on the half-unit grid")
    p.add_argument("--csv", metavar="FILE")
    p = common(sub.add_parser("export", help="SMT-LIB / LpSl encodings"))
    p.add_argument("--smt", metavar="FILE")
    p.add_argument("--lpsl", metavar="FILE")
    return ap


COMMANDS = {"validate": cmd_validate, "pet": cmd_pet, "synth": cmd_synth, "check": cmd_check,
            "bounded": cmd_bounded, "oracle": cmd_oracle, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"etopacity: cannot open {exc.filename}", file=sys.stderr)
        return 2
    except (UsageError, ModelError) as exc:
        print(f"etopacity: {exc}", file=sys.stderr)
        return 2
    except (ZoneAutomatonError, arith.LpSlError, RuntimeError, ValueError) as exc:
        print(f"etopacity: analysis failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
