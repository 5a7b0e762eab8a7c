"""Command-line front end.

Exit codes: 0 success, 1 diagnostics (bad input, parse or validation
errors), 2 internal error, 3 abstraction is not information preserving.

Every JSON document carries the resolved configuration and the toolkit
version; no timestamps are written, so equal inputs give equal output.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from pgclabs import __version__
from pgclabs.abstraction import NondeterminismError, check_data_independent, check_info_preserving, cubes, wp_abs
from pgclabs.ast import BoundedUntil
from pgclabs.mdp import MdpError, expected_reward, extract_mdp, loop_of, pbounded, pbounded_curve, quotient_mdp
from pgclabs.rabin import (
    SCHEDULERS,
    abstract_mdp,
    run_paper_queries,
    simulate,
    splits,
    truncated_mdp,
)
from pgclabs.semantics import DEFAULT_FUEL, as_expectation, wp
from pgclabs.statespace import EvaluationError, StateSpace, StateSpaceError, eval_pred
from pgclabs.syntax import Diagnostic, ParseError, parse_model, parse_predicate_file, parse_query
from pgclabs.validate import validate_model

EXIT_OK, EXIT_DIAG, EXIT_INTERNAL, EXIT_NOT_PRESERVING = 0, 1, 2, 3


class InputError(Exception):
    """Problem with user input; reported as diagnostics with exit code 1."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or [message]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


# -- helpers ------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror or exc})") from None


def _diag(path: str, d: Diagnostic) -> str:
    return f"{path}:{d.line}:{d.col}: {d.severity}: {d.message}"


def load_model(path: str):
    text = _read(path)
    try:
        model = parse_model(text)
    except ParseError as exc:
        raise InputError(str(exc), [_diag(path, exc.diagnostic)]) from None
    diags = validate_model(model)
    errors = [d for d in diags if d.severity == "error"]
    for d in diags:
        if d.severity != "error":
            print(_diag(path, d), file=sys.stderr)
    if errors:
        raise InputError("invalid model", [_diag(path, d) for d in errors])
    return model


def load_predicates(path: str) -> list:
    try:
        return parse_predicate_file(_read(path))
    except ParseError as exc:
        raise InputError(str(exc), [_diag(path, exc.diagnostic)]) from None


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        out[k] = v
    return out


def _emit(args, doc: dict, text: Optional[str] = None, csv: Optional[str] = None) -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "csv" and csv is not None:
        sys.stdout.write(csv)
    elif fmt == "text" and text is not None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        full = {"version": __version__, "config": _config(args), **doc}
        sys.stdout.write(json.dumps(full, indent=2, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _value(v) -> str:
    if v == float("inf"):
        return "inf"
    if isinstance(v, Fraction):
        return str(v)
    return f"{float(v):.12g}"


def _split(text: Optional[str]):
    if text is None:
        return None
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"--split expects 'A,B', got {text!r}") from None
    if a < 0 or b < 0:
        raise InputError("--split values must be non-negative")
    return a, b


# -- wp -----------------------------------------------------------------------


def cmd_wp(args) -> int:
    model = load_model(args.model)
    space = StateSpace(model.decls)
    try:
        post = as_expectation(args.expectation, space)
    except ParseError as exc:
        raise InputError(f"expectation: {exc}") from None
    if args.abstract:
        result = wp_abs(model.program, post, load_predicates(args.abstract), space)
    else:
        result = wp(model.program, post, space, fuel=args.fuel)
    text = "\n".join(f"{space.label(i)}: {v}" for i, v in enumerate(result.values))
    _emit(args, {"approximate": result.approximate, "values": result.to_json()}, text)
    return EXIT_OK


# -- check --------------------------------------------------------------------


def _report_text(report) -> str:
    lines = [f"verdict: {report.verdict}"]
    if report.components:
        for i, c in enumerate(report.components, 1):
            lines.append(f"component {i}: {c.verdict}  ({c.program})")
    w = report.witness
    if w is not None:
        lines.append(f"witness ({w.kind}): wp of [{w.predicate}] is not cubed")
        for s, a, b in w.states:
            lines.append(f"  {s}: wp = {a}, cubed = {b}")
    return "\n".join(lines)


def cmd_check(args) -> int:
    model = load_model(args.model)
    space = StateSpace(model.decls)
    if args.kind == "ip":
        if not args.predicates:
            raise InputError("check ip needs a predicates file")
        try:
            report = check_info_preserving(model.program, load_predicates(args.predicates), space)
        except NondeterminismError as exc:
            raise InputError(str(exc)) from None
    else:
        report = check_data_independent(model.program, space)
    _emit(args, {"report": report.to_json()}, _report_text(report))
    return EXIT_OK if report.preserving else EXIT_NOT_PRESERVING


# -- mc -----------------------------------------------------------------------


def cmd_mc(args) -> int:
    model = load_model(args.model)
    try:
        query = parse_query(args.query)
    except ParseError as exc:
        raise InputError(f"query: {exc}") from None
    space = StateSpace(model.decls)
    loop = loop_of(model)
    m = extract_mdp(model, action_cap=args.action_cap)
    labels = {
        "init": eval_pred(model.init, space) if model.init is not None else np.ones(space.count, bool),
        "guard": eval_pred(loop.guard, space),
    }
    labels["exit"] = ~labels["guard"]
    target = np.zeros(m.n, dtype=bool)
    target[: space.count] = eval_pred(query.target, space, labels)
    notes = []
    if args.quotient:
        part = cubes(load_predicates(args.quotient), space)
        for members in part.cubes:
            if len(set(target[members].tolist())) > 1:
                notes.append("target is not constant on every cube; abstract values are bounds")
                break
        block = np.concatenate([part.cube_of, np.arange(m.n - space.count) + len(part)])
        target = np.array([target[block == b].all() for b in range(int(block.max()) + 1)])
        m = quotient_mdp(m, part)

    mode = query.mode
    if isinstance(query, BoundedUntil):
        if args.curve is not None:
            curve = pbounded_curve(m, target, args.curve, mode, exact=True)
            rows = [
                (t, (min if mode == "min" else max)(vals[s] for s in m.initial))
                for t, vals in enumerate(curve)
            ]
            csv = f"T,p{mode}\n" + "".join(f"{t},{float(v):.12g}\n" for t, v in rows)
            doc = {"curve": [{"T": t, "value": str(v)} for t, v in rows]}
            _emit(args, doc, csv, csv)
            return EXIT_OK
        result = pbounded(m, target, query.horizon, mode)
    else:
        if not target.any():
            raise InputError("the query target holds in no state")
        result = expected_reward(m, target, None, mode, residual=args.residual)
    per_state = [{"state": m.name(s), "value": _value(result[s])} for s in m.initial]
    opt = result.optimum(m.initial)
    doc = {
        "states": m.n,
        "choices": m.num_choices,
        "initial_optimum": _value(opt),
        "initial": per_state,
        "iterations": result.iterations,
        "residual": result.residual,
        "notes": notes,
    }
    text = "\n".join([f"{r['state']}: {r['value']}" for r in per_state] + [f"optimum: {_value(opt)}"] + notes)
    _emit(args, doc, text)
    return EXIT_OK


# -- export-mdp ---------------------------------------------------------------


def cmd_export(args) -> int:
    model = load_model(args.model)
    m = extract_mdp(model, action_cap=args.action_cap)
    if args.quotient:
        m = quotient_mdp(m, cubes(load_predicates(args.quotient), StateSpace(model.decls)))
    if args.format == "prism":
        files = m.to_prism_explicit()
        if args.out:
            for ext, body in files.items():
                Path(f"{args.out}.{ext}").write_text(body)
        else:
            for ext in ("tra", "lab", "sta"):
                sys.stdout.write(f"# {ext}\n{files[ext]}")
        return EXIT_OK
    body = json.dumps(m.to_json(), indent=2) + "\n"
    if args.out:
        Path(f"{args.out}.json").write_text(body)
    else:
        sys.stdout.write(body)
    return EXIT_OK


# -- rabin --------------------------------------------------------------------


def _cases(args):
    split = _split(args.split)
    if split is not None:
        if args.n is not None and sum(split) != args.n:
            raise InputError("--split must add up to --n")
        return [split]
    if args.n is None:
        raise InputError("give --n or --split")
    if args.n < 0:
        raise InputError("--n must be non-negative")
    return splits(args.n)


def cmd_rabin_simulate(args) -> int:
    cases = _cases(args)
    gap = conservation = terminated = 0
    steps = []
    max_gap = 0
    trace_lines = []
    for i in range(args.traces):
        a, b = cases[i % len(cases)]
        t = simulate(a, b, args.scheduler, args.seed + i, args.max_steps)
        terminated += t.terminated
        steps.append(t.steps)
        gap += sum(1 for _, v in t.violations if v.startswith("|L-R|"))
        conservation += sum(1 for _, v in t.violations if v.startswith("tourist"))
        max_gap = max(max_gap, max(abs(s.L - s.R) for s in t.states))
        if args.trace_out and i == 0:
            trace_lines.append(t.to_jsonl())
    if args.trace_out:
        Path(args.trace_out).write_text("".join(trace_lines))
    doc = {
        "traces": args.traces,
        "terminated": terminated,
        "mean_steps": sum(steps) / len(steps) if steps else 0.0,
        "max_steps_seen": max(steps) if steps else 0,
        "max_board_gap": max_gap,
        "violations": {"board_gap_above_2": gap, "tourist_conservation": conservation},
    }
    text = "\n".join(f"{k}: {v}" for k, v in doc.items())
    _emit(args, doc, text)
    return EXIT_OK


def _curve_csv(rows) -> str:
    return "T,pmin,pmax\n" + "".join(f"{t},{float(lo):.12g},{float(hi):.12g}\n" for t, lo, hi in rows)


def cmd_rabin_models(args) -> int:
    cases = _cases(args)
    per_case = []
    curves = []
    tagged = False
    for a, b in cases:
        if args.command == "truncated":
            cap = args.cap if args.cap is not None else 3 * args.t + 3
            m = truncated_mdp(a, b, cap)
            if "overflow" in m.labels:
                reach = pbounded(m, "overflow", args.t, "max")
                tagged |= reach[m.initial[0]] > 0
        else:
            m = abstract_mdp(a, b)
        lo = pbounded_curve(m, "target", args.t, "min", exact=True)
        hi = pbounded_curve(m, "target", args.t, "max", exact=True)
        s0 = m.initial[0]
        curves.append([(lo[t][s0], hi[t][s0]) for t in range(args.t + 1)])
        per_case.append({"split": [a, b], "states": m.n, "choices": m.num_choices})
    rows = [
        (t, min(c[t][0] for c in curves), max(c[t][1] for c in curves)) for t in range(args.t + 1)
    ]
    doc = {
        "models": per_case,
        "tags": ["truncated"] if tagged else [],
        "curve": [{"T": t, "pmin": str(lo), "pmax": str(hi)} for t, lo, hi in rows],
    }
    csv = _curve_csv(rows)
    _emit(args, doc, csv, csv)
    return EXIT_OK


def cmd_rabin_paper(args) -> int:
    split = _split(args.split)
    if args.n is None:
        if split is None:
            raise InputError("give --n or --split")
        args.n = sum(split)
    report = run_paper_queries(args.n, split, args.t_max, oracle_t=args.oracle_t)
    text = report.csv() + "\n" + report.table() + "\n"
    _emit(args, {"report": report.to_json()}, text, report.csv())
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pgclabs", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def fmt(sp, choices=("json", "text")):
        sp.add_argument("--format", choices=choices, default="json", help="output format (default json)")

    w = sub.add_parser("wp", help="weakest pre-expectation of a model's program")
    w.add_argument("model", help="model file")
    w.add_argument("expectation", help="post-expectation, e.g. '[x=1]' or '1/2*[x>0] + [y=1]'")
    w.add_argument("--abstract", metavar="PREDS", help="predicates file; print the cubed result")
    w.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help=f"loop iteration limit (default {DEFAULT_FUEL})")
    fmt(w)
    w.set_defaults(func=cmd_wp)

    c = sub.add_parser("check", help="information preservation (ip) or data independence (di)")
    c.add_argument("kind", choices=("ip", "di"))
    c.add_argument("model", help="model file")
    c.add_argument("predicates", nargs="?", help="predicates file (ip only)")
    fmt(c)
    c.set_defaults(func=cmd_check)

    m = sub.add_parser("mc", help="model-check a loop-form model")
    m.add_argument("model", help="model file of the form 'do G -> Body od'")
    m.add_argument("query", help="'Pmin=? [true U<=T pred]' or 'Rmax=? [F pred]'; labels \"init\", \"guard\", \"exit\"")
    m.add_argument("--quotient", metavar="PREDS", help="run on the quotient by these predicates")
    m.add_argument("--curve", type=int, metavar="T", help="sweep horizons 0..T of a P query (CSV)")
    m.add_argument("--residual", type=float, default=1e-9, help="value-iteration residual (default 1e-9)")
    m.add_argument("--action-cap", type=int, default=2**12, help="max actions per state (default 4096)")
    fmt(m, ("json", "text", "csv"))
    m.set_defaults(func=cmd_mc)

    e = sub.add_parser("export-mdp", help="write the MDP of a loop-form model")
    e.add_argument("model")
    e.add_argument("--quotient", metavar="PREDS")
    e.add_argument("--format", choices=("json", "prism"), default="json")
    e.add_argument("--out", metavar="PREFIX", help="write PREFIX.json or PREFIX.{tra,lab,sta}")
    e.add_argument("--action-cap", type=int, default=2**12)
    e.set_defaults(func=cmd_export)

    r = sub.add_parser("rabin", help="Rabin's choice-coordination study")
    rs = r.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--n", type=int, help="number of tourists; all splits A+B=N are tried")
        sp.add_argument("--split", help="a single initial split 'A,B'")

    s = rs.add_parser("simulate", help="simulate runs and count invariant violations")
    common(s)
    s.add_argument("--traces", type=int, default=1)
    s.add_argument("--scheduler", choices=SCHEDULERS, default="uniform")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-steps", type=int, default=10**4)
    s.add_argument("--trace-out", metavar="PATH", help="JSON lines of the first trace")
    fmt(s)
    s.set_defaults(func=cmd_rabin_simulate)

    for name, helptext in (("truncated", "bounded concrete model"), ("abstract", "finite abstract model")):
        sp = rs.add_parser(name, help=f"Pmin/Pmax curve on the {helptext}")
        common(sp)
        sp.add_argument("--t", type=int, default=10, help="largest horizon (default 10)")
        if name == "truncated":
            sp.add_argument("--cap", type=int, help="board value cap (default 3T+3)")
        fmt(sp, ("csv", "json"))
        sp.set_defaults(func=cmd_rabin_models)

    q = rs.add_parser("paper-queries", help="Pmin curve and Rmin/Rmax under both round conventions")
    common(q)
    q.add_argument("--t-max", type=int, default=30)
    q.add_argument("--oracle-t", type=int, default=0, help="cross-check against the truncated model up to this T")
    fmt(q, ("json", "text", "csv"))
    q.set_defaults(func=cmd_rabin_paper)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InputError as exc:
        for line in exc.diagnostics:
            print(line, file=sys.stderr)
        return EXIT_DIAG
    except (ParseError, EvaluationError, StateSpaceError, MdpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAG
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
