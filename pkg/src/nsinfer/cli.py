"""Command-line front end: load a model file, run queries, emit JSON.

One JSON document per query, written to stdout with a stable key order, so
identical inputs (including the seed) produce byte-identical output. Exit
codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction

from .belief import DiracPoint, IndependentBernoulli, LogLinear, normalize
from .gradients import grad_dirac, grad_loglinear, grad_wmc
from .integrator import Model, compile_formula, infer, map_inference
from .logic import ParseError, parse_formula
from .measure import BorelMonteCarlo, BorelQuadrature, ProductMixed
from .modelfile import ModelFile, ModelFileError, Query, load_model_file
from .presets import PRESET_NAMES, make_preset, run_preset
from .semantics import Direct, FuzzySem, LUKASIEWICZ

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nsinfer", description=__doc__.splitlines()[0])
    p.add_argument("--model", required=True, help="model file to load")
    p.add_argument("--query", help="run a single named query from the file")
    p.add_argument("-e", "--expr", help="run an inline formula instead of file queries")
    p.add_argument(
        "--backend",
        choices=("enum", "circuit", "quad", "mc"),
        help="override the backend/measure selection",
    )
    p.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    p.add_argument("--grad", action="store_true", help="add parameter gradients to the output")
    p.add_argument("--map", action="store_true", help="run MAP inference instead of the integral")
    p.add_argument("--preset", choices=PRESET_NAMES, help="run a system preset")
    p.add_argument(
        "--oracle",
        action="store_true",
        help="force brute-force enumeration (cross-check for other backends)",
    )
    p.add_argument("--json-indent", type=int, default=None, help="pretty-print JSON")
    return p


def _json_value(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    return v


def _resolve_measure(mf: ModelFile, args):
    measure = mf.measure
    mixed = isinstance(measure, ProductMixed)
    inner = measure.continuous if mixed else measure
    if args.backend == "quad":
        inner = BorelQuadrature(inner.grid if isinstance(inner, BorelQuadrature) else 200)
    elif args.backend == "mc":
        if not isinstance(inner, BorelMonteCarlo):
            inner = BorelMonteCarlo()
    if args.seed is not None and isinstance(inner, BorelMonteCarlo):
        inner = replace(inner, seed=args.seed)
    if isinstance(inner, (BorelQuadrature, BorelMonteCarlo)):
        return ProductMixed(inner) if mixed else inner
    return measure


def _build_model(mf: ModelFile, args) -> Model:
    belief = mf.belief
    if isinstance(belief, LogLinear):
        if args.seed is not None and isinstance(belief.base_measure, BorelMonteCarlo):
            belief = replace(belief, base_measure=replace(belief.base_measure, seed=args.seed))
        belief = normalize(belief)
    return Model(mf.symbols, mf.semantics, belief)


def _select_queries(mf: ModelFile, args) -> list[Query]:
    if args.expr is not None:
        formula = parse_formula(args.expr, mf.symbols)
        return [Query(args.expr, formula, {}, Direct())]
    if args.query is not None:
        for q in mf.queries:
            if q.name == args.query:
                return [q]
        raise ValueError(f"no query named {args.query!r} in the model file")
    if not mf.queries:
        raise ValueError("the model file declares no queries; use --query or -e")
    return list(mf.queries)


def _run_preset_query(mf: ModelFile, model: Model, q: Query, args, measure) -> dict:
    preset_name = args.preset
    if q.condition:
        raise ValueError("--preset does not support conditioned queries")
    required = {
        "semantic_loss": IndependentBernoulli,
        "deepproblog_prop": IndependentBernoulli,
        "neurasp_prop": IndependentBernoulli,
        "nmln": LogLinear,
        "neupsl": LogLinear,
        "ltn": DiracPoint,
        "sbr": DiracPoint,
    }[preset_name]
    b = mf.belief
    if not isinstance(b, required):
        raise ValueError(
            f"preset {preset_name!r} needs a {required.__name__} belief, "
            f"the model file declares {type(b).__name__}"
        )
    tnorm = mf.semantics.tnorm if isinstance(mf.semantics, FuzzySem) else LUKASIEWICZ
    kwargs = {}
    if isinstance(b, IndependentBernoulli):
        kwargs["probs"] = b.probs
        preset = make_preset(preset_name)
    elif isinstance(b, DiracPoint):
        kwargs["point"] = b.point
        preset = make_preset(preset_name, tnorm=tnorm)
    else:
        kwargs["weights"] = b.weights
        kwargs["theory"] = b.theory
        m = measure if isinstance(measure, (BorelQuadrature, BorelMonteCarlo)) else None
        preset = make_preset(preset_name, tnorm=tnorm, measure=m)
    run = run_preset(preset, mf.symbols, q.formula, **kwargs)
    doc = {
        "query": q.name,
        "preset": preset_name,
        "quadruple": run.preset.quadruple(),
        "backend": run.result.backend,
        "value": run.result.value,
    }
    if run.result.std_error is not None:
        doc["std_error"] = run.result.std_error
    if run.result.models_visited is not None:
        doc["models_visited"] = run.result.models_visited
    return doc


def _gradient_doc(model: Model, q: Query):
    b = model.belief
    if q.condition:
        raise ValueError("--grad does not support conditioned queries")
    if isinstance(b, IndependentBernoulli):
        return grad_wmc(compile_formula(q.formula), b)
    if isinstance(b, LogLinear):
        return grad_loglinear(b, q.formula, q.logic_fn)
    if isinstance(b, DiracPoint):
        if not isinstance(model.semantics, FuzzySem):
            raise ValueError("point-belief gradients need a fuzzy semantics")
        return grad_dirac(q.formula, model.semantics.tnorm, b.point)
    raise ValueError(f"gradients are not supported for {type(b).__name__} beliefs")


def _run_query(mf: ModelFile, model: Model, q: Query, args, measure) -> dict:
    if args.preset:
        return _run_preset_query(mf, model, q, args, measure)

    if args.map:
        w, score = map_inference(model, q.logic_fn, q.formula, q.condition)
        return {
            "query": q.name,
            "backend": "map",
            "value": score,
            "map_interpretation": {s.name: _json_value(v) for s, v in zip(w.symbols, w.values)},
        }

    if args.grad:
        # value and gradient must come from one computation so they agree
        # bit for bit with the in-process bindings
        g = _gradient_doc(model, q)
        doc = {
            "query": q.name,
            "backend": _grad_backend(model),
            "value": g.value,
            "grad": list(g.grad),
            "grad_params": list(g.params),
        }
        if g.grad_std_error is not None:
            doc["grad_std_error"] = list(g.grad_std_error)
        if g.flags:
            doc["flags"] = list(g.flags)
        return doc

    method = "auto"
    if args.backend == "enum":
        method = "enum"
    elif args.backend == "circuit":
        method = "circuit"
    if args.oracle:
        method = "enum"
    result = infer(model, q.logic_fn, q.formula, measure, condition=q.condition, method=method)
    doc = {
        "query": q.name,
        "backend": result.backend,
        "value": result.value,
    }
    if result.std_error is not None:
        doc["std_error"] = result.std_error
    if result.models_visited is not None:
        doc["models_visited"] = result.models_visited
    return doc


def _grad_backend(model: Model) -> str:
    b = model.belief
    if isinstance(b, IndependentBernoulli):
        return "circuit"
    if isinstance(b, DiracPoint):
        return "dirac"
    base = b.base_measure
    if isinstance(base, BorelQuadrature):
        return "quadrature"
    if isinstance(base, BorelMonteCarlo):
        return "montecarlo"
    return "enum"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.map and (args.grad or args.preset):
        print("error: --map cannot be combined with --grad or --preset", file=sys.stderr)
        return 1
    try:
        mf = load_model_file(args.model)
        measure = _resolve_measure(mf, args)
        model = _build_model(mf, args)
        queries = _select_queries(mf, args)
        docs = [_run_query(mf, model, q, args, measure) for q in queries]
    except (ModelFileError, ParseError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ArithmeticError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    for doc in docs:
        print(json.dumps(doc, indent=args.json_indent))
    return 0


if __name__ == "__main__":
    sys.exit(main())
