"""Model files: a small declarative syntax binding symbols, semantics,
belief, measure, named formulas, and queries into one runnable unit.

    # worlds over three propositions
    symbols { h: bool  c: bool  p: bool }
    semantics boolean
    belief bernoulli { h: 0.8, c: 0.5, p: 0.5 }
    measure counting
    theory { happiness: "h -> (c | p)" }
    queries {
      main: happiness
      joint: "h & c" given { p: 1 }
    }

Sections may appear in any order but each of symbols/semantics/belief/
measure may appear at most once. Domains: `bool`, `unit`, `set{v, ...}`
(exact rationals), `real[lo, hi]`. Belief families: `bernoulli {name: p}`,
`loglinear {w1: v, ...} over {formula-or-name, ...}`, `dirac {name: v}`,
`fuzzyset {name: [(x, y), ...]}`. Measures: `counting`,
`quadrature(g=200)`, `montecarlo(n=100000, seed=42)`. Queries take an
optional `given { name: value }` condition and an optional
`logic direct | threshold(t) | values{...} | values[lo, hi]`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .belief import (
    Belief,
    DiracPoint,
    FuzzyMembership,
    IndependentBernoulli,
    LogLinear,
    normalize,
)
from .integrator import Model
from .logic import (
    BOOL,
    UNIT,
    Boolean,
    BoundedReal,
    Domain,
    FiniteSet,
    Formula,
    Interpretation,
    ParseError,
    Symbol,
    Theory,
    make_symbols,
    parse_formula,
)
from .measure import BorelMonteCarlo, BorelQuadrature, Counting, MeasureSpec, ProductMixed
from .semantics import (
    BooleanSem,
    Direct,
    FuzzySem,
    LogicFn,
    Semantics,
    Threshold,
    TNORM_FAMILIES,
    ValueSetIndicator,
)

__all__ = ["ModelFileError", "Query", "ModelFile", "parse_model_file", "load_model_file"]


class ModelFileError(ValueError):
    """Model file rejected; carries file/line for one-line diagnostics."""

    def __init__(self, message: str, filename: str, line: int):
        super().__init__(f"{filename}:{line}: {message}")
        self.filename = filename
        self.line = line


@dataclass(frozen=True)
class Query:
    name: str
    formula: Formula
    condition: dict
    logic_fn: LogicFn

    def __hash__(self):
        return hash(self.name)


@dataclass(frozen=True)
class ModelFile:
    symbols: tuple[Symbol, ...]
    semantics: Semantics
    belief: Belief
    measure: MeasureSpec
    theory: dict[str, Formula]
    queries: tuple[Query, ...]

    def model(self) -> Model:
        """Build the runnable model; log-linear beliefs get normalised here."""
        b = self.belief
        if isinstance(b, LogLinear) and not b.normalized:
            b = normalize(b)
        return Model(self.symbols, self.semantics, b)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<number>\d+/\d+|\d+\.\d+|\d+)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<punct>[{}()\[\]:,=\-])
    """,
    re.VERBOSE,
)


class _Tok:
    __slots__ = ("kind", "text", "line")

    def __init__(self, kind, text, line):
        self.kind = kind
        self.text = text
        self.line = line


def _tokenize(text: str, filename: str) -> list[_Tok]:
    tokens = []
    pos, line = 0, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ModelFileError(f"unexpected character {text[pos]!r}", filename, line)
        lexeme = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Tok(m.lastgroup, lexeme, line))
        line += lexeme.count("\n")
        pos = m.end()
    tokens.append(_Tok("eof", "", line))
    return tokens


class _MParser:
    def __init__(self, text: str, filename: str):
        self.filename = filename
        self.toks = _tokenize(text, filename)
        self.i = 0

    def err(self, message: str, line: int | None = None) -> ModelFileError:
        return ModelFileError(message, self.filename, line or self.peek().line)

    def peek(self) -> _Tok:
        return self.toks[min(self.i, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise self.err(f"expected {text!r}, got {t.text or 'end of file'!r}", t.line)
        return t

    def ident(self, what: str) -> _Tok:
        t = self.next()
        if t.kind != "ident":
            raise self.err(f"expected {what}, got {t.text or 'end of file'!r}", t.line)
        return t

    def number(self) -> Fraction:
        neg = False
        if self.peek().text == "-":
            self.next()
            neg = True
        t = self.next()
        if t.kind != "number":
            raise self.err(f"expected a number, got {t.text or 'end of file'!r}", t.line)
        v = Fraction(t.text)
        return -v if neg else v

    def maybe_comma(self):
        if self.peek().text == ",":
            self.next()


def parse_model_file(text: str, filename: str = "<model>") -> ModelFile:
    p = _MParser(text, filename)
    raw: dict[str, object] = {}
    raw_lines: dict[str, int] = {}
    while p.peek().kind != "eof":
        t = p.ident("a section name")
        if t.text in raw and t.text not in ("theory", "queries"):
            raise p.err(f"duplicate section {t.text!r}", t.line)
        if t.text == "symbols":
            raw["symbols"] = _parse_symbols(p)
        elif t.text == "semantics":
            raw["semantics"] = p.ident("a semantics name")
        elif t.text == "belief":
            raw["belief"] = _parse_belief(p)
        elif t.text == "measure":
            raw["measure"] = _parse_measure(p)
        elif t.text == "theory":
            raw.setdefault("theory", []).extend(_parse_named_block(p))
        elif t.text == "queries":
            raw.setdefault("queries", []).extend(_parse_queries(p))
        else:
            raise p.err(f"unknown section {t.text!r}", t.line)
        raw_lines.setdefault(t.text, t.line)
    return _build(p, raw, raw_lines)


def load_model_file(path: str | Path) -> ModelFile:
    path = Path(path)
    return parse_model_file(path.read_text(), str(path))


# -- section parsing ---------------------------------------------------------


def _parse_symbols(p: _MParser):
    p.expect("{")
    decls = []
    while p.peek().text != "}":
        name = p.ident("a symbol name")
        p.expect(":")
        decls.append((name.text, _parse_domain(p), name.line))
        p.maybe_comma()
    p.next()
    return decls


def _parse_domain(p: _MParser):
    t = p.ident("a domain")
    if t.text == "bool":
        return BOOL
    if t.text == "unit":
        return UNIT
    if t.text == "set":
        p.expect("{")
        values = [p.number()]
        while p.peek().text == ",":
            p.next()
            values.append(p.number())
        p.expect("}")
        return _domain_or_err(p, FiniteSet, t.line, values)
    if t.text == "real":
        p.expect("[")
        lo = p.number()
        p.expect(",")
        hi = p.number()
        p.expect("]")
        return _domain_or_err(p, BoundedReal, t.line, float(lo), float(hi))
    raise p.err(f"unknown domain {t.text!r}", t.line)


def _domain_or_err(p: _MParser, ctor, line: int, *args) -> Domain:
    try:
        return ctor(*args)
    except ValueError as e:
        raise p.err(str(e), line) from None


def _parse_belief(p: _MParser):
    t = p.ident("a belief family")
    if t.text in ("bernoulli", "dirac"):
        return (t.text, _parse_assoc(p), t.line)
    if t.text == "loglinear":
        weights = _parse_assoc(p)
        p.expect("over")
        p.expect("{")
        targets = []
        while p.peek().text != "}":
            tok = p.next()
            if tok.kind not in ("ident", "string"):
                raise p.err("expected a formula string or theory name", tok.line)
            targets.append(tok)
            p.maybe_comma()
        p.next()
        return ("loglinear", (weights, targets), t.line)
    if t.text == "fuzzyset":
        p.expect("{")
        curves = {}
        while p.peek().text != "}":
            name = p.ident("a symbol name")
            p.expect(":")
            p.expect("[")
            knots = []
            while p.peek().text != "]":
                p.expect("(")
                x = p.number()
                p.expect(",")
                y = p.number()
                p.expect(")")
                knots.append((float(x), float(y)))
                p.maybe_comma()
            p.next()
            curves[name.text] = (knots, name.line)
            p.maybe_comma()
        p.next()
        return ("fuzzyset", curves, t.line)
    raise p.err(f"unknown belief family {t.text!r}", t.line)


def _parse_assoc(p: _MParser) -> list[tuple[str, Fraction, int]]:
    p.expect("{")
    out = []
    while p.peek().text != "}":
        name = p.ident("a name")
        p.expect(":")
        out.append((name.text, p.number(), name.line))
        p.maybe_comma()
    p.next()
    return out


def _parse_measure(p: _MParser):
    t = p.ident("a measure")
    if t.text == "counting":
        return (t.text, {}, t.line)
    if t.text in ("quadrature", "montecarlo"):
        params = {}
        if p.peek().text == "(":
            p.next()
            while p.peek().text != ")":
                key = p.ident("a parameter name")
                p.expect("=")
                params[key.text] = p.number()
                p.maybe_comma()
            p.next()
        return (t.text, params, t.line)
    raise p.err(f"unknown measure {t.text!r}", t.line)


def _parse_named_block(p: _MParser):
    p.expect("{")
    out = []
    while p.peek().text != "}":
        name = p.ident("a formula name")
        p.expect(":")
        tok = p.next()
        if tok.kind != "string":
            raise p.err("theory entries must be quoted formulas", tok.line)
        out.append((name.text, tok))
        p.maybe_comma()
    p.next()
    return out


def _parse_queries(p: _MParser):
    p.expect("{")
    out = []
    while p.peek().text != "}":
        name = p.ident("a query name")
        p.expect(":")
        target = p.next()
        if target.kind not in ("ident", "string"):
            raise p.err("a query needs a formula string or theory name", target.line)
        condition = None
        logic = None
        while p.peek().text in ("given", "logic"):
            kw = p.next()
            if kw.text == "given":
                condition = _parse_assoc(p)
            else:
                logic = _parse_logic(p)
        out.append((name.text, target, condition, logic))
        p.maybe_comma()
    p.next()
    return out


def _parse_logic(p: _MParser):
    t = p.ident("a logic function")
    if t.text == "direct":
        return Direct()
    if t.text == "threshold":
        p.expect("(")
        tau = p.number()
        p.expect(")")
        try:
            return Threshold(float(tau))
        except ValueError as e:
            raise p.err(str(e), t.line) from None
    if t.text == "values":
        if p.peek().text == "{":
            p.next()
            values = [float(p.number())]
            while p.peek().text == ",":
                p.next()
                values.append(float(p.number()))
            p.expect("}")
            return ValueSetIndicator(values=frozenset(values))
        p.expect("[")
        lo = p.number()
        p.expect(",")
        hi = p.number()
        p.expect("]")
        return ValueSetIndicator(interval=(float(lo), float(hi)))
    raise p.err(f"unknown logic function {t.text!r}", t.line)


# -- building ----------------------------------------------------------------


def _coerce(p: _MParser, sym: Symbol, value: Fraction, line: int):
    if isinstance(sym.domain, Boolean):
        if value not in (0, 1):
            raise p.err(f"{sym.name!r} is bool; value must be 0 or 1, got {value}", line)
        return int(value)
    if isinstance(sym.domain, FiniteSet):
        if not sym.domain.contains(value):
            raise p.err(f"value {value} not in domain {sym.domain} of {sym.name!r}", line)
        return value
    v = float(value)
    if not sym.domain.contains(v):
        raise p.err(f"value {v} not in domain {sym.domain} of {sym.name!r}", line)
    return v


def _build(p: _MParser, raw: dict, raw_lines: dict) -> ModelFile:
    for needed in ("symbols", "semantics", "belief", "measure"):
        if needed not in raw:
            raise p.err(f"missing required section {needed!r}", 1)

    decls = raw["symbols"]
    names = [n for n, _, _ in decls]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise p.err(f"duplicate symbol {dup!r}", raw_lines["symbols"])
    symbols = make_symbols([(n, d) for n, d, _ in decls])
    by_name = {s.name: s for s in symbols}

    sem_tok = raw["semantics"]
    if sem_tok.text == "boolean":
        semantics: Semantics = BooleanSem()
    elif sem_tok.text in TNORM_FAMILIES:
        semantics = FuzzySem(TNORM_FAMILIES[sem_tok.text])
    else:
        raise p.err(
            f"unknown semantics {sem_tok.text!r}; choose boolean, "
            "lukasiewicz, goedel, or product", sem_tok.line,
        )

    kind, params, mline = raw["measure"]
    if kind == "counting":
        measure: MeasureSpec = Counting()
    elif kind == "quadrature":
        try:
            measure = BorelQuadrature(int(params.get("g", 200)))
        except ValueError as e:
            raise p.err(str(e), mline) from None
    else:
        try:
            measure = BorelMonteCarlo(
                int(params.get("n", 100000)), int(params.get("seed", 0))
            )
        except ValueError as e:
            raise p.err(str(e), mline) from None
    if not isinstance(measure, Counting):
        # models mixing finite and continuous symbols pair counting with the
        # declared Borel scheme
        finite = any(s.domain.is_finite for s in symbols)
        continuous = any(not s.domain.is_finite for s in symbols)
        if finite and continuous:
            measure = ProductMixed(measure)

    theory: dict[str, Formula] = {}
    for name, tok in raw.get("theory", []):
        if name in theory:
            raise p.err(f"duplicate theory formula {name!r}", tok.line)
        theory[name] = _parse_embedded(p, tok, symbols)

    belief = _build_belief(p, raw["belief"], symbols, by_name, semantics, measure, theory)

    queries = []
    seen_queries = set()
    for name, target, condition, logic in raw.get("queries", []):
        if name in seen_queries:
            raise p.err(f"duplicate query {name!r}", target.line)
        seen_queries.add(name)
        formula = _resolve_target(p, target, symbols, theory)
        cond = {}
        for cname, cval, cline in condition or []:
            if cname not in by_name:
                raise p.err(f"condition on undeclared symbol {cname!r}", cline)
            cond[cname] = _coerce(p, by_name[cname], cval, cline)
        queries.append(Query(name, formula, cond, logic or Direct()))

    return ModelFile(symbols, semantics, belief, measure, theory, tuple(queries))


def _parse_embedded(p: _MParser, tok: _Tok, symbols) -> Formula:
    text = tok.text[1:-1]
    try:
        return parse_formula(text, symbols)
    except ParseError as e:
        raise ModelFileError(str(e), p.filename, tok.line) from None


def _resolve_target(p: _MParser, tok: _Tok, symbols, theory) -> Formula:
    if tok.kind == "ident":
        if tok.text not in theory:
            raise p.err(f"unknown theory formula {tok.text!r}", tok.line)
        return theory[tok.text]
    return _parse_embedded(p, tok, symbols)


def _build_belief(p, spec, symbols, by_name, semantics, measure, theory) -> Belief:
    family, payload, line = spec
    if family in ("bernoulli", "dirac"):
        assignment = {}
        for name, value, vline in payload:
            if name not in by_name:
                raise p.err(f"belief names undeclared symbol {name!r}", vline)
            assignment[name] = value if family == "bernoulli" else _coerce(
                p, by_name[name], value, vline
            )
        if family == "bernoulli":
            try:
                return IndependentBernoulli({k: float(v) for k, v in assignment.items()})
            except ValueError as e:
                raise p.err(str(e), line) from None
        try:
            return DiracPoint(Interpretation.from_dict(symbols, assignment))
        except ValueError as e:
            raise p.err(str(e), line) from None
    if family == "loglinear":
        weights_assoc, targets = payload
        weights = [float(v) for _, v, _ in weights_assoc]
        sentences = [_resolve_target(p, t, symbols, theory) for t in targets]
        if len(weights) != len(sentences):
            raise p.err(
                f"{len(sentences)} formulas need {len(sentences)} weights, "
                f"got {len(weights)}", line,
            )
        try:
            return LogLinear(Theory(sentences), tuple(weights), semantics, measure, symbols)
        except ValueError as e:
            raise p.err(str(e), line) from None
    curves = {}
    for name, (knots, cline) in payload.items():
        if name not in by_name:
            raise p.err(f"membership curve for undeclared symbol {name!r}", cline)
        curves[name] = tuple(knots)
    try:
        return FuzzyMembership(curves)
    except ValueError as e:
        raise p.err(str(e), line) from None
