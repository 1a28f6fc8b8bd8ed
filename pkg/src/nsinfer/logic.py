"""Symbols, domains, interpretations, and the propositional/linear formula language.

Everything here is immutable after construction and safe to share across
threads; parsing is a pure function and enumeration streams are restartable.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "ParseError",
    "NotEnumerableError",
    "Domain",
    "Boolean",
    "UnitInterval",
    "FiniteSet",
    "BoundedReal",
    "BOOL",
    "UNIT",
    "Symbol",
    "make_symbols",
    "Interpretation",
    "Formula",
    "AtomRef",
    "ConstTrue",
    "ConstFalse",
    "Not",
    "And",
    "Or",
    "Implies",
    "Iff",
    "LinCmp",
    "Theory",
    "parse_formula",
    "free_symbols",
    "enumerate_interpretations",
    "format_formula",
]

_IDENT_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")


class ParseError(ValueError):
    """Formula text rejected; `position` is a 0-based offset into the input."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class NotEnumerableError(ValueError):
    """Raised when enumeration is requested over an infinite domain."""


# ---------------------------------------------------------------------------
# Domains and symbols


class Domain:
    """Base class for symbol domains."""

    def contains(self, value) -> bool:
        raise NotImplementedError

    @property
    def is_finite(self) -> bool:
        return False

    @property
    def is_numeric(self) -> bool:
        """True for domains usable inside linear comparisons."""
        return False

    def enum_values(self) -> tuple:
        raise NotEnumerableError(f"domain {self} is not enumerable")


@dataclass(frozen=True)
class Boolean(Domain):
    """The two-element domain {0, 1}."""

    def contains(self, value) -> bool:
        return isinstance(value, int) and value in (0, 1)

    @property
    def is_finite(self) -> bool:
        return True

    def enum_values(self) -> tuple:
        return (0, 1)

    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class UnitInterval(Domain):
    """The real unit interval [0, 1]."""

    def contains(self, value) -> bool:
        return isinstance(value, (int, float)) and 0.0 <= value <= 1.0

    def __str__(self):
        return "unit"


@dataclass(frozen=True)
class FiniteSet(Domain):
    """An explicit, duplicate-free set of rational values, in declared order."""

    values: tuple[Fraction, ...]

    def __init__(self, values: Iterable):
        vals = tuple(Fraction(v) for v in values)
        if not vals:
            raise ValueError("FiniteSet must be non-empty")
        if len(set(vals)) != len(vals):
            raise ValueError(f"FiniteSet has duplicate values: {vals}")
        object.__setattr__(self, "values", vals)

    def contains(self, value) -> bool:
        try:
            return Fraction(value) in self.values
        except (TypeError, ValueError):
            return False

    @property
    def is_finite(self) -> bool:
        return True

    @property
    def is_numeric(self) -> bool:
        return True

    def enum_values(self) -> tuple:
        return self.values

    def __str__(self):
        return "set{%s}" % ", ".join(str(v) for v in self.values)


@dataclass(frozen=True)
class BoundedReal(Domain):
    """A closed real interval [lo, hi] with finite endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"BoundedReal requires lo <= hi, got [{self.lo}, {self.hi}]")
        if not (float("-inf") < self.lo and self.hi < float("inf")):
            raise ValueError("BoundedReal endpoints must be finite")

    def contains(self, value) -> bool:
        return isinstance(value, (int, float)) and self.lo <= value <= self.hi

    @property
    def is_numeric(self) -> bool:
        return True

    def __str__(self):
        return f"real[{self.lo}, {self.hi}]"


BOOL = Boolean()
UNIT = UnitInterval()


@dataclass(frozen=True)
class Symbol:
    """A named symbol with a domain and its position in the ordered symbol set."""

    name: str
    domain: Domain
    index: int

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid symbol name: {self.name!r}")

    def __str__(self):
        return self.name


def make_symbols(decls: Sequence[tuple[str, Domain]]) -> tuple[Symbol, ...]:
    """Build the ordered symbol set from (name, domain) pairs.

    Names must be unique; indices are assigned by position.
    """
    names = [n for n, _ in decls]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise ValueError(f"duplicate symbol name: {dup!r}")
    return tuple(Symbol(n, d, i) for i, (n, d) in enumerate(decls))


class Interpretation:
    """A total assignment of a value to every symbol of a model.

    Values are stored in symbol-index order. Instances are immutable,
    hashable, and validated against each symbol's domain on construction.
    """

    __slots__ = ("symbols", "values", "_index", "_hash")

    def __init__(self, symbols: Sequence[Symbol], values: Sequence, _checked: bool = True):
        symbols = tuple(symbols)
        values = tuple(values)
        if _checked:
            if len(symbols) != len(values):
                raise ValueError(
                    f"need {len(symbols)} values for {len(symbols)} symbols, got {len(values)}"
                )
            for s, v in zip(symbols, values):
                if not s.domain.contains(v):
                    raise ValueError(f"value {v!r} not in domain {s.domain} of symbol {s.name!r}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {s.name: i for i, s in enumerate(symbols)})
        object.__setattr__(self, "_hash", None)

    @classmethod
    def from_dict(cls, symbols: Sequence[Symbol], assignment: Mapping) -> "Interpretation":
        symbols = tuple(symbols)
        missing = [s.name for s in symbols if s.name not in assignment]
        if missing:
            raise ValueError(f"interpretation is not total; missing {missing}")
        extra = set(assignment) - {s.name for s in symbols}
        if extra:
            raise ValueError(f"assignment mentions unknown symbols {sorted(extra)}")
        return cls(symbols, [assignment[s.name] for s in symbols])

    def __setattr__(self, name, value):
        raise AttributeError("Interpretation is immutable")

    def __getitem__(self, key):
        name = key.name if isinstance(key, Symbol) else key
        try:
            return self.values[self._index[name]]
        except KeyError:
            raise KeyError(f"no assignment for symbol {name!r}") from None

    def __contains__(self, key):
        name = key.name if isinstance(key, Symbol) else key
        return name in self._index

    def as_dict(self) -> dict:
        return {s.name: v for s, v in zip(self.symbols, self.values)}

    def __eq__(self, other):
        return (
            isinstance(other, Interpretation)
            and self.values == other.values
            and self.symbols == other.symbols
        )

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.values)
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        inner = ", ".join(f"{s.name}={v}" for s, v in zip(self.symbols, self.values))
        return f"Interpretation({inner})"


# ---------------------------------------------------------------------------
# Formulas


class Formula:
    """Base class for formula AST nodes."""

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class AtomRef(Formula):
    """Reference to an atom symbol (bool or unit-interval domain)."""

    symbol: Symbol


@dataclass(frozen=True)
class ConstTrue(Formula):
    pass


@dataclass(frozen=True)
class ConstFalse(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


_CMP_OPS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True)
class LinCmp(Formula):
    """Linear comparison `sum(coef_i * s_i) + const  op  0` with exact rationals.

    Terms are kept in canonical form: sorted by symbol index, zero
    coefficients dropped. Symbols must have numeric (FiniteSet/BoundedReal)
    domains.
    """

    terms: tuple[tuple[Symbol, Fraction], ...]
    const: Fraction
    op: str

    def __post_init__(self):
        if self.op not in _CMP_OPS:
            raise ValueError(f"unknown comparator {self.op!r}")
        for sym, _ in self.terms:
            if not sym.domain.is_numeric:
                raise ValueError(
                    f"linear comparison over non-numeric symbol {sym.name!r} ({sym.domain})"
                )

    @staticmethod
    def make(coeffs: Mapping[Symbol, Fraction], const, op: str) -> "LinCmp":
        terms = tuple(
            (s, Fraction(c)) for s, c in sorted(coeffs.items(), key=lambda kv: kv[0].index)
            if c != 0
        )
        return LinCmp(terms, Fraction(const), op)


@dataclass(frozen=True)
class Theory:
    """An ordered, non-empty list of sentences (conjunction when read as one)."""

    sentences: tuple[Formula, ...]

    def __init__(self, sentences: Iterable[Formula]):
        sentences = tuple(sentences)
        if not sentences:
            raise ValueError("a theory needs at least one sentence")
        object.__setattr__(self, "sentences", sentences)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def free_symbols(f: Formula) -> tuple[Symbol, ...]:
    """The symbols syntactically occurring in `f`, ordered by index."""
    seen: dict[Symbol, None] = {}

    def walk(g: Formula):
        if isinstance(g, AtomRef):
            seen[g.symbol] = None
        elif isinstance(g, Not):
            walk(g.child)
        elif isinstance(g, (And, Or, Implies, Iff)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, LinCmp):
            for sym, _ in g.terms:
                seen[sym] = None

    walk(f)
    return tuple(sorted(seen, key=lambda s: s.index))


def enumerate_interpretations(symbols: Sequence[Symbol]) -> Iterator[Interpretation]:
    """Stream all total interpretations of finite-domain symbols.

    Order is lexicographic by symbol index with domain values in declared
    order, so the stream is deterministic and the same on every call.
    Raises NotEnumerableError if any symbol has an infinite domain.
    """
    symbols = tuple(symbols)
    for s in symbols:
        if not s.domain.is_finite:
            raise NotEnumerableError(
                f"symbol {s.name!r} has infinite domain {s.domain}: not enumerable"
            )
    spaces = [s.domain.enum_values() for s in symbols]
    for values in itertools.product(*spaces):
        yield Interpretation(symbols, values, _checked=False)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<op><->|->|<=|>=|[<>=!&|()+\-*])
  | (?P<number>\d+/\d+|\d+\.\d+|\d+)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_]*)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser for the formula grammar.

    Precedence, tightest first: `!`, `&`, `|`, `->` (right-associative),
    `<->`. Linear comparisons `term op term` sit at atom level and are
    normalised to `term op 0`.
    """

    def __init__(self, text: str, table: Mapping[str, Symbol]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.table = table

    def peek(self, ahead: int = 0) -> tuple[str, str, int]:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def expect(self, text: str):
        kind, got, pos = self.next()
        if got != text:
            raise ParseError(f"expected {text!r}, got {got or 'end of input'!r}", pos)

    def lookup(self, name: str, pos: int) -> Symbol:
        sym = self.table.get(name)
        if sym is None:
            raise ParseError(f"undeclared symbol {name!r}", pos)
        return sym

    def parse(self) -> Formula:
        f = self.iff()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected {text!r}", pos)
        return f

    def iff(self) -> Formula:
        f = self.implies()
        while self.peek()[1] == "<->":
            self.next()
            f = Iff(f, self.implies())
        return f

    def implies(self) -> Formula:
        f = self.or_()
        if self.peek()[1] == "->":
            self.next()
            return Implies(f, self.implies())
        return f

    def or_(self) -> Formula:
        f = self.and_()
        while self.peek()[1] == "|":
            self.next()
            f = Or(f, self.and_())
        return f

    def and_(self) -> Formula:
        f = self.unary()
        while self.peek()[1] == "&":
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.peek()[1] == "!":
            self.next()
            return Not(self.unary())
        return self.atom()

    _LINCMP_FOLLOW = frozenset({"+", "-", "<", "<=", "=", ">=", ">"})

    def atom(self) -> Formula:
        kind, text, pos = self.peek()
        if kind == "number" or text in ("+", "-"):
            return self.lincmp()
        if text == "(":
            self.next()
            f = self.iff()
            self.expect(")")
            return f
        if kind == "ident":
            if text == "true":
                self.next()
                return ConstTrue()
            if text == "false":
                self.next()
                return ConstFalse()
            if self.peek(1)[1] in self._LINCMP_FOLLOW:
                return self.lincmp()
            self.next()
            sym = self.lookup(text, pos)
            if sym.domain.is_numeric:
                raise ParseError(
                    f"symbol {text!r} has numeric domain {sym.domain} and cannot stand "
                    "alone as an atom; use a comparison", pos
                )
            return AtomRef(sym)
        raise ParseError(f"expected a formula, got {text or 'end of input'!r}", pos)

    def lincmp(self) -> Formula:
        lhs_coeffs, lhs_const = self.term()
        kind, op, pos = self.next()
        if op not in _CMP_OPS:
            raise ParseError(f"expected comparator, got {op or 'end of input'!r}", pos)
        rhs_coeffs, rhs_const = self.term()
        # normalise lhs - rhs  op  0
        for sym, c in rhs_coeffs.items():
            lhs_coeffs[sym] = lhs_coeffs.get(sym, Fraction(0)) - c
        return LinCmp.make(lhs_coeffs, lhs_const - rhs_const, op)

    def term(self) -> tuple[dict[Symbol, Fraction], Fraction]:
        coeffs: dict[Symbol, Fraction] = {}
        const = Fraction(0)
        sign = Fraction(1)
        if self.peek()[1] in ("+", "-"):
            sign = Fraction(-1) if self.next()[1] == "-" else Fraction(1)
        while True:
            kind, text, pos = self.next()
            if kind == "number":
                coef = sign * Fraction(text)
                if self.peek()[1] == "*":
                    self.next()
                    ikind, iname, ipos = self.next()
                    if ikind != "ident":
                        raise ParseError(f"expected symbol after '*', got {iname!r}", ipos)
                    sym = self.numeric_symbol(iname, ipos)
                    coeffs[sym] = coeffs.get(sym, Fraction(0)) + coef
                else:
                    const += coef
            elif kind == "ident":
                sym = self.numeric_symbol(text, pos)
                coeffs[sym] = coeffs.get(sym, Fraction(0)) + sign
            else:
                raise ParseError(f"expected a linear term, got {text or 'end of input'!r}", pos)
            if self.peek()[1] in ("+", "-"):
                sign = Fraction(-1) if self.next()[1] == "-" else Fraction(1)
            else:
                return coeffs, const

    def numeric_symbol(self, name: str, pos: int) -> Symbol:
        sym = self.lookup(name, pos)
        if not sym.domain.is_numeric:
            raise ParseError(
                f"linear comparison over symbol {name!r} with domain {sym.domain}", pos
            )
        return sym


def parse_formula(text: str, symbol_table: Sequence[Symbol]) -> Formula:
    """Parse formula text against a symbol table.

    The grammar is whitespace-insensitive, `#` starts a line comment, and
    all identifiers must be declared. Parse-then-print-then-parse is the
    identity on ASTs.
    """
    table = {s.name: s for s in symbol_table}
    return _Parser(text, table).parse()


# ---------------------------------------------------------------------------
# Printing

_PREC_IFF, _PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_UNARY, _PREC_ATOM = range(1, 7)


def format_formula(f: Formula) -> str:
    """Render a formula in concrete syntax with minimal parentheses."""
    text, _ = _fmt(f)
    return text


def _fmt(f: Formula) -> tuple[str, int]:
    if isinstance(f, ConstTrue):
        return "true", _PREC_ATOM
    if isinstance(f, ConstFalse):
        return "false", _PREC_ATOM
    if isinstance(f, AtomRef):
        return f.symbol.name, _PREC_ATOM
    if isinstance(f, Not):
        inner = _child(f.child, _PREC_UNARY)
        if isinstance(f.child, LinCmp):
            inner = f"({inner})"
        return f"!{inner}", _PREC_UNARY
    if isinstance(f, And):
        return f"{_child(f.left, _PREC_AND)} & {_child(f.right, _PREC_AND + 1)}", _PREC_AND
    if isinstance(f, Or):
        return f"{_child(f.left, _PREC_OR)} | {_child(f.right, _PREC_OR + 1)}", _PREC_OR
    if isinstance(f, Implies):
        # right-associative
        return (
            f"{_child(f.left, _PREC_IMPLIES + 1)} -> {_child(f.right, _PREC_IMPLIES)}",
            _PREC_IMPLIES,
        )
    if isinstance(f, Iff):
        return f"{_child(f.left, _PREC_IFF)} <-> {_child(f.right, _PREC_IFF + 1)}", _PREC_IFF
    if isinstance(f, LinCmp):
        return _fmt_lincmp(f), _PREC_ATOM
    raise TypeError(f"not a formula: {f!r}")


def _child(f: Formula, min_prec: int) -> str:
    text, prec = _fmt(f)
    return f"({text})" if prec < min_prec else text


def _fmt_lincmp(f: LinCmp) -> str:
    parts: list[str] = []
    for sym, coef in f.terms:
        mag = abs(coef)
        body = sym.name if mag == 1 else f"{mag}*{sym.name}"
        if not parts:
            parts.append(body if coef > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if coef > 0 else f"- {body}")
    if f.const != 0 or not parts:
        mag = abs(f.const)
        if not parts:
            parts.append(str(f.const))
        else:
            parts.append(f"+ {mag}" if f.const > 0 else f"- {mag}")
    return f"{' '.join(parts)} {f.op} 0"
