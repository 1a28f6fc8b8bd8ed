"""Semantic evaluation: Boolean and fuzzy t-norm semantics, plus logic functions.

Evaluation is a pure function of (semantics, formula, interpretation). The
scalar evaluator is the reference; `eval_batch` is its vectorised twin used
by the integration backends and must agree with it connective-for-connective
(both apply the same IEEE operations).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .logic import (
    And,
    AtomRef,
    Boolean,
    ConstFalse,
    ConstTrue,
    Formula,
    Iff,
    Implies,
    Interpretation,
    LinCmp,
    Not,
    Or,
    UnitInterval,
)

__all__ = [
    "EvalError",
    "TNormFamily",
    "LUKASIEWICZ",
    "GOEDEL",
    "PRODUCT",
    "TNORM_FAMILIES",
    "Semantics",
    "BooleanSem",
    "FuzzySem",
    "LogicFn",
    "Direct",
    "Threshold",
    "ValueSetIndicator",
    "evaluate",
    "apply_logic_fn",
    "eval_batch",
    "apply_logic_fn_batch",
]


class EvalError(ValueError):
    """Domain mismatch or missing assignment during evaluation."""


# ---------------------------------------------------------------------------
# T-norm families


class TNormFamily:
    """A family of fuzzy connectives on [0, 1].

    Restricted to {0, 1} inputs every family agrees with Boolean semantics.
    The biimplication is derived as and(implies(x, y), implies(y, x)).
    """

    name: str = ""

    @classmethod
    def iff(cls, x, y):
        return cls.and_(cls.implies(x, y), cls.implies(y, x))

    @classmethod
    def batch_iff(cls, x, y):
        return cls.batch_and(cls.batch_implies(x, y), cls.batch_implies(y, x))

    def __repr__(self):
        return f"<tnorm {self.name}>"


class _Lukasiewicz(TNormFamily):
    """Lukasiewicz connectives.

    and(x, y) = max(0, x + y - 1)
    or(x, y)  = min(1, x + y)
    not(x)    = 1 - x
    implies(x, y) = min(1, 1 - x + y)
    """

    name = "lukasiewicz"

    @staticmethod
    def and_(x, y):
        return max(0.0, x + y - 1.0)

    @staticmethod
    def or_(x, y):
        return min(1.0, x + y)

    @staticmethod
    def not_(x):
        return 1.0 - x

    @staticmethod
    def implies(x, y):
        return min(1.0, 1.0 - x + y)

    @staticmethod
    def batch_and(x, y):
        return np.maximum(0.0, x + y - 1.0)

    @staticmethod
    def batch_or(x, y):
        return np.minimum(1.0, x + y)

    @staticmethod
    def batch_not(x):
        return 1.0 - x

    @staticmethod
    def batch_implies(x, y):
        return np.minimum(1.0, 1.0 - x + y)


class _Goedel(TNormFamily):
    """Goedel (minimum) connectives with the residuum implication."""

    name = "goedel"

    @staticmethod
    def and_(x, y):
        return min(x, y)

    @staticmethod
    def or_(x, y):
        return max(x, y)

    @staticmethod
    def not_(x):
        return 1.0 if x == 0.0 else 0.0

    @staticmethod
    def implies(x, y):
        return 1.0 if x <= y else y

    @staticmethod
    def batch_and(x, y):
        return np.minimum(x, y)

    @staticmethod
    def batch_or(x, y):
        return np.maximum(x, y)

    @staticmethod
    def batch_not(x):
        return np.where(x == 0.0, 1.0, 0.0)

    @staticmethod
    def batch_implies(x, y):
        return np.where(x <= y, 1.0, y)


class _Product(TNormFamily):
    """Product connectives with the Goguen residuum implication."""

    name = "product"

    @staticmethod
    def and_(x, y):
        return x * y

    @staticmethod
    def or_(x, y):
        return x + y - x * y

    @staticmethod
    def not_(x):
        return 1.0 - x

    @staticmethod
    def implies(x, y):
        return 1.0 if x <= y else y / x

    @staticmethod
    def batch_and(x, y):
        return x * y

    @staticmethod
    def batch_or(x, y):
        return x + y - x * y

    @staticmethod
    def batch_not(x):
        return 1.0 - x

    @staticmethod
    def batch_implies(x, y):
        # guard the division; the x <= y branch wins wherever x could be 0
        return np.where(x <= y, 1.0, y / np.where(x <= y, 1.0, x))


LUKASIEWICZ = _Lukasiewicz()
GOEDEL = _Goedel()
PRODUCT = _Product()

TNORM_FAMILIES: dict[str, TNormFamily] = {
    t.name: t for t in (LUKASIEWICZ, GOEDEL, PRODUCT)
}


# ---------------------------------------------------------------------------
# Semantics


class Semantics:
    """Base class: maps (formula, interpretation) to a semantic value in V."""


@dataclass(frozen=True)
class BooleanSem(Semantics):
    """Two-valued semantics, V = {0, 1}; atoms must have bool domain."""

    name = "boolean"


@dataclass(frozen=True)
class FuzzySem(Semantics):
    """Fuzzy semantics, V = [0, 1], under a chosen t-norm family.

    Atoms may have unit-interval or bool domain (the Boolean values 0 and 1
    embed into [0, 1]).
    """

    tnorm: TNormFamily

    @property
    def name(self) -> str:
        return self.tnorm.name


# ---------------------------------------------------------------------------
# Logic functions


class LogicFn:
    """Base class: selects/filters semantic values before aggregation."""


@dataclass(frozen=True)
class Direct(LogicFn):
    """Pass the semantic value through unchanged."""

    name = "direct"


@dataclass(frozen=True)
class Threshold(LogicFn):
    """1 when the semantic value strictly exceeds tau, else 0."""

    tau: float

    def __post_init__(self):
        if not (0.0 <= self.tau < 1.0):
            raise ValueError(f"threshold must lie in [0, 1), got {self.tau}")

    @property
    def name(self) -> str:
        return f"threshold({self.tau})"


@dataclass(frozen=True)
class ValueSetIndicator(LogicFn):
    """Pass the semantic value through only when it lies in the selection set.

    The selection set is either a finite set of values or a closed interval.
    """

    values: frozenset | None = None
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        if (self.values is None) == (self.interval is None):
            raise ValueError("give exactly one of values= or interval=")
        if self.interval is not None and not (self.interval[0] <= self.interval[1]):
            raise ValueError(f"empty interval {self.interval}")

    def selects(self, v) -> bool:
        if self.values is not None:
            return v in self.values
        lo, hi = self.interval
        return lo <= v <= hi

    @property
    def name(self) -> str:
        if self.values is not None:
            return "values{%s}" % ",".join(str(v) for v in sorted(self.values))
        return f"values[{self.interval[0]},{self.interval[1]}]"


# ---------------------------------------------------------------------------
# Scalar evaluation


def _atom_value(sem: Semantics, ref: AtomRef, w: Interpretation):
    sym = ref.symbol
    try:
        v = w[sym]
    except KeyError:
        raise EvalError(f"interpretation has no value for symbol {sym.name!r}") from None
    if isinstance(sem, BooleanSem):
        if not isinstance(sym.domain, Boolean):
            raise EvalError(
                f"atom {sym.name!r} has domain {sym.domain}; Boolean semantics "
                "needs bool atoms"
            )
        return int(v)
    if not isinstance(sym.domain, (Boolean, UnitInterval)):
        raise EvalError(
            f"atom {sym.name!r} has domain {sym.domain}; fuzzy semantics needs "
            "unit-interval (or bool) atoms"
        )
    return float(v)


def _lincmp_holds(f: LinCmp, w: Interpretation) -> bool:
    total = f.const
    for sym, coef in f.terms:
        try:
            v = w[sym]
        except KeyError:
            raise EvalError(f"interpretation has no value for symbol {sym.name!r}") from None
        total += coef * Fraction(v)
    if f.op == "<":
        return total < 0
    if f.op == "<=":
        return total <= 0
    if f.op == "=":
        return total == 0
    if f.op == ">=":
        return total >= 0
    return total > 0


def evaluate(sem: Semantics, f: Formula, w: Interpretation):
    """Evaluate a formula inductively under the given semantics.

    Boolean semantics returns an int in {0, 1}; fuzzy semantics returns a
    float in [0, 1]. Linear comparisons are decided exactly over rationals
    and are crisp under both semantics.
    """
    if isinstance(sem, BooleanSem):
        return _eval_bool(f, w, sem)
    if isinstance(sem, FuzzySem):
        return _eval_fuzzy(f, w, sem)
    raise TypeError(f"unknown semantics {sem!r}")


def _eval_bool(f: Formula, w: Interpretation, sem: BooleanSem) -> int:
    if isinstance(f, AtomRef):
        return _atom_value(sem, f, w)
    if isinstance(f, ConstTrue):
        return 1
    if isinstance(f, ConstFalse):
        return 0
    if isinstance(f, Not):
        return 1 - _eval_bool(f.child, w, sem)
    if isinstance(f, And):
        return _eval_bool(f.left, w, sem) & _eval_bool(f.right, w, sem)
    if isinstance(f, Or):
        return _eval_bool(f.left, w, sem) | _eval_bool(f.right, w, sem)
    if isinstance(f, Implies):
        return (1 - _eval_bool(f.left, w, sem)) | _eval_bool(f.right, w, sem)
    if isinstance(f, Iff):
        return int(_eval_bool(f.left, w, sem) == _eval_bool(f.right, w, sem))
    if isinstance(f, LinCmp):
        return int(_lincmp_holds(f, w))
    raise TypeError(f"not a formula: {f!r}")


def _eval_fuzzy(f: Formula, w: Interpretation, sem: FuzzySem) -> float:
    t = sem.tnorm
    if isinstance(f, AtomRef):
        return _atom_value(sem, f, w)
    if isinstance(f, ConstTrue):
        return 1.0
    if isinstance(f, ConstFalse):
        return 0.0
    if isinstance(f, Not):
        return t.not_(_eval_fuzzy(f.child, w, sem))
    if isinstance(f, And):
        return t.and_(_eval_fuzzy(f.left, w, sem), _eval_fuzzy(f.right, w, sem))
    if isinstance(f, Or):
        return t.or_(_eval_fuzzy(f.left, w, sem), _eval_fuzzy(f.right, w, sem))
    if isinstance(f, Implies):
        return t.implies(_eval_fuzzy(f.left, w, sem), _eval_fuzzy(f.right, w, sem))
    if isinstance(f, Iff):
        return t.iff(_eval_fuzzy(f.left, w, sem), _eval_fuzzy(f.right, w, sem))
    if isinstance(f, LinCmp):
        return 1.0 if _lincmp_holds(f, w) else 0.0
    raise TypeError(f"not a formula: {f!r}")


def apply_logic_fn(l: LogicFn, sem: Semantics, f: Formula, w: Interpretation):
    """Evaluate, then filter through the logic function.

    Threshold uses a strict comparison, so a value exactly at tau maps to 0.
    """
    v = evaluate(sem, f, w)
    if isinstance(l, Direct):
        return v
    if isinstance(l, Threshold):
        return 1 if v > l.tau else 0
    if isinstance(l, ValueSetIndicator):
        return v if l.selects(v) else 0
    raise TypeError(f"unknown logic function {l!r}")


# ---------------------------------------------------------------------------
# Vectorised evaluation

def eval_batch(sem: Semantics, f: Formula, cols: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluate a formula over column vectors of symbol values.

    `cols` maps symbol names to equal-length arrays. Boolean semantics
    expects integer 0/1 columns; fuzzy semantics expects float columns.
    Linear comparisons are decided in float arithmetic here, so exactness
    at rational boundaries is only guaranteed by the scalar evaluator.
    """
    if isinstance(sem, BooleanSem):
        return _batch_bool(f, cols, sem)
    if isinstance(sem, FuzzySem):
        return _batch_fuzzy(f, cols, sem)
    raise TypeError(f"unknown semantics {sem!r}")


def _batch_atom(sem: Semantics, f: AtomRef, cols: Mapping[str, np.ndarray]) -> np.ndarray:
    sym = f.symbol
    if sym.name not in cols:
        raise EvalError(f"no column for symbol {sym.name!r}")
    if isinstance(sem, BooleanSem) and not isinstance(sym.domain, Boolean):
        raise EvalError(f"atom {sym.name!r} has domain {sym.domain} under Boolean semantics")
    if isinstance(sem, FuzzySem) and not isinstance(sym.domain, (Boolean, UnitInterval)):
        raise EvalError(f"atom {sym.name!r} has domain {sym.domain} under fuzzy semantics")
    return cols[sym.name]


def _batch_lincmp(f: LinCmp, cols: Mapping[str, np.ndarray]) -> np.ndarray:
    total = None
    for sym, coef in f.terms:
        part = float(coef) * np.asarray(cols[sym.name], dtype=np.float64)
        total = part if total is None else total + part
    if total is None:
        n = len(next(iter(cols.values()))) if cols else 1
        total = np.zeros(n)
    total = total + float(f.const)
    if f.op == "<":
        return total < 0
    if f.op == "<=":
        return total <= 0
    if f.op == "=":
        return total == 0
    if f.op == ">=":
        return total >= 0
    return total > 0


def _batch_bool(f: Formula, cols: Mapping[str, np.ndarray], sem: BooleanSem) -> np.ndarray:
    if isinstance(f, AtomRef):
        return np.asarray(_batch_atom(sem, f, cols), dtype=np.int8)
    if isinstance(f, (ConstTrue, ConstFalse)):
        n = len(next(iter(cols.values()))) if cols else 1
        return np.full(n, 1 if isinstance(f, ConstTrue) else 0, dtype=np.int8)
    if isinstance(f, Not):
        return 1 - _batch_bool(f.child, cols, sem)
    if isinstance(f, And):
        return np.minimum(_batch_bool(f.left, cols, sem), _batch_bool(f.right, cols, sem))
    if isinstance(f, Or):
        return np.maximum(_batch_bool(f.left, cols, sem), _batch_bool(f.right, cols, sem))
    if isinstance(f, Implies):
        return np.maximum(1 - _batch_bool(f.left, cols, sem), _batch_bool(f.right, cols, sem))
    if isinstance(f, Iff):
        return (_batch_bool(f.left, cols, sem) == _batch_bool(f.right, cols, sem)).astype(np.int8)
    if isinstance(f, LinCmp):
        return _batch_lincmp(f, cols).astype(np.int8)
    raise TypeError(f"not a formula: {f!r}")


def _batch_fuzzy(f: Formula, cols: Mapping[str, np.ndarray], sem: FuzzySem) -> np.ndarray:
    t = sem.tnorm
    if isinstance(f, AtomRef):
        return np.asarray(_batch_atom(sem, f, cols), dtype=np.float64)
    if isinstance(f, (ConstTrue, ConstFalse)):
        n = len(next(iter(cols.values()))) if cols else 1
        return np.full(n, 1.0 if isinstance(f, ConstTrue) else 0.0)
    if isinstance(f, Not):
        return t.batch_not(_batch_fuzzy(f.child, cols, sem))
    if isinstance(f, And):
        return t.batch_and(_batch_fuzzy(f.left, cols, sem), _batch_fuzzy(f.right, cols, sem))
    if isinstance(f, Or):
        return t.batch_or(_batch_fuzzy(f.left, cols, sem), _batch_fuzzy(f.right, cols, sem))
    if isinstance(f, Implies):
        return t.batch_implies(_batch_fuzzy(f.left, cols, sem), _batch_fuzzy(f.right, cols, sem))
    if isinstance(f, Iff):
        return t.batch_iff(_batch_fuzzy(f.left, cols, sem), _batch_fuzzy(f.right, cols, sem))
    if isinstance(f, LinCmp):
        return _batch_lincmp(f, cols).astype(np.float64)
    raise TypeError(f"not a formula: {f!r}")


def apply_logic_fn_batch(l: LogicFn, values: np.ndarray) -> np.ndarray:
    """Vectorised logic-function filter over pre-computed semantic values."""
    values = np.asarray(values, dtype=np.float64)
    if isinstance(l, Direct):
        return values
    if isinstance(l, Threshold):
        return (values > l.tau).astype(np.float64)
    if isinstance(l, ValueSetIndicator):
        if l.values is not None:
            mask = np.zeros(values.shape, dtype=bool)
            for v in l.values:
                mask |= values == v
        else:
            lo, hi = l.interval
            mask = (values >= lo) & (values <= hi)
        return np.where(mask, values, 0.0)
    raise TypeError(f"unknown logic function {l!r}")
