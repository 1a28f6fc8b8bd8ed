"""The neurosymbolic functional: integrate logic-function times belief.

`infer` computes F(phi) = integral of l(phi, w) * b(phi, w) dm(w) over a
subspace of interpretations. Counting measures are summed exactly, Borel
measures go through quadrature or Monte Carlo, and a Dirac point belief
collapses the integral to evaluation at the point, whatever the measure.
A compiled-circuit backend provides fast exact weighted model counting for
Boolean formulas under independent Bernoulli beliefs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .belief import Belief, DiracPoint, FuzzyMembership, IndependentBernoulli, LogLinear
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
    NotEnumerableError,
    Or,
    Symbol,
    enumerate_interpretations,
    free_symbols,
    parse_formula,
)
from .measure import (
    BorelMonteCarlo,
    BorelQuadrature,
    Counting,
    MeasureSpec,
    integrate,
)
from .semantics import (
    BooleanSem,
    Direct,
    LogicFn,
    Semantics,
    Threshold,
    apply_logic_fn,
    apply_logic_fn_batch,
    eval_batch,
    evaluate,
)

__all__ = [
    "Model",
    "FunctionalResult",
    "ConstLeaf",
    "DecisionNode",
    "ConjNode",
    "CompiledCircuit",
    "infer",
    "enumerate_models",
    "compile_formula",
    "wmc_eval",
    "map_inference",
    "lebesgue_simple",
]


@dataclass(frozen=True)
class Model:
    """A neurosymbolic model: ordered symbols, a semantics, and a belief."""

    symbols: tuple[Symbol, ...]
    semantics: Semantics
    belief: Belief

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        names = {s.name for s in self.symbols}
        b = self.belief
        if isinstance(b, IndependentBernoulli):
            for s in self.symbols:
                if isinstance(s.domain, Boolean):
                    b.prob_for(s)
            extra = set(b.probs) - names
            if extra:
                raise ValueError(f"belief mentions unknown symbols {sorted(extra)}")
        elif isinstance(b, LogLinear):
            if tuple(b.symbols) != self.symbols:
                raise ValueError("log-linear belief must be defined over the model's symbols")
        elif isinstance(b, DiracPoint):
            if tuple(b.point.symbols) != self.symbols:
                raise ValueError("Dirac point must assign exactly the model's symbols")
        elif isinstance(b, FuzzyMembership):
            for name in b.curves:
                if name not in names:
                    raise ValueError(f"membership curve for unknown symbol {name!r}")

    def parse(self, text: str) -> Formula:
        return parse_formula(text, self.symbols)

    def symbol(self, name: str) -> Symbol:
        for s in self.symbols:
            if s.name == name:
                return s
        raise KeyError(f"no symbol named {name!r}")


@dataclass(frozen=True)
class FunctionalResult:
    """Outcome of one inference run.

    `std_error` is present exactly for Monte Carlo backends;
    `models_visited` counts enumerated interpretations or circuit nodes.
    """

    value: float
    std_error: float | None
    backend: str
    models_visited: int | None = None


# ---------------------------------------------------------------------------
# Conditioning helpers


def _check_condition(model: Model, condition: Mapping[str, object] | None) -> dict[str, object]:
    cond = dict(condition or {})
    for name, v in cond.items():
        sym = model.symbol(name)
        if not sym.domain.contains(v):
            raise ValueError(f"conditioned value {v!r} not in domain {sym.domain} of {name!r}")
    return cond


def _integration_symbols(
    model: Model,
    f: Formula,
    cond: Mapping[str, object],
    subspace: Sequence[Symbol] | None,
) -> tuple[Symbol, ...]:
    """The symbols actually integrated over: the requested subspace, or the
    free symbols of the query plus the belief's support, minus anything
    fixed by the condition."""
    if subspace is not None:
        chosen = {s.name for s in subspace}
    else:
        chosen = {s.name for s in free_symbols(f)}
        chosen.update(model.belief.support_names())
    chosen -= set(cond)
    missing = [s.name for s in free_symbols(f) if s.name not in chosen and s.name not in cond]
    if missing:
        raise ValueError(f"free symbols {missing} are neither integrated nor conditioned")
    if isinstance(model.belief, LogLinear):
        needed = {s.name for phi in model.belief.theory for s in free_symbols(phi)}
        gap = sorted(needed - chosen - set(cond))
        if gap:
            raise ValueError(f"belief theory symbols {gap} are neither integrated nor conditioned")
    return tuple(s for s in model.symbols if s.name in chosen)


def _merger(model: Model, integrated: tuple[Symbol, ...], cond: Mapping[str, object]):
    """Build a fast (partial values) -> total Interpretation merge function."""
    all_syms = tuple(
        s for s in model.symbols if s.name in cond or s in integrated
    )
    slot: list[tuple[bool, object]] = []
    int_pos = {s.name: i for i, s in enumerate(integrated)}
    for s in all_syms:
        if s.name in int_pos:
            slot.append((True, int_pos[s.name]))
        else:
            slot.append((False, cond[s.name]))

    def merge(partial: Interpretation) -> Interpretation:
        vals = partial.values
        merged = tuple(vals[src] if is_var else src for is_var, src in slot)
        return Interpretation(all_syms, merged, _checked=False)

    return merge


def _has_lincmp(f: Formula) -> bool:
    if isinstance(f, LinCmp):
        return True
    if isinstance(f, Not):
        return _has_lincmp(f.child)
    if isinstance(f, (And, Or, Implies, Iff)):
        return _has_lincmp(f.left) or _has_lincmp(f.right)
    return False


def _batchable_exactly(model: Model, f: Formula) -> bool:
    """Whether the vectorised integrand is exact for counting enumeration.

    Linear comparisons are decided over floats in batch mode, so any LinCmp
    (in the query or in a log-linear theory) forces the scalar exact path.
    """
    if isinstance(model.belief, DiracPoint):
        return False
    if _has_lincmp(f):
        return False
    if isinstance(model.belief, LogLinear):
        if any(_has_lincmp(phi) for phi in model.belief.theory):
            return False
    return True


def _scalar_integrand(model, logic_fn, f, merge) -> Callable[[Interpretation], float]:
    sem, b = model.semantics, model.belief

    def run(partial: Interpretation) -> float:
        w = merge(partial)
        lv = apply_logic_fn(logic_fn, sem, f, w)
        if lv == 0:
            return 0.0
        return float(lv) * b.weight(f, w)

    return run


def _batch_integrand(model, logic_fn, f, cond):
    sem, b = model.semantics, model.belief

    def run(cols: Mapping[str, np.ndarray]) -> np.ndarray:
        n = len(next(iter(cols.values()))) if cols else 1
        full = dict(cols)
        for name, v in cond.items():
            sym = model.symbol(name)
            if isinstance(sym.domain, Boolean):
                full[name] = np.full(n, int(v), dtype=np.int8)
            else:
                full[name] = np.full(n, float(v))
        lv = apply_logic_fn_batch(logic_fn, eval_batch(sem, f, full))
        return lv * b.weight_batch(f, full)

    return run


# ---------------------------------------------------------------------------
# Inference


def infer(
    model: Model,
    logic_fn: LogicFn,
    f: Formula,
    measure: MeasureSpec,
    condition: Mapping[str, object] | None = None,
    subspace: Sequence[Symbol] | None = None,
    method: str = "auto",
) -> FunctionalResult:
    """Compute the neurosymbolic functional for one query formula.

    `condition` fixes symbols to given values; the integral then runs over
    the remaining subspace only (no renormalisation is applied). A Dirac
    point belief short-circuits every measure: the result is the logic
    function evaluated at the point (0 if the point contradicts the
    condition).

    `method` may force a backend: "enum" (exhaustive counting sum) or
    "circuit" (compiled weighted model counting, Boolean semantics with an
    independent Bernoulli belief only). The default picks enumeration for
    counting measures and the measure's own scheme otherwise.
    """
    cond = _check_condition(model, condition)

    if isinstance(model.belief, DiracPoint):
        point = model.belief.point
        for name, v in cond.items():
            if point[name] != v:
                return FunctionalResult(0.0, None, "dirac", None)
        return FunctionalResult(
            float(apply_logic_fn(logic_fn, model.semantics, f, point)), None, "dirac", None
        )

    if method == "circuit":
        return _infer_circuit(model, logic_fn, f, cond)
    if method not in ("auto", "enum"):
        raise ValueError(f"unknown method {method!r}")

    integrated = _integration_symbols(model, f, cond, subspace)
    if method == "enum" and not all(s.domain.is_finite for s in integrated):
        raise NotEnumerableError("enumeration requires finite domains")

    merge = _merger(model, integrated, cond)
    scalar = _scalar_integrand(model, logic_fn, f, merge)
    batch = (
        _batch_integrand(model, logic_fn, f, cond)
        if _batchable_exactly(model, f)
        else None
    )
    est = integrate(integrated, measure if method == "auto" else Counting(), scalar, batch)

    if isinstance(measure, Counting) or method == "enum":
        backend = "enum"
    elif isinstance(measure, BorelQuadrature):
        backend = "quadrature"
    elif isinstance(measure, BorelMonteCarlo):
        backend = "montecarlo"
    else:
        backend = "mixed"
    visited = est.points if backend == "enum" else None
    return FunctionalResult(est.value, est.std_error, backend, visited)


def _infer_circuit(model: Model, logic_fn: LogicFn, f: Formula, cond) -> FunctionalResult:
    if not isinstance(model.semantics, BooleanSem):
        raise ValueError("circuit backend requires Boolean semantics")
    if not isinstance(model.belief, IndependentBernoulli):
        raise ValueError("circuit backend requires an independent Bernoulli belief")
    if not isinstance(logic_fn, (Direct, Threshold)):
        raise ValueError("circuit backend requires a direct or threshold logic function")
    g = f
    scale = 1.0  # belief factors of the symbols fixed by the condition
    for name, v in cond.items():
        sym = model.symbol(name)
        g = _restrict(g, sym, int(v))
        if isinstance(sym.domain, Boolean):
            p = model.belief.prob_for(sym)
            scale *= p if v else 1.0 - p
    circuit = compile_formula(g)
    value = scale * wmc_eval(circuit, model.belief)
    return FunctionalResult(value, None, "circuit", circuit.node_count)


def enumerate_models(f: Formula, symbols: Sequence[Symbol]) -> tuple[Interpretation, ...]:
    """All interpretations satisfying `f` under Boolean semantics,
    in enumeration order."""
    sem = BooleanSem()
    out = []
    for w in enumerate_interpretations(symbols):
        if evaluate(sem, f, w) == 1:
            out.append(w)
    return tuple(out)


# ---------------------------------------------------------------------------
# Compiled circuits


@dataclass(frozen=True)
class ConstLeaf:
    value: int


@dataclass(frozen=True)
class DecisionNode:
    """Shannon split: `low` assumes symbol=0, `high` assumes symbol=1."""

    symbol: Symbol
    low: "ConstLeaf | DecisionNode | ConjNode"
    high: "ConstLeaf | DecisionNode | ConjNode"


@dataclass(frozen=True)
class ConjNode:
    """Conjunction of sub-circuits over pairwise disjoint symbol sets."""

    parts: tuple


class CompiledCircuit:
    """A deterministic, decomposable circuit computing a Boolean formula.

    Weighted model counts evaluated on the circuit match brute-force
    enumeration for every independent Bernoulli weighting.
    """

    def __init__(self, root, node_count: int):
        self.root = root
        self.node_count = node_count

    def validate(self):
        """Check determinism and decomposability structurally (for tests)."""

        def syms(node) -> frozenset:
            if isinstance(node, ConstLeaf):
                return frozenset()
            if isinstance(node, DecisionNode):
                below = syms(node.low) | syms(node.high)
                if node.symbol in below:
                    raise AssertionError(f"symbol {node.symbol.name} reused below its decision")
                return below | {node.symbol}
            seen: frozenset = frozenset()
            for p in node.parts:
                ps = syms(p)
                if seen & ps:
                    raise AssertionError("conjunction parts share symbols")
                seen |= ps
            return seen

        syms(self.root)
        return True


def _s_not(x: Formula) -> Formula:
    if isinstance(x, ConstTrue):
        return ConstFalse()
    if isinstance(x, ConstFalse):
        return ConstTrue()
    return Not(x)


def _s_and(a: Formula, b: Formula) -> Formula:
    if isinstance(a, ConstFalse) or isinstance(b, ConstFalse):
        return ConstFalse()
    if isinstance(a, ConstTrue):
        return b
    if isinstance(b, ConstTrue):
        return a
    return And(a, b)


def _s_or(a: Formula, b: Formula) -> Formula:
    if isinstance(a, ConstTrue) or isinstance(b, ConstTrue):
        return ConstTrue()
    if isinstance(a, ConstFalse):
        return b
    if isinstance(b, ConstFalse):
        return a
    return Or(a, b)


_NO_SYMBOL = object()


def _fold(f: Formula) -> Formula:
    """Constant-fold a formula without substituting anything."""
    return _restrict(f, _NO_SYMBOL, 0)


def _restrict(f: Formula, sym, value: int) -> Formula:
    """Substitute a Boolean value for a symbol and constant-fold."""
    if isinstance(f, AtomRef):
        if f.symbol == sym:
            return ConstTrue() if value else ConstFalse()
        return f
    if isinstance(f, (ConstTrue, ConstFalse)):
        return f
    if isinstance(f, Not):
        return _s_not(_restrict(f.child, sym, value))
    if isinstance(f, And):
        return _s_and(_restrict(f.left, sym, value), _restrict(f.right, sym, value))
    if isinstance(f, Or):
        return _s_or(_restrict(f.left, sym, value), _restrict(f.right, sym, value))
    if isinstance(f, Implies):
        return _s_or(_s_not(_restrict(f.left, sym, value)), _restrict(f.right, sym, value))
    if isinstance(f, Iff):
        a = _restrict(f.left, sym, value)
        b = _restrict(f.right, sym, value)
        if isinstance(a, ConstTrue):
            return b
        if isinstance(a, ConstFalse):
            return _s_not(b)
        if isinstance(b, ConstTrue):
            return a
        if isinstance(b, ConstFalse):
            return _s_not(a)
        return Iff(a, b)
    raise ValueError("circuit compilation requires bool-domain symbols only")


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _components(parts: list[Formula]) -> list[list[Formula]]:
    """Group conjuncts into connected components by shared symbols."""
    groups: list[tuple[set, list[Formula]]] = []
    for p in parts:
        ps = set(free_symbols(p))
        hit = [g for g in groups if g[0] & ps]
        merged = (set(ps), [p])
        for g in hit:
            merged[0].update(g[0])
            merged[1].extend(g[1])
            groups.remove(g)
        # keep original order stable: re-sort members by first appearance
        groups.append(merged)
    ordered = []
    for _, members in groups:
        members.sort(key=parts.index)
        ordered.append(members)
    ordered.sort(key=lambda ms: parts.index(ms[0]))
    return ordered


def compile_formula(f: Formula, symbols: Sequence[Symbol] | None = None) -> CompiledCircuit:
    """Compile a Boolean-domain formula into a deterministic, decomposable
    circuit by Shannon decomposition.

    Decisions always split on the lowest-index free symbol; conjunctions of
    symbol-disjoint parts become conjunction nodes. Sub-formulas are
    interned, keyed by their restricted (constant-folded) form, so the
    circuit is a DAG with reproducible node counts. `symbols`, when given,
    must cover the formula's free symbols (it only serves as a scope check;
    ordering comes from the symbol indices).
    """
    free = free_symbols(f)
    if symbols is not None:
        scope = set(symbols)
        outside = [s.name for s in free if s not in scope]
        if outside:
            raise ValueError(f"formula mentions symbols outside the given set: {outside}")
    for s in free:
        if not isinstance(s.domain, Boolean):
            raise ValueError(
                f"circuit compilation requires bool-domain symbols, {s.name!r} has {s.domain}"
            )
    if _has_lincmp(f):
        raise ValueError("circuit compilation does not support linear comparisons")
    cache: dict[Formula, object] = {}
    count = 0

    def intern(key: Formula, node):
        nonlocal count
        cache[key] = node
        count += 1
        return node

    def go(g: Formula):
        hit = cache.get(g)
        if hit is not None:
            return hit
        if isinstance(g, ConstTrue):
            return intern(g, ConstLeaf(1))
        if isinstance(g, ConstFalse):
            return intern(g, ConstLeaf(0))
        parts = _conjuncts(g)
        if len(parts) > 1:
            comps = _components(parts)
            if len(comps) > 1:
                node = ConjNode(tuple(go(_conj(ms)) for ms in comps))
                return intern(g, node)
        sym = free_symbols(g)[0]
        low = go(_restrict(g, sym, 0))
        high = go(_restrict(g, sym, 1))
        if low is high:
            cache[g] = low
            return low
        return intern(g, DecisionNode(sym, low, high))

    root = go(_fold(f))
    return CompiledCircuit(root, count)


def _conj(parts: list[Formula]) -> Formula:
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def circuit_forward(circuit: CompiledCircuit, b: IndependentBernoulli) -> dict[int, float]:
    """Weighted value of every node, keyed by node id. Shared with gradients
    so value and gradient passes agree bit for bit."""
    memo: dict[int, float] = {}

    def val(node) -> float:
        key = id(node)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(node, ConstLeaf):
            v = float(node.value)
        elif isinstance(node, DecisionNode):
            p = b.prob_for(node.symbol)
            v = (1.0 - p) * val(node.low) + p * val(node.high)
        else:
            v = 1.0
            for part in node.parts:
                v *= val(part)
        memo[key] = v
        return v

    val(circuit.root)
    return memo


def wmc_eval(circuit: CompiledCircuit, b: IndependentBernoulli) -> float:
    """Exact weighted model count of the compiled formula under `b`."""
    return circuit_forward(circuit, b)[id(circuit.root)]


# ---------------------------------------------------------------------------
# MAP inference and the simple-function oracle


def map_inference(
    model: Model,
    logic_fn: LogicFn,
    f: Formula,
    condition: Mapping[str, object] | None = None,
) -> tuple[Interpretation, float]:
    """The interpretation maximising the integrand l * b, with its score.

    Ties go to the lexicographically smallest interpretation in enumeration
    order. A Dirac belief returns its point directly; otherwise the space
    must be finite.
    """
    cond = _check_condition(model, condition)
    if isinstance(model.belief, DiracPoint):
        point = model.belief.point
        for name, v in cond.items():
            if point[name] != v:
                return point, 0.0
        return point, float(apply_logic_fn(logic_fn, model.semantics, f, point))

    integrated = _integration_symbols(model, f, cond, None)
    for s in integrated:
        if not s.domain.is_finite:
            raise NotEnumerableError(
                f"MAP inference needs a finite space; {s.name!r} has domain {s.domain}"
            )
    merge = _merger(model, integrated, cond)
    best_w: Interpretation | None = None
    best_score = -1.0
    for partial in enumerate_interpretations(integrated):
        w = merge(partial)
        lv = apply_logic_fn(logic_fn, model.semantics, f, w)
        score = float(lv) * model.belief.weight(f, w) if lv != 0 else 0.0
        if score > best_score:
            best_w, best_score = w, score
    return best_w, best_score


def lebesgue_simple(
    terms: Sequence[tuple[float, Callable[[object], bool]]],
    carrier: Iterable,
    measure: MeasureSpec = Counting(),
) -> float:
    """Integrate a simple function sum_i a_i * 1[S_i] under a counting measure.

    Each set S_i is given as a predicate over the finite carrier; the sets
    must be pairwise disjoint on the carrier. Serves as the independent
    oracle for counting-measure inference: every finite integrand is simple.
    """
    if not isinstance(measure, Counting):
        raise ValueError("the simple-function integral is defined here for counting measures")
    counts = [0] * len(terms)
    for x in carrier:
        hits = [i for i, (_, pred) in enumerate(terms) if pred(x)]
        if len(hits) > 1:
            raise ValueError(f"sets {hits} overlap at carrier point {x!r}")
        if hits:
            counts[hits[0]] += 1
    return math.fsum(a * c for (a, _), c in zip(terms, counts))
