"""Analytic parameter gradients of the neurosymbolic functional.

Three differentiable belief families are covered: independent Bernoulli
probabilities (reverse pass over a compiled circuit), log-linear weights
(the expectation-difference identity for d log F / d lambda), and Dirac
point coordinates (structural differentiation of the fuzzy connective
tree, with a deterministic left-branch rule at kinks). Learning loops stay
outside; this module only supplies value and gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .belief import IndependentBernoulli, LogLinear
from .integrator import CompiledCircuit, ConjNode, ConstLeaf, DecisionNode, circuit_forward
from .logic import (
    And,
    AtomRef,
    ConstFalse,
    ConstTrue,
    Formula,
    Iff,
    Implies,
    Interpretation,
    LinCmp,
    Not,
    Or,
    enumerate_interpretations,
)
from .measure import (
    BorelMonteCarlo,
    BorelQuadrature,
    Counting,
    KahanSum,
    integrate,
    mc_columns,
)
from .semantics import (
    Direct,
    LogicFn,
    TNormFamily,
    apply_logic_fn,
    apply_logic_fn_batch,
    eval_batch,
    evaluate,
)

__all__ = [
    "GradientResult",
    "GradientUndefinedError",
    "grad_wmc",
    "grad_loglinear",
    "grad_dirac",
]


class GradientUndefinedError(ArithmeticError):
    """Raised when F = 0 makes a log-gradient undefined."""


@dataclass(frozen=True)
class GradientResult:
    """A functional value with its gradient, aligned to named parameters.

    `flags` records non-differentiable sites encountered at the evaluation
    point (min/max ties, discontinuities); when a flag is present the
    corresponding entries are one-sided/left-branch sub-gradients.
    """

    value: float
    grad: tuple[float, ...]
    params: tuple[str, ...]
    flags: tuple[str, ...] = ()
    grad_std_error: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.grad) != len(self.params):
            raise ValueError("gradient length must match parameter count")


# ---------------------------------------------------------------------------
# Bernoulli probabilities through the circuit


def grad_wmc(circuit: CompiledCircuit, b: IndependentBernoulli) -> GradientResult:
    """dF/dp for every atom probability, by one reverse pass over the circuit.

    F is multilinear in the probability vector, so these derivatives are
    exact (central differences reproduce them to rounding error).
    """
    values = circuit_forward(circuit, b)

    order: list = []
    seen: set[int] = set()

    def topo(node):
        if id(node) in seen:
            return
        seen.add(id(node))
        if isinstance(node, DecisionNode):
            topo(node.low)
            topo(node.high)
        elif isinstance(node, ConjNode):
            for p in node.parts:
                topo(p)
        order.append(node)

    topo(circuit.root)
    order.reverse()  # parents before children

    adjoint: dict[int, float] = {id(circuit.root): 1.0}
    grad_by_name: dict[str, float] = {name: 0.0 for name in b.probs}
    for node in order:
        a = adjoint.get(id(node), 0.0)
        if a == 0.0 or isinstance(node, ConstLeaf):
            continue
        if isinstance(node, DecisionNode):
            p = b.prob_for(node.symbol)
            lo, hi = values[id(node.low)], values[id(node.high)]
            grad_by_name[node.symbol.name] += a * (hi - lo)
            adjoint[id(node.low)] = adjoint.get(id(node.low), 0.0) + a * (1.0 - p)
            adjoint[id(node.high)] = adjoint.get(id(node.high), 0.0) + a * p
        else:
            vals = [values[id(p)] for p in node.parts]
            for i, part in enumerate(node.parts):
                rest = 1.0
                for j, v in enumerate(vals):
                    if j != i:
                        rest *= v
                adjoint[id(part)] = adjoint.get(id(part), 0.0) + a * rest

    params = tuple(b.probs)
    return GradientResult(
        value=values[id(circuit.root)],
        grad=tuple(grad_by_name[name] for name in params),
        params=params,
    )


# ---------------------------------------------------------------------------
# Log-linear weights


def grad_loglinear(
    b: LogLinear, f: Formula, logic_fn: LogicFn = Direct()
) -> GradientResult:
    """d log F / d lambda_i = E[phi_i | selected] - E[phi_i].

    F is the normalised functional of `f` under the belief's own base
    measure; the same backend computes value and gradient. With a Monte
    Carlo base the gradient reuses the value's sample set and carries
    delta-method standard errors. Raises GradientUndefinedError when F = 0.
    """
    unnorm = replace(b, z=None, z_std_error=None)
    params = tuple(f"w{i+1}" for i in range(len(b.weights)))
    if isinstance(b.base_measure, BorelMonteCarlo):
        return _grad_loglinear_mc(unnorm, f, logic_fn, params)
    if isinstance(b.base_measure, (Counting, BorelQuadrature)):
        return _grad_loglinear_sums(unnorm, f, logic_fn, params)
    raise ValueError(f"unsupported base measure {b.base_measure!r} for log-linear gradients")


def _grad_loglinear_sums(b: LogLinear, f: Formula, logic_fn, params) -> GradientResult:
    phis = tuple(b.theory)

    if isinstance(b.base_measure, Counting):
        sel = KTotals(len(phis))
        tot = KTotals(len(phis))
        for w in enumerate_interpretations(b.symbols):
            e = b.weight(None, w)
            feats = [_feature(b, phi, w) for phi in phis]
            lv = float(apply_logic_fn(logic_fn, b.semantics, f, w))
            tot.add(e, feats)
            if lv != 0.0:
                sel.add(lv * e, feats)
        A, Z = sel.mass, tot.mass
        if not A > 0.0:
            raise GradientUndefinedError("selected mass is zero; log-gradient undefined")
        grad = tuple(sel.feature(i) / A - tot.feature(i) / Z for i in range(len(phis)))
        return GradientResult(A / Z, grad, params)

    # quadrature base: 2 + 2N grid sums through the shared integrator
    def make_batch(weight_by, phi=None):
        def run(cols):
            e = b.weight_batch(None, cols)
            out = e if weight_by is None else weight_by(cols) * e
            if phi is not None:
                out = out * eval_batch(b.semantics, phi, cols)
            return out

        return run

    def selected(cols):
        return apply_logic_fn_batch(logic_fn, eval_batch(b.semantics, f, cols))

    spec = b.base_measure
    A = integrate(b.symbols, spec, _no_scalar, make_batch(selected)).value
    Z = integrate(b.symbols, spec, _no_scalar, make_batch(None)).value
    if not A > 0.0:
        raise GradientUndefinedError("selected mass is zero; log-gradient undefined")
    grad = []
    for phi in phis:
        num = integrate(b.symbols, spec, _no_scalar, make_batch(selected, phi)).value
        den = integrate(b.symbols, spec, _no_scalar, make_batch(None, phi)).value
        grad.append(num / A - den / Z)
    return GradientResult(A / Z, tuple(grad), params)


def _grad_loglinear_mc(b: LogLinear, f: Formula, logic_fn, params) -> GradientResult:
    cols = mc_columns(b.symbols, b.base_measure)
    e = b.weight_batch(None, cols)
    lv = apply_logic_fn_batch(logic_fn, eval_batch(b.semantics, f, cols))
    u = lv * e
    mean_u, mean_e = float(np.mean(u)), float(np.mean(e))
    if not mean_u > 0.0:
        raise GradientUndefinedError("selected mass is zero; log-gradient undefined")
    n = len(e)
    grad, ses = [], []
    for phi in b.theory:
        feats = np.asarray(eval_batch(b.semantics, phi, cols), dtype=np.float64)
        r1 = float(np.mean(u * feats)) / mean_u
        r2 = float(np.mean(e * feats)) / mean_e
        grad.append(r1 - r2)
        influence = (u * feats - r1 * u) / mean_u - (e * feats - r2 * e) / mean_e
        ses.append(float(np.std(influence, ddof=1) / math.sqrt(n)) if n > 1 else float("nan"))
    return GradientResult(mean_u / mean_e, tuple(grad), params, grad_std_error=tuple(ses))


def _feature(b: LogLinear, phi: Formula, w: Interpretation) -> float:
    return float(evaluate(b.semantics, phi, w))


def _no_scalar(w):  # batch-only integrands
    raise AssertionError("scalar path should not be taken")


class KTotals:
    """Compensated totals for a mass and per-feature weighted sums."""

    def __init__(self, k: int):
        self._mass = KahanSum()
        self._feat = [KahanSum() for _ in range(k)]

    def add(self, weight: float, feats):
        self._mass.add(weight)
        for acc, v in zip(self._feat, feats):
            acc.add(weight * v)

    @property
    def mass(self) -> float:
        return self._mass.total

    def feature(self, i: int) -> float:
        return self._feat[i].total


# ---------------------------------------------------------------------------
# Dirac point coordinates


def grad_dirac(f: Formula, tnorm: TNormFamily, point: Interpretation) -> GradientResult:
    """Sub-gradient of the fuzzy value at the point, by structural
    differentiation of the connective tree.

    At min/max ties the derivative of the connective's first (left)
    argument in its defining expression is taken and the site is flagged;
    flagged results are one-sided, everything else matches central finite
    differences. The Goedel negation is discontinuous at 0 and is flagged
    there as well.
    """
    syms = point.symbols
    index = {s.name: i for i, s in enumerate(syms)}
    flags: list[str] = []

    def zero():
        return np.zeros(len(syms))

    def walk(g: Formula) -> tuple[float, np.ndarray]:
        if isinstance(g, AtomRef):
            grad = zero()
            grad[index[g.symbol.name]] = 1.0
            return float(point[g.symbol]), grad
        if isinstance(g, ConstTrue):
            return 1.0, zero()
        if isinstance(g, ConstFalse):
            return 0.0, zero()
        if isinstance(g, Not):
            return d_not(*walk(g.child))
        if isinstance(g, And):
            return d_and(walk(g.left), walk(g.right))
        if isinstance(g, Or):
            return d_or(walk(g.left), walk(g.right))
        if isinstance(g, Implies):
            return d_implies(walk(g.left), walk(g.right))
        if isinstance(g, Iff):
            x, y = walk(g.left), walk(g.right)
            return d_and(d_implies(x, y), d_implies(y, x))
        if isinstance(g, LinCmp):
            total = g.const
            for sym, coef in g.terms:
                total += coef * Fraction(point[sym])
            if total == 0:
                flags.append("lincmp-boundary")
            from .semantics import _lincmp_holds

            return (1.0 if _lincmp_holds(g, point) else 0.0), zero()
        raise TypeError(f"not a formula: {g!r}")

    name = tnorm.name

    def d_not(v, g):
        if name == "goedel":
            if v == 0.0:
                flags.append("goedel-not-discontinuity")
                return 1.0, zero()
            return 0.0, zero()
        return 1.0 - v, -g

    def d_and(left, right):
        (vx, gx), (vy, gy) = left, right
        if name == "lukasiewicz":
            z = vx + vy - 1.0
            if z > 0.0:
                return max(0.0, z), gx + gy
            if z == 0.0:
                flags.append("and-tie")
            return max(0.0, z), zero()
        if name == "goedel":
            if vx == vy:
                flags.append("and-tie")
                return min(vx, vy), gx
            return (vx, gx) if vx < vy else (vy, gy)
        return vx * vy, vy * gx + vx * gy

    def d_or(left, right):
        (vx, gx), (vy, gy) = left, right
        if name == "lukasiewicz":
            z = vx + vy
            if z < 1.0:
                return min(1.0, z), gx + gy
            if z == 1.0:
                flags.append("or-tie")
            return min(1.0, z), zero()
        if name == "goedel":
            if vx == vy:
                flags.append("or-tie")
                return max(vx, vy), gx
            return (vx, gx) if vx > vy else (vy, gy)
        return vx + vy - vx * vy, (1.0 - vy) * gx + (1.0 - vx) * gy

    def d_implies(left, right):
        (vx, gx), (vy, gy) = left, right
        if name == "lukasiewicz":
            z = 1.0 - vx + vy
            if z < 1.0:
                return min(1.0, z), gy - gx
            if z == 1.0:
                flags.append("implies-tie")
            return min(1.0, z), zero()
        if vx == vy:
            flags.append("implies-tie")
            return 1.0, zero()
        if vx < vy:
            return 1.0, zero()
        if name == "goedel":
            return vy, gy
        return vy / vx, gy / vx - vy * gx / (vx * vx)

    value, grad = walk(f)
    return GradientResult(
        value=value,
        grad=tuple(float(x) for x in grad),
        params=tuple(s.name for s in syms),
        flags=tuple(flags),
    )
