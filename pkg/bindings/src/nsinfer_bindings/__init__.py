"""In-process bindings for external learners.

A bound model is a handle around an nsinfer model whose belief parameters
are replaced wholesale per call: a learner pushes a parameter vector in,
reads a scalar value and a gradient out, and keeps the training loop on
its own side. Values and gradients delegate to the engine's gradient
routines, so exact backends agree bit for bit with the engine and its CLI.

    h = load_model("model.nsy")          # or build_model({...})
    set_params(h, theta)
    value, grad = value_and_grad(h, "h -> (c | p)")
    close(h)
"""

from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Sequence

from nsinfer import (
    BOOL,
    UNIT,
    BooleanSem,
    BorelMonteCarlo,
    BorelQuadrature,
    BoundedReal,
    Counting,
    DiracPoint,
    FiniteSet,
    FunctionalResult,
    FuzzySem,
    IndependentBernoulli,
    Interpretation,
    LogLinear,
    Model,
    TNORM_FAMILIES,
    Theory,
    compile_formula,
    grad_dirac,
    grad_loglinear,
    grad_wmc,
    make_symbols,
    normalize,
    parse_formula,
)
from nsinfer import Direct, infer as _engine_infer
from nsinfer.modelfile import load_model_file

__all__ = [
    "BoundModel",
    "BindingError",
    "CLAMP_EPS",
    "load_model",
    "build_model",
    "set_params",
    "infer",
    "value_and_grad",
    "close",
]

CLAMP_EPS = 1e-7


class BindingError(ValueError):
    pass


class BoundModel:
    """Handle to a model whose belief parameters are mutable by replacement.

    The parameter vector length is fixed at construction; the handle is
    invalid after `close`. A handle belongs to one caller thread.
    """

    def __init__(self, symbols, semantics, belief, measure):
        self._symbols = symbols
        self._semantics = semantics
        self._belief = belief
        self._measure = measure
        self._n_params = len(belief.param_values())
        self._closed = False
        self.params_clamped = False

    def _check_open(self):
        if self._closed:
            raise BindingError("handle is closed")

    @property
    def param_count(self) -> int:
        return self._n_params

    def params(self) -> tuple[float, ...]:
        self._check_open()
        return tuple(self._belief.param_values())


def load_model(path) -> BoundModel:
    """Bind a model declared in a model file."""
    mf = load_model_file(path)
    if isinstance(mf.belief, (IndependentBernoulli, LogLinear, DiracPoint)):
        return BoundModel(mf.symbols, mf.semantics, mf.belief, mf.measure)
    raise BindingError(
        f"{type(mf.belief).__name__} beliefs have no parameter vector to bind"
    )


_DOMAINS = {"bool": BOOL, "unit": UNIT}


def _domain(spec):
    if isinstance(spec, str):
        try:
            return _DOMAINS[spec]
        except KeyError:
            raise BindingError(f"unknown domain {spec!r}") from None
    if "set" in spec:
        return FiniteSet(spec["set"])
    if "real" in spec:
        lo, hi = spec["real"]
        return BoundedReal(float(lo), float(hi))
    raise BindingError(f"unknown domain {spec!r}")


def _measure(spec):
    if spec == "counting" or spec is None:
        return Counting()
    if isinstance(spec, Mapping):
        if spec.get("kind") == "quadrature":
            return BorelQuadrature(int(spec.get("g", 200)))
        if spec.get("kind") == "montecarlo":
            return BorelMonteCarlo(int(spec.get("n", 100000)), int(spec.get("seed", 0)))
    raise BindingError(f"unknown measure {spec!r}")


def build_model(spec: Mapping) -> BoundModel:
    """Bind a model described by a plain dict (mirrors the file sections).

    Keys: `symbols` (name -> domain), `semantics`, `belief`, optional
    `measure`. Belief dicts carry a `family` plus `probs`, or `weights` and
    `theory`, or `point`.
    """
    symbols = make_symbols([(n, _domain(d)) for n, d in dict(spec["symbols"]).items()])
    sem_name = spec["semantics"]
    if sem_name == "boolean":
        semantics = BooleanSem()
    elif sem_name in TNORM_FAMILIES:
        semantics = FuzzySem(TNORM_FAMILIES[sem_name])
    else:
        raise BindingError(f"unknown semantics {sem_name!r}")
    measure = _measure(spec.get("measure"))

    bspec = dict(spec["belief"])
    family = bspec.get("family")
    if family == "bernoulli":
        belief = IndependentBernoulli({k: float(v) for k, v in bspec["probs"].items()})
    elif family == "loglinear":
        sentences = [parse_formula(t, symbols) for t in bspec["theory"]]
        belief = LogLinear(
            Theory(sentences), tuple(bspec["weights"]), semantics, measure, symbols
        )
    elif family == "dirac":
        belief = DiracPoint(Interpretation.from_dict(symbols, bspec["point"]))
    else:
        raise BindingError(f"unknown belief family {family!r}")
    return BoundModel(symbols, semantics, belief, measure)


def set_params(h: BoundModel, theta: Sequence[float]) -> None:
    """Replace the belief's parameter vector.

    Bernoulli probabilities are clamped into [eps, 1 - eps] and the
    handle's `params_clamped` flag reports whether any entry moved.
    """
    h._check_open()
    theta = [float(v) for v in theta]
    if len(theta) != h._n_params:
        raise BindingError(f"expected {h._n_params} parameters, got {len(theta)}")
    b = h._belief
    if isinstance(b, IndependentBernoulli):
        clamped = [min(max(v, CLAMP_EPS), 1.0 - CLAMP_EPS) for v in theta]
        h.params_clamped = clamped != theta
        h._belief = IndependentBernoulli(dict(zip(b.probs, clamped)))
    elif isinstance(b, LogLinear):
        h.params_clamped = False
        h._belief = replace(b, weights=tuple(theta), z=None, z_std_error=None)
    else:
        h.params_clamped = False
        point = b.point
        h._belief = DiracPoint(Interpretation(point.symbols, tuple(theta)))


def _model(h: BoundModel) -> Model:
    belief = h._belief
    if isinstance(belief, LogLinear) and not belief.normalized:
        belief = normalize(belief)
    return Model(h._symbols, h._semantics, belief)


def infer(h: BoundModel, query: str, condition=None) -> FunctionalResult:
    """Run the engine on a query formula with the current parameters."""
    h._check_open()
    f = parse_formula(query, h._symbols)
    return _engine_infer(_model(h), Direct(), f, h._measure, condition=condition)


def value_and_grad(h: BoundModel, query: str) -> tuple[float, tuple[float, ...]]:
    """Value of the functional and its gradient in the bound parameters.

    Delegates to the engine's gradient routines, so results match them bit
    for bit on exact backends.
    """
    h._check_open()
    f = parse_formula(query, h._symbols)
    b = h._belief
    if isinstance(b, IndependentBernoulli):
        g = grad_wmc(compile_formula(f), b)
    elif isinstance(b, LogLinear):
        g = grad_loglinear(b, f)
    else:
        if not isinstance(h._semantics, FuzzySem):
            raise BindingError("point-belief gradients need a fuzzy semantics")
        g = grad_dirac(f, h._semantics.tnorm, b.point)
    return g.value, g.grad


def close(h: BoundModel) -> None:
    """Invalidate the handle; further calls raise."""
    h._closed = True
    h._belief = None
