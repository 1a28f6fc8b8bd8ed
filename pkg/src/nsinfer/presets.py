"""Preset quadruples reproducing the inference of well-known neurosymbolic
systems.

Each preset fixes (semantics, logic function, belief family, measure) and
runs the shared integrator on the ground propositional core of the system
it emulates:

    semantic_loss     Boolean, direct, Bernoulli, counting (circuit WMC)
    deepproblog_prop  Boolean, direct, Bernoulli, counting (circuit WMC)
    neurasp_prop      Boolean, direct, Bernoulli, counting (circuit WMC)
    nmln              Boolean, direct, normalised log-linear, counting
    ltn               fuzzy t-norm, direct, Dirac point (collapse)
    sbr               fuzzy t-norm, direct, Dirac point (collapse)
    neupsl            Lukasiewicz, direct, normalised log-linear, Borel
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .belief import DiracPoint, IndependentBernoulli, LogLinear, normalize
from .integrator import FunctionalResult, Model, compile_formula, infer, wmc_eval
from .logic import And, Formula, Interpretation, Symbol, Theory
from .measure import BorelMonteCarlo, BorelQuadrature, Counting, MeasureSpec
from .semantics import BooleanSem, Direct, FuzzySem, LUKASIEWICZ, TNormFamily

__all__ = [
    "SystemPreset",
    "PresetRun",
    "LossResult",
    "PRESET_NAMES",
    "make_preset",
    "run_preset",
    "semantic_loss",
]

PRESET_NAMES = (
    "semantic_loss",
    "deepproblog_prop",
    "neurasp_prop",
    "nmln",
    "ltn",
    "sbr",
    "neupsl",
)

_WMC_PRESETS = ("semantic_loss", "deepproblog_prop", "neurasp_prop")


@dataclass(frozen=True)
class SystemPreset:
    """A named (semantics, logic fn, belief family, measure) quadruple."""

    name: str
    semantics: BooleanSem | FuzzySem
    logic_fn: Direct
    belief_family: str
    measure: MeasureSpec | None  # None marks the Dirac collapse

    def quadruple(self) -> dict[str, str]:
        return {
            "semantics": getattr(self.semantics, "name", "boolean"),
            "logic_fn": self.logic_fn.name,
            "belief": self.belief_family,
            "measure": self.measure.name if self.measure is not None else "dirac-collapse",
        }


@dataclass(frozen=True)
class PresetRun:
    preset: SystemPreset
    result: FunctionalResult

    @property
    def value(self) -> float:
        return self.result.value


def make_preset(
    name: str,
    tnorm: TNormFamily = LUKASIEWICZ,
    measure: MeasureSpec | None = None,
) -> SystemPreset:
    """Construct a preset descriptor; `tnorm` applies to the fuzzy presets and
    `measure` picks quadrature or Monte Carlo for neupsl."""
    if name in _WMC_PRESETS:
        return SystemPreset(name, BooleanSem(), Direct(), "bernoulli", Counting())
    if name == "nmln":
        return SystemPreset(name, BooleanSem(), Direct(), "loglinear", Counting())
    if name in ("ltn", "sbr"):
        return SystemPreset(name, FuzzySem(tnorm), Direct(), "dirac", None)
    if name == "neupsl":
        m = measure if measure is not None else BorelQuadrature()
        if not isinstance(m, (BorelQuadrature, BorelMonteCarlo)):
            raise ValueError("neupsl expects a quadrature or Monte Carlo measure")
        return SystemPreset(name, FuzzySem(LUKASIEWICZ), Direct(), "loglinear", m)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def _as_formula(query: Formula | Theory) -> Formula:
    if isinstance(query, Theory):
        out = query.sentences[0]
        for phi in query.sentences[1:]:
            out = And(out, phi)
        return out
    return query


def run_preset(
    preset: SystemPreset | str,
    symbols: Sequence[Symbol],
    query: Formula | Theory,
    probs: Mapping[str, float] | None = None,
    point: Interpretation | None = None,
    weights: Sequence[float] | None = None,
    theory: Theory | None = None,
) -> PresetRun:
    """Run a preset's inference with the given parameters.

    Bernoulli presets need `probs`; ltn/sbr need `point`; nmln and neupsl
    need `weights` and a `theory` (defaulting to the query itself).
    """
    if isinstance(preset, str):
        preset = make_preset(preset)
    symbols = tuple(symbols)
    f = _as_formula(query)

    if preset.belief_family == "bernoulli":
        if probs is None:
            raise ValueError(f"preset {preset.name!r} needs probs=")
        model = Model(symbols, preset.semantics, IndependentBernoulli(probs))
        result = infer(model, preset.logic_fn, f, preset.measure, method="circuit")
        return PresetRun(preset, result)

    if preset.belief_family == "dirac":
        if point is None:
            raise ValueError(f"preset {preset.name!r} needs point=")
        model = Model(symbols, preset.semantics, DiracPoint(point))
        result = infer(model, preset.logic_fn, f, Counting())
        return PresetRun(preset, result)

    if weights is None:
        raise ValueError(f"preset {preset.name!r} needs weights=")
    th = theory if theory is not None else Theory([f])
    belief = normalize(
        LogLinear(th, tuple(weights), preset.semantics, preset.measure, symbols)
    )
    model = Model(symbols, preset.semantics, belief)
    result = infer(model, preset.logic_fn, f, preset.measure)
    return PresetRun(preset, result)


@dataclass(frozen=True)
class LossResult:
    """-log of a constraint probability; `saturated` marks the F = 0 case,
    where the loss is reported as +inf rather than raising."""

    value: float
    saturated: bool
    wmc: float


def semantic_loss(f: Formula, probs: Mapping[str, float]) -> LossResult:
    """-log WMC(f) under independent atom probabilities, via the circuit."""
    circuit = compile_formula(f)
    p = wmc_eval(circuit, IndependentBernoulli(probs))
    if p <= 0.0:
        return LossResult(math.inf, True, p)
    return LossResult(-math.log(p), False, p)
