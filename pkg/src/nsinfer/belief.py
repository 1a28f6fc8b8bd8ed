"""Belief families: parametrised nonnegative weights over interpretations.

All families keep the (formula, interpretation) signature even when they
ignore the formula; the log-linear family is the only one that reads it
indirectly, through its own theory. Beliefs are immutable; normalisation
returns a new object with the recorded constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .logic import Boolean, Formula, Interpretation, Symbol, Theory
from .measure import BorelMonteCarlo, IntegralEstimate, MeasureSpec, ProductMixed, integrate
from .semantics import Semantics, eval_batch, evaluate

__all__ = [
    "Belief",
    "IndependentBernoulli",
    "LogLinear",
    "DiracPoint",
    "FuzzyMembership",
    "normalize",
]


class Belief:
    """Base class for belief functions b(formula, interpretation) >= 0."""

    def weight(self, f: Formula | None, w: Interpretation) -> float:
        raise NotImplementedError

    def weight_batch(self, f: Formula | None, cols: Mapping[str, np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def support_names(self) -> tuple[str, ...]:
        """Names of the symbols this belief puts structure on."""
        raise NotImplementedError


@dataclass(frozen=True)
class IndependentBernoulli(Belief):
    """Independent per-atom probabilities over bool symbols.

    The weight of an interpretation is the product of p for atoms assigned 1
    and (1 - p) for atoms assigned 0, so the total mass over the Boolean
    cube is 1.
    """

    probs: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "probs", dict(self.probs))
        for name, p in self.probs.items():
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability for {name!r} must lie in [0, 1], got {p}")

    def __hash__(self):
        return hash(tuple(self.probs.items()))

    def prob_for(self, sym: Symbol | str) -> float:
        name = sym.name if isinstance(sym, Symbol) else sym
        try:
            return self.probs[name]
        except KeyError:
            raise ValueError(f"atom {name!r} is missing a probability") from None

    def weight(self, f, w: Interpretation) -> float:
        out = 1.0
        for s, v in zip(w.symbols, w.values):
            if isinstance(s.domain, Boolean):
                p = self.prob_for(s)
                out *= p if v else 1.0 - p
        return out

    def weight_batch(self, f, cols) -> np.ndarray:
        out = None
        for name, col in cols.items():
            if name not in self.probs:
                continue
            p = self.probs[name]
            part = np.where(np.asarray(col) == 1, p, 1.0 - p)
            out = part if out is None else out * part
        if out is None:
            n = len(next(iter(cols.values())))
            out = np.ones(n)
        return out

    def support_names(self) -> tuple[str, ...]:
        return tuple(self.probs)

    def param_values(self) -> tuple[float, ...]:
        return tuple(self.probs.values())


@dataclass(frozen=True)
class LogLinear(Belief):
    """Exponentiated weighted sum of sentence values, optionally normalised.

    The unnormalised weight is exp(sum_i lambda_i * phi_i(w)), which is
    strictly positive. After `normalize` the recorded constant z divides
    every weight; for a Monte Carlo base measure the standard error of z is
    kept alongside it.
    """

    theory: Theory
    weights: tuple[float, ...]
    semantics: Semantics
    base_measure: MeasureSpec
    symbols: tuple[Symbol, ...]
    z: float | None = None
    z_std_error: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(self.weights) != len(self.theory):
            raise ValueError(
                f"{len(self.theory)} sentences need {len(self.theory)} weights, "
                f"got {len(self.weights)}"
            )

    def log_weight(self, w: Interpretation) -> float:
        return math.fsum(
            lam * float(evaluate(self.semantics, phi, w))
            for lam, phi in zip(self.weights, self.theory)
        )

    def weight(self, f, w: Interpretation) -> float:
        v = math.exp(self.log_weight(w))
        return v / self.z if self.z is not None else v

    def weight_batch(self, f, cols) -> np.ndarray:
        n = len(next(iter(cols.values())))
        acc = np.zeros(n)
        for lam, phi in zip(self.weights, self.theory):
            acc += lam * np.asarray(eval_batch(self.semantics, phi, cols), dtype=np.float64)
        out = np.exp(acc)
        return out / self.z if self.z is not None else out

    def support_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols)

    def param_values(self) -> tuple[float, ...]:
        return self.weights

    @property
    def normalized(self) -> bool:
        return self.z is not None


@dataclass(frozen=True)
class DiracPoint(Belief):
    """All mass on a single interpretation.

    This belief has no pointwise density; it only makes sense inside the
    integrator, where it collapses the integral to evaluation at the point.
    """

    point: Interpretation

    def weight(self, f, w) -> float:
        raise ValueError("atomic belief has no density; integrate against it instead")

    def weight_batch(self, f, cols) -> np.ndarray:
        raise ValueError("atomic belief has no density; integrate against it instead")

    def support_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.point.symbols)

    def param_values(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.point.values)


def _check_curve(name: str, knots) -> tuple[tuple[float, float], ...]:
    pts = tuple((float(x), float(y)) for x, y in knots)
    if len(pts) < 2:
        raise ValueError(f"membership curve for {name!r} needs at least 2 knots")
    xs = [x for x, _ in pts]
    if xs != sorted(xs) or len(set(xs)) != len(xs):
        raise ValueError(f"membership curve knots for {name!r} must have increasing x")
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise ValueError(f"membership curve for {name!r} must cover x=0 and x=1")
    if any(not (0.0 <= y <= 1.0) for _, y in pts):
        raise ValueError(f"membership values for {name!r} must lie in [0, 1]")
    return pts


@dataclass(frozen=True)
class FuzzyMembership(Belief):
    """Fuzzy-set belief: a product of per-atom piecewise-linear curves on [0, 1]."""

    curves: Mapping[str, tuple[tuple[float, float], ...]]

    def __post_init__(self):
        object.__setattr__(
            self, "curves", {n: _check_curve(n, ks) for n, ks in dict(self.curves).items()}
        )

    def __hash__(self):
        return hash(tuple(self.curves.items()))

    def _curve_value(self, name: str, x: float) -> float:
        knots = self.curves[name]
        xs = [k[0] for k in knots]
        ys = [k[1] for k in knots]
        return float(np.interp(x, xs, ys))

    def weight(self, f, w: Interpretation) -> float:
        out = 1.0
        for s, v in zip(w.symbols, w.values):
            if s.name in self.curves:
                out *= self._curve_value(s.name, float(v))
        return out

    def weight_batch(self, f, cols) -> np.ndarray:
        out = None
        for name, col in cols.items():
            if name not in self.curves:
                continue
            knots = self.curves[name]
            part = np.interp(
                np.asarray(col, dtype=np.float64),
                [k[0] for k in knots],
                [k[1] for k in knots],
            )
            out = part if out is None else out * part
        if out is None:
            out = np.ones(len(next(iter(cols.values()))))
        return out

    def support_names(self) -> tuple[str, ...]:
        return tuple(self.curves)


def normalize(b: LogLinear) -> LogLinear:
    """Compute the normalising constant of a log-linear belief.

    Integrates the unnormalised weight over the belief's symbols under its
    base measure and returns a copy with z recorded (plus a standard-error
    estimate when the base measure is Monte Carlo).
    """
    if b.normalized:
        return b
    unnorm = replace(b, z=None, z_std_error=None)
    est: IntegralEstimate = integrate(
        b.symbols,
        b.base_measure,
        scalar_fn=lambda w: unnorm.weight(None, w),
        batch_fn=lambda cols: unnorm.weight_batch(None, cols),
    )
    z = est.value
    if not (z > 0.0 and math.isfinite(z)):
        raise ArithmeticError(f"normalising constant is not finite and positive: {z}")
    se = est.std_error if _mc_based(b.base_measure) else None
    return replace(b, z=z, z_std_error=se)


def _mc_based(spec: MeasureSpec) -> bool:
    return isinstance(spec, BorelMonteCarlo) or (
        isinstance(spec, ProductMixed) and isinstance(spec.continuous, BorelMonteCarlo)
    )
