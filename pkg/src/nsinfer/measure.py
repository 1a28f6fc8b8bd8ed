"""Measure specifications and the numeric aggregation backends behind inference.

Counting measures are summed exactly (compensated summation); Borel measures
over bounded boxes are handled by midpoint-rule quadrature or Monte Carlo
with a counter-based generator, so results are reproducible for a fixed seed
regardless of how work is chunked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .logic import (
    Boolean,
    BoundedReal,
    Interpretation,
    NotEnumerableError,
    Symbol,
    UnitInterval,
    enumerate_interpretations,
)

__all__ = [
    "MeasureSpec",
    "Counting",
    "BorelQuadrature",
    "BorelMonteCarlo",
    "ProductMixed",
    "KahanSum",
    "IntegralEstimate",
    "integrate",
    "mc_columns",
    "MAX_QUADRATURE_DIMS",
]

MAX_QUADRATURE_DIMS = 8
_CHUNK = 1 << 16


class MeasureSpec:
    """Base class for aggregation strategies over interpretation space."""


@dataclass(frozen=True)
class Counting(MeasureSpec):
    """Counting measure over finite product domains."""

    name = "counting"


@dataclass(frozen=True)
class BorelQuadrature(MeasureSpec):
    """Midpoint-rule tensor grid with `grid` points per continuous dimension."""

    grid: int = 200

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError(f"quadrature needs grid >= 2, got {self.grid}")

    @property
    def name(self) -> str:
        return f"quadrature(g={self.grid})"


@dataclass(frozen=True)
class BorelMonteCarlo(MeasureSpec):
    """Plain Monte Carlo with `samples` i.i.d. uniform draws.

    Draws come from a Philox counter-based generator keyed by the seed, so
    the sample matrix is identical across runs and across any internal
    parallel chunking.
    """

    samples: int = 100000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"Monte Carlo needs samples >= 1, got {self.samples}")

    @property
    def name(self) -> str:
        return f"montecarlo(n={self.samples}, seed={self.seed})"


@dataclass(frozen=True)
class ProductMixed(MeasureSpec):
    """Counting over finite-domain symbols crossed with a Borel measure over
    the continuous ones."""

    continuous: BorelQuadrature | BorelMonteCarlo = BorelQuadrature()

    @property
    def name(self) -> str:
        return f"mixed({self.continuous.name})"


class KahanSum:
    """Neumaier-compensated accumulator."""

    __slots__ = ("_sum", "_comp")

    def __init__(self):
        self._sum = 0.0
        self._comp = 0.0

    def add(self, x: float):
        t = self._sum + x
        if abs(self._sum) >= abs(x):
            self._comp += (self._sum - t) + x
        else:
            self._comp += (x - t) + self._sum
        self._sum = t

    @property
    def total(self) -> float:
        return self._sum + self._comp


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    std_error: float | None
    points: int


ScalarFn = Callable[[Interpretation], float]
BatchFn = Callable[[Mapping[str, np.ndarray]], np.ndarray]


def _split_domains(symbols: Sequence[Symbol]):
    finite = [s for s in symbols if s.domain.is_finite]
    continuous = [s for s in symbols if isinstance(s.domain, (UnitInterval, BoundedReal))]
    other = [s for s in symbols if s not in finite and s not in continuous]
    if other:
        raise ValueError(f"cannot integrate over domain of symbol {other[0].name!r}")
    return finite, continuous


def _bounds(sym: Symbol) -> tuple[float, float]:
    d = sym.domain
    if isinstance(d, UnitInterval):
        return 0.0, 1.0
    return d.lo, d.hi


def integrate(
    symbols: Sequence[Symbol],
    spec: MeasureSpec,
    scalar_fn: ScalarFn,
    batch_fn: BatchFn | None = None,
) -> IntegralEstimate:
    """Aggregate an integrand over the product space of `symbols` under `spec`.

    `scalar_fn` is the reference integrand; `batch_fn`, when supplied, is its
    vectorised form over column arrays and enables the fast paths (chunked
    Boolean enumeration, quadrature grids, Monte Carlo matrices).
    """
    symbols = tuple(symbols)
    if not symbols:
        v = float(scalar_fn(Interpretation((), ())))
        se = 0.0 if _wants_std_error(spec) else None
        return IntegralEstimate(v, se, 1)

    if isinstance(spec, Counting):
        finite, continuous = _split_domains(symbols)
        if continuous:
            raise NotEnumerableError(
                f"symbol {continuous[0].name!r} has infinite domain "
                f"{continuous[0].domain}: not enumerable under a counting measure"
            )
        if batch_fn is not None and all(isinstance(s.domain, Boolean) for s in symbols):
            return _counting_boolean_batch(symbols, batch_fn)
        return _counting_scalar(symbols, scalar_fn)

    if isinstance(spec, (BorelQuadrature, BorelMonteCarlo)):
        finite, continuous = _split_domains(symbols)
        if finite:
            raise ValueError(
                f"symbol {finite[0].name!r} has a finite domain; use ProductMixed "
                "to combine counting with a Borel measure"
            )
        return _borel(symbols, spec, batch_fn, scalar_fn)

    if isinstance(spec, ProductMixed):
        finite, continuous = _split_domains(symbols)
        if not continuous:
            return integrate(symbols, Counting(), scalar_fn, batch_fn)
        if not finite:
            return _borel(tuple(continuous), spec.continuous, batch_fn, scalar_fn)
        return _mixed(tuple(finite), tuple(continuous), spec.continuous, batch_fn, scalar_fn)

    raise TypeError(f"unknown measure spec {spec!r}")


def _wants_std_error(spec: MeasureSpec) -> bool:
    if isinstance(spec, BorelMonteCarlo):
        return True
    return isinstance(spec, ProductMixed) and isinstance(spec.continuous, BorelMonteCarlo)


def _counting_scalar(symbols, scalar_fn) -> IntegralEstimate:
    acc = KahanSum()
    n = 0
    for w in enumerate_interpretations(symbols):
        acc.add(float(scalar_fn(w)))
        n += 1
    return IntegralEstimate(acc.total, None, n)


def _boolean_chunks(symbols, chunk=_CHUNK):
    """Yield column dicts covering the Boolean cube in lexicographic order."""
    k = len(symbols)
    total = 1 << k
    shifts = np.array([k - 1 - j for j in range(k)], dtype=np.uint64)
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        idx = np.arange(start, stop, dtype=np.uint64)
        cols = {
            s.name: ((idx >> shifts[j]) & 1).astype(np.int8)
            for j, s in enumerate(symbols)
        }
        yield cols


def _counting_boolean_batch(symbols, batch_fn) -> IntegralEstimate:
    acc = KahanSum()
    n = 0
    for cols in _boolean_chunks(symbols):
        vals = np.asarray(batch_fn(cols), dtype=np.float64)
        acc.add(float(np.sum(vals)))
        n += vals.shape[0]
    return IntegralEstimate(acc.total, None, n)


def _grid_chunks(symbols, g, chunk=_CHUNK):
    """Yield midpoint-grid column dicts, flattened in row-major order."""
    k = len(symbols)
    total = g**k
    strides = [g ** (k - 1 - j) for j in range(k)]
    bounds = [_bounds(s) for s in symbols]
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        idx = np.arange(start, stop, dtype=np.int64)
        cols = {}
        for j, s in enumerate(symbols):
            digits = (idx // strides[j]) % g
            lo, hi = bounds[j]
            cols[s.name] = lo + (digits + 0.5) * ((hi - lo) / g)
        yield cols


def _volume(symbols) -> float:
    vol = 1.0
    for s in symbols:
        lo, hi = _bounds(s)
        vol *= hi - lo
    return vol


def _borel(symbols, spec, batch_fn, scalar_fn) -> IntegralEstimate:
    if batch_fn is None:
        batch_fn = _batch_from_scalar(symbols, scalar_fn)
    k = len(symbols)
    if isinstance(spec, BorelQuadrature):
        if k > MAX_QUADRATURE_DIMS:
            raise ValueError(
                f"quadrature over {k} dimensions exceeds the limit of "
                f"{MAX_QUADRATURE_DIMS}; use a Monte Carlo measure instead"
            )
        g = spec.grid
        acc = KahanSum()
        for cols in _grid_chunks(symbols, g):
            acc.add(float(np.sum(np.asarray(batch_fn(cols), dtype=np.float64))))
        cell = _volume(symbols) / float(g**k)
        return IntegralEstimate(acc.total * cell, None, g**k)

    n = spec.samples
    cols = mc_columns(symbols, spec)
    vals = np.asarray(batch_fn(cols), dtype=np.float64)
    vol = _volume(symbols)
    mean = float(np.mean(vals))
    if n > 1:
        se = float(np.std(vals, ddof=1) / np.sqrt(n))
    else:
        se = float("nan")
    return IntegralEstimate(vol * mean, vol * se if n > 1 else se, n)


def _mixed(finite, continuous, cont_spec, batch_fn, scalar_fn) -> IntegralEstimate:
    """Sum over finite assignments inside each continuous evaluation point."""
    if batch_fn is None:
        batch_fn = _batch_from_scalar(tuple(finite) + tuple(continuous), scalar_fn)
    assignments = [
        tuple(w.values) for w in enumerate_interpretations(finite)
    ]

    def summed(cont_cols: Mapping[str, np.ndarray]) -> np.ndarray:
        n = len(next(iter(cont_cols.values())))
        total = np.zeros(n)
        for values in assignments:
            cols = dict(cont_cols)
            for s, v in zip(finite, values):
                if isinstance(s.domain, Boolean):
                    cols[s.name] = np.full(n, int(v), dtype=np.int8)
                else:
                    cols[s.name] = np.full(n, float(v))
            total += np.asarray(batch_fn(cols), dtype=np.float64)
        return total

    est = _borel(continuous, cont_spec, summed, scalar_fn=None)
    return IntegralEstimate(est.value, est.std_error, est.points * len(assignments))


def mc_columns(symbols: Sequence[Symbol], spec: BorelMonteCarlo) -> dict[str, np.ndarray]:
    """The Monte Carlo sample columns for `spec`, scaled to each symbol's box.

    Exposed so value and gradient estimates can share one sample set
    (common random numbers).
    """
    symbols = tuple(symbols)
    u = np.random.Generator(np.random.Philox(key=spec.seed)).random(
        (spec.samples, len(symbols))
    )
    cols = {}
    for j, s in enumerate(symbols):
        lo, hi = _bounds(s)
        cols[s.name] = lo + u[:, j] * (hi - lo)
    return cols


def _batch_from_scalar(symbols, scalar_fn) -> BatchFn:
    """Adapter for integrands that only exist in scalar form."""
    symbols = tuple(symbols)

    def run(cols: Mapping[str, np.ndarray]) -> np.ndarray:
        n = len(next(iter(cols.values())))
        out = np.empty(n)
        for i in range(n):
            values = []
            for s in symbols:
                v = cols[s.name][i]
                values.append(int(v) if isinstance(s.domain, Boolean) else float(v))
            out[i] = scalar_fn(Interpretation(symbols, values, _checked=False))
        return out

    return run
