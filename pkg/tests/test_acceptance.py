"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; any failure shows up as an ordinary pytest failure.
"""

import json
import math
import random
import subprocess
import sys
import time

import pytest

import nsinfer as ns
from generators import (
    bool_symbols,
    palette_probs,
    random_atom_formula,
    random_probs,
    unit_symbols,
)

BOOL_SEM = ns.BooleanSem()
LUK = ns.FuzzySem(ns.LUKASIEWICZ)


def _report(name):
    print(f"ACCEPTANCE {name}: PASS")


def _timed_best(fn, repeats=50):
    fn()  # warm-up
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


class TestExample1Reproduction:
    def test_boolean_eval_of_main_sentence(self):
        syms = ns.make_symbols([("h", ns.BOOL), ("c", ns.BOOL), ("p", ns.BOOL)])
        f = ns.parse_formula("h -> (c | p)", syms)
        w = ns.Interpretation.from_dict(syms, {"h": 1, "c": 1, "p": 0})
        assert ns.evaluate(BOOL_SEM, f, w) == 1
        assert _timed_best(lambda: ns.evaluate(BOOL_SEM, f, w)) < 1e-3
        _report("example-1-boolean-eval")


class TestExample2Reproduction:
    def test_lukasiewicz_eval_at_half_half(self):
        syms = ns.make_symbols([("h", ns.UNIT), ("c", ns.UNIT), ("p", ns.UNIT)])
        f = ns.parse_formula("h -> (c | p)", syms)
        w = ns.Interpretation.from_dict(syms, {"h": 1.0, "c": 0.5, "p": 0.5})
        assert ns.evaluate(LUK, f, w) == 1.0
        assert _timed_best(lambda: ns.evaluate(LUK, f, w)) < 1e-3
        _report("example-2-lukasiewicz-eval")


class TestExample6Reproduction:
    def test_dirac_collapse_is_bitwise_evaluation(self):
        rng = random.Random(60606)
        syms = unit_symbols(4)
        for _ in range(100):
            f = random_atom_formula(rng, syms, rng.randint(1, 6))
            point = ns.Interpretation(syms, [rng.random() for _ in syms])
            model = ns.Model(syms, LUK, ns.DiracPoint(point))
            collapsed = ns.infer(model, ns.Direct(), f, ns.BorelQuadrature(8)).value
            assert collapsed == ns.evaluate(LUK, f, point)
        _report("example-6-dirac-collapse")


class TestWmcBackendEquivalence:
    def test_enumeration_circuit_and_simple_function_oracle(self):
        """500 random Boolean formulas, up to 12 atoms, three backends."""
        rng = random.Random(512)
        t0 = time.perf_counter()
        for _ in range(500):
            k = rng.randint(1, 12)
            syms = bool_symbols(k)
            f = random_atom_formula(rng, syms, rng.randint(1, 8))
            b = ns.IndependentBernoulli(palette_probs(rng, syms))
            model = ns.Model(syms, BOOL_SEM, b)

            via_enum = ns.infer(model, ns.Direct(), f, ns.Counting()).value
            via_circuit = ns.wmc_eval(ns.compile_formula(f, syms), b)
            assert abs(via_enum - via_circuit) <= 1e-12

            carrier = list(ns.enumerate_interpretations(syms))
            by_value = {}
            for w in carrier:
                v = float(ns.evaluate(BOOL_SEM, f, w)) * b.weight(None, w)
                if v != 0.0:
                    by_value.setdefault(v, set()).add(w)
            terms = [(v, (lambda w, S=S: w in S)) for v, S in by_value.items()]
            oracle = ns.lebesgue_simple(terms, carrier)
            assert abs(via_enum - oracle) <= 1e-12
            assert abs(via_circuit - oracle) <= 1e-12
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0, f"took {elapsed:.1f}s"
        _report(f"wmc-backend-equivalence ({elapsed:.1f}s for 500 formulas)")


class TestNormalizationSuite:
    @pytest.mark.parametrize("n", [2, 11, 20])
    def test_bernoulli_total_mass(self, n):
        rng = random.Random(7000 + n)
        syms = bool_symbols(n)
        b = ns.IndependentBernoulli(random_probs(rng, syms, 0.01, 0.99))
        est = ns.integrate(
            syms,
            ns.Counting(),
            scalar_fn=lambda w: b.weight(None, w),
            batch_fn=lambda cols: b.weight_batch(None, cols),
        )
        assert abs(est.value - 1.0) <= 1e-12
        if n == 20:
            _report("normalization-bernoulli-mass")

    def test_loglinear_mass_exact_base(self):
        rng = random.Random(7100)
        for _ in range(20):
            syms = bool_symbols(rng.randint(1, 8))
            theory = [random_atom_formula(rng, syms, 4) for _ in range(rng.randint(1, 3))]
            lams = tuple(rng.uniform(-2, 2) for _ in theory)
            b = ns.normalize(
                ns.LogLinear(ns.Theory(theory), lams, BOOL_SEM, ns.Counting(), syms)
            )
            mass = math.fsum(b.weight(None, w) for w in ns.enumerate_interpretations(syms))
            assert abs(mass - 1.0) <= 1e-9
        _report("normalization-loglinear-exact")

    def test_loglinear_mass_monte_carlo(self):
        syms = unit_symbols(3)
        f = ns.parse_formula("u0 -> (u1 | u2)", syms)
        b = ns.normalize(
            ns.LogLinear(ns.Theory([f]), (1.3,), LUK, ns.BorelMonteCarlo(30000, 71), syms)
        )
        est = ns.integrate(
            syms,
            ns.BorelMonteCarlo(30000, 1234),
            scalar_fn=lambda w: b.weight(None, w),
            batch_fn=lambda cols: b.weight_batch(None, cols),
        )
        combined = math.hypot(est.std_error, est.value * b.z_std_error / b.z)
        assert abs(est.value - 1.0) <= 3 * combined
        _report("normalization-loglinear-mc")

    def test_complement_identity(self):
        rng = random.Random(7200)
        for _ in range(60):
            syms = bool_symbols(rng.randint(1, 8))
            f = random_atom_formula(rng, syms, 5)
            model = ns.Model(syms, BOOL_SEM, ns.IndependentBernoulli(random_probs(rng, syms)))
            a = ns.infer(model, ns.Direct(), f, ns.Counting()).value
            b = ns.infer(model, ns.Direct(), ns.Not(f), ns.Counting()).value
            assert abs(a + b - 1.0) <= 1e-12
        _report("normalization-complement")


class TestGradientSuite:
    H = 1e-5
    TOL = 1e-5

    def test_bernoulli_circuit_gradients(self):
        rng = random.Random(8100)
        for _ in range(200):
            syms = bool_symbols(rng.randint(1, 7))
            f = random_atom_formula(rng, syms, rng.randint(1, 6))
            probs = random_probs(rng, syms, 0.1, 0.9)
            circuit = ns.compile_formula(f, syms)
            g = ns.grad_wmc(circuit, ns.IndependentBernoulli(probs))
            for name, got in zip(g.params, g.grad):
                hi, lo = dict(probs), dict(probs)
                hi[name] += self.H
                lo[name] -= self.H
                fd = (
                    ns.wmc_eval(circuit, ns.IndependentBernoulli(hi))
                    - ns.wmc_eval(circuit, ns.IndependentBernoulli(lo))
                ) / (2 * self.H)
                assert abs(got - fd) <= self.TOL
        _report("gradients-bernoulli")

    def test_loglinear_gradients(self):
        rng = random.Random(8200)
        checked = 0
        for _ in range(400):
            if checked >= 200:
                break
            syms = bool_symbols(rng.randint(2, 6))
            theory = [random_atom_formula(rng, syms, 4) for _ in range(rng.randint(1, 3))]
            lams = [rng.uniform(-2, 2) for _ in theory]
            query = random_atom_formula(rng, syms, 4)

            def make(ws):
                return ns.LogLinear(ns.Theory(theory), tuple(ws), BOOL_SEM,
                                    ns.Counting(), syms)

            try:
                g = ns.grad_loglinear(make(lams), query)
            except ns.GradientUndefinedError:
                continue
            for i in range(len(lams)):
                up, dn = list(lams), list(lams)
                up[i] += self.H
                dn[i] -= self.H
                fd = (
                    math.log(ns.grad_loglinear(make(up), query).value)
                    - math.log(ns.grad_loglinear(make(dn), query).value)
                ) / (2 * self.H)
                assert abs(g.grad[i] - fd) <= self.TOL
            checked += 1
        assert checked >= 200
        _report("gradients-loglinear")

    def test_dirac_gradients(self):
        rng = random.Random(8300)
        checked = 0
        for attempt in range(2000):
            if checked >= 200:
                break
            t = ns.LUKASIEWICZ if attempt % 2 == 0 else ns.PRODUCT
            sem = ns.FuzzySem(t)
            syms = unit_symbols(rng.randint(1, 4))
            f = random_atom_formula(rng, syms, rng.randint(1, 5))
            vals = [rng.uniform(0.05, 0.95) for _ in syms]
            point = ns.Interpretation(syms, vals)
            g = ns.grad_dirac(f, t, point)
            if g.flags:
                continue

            def fd(j, h):
                up, dn = list(vals), list(vals)
                up[j] += h
                dn[j] -= h
                return (
                    ns.evaluate(sem, f, ns.Interpretation(syms, up))
                    - ns.evaluate(sem, f, ns.Interpretation(syms, dn))
                ) / (2 * h)

            if any(abs(fd(j, self.H) - fd(j, self.H / 2)) > 1e-7 for j in range(len(syms))):
                continue  # a kink inside the stencil; the point itself is clean
            for j in range(len(syms)):
                assert abs(g.grad[j] - fd(j, self.H)) <= self.TOL
            checked += 1
        assert checked >= 200
        _report("gradients-dirac")

    def test_kinks_are_flagged_not_silent(self):
        syms = unit_symbols(2)
        cases = [
            ("u0 & u1", (0.5, 0.5), "and-tie"),
            ("u0 | u1", (0.5, 0.5), "or-tie"),
            ("u0 -> u1", (0.4, 0.4), "implies-tie"),
        ]
        for text, vals, flag in cases:
            f = ns.parse_formula(text, syms)
            g = ns.grad_dirac(f, ns.LUKASIEWICZ, ns.Interpretation(syms, vals))
            assert flag in g.flags
        g = ns.grad_dirac(
            ns.parse_formula("u0 -> u1", syms), ns.PRODUCT,
            ns.Interpretation(syms, (0.3, 0.3)),
        )
        assert "implies-tie" in g.flags
        _report("gradients-kinks-flagged")


class TestQuadratureMonteCarloAgreement:
    def test_fuzzy_expectations_agree(self):
        """NeuPSL-style expectations: MC within four standard errors of
        quadrature on at least 95% of 50 random instances."""
        rng = random.Random(9100)
        hits = 0
        for i in range(50):
            syms = unit_symbols(rng.randint(1, 3))
            f = random_atom_formula(rng, syms, rng.randint(1, 4))
            lam = rng.uniform(-2, 2)
            quad = ns.run_preset(
                ns.make_preset("neupsl", measure=ns.BorelQuadrature(200)),
                syms, f, weights=(lam,),
            )
            mc = ns.run_preset(
                ns.make_preset("neupsl", measure=ns.BorelMonteCarlo(20000, 9000 + i)),
                syms, f, weights=(lam,),
            )
            se = mc.result.std_error
            if abs(mc.value - quad.value) <= 4 * max(se, 1e-12):
                hits += 1
        assert hits >= 48, f"only {hits}/50 within 4 standard errors"
        _report(f"quadrature-mc-agreement ({hits}/50)")

    def test_uniform_single_atom_expectation(self):
        syms = unit_symbols(1, prefix="a")
        f = ns.AtomRef(syms[0])
        run = ns.run_preset(
            ns.make_preset("neupsl", measure=ns.BorelQuadrature(1000)),
            syms, f, weights=(0.0,),
        )
        assert abs(run.value - 0.5) <= 1e-6
        _report("quadrature-uniform-expectation")


class TestPresetFidelity:
    def test_probabilistic_presets_identical(self):
        rng = random.Random(9200)
        syms = bool_symbols(5)
        for _ in range(30):
            f = random_atom_formula(rng, syms, 5)
            probs = random_probs(rng, syms)
            a = ns.run_preset("deepproblog_prop", syms, f, probs=probs).value
            b = ns.run_preset("neurasp_prop", syms, f, probs=probs).value
            c = ns.run_preset("semantic_loss", syms, f, probs=probs).value
            assert a == b == c
        _report("preset-fidelity-wmc")

    def test_ltn_equals_sbr(self):
        rng = random.Random(9300)
        syms = unit_symbols(3)
        for _ in range(30):
            f = random_atom_formula(rng, syms, 5)
            point = ns.Interpretation(syms, [rng.random() for _ in syms])
            assert (
                ns.run_preset("ltn", syms, f, point=point).value
                == ns.run_preset("sbr", syms, f, point=point).value
            )
        _report("preset-fidelity-ltn-sbr")

    def test_quadruples_match_framework_rows(self):
        expect = {
            "semantic_loss": ("boolean", "direct", "bernoulli", "counting"),
            "deepproblog_prop": ("boolean", "direct", "bernoulli", "counting"),
            "neurasp_prop": ("boolean", "direct", "bernoulli", "counting"),
            "nmln": ("boolean", "direct", "loglinear", "counting"),
            "ltn": ("lukasiewicz", "direct", "dirac", "dirac-collapse"),
            "sbr": ("lukasiewicz", "direct", "dirac", "dirac-collapse"),
            "neupsl": ("lukasiewicz", "direct", "loglinear", "quadrature(g=200)"),
        }
        for name, (sem, lf, bel, meas) in expect.items():
            q = ns.make_preset(name).quadruple()
            assert (q["semantics"], q["logic_fn"], q["belief"], q["measure"]) == (
                sem, lf, bel, meas
            )
        _report("preset-quadruple-echo")


class TestDeterminism:
    MC_MODEL = """
symbols { h: unit  c: unit  p: unit }
semantics lukasiewicz
belief loglinear { w1: 1.5 } over { "h -> (c | p)" }
measure montecarlo(n=4000, seed=7)
queries { q: "h -> (c | p)" }
"""
    COUNT_MODEL = """
symbols { h: bool  c: bool  p: bool }
semantics boolean
belief bernoulli { h: 0.8, c: 0.5, p: 0.5 }
measure counting
theory { happiness: "h -> (c | p)" }
queries { main: happiness, other: "h & c" given { p: 1 } }
"""

    def _run(self, path, *extra):
        return subprocess.run(
            [sys.executable, "-m", "nsinfer.cli", "--model", str(path), *extra],
            capture_output=True,
        )

    def test_byte_identical_json(self, tmp_path):
        mc = tmp_path / "mc.nsy"
        mc.write_text(self.MC_MODEL)
        count = tmp_path / "count.nsy"
        count.write_text(self.COUNT_MODEL)
        for path, extra in [
            (count, ()),
            (count, ("--query", "main", "--grad", "--backend", "circuit")),
            (mc, ()),
            (mc, ("--seed", "99")),
        ]:
            first = self._run(path, *extra)
            second = self._run(path, *extra)
            assert first.returncode == second.returncode == 0
            assert first.stdout == second.stdout
        doc = json.loads(self._run(mc).stdout)
        assert "std_error" in doc
        _report("cli-determinism")
