"""Gradient families against central finite differences."""

import math
import random

import pytest

import nsinfer as ns
from generators import bool_symbols, random_atom_formula, random_probs, unit_symbols

BOOL_SEM = ns.BooleanSem()
FD_H = 1e-5


def fd_wmc(f, syms, probs, name, h=FD_H):
    hi = dict(probs)
    lo = dict(probs)
    hi[name] += h
    lo[name] -= h
    c = ns.compile_formula(f, syms)
    return (
        ns.wmc_eval(c, ns.IndependentBernoulli(hi))
        - ns.wmc_eval(c, ns.IndependentBernoulli(lo))
    ) / (2 * h)


class TestGradWmc:
    def test_single_atom(self):
        syms = bool_symbols(1)
        b = ns.IndependentBernoulli({"x0": 0.3})
        g = ns.grad_wmc(ns.compile_formula(ns.AtomRef(syms[0])), b)
        assert g.value == pytest.approx(0.3, abs=0)
        assert g.grad == (1.0,)

    def test_main_formula_at_uniform(self):
        syms = ns.make_symbols([("h", ns.BOOL), ("c", ns.BOOL), ("p", ns.BOOL)])
        f = ns.parse_formula("h -> (c | p)", syms)
        b = ns.IndependentBernoulli({"h": 0.5, "c": 0.5, "p": 0.5})
        g = ns.grad_wmc(ns.compile_formula(f), b)
        # F = 1 - p_h (1 - p_c)(1 - p_p), differentiated by hand
        assert g.value == pytest.approx(0.875, abs=1e-15)
        assert g.grad[0] == pytest.approx(-0.25, abs=1e-12)
        assert g.grad[1] == pytest.approx(0.25, abs=1e-12)
        assert g.grad[2] == pytest.approx(0.25, abs=1e-12)
        for name, got in zip(g.params, g.grad):
            assert got == pytest.approx(
                fd_wmc(f, syms, {"h": 0.5, "c": 0.5, "p": 0.5}, name), abs=1e-5
            )

    def test_const_true_has_zero_gradient(self):
        b = ns.IndependentBernoulli({"a": 0.4})
        g = ns.grad_wmc(ns.compile_formula(ns.ConstTrue()), b)
        assert g.value == 1.0
        assert g.grad == (0.0,)

    def test_finite_difference_agreement(self):
        rng = random.Random(1717)
        for _ in range(60):
            syms = bool_symbols(rng.randint(1, 7))
            f = random_atom_formula(rng, syms, rng.randint(1, 6))
            probs = random_probs(rng, syms, 0.1, 0.9)
            g = ns.grad_wmc(ns.compile_formula(f, syms), ns.IndependentBernoulli(probs))
            for name, got in zip(g.params, g.grad):
                assert got == pytest.approx(fd_wmc(f, syms, probs, name), abs=1e-5)

    def test_multilinearity_second_differences_vanish(self):
        rng = random.Random(1818)
        for _ in range(20):
            syms = bool_symbols(rng.randint(2, 6))
            f = random_atom_formula(rng, syms, 5)
            probs = random_probs(rng, syms, 0.2, 0.8)
            c = ns.compile_formula(f, syms)
            name = rng.choice(syms).name
            h = 0.05
            hi, mid, lo = dict(probs), dict(probs), dict(probs)
            hi[name] += h
            lo[name] -= h
            second = (
                ns.wmc_eval(c, ns.IndependentBernoulli(hi))
                - 2 * ns.wmc_eval(c, ns.IndependentBernoulli(mid))
                + ns.wmc_eval(c, ns.IndependentBernoulli(lo))
            )
            assert abs(second) <= 1e-9

    def test_complement_gradients_cancel(self):
        rng = random.Random(1919)
        for _ in range(25):
            syms = bool_symbols(rng.randint(1, 6))
            f = random_atom_formula(rng, syms, 5)
            probs = random_probs(rng, syms, 0.1, 0.9)
            b = ns.IndependentBernoulli(probs)
            g1 = ns.grad_wmc(ns.compile_formula(f, syms), b)
            g2 = ns.grad_wmc(ns.compile_formula(ns.Not(f), syms), b)
            for a, c in zip(g1.grad, g2.grad):
                assert abs(a + c) <= 1e-10


class TestGradLogLinear:
    def make_belief(self, syms, theory, lams, measure=ns.Counting()):
        return ns.LogLinear(ns.Theory(theory), tuple(lams), BOOL_SEM, measure, syms)

    def test_uniform_weights_identity(self):
        syms = ns.make_symbols([("h", ns.BOOL), ("c", ns.BOOL), ("p", ns.BOOL)])
        f = ns.parse_formula("h -> (c | p)", syms)
        g = ns.grad_loglinear(self.make_belief(syms, [f], [0.0]), f)
        # E[phi | phi] - E[phi] = 1 - 7/8 at uniform weights
        assert g.value == pytest.approx(7 / 8, abs=1e-12)
        assert g.grad[0] == pytest.approx(0.125, abs=1e-12)

    def test_query_const_true_gives_zero_gradient(self):
        syms = bool_symbols(3)
        f = ns.parse_formula("x0 | x1", syms)
        g = ns.grad_loglinear(self.make_belief(syms, [f], [0.7]), ns.ConstTrue())
        assert g.value == pytest.approx(1.0, abs=1e-12)
        assert g.grad[0] == pytest.approx(0.0, abs=1e-12)

    def test_tautological_features_give_zero_gradient(self):
        syms = bool_symbols(2)
        f = ns.parse_formula("x0 -> x0", syms)
        q = ns.parse_formula("x0 & x1", syms)
        g = ns.grad_loglinear(self.make_belief(syms, [f], [2.0]), q)
        assert g.grad[0] == pytest.approx(0.0, abs=1e-12)

    def test_zero_selected_mass_raises(self):
        syms = bool_symbols(2)
        f = ns.AtomRef(syms[0])
        with pytest.raises(ns.GradientUndefinedError):
            ns.grad_loglinear(self.make_belief(syms, [f], [1.0]), ns.ConstFalse())

    def test_finite_difference_agreement_exact(self):
        rng = random.Random(2020)
        for _ in range(40):
            syms = bool_symbols(rng.randint(2, 6))
            n_formulas = rng.randint(1, 3)
            theory = [random_atom_formula(rng, syms, 4) for _ in range(n_formulas)]
            lams = [rng.uniform(-2, 2) for _ in range(n_formulas)]
            query = random_atom_formula(rng, syms, 4)
            b = self.make_belief(syms, theory, lams)
            try:
                g = ns.grad_loglinear(b, query)
            except ns.GradientUndefinedError:
                continue
            for i in range(n_formulas):
                up = list(lams)
                dn = list(lams)
                up[i] += FD_H
                dn[i] -= FD_H
                f_up = ns.grad_loglinear(self.make_belief(syms, theory, up), query).value
                f_dn = ns.grad_loglinear(self.make_belief(syms, theory, dn), query).value
                fd = (math.log(f_up) - math.log(f_dn)) / (2 * FD_H)
                assert g.grad[i] == pytest.approx(fd, abs=1e-5)

    def test_quadrature_base_agrees_with_finite_differences(self):
        syms = unit_symbols(2)
        luk = ns.FuzzySem(ns.LUKASIEWICZ)
        theory = [ns.parse_formula("u0 -> u1", syms)]
        query = ns.parse_formula("u0 & u1", syms)

        def make(lams):
            return ns.LogLinear(
                ns.Theory(theory), tuple(lams), luk, ns.BorelQuadrature(300), syms
            )

        g = ns.grad_loglinear(make([0.8]), query)
        f_up = ns.grad_loglinear(make([0.8 + FD_H]), query).value
        f_dn = ns.grad_loglinear(make([0.8 - FD_H]), query).value
        fd = (math.log(f_up) - math.log(f_dn)) / (2 * FD_H)
        assert g.grad[0] == pytest.approx(fd, abs=1e-5)

    def test_monte_carlo_within_four_standard_errors(self):
        syms = unit_symbols(2)
        luk = ns.FuzzySem(ns.LUKASIEWICZ)
        theory = [ns.parse_formula("u0 | u1", syms)]
        query = ns.parse_formula("u0 -> u1", syms)
        exact = ns.grad_loglinear(
            ns.LogLinear(ns.Theory(theory), (1.1,), luk, ns.BorelQuadrature(500), syms),
            query,
        )
        mc = ns.grad_loglinear(
            ns.LogLinear(ns.Theory(theory), (1.1,), luk, ns.BorelMonteCarlo(30000, 21), syms),
            query,
        )
        assert mc.grad_std_error is not None
        assert abs(mc.grad[0] - exact.grad[0]) <= 4 * mc.grad_std_error[0]
        assert abs(mc.value - exact.value) <= 0.02


class TestGradDirac:
    def test_single_atom(self):
        syms = unit_symbols(1)
        point = ns.Interpretation(syms, (0.42,))
        g = ns.grad_dirac(ns.AtomRef(syms[0]), ns.LUKASIEWICZ, point)
        assert g.value == 0.42
        assert g.grad == (1.0,)
        assert g.flags == ()

    def test_main_formula_interior_point(self):
        syms = ns.make_symbols([("h", ns.UNIT), ("c", ns.UNIT), ("p", ns.UNIT)])
        f = ns.parse_formula("h -> (c | p)", syms)
        point = ns.Interpretation.from_dict(syms, {"h": 1.0, "c": 0.3, "p": 0.4})
        g = ns.grad_dirac(f, ns.LUKASIEWICZ, point)
        assert g.value == pytest.approx(0.7, abs=1e-15)
        assert g.grad == (-1.0, 1.0, 1.0)
        assert g.flags == ()

    def test_tie_is_flagged(self):
        syms = unit_symbols(2)
        f = ns.parse_formula("u0 & u1", syms)
        point = ns.Interpretation(syms, (0.5, 0.5))  # u0 + u1 - 1 == 0
        g = ns.grad_dirac(f, ns.LUKASIEWICZ, point)
        assert "and-tie" in g.flags
        assert g.grad == (0.0, 0.0)  # left branch of max(0, .) is the constant

    def test_goedel_negation_discontinuity_flagged(self):
        syms = unit_symbols(1)
        point = ns.Interpretation(syms, (0.0,))
        g = ns.grad_dirac(ns.Not(ns.AtomRef(syms[0])), ns.GOEDEL, point)
        assert "goedel-not-discontinuity" in g.flags

    def test_value_matches_evaluate_bitwise(self):
        rng = random.Random(2121)
        syms = unit_symbols(4)
        for t in (ns.LUKASIEWICZ, ns.GOEDEL, ns.PRODUCT):
            sem = ns.FuzzySem(t)
            for _ in range(50):
                f = random_atom_formula(rng, syms, 5)
                point = ns.Interpretation(syms, [rng.random() for _ in syms])
                g = ns.grad_dirac(f, t, point)
                assert g.value == ns.evaluate(sem, f, point)

    @pytest.mark.parametrize("t", [ns.LUKASIEWICZ, ns.PRODUCT])
    def test_finite_difference_agreement_away_from_kinks(self, t):
        """Unflagged points must match central differences; a stencil that
        straddles a kink (the formula is piecewise) is detected by comparing
        two step sizes and skipped."""
        rng = random.Random(2222)
        sem = ns.FuzzySem(t)
        syms = unit_symbols(3)
        checked = 0
        for _ in range(400):
            if checked >= 40:
                break
            f = random_atom_formula(rng, syms, 4)
            point_vals = [rng.uniform(0.05, 0.95) for _ in syms]
            point = ns.Interpretation(syms, point_vals)
            g = ns.grad_dirac(f, t, point)
            if g.flags:
                continue

            def fd(j, h):
                up = list(point_vals)
                dn = list(point_vals)
                up[j] += h
                dn[j] -= h
                return (
                    ns.evaluate(sem, f, ns.Interpretation(syms, up))
                    - ns.evaluate(sem, f, ns.Interpretation(syms, dn))
                ) / (2 * h)

            straddles = any(
                abs(fd(j, 1e-6) - fd(j, 5e-7)) > 1e-7 for j in range(len(syms))
            )
            if straddles:
                continue
            for j in range(len(syms)):
                assert g.grad[j] == pytest.approx(fd(j, 1e-6), abs=1e-6)
            checked += 1
        assert checked >= 40
