import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from config import Settings
from models.arith import CyclotomicTally
from models.characters import CharacterSystem
from models.forms import Polynomial
from models.sums import GaussSumReport, ThetaMode
from services.arith_service import ArithService
from services.errors import (
    CapacityExceeded,
    DomainError,
    FormSyntaxError,
    HomogeneityError,
    MultiGaussError,
    NotAUnit,
)
from services.expsum_service import MAX_SCAN_DRAWS
from services.grid import MAX_GRID_MODULUS, GridEngine, PowerTable, ResidueGrid


class TestArithService:
    def test_factorize(self, services):
        """Test factorization into sorted prime powers"""
        assert services.arith.factorize(360).pairs() == [(2, 3), (3, 2), (5, 1)]
        assert services.arith.factorize(1).pairs() == []
        assert services.arith.coprime_split(360) == [8, 9, 5]

    def test_factorize_rejects_nonpositive(self, services):
        """Test factorization needs a positive integer"""
        with pytest.raises(DomainError):
            services.arith.factorize(0)

    def test_phi(self, services):
        """Test Euler's totient on small values"""
        assert [services.arith.phi(n) for n in (1, 2, 9, 12, 15)] == [1, 1, 6, 4, 8]

    def test_phi_without_deprecation_warning(self, services):
        """Test the totient goes through the current sympy entry point"""
        with warnings.catch_warnings():
            warnings.simplefilter("error", DeprecationWarning)
            assert services.arith.phi(12) == 4
            assert services.arith.phi(97) == 96

    def test_unit_group_two_power(self, services):
        """Test (Z/8Z)^x uses -1 and 5 as generators"""
        group = services.arith.unit_group(8)

        assert group.generators == (7, 5)
        assert group.orders == (2, 2)

    def test_unit_group_crt_lift(self, services):
        """Test generators are lifted to be 1 on the other CRT components"""
        group = services.arith.unit_group(15)

        assert group.generators == (11, 7)
        assert group.orders == (2, 4)
        assert group.components == (3, 5)

    def test_discrete_log_inverts_exponentiate(self, services):
        """Test every unit is recovered from its exponent vector"""
        for q in (8, 9, 15, 16, 20):
            group = services.arith.unit_group(q)
            for u in range(q):
                if math.gcd(u, q) == 1:
                    assert services.arith.exponentiate(group, services.arith.discrete_log(group, u)) == u

    def test_discrete_log_above_table_limit(self, services):
        """Test the componentwise logarithm for a modulus without a table"""
        group = services.arith.unit_group(1000003)
        vector = services.arith.discrete_log(group, 12345)

        assert services.arith.exponentiate(group, vector) == 12345

    def test_discrete_log_of_non_unit(self, services):
        """Test non-units have no logarithm"""
        group = services.arith.unit_group(12)

        with pytest.raises(NotAUnit):
            services.arith.discrete_log(group, 6)

    def test_tally_convolve(self, services):
        """Test e(1/3) * e(1/2) = e(5/6)"""
        product = services.arith.tally_convolve(
            CyclotomicTally.from_exponents(3, [1]), CyclotomicTally.from_exponents(2, [1])
        )

        assert product.order == 6
        assert product.support() == [(5, 1)]

    def test_tally_convolve_cap(self):
        """Test convolution refuses orders above the tally cap"""
        arith = ArithService(Settings(tally_cap=5))

        with pytest.raises(CapacityExceeded):
            arith.tally_convolve(CyclotomicTally.one(3), CyclotomicTally.one(2))

    def test_tally_value(self, services):
        """Test e(1/4) = i"""
        value = services.arith.tally_value(CyclotomicTally.from_exponents(4, [1]))

        assert value == pytest.approx(1j)

    def test_tally_is_zero(self, services):
        """Test exact vanishing through cyclotomic divisibility"""
        arith = services.arith

        assert arith.tally_is_zero(CyclotomicTally.zero(5))
        assert arith.tally_is_zero(CyclotomicTally.from_exponents(3, [0, 1, 2]))
        # e(1/6) + e(1/2) + e(5/6) = 0 without equal counts
        assert arith.tally_is_zero(CyclotomicTally.from_exponents(6, [1, 3, 5]))
        assert arith.tally_is_zero(CyclotomicTally.from_exponents(4, [0, 2]))
        assert not arith.tally_is_zero(CyclotomicTally.from_exponents(4, [0, 1]))
        assert not arith.tally_is_zero(CyclotomicTally.one())

    def test_prime_list(self, services):
        """Test ranges and explicit lists of primes"""
        assert services.arith.prime_list("11..20") == [11, 13, 17, 19]
        assert services.arith.prime_list("5, 7") == [5, 7]
        with pytest.raises(DomainError):
            services.arith.prime_list("4,5")
        with pytest.raises(DomainError):
            services.arith.prime_list("a..b")


class TestCharacterService:
    def test_character_count(self, services):
        """Test there are phi(q) characters mod q"""
        for q in range(1, 31):
            assert len(services.characters.enumerate_characters(q)) == services.arith.phi(q)

    def test_eval_char(self, services):
        """Test chi(2) = e(1/4) for the character sending the generator 2 mod 5 to i"""
        chi = services.characters.parse_spec("5:1")

        assert services.characters.eval_char(chi, 2) == (1, 4)
        assert services.characters.eval_complex(chi, 2) == pytest.approx(1j)
        assert services.characters.eval_char(chi, 10) is None

    def test_parse_spec_errors(self, services):
        """Test malformed specs and wrong exponent counts"""
        with pytest.raises(DomainError):
            services.characters.parse_spec("5:1,2")
        with pytest.raises(DomainError):
            services.characters.parse_spec("x:1")

    def test_parse_spec_default_is_principal(self, services):
        """Test a spec without exponents is the principal character"""
        assert services.characters.parse_spec("12:").is_principal

    def test_conductor(self, services):
        """Test conductors of the characters mod 8"""
        characters = services.characters

        assert characters.conductor(characters.parse_spec("8:0,0")) == 1
        assert characters.conductor(characters.parse_spec("8:1,0")) == 4
        assert characters.is_primitive(characters.parse_spec("8:0,1"))
        assert characters.parity(characters.parse_spec("8:1,0")) == -1

    def test_conjugate_and_product(self, services):
        """Test chi * conj(chi) is principal"""
        chi = services.characters.parse_spec("5:1")
        conjugate = services.characters.conjugate(chi)

        assert conjugate.spec == "5:3"
        assert services.characters.product(chi, conjugate).is_principal

    def test_product_needs_one_modulus(self, services):
        """Test characters of different moduli are not multiplied directly"""
        with pytest.raises(MultiGaussError):
            services.characters.product(
                services.characters.parse_spec("5:1"), services.characters.parse_spec("3:1")
            )

    def test_induce_and_crt_component(self, services):
        """Test inducing a character mod 3 to 15 and splitting it back"""
        characters = services.characters
        induced = characters.induce(characters.parse_spec("3:1"), 15)

        assert induced.spec == "15:1,0"
        assert characters.crt_component(induced, 3).spec == "3:1"
        assert characters.crt_component(induced, 5).is_principal
        with pytest.raises(DomainError):
            characters.crt_component(induced, 4)

    def test_complete_multiplicativity(self, services):
        """Test chi(mn) = chi(m) chi(n) for every character and every pair of residues"""
        characters = services.characters
        for k in (8, 15):
            for chi in characters.enumerate_characters(k):
                for m, n in itertools.product(range(k), repeat=2):
                    left, right = characters.eval_char(chi, m), characters.eval_char(chi, n)
                    product = characters.eval_char(chi, m * n)
                    if left is None or right is None:
                        assert product is None
                        continue
                    assert (Fraction(*left) + Fraction(*right) - Fraction(*product)) % 1 == 0

    def test_dual_orthogonality(self, services):
        """Test the sum over characters of chi(u) is phi(k) at u = 1 and zero elsewhere"""
        characters = services.characters
        for k in (8, 12, 15):
            table = characters.enumerate_characters(k)
            for u in range(k):
                total = sum(characters.eval_complex(chi, u) for chi in table)
                expected = services.arith.phi(k) if u == 1 else 0
                assert total == pytest.approx(expected, abs=1e-9)

    def test_induce_keeps_values_on_units(self, services):
        """Test an induced character agrees on units and vanishes off them"""
        characters = services.characters
        for spec, q in (("3:1", 15), ("4:1", 20), ("5:1", 10)):
            chi = characters.parse_spec(spec)
            induced = characters.induce(chi, q)
            for n in range(2 * q):
                if math.gcd(n, q) == 1:
                    assert characters.eval_complex(induced, n) == pytest.approx(characters.eval_complex(chi, n))
                else:
                    assert characters.eval_char(induced, n) is None

    def test_character_sum_tally(self, services):
        """Test orthogonality of character sums"""
        characters = services.characters

        principal = characters.character_sum_tally(characters.principal(12))
        assert principal.same_as(CyclotomicTally.one().scale(4))
        assert services.arith.tally_is_zero(characters.character_sum_tally(characters.parse_spec("7:1")))

    def test_metadata(self, services):
        """Test character metadata fields"""
        row = services.characters.metadata(services.characters.parse_spec("4:1"))

        assert row == {
            "spec": "4:1",
            "order": 2,
            "conductor": 4,
            "primitive": True,
            "parity": -1,
            "principal": False,
        }


class TestFormService:
    def test_parse_polynomial(self, services):
        """Test parsing normalises coefficients and monomials"""
        poly = services.forms.parse_polynomial("x1^2 - 3*x1*x2 + 5")

        assert poly.to_text() == "x1^2 - 3*x1*x2 + 5"
        assert services.forms.parse_polynomial("x1*x1").to_text() == "x1^2"
        assert services.forms.parse_polynomial("2*x1 + 3*x1").to_text() == "5*x1"

    def test_parse_system(self, services):
        """Test systems share one variable count"""
        system = services.forms.parse_system("x1^2 + x2^2; x1*x3")

        assert system.s == 3
        assert system.R == 2
        assert system.degrees == (2, 2)

    def test_parse_errors(self, services):
        """Test syntax and homogeneity errors"""
        forms = services.forms

        with pytest.raises(HomogeneityError):
            forms.parse_system("x1^2 + x2")
        with pytest.raises(FormSyntaxError):
            forms.parse_system("x1 +")
        with pytest.raises(FormSyntaxError):
            forms.parse_system("x0^2")
        with pytest.raises(FormSyntaxError):
            forms.parse_system("x1 + y")
        with pytest.raises(FormSyntaxError):
            forms.parse_system("x1;")
        with pytest.raises(DomainError):
            forms.parse_polynomial("x3", 2)

    def test_eval_mod(self, services):
        """Test evaluation modulo q"""
        poly = services.forms.parse_polynomial("x1^2 + 3*x2")

        assert services.forms.eval_mod(poly, (4, 5), 7) == (16 + 15) % 7

    def test_partial_and_euler(self, services):
        """Test derivatives and Euler's identity"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^2 + x1*x2"))
        partial = services.forms.partial(form, 0)

        assert partial.to_text() == "2*x1 + x2"
        assert partial.degree == 1
        assert services.forms.euler_identity_holds(form)

    def test_jacobian_shape(self, services):
        """Test the Jacobian has R rows and k columns"""
        system = services.forms.parse_system("x1^2 + x2^2 + x3^2; x1*x2")

        assert len(services.forms.jacobian(system)) == 2
        assert len(services.forms.jacobian(system, 2)[0]) == 2
        with pytest.raises(DomainError):
            services.forms.jacobian(system, 4)

    def test_bihomogenize(self, services):
        """Test G(x; y) = F(x1 y1, ..., xs ys)"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1*x2"))
        bihomogeneous = services.forms.bihomogenize(form)

        assert bihomogeneous.s == 4
        assert bihomogeneous.degree == 4
        assert bihomogeneous.as_mapping() == {(1, 1, 1, 1): 1}
        assert services.forms.dehomogenize_y(bihomogeneous) == form

    def test_quadruple_difference(self, services):
        """Test the difference form vanishes on the diagonal blocks"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^2"))
        difference = services.forms.quadruple_difference(form)

        assert difference.s == 4
        assert difference.as_mapping() == {
            (2, 0, 2, 0): 1,
            (2, 0, 0, 2): -1,
            (0, 2, 2, 0): -1,
            (0, 2, 0, 2): 1,
        }

    def test_random_form(self, services):
        """Test random forms are nonzero and homogeneous of the requested degree"""
        rng = np.random.default_rng(0)
        for degree in (1, 2, 3):
            form = services.forms.random_form(rng, 3, degree)
            assert not form.is_zero
            assert all(term.degree == degree for term in form.terms)

    def test_json_round_trip(self, services):
        """Test systems survive JSON encoding"""
        system = services.forms.parse_system("x1^2 - 2*x2^2; x1*x2")

        assert services.forms.from_json(services.forms.to_json(system)) == system

    def test_empty_system_rejected(self, services):
        """Test a system needs at least one form and one variable"""
        with pytest.raises(ValueError):
            services.forms.from_json('{"s": 1, "forms": []}')
        with pytest.raises(DomainError):
            services.forms.system(())

    def test_quadruple_difference_is_linear(self, services):
        """Test the difference of 2F + G is twice that of F plus that of G"""
        forms = services.forms
        f = forms.as_form(forms.parse_polynomial("x1^2 + x1*x2"))
        g = forms.as_form(forms.parse_polynomial("x2^2 - x1*x2"))
        combined = forms.as_form(forms.parse_polynomial("2*x1^2 + x1*x2 + x2^2"))

        expected: dict = {}
        for form, factor in ((f, 2), (g, 1)):
            for exps, coeff in forms.quadruple_difference(form).as_mapping().items():
                expected[exps] = expected.get(exps, 0) + factor * coeff
        expected = {exps: coeff for exps, coeff in expected.items() if coeff}

        assert forms.quadruple_difference(combined).as_mapping() == expected

    def test_quadruple_difference_values(self, services):
        """Test L(h, h', j, j') against four evaluations of F at coordinatewise products"""
        forms = services.forms
        form = forms.as_form(forms.parse_polynomial("x1^3 - 2*x1*x2^2 + 5*x2^3"))
        difference = forms.quadruple_difference(form)
        q = 1_000_000_007
        rng = np.random.default_rng(5)

        for _ in range(1000):
            h, h2, j, j2 = (tuple(int(v) for v in rng.integers(-50, 50, 2)) for _ in range(4))

            def at(x, y):
                return forms.eval_mod(form, tuple(a * b for a, b in zip(x, y)), q)

            expected = (at(h, j) - at(h, j2) - at(h2, j) + at(h2, j2)) % q
            assert forms.eval_mod(difference, h + h2 + j + j2, q) == expected


class TestGridEngine:
    def test_power_table_evaluate(self):
        """Test vectorised evaluation modulo q"""
        powers = PowerTable(7, 3)
        poly = Polynomial.from_mapping(2, {(2, 0): 1, (0, 1): 3})
        points = np.array([[4, 5], [6, 6], [0, 1]])

        assert powers.evaluate(poly, points).tolist() == [(16 + 15) % 7, (36 + 18) % 7, 3]

    def test_power_table_modulus_cap(self):
        """Test residues must stay within int64 products"""
        with pytest.raises(CapacityExceeded):
            PowerTable(MAX_GRID_MODULUS + 1, 2)

    def test_grid_order(self):
        """Test the last axis varies fastest"""
        grid = ResidueGrid.full(3, 2)

        assert grid.size == 9
        assert grid.block(0, 9).tolist() == [list(point) for point in itertools.product(range(3), repeat=2)]

    def test_chunks(self, settings):
        """Test chunk boundaries depend only on the chunk size"""
        engine = GridEngine(settings)

        assert engine.chunks(10, 4) == [(0, 4), (4, 8), (8, 10)]

    def test_reduce_independent_of_workers(self):
        """Test threaded reductions give the same result"""
        work = lambda start, stop: sum(range(start, stop))  # noqa: E731
        single = GridEngine(Settings(workers=1, chunk_size=7)).reduce(100, work, lambda x, y: x + y, 0)
        pooled = GridEngine(Settings(workers=4, chunk_size=7)).reduce(100, work, lambda x, y: x + y, 0)

        assert single == pooled == sum(range(100))

    def test_require(self):
        """Test the work cap"""
        engine = GridEngine(Settings(work_cap=10))

        engine.require("grid", 10)
        with pytest.raises(CapacityExceeded):
            engine.require("grid", 11)


class TestExpSumService:
    def test_gauss_sum_of_linear_form(self, services):
        """Test C_{x1}(3, 1; chi0 mod 3) = e(1/3) + e(2/3) = -1"""
        report = services.expsums.gauss_sum(services.instance("x1", 3, None, ["3:0"]))

        assert report.value == pytest.approx(-1)
        assert report.tally is not None
        assert services.arith.tally_value(report.tally) == pytest.approx(-1)

    def test_methods_agree(self, services):
        """Test factored, CRT and brute-force tallies coincide"""
        inst = services.instance("x1^2 + x1*x2; x2^3", 12, (1, 5), ["12:1,1", "12:0,1"])
        factored = services.expsums.gauss_sum(inst)
        crt = services.expsums.gauss_sum_crt(inst)
        brute = services.expsums.gauss_sum_bruteforce(inst)

        assert factored.tally.same_as(brute.tally)
        assert crt.tally.same_as(brute.tally)

    def test_variable_blocks(self, services):
        """Test variables split into independent blocks"""
        system = services.forms.parse_system("x1*x2 + x3^2")

        assert services.expsums.variable_blocks(system, (1,), 5) == [(0, 1), (2,)]

    def test_quadratic_complete_sums(self, services):
        """Test |E_{x^2}(p)| = p^(-1/2) for odd primes"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^2"))
        for p in (3, 5, 7, 11, 13):
            assert abs(services.expsums.normalized_complete_sum(form, p)) == pytest.approx(p**-0.5, rel=1e-12)

    def test_cubic_sum_vanishes_exactly(self, services):
        """Test x -> x^3 permutes F_p when p = 2 mod 3"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^3"))

        assert services.expsums.is_zero(services.expsums.complete_sum_report(form, 5))
        assert not services.expsums.is_zero(services.expsums.complete_sum_report(form, 7))

    def test_complete_sum_needs_unit(self, services):
        """Test E_F(q) needs u coprime to q"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^2"))

        with pytest.raises(DomainError):
            services.expsums.normalized_complete_sum(form, 9, 3)

    def test_nu_of_linear_form(self, services):
        """Test nu(p) = -(p - 1) for F = x1 with principal characters"""
        system = services.forms.parse_system("x1")
        chars = services.characters.principal_system(1, 5)

        for method in ("histogram", "direct"):
            assert services.expsums.nu_sum(system, 5, chars, method) == pytest.approx(-4)
        with pytest.raises(DomainError):
            services.expsums.nu_tally(system, 5, chars, "fourier")

    def test_primitive_weights(self, services):
        """Test the Ramanujan-type weights for R = 1"""
        weights = services.expsums.primitive_weights(5, 1)

        assert weights[5] == 4
        assert weights[1] == -1

    def test_cauchy_check_linear(self, services):
        """Test lhs = |C|^4 = 1 and the quadruple sum 2 * 3^2 = 18"""
        check = services.expsums.cauchy_fourth_check(services.instance("x1", 3, None, ["3:0"]), literal=True)

        assert check.lhs == pytest.approx(1)
        assert check.rhs == pytest.approx(18)
        assert check.ok
        assert check.details["literal_agrees"]

    def test_theta(self, services):
        """Test both theta conventions"""
        assert services.expsums.theta(2) == pytest.approx(0.5)
        assert services.expsums.theta(4) == pytest.approx(1 / 6)
        assert services.expsums.theta(4, ThetaMode.IGUSA) == pytest.approx(0.25)
        with pytest.raises(DomainError):
            services.expsums.theta(1)

    def test_theoretical_exponent(self, services):
        """Test s - Theta_4 (s - dim V*) / (4 (r_d + 1)) for one quadratic"""
        system = services.forms.parse_system("x1^2")

        exponent = services.expsums.theoretical_exponent(system, (1,), 11, 0, ThetaMode.UNCONDITIONAL)
        assert exponent == pytest.approx(1 - 1 / 48)

    def test_exponent_report(self, services):
        """Test the empirical exponent stays under the bound"""
        report = services.expsums.exponent_report(services.instance("x1^2", 11, None, ["11:0"]), 0)

        # |sum over units of e(x^2/11)| = |i sqrt(11) - 1| = sqrt(12)
        assert report.magnitude == pytest.approx(math.sqrt(12))
        assert report.empirical_exponent < report.theoretical_exponent
        assert report.bound_ok

    def test_exponent_report_of_zero_sum(self, services):
        """Test an exact zero gets exponent -inf"""
        report = services.expsums.exponent_report(services.instance("x1^3", 5), 0)

        assert report.empirical_exponent == -math.inf
        assert report.bound_ok

    def test_exponent_report_needs_primitive_a(self, services):
        """Test gcd(a, q) = 1 is required"""
        with pytest.raises(DomainError):
            services.expsums.exponent_report(services.instance("x1^2", 11, (11,)), 0)

    def test_cochrane_zheng(self, services):
        """Test the bound for a Gauss sum mod 5"""
        f = services.forms.parse_polynomial("x1", 1)
        check = services.expsums.cochrane_zheng_check(f, 5, 1, 1, services.characters.parse_spec("5:1"))

        assert check.lhs == pytest.approx(math.sqrt(5))
        assert check.ok
        with pytest.raises(DomainError):
            services.expsums.cochrane_zheng_check(f, 4, 1, 1, services.characters.principal(4))

    def test_cochrane_zheng_degree_mod_p(self, services):
        """Test d counts only terms that survive reduction mod p"""
        expsums, characters = services.expsums, services.characters
        check = expsums.cochrane_zheng_check(
            services.forms.parse_polynomial("5*x1^3 + x1", 1), 5, 1, 1, characters.principal(5)
        )

        assert check.details["d"] == 1
        assert check.rhs == pytest.approx(4 * 5**0.5)
        with pytest.raises(DomainError):
            expsums.cochrane_zheng_check(services.forms.parse_polynomial("5*x1^2", 1), 5, 1, 1, characters.principal(5))

    def test_vinogradov(self, services):
        """Test |sum chi(x) e(a x^2 / p)| <= 2 sqrt(p)"""
        check = services.expsums.vinogradov_check(2, 7, 1, services.characters.parse_spec("7:1"))

        assert check.ok
        assert check.details["applicable"]

    def test_nguyen_slope(self, services):
        """Test the slope of log |E_{x^2}(p)| is exactly -1/2"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^2"))
        fit = services.expsums.nguyen_slope(form, [11, 13, 17, 19])

        assert fit.slope == pytest.approx(-0.5, abs=1e-9)
        assert services.expsums.nguyen_check(form, [11, 13, 17, 19]).ok

    def test_nguyen_slope_skips_zero_sums(self, services):
        """Test vanishing cubic sums leave too few points"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^3"))

        with pytest.raises(DomainError):
            services.expsums.nguyen_slope(form, [5, 11, 17])

    def test_exponent_scan_rows(self, services):
        """Test one flat row per prime"""
        system = services.forms.parse_system("x1^2 + x2^2")
        rows = services.expsums.exponent_scan(system, [11, 13], 0, random_characters=True)

        assert [row["q"] for row in rows] == [11, 13]
        assert {"a1", "chi1", "chi2", "emp_exponent", "theo_exponent", "ok", "draws"} <= set(rows[0])

    def test_exponent_scan_redraws_vanishing_sums(self, services):
        """Test a row is -inf only when its sum is exactly zero after every draw was spent"""
        text = "x1^2 + 2*x2^2"
        rows = services.expsums.exponent_scan(
            services.forms.parse_system(text), [73, 79], 0, seed=3, random_characters=True
        )

        for row in rows:
            assert 1 <= row["draws"] <= MAX_SCAN_DRAWS
            inst = services.instance(text, row["q"], (row["a1"],), [row["chi1"], row["chi2"]])
            exact_zero = services.arith.tally_is_zero(services.expsums.gauss_sum(inst).tally)
            assert (row["emp_exponent"] == -math.inf) == exact_zero
            if exact_zero:
                assert row["draws"] == MAX_SCAN_DRAWS

    def test_is_zero_trusts_the_tally(self, services):
        """Test a float residue above the magnitude threshold does not hide an exact zero"""
        vanishing = CyclotomicTally.from_exponents(3, [0, 1, 2], weights=[10**6] * 3)
        residue = GaussSumReport(q=3, value=3e-9 + 0j, magnitude=3e-9, tally=vanishing)
        complex_only = GaussSumReport(q=3, value=3e-9 + 0j, magnitude=3e-9)
        nonzero = GaussSumReport(q=3, value=1e-10 + 0j, magnitude=1e-10, tally=CyclotomicTally.one())

        assert services.expsums.is_zero(residue)
        assert not services.expsums.is_zero(complex_only)
        assert not services.expsums.is_zero(nonzero)

    def test_is_zero_agrees_with_tally_for_random_characters(self, services):
        """Test is_zero matches the exact tally test for a diagonal quartic system at larger primes"""
        system = services.forms.parse_system("x1^2 + 2*x2^2 + 3*x3^2 + x4^2")
        rng = np.random.default_rng(3)

        for p in (73, 79):
            for _ in range(2):
                chars = tuple(services.characters.random_character(p, rng) for _ in range(system.s))
                a = (int(rng.integers(1, p)),)
                inst = services.instance("x1^2 + 2*x2^2 + 3*x3^2 + x4^2", p, a, [chi.spec for chi in chars])
                report = services.expsums.gauss_sum(inst)

                assert services.expsums.is_zero(report) == services.arith.tally_is_zero(report.tally)

    def test_conjugation_symmetry(self, services):
        """Test C(q, -a; conj chi) is the conjugate of C(q, a; chi) at tally level"""
        characters = services.characters
        text, specs = "x1^2 + x1*x2; x2^3", ["12:1,1", "12:0,1"]
        conjugates = [characters.conjugate(characters.parse_spec(spec)).spec for spec in specs]

        report = services.expsums.gauss_sum(services.instance(text, 12, (1, 5), specs))
        mirrored = services.expsums.gauss_sum(services.instance(text, 12, (11, 7), conjugates))

        assert mirrored.tally.same_as(report.tally.negate_exponents())
        assert mirrored.value == pytest.approx(report.value.conjugate())

    def test_nu_multiplicative_tallies(self, services):
        """Test nu(15) is the product of nu(3) and nu(5) with the CRT components of the characters"""
        characters = services.characters
        system = services.forms.parse_system("x1^2 + x2^3")
        chars = (characters.parse_spec("15:1,2"), characters.parse_spec("15:0,1"))

        whole = services.expsums.nu_tally(system, 15, CharacterSystem(chars=chars, modulus=15), "histogram")
        parts = [
            services.expsums.nu_tally(
                system,
                d,
                CharacterSystem(chars=tuple(characters.crt_component(chi, d) for chi in chars), modulus=d),
                "histogram",
            )
            for d in (3, 5)
        ]

        assert whole.same_as(services.arith.tally_convolve(*parts))

    def test_nguyen_slope_needs_unit(self, services):
        """Test an exponent sharing a factor with one of the primes is refused"""
        form = services.forms.as_form(services.forms.parse_polynomial("x1^2"))

        with pytest.raises(DomainError):
            services.expsums.nguyen_slope(form, [11, 13], u=11)

    def test_work_cap(self, small_cap_services):
        """Test brute force refuses grids above the cap"""
        inst = small_cap_services.instance("x1^2 + x2^2 + x3^2", 11)

        with pytest.raises(CapacityExceeded):
            small_cap_services.expsums.gauss_sum_bruteforce(inst)

    def test_complex_fallback_above_tally_cap(self, small_cap_services):
        """Test sums fall back to complex accumulation above the tally cap"""
        report = small_cap_services.expsums.gauss_sum(small_cap_services.instance("x1^2", 101))

        assert report.tally is None
        assert "complex_only" in report.diagnostics
        assert report.magnitude == pytest.approx(math.sqrt(101))
