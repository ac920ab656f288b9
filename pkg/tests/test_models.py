from fractions import Fraction

import numpy as np
import pytest

from models.arith import CyclotomicTally, Factorization, PrimePower, UnitGroup
from models.characters import CharacterSystem, DirichletCharacter
from models.circle import BoxSpec
from models.forms import Form, FormSystem, Polynomial, Term
from models.geometry import DimEstimate, VarietySpec
from models.sums import GaussSumInstance
from models.verification import CriterionResult, SuiteLevel, SuiteReport


class TestArithModels:
    def test_factorization_product(self):
        """Test factorization checks that the factors multiply to n"""
        factorization = Factorization(n=12, factors=(PrimePower(p=2, e=2), PrimePower(p=3, e=1)))

        assert factorization.pairs() == [(2, 2), (3, 1)]
        assert factorization.prime_powers() == [4, 3]

        with pytest.raises(ValueError):
            Factorization(n=13, factors=(PrimePower(p=2, e=2), PrimePower(p=3, e=1)))

    def test_factorization_rejects_unsorted_primes(self):
        """Test primes must be distinct and increasing"""
        with pytest.raises(ValueError):
            Factorization(n=12, factors=(PrimePower(p=3, e=1), PrimePower(p=2, e=2)))

    def test_unit_group_order_and_exponent(self):
        """Test (Z/8Z)^x = C2 x C2 has order 4 and exponent 2"""
        group = UnitGroup(modulus=8, generators=(7, 5), orders=(2, 2), components=(8, 8))

        assert group.order == 4
        assert group.exponent == 2
        assert group.rank() == 2


class TestCyclotomicTally:
    def test_from_exponents_counts(self):
        """Test exponents are binned modulo the order"""
        tally = CyclotomicTally.from_exponents(4, [0, 1, 5, 3])

        assert tally.counts.tolist() == [1, 2, 0, 1]
        assert tally.terms() == 4
        assert tally.support() == [(0, 1), (1, 2), (3, 1)]

    def test_rescale_keeps_value(self):
        """Test rescaling spreads counts over a multiple of the order"""
        tally = CyclotomicTally.from_exponents(4, [0, 1, 1, 3])
        rescaled = tally.rescale(8)

        assert rescaled.counts.tolist() == [1, 0, 2, 0, 0, 0, 1, 0]
        assert rescaled.same_as(tally)
        with pytest.raises(ValueError):
            tally.rescale(6)

    def test_negate_exponents(self):
        """Test the conjugate tally maps m to -m"""
        tally = CyclotomicTally.from_exponents(4, [0, 1, 1, 3])

        assert tally.negate_exponents().counts.tolist() == [1, 1, 0, 2]

    def test_merge_unifies_orders(self):
        """Test merging tallies of orders 2 and 3 lands on order 6"""
        merged = CyclotomicTally.one(2).merge(CyclotomicTally.one(3))

        assert merged.order == 6
        assert merged.counts[0] == 2

    def test_counts_are_read_only(self):
        """Test tallies cannot be mutated in place"""
        tally = CyclotomicTally.one(3)

        with pytest.raises(ValueError):
            tally.counts[0] = 5

    def test_length_must_match_order(self):
        """Test a tally needs exactly one count per root of unity"""
        with pytest.raises(ValueError):
            CyclotomicTally(order=3, counts=np.zeros(4))


class TestCharacterModels:
    def test_exponents_reduced(self):
        """Test exponents are reduced modulo the generator orders"""
        chi = DirichletCharacter(modulus=5, exponents=(5,), orders=(4,))

        assert chi.exponents == (1,)
        assert chi.spec == "5:1"

    def test_value_order(self):
        """Test the order of chi in the character group"""
        chi = DirichletCharacter(modulus=5, exponents=(2,), orders=(4,))

        assert chi.value_order == 2
        assert not chi.is_principal

    def test_shape_mismatch(self):
        """Test one exponent per generator is required"""
        with pytest.raises(ValueError):
            DirichletCharacter(modulus=8, exponents=(1,), orders=(2, 2))

    def test_system_moduli_must_divide(self):
        """Test every character modulus must divide the system modulus"""
        chi = DirichletCharacter(modulus=5, exponents=(1,), orders=(4,))

        assert CharacterSystem(chars=(chi,), modulus=10).moduli == (5,)
        with pytest.raises(ValueError):
            CharacterSystem(chars=(chi,), modulus=12)


class TestFormModels:
    def test_polynomial_text(self):
        """Test polynomials print with signs and exponents"""
        poly = Polynomial.from_mapping(2, {(2, 0): 1, (1, 1): -3, (0, 0): 5})

        assert poly.to_text() == "x1^2 - 3*x1*x2 + 5"
        assert poly.total_degree == 2
        assert poly.variables() == {0, 1}

    def test_polynomial_rejects_repeated_monomials(self):
        """Test a monomial may appear only once"""
        with pytest.raises(ValueError):
            Polynomial(s=1, terms=(Term(coeff=1, exps=(2,)), Term(coeff=2, exps=(2,))))

    def test_polynomial_rejects_wrong_arity(self):
        """Test exponent vectors must have s entries"""
        with pytest.raises(ValueError):
            Polynomial(s=2, terms=(Term(coeff=1, exps=(2,)),))

    def test_form_must_be_homogeneous(self):
        """Test forms reject terms of mixed degree"""
        with pytest.raises(ValueError):
            Form.from_mapping(2, {(2, 0): 1, (1, 0): 1}, degree=2)

    def test_zero_form_keeps_degree(self):
        """Test the zero form still carries its degree"""
        form = Form.from_mapping(3, {}, degree=2)

        assert form.is_zero
        assert form.degree == 2

    def test_system_properties(self):
        """Test R, degrees and total degree of a system"""
        system = FormSystem(
            s=2,
            forms=(
                Form.from_mapping(2, {(2, 0): 1, (0, 2): 1}),
                Form.from_mapping(2, {(3, 0): 1}),
            ),
        )

        assert system.R == 2
        assert system.degrees == (2, 3)
        assert system.max_degree == 3
        assert system.total_degree == 5
        assert system.to_text() == "x1^2 + x2^2; x1^3"

    def test_system_needs_forms_and_variables(self):
        """Test R >= 1 and s >= 1"""
        with pytest.raises(ValueError):
            FormSystem(s=1, forms=())
        with pytest.raises(ValueError):
            FormSystem(s=0, forms=(Form.from_mapping(0, {}, degree=1),))


class TestSumModels:
    def test_instance_reduces_coefficients(self, services):
        """Test a_i are stored modulo q"""
        inst = services.instance("x1^2", 7, (9,))

        assert inst.a == (2,)
        assert inst.is_primitive

    def test_instance_shape(self, services):
        """Test one a_i per form and one character per variable"""
        system = services.forms.parse_system("x1^2 + x2^2")
        chars = services.characters.principal_system(2, 5)

        with pytest.raises(ValueError):
            GaussSumInstance(system=system, q=5, a=(1, 1), chars=chars)
        with pytest.raises(ValueError):
            GaussSumInstance(system=system, q=5, a=(1,), chars=services.characters.principal_system(1, 5))

    def test_instance_character_modulus(self, services):
        """Test the character system modulus must be q"""
        system = services.forms.parse_system("x1^2")

        with pytest.raises(ValueError):
            GaussSumInstance(system=system, q=5, a=(1,), chars=services.characters.principal_system(1, 10))


class TestCircleModels:
    def test_default_box(self):
        """Test the default box is (1/4, 3/4] on every side"""
        box = BoxSpec.from_text(None, 3)

        assert box.s == 3
        assert box.volume == pytest.approx(0.125)

    def test_box_from_text(self):
        """Test 'low,high' applies to every side"""
        box = BoxSpec.from_text("1/3, 2/3", 2)

        assert box.sides == ((Fraction(1, 3), Fraction(2, 3)),) * 2
        assert box.volume == pytest.approx(1 / 9)

    def test_box_validation(self):
        """Test sides must sit strictly inside the unit interval"""
        with pytest.raises(ValueError):
            BoxSpec.from_text("0,1/2", 1)
        with pytest.raises(ValueError):
            BoxSpec.from_text("3/4,1/4", 1)
        with pytest.raises(ValueError):
            BoxSpec.from_text("abc", 1)


class TestGeometryModels:
    def test_variety_arity(self):
        """Test equations must live in the ambient space"""
        with pytest.raises(ValueError):
            VarietySpec(n=3, equations=(Polynomial.from_mapping(2, {(1, 1): 1}),))

    def test_free_coordinates(self):
        """Test coordinate constraints remove coordinates from the grid"""
        variety = VarietySpec(n=4, coordinate_constraints=frozenset({1, 3}))

        assert variety.free_coordinates == [0, 2]

    def test_empty_estimate(self):
        """Test dimension -1 marks an empty locus"""
        estimate = DimEstimate(dim=-1, per_prime_counts=((11, 0), (13, 0)), slope=-1.0, residual=0.0)

        assert estimate.empty


class TestVerificationModels:
    def test_suite_report(self):
        """Test a suite is ok only when every criterion is"""
        report = SuiteReport(
            level=SuiteLevel.SMOKE,
            criteria=[
                CriterionResult(number=1, name="a", ok=True),
                CriterionResult(number=2, name="b", ok=False),
            ],
        )

        assert not report.ok
        assert report.failures() == [2]
        assert SuiteLevel("desk") is SuiteLevel.DESK
