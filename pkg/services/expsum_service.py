import itertools
import logging
import math
from math import gcd, lcm
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from sympy import isprime

from models.arith import CyclotomicTally
from models.characters import CharacterSystem, DirichletCharacter
from models.forms import Form, FormSystem, Polynomial
from models.sums import GaussSumInstance, GaussSumReport, InequalityCheck, SlopeFit, ThetaMode
from services.arith_service import ArithService
from services.character_service import CharacterService
from services.errors import CapacityExceeded, DomainError
from services.form_service import FormService
from services.grid import GridEngine, PowerTable, ResidueGrid

logger = logging.getLogger(__name__)

Partial = Union[CyclotomicTally, complex]

RELATIVE_TOLERANCE = 1e-9
# magnitudes below this count as an exact zero
ZERO_MAGNITUDE = 1e-9
TALLY_NOISE = 1e-12
NGUYEN_SLACK = 0.15
MAX_SCAN_DRAWS = 32


class ExpSumService:
    """Complete multiple Gauss sums C_F(q, a; chi), their variants and bound checks"""

    def __init__(
        self,
        arith: ArithService,
        characters: CharacterService,
        forms: FormService,
        engine: GridEngine,
    ):
        self.arith = arith
        self.characters = characters
        self.forms = forms
        self.engine = engine
        self.settings = engine.settings

    # ------------------------------------------------------------------ sums

    def gauss_sum_bruteforce(self, inst: GaussSumInstance) -> GaussSumReport:
        """Direct summation over all residue tuples mod q"""
        system, q = inst.system, inst.q
        self.engine.require("gauss sum", q**system.s)
        logger.info("Brute-force gauss sum: q=%s s=%s R=%s", q, system.s, system.R)
        result = self._sum(system.forms, inst.a, q, inst.chars.chars)
        return self._report(q, result, ("bruteforce",))

    def gauss_sum_crt(self, inst: GaussSumInstance) -> GaussSumReport:
        """Product over the prime-power factors of q, combined as tallies"""
        system, q = inst.system, inst.q
        parts = self._crt_parts(q, inst.a, inst.chars.chars)
        if len(parts) <= 1:
            return self.gauss_sum_bruteforce(inst)
        result: Optional[Partial] = None
        for q1, a1, chars1 in parts:
            self.engine.require("gauss sum", q1**system.s)
            part = self._sum(system.forms, a1, q1, chars1)
            result = part if result is None else self._multiply(result, part)
        return self._report(q, result, ("crt",))

    def gauss_sum(self, inst: GaussSumInstance) -> GaussSumReport:
        """CRT split followed by factorisation over independent variable blocks"""
        system, q = inst.system, inst.q
        parts = self._crt_parts(q, inst.a, inst.chars.chars) if q > 1 else [(1, inst.a, inst.chars.chars)]
        result: Partial = CyclotomicTally.one()
        for q1, a1, chars1 in parts:
            constant = sum(
                x * term.coeff
                for form, x in zip(system.forms, a1)
                for term in form.terms
                if term.degree == 0
            )
            if constant % q1:
                result = self._multiply(result, CyclotomicTally.from_exponents(q1, [constant]))
            for block in self.variable_blocks(system, a1, q1):
                result = self._multiply(result, self._block_sum(system, a1, q1, chars1, block))
        return self._report(q, result, ("factored",))

    def variable_blocks(self, system: FormSystem, a: Sequence[int], q: int) -> list[tuple[int, ...]]:
        """Connected components of variables sharing a monomial of a form with a_r != 0 mod q"""
        s = system.s
        rows, cols = [], []
        for form, x in zip(system.forms, a):
            if x % q == 0:
                continue
            for term in form.terms:
                support = [j for j, e in enumerate(term.exps) if e]
                for j in support[1:]:
                    rows.append(support[0])
                    cols.append(j)
        graph = coo_matrix(
            (np.ones(len(rows)), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))), shape=(s, s)
        )
        count, labels = connected_components(graph, directed=False)
        return [tuple(int(j) for j in np.nonzero(labels == label)[0]) for label in range(count)]

    def normalized_complete_sum(self, form: Form, q: int, u: int = 1) -> complex:
        """E_F(q) = q^-s sum_x e(u F(x) / q)"""
        return self.complete_sum_report(form, q, u).value / q**form.s

    def complete_sum_report(self, form: Form, q: int, u: int = 1) -> GaussSumReport:
        """C_F(q, u; chi0, ..., chi0) with the principal characters of modulus 1"""
        if gcd(u, q) != 1:
            raise DomainError(f"Exponent {u} is not coprime to {q}")
        inst = GaussSumInstance(
            system=self.forms.system((form,)),
            q=q,
            a=(u,),
            chars=self.characters.principal_system(form.s, q),
        )
        return self.gauss_sum(inst)

    def is_zero(self, report: GaussSumReport) -> bool:
        """Exact whenever the sum carries a tally; the magnitude threshold applies to complex-only sums"""
        if report.tally is None:
            return report.magnitude < ZERO_MAGNITUDE
        # rounding in the float value stays far below TALLY_NOISE per summed term
        if report.magnitude > TALLY_NOISE * max(1, report.tally.terms()):
            return False
        return self.arith.tally_is_zero(report.tally)

    # -------------------------------------------------------------------- nu

    def nu_tally(self, system: FormSystem, q: int, chars: CharacterSystem, method: str = "auto") -> Partial:
        """nu(q; chi) = sum over primitive a mod q of C_F(q, a; conj(chi) chi0)"""
        weights = tuple(self.characters.induce(self.characters.conjugate(chi), q) for chi in chars.chars)
        if method == "auto":
            method = "histogram" if q**system.s <= self.settings.work_cap else "direct"
        if method == "histogram":
            return self._nu_histogram(system, q, weights)
        if method == "direct":
            return self._nu_direct(system, q, weights)
        raise DomainError(f"Unknown nu method {method!r}; use auto, histogram or direct")

    def nu_sum(self, system: FormSystem, q: int, chars: CharacterSystem, method: str = "auto") -> complex:
        return self._as_complex(self.nu_tally(system, q, chars, method))

    def primitive_weights(self, q: int, R: int) -> np.ndarray:
        """w[g] = sum over primitive a mod q of e(a.v / q), for any v with gcd(v_1, ..., v_R, q) = g"""
        if q**R >= 2**62:
            raise CapacityExceeded("nu weight", q**R, 2**62)
        primes = [p for p, _ in self.arith.factorize(q).pairs()]
        weights = np.zeros(q + 1, dtype=np.int64)
        g = np.arange(q + 1)
        for size in range(len(primes) + 1):
            for subset in itertools.combinations(primes, size):
                d = math.prod(subset)
                step = q // d
                weights += np.where(g % step == 0, (-1) ** size * step**R, 0).astype(np.int64)
        return weights

    def _nu_histogram(self, system: FormSystem, q: int, chars: Sequence[DirichletCharacter]) -> Partial:
        order = lcm(1, *(chi.value_order for chi in chars))
        axes, phases = self._character_axes(chars, q, order)
        grid = ResidueGrid(axes)
        powers = PowerTable(q, system.max_degree)
        weights = self.primitive_weights(q, system.R)
        logger.info("nu histogram: q=%s, %s points", q, grid.size)

        def keys(points: np.ndarray) -> np.ndarray:
            total = np.zeros(len(points), dtype=np.int64)
            for j, table in enumerate(phases):
                total += table[points[:, j]]
            return total % order

        def weight(points: np.ndarray) -> np.ndarray:
            g = np.full(len(points), q, dtype=np.int64)
            for form in system.forms:
                g = np.gcd(g, powers.evaluate(form, points))
            return weights[g]

        if order <= self.settings.tally_cap:
            counts = self.engine.histogram(grid, keys, order, weights=weight, what="nu histogram")
            return CyclotomicTally(order=order, counts=counts)
        return self.engine.reduce_grid(
            grid,
            lambda points: complex(np.sum(weight(points) * np.exp(2j * np.pi * keys(points) / order))),
            _add,
            0j,
            what="nu histogram",
        )

    def _nu_direct(self, system: FormSystem, q: int, chars: Sequence[DirichletCharacter]) -> Partial:
        self.engine.require("nu direct", q**system.R * q**system.s)
        char_system = CharacterSystem(chars=tuple(chars), modulus=q)
        total: Partial = CyclotomicTally.zero()
        for a in itertools.product(range(q), repeat=system.R):
            if gcd(q, *a) != 1:
                continue
            report = self.gauss_sum(GaussSumInstance(system=system, q=q, a=a, chars=char_system))
            part = report.tally if report.tally is not None else report.value
            if isinstance(total, CyclotomicTally) and isinstance(part, CyclotomicTally):
                total = total.merge(part)
            else:
                total = self._as_complex(total) + self._as_complex(part)
        return total

    # ------------------------------------------------------------ inequalities

    def cauchy_fourth_check(self, inst: GaussSumInstance, literal: bool = False) -> InequalityCheck:
        """|C|^4 against the character-free quadruple sum left after two Cauchy-Schwarz steps"""
        system, q, s = inst.system, inst.q, inst.system.s
        self.engine.require("cauchy check", q ** (3 * s))
        lhs = self.gauss_sum(inst).magnitude ** 4

        units = np.nonzero(self.arith.units_mask(q))[0]
        phi = len(units)
        support = math.prod(q // chi.modulus * self.arith.phi(chi.modulus) for chi in inst.chars.chars)
        factor = (support / phi**s) ** 2

        j_points = ResidueGrid([units] * s).block(0, phi**s)
        m = len(j_points)
        h_grid = ResidueGrid.full(q, s)
        powers = PowerTable(q, system.max_degree)
        roots = np.exp(2j * np.pi * np.arange(q) / q)

        def gram(start: int, stop: int) -> np.ndarray:
            h = h_grid.block(start, stop)
            products = (h[:, None, :] * j_points[None, :, :] % q).reshape(-1, s)
            values = powers.combine(system.forms, inst.a, products).reshape(len(h), m)
            exponentials = roots[values]
            return exponentials.conj().T @ exponentials

        matrix = self.engine.reduce(
            h_grid.size,
            gram,
            np.add,
            np.zeros((m, m), dtype=complex),
            step=max(1, self.settings.chunk_size // m),
        )
        quadruple = float(np.sum(np.abs(matrix) ** 2))
        rhs = factor * quadruple
        details = {"factor": factor, "quadruple_sum": quadruple, "units": phi}
        ok = lhs <= rhs * (1 + RELATIVE_TOLERANCE)
        rhs_imag = 0.0

        if literal:
            value = self._as_complex(self._literal_quadruple(system, inst.a, q, units))
            rhs_imag = factor * value.imag
            scale = max(1.0, quadruple)
            agrees = abs(value.real - quadruple) <= 1e-6 * scale and abs(value.imag) <= 1e-6 * scale
            details.update({"literal_re": value.real, "literal_im": value.imag, "literal_agrees": agrees})
            ok = ok and agrees
        return InequalityCheck(lhs=lhs, rhs=rhs, ok=ok, rhs_imag=rhs_imag, tolerance=RELATIVE_TOLERANCE, details=details)

    def _literal_quadruple(self, system: FormSystem, a: Sequence[int], q: int, units: np.ndarray) -> Partial:
        s = system.s
        self.engine.require("literal quadruple sum", q ** (2 * s) * len(units) ** (2 * s))
        differences = [self.forms.quadruple_difference(form) for form in system.forms]
        full = np.arange(q, dtype=np.int64)
        axes = [full] * (2 * s) + [units] * (2 * s)
        phases = [np.zeros(q, dtype=np.int64)] * (4 * s)
        return self._accumulate(differences, a, q, axes, phases, q, "literal quadruple sum")

    def theta(self, d: int, mode: ThetaMode = ThetaMode.UNCONDITIONAL) -> float:
        mode = ThetaMode(mode)
        if mode is ThetaMode.UNCONDITIONAL:
            if d <= 1:
                raise DomainError(f"Unconditional theta needs degree >= 2, got {d}")
            return 1 / (2 * (d - 1))
        if d < 1:
            raise DomainError(f"Theta needs a positive degree, got {d}")
        return 1 / d

    def theoretical_exponent(
        self, system: FormSystem, a: Sequence[int], q: int, dim_v: int, mode: ThetaMode
    ) -> float:
        """s - Theta_{2d} (s - dim V*) / (4 (r_d + 1)), d the top degree among forms with a_i != 0 mod q"""
        active = [form.degree for form, x in zip(system.forms, a) if x % q]
        if not active:
            raise DomainError("Every a_i vanishes mod q; no active form")
        d = max(active)
        r_d = self.forms.degree_part(system, d).R
        return system.s - self.theta(2 * d, mode) * (system.s - dim_v) / (4 * (r_d + 1))

    def exponent_report(
        self,
        inst: GaussSumInstance,
        dim_v: int,
        mode: Optional[ThetaMode] = None,
        slack: Optional[float] = None,
    ) -> GaussSumReport:
        if inst.q < 2:
            raise DomainError("Exponents need q >= 2")
        if not inst.is_primitive:
            raise DomainError(f"Need gcd(a_1, ..., a_R, q) = 1, got a={inst.a} q={inst.q}")
        mode = ThetaMode(mode or self.settings.theta_mode)
        slack = self.settings.eps_slack if slack is None else slack
        theoretical = self.theoretical_exponent(inst.system, inst.a, inst.q, dim_v, mode)
        report = self.gauss_sum(inst)
        if self.is_zero(report):
            empirical, ok = -math.inf, True
        else:
            empirical = math.log(report.magnitude) / math.log(inst.q)
            ok = empirical <= theoretical + slack
        return report.model_copy(
            update={
                "empirical_exponent": empirical,
                "theoretical_exponent": theoretical,
                "theta_mode": mode,
                "bound_ok": ok,
                "slack": slack,
            }
        )

    def cochrane_zheng_check(
        self, f: Polynomial, p: int, t: int, a: int, chi: DirichletCharacter
    ) -> InequalityCheck:
        """|C_f(p^t, a; chi)| <= 4 d p^(t (1 - 1/(d+1)))"""
        if f.s != 1:
            raise DomainError(f"Need a one-variable polynomial, got {f.s} variables")
        if not isprime(p) or t < 1:
            raise DomainError(f"Need a prime power, got {p}^{t}")
        if a % p == 0:
            raise DomainError(f"{a} is not coprime to {p}")
        d = max((term.degree for term in f.terms if term.coeff % p), default=0)
        if d < 1:
            raise DomainError(f"Need a polynomial of degree >= 1 mod {p}")
        q = p**t
        if q % chi.modulus:
            raise DomainError(f"Character modulus {chi.modulus} does not divide {q}")
        self.engine.require("gauss sum", q)
        lhs = abs(self._as_complex(self._sum((f,), (a,), q, (chi,))))
        rhs = 4 * d * p ** (t * (1 - 1 / (d + 1)))
        return InequalityCheck(
            lhs=lhs, rhs=rhs, ok=lhs <= rhs * (1 + RELATIVE_TOLERANCE), details={"q": q, "d": d, "chi": chi.spec}
        )

    def vinogradov_check(self, d: int, p: int, a: int, chi: DirichletCharacter) -> InequalityCheck:
        """Diagnostic: |sum_x chi(x) e(a x^d / p)| <= d sqrt(p) for nonprincipal chi"""
        if not isprime(p):
            raise DomainError(f"{p} is not prime")
        if a % p == 0:
            raise DomainError(f"{a} is not coprime to {p}")
        monomial = Polynomial.from_mapping(1, {(d,): 1})
        self.engine.require("gauss sum", p)
        lhs = abs(self._as_complex(self._sum((monomial,), (a,), p, (chi,))))
        rhs = d * math.sqrt(p)
        applicable = not chi.is_principal
        ok = lhs <= rhs * (1 + RELATIVE_TOLERANCE) or not applicable
        return InequalityCheck(lhs=lhs, rhs=rhs, ok=ok, details={"applicable": applicable, "diagnostic": True})

    def nguyen_slope(self, form: Form, primes: Sequence[int], u: int = 1) -> SlopeFit:
        """Least-squares slope of log |E_F(p)| against log p; vanishing sums are skipped"""
        points, skipped = [], []
        for p in primes:
            report = self.complete_sum_report(form, p, u)
            if self.is_zero(report):
                skipped.append(p)
                continue
            points.append((p, report.magnitude / p**form.s))
        if len(points) < 2:
            raise DomainError(f"Need two primes with a nonzero sum, got {len(points)}")
        logs = np.log(np.array([p for p, _ in points], dtype=float))
        values = np.log(np.array([value for _, value in points]))
        slope, intercept = np.polyfit(logs, values, 1)
        return SlopeFit(slope=float(slope), intercept=float(intercept), points=points, skipped=skipped)

    def nguyen_check(
        self, form: Form, primes: Sequence[int], critical_dim: int = 0, slack: float = NGUYEN_SLACK
    ) -> InequalityCheck:
        fit = self.nguyen_slope(form, primes)
        rhs = -self.theta(form.degree, ThetaMode.UNCONDITIONAL) * (form.s - critical_dim) + slack
        return InequalityCheck(lhs=fit.slope, rhs=rhs, ok=fit.slope <= rhs, details={"points": len(fit.points)})

    # ------------------------------------------------------------------- scans

    def exponent_scan(
        self,
        system: FormSystem,
        primes: Sequence[int],
        dim_v: int,
        seed: int = 0,
        random_characters: bool = False,
        mode: Optional[ThetaMode] = None,
    ) -> list[dict]:
        """One exponent report per prime, as flat rows

        With random characters, a draw whose sum vanishes exactly is redrawn from the
        same generator, up to MAX_SCAN_DRAWS times; `draws` records how many were used.
        """
        rng = np.random.default_rng(seed)
        rows = []
        for p in primes:
            draws = 0
            while True:
                draws += 1
                if random_characters:
                    chars = tuple(self.characters.random_character(p, rng) for _ in range(system.s))
                    a = tuple(int(x) for x in rng.integers(1, p, system.R))
                else:
                    chars = (self.characters.principal(p),) * system.s
                    a = (1,) * system.R
                inst = GaussSumInstance(system=system, q=p, a=a, chars=CharacterSystem(chars=chars, modulus=p))
                report = self.exponent_report(inst, dim_v, mode)
                vanished = report.empirical_exponent == -math.inf
                if not (random_characters and vanished) or draws >= MAX_SCAN_DRAWS:
                    break
            if vanished:
                logger.info("Sum at q=%s vanished after %s draw(s)", p, draws)
            rows.append({**self.scan_row(inst, report), "draws": draws})
        return rows

    def scan_row(self, inst: GaussSumInstance, report: GaussSumReport) -> dict:
        row: dict = {"q": inst.q}
        row.update({f"a{i + 1}": x for i, x in enumerate(inst.a)})
        row.update({f"chi{i + 1}": chi.spec for i, chi in enumerate(inst.chars.chars)})
        row.update(
            {
                "re": report.value.real,
                "im": report.value.imag,
                "magnitude": report.magnitude,
                "emp_exponent": report.empirical_exponent,
                "theo_exponent": report.theoretical_exponent,
                "ok": report.bound_ok,
            }
        )
        return row

    # ---------------------------------------------------------------- helpers

    def _crt_parts(self, q: int, a: Sequence[int], chars: Sequence[DirichletCharacter]):
        parts = []
        for q1 in self.arith.coprime_split(q):
            inverse = pow(q // q1, -1, q1)
            a1 = tuple(x * inverse % q1 for x in a)
            chars1 = tuple(self.characters.crt_component(chi, gcd(chi.modulus, q1)) for chi in chars)
            parts.append((q1, a1, chars1))
        return parts

    def _block_sum(self, system: FormSystem, a, q: int, chars, block: tuple[int, ...]) -> Partial:
        members = set(block)
        polys, coefficients = [], []
        for form, x in zip(system.forms, a):
            if x % q == 0:
                continue
            mapping = {
                tuple(term.exps[j] for j in block): term.coeff
                for term in form.terms
                if term.degree and next(j for j, e in enumerate(term.exps) if e) in members
            }
            polys.append(Polynomial.from_mapping(len(block), mapping))
            coefficients.append(x)
        self.engine.require("gauss sum block", q ** len(block))
        return self._sum(polys, coefficients, q, [chars[j] for j in block], what="gauss sum block")

    def _sum(self, polys, a, q: int, chars: Sequence[DirichletCharacter], what: str = "gauss sum") -> Partial:
        order = lcm(q, *(chi.value_order for chi in chars))
        axes, phases = self._character_axes(chars, q, order)
        return self._accumulate(polys, a, q, axes, phases, order, what)

    def _character_axes(self, chars: Sequence[DirichletCharacter], q: int, order: int):
        """Residues mod q where each chi is nonzero, and chi as a phase table in units of e(1/order)"""
        axes, phases = [], []
        residues = np.arange(q)
        for chi in chars:
            table = self.characters.value_table(chi)[residues % chi.modulus]
            phase = np.where(table >= 0, table * (order // chi.value_order), -1)
            axes.append(np.nonzero(phase >= 0)[0])
            phases.append(phase)
        return axes, phases

    def _accumulate(self, polys, a, q: int, axes, phases, order: int, what: str) -> Partial:
        grid = ResidueGrid(axes)
        powers = PowerTable(q, max((poly.total_degree for poly in polys), default=0))
        step = order // q

        def phase(points: np.ndarray) -> np.ndarray:
            total = powers.combine(polys, a, points) * step
            for j, table in enumerate(phases):
                total += table[points[:, j]]
            return total % order

        if order <= self.settings.tally_cap:
            counts = self.engine.histogram(grid, phase, order, what=what)
            return CyclotomicTally(order=order, counts=counts)
        logger.info("Order %s exceeds the tally cap; %s accumulated as complex", order, what)
        return self.engine.reduce_grid(
            grid, lambda points: complex(np.exp(2j * np.pi * phase(points) / order).sum()), _add, 0j, what=what
        )

    def _multiply(self, x: Partial, y: Partial) -> Partial:
        if isinstance(x, CyclotomicTally) and isinstance(y, CyclotomicTally):
            if lcm(x.order, y.order) <= self.settings.tally_cap:
                return self.arith.tally_convolve(x, y)
        return self._as_complex(x) * self._as_complex(y)

    def _as_complex(self, x: Partial) -> complex:
        return self.arith.tally_value(x) if isinstance(x, CyclotomicTally) else complex(x)

    def _report(self, q: int, result: Partial, diagnostics: tuple[str, ...] = ()) -> GaussSumReport:
        if isinstance(result, CyclotomicTally):
            value, tally = self.arith.tally_value(result), result
        else:
            value, tally = complex(result), None
            diagnostics += ("complex_only",)
        return GaussSumReport(q=q, value=value, magnitude=abs(value), tally=tally, diagnostics=diagnostics)


def _add(x, y):
    return x + y
