import hashlib
import json
import logging
import math
import time
from math import gcd
from typing import Callable, Optional

import numpy as np
from sympy import divisors, primerange

from models.arith import CyclotomicTally
from models.characters import CharacterSystem
from models.forms import Polynomial
from models.sums import GaussSumInstance
from models.verification import CriterionResult, SuiteLevel, SuiteReport
from services.container import ServiceContainer
from services.errors import MultiGaussError
from services.geometry_service import CHAIN_PRIMES, CODIM_PRIMES

logger = logging.getLogger(__name__)

NGUYEN_FORMS = (
    "x1^2",
    "2*x1^2 + 3*x2^2",
    "x1*x2 + x3^2",
    "x1^2 + x2^2 + x3^2",
    "x1^2 - 3*x2^2 + 2*x3^2",
    "x1^3 + x2^3",
    "x1^3 + 2*x2^3",
    "3*x1^3 - x2^3",
    "x1^3 + x2^3 + x3^3",
    "x1^3 + 2*x2^3 + 3*x3^3",
)

# (system, dimension of its singular locus)
EXPONENT_SYSTEMS = (
    ("x1^2", 0),
    ("x1^2 + x2^2", 0),
    ("x1*x2 + x3^2", 0),
    ("x1^2 + 2*x2^2 + 3*x3^2 + x4^2", 0),
    ("x1^3 + x2^3", 0),
    ("x1^3 + 2*x2^3 + x3^3", 0),
    ("x1^3 + x2^3 + x3^3 + x4^3", 0),
    ("x1^4 + x2^4", 0),
    ("x1^2 + x2^2 + x3^2; x1^2 + 2*x2^2 + 3*x3^2", 1),
    ("x1^2 + x2^2 + x3^2 + x4^2; x1^2 + 2*x2^2 + 3*x3^2 + 4*x4^2", 1),
)

CHAIN_SYSTEMS = (
    "x1^2 + x2^2 + x3^2",
    "x1*x2 + x3^2",
    "x1^3 + x2^3 + x3^3",
    "x1*x2 + x3*x4",
    "x1^2 + x2^2; x3^2 + x4^2",
)

CODIM_SYSTEMS = ("x1^2 + x2^2", "x1*x2", "x1^2 + x2^2 + x3^2")

# (system, character specs)
LEMMA_SYSTEMS = (
    ("x1^2 + x2^2", ("3:1", "3:0")),
    ("x1^2", ("4:1",)),
    ("x1*x2", ("5:1", "5:2")),
    ("x1^3 + x2^3", ("7:1", "1:")),
    ("x1 + x2", ("8:1,0", "3:1")),
)

ASYMPTOTIC_SYSTEM = "x1 + x2 - 2*x3"

LEVELS: dict[SuiteLevel, dict[int, dict]] = {
    SuiteLevel.SMOKE: {
        1: {"q_max": 30},
        2: {"instances": 10, "q_max": 60, "max_points": 5_000},
        3: {"instances": 5, "q_max": 7},
        4: {"polynomials": 20, "max_modulus": 49},
        5: {"p_max": 31, "p_max_three": 7},
        6: {"forms": NGUYEN_FORMS[:4], "p_max": 41},
        7: {"systems": EXPONENT_SYSTEMS[:4], "primes": (11, 13)},
        8: {"systems": CHAIN_SYSTEMS[:2]},
        9: {"systems": CODIM_SYSTEMS[:2]},
        10: {"X_values": (300,), "Q": 10, "band": (0.5, 1.5), "samples": 1 << 14},
        11: {"pairs": 10, "max_product": 30, "lemma_Q": 30, "lemma_systems": 2},
    },
    SuiteLevel.DESK: {
        1: {"q_max": 200},
        2: {"instances": 200, "q_max": 400, "max_points": 200_000},
        3: {"instances": 50, "q_max": 13},
        4: {"polynomials": 500, "max_modulus": 343},
        5: {"p_max": 97, "p_max_three": 11},
        6: {"forms": NGUYEN_FORMS, "p_max": 97},
        7: {"systems": EXPONENT_SYSTEMS, "primes": (11, 23, 47, 97)},
        8: {"systems": CHAIN_SYSTEMS},
        9: {"systems": CODIM_SYSTEMS},
        10: {"X_values": (3000, 6000), "Q": 50, "band": (0.85, 1.15), "samples": 1 << 18},
        11: {"pairs": 50, "max_product": 60, "lemma_Q": 100, "lemma_systems": 5},
    },
}

NAMES = {
    1: "character orthogonality",
    2: "CRT against brute force",
    3: "Cauchy fourth-power inequality",
    4: "Cochrane-Zheng bound",
    5: "quadratic complete sums",
    6: "Nguyen exponent slope",
    7: "theorem exponent",
    8: "dimension chain",
    9: "bihomogeneous codimension",
    10: "prime-weighted asymptotic",
    11: "nu multiplicativity and lemma sum",
    12: "determinism across worker counts",
}

DETERMINISM_CRITERIA = (2, 7, 10)
DETERMINISM_WORKERS = (1, 4)
DETERMINISM_CHUNK = 1 << 12
# allowed drift of the asymptotic ratio away from 1 as X doubles
HYSTERESIS = 0.02
LITERAL_CAP = 2 * 10**6
EXAMPLES_KEPT = 5


class VerificationService:
    """The acceptance battery at smoke or desk scale; every criterion reports ok and its evidence"""

    def __init__(self, services: ServiceContainer, seed: int = 0):
        self.services = services
        self.seed = seed

    def verify_suite(self, level: SuiteLevel = SuiteLevel.SMOKE, only: Optional[list[int]] = None) -> SuiteReport:
        level = SuiteLevel(level)
        report = SuiteReport(level=level)
        for number in sorted(NAMES):
            if only and number not in only:
                continue
            report.criteria.append(self.run_criterion(number, level))
        logger.info("Suite %s: %s of %s criteria ok", level.value, sum(c.ok for c in report.criteria), len(report.criteria))
        return report

    def run_criterion(self, number: int, level: SuiteLevel = SuiteLevel.SMOKE) -> CriterionResult:
        checks: dict[int, Callable[..., tuple[bool, dict]]] = {
            1: self.check_orthogonality,
            2: self.check_crt,
            3: self.check_cauchy,
            4: self.check_cochrane_zheng,
            5: self.check_quadratic_sums,
            6: self.check_nguyen,
            7: self.check_exponents,
            8: self.check_chain,
            9: self.check_codim,
            10: self.check_asymptotic,
            11: self.check_nu,
            12: lambda: self.check_determinism(level),
        }
        if number not in checks:
            raise MultiGaussError(f"No acceptance criterion {number}; choose 1..{len(checks)}")
        params = LEVELS[SuiteLevel(level)].get(number, {})
        started = time.perf_counter()
        try:
            ok, details = checks[number](**params)
        except MultiGaussError as error:
            logger.warning("Criterion %s raised: %s", number, error)
            ok, details = False, {"error": str(error)}
        seconds = time.perf_counter() - started
        logger.info("Criterion %s (%s): %s in %.1fs", number, NAMES[number], "ok" if ok else "FAILED", seconds)
        return CriterionResult(number=number, name=NAMES[number], ok=ok, details=details, seconds=seconds)

    # ------------------------------------------------------------ criteria

    def check_orthogonality(self, q_max: int) -> tuple[bool, dict]:
        """sum_h chi(h) is exactly phi(q) for chi0 and exactly zero otherwise"""
        arith, characters = self.services.arith, self.services.characters
        failures, count = [], 0
        for q in range(1, q_max + 1):
            phi = arith.phi(q)
            for chi in characters.enumerate_characters(q):
                count += 1
                tally = characters.character_sum_tally(chi)
                if chi.is_principal:
                    ok = tally.same_as(CyclotomicTally.one().scale(phi))
                else:
                    ok = arith.tally_is_zero(tally)
                if not ok:
                    failures.append(chi.spec)
        return not failures, {"characters": count, "failures": failures[:EXAMPLES_KEPT]}

    def check_crt(self, instances: int, q_max: int, max_points: int, max_degree: int = 3) -> tuple[bool, dict]:
        services = self.services
        rng = np.random.default_rng(self.seed)
        composites = [q for q in range(6, q_max + 1) if len(services.arith.factorize(q).factors) >= 2]
        mismatches, asymmetric = [], []
        for _ in range(instances):
            s = int(rng.integers(1, 4))
            q = int(rng.choice([q for q in composites if q**s <= max_points]))
            R = int(rng.integers(1, 3))
            system = services.forms.random_system(rng, s, R, max_degree)
            chars = CharacterSystem(
                chars=tuple(services.characters.random_character(q, rng) for _ in range(s)), modulus=q
            )
            a = tuple(int(x) for x in rng.integers(0, q, R))
            inst = GaussSumInstance(system=system, q=q, a=a, chars=chars)
            crt = services.expsums.gauss_sum_crt(inst)
            brute = services.expsums.gauss_sum_bruteforce(inst)
            if crt.tally is not None and brute.tally is not None:
                equal = crt.tally.same_as(brute.tally)
            else:
                equal = abs(crt.value - brute.value) <= 1e-9 * max(1.0, brute.magnitude)
            if not equal:
                mismatches.append({"system": system.to_text(), "q": q, "a": list(a)})
            if not self._conjugation_symmetric(inst, brute):
                asymmetric.append({"system": system.to_text(), "q": q, "a": list(a)})
        details = {
            "instances": instances,
            "seed": self.seed,
            "mismatches": mismatches[:EXAMPLES_KEPT],
            "conjugation_mismatches": asymmetric[:EXAMPLES_KEPT],
        }
        return not mismatches and not asymmetric, details

    def check_cauchy(self, instances: int, q_max: int, max_degree: int = 3) -> tuple[bool, dict]:
        services = self.services
        rng = np.random.default_rng(self.seed + 3)
        violations, literal_runs, worst = [], 0, 0.0
        for _ in range(instances):
            s = int(rng.integers(1, 3))
            q = int(rng.integers(2, q_max + 1))
            R = int(rng.integers(1, 3))
            system = services.forms.random_system(rng, s, R, max_degree)
            moduli = divisors(q)
            chars = tuple(
                services.characters.random_character(int(moduli[rng.integers(len(moduli))]), rng) for _ in range(s)
            )
            a = tuple(int(x) for x in rng.integers(0, q, R))
            while gcd(q, *a) != 1:
                a = tuple(int(x) for x in rng.integers(0, q, R))
            inst = GaussSumInstance(system=system, q=q, a=a, chars=CharacterSystem(chars=chars, modulus=q))
            phi = services.arith.phi(q)
            literal = q ** (2 * s) * phi ** (2 * s) <= LITERAL_CAP
            literal_runs += literal
            check = services.expsums.cauchy_fourth_check(inst, literal=literal)
            if check.rhs > 0:
                worst = max(worst, check.lhs / check.rhs)
            if not check.ok:
                violations.append({"system": system.to_text(), "q": q, "a": list(a), "lhs": check.lhs, "rhs": check.rhs})
        details = {"instances": instances, "literal_runs": literal_runs, "worst_ratio": worst, "violations": violations}
        return not violations, details

    def check_cochrane_zheng(self, polynomials: int, max_modulus: int) -> tuple[bool, dict]:
        services = self.services
        rng = np.random.default_rng(self.seed + 4)
        prime_powers = [
            (int(p), t) for p in primerange(2, max_modulus + 1) for t in range(1, 20) if p**t <= max_modulus
        ]
        checks, violations, worst = 0, [], 0.0
        for _ in range(polynomials):
            p, t = prime_powers[int(rng.integers(len(prime_powers)))]
            f = self._random_univariate(rng, p)
            q = p**t
            a = int(rng.integers(1, q))
            while a % p == 0:
                a = int(rng.integers(1, q))
            for chi in services.characters.enumerate_characters(q):
                check = services.expsums.cochrane_zheng_check(f, p, t, a, chi)
                checks += 1
                worst = max(worst, check.lhs / check.rhs)
                if not check.ok:
                    violations.append({"f": f.to_text(), "q": q, "a": a, "chi": chi.spec})
        details = {"polynomials": polynomials, "checks": checks, "worst_ratio": worst, "violations": violations[:EXAMPLES_KEPT]}
        return not violations, details

    def check_quadratic_sums(self, p_max: int, p_max_three: int) -> tuple[bool, dict]:
        expsums, forms = self.services.expsums, self.services.forms
        square = forms.as_form(forms.parse_polynomial("x1^2"))
        three = forms.as_form(forms.parse_polynomial("x1^2 + x2^2 + x3^2"))
        errors = {}
        for form, bound, power in ((square, p_max, 0.5), (three, p_max_three, 1.5)):
            for p in primerange(3, bound + 1):
                value = abs(expsums.normalized_complete_sum(form, int(p)))
                errors[f"s={form.s},p={p}"] = abs(value - p ** (-power))
        worst = max(errors.values())
        return worst <= 1e-9, {"checked": len(errors), "max_error": worst}

    def check_nguyen(self, forms: tuple[str, ...], p_max: int) -> tuple[bool, dict]:
        primes = [int(p) for p in primerange(11, p_max + 1)]
        results = []
        for text in forms:
            form = self.services.forms.as_form(self.services.forms.parse_polynomial(text))
            check = self.services.expsums.nguyen_check(form, primes)
            results.append({"form": text, "slope": check.lhs, "bound": check.rhs, "ok": check.ok})
        return all(r["ok"] for r in results), {"primes": [primes[0], primes[-1]], "forms": results}

    def check_exponents(self, systems: tuple[tuple[str, int], ...], primes: tuple[int, ...]) -> tuple[bool, dict]:
        """Empirical <= theoretical + slack at the largest prime; an exact zero there is vacuous"""
        results = []
        for index, (text, dim_v) in enumerate(systems):
            system = self.services.forms.parse_system(text)
            rows = self.services.expsums.exponent_scan(
                system, primes, dim_v, seed=self.seed + index, random_characters=True
            )
            last = rows[-1]
            results.append(
                {
                    "system": text,
                    "q": last["q"],
                    "emp_exponent": last["emp_exponent"],
                    "theo_exponent": last["theo_exponent"],
                    "draws": last["draws"],
                    "vacuous": last["emp_exponent"] == -math.inf,
                    "ok": bool(last["ok"]),
                    "sweep_ok": all(bool(row["ok"]) for row in rows),
                }
            )
        vacuous = sum(r["vacuous"] for r in results)
        details = {"slack": self.services.settings.eps_slack, "vacuous": vacuous, "systems": results}
        return all(r["ok"] for r in results) and vacuous < len(results), details

    def check_chain(self, systems: tuple[str, ...]) -> tuple[bool, dict]:
        results = []
        for text in systems:
            report = self.services.geometry.verify_chain_claims(self.services.forms.parse_system(text), CHAIN_PRIMES)
            results.append(
                {
                    "system": text,
                    "dims_T": [step.dim_T for step in report.steps],
                    "dims_U": [step.dim_U for step in report.steps if step.dim_U is not None],
                    "claim_bound": report.claim_bound,
                    "ok": report.all_ok,
                }
            )
        return all(r["ok"] for r in results), {"primes": list(CHAIN_PRIMES), "systems": results}

    def check_codim(self, systems: tuple[str, ...]) -> tuple[bool, dict]:
        results = []
        for text in systems:
            report = self.services.geometry.verify_codim_proposition(
                self.services.forms.parse_system(text), CODIM_PRIMES
            )
            results.append(
                {
                    "system": text,
                    "codim_F": report.codim_F,
                    "codim_G1": report.codim_G1,
                    "codim_G2": report.codim_G2,
                    "bound": report.bound,
                    "ok": report.ok,
                }
            )
        return all(r["ok"] for r in results), {"primes": list(CODIM_PRIMES), "systems": results}

    def check_asymptotic(
        self, X_values: tuple[int, ...], Q: int, band: tuple[float, float], samples: int
    ) -> tuple[bool, dict]:
        system = self.services.forms.parse_system(ASYMPTOTIC_SYSTEM)
        rows = []
        for X in X_values:
            report = self.services.circle.asymptotic_report(system, X, Q=Q, samples=samples)
            rows.append({"X": X, "N": report.N, "predicted": report.predicted, "ratio": report.ratio})
        ratios = [row["ratio"] for row in rows]
        ok = ratios[0] is not None and band[0] <= ratios[0] <= band[1]
        if ok and len(ratios) > 1:
            ok = all(
                later is not None and abs(later - 1) <= abs(earlier - 1) + HYSTERESIS
                for earlier, later in zip(ratios, ratios[1:])
            )
        return ok, {"system": ASYMPTOTIC_SYSTEM, "Q": Q, "band": list(band), "runs": rows}

    def check_nu(self, pairs: int, max_product: int, lemma_Q: int, lemma_systems: int) -> tuple[bool, dict]:
        services = self.services
        rng = np.random.default_rng(self.seed + 11)
        candidates = [
            (q1, q2)
            for q1 in range(2, max_product)
            for q2 in range(q1 + 1, max_product)
            if gcd(q1, q2) == 1 and q1 * q2 <= max_product
        ]
        mismatches = []
        for _ in range(pairs):
            q1, q2 = candidates[int(rng.integers(len(candidates)))]
            q = q1 * q2
            s, R = int(rng.integers(1, 3)), int(rng.integers(1, 3))
            system = services.forms.random_system(rng, s, R, 3)
            chars = tuple(services.characters.random_character(q, rng) for _ in range(s))
            whole = services.expsums.nu_tally(system, q, CharacterSystem(chars=chars, modulus=q), "histogram")
            parts = [
                services.expsums.nu_tally(
                    system,
                    part,
                    CharacterSystem(chars=tuple(services.characters.crt_component(chi, part) for chi in chars), modulus=part),
                    "histogram",
                )
                for part in (q1, q2)
            ]
            if all(isinstance(x, CyclotomicTally) for x in (whole, *parts)):
                equal = whole.same_as(services.arith.tally_convolve(*parts))
            else:
                value = _value(services.arith, whole)
                product = _value(services.arith, parts[0]) * _value(services.arith, parts[1])
                equal = abs(value - product) <= 1e-9 * max(1.0, abs(value))
            if not equal:
                mismatches.append({"system": system.to_text(), "q1": q1, "q2": q2})

        sums = []
        for text, specs in LEMMA_SYSTEMS[:lemma_systems]:
            system = services.forms.parse_system(text)
            chars = tuple(services.characters.parse_spec(spec) for spec in specs)
            modulus = math.lcm(*(chi.modulus for chi in chars))
            total = services.circle.lemma_abs_sum(system, lemma_Q, CharacterSystem(chars=chars, modulus=modulus))
            sums.append({"system": text, "chars": list(specs), "k0": modulus, "sum": total})
        lemma_ok = all(math.isfinite(row["sum"]) for row in sums)
        details = {"pairs": pairs, "mismatches": mismatches[:EXAMPLES_KEPT], "lemma_Q": lemma_Q, "lemma_sums": sums}
        return not mismatches and lemma_ok, details

    def check_determinism(
        self, level: SuiteLevel, criteria: tuple[int, ...] = DETERMINISM_CRITERIA
    ) -> tuple[bool, dict]:
        """Criteria 2, 7 and 10 by default give byte-identical payloads for every worker count"""
        payloads = {}
        for workers in DETERMINISM_WORKERS:
            settings = self.services.settings.with_overrides(
                workers=workers, chunk_size=min(self.services.settings.chunk_size, DETERMINISM_CHUNK)
            )
            rerun = VerificationService(ServiceContainer(settings), self.seed)
            results = [rerun.run_criterion(number, level) for number in criteria]
            canonical = self.services.reports.canonicalize([[r.ok, r.details] for r in results])
            payloads[workers] = json.dumps(canonical, sort_keys=True)
        digests = {workers: hashlib.sha256(payload.encode()).hexdigest() for workers, payload in payloads.items()}
        identical = len(set(digests.values())) == 1
        details = {
            "criteria": list(criteria),
            "workers": list(DETERMINISM_WORKERS),
            "chunk_size": min(self.services.settings.chunk_size, DETERMINISM_CHUNK),
            "sha256": {str(workers): digest for workers, digest in digests.items()},
        }
        return identical, details

    # ------------------------------------------------------------- helpers

    def _conjugation_symmetric(self, inst: GaussSumInstance, report) -> bool:
        """C_F(q, -a; conj chi) is the conjugate of C_F(q, a; chi)"""
        services = self.services
        mirrored = GaussSumInstance(
            system=inst.system,
            q=inst.q,
            a=tuple(-x for x in inst.a),
            chars=CharacterSystem(
                chars=tuple(services.characters.conjugate(chi) for chi in inst.chars.chars), modulus=inst.q
            ),
        )
        other = services.expsums.gauss_sum(mirrored)
        if report.tally is not None and other.tally is not None:
            return other.tally.same_as(report.tally.negate_exponents())
        return abs(other.value - report.value.conjugate()) <= 1e-9 * max(1.0, report.magnitude)

    def _random_univariate(self, rng, p: int, max_degree: int = 4, bound: int = 3) -> Polynomial:
        """Nonconstant mod p, coefficients in [-bound, bound]"""
        while True:
            d = int(rng.integers(1, max_degree + 1))
            coefficients = [int(c) for c in rng.integers(-bound, bound + 1, d + 1)]
            if coefficients[d] == 0:
                continue
            if all(c % p == 0 for c in coefficients[1:]):
                continue
            return Polynomial.from_mapping(1, {(e,): c for e, c in enumerate(coefficients)})


def _value(arith, x) -> complex:
    return arith.tally_value(x) if isinstance(x, CyclotomicTally) else complex(x)
