import itertools
import logging
import math
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from models.characters import CharacterSystem
from models.circle import (
    AsymptoticReport,
    BoxSpec,
    MajorArcSummary,
    SeriesTerm,
    SingularIntegralResult,
    SingularSeriesResult,
)
from models.forms import FormSystem, Polynomial
from services.arith_service import ArithService
from services.character_service import CharacterService
from services.errors import CapacityExceeded, DomainError
from services.expsum_service import ExpSumService
from services.grid import GridEngine, ResidueGrid

logger = logging.getLogger(__name__)

DEFAULT_EPS = 0.02
DEFAULT_SAMPLES = 1 << 18
# local factors below this are reported as a possible obstruction
OBSTRUCTION_THRESHOLD = 1e-9
# pairwise disjointness is only checked exactly below this many boxes
MAX_DISJOINT_BOXES = 2000


class CircleService:
    """Numerical shadow of the prime-weighted circle method asymptotic"""

    def __init__(
        self,
        arith: ArithService,
        characters: CharacterService,
        expsums: ExpSumService,
        engine: GridEngine,
    ):
        self.arith = arith
        self.characters = characters
        self.expsums = expsums
        self.engine = engine
        self.settings = engine.settings

    # ----------------------------------------------------------- von Mangoldt

    def sieve_von_mangoldt(self, N: int) -> np.ndarray:
        """table[n] = log p if n = p^k, else 0, for 0 <= n <= N"""
        if N < 0:
            raise DomainError(f"Sieve bound must be nonnegative, got {N}")
        if N > self.settings.sieve_cap:
            raise CapacityExceeded("von Mangoldt sieve", N, self.settings.sieve_cap)
        table = np.zeros(max(N, 1) + 1)
        if N < 2:
            return table[: N + 1]
        is_prime = np.ones(N + 1, dtype=bool)
        is_prime[:2] = False
        for p in range(2, math.isqrt(N) + 1):
            if is_prime[p]:
                is_prime[p * p :: p] = False
        primes = np.nonzero(is_prime)[0]
        table[primes] = np.log(primes)
        for p in primes[primes <= math.isqrt(N)]:
            power = int(p) * int(p)
            while power <= N:
                table[power] = math.log(p)
                power *= int(p)
        return table

    def prime_counts(self, N: int) -> dict:
        table = self.sieve_von_mangoldt(N)
        support = table > 0
        primes = int(np.count_nonzero(_is_prime_mask(table)))
        return {
            "N": N,
            "psi": math.fsum(table),
            "primes": primes,
            "prime_powers": int(np.count_nonzero(support)),
        }

    # ------------------------------------------------------------ counting

    def box_ranges(self, X: float, box: BoxSpec) -> list[tuple[int, int]]:
        """Integer ranges X b' < x <= X b'' per coordinate, as inclusive (low, high)"""
        scale = Fraction(X)
        return [(math.floor(scale * low) + 1, math.floor(scale * high)) for low, high in box.sides]

    def weighted_solution_count(self, system: FormSystem, X: float, box: Optional[BoxSpec] = None) -> float:
        """sum of Lambda(x_1)...Lambda(x_s) over integer x in X*box with F(x) = 0"""
        box = box or BoxSpec.default(system.s)
        if box.s != system.s:
            raise DomainError(f"Box has {box.s} sides, system has {system.s} variables")
        ranges = self.box_ranges(X, box)
        table = self.sieve_von_mangoldt(max(high for _, high in ranges))
        candidates = []
        for low, high in ranges:
            values = np.arange(max(low, 0), high + 1, dtype=np.int64)
            values = values[table[values] > 0] if len(values) else values
            candidates.append(values)
        if any(len(values) == 0 for values in candidates):
            return 0.0

        solved = self._solvable_variable(system, candidates)
        if solved is None:
            return self._count_full(system, candidates, table)
        return self._count_solve_last(system, candidates, table, *solved)

    def _solvable_variable(self, system: FormSystem, candidates) -> Optional[tuple[int, int]]:
        """(variable j, form r) with F_r of degree exactly 1 in x_j, preferring the longest range"""
        best = None
        for j in range(system.s):
            for r, form in enumerate(system.forms):
                if form.degree_in(j) == 1 and all(other.degree_in(j) <= 1 for other in system.forms):
                    if best is None or len(candidates[j]) > len(candidates[best[0]]):
                        best = (j, r)
                    break
        return best

    def _count_full(self, system: FormSystem, candidates, table: np.ndarray) -> float:
        grid = ResidueGrid(candidates)
        logger.info("Counting solutions on the full grid of %s points", grid.size)

        def work(points: np.ndarray) -> float:
            mask = np.ones(len(points), dtype=bool)
            for form in system.forms:
                mask &= evaluate_exact(form, points) == 0
            return float(np.sum(np.prod(table[points[mask]], axis=1)))

        return self.engine.reduce_grid(grid, work, _add, 0.0, what="solution count")

    def _count_solve_last(self, system: FormSystem, candidates, table: np.ndarray, j: int, r: int) -> float:
        s = system.s
        slope, rest = split_linear(system.forms[r], j)
        others = [candidates[i] if i != j else np.zeros(1, dtype=np.int64) for i in range(s)]
        grid = ResidueGrid(others)
        low, high = int(candidates[j][0]), int(candidates[j][-1])
        column = candidates[j]
        logger.info("Counting solutions by solving for x%s over %s points", j + 1, grid.size)

        def weight(points: np.ndarray) -> float:
            mask = np.ones(len(points), dtype=bool)
            for form in system.forms:
                mask &= evaluate_exact(form, points) == 0
            return float(np.sum(np.prod(table[points[mask]], axis=1)))

        def work(points: np.ndarray) -> float:
            A = evaluate_exact(slope, points)
            B = evaluate_exact(rest, points)
            total = 0.0
            nonzero = A != 0
            divisible = nonzero.copy()
            divisible[nonzero] = (-B[nonzero]) % A[nonzero] == 0
            solved = points[divisible].copy()
            if len(solved):
                x = (-B[divisible]) // A[divisible]
                inside = ((x >= low) & (x <= high)).astype(bool)
                solved, x = solved[inside], np.asarray(x[inside], dtype=np.int64)
                solved[:, j] = x
                total += weight(solved[table[x] > 0])
            free = ~nonzero & (B == 0)
            for point in points[free]:
                expanded = np.repeat(point[None, :], len(column), axis=0)
                expanded[:, j] = column
                total += weight(expanded)
            return total

        return self.engine.reduce_grid(grid, work, _add, 0.0, what="solution count")

    # ----------------------------------------------------------- major arcs

    def major_arc_parameters(self, X: float, R: int) -> float:
        """Q = X^(1 / (4 (R + 1)))"""
        if X < 2:
            raise DomainError(f"Need X >= 2, got {X}")
        return X ** (1 / (4 * (R + 1)))

    def major_arc_summary(self, X: float, degrees: Sequence[int], Q: Optional[float] = None) -> MajorArcSummary:
        R = len(degrees)
        Q = self.major_arc_parameters(X, R) if Q is None else Q
        boxes = []
        union_bound = measure = 0.0
        for q in range(1, math.floor(Q) + 1):
            widths = [Q / (q * X**d) for d in degrees]
            centres = [a for a in itertools.product(range(q), repeat=R) if gcd(q, *a) == 1]
            union_bound += q**R * math.prod(2 * w for w in widths)
            measure += len(centres) * math.prod(min(2 * w, 1.0) for w in widths)
            boxes.extend((tuple(Fraction(x, q) for x in a), widths) for a in centres)
        disjoint = None
        if len(boxes) <= MAX_DISJOINT_BOXES:
            disjoint = all(_separated(first, second) for first, second in itertools.combinations(boxes, 2))
        return MajorArcSummary(
            X=X,
            Q=Q,
            box_count=len(boxes),
            measure_bound=measure,
            union_bound=union_bound,
            disjoint=disjoint,
            classical_condition=2 * Q**2 <= X ** min(degrees, default=0),
        )

    # ------------------------------------------------------- singular series

    def singular_series_partial(
        self, system: FormSystem, Q: int, method: str = "multiplicative"
    ) -> SingularSeriesResult:
        """S(Q) = sum_{q <= Q} nu(q; chi0, ..., chi0) / phi(q)^s"""
        s = system.s
        cache: dict[int, complex] = {}
        terms: list[SeriesTerm] = []
        notes: list[str] = []
        last_q = 0
        for q in range(1, Q + 1):
            try:
                if method == "direct":
                    nu = self.expsums.nu_sum(system, q, self.characters.principal_system(s, q))
                elif method == "multiplicative":
                    nu = self._nu_multiplicative(system, q, cache)
                else:
                    raise DomainError(f"Unknown series method {method!r}; use multiplicative or direct")
            except CapacityExceeded as error:
                notes.append(f"Stopped before q={q}: {error}")
                break
            term = nu / self.arith.phi(q) ** s
            logger.debug("nu(%s) = %s, term %s", q, nu, term)
            terms.append(SeriesTerm(q=q, nu=nu, term=term.real))
            last_q = q

        partial = np.cumsum([t.term for t in terms]) if terms else np.zeros(0)
        value = math.fsum(t.term for t in terms)
        imag = abs(math.fsum((t.nu / self.arith.phi(t.q) ** s).imag for t in terms))
        increments = []
        start = 1
        while 2 * start <= last_q:
            increments.append((start, abs(float(partial[2 * start - 1] - partial[start - 1]))))
            start *= 2
        decreasing = all(later <= earlier for (_, earlier), (_, later) in zip(increments, increments[1:]))
        obstruction = self._local_obstruction(system, terms)
        if obstruction:
            notes.append(f"Local factor at p={obstruction} vanishes up to q={last_q}; possible local obstruction")
        notes.append("Partial sums can show stabilisation, never convergence.")
        return SingularSeriesResult(
            Q=Q,
            value=value,
            imag_residual=imag,
            last_q=last_q,
            dyadic_increments=increments,
            increments_decreasing=decreasing,
            abs_sum=math.fsum(abs(t.nu) / self.arith.phi(t.q) ** s for t in terms),
            possible_local_obstruction=obstruction is not None,
            notes=notes,
        )

    def lemma_abs_sum(self, system: FormSystem, Q: int, chars: CharacterSystem) -> float:
        """sum over q <= Q with k0 | q of |nu(q; chi)| / phi(q)^s, k0 the lcm of the moduli"""
        k0 = self.characters.lcm_modulus(chars)
        cache: dict = {}
        total = []
        for q in range(k0, Q + 1, k0):
            nu = self._nu_multiplicative(system, q, cache, chars.chars)
            total.append(abs(nu) / self.arith.phi(q) ** system.s)
        return math.fsum(total)

    def _nu_multiplicative(self, system: FormSystem, q: int, cache: dict, chars=None) -> complex:
        s = system.s
        value = 1 + 0j
        for pe in self.arith.coprime_split(q):
            if chars is None:
                components = (self.characters.principal(1),) * s
            else:
                components = tuple(self.characters.crt_component(chi, gcd(chi.modulus, pe)) for chi in chars)
            key = (pe, tuple(chi.spec for chi in components))
            if key not in cache:
                cache[key] = self.expsums.nu_sum(system, pe, CharacterSystem(chars=components, modulus=pe))
            value *= cache[key]
        return value

    def _local_obstruction(self, system: FormSystem, terms: list[SeriesTerm]) -> Optional[int]:
        """Least prime whose truncated local factor 1 + sum_e nu(p^e)/phi(p^e)^s vanishes"""
        by_q = {t.q: t for t in terms}
        for p in sorted({p for t in terms for p, _ in self.arith.factorize(t.q).pairs()}):
            local, pe = 1.0, p
            while pe in by_q:
                local += by_q[pe].term
                pe *= p
            if abs(local) < OBSTRUCTION_THRESHOLD:
                return p
        return None

    # ------------------------------------------------------ singular integral

    def singular_integral_estimate(
        self,
        system: FormSystem,
        box: Optional[BoxSpec] = None,
        eps: float = DEFAULT_EPS,
        samples: int = DEFAULT_SAMPLES,
    ) -> SingularIntegralResult:
        """vol{u in box : |F_i(u)| <= eps/2} / eps^R by unscrambled Halton sampling"""
        box = box or BoxSpec.default(system.s)
        if eps <= 0:
            raise DomainError(f"Thickness must be positive, got {eps}")
        if system.R > system.s:
            raise DomainError(f"Need R <= s, got R={system.R} s={system.s}")
        unit = qmc.Halton(d=system.s, scramble=False).random(samples)
        lows = np.array([float(low) for low, _ in box.sides])
        widths = np.array([float(high - low) for low, high in box.sides])
        points = lows + unit * widths

        def density(thickness: float) -> float:
            def work(start: int, stop: int) -> int:
                chunk = points[start:stop]
                inside = np.ones(len(chunk), dtype=bool)
                for form in system.forms:
                    inside &= np.abs(evaluate_float(form, chunk)) <= thickness / 2
                return int(np.count_nonzero(inside))

            hits = self.engine.reduce(samples, work, _add, 0)
            return box.volume * hits / samples / thickness**system.R

        value, halved = density(eps), density(eps / 2)
        sensitivity = abs(value - halved) / abs(value) if value else (0.0 if halved == 0 else math.inf)
        return SingularIntegralResult(
            value=value, eps=eps, samples=samples, halved_value=halved, relative_sensitivity=sensitivity
        )

    # --------------------------------------------------------------- report

    def asymptotic_report(
        self,
        system: FormSystem,
        X: float,
        box: Optional[BoxSpec] = None,
        Q: Optional[int] = None,
        eps: float = DEFAULT_EPS,
        samples: int = DEFAULT_SAMPLES,
    ) -> AsymptoticReport:
        box = box or BoxSpec.default(system.s)
        cutoff = Q if Q is not None else max(1, math.floor(self.major_arc_parameters(X, system.R)))
        count = self.weighted_solution_count(system, X, box)
        series = self.singular_series_partial(system, cutoff)
        integral = self.singular_integral_estimate(system, box, eps, samples)
        D = system.total_degree
        predicted = series.value * integral.value * X ** (system.s - D)
        status = "ok"
        ratio = None
        if integral.value == 0:
            status = "NoRealSolutions"
        elif abs(series.value) < OBSTRUCTION_THRESHOLD:
            status = "LocalObstruction"
        elif predicted != 0:
            ratio = count / predicted
        logger.info("N=%s predicted=%s ratio=%s", count, predicted, ratio)
        return AsymptoticReport(
            X=X,
            N=count,
            singular_series=series.value,
            singular_integral=integral.value,
            predicted=predicted,
            ratio=ratio,
            Q=cutoff,
            total_degree=D,
            series_tail=series.dyadic_increments,
            integral_sensitivity=integral.relative_sensitivity,
            status=status,
        )


def split_linear(form: Polynomial, j: int) -> tuple[Polynomial, Polynomial]:
    """F = x_j * A + B with A, B free of x_j"""
    slope, rest = {}, {}
    for term in form.terms:
        exps = list(term.exps)
        if exps[j] > 1:
            raise DomainError(f"Form has degree {exps[j]} in x{j + 1}")
        target = slope if exps[j] == 1 else rest
        exps[j] = 0
        target[tuple(exps)] = target.get(tuple(exps), 0) + term.coeff
    return Polynomial.from_mapping(form.s, slope), Polynomial.from_mapping(form.s, rest)


def evaluate_exact(poly: Polynomial, points: np.ndarray) -> np.ndarray:
    """Integer values; falls back to Python integers when int64 could overflow"""
    largest = int(np.abs(points).max()) if points.size else 0
    bound = sum(abs(term.coeff) * max(largest, 1) ** term.degree for term in poly.terms)
    dtype = np.int64 if bound < 2**62 else object
    points = points.astype(dtype)
    values = np.zeros(len(points), dtype=dtype)
    for term in poly.terms:
        column = np.full(len(points), term.coeff, dtype=dtype)
        for j, e in enumerate(term.exps):
            if e:
                column = column * points[:, j] ** e
        values = values + column
    return values


def evaluate_float(poly: Polynomial, points: np.ndarray) -> np.ndarray:
    values = np.zeros(len(points))
    for term in poly.terms:
        column = np.full(len(points), float(term.coeff))
        for j, e in enumerate(term.exps):
            if e:
                column = column * points[:, j] ** e
        values += column
    return values


def _separated(first, second) -> bool:
    (centre, widths), (other, other_widths) = first, second
    for x, y, w, v in zip(centre, other, widths, other_widths):
        distance = abs(x - y) % 1
        if float(min(distance, 1 - distance)) > w + v:
            return True
    return False


def _is_prime_mask(table: np.ndarray) -> np.ndarray:
    """n is prime iff Lambda(n) = log n"""
    n = np.arange(len(table))
    with np.errstate(divide="ignore"):
        return (table > 0) & np.isclose(table, np.log(np.maximum(n, 1)))


def _add(x, y):
    return x + y
