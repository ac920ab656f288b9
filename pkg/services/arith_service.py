import logging
import math
from functools import lru_cache
from math import gcd, lcm
from typing import Optional

import numpy as np
from sympy import Poly, ZZ, cyclotomic_poly, factorint, isprime, primerange, symbols
from sympy.functions.combinatorial.numbers import totient
from sympy.ntheory import n_order
from sympy.ntheory.residue_ntheory import discrete_log as sympy_discrete_log

from config import Settings, get_settings
from models.arith import CyclotomicTally, Factorization, PrimePower, UnitGroup
from services.errors import CapacityExceeded, DomainError, NotAUnit

logger = logging.getLogger(__name__)

MAX_FACTOR_INPUT = 2**63 - 1
# moduli up to this size get a full discrete-log table
LOG_TABLE_LIMIT = 10**6

_X = symbols("x")


class ArithService:
    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def factorize(self, n: int) -> Factorization:
        """Prime factorization of 1 <= n < 2^63"""
        if n < 1:
            raise DomainError(f"Cannot factorize {n}; need a positive integer")
        if n > MAX_FACTOR_INPUT:
            raise DomainError(f"{n} exceeds the 63-bit factoring range")
        return _factorize(n)

    def phi(self, n: int) -> int:
        return int(totient(n)) if n > 1 else 1

    def unit_group(self, q: int) -> UnitGroup:
        if q < 1:
            raise DomainError(f"Modulus must be positive, got {q}")
        return _unit_group(q)

    def exponentiate(self, group: UnitGroup, vector) -> int:
        q = group.modulus
        result = 1 % q
        for g, v in zip(group.generators, vector):
            result = result * pow(g, int(v), q) % q
        return result

    def discrete_log(self, group: UnitGroup, u: int) -> tuple[int, ...]:
        """Exponent vector of u against the canonical generators"""
        q = group.modulus
        u %= q
        if gcd(u, q) != 1:
            raise NotAUnit(u, q)
        if q <= LOG_TABLE_LIMIT:
            return tuple(int(v) for v in self.log_table(group)[u])
        return self._component_log(group, u)

    def log_table(self, group: UnitGroup) -> np.ndarray:
        """Array of shape (q, rank); rows of non-units are -1"""
        return _log_table(group)

    def units_mask(self, q: int) -> np.ndarray:
        residues = np.arange(q, dtype=np.int64)
        return np.gcd(residues, q) == 1

    def _component_log(self, group: UnitGroup, u: int) -> tuple[int, ...]:
        q = group.modulus
        vector = []
        index = 0
        while index < group.rank():
            pe = group.components[index]
            base = u % pe
            if pe % 2 == 0 and pe >= 8:
                sign = 0 if base % 4 == 1 else 1
                base = base if sign == 0 else (-base) % pe
                vector += [sign, int(sympy_discrete_log(pe, base, 5))]
                index += 2
                continue
            if pe == 4:
                vector.append(0 if base % 4 == 1 else 1)
            else:
                vector.append(int(sympy_discrete_log(pe, base, group.generators[index] % pe)))
            index += 1
        logger.debug("component log of %s mod %s -> %s", u, q, vector)
        return tuple(vector)

    def tally_convolve(self, a: CyclotomicTally, b: CyclotomicTally) -> CyclotomicTally:
        """Tally of the product value(a) * value(b)"""
        order = lcm(a.order, b.order)
        if order > self.settings.tally_cap:
            raise CapacityExceeded("tally order", order, self.settings.tally_cap)
        left, right = a.rescale(order), b.rescale(order)
        if np.count_nonzero(left.counts) > np.count_nonzero(right.counts):
            left, right = right, left
        counts = np.zeros(order, dtype=np.int64)
        for m in np.nonzero(left.counts)[0]:
            counts += left.counts[m] * np.roll(right.counts, int(m))
        return CyclotomicTally(order=order, counts=counts)

    def tally_value(self, tally: CyclotomicTally) -> complex:
        """Compensated evaluation of sum counts[m] e(m / order)"""
        support = np.nonzero(tally.counts)[0]
        if support.size == 0:
            return 0j
        angles = 2.0 * np.pi * support / tally.order
        weights = tally.counts[support].astype(np.float64)
        real = math.fsum(weights * np.cos(angles))
        imag = math.fsum(weights * np.sin(angles))
        return complex(real, imag)

    def tally_is_zero(self, tally: CyclotomicTally) -> bool:
        """Exact: sum counts[m] x^m vanishes at e(1/order) iff the order-th cyclotomic polynomial divides it"""
        if not tally.counts.any():
            return True
        if tally.order > 1 and (tally.counts == tally.counts[0]).all():
            return True
        numerator = Poly([int(c) for c in tally.counts[::-1]], _X, domain=ZZ)
        return numerator.rem(Poly(cyclotomic_poly(tally.order, _X), _X, domain=ZZ)).is_zero

    def prime_list(self, text: str) -> list[int]:
        """'11..97' for every prime in the range, or an explicit comma-separated list of primes"""
        try:
            if ".." in text:
                low, _, high = text.partition("..")
                return [int(p) for p in primerange(int(low), int(high) + 1)]
            primes = [int(piece) for piece in text.split(",") if piece.strip()]
        except ValueError:
            raise DomainError(f"Expected 'low..high' or a comma-separated list of primes, got {text!r}")
        for p in primes:
            if not isprime(p):
                raise DomainError(f"{p} is not prime")
        return primes

    def coprime_split(self, q: int) -> list[int]:
        """Prime-power factors of q"""
        return self.factorize(q).prime_powers()


@lru_cache(maxsize=4096)
def _factorize(n: int) -> Factorization:
    factors = tuple(PrimePower(p=int(p), e=int(e)) for p, e in sorted(factorint(n).items()))
    return Factorization(n=n, factors=factors)


def least_primitive_root(pe: int, p: int) -> int:
    """Least primitive root modulo an odd prime power, by increasing search"""
    target = pe // p * (p - 1)
    g = 2
    while True:
        if g % p and n_order(g, pe) == target:
            return g
        g += 1


@lru_cache(maxsize=1024)
def _unit_group(q: int) -> UnitGroup:
    generators, orders, components = [], [], []
    for p, e in _factorize(q).pairs():
        pe = p**e
        rest = q // pe
        local: list[tuple[int, int]] = []
        if p == 2:
            if e == 2:
                local = [(3, 2)]
            elif e >= 3:
                local = [(pe - 1, 2), (5, 2 ** (e - 2))]
        else:
            local = [(least_primitive_root(pe, p), pe // p * (p - 1))]
        for g, order in local:
            generators.append(_lift(g, pe, rest))
            orders.append(order)
            components.append(pe)
    return UnitGroup(
        modulus=q, generators=tuple(generators), orders=tuple(orders), components=tuple(components)
    )


def _lift(g: int, pe: int, rest: int) -> int:
    """x = g mod pe, x = 1 mod rest"""
    if rest == 1:
        return g % pe
    return (1 + rest * ((g - 1) * pow(rest, -1, pe) % pe)) % (pe * rest)


@lru_cache(maxsize=256)
def _log_table(group: UnitGroup) -> np.ndarray:
    q = group.modulus
    rank = group.rank()
    table = np.full((q, rank), -1, dtype=np.int64)
    units = np.array([1 % q], dtype=np.int64)
    vectors = np.zeros((1, rank), dtype=np.int64)
    for index, (g, order) in enumerate(zip(group.generators, group.orders)):
        powers = np.array([pow(g, j, q) for j in range(order)], dtype=np.int64)
        units = (units[:, None] * powers[None, :] % q).reshape(-1)
        vectors = np.repeat(vectors, order, axis=0)
        vectors[:, index] = np.tile(np.arange(order), len(vectors) // order)
    table[units] = vectors
    table.setflags(write=False)
    return table
