import itertools
import logging
from functools import lru_cache
from math import gcd, lcm
from typing import Iterable, Optional

import numpy as np
from sympy import divisors

from models.arith import CyclotomicTally, UnitGroup
from models.characters import CharacterSystem, DirichletCharacter
from services.arith_service import ArithService, LOG_TABLE_LIMIT
from services.errors import DomainError, ModulusError

logger = logging.getLogger(__name__)

Zero = None


class CharacterService:
    def __init__(self, arith: ArithService):
        self.arith = arith

    def character(self, q: int, exponents: Iterable[int] = ()) -> DirichletCharacter:
        group = self.arith.unit_group(q)
        exponents = tuple(exponents) or (0,) * group.rank()
        return DirichletCharacter(modulus=q, exponents=exponents, orders=group.orders)

    def principal(self, q: int) -> DirichletCharacter:
        return self.character(q)

    def parse_spec(self, spec: str) -> DirichletCharacter:
        """Parse `q:e1,e2,...` (exponents against the canonical generators of q)"""
        modulus, _, rest = spec.strip().partition(":")
        try:
            q = int(modulus)
            exponents = tuple(int(piece) for piece in rest.split(",") if piece.strip())
        except ValueError:
            raise DomainError(f"Malformed character spec {spec!r}; expected q:e1,e2,...")
        group = self.arith.unit_group(q)
        if exponents and len(exponents) != group.rank():
            raise DomainError(
                f"Character mod {q} needs {group.rank()} exponents (generators {list(group.generators)})"
            )
        return self.character(q, exponents)

    def enumerate_characters(self, q: int) -> list[DirichletCharacter]:
        """All phi(q) characters in lexicographic exponent order"""
        group = self.arith.unit_group(q)
        return [
            DirichletCharacter(modulus=q, exponents=exponents, orders=group.orders)
            for exponents in itertools.product(*(range(order) for order in group.orders))
        ]

    def random_character(self, q: int, rng) -> DirichletCharacter:
        orders = self.arith.unit_group(q).orders
        return self.character(q, tuple(int(rng.integers(0, order)) for order in orders))

    def value_table(self, chi: DirichletCharacter) -> np.ndarray:
        """chi(n) = e(table[n] / chi.value_order) for n mod k; -1 marks chi(n) = 0"""
        if chi.modulus > LOG_TABLE_LIMIT:
            raise DomainError(f"No value table above modulus {LOG_TABLE_LIMIT}; evaluate pointwise")
        return _value_table(self.arith, chi)

    def eval_char(self, chi: DirichletCharacter, n: int) -> Optional[tuple[int, int]]:
        """Reduced (m, M) with chi(n) = e(m / M), or Zero when gcd(n, k) > 1"""
        k = chi.modulus
        n %= k
        if gcd(n, k) != 1:
            return Zero
        order = chi.value_order
        if k <= LOG_TABLE_LIMIT:
            m = int(self.value_table(chi)[n])
        else:
            vector = self.arith.discrete_log(self.arith.unit_group(k), n)
            m = sum(e * v * (order // o) for e, v, o in zip(chi.exponents, vector, chi.orders)) % order
        common = gcd(m, order)
        return m // common, order // common

    def eval_complex(self, chi: DirichletCharacter, n: int) -> complex:
        value = self.eval_char(chi, n)
        if value is Zero:
            return 0j
        m, order = value
        return complex(np.exp(2j * np.pi * m / order))

    def conjugate(self, chi: DirichletCharacter) -> DirichletCharacter:
        return chi.model_copy(update={"exponents": tuple((-e) % o for e, o in zip(chi.exponents, chi.orders))})

    def product(self, chi: DirichletCharacter, psi: DirichletCharacter) -> DirichletCharacter:
        if chi.modulus != psi.modulus:
            raise ModulusError(f"Cannot multiply characters mod {chi.modulus} and mod {psi.modulus}; induce first")
        return chi.model_copy(
            update={"exponents": tuple((e + f) % o for e, f, o in zip(chi.exponents, psi.exponents, chi.orders))}
        )

    def induce(self, chi: DirichletCharacter, q: int) -> DirichletCharacter:
        """chi * (principal mod q) as a character mod q"""
        if q % chi.modulus:
            raise DomainError(f"Cannot induce a character mod {chi.modulus} to {q}")
        if q == chi.modulus:
            return chi
        group = self.arith.unit_group(q)
        return self._from_values(group, chi, lambda g: g)

    def crt_component(self, chi: DirichletCharacter, d: int) -> DirichletCharacter:
        """The factor of chi living modulo d, where d | k and gcd(d, k/d) = 1"""
        k = chi.modulus
        rest = k // d if d and k % d == 0 else 0
        if not rest or gcd(d, rest) != 1:
            raise DomainError(f"{d} is not a unitary divisor of {k}")
        group = self.arith.unit_group(d)

        def lift(g: int) -> int:
            # g mod d, 1 mod k/d
            if rest == 1:
                return g
            return (1 + rest * ((g - 1) * pow(rest, -1, d) % d)) % k

        return self._from_values(group, chi, lift)

    def _from_values(self, group: UnitGroup, chi: DirichletCharacter, lift) -> DirichletCharacter:
        exponents = []
        for g, order in zip(group.generators, group.orders):
            m, value_order = self.eval_char(chi, lift(g))
            exponents.append(m * order // value_order)
        return DirichletCharacter(modulus=group.modulus, exponents=tuple(exponents), orders=group.orders)

    def character_system(self, chars: Iterable[DirichletCharacter], q: int) -> CharacterSystem:
        return CharacterSystem(chars=tuple(chars), modulus=q)

    def principal_system(self, s: int, q: int) -> CharacterSystem:
        return CharacterSystem(chars=(self.principal(1),) * s, modulus=q)

    def lcm_modulus(self, system: CharacterSystem) -> int:
        return lcm(1, *system.moduli)

    def conductor(self, chi: DirichletCharacter) -> int:
        """Least d | k such that chi is trivial on units congruent to 1 mod d"""
        k = chi.modulus
        table = self.value_table(chi)
        residues = np.arange(k)
        units = table >= 0
        for d in divisors(k):
            kernel = units & (residues % d == 1 % d)
            if np.all(table[kernel] == 0):
                return int(d)
        return k

    def is_primitive(self, chi: DirichletCharacter) -> bool:
        return self.conductor(chi) == chi.modulus

    def parity(self, chi: DirichletCharacter) -> int:
        """chi(-1) as +1 or -1"""
        m, order = self.eval_char(chi, -1)
        return 1 if m == 0 else -1

    def character_sum_tally(self, chi: DirichletCharacter, q: Optional[int] = None) -> CyclotomicTally:
        """Exact tally of sum_{h mod q} chi(h)"""
        q = q or chi.modulus
        if q % chi.modulus:
            raise DomainError(f"Summation modulus {q} is not a multiple of {chi.modulus}")
        table = self.value_table(chi)
        values = np.tile(table, q // chi.modulus)
        return CyclotomicTally.from_exponents(chi.value_order, values[values >= 0])

    def metadata(self, chi: DirichletCharacter) -> dict:
        return {
            "spec": chi.spec,
            "order": chi.value_order,
            "conductor": self.conductor(chi),
            "primitive": self.is_primitive(chi),
            "parity": self.parity(chi),
            "principal": chi.is_principal,
        }


@lru_cache(maxsize=2048)
def _value_table(arith: ArithService, chi: DirichletCharacter) -> np.ndarray:
    k = chi.modulus
    group = arith.unit_group(k)
    logs = arith.log_table(group)
    order = chi.value_order
    if group.rank() == 0:
        table = np.where(np.gcd(np.arange(k), k) == 1, 0, -1)
    else:
        weights = np.array([e * order // o for e, o in zip(chi.exponents, chi.orders)], dtype=np.int64)
        table = np.where(logs[:, 0] >= 0, (logs @ weights) % order, -1)
    table = table.astype(np.int64)
    table.setflags(write=False)
    return table
