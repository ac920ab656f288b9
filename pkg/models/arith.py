from math import lcm

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class PrimePower(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int
    e: int

    @property
    def value(self) -> int:
        return self.p ** self.e


class Factorization(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    factors: tuple[PrimePower, ...] = ()

    @model_validator(mode="after")
    def _check_product(self):
        product = 1
        for factor in self.factors:
            if factor.e < 1:
                raise ValueError("Exponents must be positive")
            product *= factor.value
        if product != self.n:
            raise ValueError(f"Factors multiply to {product}, not {self.n}")
        primes = [factor.p for factor in self.factors]
        if primes != sorted(set(primes)):
            raise ValueError("Primes must be distinct and sorted")
        return self

    def pairs(self) -> list[tuple[int, int]]:
        return [(factor.p, factor.e) for factor in self.factors]

    def prime_powers(self) -> list[int]:
        return [factor.value for factor in self.factors]


class UnitGroup(BaseModel):
    """(Z/qZ)^x as a product of cyclic groups on canonical generators"""

    model_config = ConfigDict(frozen=True)

    modulus: int
    generators: tuple[int, ...] = ()
    orders: tuple[int, ...] = ()
    # prime power of the CRT component each generator belongs to
    components: tuple[int, ...] = ()

    @property
    def order(self) -> int:
        total = 1
        for order in self.orders:
            total *= order
        return total

    @property
    def exponent(self) -> int:
        """Group exponent (Carmichael lambda of the modulus)"""
        return lcm(1, *self.orders)

    def rank(self) -> int:
        return len(self.generators)


class CyclotomicTally(BaseModel):
    """Exact multiset of roots of unity: value = sum counts[m] * e(m / order)"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    order: int
    counts: np.ndarray

    @field_validator("counts", mode="before")
    @classmethod
    def _freeze_counts(cls, counts):
        array = np.array(counts, dtype=np.int64)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_length(self):
        if self.order < 1:
            raise ValueError("Tally order must be positive")
        if self.counts.shape != (self.order,):
            raise ValueError(f"Tally of order {self.order} needs {self.order} counts, got {self.counts.shape}")
        return self

    @classmethod
    def zero(cls, order: int = 1) -> "CyclotomicTally":
        return cls(order=order, counts=np.zeros(order, dtype=np.int64))

    @classmethod
    def one(cls, order: int = 1) -> "CyclotomicTally":
        counts = np.zeros(order, dtype=np.int64)
        counts[0] = 1
        return cls(order=order, counts=counts)

    @classmethod
    def from_exponents(cls, order: int, exponents, weights=None) -> "CyclotomicTally":
        exponents = np.asarray(exponents, dtype=np.int64) % order
        if weights is None:
            return cls(order=order, counts=np.bincount(exponents, minlength=order))
        counts = np.zeros(order, dtype=np.int64)
        np.add.at(counts, exponents, np.asarray(weights, dtype=np.int64))
        return cls(order=order, counts=counts)

    def rescale(self, order: int) -> "CyclotomicTally":
        """Same value over a multiple of the current order"""
        if order == self.order:
            return self
        if order % self.order:
            raise ValueError(f"Cannot rescale order {self.order} to {order}")
        counts = np.zeros(order, dtype=np.int64)
        counts[:: order // self.order] = self.counts
        return CyclotomicTally(order=order, counts=counts)

    def merge(self, other: "CyclotomicTally") -> "CyclotomicTally":
        """Element-wise count addition (value of the sum)"""
        order = lcm(self.order, other.order)
        return CyclotomicTally(order=order, counts=self.rescale(order).counts + other.rescale(order).counts)

    def negate_exponents(self) -> "CyclotomicTally":
        """Tally of the complex conjugate"""
        return CyclotomicTally(order=self.order, counts=np.roll(self.counts[::-1], 1))

    def scale(self, factor: int) -> "CyclotomicTally":
        return CyclotomicTally(order=self.order, counts=self.counts * factor)

    def terms(self) -> int:
        return int(np.abs(self.counts).sum())

    def support(self) -> list[tuple[int, int]]:
        indices = np.nonzero(self.counts)[0]
        return [(int(m), int(self.counts[m])) for m in indices]

    def same_as(self, other: "CyclotomicTally") -> bool:
        """Multiset equality after unifying orders"""
        order = lcm(self.order, other.order)
        return bool(np.array_equal(self.rescale(order).counts, other.rescale(order).counts))

    def __eq__(self, other):
        if not isinstance(other, CyclotomicTally):
            return NotImplemented
        return self.same_as(other)

    __hash__ = None

    def to_dict(self) -> dict:
        return {"order": self.order, "support": self.support()}
