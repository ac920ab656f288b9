from math import gcd, lcm

from pydantic import BaseModel, ConfigDict, model_validator


class DirichletCharacter(BaseModel):
    """chi(g_i) = e(exponents[i] / orders[i]) on the canonical generators of (Z/kZ)^x"""

    model_config = ConfigDict(frozen=True)

    modulus: int
    exponents: tuple[int, ...] = ()
    orders: tuple[int, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _reduce_exponents(cls, data):
        if isinstance(data, dict):
            exponents, orders = data.get("exponents", ()), data.get("orders", ())
            if len(exponents) == len(orders):
                data = {**data, "exponents": tuple(int(e) % int(o) for e, o in zip(exponents, orders))}
        return data

    @model_validator(mode="after")
    def _check_shape(self):
        if self.modulus < 1:
            raise ValueError("Character modulus must be positive")
        if len(self.exponents) != len(self.orders):
            raise ValueError(
                f"Character mod {self.modulus} needs {len(self.orders)} exponents, got {len(self.exponents)}"
            )
        return self

    @property
    def is_principal(self) -> bool:
        return all(e == 0 for e in self.exponents)

    @property
    def value_order(self) -> int:
        """Order of chi in the character group; chi takes values in mu_{value_order}"""
        return lcm(1, *(o // gcd(e, o) for e, o in zip(self.exponents, self.orders)))

    @property
    def spec(self) -> str:
        return f"{self.modulus}:" + ",".join(str(e) for e in self.exponents)


class CharacterSystem(BaseModel):
    """chi_1, ..., chi_s with moduli k_i dividing a common modulus q"""

    model_config = ConfigDict(frozen=True)

    chars: tuple[DirichletCharacter, ...]
    modulus: int

    @model_validator(mode="after")
    def _check_moduli(self):
        for index, chi in enumerate(self.chars):
            if self.modulus % chi.modulus:
                raise ValueError(f"Character {index} has modulus {chi.modulus} not dividing {self.modulus}")
        return self

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(chi.modulus for chi in self.chars)

    @property
    def value_order(self) -> int:
        return lcm(1, *(chi.value_order for chi in self.chars))

    def __len__(self) -> int:
        return len(self.chars)
