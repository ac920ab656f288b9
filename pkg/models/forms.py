from pydantic import BaseModel, ConfigDict, model_validator


class Term(BaseModel):
    model_config = ConfigDict(frozen=True)

    coeff: int
    exps: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exps)


class Polynomial(BaseModel):
    """Sparse integer polynomial in variables x1..xs (0-based internally)"""

    model_config = ConfigDict(frozen=True)

    s: int
    terms: tuple[Term, ...] = ()

    @model_validator(mode="after")
    def _check_terms(self):
        if self.s < 0:
            raise ValueError("Variable count must be nonnegative")
        seen = set()
        for term in self.terms:
            if len(term.exps) != self.s:
                raise ValueError(f"Exponent vector {term.exps} does not have {self.s} entries")
            if any(e < 0 for e in term.exps):
                raise ValueError(f"Negative exponent in {term.exps}")
            if term.coeff == 0:
                raise ValueError("Zero coefficients are not stored")
            if term.exps in seen:
                raise ValueError(f"Repeated monomial {term.exps}")
            seen.add(term.exps)
        return self

    @classmethod
    def from_mapping(cls, s: int, mapping: dict) -> "Polynomial":
        terms = tuple(
            Term(coeff=coeff, exps=exps)
            for exps, coeff in sorted(mapping.items(), reverse=True)
            if coeff != 0
        )
        return cls(s=s, terms=terms)

    def as_mapping(self) -> dict[tuple[int, ...], int]:
        return {term.exps: term.coeff for term in self.terms}

    @property
    def total_degree(self) -> int:
        return max((term.degree for term in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree_in(self, var: int) -> int:
        return max((term.exps[var] for term in self.terms), default=0)

    def variables(self) -> set[int]:
        return {j for term in self.terms for j, e in enumerate(term.exps) if e}

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for index, term in enumerate(self.terms):
            factors = [f"x{j + 1}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(term.exps) if e]
            magnitude = abs(term.coeff)
            if not factors:
                body = str(magnitude)
            elif magnitude == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(magnitude)] + factors)
            sign = "-" if term.coeff < 0 else "+"
            pieces.append(("-" if sign == "-" else "") + body if index == 0 else f" {sign} {body}")
        return "".join(pieces)


class Form(Polynomial):
    """Homogeneous polynomial; the zero form still carries a degree"""

    degree: int

    @model_validator(mode="after")
    def _check_homogeneous(self):
        degrees = {term.degree for term in self.terms}
        if degrees and degrees != {self.degree}:
            raise ValueError(f"Terms of degrees {sorted(degrees)} in a form of degree {self.degree}")
        return self

    @classmethod
    def from_mapping(cls, s: int, mapping: dict, degree: int | None = None) -> "Form":
        terms = tuple(
            Term(coeff=coeff, exps=exps)
            for exps, coeff in sorted(mapping.items(), reverse=True)
            if coeff != 0
        )
        if degree is None:
            degree = sum(terms[0].exps) if terms else 0
        return cls(s=s, terms=terms, degree=degree)


class FormSystem(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: int
    forms: tuple[Form, ...]

    @model_validator(mode="after")
    def _check_variables(self):
        if self.s < 1:
            raise ValueError(f"A system needs at least one variable, got s={self.s}")
        if not self.forms:
            raise ValueError("A system needs at least one form")
        for index, form in enumerate(self.forms):
            if form.s != self.s:
                raise ValueError(f"Form {index} has {form.s} variables, system has {self.s}")
        return self

    @property
    def R(self) -> int:
        return len(self.forms)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(form.degree for form in self.forms)

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    @property
    def total_degree(self) -> int:
        """Sum of all degrees of the system"""
        return sum(self.degrees)

    def to_text(self) -> str:
        return "; ".join(form.to_text() for form in self.forms)
