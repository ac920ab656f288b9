import json
import logging
import re
from functools import lru_cache
from typing import Optional

from sympy import ZZ
from sympy.polys.orderings import lex
from sympy.polys.rings import PolyRing

from models.forms import Form, FormSystem, Polynomial
from services.errors import DomainError, FormSyntaxError, HomogeneityError, MultiGaussError

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>x(?P<index>\d+))|(?P<op>[-+*^]))")


class FormService:
    """Parsing and symbolic manipulation of sparse integer forms"""

    def parse_polynomial(self, text: str, s: Optional[int] = None) -> Polynomial:
        mapping, used = _parse_sum(text, 0)
        s = _resolve_arity(s, used)
        return Polynomial.from_mapping(s, _pad(mapping, s))

    def parse_system(self, text: str, s: Optional[int] = None) -> FormSystem:
        chunks = text.split(";")
        parsed, offset, used = [], 0, 0
        for chunk in chunks:
            if not chunk.strip():
                raise FormSyntaxError("Empty form", offset)
            mapping, arity = _parse_sum(chunk, offset)
            parsed.append(mapping)
            used = max(used, arity)
            offset += len(chunk) + 1
        s = _resolve_arity(s, used)
        forms = []
        for index, mapping in enumerate(parsed):
            padded = _pad(mapping, s)
            degrees = {sum(exps) for exps, coeff in padded.items() if coeff}
            if len(degrees) > 1:
                raise HomogeneityError(index, degrees)
            forms.append(Form.from_mapping(s, padded))
        return FormSystem(s=s, forms=tuple(forms))

    def as_form(self, poly: Polynomial) -> Form:
        degrees = {term.degree for term in poly.terms}
        if len(degrees) > 1:
            raise HomogeneityError(0, degrees)
        return Form(s=poly.s, terms=poly.terms, degree=degrees.pop() if degrees else 0)

    def system(self, forms, s: Optional[int] = None) -> FormSystem:
        forms = tuple(forms)
        if not forms:
            raise DomainError("A system needs at least one form")
        return FormSystem(s=s if s is not None else forms[0].s, forms=forms)

    def eval_mod(self, poly: Polynomial, x, q: int) -> int:
        if len(x) != poly.s:
            raise DomainError(f"Point has {len(x)} coordinates, polynomial has {poly.s} variables")
        total = 0
        for term in poly.terms:
            value = term.coeff
            for xj, e in zip(x, term.exps):
                if e:
                    value = value * pow(int(xj), e, q) % q
            total += value
        return total % q

    def jacobian(self, system: FormSystem, k: Optional[int] = None) -> tuple[tuple[Form, ...], ...]:
        """Matrix of partials d F_i / d x_j for the first k columns"""
        s = system.s
        k = s if k is None else k
        if not 1 <= k <= s:
            raise DomainError(f"Column cutoff {k} outside 1..{s}")
        return tuple(tuple(self.partial(form, j) for j in range(k)) for form in system.forms)

    def partial(self, form: Form, j: int) -> Form:
        ring = _ring(form.s)
        derivative = to_ring(form).diff(ring.gens[j])
        return from_ring(derivative, form.s, degree=max(form.degree - 1, 0))

    def euler_identity_holds(self, form: Form) -> bool:
        """sum_j x_j dF/dx_j == d * F"""
        ring = _ring(form.s)
        poly = to_ring(form)
        lhs = sum((x * poly.diff(x) for x in ring.gens), ring.zero)
        return lhs == form.degree * poly

    def scale(self, form: Form, factor: int) -> Form:
        return from_ring(to_ring(form) * factor, form.s, degree=form.degree)

    def bihomogenize(self, form: Form) -> Form:
        """G(x; y) = F(x1 y1, ..., xs ys), variables ordered (x | y)"""
        mapping = {term.exps + term.exps: term.coeff for term in form.terms}
        return Form.from_mapping(2 * form.s, mapping, degree=2 * form.degree)

    def dehomogenize_y(self, form: Form) -> Form:
        """Substitute y = (1, ..., 1) in a (x | y) form"""
        s = form.s // 2
        mapping: dict = {}
        for term in form.terms:
            exps = term.exps[:s]
            mapping[exps] = mapping.get(exps, 0) + term.coeff
        return Form.from_mapping(s, mapping, degree=form.degree // 2)

    def quadruple_difference(self, form: Form) -> Form:
        """L = G(h;j) - G(h;j') - G(h';j) + G(h';j'), variables ordered (h | h' | j | j')"""
        s = form.s
        zero = (0,) * s
        mapping: dict = {}
        for term in form.terms:
            e = term.exps
            for exps, sign in (
                (e + zero + e + zero, 1),
                (e + zero + zero + e, -1),
                (zero + e + e + zero, -1),
                (zero + e + zero + e, 1),
            ):
                mapping[exps] = mapping.get(exps, 0) + sign * term.coeff
        difference = Form.from_mapping(4 * s, mapping, degree=2 * form.degree)
        if not (
            self.identify_blocks(difference, s, source=1, target=0).is_zero
            and self.identify_blocks(difference, s, source=3, target=2).is_zero
        ):
            raise MultiGaussError("Quadruple difference does not vanish on the diagonal")
        return difference

    def identify_blocks(self, poly: Polynomial, width: int, source: int, target: int) -> Polynomial:
        """Substitute variable block `source` by block `target` (blocks of `width` variables)"""
        mapping: dict = {}
        for term in poly.terms:
            exps = list(term.exps)
            for j in range(width):
                exps[target * width + j] += exps[source * width + j]
                exps[source * width + j] = 0
            key = tuple(exps)
            mapping[key] = mapping.get(key, 0) + term.coeff
        return Polynomial.from_mapping(poly.s, mapping)

    def random_form(self, rng, s: int, degree: int, max_terms: int = 3, coefficient_bound: int = 3) -> Form:
        """Nonzero form with up to max_terms monomials, coefficients in [-bound, bound]"""
        coefficients = [c for c in range(-coefficient_bound, coefficient_bound + 1) if c]
        while True:
            mapping: dict = {}
            for _ in range(int(rng.integers(1, max_terms + 1))):
                exps = tuple(int(e) for e in rng.multinomial(degree, [1 / s] * s))
                mapping[exps] = mapping.get(exps, 0) + int(rng.choice(coefficients))
            form = Form.from_mapping(s, mapping, degree)
            if not form.is_zero:
                return form

    def random_system(self, rng, s: int, R: int, max_degree: int = 3) -> FormSystem:
        forms = tuple(self.random_form(rng, s, int(rng.integers(1, max_degree + 1))) for _ in range(R))
        return FormSystem(s=s, forms=forms)

    def degree_part(self, system: FormSystem, d: int) -> FormSystem:
        return FormSystem(s=system.s, forms=tuple(form for form in system.forms if form.degree == d))

    def to_json(self, system: FormSystem) -> str:
        payload = {
            "s": system.s,
            "forms": [[{"coeff": t.coeff, "exps": list(t.exps)} for t in form.terms] for form in system.forms],
        }
        return json.dumps(payload)

    def from_json(self, text: str) -> FormSystem:
        payload = json.loads(text)
        s = int(payload["s"])
        forms = []
        for index, terms in enumerate(payload["forms"]):
            mapping = {tuple(int(e) for e in t["exps"]): int(t["coeff"]) for t in terms}
            degrees = {sum(exps) for exps in mapping}
            if len(degrees) > 1:
                raise HomogeneityError(index, degrees)
            forms.append(Form.from_mapping(s, mapping))
        return FormSystem(s=s, forms=tuple(forms))


@lru_cache(maxsize=64)
def _ring(s: int) -> PolyRing:
    return PolyRing([f"x{j + 1}" for j in range(s)], ZZ, lex)


def to_ring(poly: Polynomial):
    return _ring(poly.s).from_dict({term.exps: term.coeff for term in poly.terms})


def from_ring(element, s: int, degree: Optional[int] = None) -> Form:
    mapping = {tuple(int(e) for e in monom): int(coeff) for monom, coeff in element.items()}
    return Form.from_mapping(s, mapping, degree=degree)


def _parse_sum(text: str, offset: int) -> tuple[dict, int]:
    """Signed sum of terms c*x1^a1*... -> ({exps: coeff} over used variables, highest index)"""
    tokens = _tokenize(text, offset)
    terms: list[tuple[int, dict[int, int]]] = []
    position = 0
    sign = 1
    expect_term = True
    while position < len(tokens):
        kind, value, where = tokens[position]
        if expect_term:
            if kind == "op" and value in "+-":
                sign = sign * (-1 if value == "-" else 1)
                position += 1
                continue
            coeff, powers, position = _parse_term(tokens, position)
            terms.append((sign * coeff, powers))
            sign, expect_term = 1, False
        else:
            if kind != "op" or value not in "+-":
                raise FormSyntaxError(f"Expected '+' or '-', found {value!r}", where)
            sign = -1 if value == "-" else 1
            expect_term = True
            position += 1
    if expect_term:
        raise FormSyntaxError("Expression ends without a term", offset + len(text))
    used = max((j for _, powers in terms for j in powers), default=0)
    mapping: dict = {}
    for coeff, powers in terms:
        key = tuple(sorted(powers.items()))
        mapping[key] = mapping.get(key, 0) + coeff
    return mapping, used


def _parse_term(tokens, position):
    coeff = 1
    powers: dict[int, int] = {}
    need_factor = True
    while position < len(tokens):
        kind, value, where = tokens[position]
        if need_factor:
            if kind == "num":
                coeff *= int(value)
                position += 1
            elif kind == "var":
                index = int(value)
                if index < 1:
                    raise FormSyntaxError("Variables are numbered from x1", where)
                exponent = 1
                position += 1
                if position < len(tokens) and tokens[position][1] == "^" and tokens[position][0] == "op":
                    if position + 1 >= len(tokens) or tokens[position + 1][0] != "num":
                        raise FormSyntaxError("Exponent must be a nonnegative integer", tokens[position][2])
                    exponent = int(tokens[position + 1][1])
                    position += 2
                powers[index] = powers.get(index, 0) + exponent
            else:
                raise FormSyntaxError(f"Unexpected {value!r}", where)
            need_factor = False
        elif kind == "op" and value == "*":
            need_factor = True
            position += 1
        else:
            break
    if need_factor:
        raise FormSyntaxError("Dangling '*'", tokens[position - 1][2] if position else 0)
    return coeff, {j: e for j, e in powers.items() if e}, position


def _tokenize(text: str, offset: int) -> list[tuple[str, str, int]]:
    tokens = []
    position = 0
    stripped_end = len(text.rstrip())
    while position < stripped_end:
        match = _TOKEN.match(text, position)
        if not match:
            column = position + len(text[position:]) - len(text[position:].lstrip())
            raise FormSyntaxError(f"Unexpected character {text[column]!r}", offset + column)
        start = match.start(match.lastgroup if match.lastgroup != "index" else "var")
        if match.group("num") is not None:
            tokens.append(("num", match.group("num"), offset + start))
        elif match.group("var") is not None:
            tokens.append(("var", match.group("index"), offset + start))
        else:
            tokens.append(("op", match.group("op"), offset + start))
        position = match.end()
    return tokens


def _resolve_arity(s: Optional[int], used: int) -> int:
    if s is None:
        return max(used, 1)
    if used > s:
        raise DomainError(f"Variable x{used} used but only {s} variables declared")
    return s


def _pad(mapping: dict, s: int) -> dict:
    padded: dict = {}
    for key, coeff in mapping.items():
        exps = [0] * s
        for index, e in key:
            exps[index - 1] = e
        exps = tuple(exps)
        padded[exps] = padded.get(exps, 0) + coeff
    return {exps: coeff for exps, coeff in padded.items() if coeff}
