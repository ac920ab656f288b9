import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np
from sympy import isprime, primefactors

from models.forms import FormSystem, Polynomial
from models.geometry import ChainReport, ChainStep, CodimReport, DimEstimate, RankCondition, VarietySpec
from services.errors import CapacityExceeded, DomainError
from services.form_service import FormService
from services.grid import GridEngine, PowerTable, ResidueGrid

logger = logging.getLogger(__name__)

DEFAULT_PRIMES = (11, 13, 17, 19)
CHAIN_PRIMES = (11, 13, 17)
CODIM_PRIMES = (11, 13)


class GeometryService:
    """Point counts over F_p and dimension estimates for rank-deficiency loci"""

    def __init__(self, forms: FormService, engine: GridEngine):
        self.forms = forms
        self.engine = engine

    def batched_rank(self, matrices: np.ndarray, p: int) -> np.ndarray:
        """Ranks over F_p of a stack of shape (n, rows, cols), by Gauss-Jordan elimination"""
        a = np.array(matrices, dtype=np.int64) % p
        n, rows, cols = a.shape
        inverse = np.zeros(p, dtype=np.int64)
        inverse[1:] = [pow(x, -1, p) for x in range(1, p)]
        pivot_row = np.zeros(n, dtype=np.int64)
        row_index = np.arange(rows)
        for col in range(cols):
            candidates = (a[:, :, col] != 0) & (row_index[None, :] >= pivot_row[:, None])
            batch = np.nonzero(candidates.any(axis=1))[0]
            if batch.size == 0:
                continue
            target = pivot_row[batch]
            source = np.argmax(candidates[batch], axis=1)
            swapped = a[batch, source].copy()
            a[batch, source] = a[batch, target]
            a[batch, target] = swapped * inverse[swapped[:, col]][:, None] % p
            factors = a[batch, :, col].copy()
            factors[np.arange(batch.size), target] = 0
            a[batch] = (a[batch] - factors[:, :, None] * a[batch, target][:, None, :]) % p
            pivot_row[batch] += 1
        return pivot_row

    def point_count_mod_p(self, variety: VarietySpec, p: int) -> int:
        if not isprime(p):
            raise DomainError(f"{p} is not prime")
        free = variety.free_coordinates
        grid = ResidueGrid([np.arange(p, dtype=np.int64)] * len(free))
        polys = list(variety.equations)
        condition = variety.rank_condition
        if condition is not None:
            polys += [entry for row in condition.matrix for entry in row]
        powers = PowerTable(p, max((poly.total_degree for poly in polys), default=0))

        def count(block: np.ndarray) -> int:
            points = np.zeros((len(block), variety.n), dtype=np.int64)
            points[:, free] = block
            mask = np.ones(len(points), dtype=bool)
            for equation in variety.equations:
                mask &= powers.evaluate(equation, points) == 0
            if condition is not None and mask.any():
                selected = points[mask]
                rows, cols = condition.shape
                values = np.zeros((len(selected), rows, cols), dtype=np.int64)
                for i, row in enumerate(condition.matrix):
                    for j, entry in enumerate(row):
                        values[:, i, j] = powers.evaluate(entry, selected)
                mask[mask] = self.batched_rank(values, p) < condition.bound
            return int(np.count_nonzero(mask))

        total = self.engine.reduce_grid(grid, count, _add, 0, what=f"point count of {variety.label or 'variety'}")
        logger.debug("#%s(F_%s) = %s", variety.label or "V", p, total)
        return total

    def excluded_primes(self, variety: VarietySpec, extra: Iterable[int] = ()) -> set[int]:
        """Primes dividing a coefficient of the defining polynomials, or one of `extra` (degrees)"""
        polys = list(variety.equations)
        if variety.rank_condition is not None:
            polys += [entry for row in variety.rank_condition.matrix for entry in row]
        numbers = {abs(term.coeff) for poly in polys for term in poly.terms} | {abs(x) for x in extra}
        return {int(p) for n in numbers if n > 1 for p in primefactors(n)}

    def dim_estimate(
        self, variety: VarietySpec, primes: Sequence[int] = DEFAULT_PRIMES, degrees: Iterable[int] = ()
    ) -> DimEstimate:
        bad = self.excluded_primes(variety, degrees)
        usable = [p for p in primes if p not in bad]
        skipped = tuple(p for p in primes if p in bad)
        if len(usable) < 2:
            raise DomainError(f"Need two good primes, have {usable} after excluding {sorted(bad)}")
        counts = tuple((p, self.point_count_mod_p(variety, p)) for p in usable)
        nonzero = [(p, c) for p, c in counts if c > 0]
        if not nonzero:
            return DimEstimate(dim=-1, per_prime_counts=counts, slope=-1.0, residual=0.0, skipped_primes=skipped)
        if len(nonzero) == 1:
            p, c = nonzero[0]
            slope, residual = math.log(c) / math.log(p), 0.0
        else:
            logs = np.log(np.array([p for p, _ in nonzero], dtype=float))
            values = np.log(np.array([c for _, c in nonzero], dtype=float))
            coefficients, residuals, *_ = np.polyfit(logs, values, 1, full=True)
            slope = float(coefficients[0])
            residual = float(residuals[0]) if len(residuals) else 0.0
        dim = min(max(int(round(slope)), 0), variety.n)
        return DimEstimate(
            dim=dim, per_prime_counts=counts, slope=slope, residual=residual, skipped_primes=skipped
        )

    def singular_locus_spec(self, system: FormSystem) -> VarietySpec:
        """rank J(x) < R on A^s"""
        return VarietySpec(
            n=system.s,
            rank_condition=RankCondition(matrix=self.forms.jacobian(system), bound=system.R),
            label="V*",
        )

    def singular_dimension(self, system: FormSystem, primes: Sequence[int] = DEFAULT_PRIMES) -> DimEstimate:
        return self.dim_estimate(self.singular_locus_spec(system), primes, system.degrees)

    def is_nonsingular(self, system: FormSystem, primes: Sequence[int] = DEFAULT_PRIMES) -> bool:
        """The rank-deficiency locus has at most its generic dimension R - 1"""
        return self.singular_dimension(system, primes).dim <= system.R - 1

    def chain_varieties(self, system: FormSystem, k: int) -> tuple[VarietySpec, VarietySpec]:
        """(T_k, U_k): rank of the first k Jacobian columns below R, with x_{k+1}.. resp. x_{k+2}.. zero"""
        self._require_equal_degrees(system)
        s = system.s
        if not 1 <= k <= s:
            raise DomainError(f"Chain index {k} outside 1..{s}")
        if k == s:
            locus = self.singular_locus_spec(system)
            return locus.model_copy(update={"label": f"T_{s}"}), locus.model_copy(update={"label": f"U_{s}"})
        condition = RankCondition(matrix=self.forms.jacobian(system, k), bound=system.R)
        t_k = VarietySpec(
            n=s, rank_condition=condition, coordinate_constraints=frozenset(range(k, s)), label=f"T_{k}"
        )
        u_k = VarietySpec(
            n=s, rank_condition=condition, coordinate_constraints=frozenset(range(k + 1, s)), label=f"U_{k}"
        )
        return t_k, u_k

    def verify_chain_claims(self, system: FormSystem, primes: Sequence[int] = CHAIN_PRIMES) -> ChainReport:
        s, R = system.s, system.R
        notes: list[str] = []
        dims_T: dict[int, Optional[int]] = {}
        dims_U: dict[int, Optional[int]] = {}
        for k in range(1, s + 1):
            t_k, u_k = self.chain_varieties(system, k)
            dims_T[k] = self._safe_dim(t_k, primes, system.degrees, notes)
            if k < s:
                dims_U[k] = self._safe_dim(u_k, primes, system.degrees, notes)
        dim_v = dims_T[s]

        steps = []
        for k in range(1, s + 1):
            step = ChainStep(k=k, dim_T=dims_T[k], dim_U=dims_U.get(k))
            if k < s:
                t_k, t_next, u_k = dims_T[k], dims_T[k + 1], dims_U[k]
                if t_k is not None and t_next is not None:
                    step.relation_ok = t_next - 1 <= t_k <= t_next + R
                if t_next is not None and u_k is not None:
                    step.containment_ok = t_next <= u_k
                if t_k is not None and u_k is not None:
                    step.hyperplane_ok = u_k in (t_k, t_k + 1)
            steps.append(step)

        known = [d for d in dims_T.values() if d is not None]
        max_dim = max(known) if known else None
        claim_bound = (R * s + dim_v) / (R + 1) if dim_v is not None else math.inf
        claim_ok = max_dim is not None and dim_v is not None and max_dim <= claim_bound
        if -1 in known:
            notes.append("An empty locus entered the checks with dimension -1")
        checks = [
            flag
            for step in steps
            for flag in (step.relation_ok, step.containment_ok, step.hyperplane_ok)
        ]
        complete = len(known) == s and all(d is not None for d in dims_U.values())
        all_ok = complete and claim_ok and all(flag is not False for flag in checks)
        return ChainReport(
            s=s,
            R=R,
            dim_singular_locus=dim_v if dim_v is not None else -1,
            steps=steps,
            max_dim_T=max_dim,
            claim_bound=claim_bound,
            claim_ok=claim_ok,
            all_ok=all_ok,
            notes=notes,
        )

    def verify_codim_proposition(self, system: FormSystem, primes: Sequence[int] = CODIM_PRIMES) -> CodimReport:
        """min codim of the two bihomogeneous singular loci against codim V*_F / (R + 1)"""
        self._require_equal_degrees(system)
        s, R = system.s, system.R
        notes: list[str] = []
        dim_f = self.singular_dimension(system, primes).dim

        bihomogeneous = self.forms.system((self.forms.bihomogenize(form) for form in system.forms), 2 * s)
        jacobian = self.forms.jacobian(bihomogeneous)
        loci = {
            "G1": VarietySpec(
                n=2 * s,
                rank_condition=RankCondition(matrix=tuple(row[:s] for row in jacobian), bound=R),
                label="V*_G,1",
            ),
            "G2": VarietySpec(
                n=2 * s,
                rank_condition=RankCondition(matrix=tuple(row[s:] for row in jacobian), bound=R),
                label="V*_G,2",
            ),
        }
        dims = {"F": dim_f}
        for name, locus in loci.items():
            dims[name] = self.dim_estimate(locus, primes, system.degrees).dim
        if -1 in dims.values():
            notes.append("An empty locus entered the checks with dimension -1")
        codim_f = s - dims["F"]
        codim_g1, codim_g2 = 2 * s - dims["G1"], 2 * s - dims["G2"]
        bound = codim_f / (R + 1)
        return CodimReport(
            s=s,
            R=R,
            codim_F=codim_f,
            codim_G1=codim_g1,
            codim_G2=codim_g2,
            bound=bound,
            ok=min(codim_g1, codim_g2) >= bound,
            dims=dims,
            notes=notes,
        )

    def linear_subspace(self, n: int, zero: Iterable[int], label: str = "") -> VarietySpec:
        return VarietySpec(n=n, coordinate_constraints=frozenset(zero), label=label)

    def hypersurface(self, poly: Polynomial, label: str = "") -> VarietySpec:
        return VarietySpec(n=poly.s, equations=(poly,), label=label)

    def _safe_dim(self, variety: VarietySpec, primes, degrees, notes: list[str]) -> Optional[int]:
        try:
            return self.dim_estimate(variety, primes, degrees).dim
        except CapacityExceeded as error:
            notes.append(f"{variety.label}: {error}")
            return None

    def _require_equal_degrees(self, system: FormSystem):
        if len(set(system.degrees)) > 1:
            raise DomainError(f"Chain checks need forms of one degree, got {system.degrees}")


def _add(x, y):
    return x + y
