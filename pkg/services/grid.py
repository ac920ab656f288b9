import logging
from concurrent.futures import ThreadPoolExecutor
from functools import reduce
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

from config import Settings, get_settings
from models.forms import Polynomial
from services.errors import CapacityExceeded

logger = logging.getLogger(__name__)

T = TypeVar("T")

# residues times residues must stay inside int64
MAX_GRID_MODULUS = 3 * 10**9


class PowerTable:
    """table[e, x] = x^e mod q for 0 <= x < q, 0 <= e <= max_degree"""

    def __init__(self, q: int, max_degree: int):
        if q > MAX_GRID_MODULUS:
            raise CapacityExceeded("grid modulus", q, MAX_GRID_MODULUS)
        self.q = q
        self.max_degree = max_degree
        residues = np.arange(q, dtype=np.int64)
        rows = [np.full(q, 1 % q, dtype=np.int64)]
        for _ in range(max_degree):
            rows.append(rows[-1] * residues % q)
        self.table = np.stack(rows)
        self.table.setflags(write=False)

    def evaluate(self, poly: Polynomial, points: np.ndarray) -> np.ndarray:
        """poly(points) mod q for an (n, s) array of residues"""
        q = self.q
        values = np.zeros(len(points), dtype=np.int64)
        for term in poly.terms:
            column = np.full(len(points), term.coeff % q, dtype=np.int64)
            for j, e in enumerate(term.exps):
                if e:
                    column = column * self.table[e, points[:, j]] % q
            values = (values + column) % q
        return values

    def combine(self, polys: Sequence[Polynomial], a: Sequence[int], points: np.ndarray) -> np.ndarray:
        """sum_i a_i * F_i(points) mod q"""
        q = self.q
        values = np.zeros(len(points), dtype=np.int64)
        for poly, coefficient in zip(polys, a):
            if coefficient % q:
                values = (values + coefficient % q * self.evaluate(poly, points)) % q
        return values


class ResidueGrid:
    """Cartesian product of per-variable residue axes, last axis varying fastest"""

    def __init__(self, axes: Sequence[np.ndarray]):
        self.axes = [np.asarray(axis, dtype=np.int64) for axis in axes]
        self.shape = tuple(len(axis) for axis in self.axes)
        self.size = int(np.prod(self.shape, dtype=object)) if self.axes else 1

    @classmethod
    def full(cls, q: int, s: int) -> "ResidueGrid":
        return cls([np.arange(q, dtype=np.int64)] * s)

    def digits(self, start: int, stop: int) -> np.ndarray:
        index = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((len(index), len(self.shape)), dtype=np.int64)
        for j in range(len(self.shape) - 1, -1, -1):
            index, digits[:, j] = np.divmod(index, self.shape[j])
        return digits

    def block(self, start: int, stop: int) -> np.ndarray:
        digits = self.digits(start, stop)
        points = np.empty_like(digits)
        for j, axis in enumerate(self.axes):
            points[:, j] = axis[digits[:, j]]
        return points


class GridEngine:
    """Chunked reductions over residue grids

    Chunk boundaries depend only on the configured chunk size, and partial
    results are merged in chunk order, so the outcome does not depend on the
    number of workers.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def require(self, what: str, required: int, cap: Optional[int] = None):
        cap = self.settings.work_cap if cap is None else cap
        if required > cap:
            logger.info("Refusing %s: %s exceeds cap %s", what, required, cap)
            raise CapacityExceeded(what, required, cap)

    def chunks(self, size: int, step: Optional[int] = None) -> list[tuple[int, int]]:
        step = step or self.settings.chunk_size
        return [(start, min(start + step, size)) for start in range(0, size, step)]

    def reduce(
        self,
        size: int,
        work: Callable[[int, int], T],
        combine: Callable[[T, T], T],
        initial: T,
        step: Optional[int] = None,
    ) -> T:
        bounds = self.chunks(size, step)
        workers = max(1, self.settings.workers)
        logger.debug("Reducing %s points in %s chunks on %s workers", size, len(bounds), workers)
        if workers == 1 or len(bounds) <= 1:
            partials = [work(start, stop) for start, stop in bounds]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                partials = list(pool.map(lambda bound: work(*bound), bounds))
        return reduce(combine, partials, initial)

    def reduce_grid(
        self,
        grid: ResidueGrid,
        work: Callable[[np.ndarray], T],
        combine: Callable[[T, T], T],
        initial: T,
        what: str = "grid",
    ) -> T:
        self.require(what, grid.size)
        return self.reduce(grid.size, lambda start, stop: work(grid.block(start, stop)), combine, initial)

    def histogram(self, grid: ResidueGrid, values: Callable[[np.ndarray], np.ndarray], length: int,
                  weights: Optional[Callable[[np.ndarray], np.ndarray]] = None, what: str = "grid") -> np.ndarray:
        """Integer histogram of values(points) in [0, length), optionally weighted"""

        def work(points: np.ndarray) -> np.ndarray:
            keys = values(points)
            counts = np.zeros(length, dtype=np.int64)
            if weights is None:
                counts += np.bincount(keys, minlength=length)
            else:
                np.add.at(counts, keys, weights(points))
            return counts

        return self.reduce_grid(grid, work, np.add, np.zeros(length, dtype=np.int64), what=what)
