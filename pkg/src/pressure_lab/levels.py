"""Per-level products and singular values for a locally constant cocycle.

A level ``n`` holds, for every allowed word ``w = (i_1, ..., i_n)`` in
lexicographic order, the base-2 log singular values of the cocycle product
``A_{i_n} ... A_{i_1}`` together with the word's Birkhoff sum of the
potential and its first and last symbols.

Levels up to ``budget.cache_levels`` are built by extending the previous
level one symbol at a time and are kept. Longer levels are streamed in
chunks, one chunk per prefix word, by multiplying a cached suffix level
onto each prefix product. Work is split into blocks whose boundaries depend
only on the system and the level, never on the worker count, and partial
sums are merged in a fixed order, so results are bitwise reproducible.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linalg import jacobi_singular_values, log2_singular_values, renormalize
from .symbolic import DEFAULT_WORD_BUDGET, check_budget

BLOCK_WORDS = 2**14


@dataclass(frozen=True)
class Budget:
    """Resource limits for level computations."""

    word_budget: int = DEFAULT_WORD_BUDGET
    cache_levels: int = 12
    workers: int = 1

    @classmethod
    def from_env(cls, **kw):
        env = os.environ.get("PRESSURE_LAB_WORKERS")
        if env:
            kw["workers"] = max(1, int(env))
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class Level:
    n: int
    log2sv: np.ndarray  # (N, d)
    gsum: np.ndarray  # (N,) natural-log potential sums
    first: np.ndarray  # (N,)
    last: np.ndarray  # (N,)
    cores: np.ndarray | None = None  # (N, d, d), kept for cached levels
    exp2: np.ndarray | None = None  # (N,)

    @property
    def size(self):
        return self.log2sv.shape[0]


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _finish(products, exp2_parent):
    sv = jacobi_singular_values(products)
    cores, svc, e = renormalize(products, sv)
    exp2 = exp2_parent + e
    return cores, exp2, log2_singular_values(svc, exp2)


class LevelStore:
    """Lazily built levels for one cocycle; shared read-only once built."""

    def __init__(self, spec):
        self.spec = spec
        self._levels = {}

    def level(self, n, budget):
        """The cached level ``n`` (``n <= budget.cache_levels``)."""
        if n in self._levels:
            return self._levels[n]
        check_budget(self.spec.sft, n, budget.word_budget)
        if n == 1:
            lev = self._first_level()
        else:
            lev = self._extend(self.level(n - 1, budget), budget)
        self._levels[n] = lev
        return lev

    def _first_level(self):
        spec = self.spec
        mats = spec.matrices
        k = mats.shape[0]
        cores, exp2, l2 = _finish(mats.copy(), np.zeros(k))
        sym = np.arange(k)
        return Level(1, l2, spec.potential.copy(), sym, sym.copy(), cores, exp2)

    def _extend(self, parent, budget):
        spec = self.spec
        t = spec.sft.transitions.astype(bool)
        mats = spec.matrices
        g = spec.potential
        starts = list(range(0, parent.size, BLOCK_WORDS))

        def block(start):
            sl = slice(start, min(start + BLOCK_WORDS, parent.size))
            pi, sym = np.nonzero(t[parent.last[sl]])
            idx = pi + start
            prod = np.matmul(mats[sym], parent.cores[idx])
            cores, exp2, l2 = _finish(prod, parent.exp2[idx])
            return cores, exp2, l2, parent.gsum[idx] + g[sym], parent.first[idx], sym

        parts = _map(block, starts, budget.workers)
        cat = [np.concatenate([p[i] for p in parts]) for i in range(6)]
        cores, exp2, l2, gsum, first, last = cat
        return Level(parent.n + 1, l2, gsum, first, last, cores, exp2)

    def chunks(self, n, budget):
        """Level ``n`` as an ordered list of zero-argument chunk builders.

        Cached levels yield fixed-size slices of the stored arrays; longer
        levels yield one freshly computed chunk per prefix word.
        """
        if n <= budget.cache_levels:
            lev = self.level(n, budget)
            return [
                (lambda s=s: _slice(lev, s)) for s in range(0, lev.size, BLOCK_WORDS)
            ]
        check_budget(self.spec.sft, n, budget.word_budget)
        m = budget.cache_levels
        pre = self.level(n - m, budget)
        suf = self.level(m, budget)
        t = self.spec.sft.transitions.astype(bool)
        # suffixes starting with each symbol form one contiguous block
        bounds = np.searchsorted(suf.first, np.arange(self.spec.sft.k + 1))

        def chunk(i):
            a = pre.last[i]
            idx = np.concatenate(
                [np.arange(bounds[j], bounds[j + 1]) for j in np.flatnonzero(t[a])]
            )
            prod = np.matmul(suf.cores[idx], pre.cores[i])
            _, _, l2 = _finish(prod, suf.exp2[idx] + pre.exp2[i])
            return l2, pre.gsum[i] + suf.gsum[idx], np.full(idx.size, pre.first[i]), suf.last[idx]

        return [(lambda i=i: chunk(i)) for i in range(pre.size)]


def _slice(lev, start):
    sl = slice(start, start + BLOCK_WORDS)
    return lev.log2sv[sl], lev.gsum[sl], lev.first[sl], lev.last[sl]


def reduce_level(store, n, budget, fn):
    """Apply ``fn(log2sv, gsum, first, last)`` to every chunk of level ``n`` in order."""
    builders = store.chunks(n, budget)
    return _map(lambda b: fn(*b()), builders, budget.workers)
