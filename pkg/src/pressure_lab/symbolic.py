"""Subshifts of finite type, allowed words, and Markov measures.

Symbols are the integers ``0..k-1``. A word ``(i_1, ..., i_n)`` is allowed
when ``transitions[i_j, i_{j+1}] == 1`` for every consecutive pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, ValidationError

MAX_SYMBOLS = 16
DEFAULT_WORD_BUDGET = 2**24
_INT64_MAX = 2**63 - 1


@dataclass(frozen=True, eq=False)
class Sft:
    """A one-sided subshift of finite type given by a 0/1 transition matrix."""

    transitions: np.ndarray
    require_irreducible: bool = False

    def __post_init__(self):
        t = np.array(self.transitions)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValidationError(f"transitions must be square, got shape {t.shape}", "transitions")
        if not np.all((t == 0) | (t == 1)):
            raise ValidationError("transitions must be a 0/1 matrix", "transitions")
        k = t.shape[0]
        if not 1 <= k <= MAX_SYMBOLS:
            raise ValidationError(f"alphabet size {k} outside 1..{MAX_SYMBOLS}", "transitions")
        t = t.astype(np.int8)
        if np.any(t.sum(axis=1) == 0) or np.any(t.sum(axis=0) == 0):
            raise ValidationError("every symbol needs a successor and a predecessor", "transitions")
        t.setflags(write=False)
        object.__setattr__(self, "transitions", t)
        if self.require_irreducible and not self.is_irreducible():
            raise ValidationError("transition matrix is not irreducible", "transitions")

    @classmethod
    def full(cls, k):
        return cls(np.ones((k, k), dtype=np.int8))

    @property
    def k(self):
        return self.transitions.shape[0]

    @property
    def is_full(self):
        return bool(np.all(self.transitions == 1))

    def successors(self, a):
        return np.flatnonzero(self.transitions[a])

    def is_irreducible(self):
        reach = _reachability(self.transitions)
        return bool(np.all(reach))

    def allows(self, word):
        w = list(word)
        if any(not 0 <= x < self.k for x in w):
            return False
        return all(self.transitions[a, b] for a, b in zip(w, w[1:]))


def _reachability(t):
    k = t.shape[0]
    reach = (t > 0) | np.eye(k, dtype=bool)
    for _ in range(max(1, math.ceil(math.log2(max(k, 2))) + 1)):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return reach


def count_words(sft, n):
    """Number of allowed words of length ``n`` (``1^T M^(n-1) 1``), exactly."""
    if n < 1:
        raise ValidationError(f"word length must be >= 1, got {n}", "n")
    t = [[int(x) for x in row] for row in sft.transitions]
    k = len(t)
    vec = [1] * k
    for _ in range(n - 1):
        vec = [sum(t[i][j] * vec[j] for j in range(k)) for i in range(k)]
    total = sum(vec)
    if total > _INT64_MAX:
        raise OverflowError(f"word count for n={n} exceeds the 64-bit range")
    return total


def check_budget(sft, n, word_budget=DEFAULT_WORD_BUDGET):
    try:
        count = count_words(sft, n)
    except OverflowError:
        raise BudgetExceeded(f"level n={n} has more than 2^63 words", "budgets.word_budget")
    if count > word_budget:
        raise BudgetExceeded(
            f"level n={n} has {count} words, over the budget of {word_budget}",
            "budgets.word_budget",
        )
    return count


def enumerate_words(sft, n, prefix=(), word_budget=DEFAULT_WORD_BUDGET):
    """Yield every allowed word of length ``n`` starting with ``prefix``, lexicographically.

    Uses an explicit DFS stack over the transition graph. Passing different
    prefixes of a fixed length gives disjoint sub-streams that together cover
    the whole level (see :func:`prefix_partition`).
    """
    check_budget(sft, n, word_budget)
    prefix = tuple(int(x) for x in prefix)
    if len(prefix) > n or (prefix and not sft.allows(prefix)):
        return
    if len(prefix) == n:
        yield prefix
        return
    word = list(prefix)
    succ = [sft.successors(a).tolist() for a in range(sft.k)]
    # each stack entry is the list of symbols still to try at that depth
    stack = [list(range(sft.k))[::-1] if not word else succ[word[-1]][::-1]]
    while stack:
        options = stack[-1]
        if not options:
            stack.pop()
            if len(word) > len(prefix):
                word.pop()
            continue
        word.append(options.pop())
        if len(word) == n:
            yield tuple(word)
            word.pop()
        else:
            stack.append(succ[word[-1]][::-1])


def prefix_partition(sft, n, prefix_len=2):
    """Allowed prefixes of length ``min(prefix_len, n)`` in lexicographic order."""
    p = min(prefix_len, n)
    return list(enumerate_words(sft, p, word_budget=_INT64_MAX))


def word_array(sft, n, word_budget=DEFAULT_WORD_BUDGET):
    """All allowed words of length ``n`` as an ``(N, n)`` int array in lexicographic order."""
    check_budget(sft, n, word_budget)
    words = np.arange(sft.k, dtype=np.int16)[:, None]
    t = sft.transitions.astype(bool)
    for _ in range(n - 1):
        mask = t[words[:, -1]]
        parent, sym = np.nonzero(mask)
        words = np.concatenate([words[parent], sym[:, None].astype(np.int16)], axis=1)
    return words


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """A Markov measure on an SFT; Bernoulli measures have identical kernel rows."""

    initial: np.ndarray
    kernel: np.ndarray
    stationary: bool = field(default=False)

    def __post_init__(self):
        p0 = np.array(self.initial, dtype=float).reshape(-1)
        kern = np.array(self.kernel, dtype=float)
        k = p0.shape[0]
        if kern.shape != (k, k):
            raise ValidationError(f"kernel must be {k}x{k}", "measure.kernel")
        if np.any(p0 < 0) or abs(p0.sum() - 1) > 1e-12:
            raise ValidationError("initial distribution must be a probability vector", "measure.initial")
        if np.any(kern < 0) or np.any(np.abs(kern.sum(axis=1) - 1) > 1e-12):
            raise ValidationError("kernel rows must be probability vectors", "measure.kernel")
        p0.setflags(write=False)
        kern.setflags(write=False)
        object.__setattr__(self, "initial", p0)
        object.__setattr__(self, "kernel", kern)
        stat = bool(np.max(np.abs(p0 @ kern - p0)) <= 1e-12)
        if self.stationary and not stat:
            raise ValidationError("initial distribution is not stationary for the kernel", "measure")
        object.__setattr__(self, "stationary", stat)

    @classmethod
    def bernoulli(cls, p):
        p = np.array(p, dtype=float).reshape(-1)
        return cls(p, np.tile(p, (p.shape[0], 1)))

    @classmethod
    def markov(cls, kernel):
        """Markov measure started from the stationary vector of ``kernel``."""
        kern = np.array(kernel, dtype=float)
        w, v = np.linalg.eig(kern.T)
        i = int(np.argmin(np.abs(w - 1)))
        pi = np.real(v[:, i])
        pi = np.abs(pi) / np.abs(pi).sum()
        # one power step cleans the eigenvector to working precision
        pi = pi @ kern
        pi /= pi.sum()
        return cls(pi, kern)

    @property
    def k(self):
        return self.initial.shape[0]

    def support(self):
        return (self.kernel > 0).astype(np.int8)

    def is_supported_on(self, sft):
        return bool(np.all(sft.transitions[self.kernel > 0] == 1))

    def is_ergodic(self):
        """Irreducibility of the kernel restricted to the symbols that carry mass."""
        live = np.flatnonzero(self.initial > 0)
        sub = self.kernel[np.ix_(live, live)] > 0
        return bool(np.all(_reachability(sub.astype(np.int8))))

    def sample(self, n, rng):
        """One orbit of length ``n`` drawn with the generator ``rng``."""
        return self.sample_many(n, [rng])[0]

    def sample_many(self, n, rngs):
        """Orbits of length ``n``, one per generator; trial ``t`` only uses ``rngs[t]``."""
        u = np.stack([r.random(n) for r in rngs])
        out = np.empty(u.shape, dtype=np.int64)
        cum0 = np.cumsum(self.initial)
        cum = np.cumsum(self.kernel, axis=1)
        k = self.k
        out[:, 0] = np.minimum(np.searchsorted(cum0, u[:, 0], side="right"), k - 1)
        if np.allclose(self.kernel, self.kernel[0]):
            rest = np.searchsorted(cum[0], u[:, 1:], side="right")
            out[:, 1:] = np.minimum(rest, k - 1)
            return out
        for t in range(1, n):
            rows = cum[out[:, t - 1]]
            out[:, t] = np.minimum((u[:, t, None] >= rows).sum(axis=1), k - 1)
        return out


def measure_entropy(mu):
    """Entropy of a stationary Markov measure, ``-sum_i pi_i sum_j P_ij log P_ij``."""
    if not mu.stationary:
        raise ValidationError("entropy requires a stationary measure", "measure")
    kern = mu.kernel
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(kern > 0, kern * np.log(np.where(kern > 0, kern, 1.0)), 0.0)
    return float(-(mu.initial @ terms.sum(axis=1)))
