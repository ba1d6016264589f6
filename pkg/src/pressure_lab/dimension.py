"""Singularity / affinity dimension and joint spectral radius estimates."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .levels import Budget, reduce_level
from .pressure import NORM, CocycleSpec, exact_pressure, level_sums, pressure_estimate, resolve_weights

MIN_TOL = 1e-8
_MAX_EXPANSIONS = 8
BAND_RTOL = 1e-12  # absorbs rounding when lower == upper


class ContractionWarning(UserWarning):
    """Some map has norm >= 1/2, outside the range where the dimension formula holds generically."""


@dataclass
class DimensionResult:
    """Bisection bracket for the singularity dimension.

    ``s_lower`` / ``s_upper`` bracket the zero of the point-estimate pressure
    to ``tol``; ``certified_lower`` / ``certified_upper`` come from the
    rigorous pressure bounds and always contain the true value.
    """

    s_lower: float
    s_upper: float
    certified_lower: float
    certified_upper: float
    d: int
    tol: float
    iterations: int
    budget_limited: bool
    history: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def value(self):
        return 0.5 * (self.s_lower + self.s_upper)

    @property
    def affinity(self):
        return min(self.s_upper, self.d)

    @property
    def affinity_lower(self):
        return min(self.s_lower, self.d)

    def to_dict(self):
        return {
            "s_lower": self.s_lower,
            "s_upper": self.s_upper,
            "value": self.value,
            "certified_lower": self.certified_lower,
            "certified_upper": self.certified_upper,
            "affinity": self.affinity,
            "affinity_lower": self.affinity_lower,
            "d": self.d,
            "tol": self.tol,
            "iterations": self.iterations,
            "budget_limited": self.budget_limited,
            "warnings": list(self.warnings),
            "history": [dict(zip(("s", "lower", "point", "upper"), h)) for h in self.history],
        }


def _bracket(spec, s, n_max, budget, cache):
    """(lower, point, upper) pressure at ``s``, memoized per call."""
    if s in cache:
        return cache[s]
    if s > spec.d:
        w, _ = resolve_weights(spec, s)
        v = exact_pressure(spec, w)
        out = (v, v, v)
    else:
        est = pressure_estimate(spec, s, n_max, budget=budget)
        out = (est.lower, est.point, est.upper)
    cache[s] = out
    return out


def _bisect(f, lo, hi, tol):
    """Smallest-``s`` crossing of a nonincreasing predicate ``f(s) <= 0``."""
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, hi, it


def singularity_dimension(spec, tol=MIN_TOL, n_max=12, budget=None):
    """Zero of ``s -> P(A, s)`` for a contractive system, by bisection."""
    if not spec.contractive:
        bad = [i for i, v in enumerate(spec.norms) if v >= 1]
        raise ValidationError(
            f"dimension needs every map to be a contraction (||A_i|| < 1); fails for symbols {bad}",
            "system.matrices",
        )
    if tol < MIN_TOL:
        raise ValidationError(f"tol must be >= {MIN_TOL}", "tolerances.dimension_tol")
    budget = budget or Budget()
    notes = []
    if np.any(spec.norms >= 0.5):
        msg = "some ||A_i|| >= 1/2: the generic dimension formula needs ||A_i|| < 1/2 for all i"
        warnings.warn(msg, ContractionWarning, stacklevel=2)
        notes.append(msg)
    cache = {}
    history = []

    def ev(s):
        b = _bracket(spec, s, n_max, budget, cache)
        history.append((s, *b))
        return b

    d = spec.d
    lo, hi = 0.0, 5.0 * d
    for _ in range(_MAX_EXPANSIONS):
        if ev(hi)[2] <= 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise ValidationError("pressure did not become negative on the search interval", "system")

    if ev(0.0)[1] <= 0:
        s_lo = s_hi = 0.0
        it = 0
    else:
        s_lo, s_hi, it = _bisect(lambda s: ev(s)[1], lo, hi, tol)

    # rigorous bracket: upper-bound root from above, lower-bound root from below
    if ev(0.0)[2] <= 0:
        c_hi = 0.0
    else:
        _, c_hi, i2 = _bisect(lambda s: ev(s)[2], lo, hi, tol)
        it += i2
    if ev(0.0)[0] <= 0:
        c_lo = 0.0
    else:
        c_lo, _, i3 = _bisect(lambda s: ev(s)[0], 0.0, hi, tol)
        it += i3
    c_lo = min(c_lo, s_lo)
    c_hi = max(c_hi, s_hi)
    return DimensionResult(
        s_lo, s_hi, c_lo, c_hi, d, tol, it, bool(c_hi - c_lo > tol), history, notes
    )


def affinity_dimension(spec, tol=MIN_TOL, n_max=12, budget=None):
    """``min(s(A), d)``; identical bracket data, read through :attr:`DimensionResult.affinity`."""
    return singularity_dimension(spec, tol, n_max, budget)


@dataclass
class JsrResult:
    lower: float
    upper: float
    pressure_based: float
    pressure_based_adjusted: float
    n: int
    s_large: float
    band: tuple

    @property
    def in_band(self):
        lo, hi = self.band
        return lo * (1 - BAND_RTOL) <= self.pressure_based <= hi * (1 + BAND_RTOL)

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "pressure_based": self.pressure_based,
            "pressure_based_adjusted": self.pressure_based_adjusted,
            "n": self.n,
            "s_large": self.s_large,
            "band": list(self.band),
            "in_band": self.in_band,
        }


def _log2_spectral_radius(cores, exp2):
    ev = np.abs(np.linalg.eigvals(cores))
    rho = ev.max(axis=1)
    with np.errstate(divide="ignore"):
        out = np.log2(rho) + exp2
    return np.where(rho > 0, out, -np.inf)


def jsr_estimate(matrices, n, s_large=64.0, budget=None):
    """Joint spectral radius bounds from all products of length up to ``n``.

    ``lower`` is the largest ``rho(A_w)^(1/|w|)``, ``upper`` the largest
    ``||A_w||^(1/n)`` at length ``n``, and ``pressure_based`` is
    ``exp(M_n / s_large)`` with ``M_n`` the level-``n`` norm pressure at
    ``s_large``. ``pressure_based_adjusted`` removes the ``log k`` entropy term.
    """
    budget = budget or Budget()
    spec = matrices if isinstance(matrices, CocycleSpec) else CocycleSpec.full_shift(matrices)
    if n < 1:
        raise ValidationError("n must be >= 1", "jsr.n")
    best = -np.inf
    for m in range(1, min(n, budget.cache_levels) + 1):
        lev = spec.levels.level(m, budget)
        best = max(best, float(np.max(_log2_spectral_radius(lev.cores, lev.exp2))) / m)
    tops = reduce_level(spec.levels, n, budget, lambda l2, *_: float(np.max(l2[:, 0])))
    top = max(tops)
    w, _ = resolve_weights(spec, s_large, NORM)
    ls = level_sums(spec, [w], n, budget)[0]
    m_n = ls.value
    lower = 2.0**best
    upper = 2.0 ** (top / n)
    raw = math.exp(m_n / s_large) if m_n > -np.inf else 0.0
    adj = math.exp((m_n - math.log(spec.k)) / s_large) if m_n > -np.inf else 0.0
    band = (lower, upper * spec.k ** (1.0 / s_large))
    return JsrResult(lower, upper, raw, adj, n, float(s_large), band)
