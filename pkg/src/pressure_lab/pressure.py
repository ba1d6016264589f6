"""Sub-additive pressures of locally constant cocycles on subshifts of finite type.

The level sum at length ``n`` is

    S_n = sum over allowed words w of  exp(sum_j g(w_j)) * f(A(w))

where ``A(w) = A_{w_n} ... A_{w_1}`` and ``f`` is the singular value
function, a generalized singular value function, or a power of the norm.
The pressure ``lim (1/n) log S_n`` equals ``inf_n (1/n) log S_n``, so every
level is a rigorous upper bound. Lower bounds come from the junction
inequality ``alpha_j(XY) >= alpha_j(X) alpha_d(Y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .levels import Budget, LevelStore, reduce_level
from .linalg import (
    LN2,
    as_matrix,
    check_weights,
    lse2,
    lse2_value,
    merge_lse2,
    svf_weights,
    weighted_log2,
)
from .symbolic import Sft

SVF = "svf"
NORM = "norm"
EXACT_LEVELS = 12
TAIL_LEVELS = (16, 20, 24)


@dataclass(frozen=True, eq=False)
class CocycleSpec:
    """An SFT with one matrix and one potential value per symbol."""

    sft: Sft
    matrices: np.ndarray
    potential: np.ndarray | None = None

    def __post_init__(self):
        mats = [as_matrix(m, f"system.matrices[{i}]") for i, m in enumerate(self.matrices)]
        if len(mats) != self.sft.k:
            raise ValidationError(
                f"expected {self.sft.k} matrices (one per symbol), got {len(mats)}", "system.matrices"
            )
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise ValidationError(f"matrix dimensions differ: {sorted(dims)}", "system.matrices")
        arr = np.stack(mats)
        arr.setflags(write=False)
        object.__setattr__(self, "matrices", arr)
        g = np.zeros(self.sft.k) if self.potential is None else np.array(self.potential, dtype=float)
        if g.shape != (self.sft.k,) or not np.all(np.isfinite(g)):
            raise ValidationError(f"potential needs {self.sft.k} finite values", "system.potential")
        g.setflags(write=False)
        object.__setattr__(self, "potential", g)

    @classmethod
    def full_shift(cls, matrices, potential=None):
        mats = [np.atleast_2d(np.array(m, dtype=float)) for m in matrices]
        return cls(Sft.full(len(mats)), mats, potential)

    @property
    def d(self):
        return self.matrices.shape[1]

    @property
    def k(self):
        return self.matrices.shape[0]

    @cached_property
    def norms(self):
        return np.linalg.norm(self.matrices, ord=2, axis=(1, 2))

    @cached_property
    def invertible(self):
        dets = np.abs(np.linalg.det(self.matrices))
        return dets > 1e-12 * self.norms**self.d

    @property
    def contractive(self):
        return bool(np.all(self.norms < 1))

    @cached_property
    def levels(self):
        return LevelStore(self)

    def perturbed(self, direction, eps):
        return CocycleSpec(self.sft, self.matrices + eps * np.asarray(direction, dtype=float), self.potential)


@dataclass
class PressureEstimate:
    """Level values and rigorous bounds for one exponent.

    ``levels`` holds ``(n, (1/n) log S_n)``; ``upper`` is their minimum,
    ``lower`` the best certified lower bound and ``point`` the clamped
    extrapolation of the levels to ``n = inf``.
    """

    exponent: float | tuple
    mode: str
    levels: list
    upper: float
    lower: float
    point: float
    lower_levels: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def to_dict(self):
        return {
            "exponent": list(self.exponent) if isinstance(self.exponent, tuple) else self.exponent,
            "mode": self.mode,
            "levels": [[n, v] for n, v in self.levels],
            "lower_levels": [[n, v] for n, v in self.lower_levels],
            "upper": self.upper,
            "lower": self.lower,
            "point": self.point,
            "diagnostics": list(self.diagnostics),
        }


# ---------------------------------------------------------------------------
# exponents


def resolve_weights(spec, exponent, mode=SVF):
    """Exponent -> per-singular-value weights (and a normalized label)."""
    d = spec.d
    if mode == NORM:
        s = float(exponent)
        if not s >= 0:
            raise ValidationError(f"s must be >= 0, got {s}", "s")
        w = np.zeros(d)
        w[0] = s
        return w, s
    if mode != SVF:
        raise ValidationError(f"unknown mode {mode!r}", "mode")
    if np.ndim(exponent) == 0:
        s = float(exponent)
        return svf_weights(s, d), s
    w = check_weights(exponent, d)
    return w, tuple(float(x) for x in w)


def _is_determinantal(w):
    return bool(np.all(w == w[0]))


# ---------------------------------------------------------------------------
# level sums


@dataclass(frozen=True)
class LevelSum:
    n: int
    log2_sum: float
    log2_lower: float  # log2 of the certified block sum times its junction constant
    note: str = ""

    @property
    def value(self):
        return self.log2_sum * LN2 / self.n if self.log2_sum > -np.inf else -np.inf

    @property
    def lower_value(self):
        return self.log2_lower * LN2 / self.n if self.log2_lower > -np.inf else -np.inf


def _chunk_stats(weights, k, full):
    wsum = [float(w.sum()) for w in weights]

    def fn(log2sv, gsum, first, last):
        out = []
        g2 = gsum / LN2
        with np.errstate(invalid="ignore"):
            ratio = log2sv[:, -1] - log2sv[:, 0]
        nonzero = log2sv[:, 0] > -np.inf
        for w, ws in zip(weights, wsum):
            x = g2 + weighted_log2(log2sv, w)
            total = lse2(x)
            if ws == 0:
                r = np.zeros(x.shape)
            else:
                r = np.where(nonzero, ratio * ws, np.nan)
            if full:
                rmin = float(np.nanmin(r)) if np.any(nonzero) else np.inf
                out.append((total, rmin, None))
                continue
            cls = first * k + last
            cmax = np.full(k * k, -np.inf)
            np.maximum.at(cmax, cls, x)
            shift = np.where(np.isfinite(cmax[cls]), x - cmax[cls], -np.inf)
            csum = np.bincount(cls, weights=np.exp2(shift), minlength=k * k)
            cr = np.full(k * k, np.inf)
            live = nonzero
            np.minimum.at(cr, cls[live], r[live])
            out.append((total, None, (cmax, csum, cr)))
        return out

    return fn


def _merge_class(parts):
    cmax = np.stack([p[0] for p in parts])
    m = np.max(cmax, axis=0)
    with np.errstate(invalid="ignore"):
        scale = np.where(np.isfinite(cmax), np.exp2(cmax - np.where(np.isfinite(m), m, 0.0)), 0.0)
    csum = np.sum(scale * np.stack([p[1] for p in parts]), axis=0)
    cr = np.min(np.stack([p[2] for p in parts]), axis=0)
    return m, csum, cr


def level_sums(spec, weights, n, budget=None):
    """One enumeration pass over level ``n`` for several weight vectors."""
    budget = budget or Budget()
    sft = spec.sft
    k = sft.k
    full = sft.is_full
    chunks = reduce_level(spec.levels, n, budget, _chunk_stats(weights, k, full))
    out = []
    for i in range(len(weights)):
        per = [c[i] for c in chunks]
        total = lse2_value(merge_lse2([p[0] for p in per]))
        if full:
            rmin = min(p[1] for p in per)
            if total == -np.inf:
                out.append(LevelSum(n, -np.inf, -np.inf))
            elif rmin == np.inf:
                out.append(LevelSum(n, total, -np.inf, "no nonzero blocks"))
            else:
                out.append(LevelSum(n, total, total + rmin))
            continue
        cmax, csum, cr = _merge_class([p[2] for p in per])
        best, note = -np.inf, "no concatenation-closed block class"
        for a in range(k):
            for b in range(k):
                if not sft.transitions[b, a]:
                    continue
                c = a * k + b
                if csum[c] <= 0 or not np.isfinite(cmax[c]) or cr[c] == np.inf:
                    continue
                note = ""
                best = max(best, cmax[c] + math.log2(csum[c]) + cr[c])
        out.append(LevelSum(n, total, best if total > -np.inf else -np.inf, note))
    return out


def level_sum_log(spec, exponent, n, mode=SVF, budget=None):
    """Natural log of the level sum ``S_n`` for the given exponent."""
    w, _ = resolve_weights(spec, exponent, mode)
    ls = level_sums(spec, [w], n, budget)[0]
    return ls.log2_sum * LN2


def pressure_upper(spec, exponent, n_max, mode=SVF, budget=None):
    """``min_{1<=n<=n_max} (1/n) log S_n``: a rigorous upper bound."""
    w, _ = resolve_weights(spec, exponent, mode)
    return min(level_sums(spec, [w], n, budget)[0].value for n in range(1, n_max + 1))


def pressure_lower(spec, s, n, mode=SVF, budget=None):
    """Rigorous lower bound from the level-``n`` block sum.

    ``(1/n) (log S_n + log kappa_n)`` with ``kappa_n`` the smallest
    ``(alpha_d / alpha_1)^(sum of exponents)`` over the blocks; for
    determinant-type exponents (``s >= d``) the exact pressure is returned.
    """
    w, _ = resolve_weights(spec, s, mode)
    if _is_determinantal(w):
        return exact_pressure(spec, w)
    return level_sums(spec, [w], n, budget)[0].lower_value


def exact_pressure(spec, weights):
    """Pressure of ``exp(S_n g) |det A(w)|^c`` when all weights equal ``c``.

    The potential is additive, so the pressure is the log spectral radius of
    the weighted transfer matrix (a log-sum-exp on the full shift).
    """
    c = float(weights[0])
    l2 = spec.levels.level(1, Budget()).log2sv
    x = spec.potential / LN2 + weighted_log2(l2, np.full(spec.d, c))
    if spec.sft.is_full:
        return lse2_value(lse2(x)) * LN2
    m = float(np.max(x))
    if m == -np.inf:
        return -np.inf
    mat = spec.sft.transitions * np.exp2(x - m)[None, :]
    rho = float(np.max(np.abs(np.linalg.eigvals(mat))))
    return -np.inf if rho <= 0 else math.log(rho) + m * LN2


def level_schedule(n_max):
    if n_max < 1:
        raise ValidationError(f"n_max must be >= 1, got {n_max}", "budgets.n_max")
    sched = list(range(1, min(n_max, EXACT_LEVELS) + 1))
    sched += [n for n in TAIL_LEVELS if n <= n_max]
    if n_max > EXACT_LEVELS and n_max not in sched:
        sched.append(n_max)
    return sorted(sched)


def pressure_estimates(spec, exponents, n_max, mode=SVF, budget=None):
    """:func:`pressure_estimate` for several exponents sharing each level pass."""
    resolved = [resolve_weights(spec, e, mode) for e in exponents]
    weights = [w for w, _ in resolved]
    sched = level_schedule(n_max)
    per_level = [level_sums(spec, weights, n, budget) for n in sched]
    return [
        _assemble(spec, w, label, mode, [lv[i] for lv in per_level])
        for i, (w, label) in enumerate(resolved)
    ]


def pressure_estimate(spec, exponent, n_max, mode=SVF, budget=None):
    """Levels, rigorous bracket and extrapolated point estimate for one exponent."""
    return pressure_estimates(spec, [exponent], n_max, mode, budget)[0]


def norm_pressure(spec, s, n_max, budget=None):
    """Pressure of ``||A(w)||^s``."""
    return pressure_estimate(spec, s, n_max, NORM, budget)


def _assemble(spec, w, label, mode, sums):
    levels = [(ls.n, ls.value) for ls in sums]
    lower_levels = [(ls.n, ls.lower_value) for ls in sums]
    notes = sorted({ls.note for ls in sums if ls.note})
    upper = min(v for _, v in levels)
    if upper == -np.inf:
        return PressureEstimate(label, mode, levels, -np.inf, -np.inf, -np.inf, lower_levels, notes)
    if _is_determinantal(w):
        exact = exact_pressure(spec, w)
        lower = min(exact, upper)
        return PressureEstimate(label, mode, levels, upper, lower, lower, lower_levels, notes)
    lower = max(v for _, v in lower_levels)
    lower = min(lower, upper)
    point = min(max(extrapolate(levels), lower), upper)
    return PressureEstimate(label, mode, levels, upper, lower, point, lower_levels, notes)


def extrapolate(levels):
    """Intercept of the least-squares line of ``L_n`` against ``1/n`` over the top three levels."""
    top = sorted(levels)[-3:]
    if len(top) == 1:
        return top[0][1]
    x = np.array([1.0 / n for n, _ in top])
    y = np.array([v for _, v in top])
    if np.all(y == y[0]):
        return float(y[0])
    slope, intercept = np.polyfit(x, y, 1)
    return float(intercept)
