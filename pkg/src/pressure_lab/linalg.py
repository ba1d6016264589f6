"""Small dense matrix kernel.

Singular values come from a batched one-sided (Hestenes) Jacobi iteration,
which is accurate to high relative precision for the d <= 8 matrices handled
here. Products are carried as :class:`ScaledMatrix` values whose scale is a
power of two, so renormalization never introduces rounding.

All log-domain helpers with a ``log2`` in their name work in base 2; the
public functions return natural logarithms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

LN2 = math.log(2.0)
MAX_DIM = 8
# core singular values below this (relative to a core of norm ~1) are structural zeros
ZERO_THRESHOLD = 1e-300

_EPS = np.finfo(float).eps
_MAX_SWEEPS = 60
_TINY = 1e-250


def as_matrix(a, name="matrix"):
    """Validate and return ``a`` as a square float64 array of dimension 1..8."""
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}", name)
    d = m.shape[0]
    if not 1 <= d <= MAX_DIM:
        raise ValidationError(f"dimension {d} outside 1..{MAX_DIM}", name)
    if not np.all(np.isfinite(m)):
        raise ValidationError("entries must be finite", name)
    return m


# ---------------------------------------------------------------------------
# batched kernels


def jacobi_singular_values(a):
    """Singular values of a stack of square matrices, sorted descending.

    ``a`` has shape ``(N, d, d)``; the result has shape ``(N, d)``. Each row
    is rotated independently and a row that has converged is left bitwise
    untouched, so the output for a matrix never depends on which other
    matrices share the batch.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        return jacobi_singular_values(a[None])[0]
    n, d, _ = a.shape
    if n == 0:
        return np.zeros((0, d))
    if d == 1:
        return np.abs(a[:, :, 0])
    # gt[:, j, :] is column j, kept contiguous
    gt = np.ascontiguousarray(np.swapaxes(a, 1, 2))
    tol = d * _EPS
    pairs = list(itertools.combinations(range(d), 2))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        for _ in range(_MAX_SWEEPS):
            rotated = False
            for p, q in pairs:
                x = gt[:, p, :]
                y = gt[:, q, :]
                alpha = np.einsum("ij,ij->i", x, x)
                beta = np.einsum("ij,ij->i", y, y)
                gamma = np.einsum("ij,ij->i", x, y)
                tiny = (alpha < _TINY) | (beta < _TINY)
                if tiny.any():
                    # the rotation is scale-invariant: rescale both columns by a
                    # common factor where squared norms may have underflowed
                    xt, yt = x[tiny], y[tiny]
                    m = np.maximum(np.max(np.abs(xt), axis=1), np.max(np.abs(yt), axis=1))
                    m = np.where(m > 0, m, 1.0)[:, None]
                    xt, yt = xt / m, yt / m
                    alpha[tiny] = np.einsum("ij,ij->i", xt, xt)
                    beta[tiny] = np.einsum("ij,ij->i", yt, yt)
                    gamma[tiny] = np.einsum("ij,ij->i", xt, yt)
                active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
                if not active.any():
                    continue
                rotated = True
                gam = np.where(active, gamma, 1.0)
                zeta = (beta - alpha) / (2.0 * gam)
                sgn = np.where(zeta >= 0, 1.0, -1.0)
                t = sgn / (np.abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                c = np.where(active, c, 1.0)[:, None]
                s = np.where(active, s, 0.0)[:, None]
                xn = c * x - s * y
                yn = s * x + c * y
                gt[:, p, :] = xn
                gt[:, q, :] = yn
            if not rotated:
                break
    return _sorted_column_norms(np.swapaxes(gt, 1, 2))


def _sorted_column_norms(g):
    m = np.max(np.abs(g), axis=1)
    safe = np.where(m > 0, m, 1.0)
    norms = np.sqrt(np.einsum("nij,nij->nj", g / safe[:, None, :], g / safe[:, None, :])) * m
    return -np.sort(-norms, axis=1)


def renormalize(products, sv):
    """Rescale products (and their singular values) by exact powers of two.

    Returns ``(cores, sv_core, exp2)`` where ``products = 2**exp2 * cores`` and
    the top core singular value lies in [1/2, 1). Zero products get
    ``exp2 = -inf`` and an all-zero core.
    """
    top = sv[:, 0]
    zero = top <= 0
    _, e = np.frexp(np.where(zero, 1.0, top))
    cores = np.ldexp(products, -e[:, None, None])
    svc = np.ldexp(sv, -e[:, None])
    svc = np.where(svc < ZERO_THRESHOLD, 0.0, svc)
    exp2 = e.astype(float)
    if zero.any():
        exp2[zero] = -np.inf
        cores[zero] = 0.0
        svc[zero] = 0.0
    return cores, svc, exp2


def log2_singular_values(svc, exp2):
    """Base-2 log singular values from core values and power-of-two scales."""
    with np.errstate(divide="ignore"):
        out = np.log2(svc) + exp2[:, None]
    return np.where(svc > 0, out, -np.inf)


def weighted_log2(log2sv, weights):
    """``sum_j w_j log2 alpha_j`` per row with the convention ``0 * (-inf) = 0``."""
    w = np.asarray(weights, dtype=float)
    with np.errstate(invalid="ignore"):
        terms = np.where(w > 0, log2sv * w, 0.0)
    return terms.sum(axis=-1)


def lse2(x):
    """Return ``(max, sum)`` with ``log2 sum 2**x = max + log2(sum)``."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -np.inf, 0.0
    m = float(np.max(x))
    if m == -np.inf:
        return -np.inf, 0.0
    return m, float(np.sum(np.exp2(x - m)))


def merge_lse2(parts):
    """Combine ``(max, sum)`` pairs with a fixed-shape binary tree."""
    parts = list(parts)
    if not parts:
        return -np.inf, 0.0
    while len(parts) > 1:
        nxt = []
        for i in range(0, len(parts) - 1, 2):
            nxt.append(_merge2(parts[i], parts[i + 1]))
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _merge2(a, b):
    (ma, sa), (mb, sb) = a, b
    if ma == -np.inf:
        return b
    if mb == -np.inf:
        return a
    m = max(ma, mb)
    return m, sa * 2.0 ** (ma - m) + sb * 2.0 ** (mb - m)


def lse2_value(part):
    m, s = part
    if m == -np.inf or s == 0.0:
        return -np.inf
    return m + math.log2(s)


# ---------------------------------------------------------------------------
# exponents


def svf_weights(s, d):
    """Per-singular-value exponents reproducing the singular value function.

    For ``0 <= s <= d`` this is the flag ``(1, ..., 1, s - floor(s), 0, ...)``;
    for ``s > d`` every exponent is ``s / d`` (the determinant power).
    """
    s = float(s)
    if not s >= 0 or not math.isfinite(s):
        raise ValidationError(f"s must be finite and >= 0, got {s}", "s")
    w = np.zeros(d)
    if s > d:
        w[:] = s / d
        return w
    m = int(math.floor(s))
    w[:m] = 1.0
    if m < d:
        w[m] = s - m
    return w


def check_weights(s_vec, d):
    w = np.array(s_vec, dtype=float).reshape(-1)
    if w.shape[0] != d:
        raise ValidationError(f"expected {d} exponents, got {w.shape[0]}", "s_vec")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValidationError("exponents must be finite and >= 0", "s_vec")
    if np.any(np.diff(w) > 0):
        raise ValidationError("exponents must be nonincreasing", "s_vec")
    return w


# ---------------------------------------------------------------------------
# single-matrix API


@dataclass(frozen=True, eq=False)
class SingularSpectrum:
    """Singular values of one matrix, with natural-log companions."""

    alphas: np.ndarray
    log_alphas: np.ndarray

    def __len__(self):
        return len(self.alphas)


@dataclass(frozen=True, eq=False)
class ScaledMatrix:
    """A matrix stored as ``2**exp2 * core``.

    After construction or multiplication the core has operator norm in
    [1/2, 1), unless the matrix is zero, in which case the core is zero and
    ``exp2`` is ``-inf``.
    """

    core: np.ndarray
    exp2: float = 0.0

    @classmethod
    def from_matrix(cls, a):
        a = as_matrix(a)
        return cls._normalized(a, 0.0)

    @classmethod
    def _normalized(cls, product, exp2):
        sv = jacobi_singular_values(product[None])
        cores, _, e = renormalize(product[None], sv)
        return cls(cores[0], exp2 + float(e[0]))

    @property
    def dim(self):
        return self.core.shape[0]

    @property
    def log_scale(self):
        """Scale in natural-log units."""
        return self.exp2 * LN2

    @property
    def is_zero(self):
        return self.exp2 == -np.inf

    def value(self):
        if self.is_zero:
            return np.zeros_like(self.core)
        return np.ldexp(self.core, int(self.exp2))

    def __matmul__(self, other):
        if not isinstance(other, ScaledMatrix):
            other = ScaledMatrix.from_matrix(other)
        if self.is_zero or other.is_zero:
            return ScaledMatrix(np.zeros_like(self.core), -np.inf)
        return ScaledMatrix._normalized(self.core @ other.core, self.exp2 + other.exp2)

    def log2_singular_values(self):
        sv = jacobi_singular_values(self.core[None])
        sv = np.where(sv < ZERO_THRESHOLD, 0.0, sv)
        return log2_singular_values(sv, np.array([self.exp2]))[0]


def _scaled(m):
    return m if isinstance(m, ScaledMatrix) else ScaledMatrix.from_matrix(m)


def singular_values(m):
    """All singular values of ``m`` (a matrix or :class:`ScaledMatrix`), descending."""
    l2 = _scaled(m).log2_singular_values()
    return SingularSpectrum(np.exp2(l2), l2 * LN2)


def svf_log(m, s):
    """Natural log of the singular value function of ``m`` at ``s``.

    Uses ``0**0 = 1``, so ``s = 0`` always gives 0; returns ``-inf`` when a
    zero singular value carries a positive exponent.
    """
    sm = _scaled(m)
    w = svf_weights(s, sm.dim)
    return float(weighted_log2(sm.log2_singular_values(), w)) * LN2


def generalized_svf_log(m, s_vec):
    """Natural log of ``prod_j alpha_j(m) ** s_j`` for nonincreasing ``s_vec``."""
    sm = _scaled(m)
    w = check_weights(s_vec, sm.dim)
    return float(weighted_log2(sm.log2_singular_values(), w)) * LN2


def exterior_power(m, j):
    """The ``j``-th exterior power: ``j x j`` minors on lexicographic index subsets."""
    a = as_matrix(m)
    d = a.shape[0]
    if not 1 <= j <= d:
        raise ValidationError(f"j must lie in 1..{d}, got {j}", "j")
    subsets = np.array(list(itertools.combinations(range(d), j)))
    rows = subsets[:, None, :, None]
    cols = subsets[None, :, None, :]
    return np.linalg.det(a[rows, cols])


def exterior_powers(stack, j):
    """Batched :func:`exterior_power` for an ``(N, d, d)`` stack."""
    a = np.asarray(stack, dtype=float)
    d = a.shape[-1]
    if not 1 <= j <= d:
        raise ValidationError(f"j must lie in 1..{d}, got {j}", "j")
    subsets = np.array(list(itertools.combinations(range(d), j)))
    rows = subsets[:, None, :, None]
    cols = subsets[None, :, None, :]
    return np.linalg.det(a[:, rows, cols])


def wedge_subsets(d, j):
    """Index subsets labelling the exterior-power basis, in the order used above."""
    return list(itertools.combinations(range(d), j))
