"""Perturbation scans for pressure and dimension continuity, and the discontinuity example.

Every comparison is made at matched level budgets; reports describe the trend
over a finite grid and never claim a limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dimension import ContractionWarning, singularity_dimension
from .errors import PressureLabError, ValidationError
from .levels import Budget, reduce_level
from .linalg import LN2, lse2, lse2_value, merge_lse2, singular_values
from .pressure import CocycleSpec, pressure_estimate, pressure_estimates, resolve_weights
from .report import SCHEMA

USC_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class PerturbationScan:
    """Perturbations ``A + eps * Delta`` of a base system along one direction.

    ``direction`` holds one matrix per symbol and is rescaled so that the
    stacked Frobenius norm is 1, making ``eps`` a distance between systems.
    """

    base: CocycleSpec
    direction: np.ndarray
    epsilons: tuple
    s_values: tuple = (1.0,)
    n_max: int = 12

    def __post_init__(self):
        delta = np.array(self.direction, dtype=float)
        if delta.shape != self.base.matrices.shape:
            raise ValidationError(
                f"direction must have shape {self.base.matrices.shape}, got {delta.shape}", "continuity.direction"
            )
        norm = float(np.linalg.norm(delta))
        if not np.isfinite(norm) or norm == 0:
            raise ValidationError("direction must be nonzero and finite", "continuity.direction")
        delta = delta / norm
        delta.setflags(write=False)
        object.__setattr__(self, "direction", delta)
        eps = tuple(float(e) for e in self.epsilons)
        if not eps or any(not e > 0 for e in eps):
            raise ValidationError("epsilons must be a nonempty grid of positive values", "continuity.epsilons")
        s_vals = tuple(float(s) for s in self.s_values)
        if not s_vals:
            raise ValidationError("s_values must be nonempty", "continuity.s_values")
        object.__setattr__(self, "epsilons", tuple(sorted(eps, reverse=True)))
        object.__setattr__(self, "s_values", s_vals)

    def perturbed(self, eps):
        return self.base.perturbed(self.direction, eps)


def random_direction(spec, seed=0):
    """A reproducible Gaussian direction with unit stacked Frobenius norm."""
    delta = np.random.default_rng(seed).normal(size=spec.matrices.shape)
    return delta / np.linalg.norm(delta)


@dataclass
class ScanReport:
    kind: str
    columns: list
    rows: list
    checks: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(bool(v) for v in self.checks.values())

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "kind": self.kind,
            "columns": list(self.columns),
            "rows": [dict(r) for r in self.rows],
            "checks": dict(self.checks),
            "metadata": dict(self.metadata),
        }


# ---------------------------------------------------------------------------
# fixed-n upper semicontinuity


def _inflated_level_upper(spec, w, m, eta, budget):
    """``(1/m) log2`` of the level sum with every singular value raised by ``eta``.

    Weyl's inequality ``alpha_j(B) <= alpha_j(A) + ||B - A||`` makes this an upper
    bound for the level sum of any system whose length-``m`` products lie
    within ``eta`` of those of ``spec``.
    """
    log2_eta = math.log2(eta) if eta > 0 else -np.inf

    def fn(log2sv, gsum, first, last):
        shifted = np.logaddexp2(log2sv, log2_eta)
        with np.errstate(invalid="ignore"):
            x = gsum / LN2 + np.where(w > 0, shifted * w, 0.0).sum(axis=1)
        return lse2(x)

    total = lse2_value(merge_lse2(reduce_level(spec.levels, m, budget, fn)))
    return total * LN2 / m


def usc_bound(spec, other, exponent, n, budget=None):
    """Rigorous bound ``U_n(A) + delta`` for ``U_n(B)``, where ``U_n = min_{m<=n} L_m``.

    Products of length ``m`` differ by at most ``(C + e)^m - C^m`` in norm, with
    ``C = max ||A_i||`` and ``e = max ||B_i - A_i||``.
    """
    budget = budget or Budget()
    w, _ = resolve_weights(spec, exponent)
    c = float(np.max(spec.norms))
    e = float(np.max(np.linalg.norm(other.matrices - spec.matrices, ord=2, axis=(1, 2))))
    out = np.inf
    for m in range(1, min(n, budget.cache_levels) + 1):
        eta = (c + e) ** m - c**m
        out = min(out, _inflated_level_upper(spec, w, m, eta, budget))
    return out


def _fixed_upper(est, n):
    return min(v for m, v in est.levels if m <= n)


PRESSURE_COLUMNS = [
    "eps", "s", "point", "lower", "upper", "delta", "abs_delta",
    "usc_upper", "usc_bound", "usc_base", "usc_ok", "bracket_ok", "error",
]


def pressure_scan(scan, budget=None):
    """Pressure of each perturbation at each ``s``, against the base system."""
    budget = budget or Budget()
    s_vals = list(scan.s_values)
    n_usc = min(scan.n_max, budget.cache_levels)
    base = dict(zip(s_vals, pressure_estimates(scan.base, s_vals, scan.n_max, budget=budget)))
    rows = []
    for eps in scan.epsilons:
        try:
            spec = scan.perturbed(eps)
            ests = pressure_estimates(spec, s_vals, scan.n_max, budget=budget)
        except PressureLabError as exc:
            rows += [_error_row(PRESSURE_COLUMNS, exc, eps=eps, s=s) for s in s_vals]
            continue
        for s, est in zip(s_vals, ests):
            b = base[s]
            delta = _diff(est.point, b.point)
            u_b = _fixed_upper(est, n_usc)
            bound = usc_bound(scan.base, spec, s, n_usc, budget)
            rows.append({
                "eps": eps,
                "s": s,
                "point": est.point,
                "lower": est.lower,
                "upper": est.upper,
                "delta": delta,
                "abs_delta": abs(delta),
                "usc_upper": u_b,
                "usc_bound": bound,
                "usc_base": _fixed_upper(b, n_usc),
                "usc_ok": bool(u_b <= bound + USC_SLACK),
                "bracket_ok": bool(est.lower <= est.point <= est.upper),
                "error": "",
            })
    checks = {
        "usc_never_violated": all(r["usc_ok"] for r in rows if not r["error"]),
        "brackets_respected": all(r["bracket_ok"] for r in rows if not r["error"]),
        "abs_delta_decreasing": _decreasing(rows, s_vals),
    }
    meta = {"n_max": scan.n_max, "usc_levels": n_usc, "epsilons": list(scan.epsilons), "s_values": s_vals}
    return ScanReport("pressure", PRESSURE_COLUMNS, rows, checks, meta)


def _diff(a, b):
    if a == b:
        return 0.0
    return a - b


def _decreasing(rows, s_vals):
    """``|Delta P|`` strictly decreases as ``eps`` shrinks, for every ``s``."""
    for s in s_vals:
        seq = [r["abs_delta"] for r in rows if r["s"] == s and not r["error"]]
        if any(not b < a for a, b in zip(seq, seq[1:])):
            return False
    return True


def _error_row(columns, exc, **known):
    row = {c: None for c in columns}
    row.update(known, error=str(exc))
    return row


DIMENSION_COLUMNS = ["eps", "s_lower", "s_upper", "value", "delta", "affinity", "budget_limited", "error"]


def dimension_scan(scan, tol=1e-8, budget=None):
    """Singularity dimension along the scan; non-contractive rows are annotated and skipped."""
    budget = budget or Budget()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ContractionWarning)
        base = singularity_dimension(scan.base, tol, scan.n_max, budget)
        rows = []
        for eps in scan.epsilons:
            spec = scan.perturbed(eps)
            if not spec.contractive:
                rows.append(_error_row(DIMENSION_COLUMNS, "skipped: perturbed system is not contractive", eps=eps))
                continue
            try:
                r = singularity_dimension(spec, tol, scan.n_max, budget)
            except PressureLabError as exc:
                rows.append(_error_row(DIMENSION_COLUMNS, exc, eps=eps))
                continue
            rows.append({
                "eps": eps,
                "s_lower": r.s_lower,
                "s_upper": r.s_upper,
                "value": r.value,
                "delta": r.value - base.value,
                "affinity": r.affinity,
                "budget_limited": r.budget_limited,
                "error": "",
            })
    meta = {"n_max": scan.n_max, "tol": tol, "base": base.to_dict() | {"history": []}}
    checks = {"rows_bracketed": all(r["s_lower"] <= r["s_upper"] for r in rows if not r["error"])}
    return ScanReport("dimension", DIMENSION_COLUMNS, rows, checks, meta)


# ---------------------------------------------------------------------------
# discontinuity example

DEMO_MATRIX = np.array([[0.5, 0.0], [0.0, 0.0]])
DEMO_T = (1.01, 1.5, 2.0)
DEMO_DELTAS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-9)
DEMO_COLUMNS = ["system", "delta", "s", "point", "lower", "upper", "closed_form", "error"]


def discontinuity_demo(n_max=12, deltas=DEMO_DELTAS, budget=None):
    """Two copies of a rank-one map: the pressure is 0 at ``s = 1`` and ``-inf`` beyond.

    Regularizing the zero singular value to ``delta`` gives the finite
    closed form ``log 2 + log(1/2) + 0.5 log delta`` at ``s = 1.5``, which
    diverges to ``-inf`` as ``delta -> 0``.
    """
    budget = budget or Budget()
    spec = CocycleSpec.full_shift([DEMO_MATRIX, DEMO_MATRIX])
    rows = []
    ests = pressure_estimates(spec, (1.0,) + DEMO_T, n_max, budget=budget)
    for s, est in zip((1.0,) + DEMO_T, ests):
        closed = 0.0 if s == 1.0 else -np.inf
        rows.append({
            "system": "rank_one", "delta": 0.0, "s": s, "point": est.point, "lower": est.lower,
            "upper": est.upper, "closed_form": closed, "error": _abs_err(est.point, closed),
        })
    for delta in deltas:
        a = np.array([[0.5, 0.0], [0.0, delta]])
        est = pressure_estimate(CocycleSpec.full_shift([a, a]), 1.5, n_max, budget=budget)
        closed = math.log(2) + math.log(0.5) + 0.5 * math.log(delta)
        rows.append({
            "system": "regularized", "delta": delta, "s": 1.5, "point": est.point, "lower": est.lower,
            "upper": est.upper, "closed_form": closed, "error": _abs_err(est.point, closed),
        })
    reg = [r for r in rows if r["system"] == "regularized"]
    checks = {
        "zero_at_one": rows[0]["point"] == 0.0 and rows[0]["upper"] == 0.0,
        "minus_inf_beyond": all(r["point"] == -np.inf and r["upper"] == -np.inf for r in rows[1 : 1 + len(DEMO_T)]),
        "regularized_closed_form": all(r["error"] <= 1e-10 for r in reg),
        "regularized_diverges": all(b["point"] < a["point"] for a, b in zip(reg, reg[1:])),
    }
    return ScanReport("discontinuity", DEMO_COLUMNS, rows, checks, {"n_max": n_max, "matrix": DEMO_MATRIX.tolist()})


def _abs_err(a, b):
    if a == b:
        return 0.0
    return abs(a - b)


# ---------------------------------------------------------------------------
# joint continuity in (A, s)

JOINT_COLUMNS = [
    "eps", "s", "s_next", "point", "point_next", "upper", "upper_next", "abs_delta_upper",
    "abs_delta_point", "bound", "upper_ok", "levels_ok", "point_ok",
]


def joint_lipschitz(spec):
    """``max(|log C|, |log D|)`` with ``C = max ||B_i||`` and ``D = min alpha_d(B_i)``."""
    c = float(np.max(spec.norms))
    d = min(float(singular_values(m).alphas[-1]) for m in spec.matrices)
    if d <= 0:
        return math.inf
    return max(abs(math.log(c)), abs(math.log(d)))


def joint_continuity_scan(spec, s_grid, eps, direction=None, n_max=12, seed=0, budget=None):
    """Variation of ``P(B, s)`` in ``s`` for ``B`` in ``{A, A + eps Delta}``.

    The level-wise bound ``|L_n(B, s') - L_n(B, s)| <= |s - s'| max(|log C|, |log D|)``
    holds exactly for invertible systems, so it is asserted on every level and
    on the upper bound; the extrapolated point is reported against it too.
    """
    budget = budget or Budget()
    if not np.all(spec.invertible):
        raise ValidationError("joint continuity scan needs every matrix invertible", "system.matrices")
    s_grid = sorted(float(s) for s in s_grid)
    if len(s_grid) < 2:
        raise ValidationError("s grid needs at least 2 values", "continuity.s_values")
    delta = random_direction(spec, seed) if direction is None else np.asarray(direction, dtype=float)
    delta = delta / np.linalg.norm(delta)
    rows = []
    systems = [(0.0, spec)] + [(float(e), spec.perturbed(delta, e)) for e in np.atleast_1d(eps)]
    for e, b in systems:
        if not np.all(b.invertible):
            raise ValidationError(f"perturbed system at eps={e} is singular", "continuity.eps")
        lip = joint_lipschitz(b)
        ests = pressure_estimates(b, s_grid, n_max, budget=budget)
        for (s0, e0), (s1, e1) in zip(zip(s_grid, ests), list(zip(s_grid, ests))[1:]):
            bound = abs(s1 - s0) * lip
            du = abs(e1.upper - e0.upper)
            dp = abs(e1.point - e0.point)
            lv = all(abs(v1 - v0) <= bound * (1 + 1e-12) + 1e-12 for (_, v0), (_, v1) in zip(e0.levels, e1.levels))
            rows.append({
                "eps": e, "s": s0, "s_next": s1, "point": e0.point, "point_next": e1.point,
                "upper": e0.upper, "upper_next": e1.upper, "abs_delta_upper": du, "abs_delta_point": dp,
                "bound": bound, "upper_ok": bool(du <= bound * (1 + 1e-12) + 1e-12), "levels_ok": bool(lv),
                "point_ok": bool(dp <= bound * (1 + 1e-12) + 1e-12),
            })
    checks = {
        "upper_within_bound": all(r["upper_ok"] for r in rows),
        "levels_within_bound": all(r["levels_ok"] for r in rows),
    }
    meta = {"n_max": n_max, "s_grid": s_grid, "eps": [e for e, _ in systems[1:]], "seed": seed}
    return ScanReport("joint", JOINT_COLUMNS, rows, checks, meta)
