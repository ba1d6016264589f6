"""Property suites run by ``pressure-lab verify``.

Each suite returns named checks with a pass flag and a short detail string.
Random inputs come from a seeded generator, so a suite run is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import (
    Cone,
    HyperbolicClassSpec,
    almost_mult_constant,
    block_diag_cone_check,
    cone_constant,
    cone_contraction_check,
    maps_cone_into,
    wedge_eigen_check,
)
from .linalg import LN2, exterior_powers, jacobi_singular_values, svf_weights, weighted_log2
from .symbolic import Sft, count_words, enumerate_words

SLACK = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def lines(self):
        return [f"{'PASS' if c.passed else 'FAIL'} {self.suite}.{c.name}: {c.detail}" for c in self.checks]

    def to_dict(self):
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def _log_svf(log2sv, s):
    """Natural-log singular value function for a batch of base-2 log spectra."""
    return weighted_log2(log2sv, svf_weights(s, log2sv.shape[1])) * LN2


def _log2sv(stack):
    sv = jacobi_singular_values(stack)
    with np.errstate(divide="ignore"):
        return np.log2(sv)


def svf_suite(n=10_000, dims=(2, 3, 4), seed=0):
    """Submultiplicativity, interpolation, wedge-norm identity and concavity of ``log phi^s``."""
    rng = np.random.default_rng(seed)
    per = [n // len(dims) + (1 if i < n % len(dims) else 0) for i in range(len(dims))]
    sub = interp = wedge = concave = 0
    worst_wedge = 0.0
    total = 0
    for d, m in zip(dims, per):
        a = rng.normal(size=(m, d, d))
        b = rng.normal(size=(m, d, d))
        la, lb, lab = _log2sv(a), _log2sv(b), _log2sv(a @ b)
        s_grid = np.arange(1, 2 * d + 1) / 2.0
        for s in s_grid:
            sub += int(np.sum(_log_svf(lab, s) > _log_svf(la, s) + _log_svf(lb, s) + SLACK))
        ints = {j: _log_svf(la, j) for j in range(d + 1)}
        for lo in range(d + 1):
            for hi in range(lo + 1, d + 1):
                for s in np.linspace(lo, hi, 7):
                    rhs = ((hi - s) * ints[lo] + (s - lo) * ints[hi]) / (hi - lo)
                    interp += int(np.sum(_log_svf(la, s) < rhs - SLACK))
        fine = np.linspace(0, d, 8 * d + 1)
        vals = np.stack([_log_svf(la, s) for s in fine], axis=1)
        concave += int(np.sum(np.diff(vals, 2, axis=1) > SLACK))
        for j in range(1, d + 1):
            norms = np.linalg.norm(exterior_powers(a, j), ord=2, axis=(1, 2))
            err = np.abs(np.log(norms) - la[:, :j].sum(axis=1) * LN2)
            worst_wedge = max(worst_wedge, float(err.max()))
            wedge += int(np.sum(err > SLACK))
        total += m
    return SuiteResult("svf", [
        Check("submultiplicativity", sub == 0, f"{sub} violations over {total} pairs"),
        Check("interpolation", interp == 0, f"{interp} violations over {total} matrices"),
        Check("wedge_norm_identity", wedge == 0, f"{wedge} violations, max error {worst_wedge:.3g}"),
        Check("concavity", concave == 0, f"{concave} positive second differences"),
    ])


def random_contraction_case(rng):
    """A matrix with an eigenvector ``v`` whose complement is squeezed below ``lambda/18``."""
    d = int(rng.integers(2, 6))
    v = rng.normal(size=d)
    v /= np.linalg.norm(v)
    lam = float(np.exp(rng.uniform(-3, 3)))
    perp = np.eye(d) - np.outer(v, v)
    m = rng.normal(size=(d, d)) @ perp
    m *= rng.uniform(0.01, 0.999) * lam / 18 / np.linalg.norm(m, 2)
    return lam * np.outer(v, v) + m, v, lam


def positive_pairs(rng, n, k1, k2, low=1.0, high=2.0):
    """``n`` pairs of positive 2x2 matrices, each certified to map ``k1`` into ``+-k2``."""
    out = []
    while len(out) < n:
        a = rng.uniform(low, high, size=(2, 2, 2))
        if all(maps_cone_into(m, k1, k2).holds for m in a):
            out.append((a[0], a[1]))
    return out


ORTHANT_CONES = (Cone([1.0, 1.0], 1 - math.cos(math.radians(46))), Cone([1.0, 1.0], 1 - math.cos(math.radians(25))))


def cones_suite(cases=100, pairs=1000, seed=0):
    """Contraction lemma, almost-multiplicativity and the block-diagonal corollary."""
    rng = np.random.default_rng(seed)
    fails = 0
    for _ in range(cases):
        a, v, lam = random_contraction_case(rng)
        fails += not cone_contraction_check(a, v, lam).holds
    checks = [Check("contraction_lemma", fails == 0, f"{fails} failures over {cases} matrices")]

    k1, k2 = ORTHANT_CONES
    calib = positive_pairs(rng, pairs, k1, k2)
    test = positive_pairs(rng, pairs, k1, k2)
    c_emp = almost_mult_constant(calib, k1, k2)
    c_th = cone_constant(k1, k2)
    a1 = np.stack([p[0] for p in test])
    a2 = np.stack([p[1] for p in test])
    ratio = np.linalg.norm(a1 @ a2, ord=2, axis=(1, 2)) / (
        np.linalg.norm(a1, ord=2, axis=(1, 2)) * np.linalg.norm(a2, ord=2, axis=(1, 2))
    )
    viol = int(np.sum(ratio < c_th))
    checks.append(Check("almost_mult_positive", c_emp > 0 and c_th > 0, f"c={c_emp:.4g}, analytic c={c_th:.4g}"))
    checks.append(Check("almost_mult_inequality", viol == 0, f"{viol} violations over {pairs} pairs"))

    ok = 0
    for _ in range(20):
        spec, h = random_block_diagonal(rng)
        rep = block_diag_cone_check(h, spec)
        w = all(wedge_eigen_check(h, spec, r).holds for r in range(1, len(spec.blocks) + 1))
        ok += rep.holds and w
    checks.append(Check("block_diagonal_corollary", ok == 20, f"{ok}/20 hyperbolic-class matrices certified"))
    return SuiteResult("cones", checks)


def random_block_diagonal(rng, gap=10.0, eps=0.01):
    """A hyperbolic-class matrix: conformal blocks made from scaled random rotations."""
    sizes = [int(x) for x in rng.integers(1, 3, size=int(rng.integers(2, 4)))]
    taus = [gap * (len(sizes) - 1 - i) / 2 for i in range(len(sizes))]
    spec = HyperbolicClassSpec(tuple(zip(sizes, taus)), eps)
    h = np.zeros((spec.d, spec.d))
    for sl, (b, t) in zip(spec.slices(), spec.blocks):
        q, _ = np.linalg.qr(rng.normal(size=(b, b)))
        h[sl, sl] = math.exp(t + rng.uniform(-eps, eps)) * q
    return spec, h


def symbolic_suite(n_sfts=20, n_max=10, seed=0):
    """Transfer-matrix counts against explicit enumeration on random SFTs."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_sfts):
        k = int(rng.integers(2, 4))
        while True:
            t = (rng.random((k, k)) < 0.7).astype(int)
            if t.sum(axis=0).all() and t.sum(axis=1).all():
                break
        sft = Sft(t)
        for n in range(1, n_max + 1):
            bad += count_words(sft, n) != sum(1 for _ in enumerate_words(sft, n))
    return SuiteResult("symbolic", [Check("count_matches_enumeration", bad == 0, f"{bad} mismatches")])


SUITES = {"svf": svf_suite, "cones": cones_suite, "symbolic": symbolic_suite}


def run_suite(name, seed=0):
    return SUITES[name](seed=seed)
