"""Acceptance gate: each criterion is run at its stated tolerance and time limit.

Every test records one ``PASS``/``FAIL`` line; the lines are printed when the
test runs (visible with ``-s``) and again in the pytest terminal summary.
Running this file directly prints the lines without pytest.
"""

import json
import math
import os
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import GOLDEN, diagonal_dimension, moran_dimension  # noqa: E402
from pressure_lab.cones import Cone, almost_mult_constant, cone_constant, cone_contraction_check, maps_cone_into  # noqa: E402
from pressure_lab.continuity import PerturbationScan, discontinuity_demo, pressure_scan, random_direction  # noqa: E402
from pressure_lab.dimension import ContractionWarning, jsr_estimate, singularity_dimension  # noqa: E402
from pressure_lab.pressure import CocycleSpec, level_sum_log, pressure_estimate  # noqa: E402
from pressure_lab.spectrum import expected_svf_rate, legendre_spectrum, variational_value  # noqa: E402
from pressure_lab.symbolic import MarkovMeasure  # noqa: E402
from pressure_lab.verify import ORTHANT_CONES, random_contraction_case, svf_suite  # noqa: E402

RESULTS = {}


def record(num, name, passed, detail, elapsed, limit):
    ok = bool(passed and (limit is None or elapsed < limit))
    timing = f"{elapsed:.2f}s" + ("" if limit is None else f" (limit {limit:g}s)")
    line = f"{'PASS' if ok else 'FAIL'} [{num:2d}] {name}: {detail}; {timing}"
    RESULTS[num] = line
    print(line)
    return ok


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_01_scalar_pressure_exact():
    spec = CocycleSpec.full_shift([[[0.5]], [[1 / 3]]])
    with Timer() as t:
        errs = [abs(level_sum_log(spec, 1.0, n) / n - math.log(5 / 6)) for n in range(1, 13)]
    err = max(errs)
    assert record(1, "scalar pressure exactness", err <= 1e-10, f"max |L_n - log(5/6)| = {err:.2e}", t.elapsed, 1)


def test_02_moran_dimension():
    spec = CocycleSpec.full_shift([[[0.5]], [[1 / 3]]])
    oracle = moran_dimension([0.5, 1 / 3])
    with Timer() as t, warnings.catch_warnings():
        warnings.simplefilter("ignore", ContractionWarning)
        res = singularity_dimension(spec)
    err = abs(res.value - oracle)
    assert record(2, "Moran dimension", err <= 1e-6, f"s = {res.value:.10f}, oracle {oracle:.10f}, err {err:.1e}",
                  t.elapsed, 5)


def test_03_diagonal_closed_form():
    spec = CocycleSpec.full_shift([np.diag([0.5, 0.25])] * 3)
    target = diagonal_dimension()
    with Timer() as t, warnings.catch_warnings():
        warnings.simplefilter("ignore", ContractionWarning)
        res = singularity_dimension(spec, n_max=12)
    err = abs(res.value - target)
    assert record(3, "diagonal closed form", err <= 1e-4, f"s = {res.value:.10f}, target {target:.10f}, err {err:.1e}",
                  t.elapsed, 30)


def test_04_discontinuity_demo():
    with Timer() as t:
        rep = discontinuity_demo()
    rows = rep.rows
    at_one = rows[0]["point"] == 0.0
    beyond = all(r["point"] == -math.inf for r in rows[1:4])
    reg = [r for r in rows if r["system"] == "regularized"]
    reg_err = max(r["error"] for r in reg)
    ok = at_one and beyond and reg_err <= 1e-10
    detail = f"P(1) = {rows[0]['point']!r}, P(t>1) = -inf: {beyond}, regularized max err {reg_err:.1e}"
    assert record(4, "discontinuity demo", ok, detail, t.elapsed, 1)


def test_05_jsr_golden_ratio():
    mats = [[[1.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]]]
    with Timer() as t:
        lo = jsr_estimate(mats, 2).lower
        pb = jsr_estimate(mats, 12, s_large=64.0).pressure_based
    e1, e2 = abs(lo - GOLDEN), abs(pb - GOLDEN)
    ok = e1 <= 1e-10 and e2 <= 1e-2
    assert record(5, "JSR golden ratio", ok, f"lower(n=2) err {e1:.1e}, pressure-based(s=64,n=12) err {e2:.1e}",
                  t.elapsed, 60)


def test_06_variational_principle():
    rng = np.random.default_rng(6)
    worst = 0.0
    with Timer() as t:
        for _ in range(20):
            k = int(rng.integers(2, 5))
            r = rng.uniform(0.05, 0.95, size=k)
            g = rng.normal(scale=0.5, size=k)
            spec = CocycleSpec.full_shift([[[x]] for x in r], potential=g)
            for s in (0.5, 1.0, 1.5):
                est = pressure_estimate(spec, s, 8)
                p = est.point
                # for d = 1 every level is exact, so the levels must agree as well
                worst = max(worst, max(abs(v - p) for _, v in est.levels))
                # closed-form equilibrium p_i ~ e^{g_i} r_i^s, written out independently
                w = np.exp(g) * r**s
                worst = max(worst, abs(p - variational_value(spec, s, w / w.sum())))
    assert record(6, "variational principle", worst <= 1e-10, f"max |P - (h + energy)| = {worst:.1e} over 60 cases",
                  t.elapsed, 5)


def test_07_svf_property_suite():
    with Timer() as t:
        res = svf_suite(n=10_000, dims=(2, 3, 4), seed=7)
    wanted = {"submultiplicativity", "interpolation", "wedge_norm_identity"}
    checks = [c for c in res.checks if c.name in wanted]
    ok = len(checks) == 3 and all(c.passed for c in checks)
    detail = "; ".join(f"{c.name}: {c.detail}" for c in checks)
    assert record(7, "SVF property suite", ok, detail, t.elapsed, 30)


def test_08_oseledets_lemma_consistency():
    diag = CocycleSpec.full_shift([np.diag([0.5, 0.25])])
    scalar = CocycleSpec.full_shift([[[0.5]], [[0.2]]])
    lam_scalar = 0.4 * math.log(0.5) + 0.6 * math.log(0.2)
    # closed-form rates from the known exponents, used as an independent cross-check
    exact = {
        "diag": lambda s: min(s, 1) * math.log(0.5) + max(min(s, 2) - 1, 0) * math.log(0.25)
        if s <= 2 else s / 2 * math.log(0.125),
        "scalar": lambda s: s * lam_scalar,
    }
    cases = [
        ("diag", diag, MarkovMeasure.bernoulli([1.0]), (0.5, 1.0, 1.5, 2.0, 2.5)),
        ("scalar", scalar, MarkovMeasure.bernoulli([0.4, 0.6]), (0.5, 1.0, 1.5)),
    ]
    parts, ok = [], True
    with Timer() as t:
        for name, spec, mu, s_list in cases:
            worst, allowed, worst_exact = 0.0, math.inf, 0.0
            for s in s_list:
                r = expected_svf_rate(spec, mu, s, 10_000, trials=64, seed=8)
                ok &= bool(r.consistent)
                se = math.hypot(r.standard_error, r.lemma_standard_error)
                worst = max(worst, abs(r.value - r.lemma))
                allowed = min(allowed, 3 * se + 1e-12)
                off = abs(r.value - exact[name](s))
                ok &= off <= 3 * r.standard_error + 1e-12
                worst_exact = max(worst_exact, off)
            parts.append(
                f"{name} max |rate - lemma| = {worst:.1e} (smallest allowance {allowed:.1e}), "
                f"max |rate - closed form| = {worst_exact:.1e}"
            )
    assert record(8, "Oseledets/lemma consistency", ok, ", ".join(parts), t.elapsed, 60)


def _certified_pairs(rng, n, k1, k2, dim):
    out = []
    while len(out) < n:
        a = rng.uniform(1.0, 2.0, size=(2, dim, dim))
        if all(maps_cone_into(m, k1, k2).holds for m in a):
            out.append((a[0], a[1]))
    return out


def test_09_cone_lemma_suite():
    rng = np.random.default_rng(9)
    with Timer() as t:
        fails = 0
        for _ in range(100):
            a, v, lam = random_contraction_case(rng)
            fails += not cone_contraction_check(a, v, lam, samples=10_000).holds
        u3 = np.ones(3)
        families = [
            ("orthant-2d", ORTHANT_CONES, 2),
            ("narrow-2d", (Cone([1.0, 1.0], 1 - math.cos(math.radians(40))),
                           Cone([1.0, 1.0], 1 - math.cos(math.radians(22)))), 2),
            ("orthant-3d", (Cone(u3, 1 - math.cos(math.radians(56))),
                            Cone(u3, 1 - math.cos(math.radians(25)))), 3),
        ]
        viol, c_ok, parts = 0, True, []
        for name, (k1, k2), dim in families:
            calib = _certified_pairs(rng, 200, k1, k2, dim)
            c_emp = almost_mult_constant(calib, k1, k2)
            c = cone_constant(k1, k2)
            c_ok &= c_emp > 0 and c > 0
            test = _certified_pairs(rng, 1000, k1, k2, dim)
            a1 = np.stack([p[0] for p in test])
            a2 = np.stack([p[1] for p in test])
            lhs = np.linalg.norm(a1 @ a2, ord=2, axis=(1, 2))
            rhs = c * np.linalg.norm(a1, ord=2, axis=(1, 2)) * np.linalg.norm(a2, ord=2, axis=(1, 2))
            viol += int(np.sum(lhs < rhs))
            parts.append(f"{name} c={c:.3g} (empirical {c_emp:.3g})")
    ok = fails == 0 and c_ok and viol == 0
    detail = f"contraction failures {fails}/100; inequality violations {viol}/3000; " + ", ".join(parts)
    assert record(9, "cone lemma suite", ok, detail, t.elapsed, 60)


def test_10_continuity_trend():
    base = CocycleSpec.full_shift([[[0.6, 0.3], [0.1, 0.4]], [[0.3, -0.2], [0.25, 0.5]]])
    with Timer() as t:
        scan = PerturbationScan(base, random_direction(base, 1), [1e-1, 1e-2, 1e-3, 1e-4], (1.0,), n_max=12)
        rep = pressure_scan(scan)
    deltas = [r["abs_delta"] for r in rep.rows]
    ok = (
        np.all(base.invertible)
        and all(b < a for a, b in zip(deltas, deltas[1:]))
        and deltas[-1] <= 1e-2
        and rep.checks["usc_never_violated"]
    )
    detail = "|dP| = " + ", ".join(f"{d:.2e}" for d in deltas) + f"; USC ok: {rep.checks['usc_never_violated']}"
    assert record(10, "continuity trend", ok, detail, t.elapsed, 120)


def _analytic_h(alpha):
    from scipy.optimize import brentq

    def dm(q):
        a, b = 2.0**-q, 4.0**-q
        return -(a * math.log(2) + b * math.log(4)) / (a + b)

    q = brentq(lambda x: dm(x) - alpha, -60, 60, xtol=1e-15)
    return math.log(2.0**-q + 4.0**-q) - alpha * q


def test_11_legendre_sanity():
    flat = CocycleSpec.full_shift([[[0.5]], [[0.5]]])
    skew = CocycleSpec.full_shift([[[0.5]], [[0.25]]])
    with Timer() as t:
        grid = np.linspace(0.1, 5.0, 50)
        lf = legendre_spectrum(flat, grid)
        ls = legendre_spectrum(skew, grid)
    e_h = max(abs(p.h - math.log(2)) for p in lf.points)
    e_a = max(abs(p.alpha + math.log(2)) for p in lf.points)
    e_g = max(abs(p.h - _analytic_h(p.alpha)) for p in ls.points)
    ok = e_h <= 1e-8 and e_a <= 1e-8 and e_g <= 1e-4
    detail = f"flat: h err {e_h:.1e}, alpha err {e_a:.1e}; (1/2,1/4) graph err {e_g:.1e} on 50 points"
    assert record(11, "Legendre spectrum", ok, detail, t.elapsed, 10)


DETERMINISM_CONFIGS = {
    "pressure": {
        "system": {"matrices": [[[0.6, 0.3], [0.1, 0.4]], [[0.3, -0.2], [0.25, 0.5]]]},
        "budgets": {"n_max": 16, "cache_bytes": 200000},
        "pressure": {"s": 1.3},
    },
    "spectrum": {
        "system": {"matrices": [[[0.6, 0.3], [0.1, 0.4]], [[0.3, -0.2], [0.25, 0.5]]]},
        "seed": 12345678901234,
        "spectrum": {"horizon": 2000, "trials": 16, "s": [0.5, 1.5], "q_grid": [0.5, 1.0, 1.5, 2.0]},
        "budgets": {"n_max": 13},
    },
}


def test_12_determinism(tmp_path):
    outputs = {}
    with Timer() as t:
        for cmd, cfg in DETERMINISM_CONFIGS.items():
            path = tmp_path / f"{cmd}.json"
            path.write_text(json.dumps(cfg))
            for workers in ("1", "4", "8"):
                for rep in range(2):
                    env = dict(os.environ, PRESSURE_LAB_WORKERS=workers)
                    p = subprocess.run(
                        [sys.executable, "-m", "pressure_lab", cmd, "--config", str(path)],
                        capture_output=True, env=env, check=False,
                    )
                    assert p.returncode == 0, p.stderr.decode()
                    outputs.setdefault(cmd, []).append(p.stdout)
    same = {cmd: len(set(outs)) == 1 for cmd, outs in outputs.items()}
    detail = ", ".join(f"{cmd}: {'identical' if ok else 'DIFFERENT'} over 6 runs" for cmd, ok in same.items())
    assert record(12, "determinism across workers 1/4/8", all(same.values()), detail, t.elapsed, None)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
