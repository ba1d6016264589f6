"""Lyapunov spectra, expected singular value rates and the Legendre spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .levels import Budget
from .linalg import LN2, exterior_power, svf_weights
from .pressure import norm_pressure
from .symbolic import MarkovMeasure, measure_entropy

QR_EVERY = 16
DEFAULT_GAP = 0.05
# a QR diagonal entry this small relative to its block is a structural zero
ZERO_RELATIVE = 1e-300


def trial_generators(seed, trials):
    """Independent generators, one per trial index, derived from a single seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _check_measure(spec, mu):
    if mu.k != spec.k:
        raise ValidationError(f"measure has {mu.k} symbols, system has {spec.k}", "measure")
    if not mu.is_supported_on(spec.sft):
        raise ValidationError("measure gives mass to forbidden transitions", "measure.kernel")
    if not mu.is_ergodic():
        raise ValidationError("measure kernel is reducible on its support (not ergodic)", "measure.kernel")


@dataclass
class LyapunovData:
    """Distinct exponents with multiplicities, plus the raw per-direction rates."""

    exponents: np.ndarray
    multiplicities: np.ndarray
    standard_errors: np.ndarray
    rates: np.ndarray  # all d averaged rates, descending
    trial_rates: np.ndarray = field(repr=False)  # (trials, d)
    gap: float = DEFAULT_GAP
    horizon: int = 0
    trials: int = 0

    @property
    def cumulative(self):
        """``t_r``: number of directions in the first ``r`` groups."""
        return np.cumsum(self.multiplicities)

    @property
    def gamma(self):
        """``Gamma_r = sum_{i<=r} d_i lambda_i`` (``-inf`` once a zero exponent enters)."""
        with np.errstate(invalid="ignore"):
            return np.cumsum(self.multiplicities * self.exponents)

    @property
    def d(self):
        return int(self.multiplicities.sum())

    def to_dict(self):
        return {
            "exponents": self.exponents.tolist(),
            "multiplicities": self.multiplicities.tolist(),
            "standard_errors": self.standard_errors.tolist(),
            "cumulative": self.cumulative.tolist(),
            "gamma": self.gamma.tolist(),
            "rates": self.rates.tolist(),
            "gap": self.gap,
            "horizon": self.horizon,
            "trials": self.trials,
        }


def _qr_rates(spec, orbits):
    """Per-trial log2 growth of the QR diagonal along each orbit, sorted descending."""
    trials, n = orbits.shape
    d = spec.d
    mats = np.asarray(spec.matrices)
    q = np.broadcast_to(np.eye(d), (trials, d, d)).copy()
    logs = np.zeros((trials, d))
    for t in range(n):
        q = np.matmul(mats[orbits[:, t]], q)
        if (t + 1) % QR_EVERY == 0 or t == n - 1:
            q, r = np.linalg.qr(q)
            diag = np.abs(np.diagonal(r, axis1=1, axis2=2))
            scale = np.max(diag, axis=1, keepdims=True)
            diag = np.where(diag <= ZERO_RELATIVE * scale, 0.0, diag)
            with np.errstate(divide="ignore"):
                logs += np.log2(diag)
    return -np.sort(-logs, axis=1)


def _cluster(values, gap):
    """Split descending ``values`` wherever consecutive entries differ by more than ``gap``."""
    groups = [[0]]
    for j in range(1, len(values)):
        a, b = values[j - 1], values[j]
        same = (a == b) or (np.isfinite(a) and np.isfinite(b) and a - b <= gap)
        if same:
            groups[-1].append(j)
        else:
            groups.append([j])
    return groups


def _mean_se(x):
    """Mean and standard error of the mean over trials, with ``-inf`` propagated."""
    if np.any(x == -np.inf):
        return -np.inf, 0.0
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return m, se


def lyapunov_spectrum(spec, mu, n, trials=16, seed=0, gap=DEFAULT_GAP):
    """Lyapunov exponents by QR re-orthonormalization along ``mu``-typical orbits."""
    _check_measure(spec, mu)
    if n < 1 or trials < 1:
        raise ValidationError("horizon and trials must be >= 1", "spectrum")
    orbits = mu.sample_many(n, trial_generators(seed, trials))
    rates = _qr_rates(spec, orbits) * LN2 / n
    groups = _cluster(np.array([_mean_se(rates[:, j])[0] for j in range(spec.d)]), gap)
    exps, mult, ses = [], [], []
    for g in groups:
        m, se = _mean_se(rates[:, g].mean(axis=1))
        exps.append(m)
        mult.append(len(g))
        ses.append(se)
    mean_rates = np.array([_mean_se(rates[:, j])[0] for j in range(spec.d)])
    return LyapunovData(
        np.array(exps), np.array(mult), np.array(ses), mean_rates, rates, gap, n, trials
    )


def lemma_rate(data, s):
    """``Gamma_r + (s - t_r) lambda_{r+1}`` for ``t_r < s <= t_{r+1}``; ``(s/d) Gamma_p`` past ``d``."""
    if s < 0:
        raise ValidationError("s must be >= 0", "s")
    if s == 0:
        return 0.0
    t = data.cumulative
    gam = data.gamma
    if s > t[-1]:
        return s / t[-1] * gam[-1]
    r = int(np.searchsorted(t, s, side="left"))  # t[r-1] < s <= t[r]
    base = gam[r - 1] if r > 0 else 0.0
    t_r = t[r - 1] if r > 0 else 0
    frac = s - t_r
    return float(base + frac * data.exponents[r])


def lemma_rate_trials(data, s):
    """Per-trial values of the lemma expression built from the unclustered QR rates."""
    w = svf_weights(s, data.d)
    with np.errstate(invalid="ignore"):
        return np.where(w > 0, data.trial_rates * w, 0.0).sum(axis=1)


@dataclass
class SvfRate:
    value: float
    standard_error: float
    trial_values: np.ndarray = field(repr=False)
    lemma: float | None = None
    lemma_standard_error: float | None = None

    @property
    def consistent(self):
        """Within three combined standard errors of the lemma value (1e-12 rounding floor)."""
        if self.lemma is None:
            return None
        if self.value == self.lemma:
            return True
        se = math.hypot(self.standard_error, self.lemma_standard_error or 0.0)
        return bool(abs(self.value - self.lemma) <= 3 * se + 1e-12)

    def to_dict(self):
        return {
            "value": self.value,
            "standard_error": self.standard_error,
            "lemma": self.lemma,
            "lemma_standard_error": self.lemma_standard_error,
            "consistent": self.consistent,
        }


def _log2_norm_trials(ext, orbits):
    """log2 of ``||B_{w_n} ... B_{w_1}||`` per orbit with power-of-two rescaling."""
    trials, n = orbits.shape
    m = ext.shape[1]
    p = np.broadcast_to(np.eye(m), (trials, m, m)).copy()
    exp2 = np.zeros(trials)
    for t in range(n):
        p = np.matmul(ext[orbits[:, t]], p)
        if (t + 1) % QR_EVERY == 0 or t == n - 1:
            top = np.max(np.abs(p), axis=(1, 2))
            zero = top == 0
            _, e = np.frexp(np.where(zero, 1.0, top))
            p = np.ldexp(p, -e[:, None, None])
            exp2 = np.where(zero, -np.inf, exp2 + e)
    norms = np.linalg.norm(p, ord=2, axis=(1, 2))
    with np.errstate(divide="ignore"):
        return np.where(norms > 0, np.log2(norms) + exp2, -np.inf)


def expected_svf_rate(spec, mu, s, n, trials=16, seed=0, lemma=True, gap=DEFAULT_GAP):
    """Monte Carlo ``(1/n) E log phi^s(A(x, n))``.

    Each ``phi^s`` is evaluated through the exterior-power identity
    ``phi^s = ||A^{wedge m}||^(1 - theta) ||A^{wedge (m+1)}||^theta``
    (``m = floor(s)``, ``theta = s - m``), accumulating the exterior products
    directly so that small singular values never have to be resolved inside
    a badly conditioned product. With ``lemma=True`` the same orbits feed
    :func:`lyapunov_spectrum` and the lemma expression is attached.
    """
    _check_measure(spec, mu)
    d = spec.d
    if s < 0:
        raise ValidationError("s must be >= 0", "s")
    orbits = mu.sample_many(n, trial_generators(seed, trials))
    if s > d:
        parts = [(d, s / d)]
    else:
        m = int(math.floor(s))
        theta = s - m
        parts = [(m, 1.0 - theta), (m + 1, theta)] if m < d else [(d, 1.0)]
    vals = np.zeros(trials)
    for j, c in parts:
        if j == 0 or c == 0:
            continue
        ext = np.stack([exterior_power(a, j) for a in spec.matrices])
        l2 = _log2_norm_trials(ext, orbits)
        vals = vals + c * l2
    vals = vals * LN2 / n
    value, se = _mean_se(vals)
    out = SvfRate(value, se, vals)
    if lemma:
        data = lyapunov_spectrum(spec, mu, n, trials, seed, gap)
        out.lemma = lemma_rate(data, s)
        out.lemma_standard_error = _mean_se(lemma_rate_trials(data, s))[1]
    return out


# ---------------------------------------------------------------------------
# Legendre spectrum


@dataclass(frozen=True)
class LegendrePoint:
    q: float
    alpha: float
    h: float
    m: float
    kink: bool = False


@dataclass
class LegendreSpectrum:
    points: list
    concave: bool
    max_h: float
    log_k: float

    @property
    def admissible(self):
        return all(p.h <= self.log_k + 1e-9 for p in self.points)

    def to_dict(self):
        return {
            "points": [
                {"q": p.q, "alpha": p.alpha, "h": p.h, "M": p.m, "kink": p.kink} for p in self.points
            ],
            "concave": self.concave,
            "admissible": self.admissible,
            "max_h": self.max_h,
        }


def legendre_spectrum(spec, q_grid, n_max=12, budget=None, concavity_slack=1e-6):
    """``h = M(q) - alpha q`` with ``alpha`` a finite-difference derivative of ``M``.

    Derivatives are second-order central differences, one-sided at the ends.
    Grid points whose second difference stands far above the typical value are
    flagged as near-kinks, where only one-sided quotients are reliable.
    """
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or q.size < 3:
        raise ValidationError("q grid needs at least 3 points", "spectrum.q_grid")
    if np.any(q <= 0) or np.any(np.diff(q) <= 0):
        raise ValidationError("q grid must be positive and strictly increasing", "spectrum.q_grid")
    budget = budget or Budget()
    m = np.array([norm_pressure(spec, float(x), n_max, budget).point for x in q])
    if not np.all(np.isfinite(m)):
        raise ValidationError("norm pressure is -inf on the grid (all products vanish)", "system")
    alpha = np.gradient(m, q, edge_order=2)
    h = m - alpha * q
    kinks = _kinks(q, m)
    pts = [LegendrePoint(float(a), float(b), float(c), float(e), bool(k)) for a, b, c, e, k in zip(q, alpha, h, m, kinks)]
    return LegendreSpectrum(pts, _concave(alpha, h, concavity_slack), float(np.max(h)), math.log(spec.k))


def _kinks(q, m, factor=50.0):
    d2 = np.zeros_like(m)
    d2[1:-1] = np.abs(np.diff(m, 2)) / np.diff(q)[:-1] ** 2
    typical = np.median(d2[1:-1])
    return d2 > factor * typical + 1e-6


def _concave(alpha, h, slack):
    order = np.argsort(alpha, kind="stable")
    a, y = alpha[order], h[order]
    da = np.diff(a)
    keep = np.concatenate([[True], da > 1e-12])
    a, y = a[keep], y[keep]
    if a.size < 3:
        return True
    slopes = np.diff(y) / np.diff(a)
    return bool(np.all(np.diff(slopes) <= slack * (1 + np.abs(slopes[1:]))))


# ---------------------------------------------------------------------------
# scalar equilibrium states


@dataclass
class EquilibriumReport:
    measure: MarkovMeasure
    pressure: float
    entropy: float
    energy: float

    @property
    def residual(self):
        return abs(self.entropy + self.energy - self.pressure)

    def to_dict(self):
        return {
            "p": self.measure.initial.tolist(),
            "pressure": self.pressure,
            "entropy": self.entropy,
            "energy": self.energy,
            "residual": self.residual,
        }


def _scalar_weights(spec, s):
    if spec.d != 1 or not spec.sft.is_full:
        raise ValidationError("equilibrium states are closed-form only for d = 1 on the full shift", "system")
    r = np.abs(spec.matrices[:, 0, 0])
    if np.any(r == 0) and s == 0:
        r = np.where(r == 0, 1.0, r)
    with np.errstate(divide="ignore"):
        return spec.potential + s * np.log(r)


def energy(spec, s, p):
    """``sum_i p_i (g(i) + s log |r_i|)`` with zero-mass symbols ignored."""
    x = _scalar_weights(spec, s)
    p = np.asarray(p, dtype=float)
    return float(np.sum(np.where(p > 0, p * x, 0.0)))


def variational_value(spec, s, p):
    """Entropy plus energy of the Bernoulli measure ``p``."""
    return measure_entropy(MarkovMeasure.bernoulli(p)) + energy(spec, s, p)


def equilibrium_scalar(spec, s):
    """The Bernoulli equilibrium state ``p_i ~ e^{g(i)} |r_i|^s`` and its variational data."""
    x = _scalar_weights(spec, s)
    top = np.max(x)
    if top == -np.inf:
        raise ValidationError("all weights vanish; no equilibrium state", "system")
    w = np.exp(x - top)
    p = w / w.sum()
    pressure = float(top + math.log(w.sum()))
    mu = MarkovMeasure.bernoulli(p)
    return EquilibriumReport(mu, pressure, measure_entropy(mu), energy(spec, s, p))
