"""r-cones, sampled cone-mapping certificates and block-diagonal hyperbolic classes.

The r-cone around a unit vector ``v`` is ``C(v, r) = {w : (v|w) >= (1 - r)|w|}``,
a circular cone of half-angle ``arccos(1 - r)``. Cone-mapping certificates are
sampled, not exhaustive: a linear map sends a convex cone onto a convex cone,
so it is tested on deterministic quasi-uniform directions of the boundary of
the source cone plus its axis, and the smallest slack is reported as the margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import ValidationError
from .linalg import as_matrix, exterior_power, singular_values

CONTAIN_SLACK = 1e-14
MIN_SAMPLES = 1000
LEMMA_SAMPLES = 10_000
# image half-cone and source half-cone of the contraction lemma
SOURCE_R = 0.5
TARGET_R = 0.2
CONTRACTION_FACTOR = 18.0


@dataclass(frozen=True, eq=False)
class Cone:
    """``C(axis, aperture)``; the axis is normalized on construction."""

    axis: np.ndarray
    aperture: float

    def __post_init__(self):
        v = np.array(self.axis, dtype=float).reshape(-1)
        n = np.linalg.norm(v)
        if not np.isfinite(n) or n == 0:
            raise ValidationError("cone axis must be a nonzero finite vector", "cone.axis")
        if not 0 < self.aperture < 1:
            raise ValidationError(f"aperture must lie in (0, 1), got {self.aperture}", "cone.aperture")
        v = v / n
        v.setflags(write=False)
        object.__setattr__(self, "axis", v)
        object.__setattr__(self, "aperture", float(self.aperture))

    @property
    def dim(self):
        return self.axis.shape[0]

    @property
    def half_angle(self):
        return math.acos(1.0 - self.aperture)

    def slack(self, w, symmetric=False):
        """``(v|w)/|w| - (1 - r)`` per row of ``w``; zero vectors get slack 0."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        n = np.linalg.norm(w, axis=1)
        dot = w @ self.axis
        if symmetric:
            dot = np.abs(dot)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = dot / n - (1.0 - self.aperture)
        return np.where(n > 0, out, 0.0)


def cone_contains(c, w, symmetric=False):
    """``w in C(v, r)`` (or in ``C u -C`` when ``symmetric``); the zero vector is contained."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != c.dim:
        raise ValidationError(f"vector has dimension {w.shape[0]}, cone has {c.dim}", "w")
    n = float(np.linalg.norm(w))
    if n == 0:
        return True
    dot = float(w @ c.axis)
    if symmetric:
        dot = abs(dot)
    return dot >= (1.0 - c.aperture) * n - CONTAIN_SLACK * n


def boundary_directions(c, samples):
    """Deterministic unit directions covering the cone: the axis, then boundary points.

    In the plane the boundary is two rays, so the whole sector is swept by
    angle instead. In higher dimension the boundary circle directions come
    from a Halton sequence mapped to the sphere of ``v^perp``.
    """
    v = c.axis
    dim = c.dim
    theta = c.half_angle
    if dim == 1:
        return v[None, :].copy()
    perp = null_space(v[None, :])  # (dim, dim - 1), orthonormal
    if dim == 2:
        ang = np.linspace(-theta, theta, samples)
        dirs = np.cos(ang)[:, None] * v[None, :] + np.sin(ang)[:, None] * perp[:, 0][None, :]
        return np.vstack([v, dirs])
    halton = qmc.Halton(d=dim - 1, scramble=False)
    halton.fast_forward(1)  # the first point is the origin of the cube
    g = ndtri(halton.random(samples))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    dirs = math.cos(theta) * v[None, :] + math.sin(theta) * (g @ perp.T)
    return np.vstack([v, dirs])


@dataclass
class ConeCertificate:
    """Sampled evidence that ``A K`` lies in ``K2`` (or ``K2 u -K2``)."""

    holds: bool
    margin: float
    samples: int
    symmetric: bool
    worst_direction: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {
            "holds": self.holds,
            "margin": self.margin,
            "samples": self.samples,
            "symmetric": self.symmetric,
            "exhaustive": False,
        }


def maps_cone_into(a, k1, k2, samples=MIN_SAMPLES, symmetric=True):
    """Sampled certificate for ``A C1 subset C2 (u -C2)``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape != (k2.dim, k1.dim):
        raise ValidationError(f"matrix shape {a.shape} does not match cones ({k1.dim} -> {k2.dim})", "A")
    if samples < MIN_SAMPLES:
        raise ValidationError(f"need at least {MIN_SAMPLES} samples, got {samples}", "samples")
    dirs = boundary_directions(k1, samples)
    img = dirs @ a.T
    sl = k2.slack(img, symmetric)
    i = int(np.argmin(sl))
    margin = float(sl[i])
    return ConeCertificate(bool(margin >= -CONTAIN_SLACK), margin, dirs.shape[0], symmetric, dirs[i])


def cone_constant(k1, k2):
    """An explicit lower bound for the almost-multiplicativity constant ``c(K, K')``.

    With half-angles ``theta > theta'`` and axis separation ``phi``, every unit
    ``w in K'`` has a ball of radius ``rho = sin(theta - phi - theta')`` inside
    ``K``. For ``A`` mapping ``K`` into one of ``+-K'``, ``|A x| <= |A w| / (rho cos theta')``
    for unit ``x``, so ``c = (rho cos theta')^2``. Returns 0 when ``K'`` does
    not sit inside ``K``.
    """
    u, v = k1.axis, k2.axis
    if u @ v < 0:
        v = -v
    # half-angle formula; acos of a near-unit dot product loses half the digits
    phi = 2.0 * math.atan2(float(np.linalg.norm(u - v)), float(np.linalg.norm(u + v)))
    rho = math.sin(k1.half_angle - phi - k2.half_angle)
    if rho <= 0:
        return 0.0
    return (rho * math.cos(k2.half_angle)) ** 2


def almost_mult_constant(pairs, k1, k2, samples=MIN_SAMPLES):
    """``min ||A1 A2|| / (||A1|| ||A2||)`` over pairs whose members all map ``K`` into ``+-K'``."""
    pairs = [(np.asarray(x, dtype=float), np.asarray(y, dtype=float)) for x, y in pairs]
    if not pairs:
        raise ValidationError("no pairs given", "pairs")
    for i, pair in enumerate(pairs):
        for m in pair:
            if not maps_cone_into(m, k1, k2, samples).holds:
                raise ValidationError(f"pair {i} has a matrix that fails the cone condition", "pairs")
    a1 = np.stack([p[0] for p in pairs])
    a2 = np.stack([p[1] for p in pairs])
    num = np.linalg.norm(a1 @ a2, ord=2, axis=(1, 2))
    den = np.linalg.norm(a1, ord=2, axis=(1, 2)) * np.linalg.norm(a2, ord=2, axis=(1, 2))
    return float(np.min(num / den))


def conformal_check(a, lam, eps, rel=1e-12):
    """Whether every singular value of ``a`` lies in ``[exp(lam - eps), exp(lam + eps)]``."""
    al = singular_values(as_matrix(a)).alphas
    return bool(al[-1] >= math.exp(lam - eps) * (1 - rel) and al[0] <= math.exp(lam + eps) * (1 + rel))


# ---------------------------------------------------------------------------
# hyperbolic classes


@dataclass(frozen=True)
class HyperbolicClassSpec:
    """Block sizes with conformality levels ``tau_i`` and a common tolerance ``eps``."""

    blocks: tuple
    eps: float

    def __post_init__(self):
        blocks = tuple((int(d), float(t)) for d, t in self.blocks)
        if not blocks or any(d < 1 for d, _ in blocks):
            raise ValidationError("blocks need positive sizes", "blocks")
        if self.eps < 0:
            raise ValidationError("eps must be >= 0", "eps")
        for (_, t1), (_, t2) in zip(blocks, blocks[1:]):
            if not t1 - self.eps > t2 + self.eps:
                raise ValidationError(f"levels {t1} and {t2} are not separated by 2*eps", "blocks")
        object.__setattr__(self, "blocks", blocks)

    @property
    def d(self):
        return sum(b for b, _ in self.blocks)

    @property
    def cumulative(self):
        return [int(x) for x in np.cumsum([b for b, _ in self.blocks])]

    def slices(self):
        out, start = [], 0
        for b, _ in self.blocks:
            out.append(slice(start, start + b))
            start += b
        return out

    def corollary_constant(self):
        """``sqrt(C(d, floor(d/2))) max_r exp(-tau_r + tau_{r+1} + 2 d eps)``."""
        d = self.d
        taus = [t for _, t in self.blocks]
        if len(taus) < 2:
            return 0.0
        worst = max(-a + b for a, b in zip(taus, taus[1:]))
        return math.sqrt(math.comb(d, d // 2)) * math.exp(worst + 2 * d * self.eps)


def _check_block_diagonal(h, spec):
    h = as_matrix(h, "H")
    if h.shape[0] != spec.d:
        raise ValidationError(f"H has dimension {h.shape[0]}, blocks sum to {spec.d}", "H")
    mask = np.ones(h.shape, dtype=bool)
    for sl in spec.slices():
        mask[sl, sl] = False
    if np.any(np.abs(h[mask]) > 1e-12 * max(1.0, float(np.max(np.abs(h))))):
        raise ValidationError("H is not block-diagonal for the given block sizes", "H")
    return h


def in_hyperbolic_class(h, spec):
    h = _check_block_diagonal(h, spec)
    return all(conformal_check(h[sl, sl], t, spec.eps) for sl, (_, t) in zip(spec.slices(), spec.blocks))


@dataclass
class BandReport:
    holds: bool
    alphas: np.ndarray
    bands: list
    offending: list

    def to_dict(self):
        return {
            "holds": self.holds,
            "alphas": self.alphas.tolist(),
            "bands": [list(b) for b in self.bands],
            "offending": list(self.offending),
        }


def hyperbolic_sv_check(h, spec, rel=1e-12):
    """Each ``alpha_j(H)`` lies in ``[exp(tau_r - eps), exp(tau_r + eps)]`` for its block ``r``."""
    h = _check_block_diagonal(h, spec)
    al = singular_values(h).alphas
    bands = []
    for b, t in spec.blocks:
        bands += [(math.exp(t - spec.eps), math.exp(t + spec.eps))] * b
    bad = [j for j, (x, (lo, hi)) in enumerate(zip(al, bands)) if not lo * (1 - rel) <= x <= hi * (1 + rel)]
    return BandReport(not bad, al, bands, bad)


@dataclass
class WedgeReport:
    t: int
    eigenvalue: float
    eigenvalue_bound: float
    block_det_product: float
    parallel: bool
    max_other_norm: float
    other_bound: float

    @property
    def holds(self):
        top = abs(self.eigenvalue) >= self.eigenvalue_bound * (1 - 1e-12)
        rest = self.max_other_norm <= self.other_bound * (1 + 1e-12)
        return bool(self.parallel and top and rest)

    def to_dict(self):
        return {
            "t": self.t,
            "eigenvalue": self.eigenvalue,
            "eigenvalue_bound": self.eigenvalue_bound,
            "block_det_product": self.block_det_product,
            "parallel": self.parallel,
            "max_other_norm": self.max_other_norm,
            "other_bound": self.other_bound,
            "holds": self.holds,
        }


def wedge_eigen_check(h, spec, r):
    """The ``t_r``-th exterior power fixes the line of ``e_1 ^ ... ^ e_t`` and shrinks the rest."""
    h = _check_block_diagonal(h, spec)
    p = len(spec.blocks)
    if not 1 <= r <= p:
        raise ValidationError(f"r must lie in 1..{p}", "r")
    t = spec.cumulative[r - 1]
    taus = [x for _, x in spec.blocks]
    gam = sum(b * x for b, x in spec.blocks[:r])
    ext = exterior_power(h, t)
    img = ext[:, 0]
    scale = max(float(np.linalg.norm(img)), np.finfo(float).tiny)
    parallel = bool(np.all(np.abs(img[1:]) <= 1e-12 * scale))
    others = np.linalg.norm(ext[:, 1:], axis=0)
    if r < p:
        other_bound = math.exp(gam + taus[r] - taus[r - 1] + t * spec.eps)
    else:
        other_bound = math.inf
    dets = math.prod(float(np.linalg.det(h[sl, sl])) for sl in spec.slices()[:r])
    return WedgeReport(
        t,
        float(img[0]),
        math.exp(gam - t * spec.eps),
        dets,
        parallel,
        float(others.max()) if others.size else 0.0,
        other_bound,
    )


@dataclass
class ContractionReport:
    eigenvalue: float
    restricted_norm: float
    hypothesis: bool
    certificate: ConeCertificate | None

    @property
    def holds(self):
        return bool(self.hypothesis and self.certificate is not None and self.certificate.holds)

    def to_dict(self):
        return {
            "eigenvalue": self.eigenvalue,
            "restricted_norm": self.restricted_norm,
            "ratio": self.restricted_norm / self.eigenvalue,
            "hypothesis": self.hypothesis,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "holds": self.holds,
        }


def restricted_norm(a, v):
    """``||A restricted to v^perp||``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    perp = null_space(v[None, :])
    if perp.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(a @ perp, ord=2))


def cone_contraction_check(a, v, lam=None, samples=LEMMA_SAMPLES):
    """If ``Av = lam v`` and ``||A|_{v^perp}|| < lam/18``, certify ``A C(v,1/2) subset C(v,1/5)``."""
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != v.shape[0]:
        raise ValidationError("A must be square and match v", "A")
    nv = float(np.linalg.norm(v))
    if nv == 0:
        raise ValidationError("v must be nonzero", "v")
    v = v / nv
    av = a @ v
    if lam is None:
        lam = float(v @ av)
    if not lam > 0:
        raise ValidationError(f"eigenvalue must be positive, got {lam}", "lam")
    na = float(np.linalg.norm(a, ord=2))
    if np.linalg.norm(av - lam * v) > 1e-10 * max(lam, na):
        raise ValidationError("v is not an eigenvector of A for the given eigenvalue", "v")
    rn = restricted_norm(a, v)
    hyp = rn < lam / CONTRACTION_FACTOR
    cert = None
    if hyp:
        cert = maps_cone_into(a, Cone(v, SOURCE_R), Cone(v, TARGET_R), samples, symmetric=False)
    return ContractionReport(float(lam), rn, bool(hyp), cert)


@dataclass
class BlockConeReport:
    constant: float
    hypothesis: bool
    in_class: bool
    certificates: list

    @property
    def holds(self):
        return bool(self.hypothesis and self.in_class and all(c.holds for _, c in self.certificates))

    def to_dict(self):
        return {
            "constant": self.constant,
            "threshold": 1.0 / CONTRACTION_FACTOR,
            "hypothesis": self.hypothesis,
            "in_class": self.in_class,
            "certificates": [{"t": t, **c.to_dict()} for t, c in self.certificates],
            "holds": self.holds,
        }


def block_diag_cone_check(h, spec, samples=LEMMA_SAMPLES):
    """Certify ``H^{wedge t_r} C(e^{wedge t_r}, 1/2) subset +-C(e^{wedge t_r}, 1/5)`` for ``r < p``.

    The quantitative hypothesis is evaluated first; when it fails the report
    says so and no certificates are sampled.
    """
    h = _check_block_diagonal(h, spec)
    const = spec.corollary_constant()
    hyp = const < 1.0 / CONTRACTION_FACTOR
    member = in_hyperbolic_class(h, spec)
    certs = []
    if hyp and member:
        for t in spec.cumulative[:-1]:
            ext = exterior_power(h, t)
            e0 = np.zeros(ext.shape[0])
            e0[0] = 1.0
            certs.append((int(t), maps_cone_into(ext, Cone(e0, SOURCE_R), Cone(e0, TARGET_R), samples)))
    return BlockConeReport(const, bool(hyp), bool(member), certs)

