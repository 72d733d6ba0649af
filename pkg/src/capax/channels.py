"""Conditional output densities p(y|x) and their envelopes.

Every channel carries the two envelopes ``q <= p(y|x) <= Q <= K`` that hold
uniformly over inputs in [-A, A]. They drive domain truncation for the
information integrals and are checked by :mod:`capax.conditions`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameter, NormalizationFailure
from .quad import DEFAULT_SPEC, Interval, QuadratureSpec, integrate, truncate_domain

LOG2E = 1.0 / math.log(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
# log-weight clamp for envelopes that underflow or vanish
_TINY = 1e-300

__all__ = [
    "ChannelModel",
    "GaussianAdditiveSpec",
    "GenericAdditiveSpec",
    "RayleighSpec",
    "gaussian_channel",
    "additive_channel",
    "rayleigh_channel",
    "laplace_noise",
    "uniform_noise",
    "tabulated_noise",
    "degenerate_channel",
]


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """A memoryless real scalar channel restricted to inputs in [-peak, peak].

    ``eval`` and ``logpdf`` broadcast over ``y`` and ``x`` arrays; ``logpdf``
    is the natural log of ``eval`` and may be ``None``.
    """

    name: str
    eval: Callable
    output_domain: Interval
    peak: float
    envelope_q: Callable
    envelope_Q: Callable
    envelope_K: float
    closed_form_d: Optional[Callable] = None
    logpdf: Optional[Callable] = None
    log_envelope_q: Optional[Callable] = None
    sup_density: Optional[Callable] = None
    breakpoints: Optional[Callable] = None
    additive: bool = False
    analytic: bool = False
    symmetric: bool = False
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def log_density(self, y, x):
        """Natural log of p(y|x); ``-inf`` where the density vanishes."""
        if self.logpdf is not None:
            return self.logpdf(y, x)
        with np.errstate(divide="ignore"):
            return np.log(self.eval(y, x))

    def log_q(self, y):
        """Natural log of the lower envelope, exact where q itself underflows."""
        if self.log_envelope_q is not None:
            return np.asarray(self.log_envelope_q(y), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.envelope_q(y), dtype=float))

    def kinks(self, xs):
        """Output abscissae where the integrands for inputs ``xs`` are not smooth."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        pts = [xs] if self.additive else []
        if self.breakpoints is not None:
            pts.append(np.asarray(self.breakpoints(xs), dtype=float).ravel())
        if not pts:
            return np.empty(0)
        return np.unique(np.concatenate(pts))

    def log_weight_envelope(self, y):
        """Dominates |p(y|x) log2 g(y)| for any g between q and K."""
        sup = self.sup_density if self.sup_density is not None else self.envelope_Q
        log2q = np.maximum(self.log_q(y), math.log(_TINY)) * LOG2E
        bound = np.maximum(np.abs(log2q), abs(math.log2(self.envelope_K)))
        return sup(y) * (1.0 + bound)

    def truncated_domain(self, spec: QuadratureSpec = DEFAULT_SPEC) -> Interval:
        key = ("trunc", spec.tail_tol)
        if key not in self._cache:
            self._cache[key] = truncate_domain(
                self.log_weight_envelope, self.output_domain, spec.tail_tol, spec)
        return self._cache[key]


def _check_peak(peak):
    if not (isinstance(peak, (int, float)) and math.isfinite(peak) and peak > 0):
        raise InvalidParameter(f"peak must be a positive finite number, got {peak!r}")
    return float(peak)


# ---------------------------------------------------------------------------
# Gaussian


@dataclass(frozen=True)
class GaussianAdditiveSpec:
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidParameter(f"sigma must be positive, got {self.sigma!r}")


def _normal_pdf(dist, sigma):
    return np.exp(-0.5 * (dist / sigma) ** 2) / (sigma * _SQRT2PI)


def gaussian_channel(spec: GaussianAdditiveSpec, peak: float) -> ChannelModel:
    A = _check_peak(peak)
    sigma = float(spec.sigma)
    if not sigma > 0:
        raise InvalidParameter("sigma must be positive")
    entropy = 0.5 * math.log2(2 * math.pi * math.e * sigma ** 2)

    def density(y, x):
        return _normal_pdf(np.subtract(y, x), sigma)

    def logpdf(y, x):
        d = np.subtract(y, x) / sigma
        return -0.5 * d * d - math.log(sigma * _SQRT2PI)

    def Q(y):
        return _normal_pdf(np.maximum(np.abs(y) - A, 0.0), sigma)

    def q(y):
        return _normal_pdf(np.abs(y) + A, sigma)

    def log_q(y):
        return logpdf(np.abs(y) + A, 0.0)

    return ChannelModel(
        name="gaussian",
        eval=density,
        logpdf=logpdf,
        output_domain=Interval(-math.inf, math.inf),
        peak=A,
        envelope_q=q,
        log_envelope_q=log_q,
        envelope_Q=Q,
        envelope_K=float(_normal_pdf(0.0, sigma)),
        closed_form_d=lambda x: np.full(np.shape(x), entropy) if np.ndim(x) else entropy,
        additive=True,
        analytic=True,
        symmetric=True,
        params={"kind": "gaussian", "sigma": sigma, "peak": A},
    )


# ---------------------------------------------------------------------------
# Generic additive


@dataclass(frozen=True)
class GenericAdditiveSpec:
    """Noise law for Y = X + N plus envelopes (in output coordinates y).

    ``breakpoints`` are noise abscissae where the density has kinks or jumps.
    """

    noise_density: Callable
    noise_domain: Interval
    noise_envelopes: tuple
    noise_logpdf: Optional[Callable] = None
    breakpoints: tuple = ()
    closed_form_d: Optional[float] = None
    log_q: Optional[Callable] = None
    symmetric: bool = False
    name: str = "additive"
    params: dict = field(default_factory=dict)


def additive_channel(spec: GenericAdditiveSpec, peak: float,
                     norm_tol: float = 1e-8) -> ChannelModel:
    A = _check_peak(peak)
    try:
        q, Q, K = spec.noise_envelopes
    except (TypeError, ValueError):
        raise InvalidParameter("noise_envelopes must be a (q, Q, K) triple") from None
    if q is None or Q is None or K is None:
        raise InvalidParameter("additive channels need q, Q and K envelopes")
    K = float(K)
    if not (K > 0 and math.isfinite(K)):
        raise InvalidParameter("envelope K must be positive and finite")

    noise = spec.noise_density
    dom = spec.noise_domain
    kinks = np.asarray(spec.breakpoints, dtype=float)
    mass, _ = integrate(lambda n: noise(n), dom, DEFAULT_SPEC, points=kinks,
                        envelope=None if dom.is_finite else noise)
    if not abs(mass - 1.0) <= norm_tol:
        raise NormalizationFailure(f"noise density integrates to {mass!r}, not 1")

    def density(y, x):
        return noise(np.subtract(y, x))

    logpdf = None
    if spec.noise_logpdf is not None:
        nl = spec.noise_logpdf

        def logpdf(y, x):
            return nl(np.subtract(y, x))

    closed = None
    if spec.closed_form_d is not None:
        dval = float(spec.closed_form_d)

        def closed(x):
            return np.full(np.shape(x), dval) if np.ndim(x) else dval

    def breakpoints(xs):
        if kinks.size == 0:
            return np.empty(0)
        return (xs[:, None] + kinks[None, :]).ravel()

    out = Interval(dom.lo - A, dom.hi + A)
    return ChannelModel(
        name=spec.name,
        eval=density,
        logpdf=logpdf,
        output_domain=out,
        peak=A,
        envelope_q=q,
        log_envelope_q=spec.log_q,
        envelope_Q=Q,
        envelope_K=K,
        closed_form_d=closed,
        breakpoints=breakpoints,
        additive=True,
        analytic=False,
        symmetric=spec.symmetric,
        params={"kind": "additive", "peak": A, **spec.params},
    )


def laplace_noise(scale: float, peak: float) -> GenericAdditiveSpec:
    """Laplace noise (1/2b) exp(-|n|/b) with its closed-form envelopes."""
    b = float(scale)
    if not b > 0:
        raise InvalidParameter("Laplace scale must be positive")
    A = _check_peak(peak)

    def pdf(n):
        return np.exp(-np.abs(n) / b) / (2 * b)

    def logpdf(n):
        return -np.abs(n) / b - math.log(2 * b)

    return GenericAdditiveSpec(
        noise_density=pdf,
        noise_logpdf=logpdf,
        noise_domain=Interval(-math.inf, math.inf),
        noise_envelopes=(lambda y: pdf(np.abs(y) + A),
                         lambda y: pdf(np.maximum(np.abs(y) - A, 0.0)),
                         1.0 / (2 * b)),
        breakpoints=(0.0,),
        closed_form_d=math.log2(2 * math.e * b),
        log_q=lambda y: logpdf(np.abs(y) + A),
        symmetric=True,
        name="laplace",
        params={"noise": "laplace", "scale": b},
    )


def uniform_noise(width: float, peak: float) -> GenericAdditiveSpec:
    """Uniform noise on [-width/2, width/2]."""
    w = float(width)
    if not w > 0:
        raise InvalidParameter("uniform width must be positive")
    A = _check_peak(peak)
    h = 0.5 * w

    def pdf(n):
        return np.where(np.abs(n) <= h, 1.0 / w, 0.0)

    return GenericAdditiveSpec(
        noise_density=pdf,
        noise_domain=Interval(-h, h),
        noise_envelopes=(lambda y: np.where(np.abs(y) <= h - A, 1.0 / w, 0.0),
                         lambda y: np.where(np.abs(y) <= h + A, 1.0 / w, 0.0),
                         1.0 / w),
        breakpoints=(-h, h),
        closed_form_d=math.log2(w),
        symmetric=True,
        name="uniform",
        params={"noise": "uniform", "width": w},
    )


def tabulated_noise(y, density, env_y=None, q=None, Q=None, K=None) -> GenericAdditiveSpec:
    """Noise density given as (y, density) pairs, linearly interpolated.

    Envelope tables share the abscissae ``env_y`` and are interpolated the
    same way; outside a table every function is zero.
    """
    ty = np.asarray(y, dtype=float)
    td = np.asarray(density, dtype=float)
    if ty.ndim != 1 or ty.shape != td.shape or ty.size < 2:
        raise InvalidParameter("noise table needs matching 1-D y and density arrays")
    if np.any(np.diff(ty) <= 0):
        raise InvalidParameter("noise table abscissae must be strictly increasing")
    if np.any(td < 0) or not np.all(np.isfinite(td)):
        raise InvalidParameter("noise table densities must be finite and nonnegative")

    def pdf(n):
        return np.interp(n, ty, td, left=0.0, right=0.0)

    envelopes = (None, None, None)
    if env_y is not None and q is not None and Q is not None:
        ey = np.asarray(env_y, dtype=float)
        eq = np.asarray(q, dtype=float)
        eQ = np.asarray(Q, dtype=float)
        if not (ey.shape == eq.shape == eQ.shape) or ey.ndim != 1:
            raise InvalidParameter("envelope tables need matching 1-D arrays")
        if np.any(np.diff(ey) <= 0):
            raise InvalidParameter("envelope abscissae must be strictly increasing")
        Kval = float(np.max(eQ)) if K is None else float(K)
        envelopes = (lambda v: np.interp(v, ey, eq, left=0.0, right=0.0),
                     lambda v: np.interp(v, ey, eQ, left=0.0, right=0.0),
                     Kval)
    return GenericAdditiveSpec(
        noise_density=pdf,
        noise_domain=Interval(float(ty[0]), float(ty[-1])),
        noise_envelopes=envelopes,
        breakpoints=tuple(ty),
        name="tabulated",
        params={"noise": "tabulated"},
    )


# ---------------------------------------------------------------------------
# Rayleigh fading


@dataclass(frozen=True)
class RayleighSpec:
    peak: float = 1.0
    c: float = 3.0
    gamma: Optional[float] = None

    def resolved_gamma(self) -> float:
        from .conditions import gamma_bound

        bound = gamma_bound(self.peak, self.c)
        gamma = 0.9 * bound if self.gamma is None else float(self.gamma)
        if not 0 < gamma < bound:
            raise InvalidParameter(
                f"gamma={gamma!r} outside the admissible range (0, {bound!r})")
        return gamma


def _exp_density(y, s):
    return s * np.exp(-y * s)


def rayleigh_channel(spec: RayleighSpec) -> ChannelModel:
    """Normalized Rayleigh fading law p(y|x) = s exp(-y s), s = 1/(1+x^2), y >= 0."""
    from .conditions import rayleigh_envelopes

    A = _check_peak(spec.peak)
    gamma = spec.resolved_gamma()
    q, Q, _, y2 = rayleigh_envelopes(A, spec.c, gamma)
    s_min = 1.0 / (1.0 + A ** 2)

    def log_q(y):
        y = np.asarray(y, dtype=float)
        return np.where(y <= y2, math.log(s_min) - y * s_min, -y)

    def density(y, x):
        y = np.asarray(y, dtype=float)
        s = 1.0 / (1.0 + np.square(x))
        return np.where(y >= 0, _exp_density(np.maximum(y, 0.0), s), 0.0)

    def logpdf(y, x):
        s = 1.0 / (1.0 + np.square(x))
        with np.errstate(divide="ignore"):
            return np.where(np.asarray(y) >= 0, np.log(s) - np.asarray(y) * s, -np.inf)

    def sup_density(y):
        # max over s in [s_min, 1] of s exp(-y s); interior optimum at s = 1/y
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        with np.errstate(divide="ignore"):
            inner = 1.0 / (math.e * y)
        return np.where(y < 1.0, np.exp(-y),
                        np.where(y <= 1.0 + A ** 2, inner, _exp_density(y, s_min)))

    def closed_d(x):
        return np.log2(1.0 + np.square(x)) + LOG2E

    return ChannelModel(
        name="rayleigh",
        eval=density,
        logpdf=logpdf,
        output_domain=Interval(0.0, math.inf),
        peak=A,
        envelope_q=q,
        log_envelope_q=log_q,
        envelope_Q=Q,
        envelope_K=1.0,
        closed_form_d=closed_d,
        sup_density=sup_density,
        breakpoints=None,
        additive=False,
        analytic=True,
        symmetric=True,
        params={"kind": "rayleigh", "peak": A, "c": float(spec.c), "gamma": gamma},
    )


def degenerate_channel(peak: float = 1.0) -> ChannelModel:
    """Output independent of the input (standard normal); capacity zero."""
    A = _check_peak(peak)

    def density(y, x):
        return np.broadcast_to(_normal_pdf(np.asarray(y, dtype=float), 1.0),
                               np.broadcast_shapes(np.shape(y), np.shape(x)))

    def env(y):
        return _normal_pdf(np.asarray(y, dtype=float), 1.0)

    return ChannelModel(
        name="degenerate",
        eval=density,
        output_domain=Interval(-math.inf, math.inf),
        peak=A,
        envelope_q=env,
        envelope_Q=env,
        envelope_K=float(_normal_pdf(0.0, 1.0)),
        closed_form_d=None,
        symmetric=True,
        params={"kind": "degenerate", "peak": A},
    )
