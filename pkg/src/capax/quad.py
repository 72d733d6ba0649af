"""Adaptive Gauss-Kronrod quadrature on finite and semi-infinite intervals.

Integrands are vectorized: ``f`` receives a 1-D array of abscissae and returns
either an array of the same length or a 2-D array ``(len(y), m)`` holding
``m`` integrands that share one adaptive mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NonConvergence, NonFiniteEvaluation

__all__ = [
    "QuadratureSpec",
    "Interval",
    "DEFAULT_SPEC",
    "integrate",
    "truncate_domain",
    "tail_integral",
]

# 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980721289,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(21)
_GAUSS_W[1:10:2] = _WG
_GAUSS_W[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000
    tail_tol: float = 1e-12

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.tail_tol > 0):
            raise InvalidParameter("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise InvalidParameter("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or not self.lo < self.hi:
            raise InvalidParameter(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __contains__(self, y) -> bool:
        return self.lo <= y <= self.hi


def _gk21(f, a, b):
    """Kronrod estimate and QUADPACK-style error for each panel [a_k, b_k]."""
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = center[:, None] + half[:, None] * _NODES[None, :]
    fv = np.asarray(f(nodes.ravel()), dtype=float)
    if not np.all(np.isfinite(fv)):
        bad = nodes.ravel()[~np.isfinite(fv.reshape(nodes.size, -1)).all(axis=1)]
        raise NonFiniteEvaluation(f"integrand not finite at y={bad[0]!r}")
    fv = fv.reshape(nodes.shape + fv.shape[1:])
    # fv: (P, 21, m)
    if fv.ndim == 2:
        fv = fv[:, :, None]
    h = half[:, None]
    resk = np.einsum("j,pjm->pm", _KRONROD_W, fv) * h
    resg = np.einsum("j,pjm->pm", _GAUSS_W, fv) * h
    resabs = np.einsum("j,pjm->pm", _KRONROD_W, np.abs(fv)) * np.abs(h)
    mean = resk / (2.0 * h)
    resasc = np.einsum("j,pjm->pm", _KRONROD_W, np.abs(fv - mean[:, None, :])) * np.abs(h)
    err = np.abs(resk - resg)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50 * _EPS * resabs)
    return resk, err


def _adaptive(f, edges, spec):
    edges = np.unique(np.asarray(edges, dtype=float))
    a, b = edges[:-1], edges[1:]
    val, err = _gk21(f, a, b)
    length = edges[-1] - edges[0]
    splits = 0
    while True:
        total = val.sum(axis=0)
        total_err = err.sum(axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            return total, total_err
        ratio = (err / tol).max(axis=1)
        width = b - a
        split = ratio > width / length
        # panels at floating-point resolution cannot be refined further
        split &= width > 64 * _EPS * np.maximum(np.abs(a), np.abs(b))
        n_split = int(split.sum())
        if n_split == 0 or splits + n_split > spec.max_subdivisions:
            raise NonConvergence(
                f"quadrature error {total_err.max():.3g} above target "
                f"{tol.min():.3g} after {splits} subdivisions"
            )
        splits += n_split
        sa, sb = a[split], b[split]
        mid = 0.5 * (sa + sb)
        new_a = np.concatenate([sa, mid])
        new_b = np.concatenate([mid, sb])
        nv, ne = _gk21(f, new_a, new_b)
        keep = ~split
        a = np.concatenate([a[keep], new_a])
        b = np.concatenate([b[keep], new_b])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])


def _squeeze(value, err, vector):
    if vector:
        return value, err
    return float(value[0]), float(err[0])


def _probe_vector(f, y):
    out = np.asarray(f(np.atleast_1d(np.asarray(y, dtype=float))))
    return out.ndim == 2


def integrate(f, domain: Interval, spec: QuadratureSpec = DEFAULT_SPEC, *,
              points=None, envelope=None):
    """Integrate ``f`` over ``domain``; returns ``(value, err_estimate)``.

    ``points`` are interior abscissae where ``f`` has kinks or narrow peaks.
    For semi-infinite domains an integrable ``envelope`` dominating ``|f|``
    lets the domain be truncated at ``spec.tail_tol``; without one the tails
    are mapped onto finite intervals.
    """
    lo, hi = domain.lo, domain.hi
    if points is None:
        points = np.empty(0)
    points = np.asarray(points, dtype=float).ravel()

    if domain.is_finite:
        inner = points[(points > lo) & (points < hi)]
        probe = 0.5 * (lo + hi)
        vector = _probe_vector(f, probe)
        value, err = _adaptive(f, np.concatenate([[lo, hi], inner]), spec)
        return _squeeze(value, err, vector)

    if envelope is not None:
        finite = truncate_domain(envelope, domain, spec.tail_tol, spec)
        value, err = integrate(f, finite, spec, points=points)
        return value, err + spec.tail_tol

    # Variable-transformation fallback; map breakpoints too.
    if math.isinf(lo) and math.isinf(hi):
        def g(t):
            y = t / (1.0 - t * t)
            jac = (1.0 + t * t) / (1.0 - t * t) ** 2
            return _scale(f(y), jac)
        tp = 2 * points / (1 + np.sqrt(1 + 4 * points ** 2))
        tdom = Interval(-1.0, 1.0)
    else:
        # y = edge +- s*t/(1-t); s tracks the edge magnitude so that
        # far-out tails are not squeezed into a sliver next to t = 1
        edge, sign = (lo, 1.0) if math.isinf(hi) else (hi, -1.0)
        s = max(1.0, abs(edge))

        def g(t):
            y = edge + sign * s * t / (1.0 - t)
            return _scale(f(y), s / (1.0 - t) ** 2)
        u = sign * (points - edge) / s
        tp = u / (1 + u)
        tdom = Interval(0.0, 1.0)
    return integrate(g, tdom, spec, points=tp)


def _scale(values, jac):
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        return values * jac[:, None]
    return values * jac


def tail_integral(envelope, start: float, direction: int = 1,
                  spec: QuadratureSpec = DEFAULT_SPEC, tol: float | None = None):
    """Integral of a nonnegative ``envelope`` over [start, inf) or (-inf, start]."""
    tol = spec.tail_tol if tol is None else tol
    tail_spec = QuadratureSpec(abs_tol=tol * 1e-2, rel_tol=1e-6,
                               max_subdivisions=spec.max_subdivisions,
                               tail_tol=spec.tail_tol)
    dom = Interval(start, math.inf) if direction > 0 else Interval(-math.inf, start)
    value, _ = integrate(lambda y: np.abs(envelope(y)), dom, tail_spec)
    return value


def _upper_cut(envelope, anchor, tol, spec, sign):
    """Smallest (to ~0.1%) offset b >= 0 with tail beyond anchor + sign*b below tol."""
    def tail(b):
        return tail_integral(envelope, anchor + sign * b, sign, spec, tol)

    if tail(0.0) < tol:
        return 0.0
    lo_b, hi_b = 0.0, 1.0
    for _ in range(200):
        if tail(hi_b) < tol:
            break
        lo_b, hi_b = hi_b, 2.0 * hi_b
    else:
        raise NonConvergence("envelope tail mass could not be bounded")
    while hi_b - lo_b > 1e-3 * hi_b:
        mid = 0.5 * (lo_b + hi_b)
        if tail(mid) < tol:
            hi_b = mid
        else:
            lo_b = mid
    return hi_b


def truncate_domain(envelope, domain: Interval, tail_tol: float,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> Interval:
    """Finite subinterval of ``domain`` outside which ``envelope`` has mass < tail_tol."""
    if domain.is_finite:
        return domain
    lo, hi = domain.lo, domain.hi
    if math.isinf(lo) and math.isinf(hi):
        half = 0.5 * tail_tol
        return Interval(-_upper_cut(envelope, 0.0, half, spec, -1),
                        _upper_cut(envelope, 0.0, half, spec, 1))
    if math.isinf(hi):
        return Interval(lo, lo + max(_upper_cut(envelope, lo, tail_tol, spec, 1), 1e-300))
    return Interval(hi - max(_upper_cut(envelope, hi, tail_tol, spec, -1), 1e-300), hi)
