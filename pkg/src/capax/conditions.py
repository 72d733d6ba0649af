"""Numerical checks of the sufficient conditions for a discrete optimal input.

Analyticity in the input is not machine-checkable; built-in channels only
declare it (``ChannelModel.analytic``). Uniform convergence of the two
log-weighted integrals is replaced by a real-axis tail-decay surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import LOG2E

from .errors import InvalidParameter, NonConvergence, NonFiniteEvaluation
from .quad import DEFAULT_SPEC, Interval, QuadratureSpec, integrate

__all__ = [
    "Check",
    "EnvelopeReport",
    "gamma_bound",
    "rayleigh_envelopes",
    "verify_envelope",
    "verify_q_log_q_integrable",
    "verify_additive_d_constant",
    "verify_nonconstant_kl",
    "verify_tail_decay",
    "check_conditions",
]

D_SPREAD_TOL = 1e-6
KL_DIFF_TOL = 1e-6


def gamma_bound(A: float, c: float) -> float:
    """Exclusive upper bound on the Rayleigh envelope exponent gamma."""
    if not (A > 0 and math.isfinite(A)):
        raise InvalidParameter(f"A must be positive, got {A!r}")
    if not c > 2:
        raise InvalidParameter(f"c must exceed 2, got {c!r}")
    return min(1.0, (c - math.log(c)) / math.log(c * (1.0 + A * A)))


def rayleigh_envelopes(A: float, c: float, gamma: float):
    """Lower/upper envelopes of s*exp(-y*s) over s = 1/(1+x^2), |x| <= A.

    Returns ``(q, Q, y1, y2)`` where Q switches from 1 to a power law at
    ``y1 = c(1+A^2)`` and q switches from the widest law to exp(-y) at the
    crossing point ``y2``.
    """
    bound = gamma_bound(A, c)
    if not 0 < gamma < bound:
        raise InvalidParameter(f"gamma={gamma!r} outside (0, {bound!r})")
    a2 = A * A
    s_min = 1.0 / (1.0 + a2)
    y1 = c * (1.0 + a2)
    y2 = (1.0 + a2) * math.log1p(a2) / a2

    def Q(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            tail = np.power(np.maximum(y, y1), -(1.0 + gamma))
        return np.where(y <= y1, 1.0, tail)

    def q(y):
        y = np.asarray(y, dtype=float)
        # same expression as the channel density at |x| = A and x = 0
        return np.where(y <= y2, s_min * np.exp(-y * s_min), 1.0 * np.exp(-y * 1.0))

    return q, Q, y1, y2


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: dict = field(default_factory=dict)
    margin: float = float("nan")

    def to_dict(self):
        return {"check_name": self.name, "passed": bool(self.passed),
                "witness": self.witness, "margin": self.margin}


@dataclass(frozen=True)
class EnvelopeReport:
    checks: list

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"overall": self.overall, "checks": [c.to_dict() for c in self.checks]}


def _y_grid(ch, n, spec):
    dom = ch.truncated_domain(spec)
    return np.linspace(dom.lo, dom.hi, n)


def verify_envelope(ch, x_grid_size: int = 100, y_grid_size: int = 10_000,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> EnvelopeReport:
    """Pointwise check of 0 <= q <= p(y|x) <= Q <= K on a grid, zero tolerance."""
    if x_grid_size < 2 or y_grid_size < 2:
        raise InvalidParameter("grids need at least two points")
    A = ch.peak
    xs = np.linspace(-A, A, x_grid_size)
    ys = _y_grid(ch, y_grid_size, spec)
    q = np.asarray(ch.envelope_q(ys), dtype=float)
    Q = np.asarray(ch.envelope_Q(ys), dtype=float)
    P = np.asarray(ch.eval(ys[:, None], xs[None, :]), dtype=float)
    K = ch.envelope_K

    def worst(margins, label, with_x):
        idx = np.unravel_index(np.argmin(margins), margins.shape)
        wit = {"y": float(ys[idx[0]])}
        if with_x:
            wit["x"] = float(xs[idx[1]])
        m = float(margins[idx])
        return Check(label, bool(m >= 0), wit, m)

    return EnvelopeReport([
        worst(q, "q_nonnegative", False),
        worst(P - q[:, None], "q_below_density", True),
        worst(Q[:, None] - P, "density_below_Q", True),
        worst(K - Q, "Q_below_K", False),
    ])


def verify_q_log_q_integrable(ch, spec: QuadratureSpec = DEFAULT_SPEC,
                              max_doublings: int = 80):
    """Integral of |Q(y) log2 q(y)| over the output domain.

    The finite part is integrated directly; each infinite tail is split into
    geometrically growing blocks. A tail is accepted once the blocks fall
    below the absolute tolerance, or once they shrink at a steady ratio
    below one (the remainder is then summed as a geometric series). Blocks
    that stop shrinking mean the integral diverges.

    Returns ``(value, passed)``; ``value`` is ``inf`` when not integrable.
    """
    def g(y):
        lq = ch.log_q(y) * LOG2E
        Qv = np.asarray(ch.envelope_Q(y), dtype=float)
        with np.errstate(invalid="ignore"):
            return np.where(Qv > 0, np.abs(Qv * lq), 0.0)

    dom = ch.output_domain
    lo = dom.lo if math.isfinite(dom.lo) else -1.0
    hi = dom.hi if math.isfinite(dom.hi) else 1.0
    pts = ch.kinks(np.array([-ch.peak, 0.0, ch.peak]))
    try:
        total, _ = integrate(g, Interval(lo, hi), spec, points=pts)
        for edge, sign, infinite in ((hi, 1.0, math.isinf(dom.hi)),
                                     (lo, -1.0, math.isinf(dom.lo))):
            if infinite:
                total += _tail_blocks(g, edge, sign, spec, max_doublings)
    except (NonConvergence, NonFiniteEvaluation):
        return math.inf, False
    return total, math.isfinite(total)


def _tail_blocks(g, edge, sign, spec, max_doublings):
    width = max(1.0, abs(edge))
    start = edge
    total = 0.0
    blocks = []
    for _ in range(max_doublings):
        end = start + sign * width
        seg = Interval(min(start, end), max(start, end))
        val, _ = integrate(g, seg, spec)
        total += val
        blocks.append(val)
        if val < spec.abs_tol * 1e-2:
            return total
        if len(blocks) >= 12:
            ratios = np.array(blocks[-6:]) / np.array(blocks[-7:-1])
            if np.all(ratios >= 1.0):
                return math.inf
            r = ratios.max()
            if r < 1.0 - 1e-3 and np.ptp(ratios) < 1e-2:
                return total + val * r / (1.0 - r)
        start = end
        width *= 2.0
    return math.inf


def verify_additive_d_constant(ch, x_grid_size: int = 1000,
                               spec: QuadratureSpec = DEFAULT_SPEC,
                               tol: float = D_SPREAD_TOL):
    """Spread (max - min, bits) of d(x) over an input grid, by quadrature."""
    from .infodens import conditional_entropy_density

    xs = np.linspace(-ch.peak, ch.peak, x_grid_size)
    d = np.atleast_1d(conditional_entropy_density(xs, ch, spec, use_closed_form=False))
    spread = float(d.max() - d.min())
    return spread, spread < tol


def verify_nonconstant_kl(ch, F, x_grid_size: int = 101,
                          spec: QuadratureSpec = DEFAULT_SPEC, tol: float = KL_DIFF_TOL):
    """Search the input grid for two points whose KL to p_Y(.;F) differ.

    Returns ``(passed, (x_low, x_high))``: the arg-min and arg-max of the KL,
    ties broken towards the larger input.
    """
    from .infodens import kl_divergence

    xs = np.linspace(-ch.peak, ch.peak, x_grid_size)
    kl = np.atleast_1d(kl_divergence(xs, F, ch, spec))
    lo_val, hi_val = kl.min(), kl.max()
    slack = 1e-9
    x_lo = float(xs[np.flatnonzero(kl <= lo_val + slack)[-1]])
    x_hi = float(xs[np.flatnonzero(kl >= hi_val - slack)[-1]])
    return bool(hi_val - lo_val > tol), (x_lo, x_hi)


def verify_tail_decay(ch, F, x_grid_size: int = 21, spec: QuadratureSpec = DEFAULT_SPEC,
                      tol: float | None = None):
    """Surrogate for uniform convergence of the two log-weighted integrals.

    Integrates |p(y|x) log2 p(y|x)| and |p(y|x) log2 p_Y(y;F)| over the
    output beyond the truncated domain for every grid x, and returns the
    worst tail mass together with whether it stays below ``tol``.
    """
    from .infodens import log2_output_density

    tol = 10 * spec.abs_tol if tol is None else tol
    xs = np.linspace(-ch.peak, ch.peak, x_grid_size)
    dom, trunc = ch.output_domain, ch.truncated_domain(spec)

    def f(y):
        lp = ch.log_density(y[:, None], xs[None, :])
        p = np.exp(lp)
        ly = log2_output_density(y, F, ch)[:, None]
        own = np.where(p > 0, np.abs(p * np.where(p > 0, lp, 0.0)) / math.log(2), 0.0)
        cross = np.where(p > 0, np.abs(p * ly), 0.0)
        return np.concatenate([own, cross], axis=1)

    worst = 0.0
    tails = []
    if trunc.hi < dom.hi:
        tails.append(Interval(trunc.hi, dom.hi))
    if trunc.lo > dom.lo:
        tails.append(Interval(dom.lo, trunc.lo))
    tail_spec = QuadratureSpec(abs_tol=tol * 1e-3, rel_tol=1e-6,
                               max_subdivisions=spec.max_subdivisions,
                               tail_tol=spec.tail_tol)
    for seg in tails:
        try:
            val, _ = integrate(f, seg, tail_spec)
        except (NonConvergence, NonFiniteEvaluation):
            return math.inf, False
        worst = max(worst, float(np.max(val)))
    return worst, worst < tol


def check_conditions(ch, F=None, *, x_grid_size: int = 100, y_grid_size: int = 10_000,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> EnvelopeReport:
    """Run every numeric condition check that applies to ``ch``."""
    from .infodens import DiscreteInput

    if F is None:
        F = DiscreteInput.point_mass(0.0, ch.peak)
    checks = list(verify_envelope(ch, x_grid_size, y_grid_size, spec).checks)

    value, ok = verify_q_log_q_integrable(ch, spec)
    checks.append(Check("Q_log_q_integrable", ok, {}, value))

    tail, ok = verify_tail_decay(ch, F, spec=spec)
    checks.append(Check("log_integrals_tail_decay", ok, {}, tail))

    passed, (x1, x2) = verify_nonconstant_kl(ch, F, spec=spec)
    checks.append(Check("kl_nonconstant", passed, {"x1": x1, "x2": x2}, float("nan")))

    if ch.additive:
        spread, ok = verify_additive_d_constant(ch, spec=spec)
        checks.append(Check("d_constant", ok, {}, spread))
    return EnvelopeReport(checks)
