"""Output density, entropy/information densities and mutual information.

All quantities are in bits. Integrals over the output run on the channel's
truncated domain, so every returned value carries an extra absolute error of
at most ``spec.tail_tol`` on top of the quadrature tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .channels import LOG2E, ChannelModel
from .errors import CrossCheckFailure, InvalidInput
from .quad import DEFAULT_SPEC, QuadratureSpec, integrate

__all__ = [
    "DiscreteInput",
    "FunctionalValues",
    "output_density",
    "log2_output_density",
    "marginal_entropy_density",
    "conditional_entropy_density",
    "marginal_info_density",
    "kl_divergence",
    "output_entropy",
    "mutual_information",
    "weak_derivative",
]

SUM_TOL = 1e-12
CROSS_CHECK_TOL = 1e-7
# x-values integrated together on one adaptive mesh
_CHUNK = 64
_LN_TINY = math.log(1e-300)


@dataclass(frozen=True, eq=False)
class DiscreteInput:
    """Finitely many mass points on [-peak, peak], sorted by location."""

    locations: np.ndarray
    probabilities: np.ndarray
    peak: float

    def __post_init__(self):
        x = np.array(self.locations, dtype=float).ravel()
        p = np.array(self.probabilities, dtype=float).ravel()
        if x.size == 0 or x.shape != p.shape:
            raise InvalidInput("need matching, nonempty locations and probabilities")
        if not (self.peak > 0 and math.isfinite(self.peak)):
            raise InvalidInput(f"peak must be positive, got {self.peak!r}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise InvalidInput("locations and probabilities must be finite")
        if np.any(p <= 0):
            raise InvalidInput("probabilities must be strictly positive")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise InvalidInput(f"probabilities sum to {p.sum()!r}")
        if np.any(np.abs(x) > self.peak):
            raise InvalidInput(f"locations must lie in [-{self.peak}, {self.peak}]")
        if np.any(np.diff(x) <= 0):
            raise InvalidInput("locations must be strictly increasing")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "peak", float(self.peak))

    @classmethod
    def from_points(cls, locations, probabilities, peak, *, merge_eps=0.0,
                    normalize=True, clip=False, min_mass=0.0):
        """Build an input from unsorted atoms.

        Atoms within ``merge_eps`` of their left neighbour are merged (masses
        summed, location mass-weighted), atoms with mass <= ``min_mass`` are
        dropped, and masses are renormalized unless ``normalize`` is false.
        """
        x = np.array(locations, dtype=float).ravel()
        p = np.array(probabilities, dtype=float).ravel()
        if x.shape != p.shape:
            raise InvalidInput("locations and probabilities differ in length")
        if clip:
            x = np.clip(x, -peak, peak)
        order = np.argsort(x, kind="stable")
        x, p = x[order], p[order]
        keep = p > min_mass
        x, p = x[keep], p[keep]
        xs, ps = [], []
        for xi, pi in zip(x, p):
            if xs and xi - xs[-1] <= merge_eps:
                tot = ps[-1] + pi
                # the boundary atom stays on the boundary when merging
                if abs(xs[-1]) == peak or abs(xi) == peak:
                    xs[-1] = xs[-1] if abs(xs[-1]) == peak else xi
                else:
                    xs[-1] = (xs[-1] * ps[-1] + xi * pi) / tot
                ps[-1] = tot
            else:
                xs.append(xi)
                ps.append(pi)
        p = np.array(ps)
        if normalize and p.size:
            p = p / p.sum()
        return cls(np.array(xs), p, peak)

    @classmethod
    def point_mass(cls, x, peak):
        return cls(np.array([x]), np.array([1.0]), peak)

    def __len__(self):
        return self.locations.size

    @property
    def points(self):
        return list(zip(self.locations.tolist(), self.probabilities.tolist()))

    def mix(self, other: "DiscreteInput", theta: float) -> "DiscreteInput":
        """(1 - theta) * self + theta * other, coinciding atoms merged."""
        if not 0 <= theta <= 1:
            raise InvalidInput("mixing weight must lie in [0, 1]")
        x = np.concatenate([self.locations, other.locations])
        p = np.concatenate([(1 - theta) * self.probabilities, theta * other.probabilities])
        return DiscreteInput.from_points(x, p, max(self.peak, other.peak))

    def mirror(self) -> "DiscreteInput":
        return DiscreteInput(-self.locations[::-1], self.probabilities[::-1], self.peak)

    def to_dict(self):
        return {"peak": self.peak,
                "points": [{"x": x, "p": p} for x, p in self.points]}


@dataclass(frozen=True)
class FunctionalValues:
    I: float
    H: float
    D: float
    cross_check: float  # |I - (H - D)|


def log2_output_density(y, F: DiscreteInput, ch: ChannelModel):
    """log2 p_Y(y;F), clamped below by log2 q(y) where p_Y underflows."""
    y = np.asarray(y, dtype=float)
    ld = ch.log_density(y[..., None], F.locations) + np.log(F.probabilities)
    ln = logsumexp(ld, axis=-1)
    low = ln < _LN_TINY
    if np.any(low):
        with np.errstate(divide="ignore"):
            floor = np.maximum(ch.log_q(y), _LN_TINY)
        ln = np.where(low, np.maximum(ln, floor), ln)
    return ln * LOG2E


def output_density(y, F: DiscreteInput, ch: ChannelModel):
    y_arr = np.asarray(y, dtype=float)
    out = ch.eval(y_arr[..., None], F.locations) @ F.probabilities
    return float(out) if np.ndim(y) == 0 else out


def _xlogx_terms(p, logp):
    return np.where(p > 0, p * np.where(p > 0, logp, 0.0), 0.0)


def _batch(xs, F, ch, kind, spec):
    """Vector of per-x integrals over the output for ``kind`` in {h, d, kl}."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    dom = ch.truncated_domain(spec)
    out = np.empty(xs.size)
    for start in range(0, xs.size, _CHUNK):
        blk = xs[start:start + _CHUNK]

        def f(y, blk=blk):
            lp = ch.log_density(y[:, None], blk[None, :])
            p = np.exp(lp)
            if kind == "d":
                return -_xlogx_terms(p, lp * LOG2E)
            ly = log2_output_density(y, F, ch)[:, None]
            if kind == "h":
                return -_xlogx_terms(p, np.broadcast_to(ly, p.shape))
            return _xlogx_terms(p, lp * LOG2E - ly)

        anchors = blk if F is None else np.concatenate([blk, F.locations])
        val, _ = integrate(f, dom, spec, points=ch.kinks(anchors))
        out[start:start + blk.size] = val
    return out


def _scalar_or_array(x, values):
    return float(values[0]) if np.ndim(x) == 0 else values


def marginal_entropy_density(x, F: DiscreteInput, ch: ChannelModel,
                             spec: QuadratureSpec = DEFAULT_SPEC):
    """h(x;F) = -int p(y|x) log2 p_Y(y;F) dy."""
    return _scalar_or_array(x, _batch(x, F, ch, "h", spec))


def conditional_entropy_density(x, ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC,
                                use_closed_form: bool = True):
    """d(x) = -int p(y|x) log2 p(y|x) dy."""
    if use_closed_form and ch.closed_form_d is not None:
        vals = np.atleast_1d(np.asarray(ch.closed_form_d(np.atleast_1d(x)), dtype=float))
        return _scalar_or_array(x, vals)
    return _scalar_or_array(x, _batch(x, None, ch, "d", spec))


def marginal_info_density(x, F: DiscreteInput, ch: ChannelModel,
                          spec: QuadratureSpec = DEFAULT_SPEC):
    """i(x;F) = h(x;F) - d(x), integrated as one log-ratio.

    Subtracting two separately integrated entropies of order one would leave
    an error of ``rel_tol`` bits, which swamps i(x;F) on low-capacity channels.
    """
    return _scalar_or_array(x, _batch(x, F, ch, "kl", spec))


def kl_divergence(x, F: DiscreteInput, ch: ChannelModel,
                  spec: QuadratureSpec = DEFAULT_SPEC):
    """D_KL(p(.|x) || p_Y(.;F)) in bits; the same quantity as i(x;F)."""
    return _scalar_or_array(x, _batch(x, F, ch, "kl", spec))


def output_entropy(F: DiscreteInput, ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC):
    """H(F) = -int p_Y log2 p_Y dy, integrated from the mixture itself."""
    dom = ch.truncated_domain(spec)

    def f(y):
        py = output_density(y, F, ch)
        return -_xlogx_terms(py, log2_output_density(y, F, ch))

    val, _ = integrate(f, dom, spec, points=ch.kinks(F.locations))
    return val


def mutual_information(F: DiscreteInput, ch: ChannelModel,
                       spec: QuadratureSpec = DEFAULT_SPEC, *,
                       tol: float = CROSS_CHECK_TOL) -> FunctionalValues:
    """I(F) as sum_i p_i i(x_i;F), cross-checked against H(F) - D(F).

    H is integrated from the output mixture and D from the conditional
    entropies, so the two routes share no integrand.
    """
    p = F.probabilities
    H = output_entropy(F, ch, spec)
    D = float(np.atleast_1d(conditional_entropy_density(F.locations, ch, spec)) @ p)
    if len(F) == 1:
        # p_Y is the conditional law itself; no quadrature residue
        I = 0.0
    else:
        I = float(marginal_info_density(F.locations, F, ch, spec) @ p)
    gap = abs(I - (H - D))
    if gap > tol:
        raise CrossCheckFailure(f"I={I!r} but H-D={H - D!r} (gap {gap:.3g} bits)")
    return FunctionalValues(I=I, H=H, D=D, cross_check=gap)


def information(F: DiscreteInput, ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC):
    """I(F) by the information-density route only (no cross-check)."""
    return float(marginal_info_density(F.locations, F, ch, spec) @ F.probabilities)


def weak_derivative(F1: DiscreteInput, F2: DiscreteInput, ch: ChannelModel,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Directional derivative of I at F1 towards F2 along the mixture path."""
    i2 = marginal_info_density(F2.locations, F1, ch, spec)
    i1 = marginal_info_density(F1.locations, F1, ch, spec)
    return float(i2 @ F2.probabilities - i1 @ F1.probabilities)
