"""Capacity-achieving discrete inputs and their Kuhn-Tucker certificates.

An input F is optimal iff i(x;F) <= I(F) on all of [-A, A] with equality on
the mass points of F. :func:`solve_capacity` grows the number of mass points
until a candidate passes that test on a uniform grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .channels import ChannelModel
from .errors import CertificateNeverPassed, InvalidParameter, NonConvergence
from .infodens import DiscreteInput, information, marginal_info_density
from .quad import DEFAULT_SPEC, QuadratureSpec

log = logging.getLogger(__name__)

__all__ = [
    "SolveOptions",
    "KTCertificate",
    "TraceRecord",
    "SolveResult",
    "optimize_fixed_n",
    "kt_check",
    "solve_capacity",
    "cross_optimum_check",
]


@dataclass(frozen=True)
class SolveOptions:
    kt_tol: float = 1e-5
    grid_size: int = 2001
    n_max: int = 16
    merge_eps: Optional[float] = None  # defaults to 1e-6 * A
    inner_iters: int = 300
    inner_tol: float = 1e-9
    seed: int = 0
    restarts: int = 4
    prune_mass: float = 1e-8
    quad: QuadratureSpec = DEFAULT_SPEC

    def __post_init__(self):
        if not (self.kt_tol > 0 and self.inner_tol > 0 and self.prune_mass >= 0):
            raise InvalidParameter("tolerances must be positive")
        if self.grid_size < 3:
            raise InvalidParameter("grid_size must be at least 3")
        if self.n_max < 1 or self.inner_iters < 1 or self.restarts < 0:
            raise InvalidParameter("n_max and inner_iters must be positive")
        if self.merge_eps is not None and not self.merge_eps > 0:
            raise InvalidParameter("merge_eps must be positive")

    def merge_threshold(self, peak):
        return 1e-6 * peak if self.merge_eps is None else self.merge_eps


@dataclass(frozen=True, eq=False)
class KTCertificate:
    grid: np.ndarray
    residuals: np.ndarray
    support: np.ndarray
    support_residuals: np.ndarray
    information: float
    max_violation: float
    passed: bool
    kt_tol: float

    def to_dict(self, full=False):
        out = {
            "information_bits": self.information,
            "max_violation": self.max_violation,
            "passed": bool(self.passed),
            "kt_tol": self.kt_tol,
            "grid_size": int(self.grid.size),
            "support_residuals": [{"x": float(x), "residual": float(r)}
                                  for x, r in zip(self.support, self.support_residuals)],
        }
        if full:
            out["grid"] = self.grid.tolist()
            out["residuals"] = self.residuals.tolist()
        return out


@dataclass(frozen=True)
class TraceRecord:
    N: int
    information: float
    max_violation: float
    passed: bool


@dataclass(frozen=True, eq=False)
class SolveResult:
    capacity: float
    input: DiscreteInput
    certificate: KTCertificate
    trace: list = field(default_factory=list)

    @property
    def passed(self):
        return self.certificate.passed


# ---------------------------------------------------------------------------
# inner optimizer


def _info(F, ch, opts):
    return information(F, ch, opts.quad)


def _rebuild(x, p, ch, opts):
    return DiscreteInput.from_points(x, p, ch.peak, merge_eps=opts.merge_threshold(ch.peak),
                                     clip=True)


def _probability_steps(F, I, ch, opts, steps=50):
    """Fixed-location exponentiated-gradient updates p_j <- p_j 2^{eta i(x_j;F)}.

    eta = 1 is Blahut-Arimoto. On nearly useless channels the spread of i is
    tiny and unit steps crawl, so eta doubles after every accepted step and
    halves after a rejected one; only steps that raise I are kept. Stops once
    i is flat across the support to well inside the certificate tolerance.
    Returns (F, I, spread).
    """
    flat = 1e-3 * opts.kt_tol
    eta = 1.0
    i_vals = marginal_info_density(F.locations, F, ch, opts.quad)
    spread = float(np.ptp(i_vals))
    for _ in range(steps):
        if spread < flat:
            break
        w = F.probabilities * np.exp2(np.clip(eta * (i_vals - i_vals.max()), -1000, 0))
        G = DiscreteInput.from_points(F.locations, w / w.sum(), ch.peak)
        I_new = _info(G, ch, opts)
        if I_new > I:
            F, I = G, I_new
            eta *= 2.0
            i_vals = marginal_info_density(F.locations, F, ch, opts.quad)
            spread = float(np.ptp(i_vals))
        else:
            eta *= 0.25
            if eta < 1e-6:
                break
    return F, I, spread


def _location_gradient(F, ch, opts):
    """p_j * d i(x;F)/dx at each mass point, by central differences with F frozen."""
    A = ch.peak
    h = 1e-4 * A
    x = F.locations
    up = np.minimum(x + h, A)
    dn = np.maximum(x - h, -A)
    vals = marginal_info_density(np.concatenate([up, dn]), F, ch, opts.quad)
    di = (vals[:x.size] - vals[x.size:]) / (up - dn)
    g = F.probabilities * di
    # no ascent direction out of the box
    g[(x >= A) & (g > 0)] = 0.0
    g[(x <= -A) & (g < 0)] = 0.0
    return g


def optimize_fixed_n(ch: ChannelModel, N: int, init: DiscreteInput,
                     opts: SolveOptions = SolveOptions()) -> DiscreteInput:
    """Local maximizer of I over inputs with at most N mass points.

    Alternates Blahut-Arimoto probability updates with projected gradient
    ascent on the locations (backtracking keeps I non-decreasing). Atoms
    closer than the merge threshold are fused, so the result may carry
    fewer than N points.
    """
    if len(init) > N:
        raise InvalidParameter(f"initial input has {len(init)} > {N} points")
    F = init
    I0 = I = _info(F, ch, opts)
    step = 0.1 * ch.peak
    for _ in range(opts.inner_iters):
        I_start = I
        F, I, spread = _probability_steps(F, I, ch, opts)
        moved = 0.0
        if len(F) > 1:
            g = _location_gradient(F, ch, opts)
            gmax = np.abs(g).max()
            if gmax > 0:
                t = step / gmax
                for _ in range(40):
                    G = _rebuild(F.locations + t * g, F.probabilities, ch, opts)
                    I_try = _info(G, ch, opts)
                    if I_try > I:
                        F, I = G, I_try
                        moved = t * gmax
                        step = min(2.0 * moved, ch.peak)
                        break
                    t *= 0.5
                else:
                    step = max(t * gmax, 1e-9 * ch.peak)
        # converged: flat on the support and the atoms have stopped moving
        if spread < 1e-3 * opts.kt_tol and (moved < 1e-7 * ch.peak
                                            or I - I_start < 1e-3 * opts.inner_tol):
            break
    else:
        log.debug("inner optimizer hit %d iterations at N=%d", opts.inner_iters, N)
    if I < I0 - opts.inner_tol:
        raise NonConvergence(f"inner optimizer lost information: {I0!r} -> {I!r}")
    if opts.prune_mass > 0 and len(F) > 1 and F.probabilities.min() < opts.prune_mass:
        F = DiscreteInput.from_points(F.locations, F.probabilities, ch.peak,
                                      min_mass=opts.prune_mass)
        F, _, _ = _probability_steps(F, _info(F, ch, opts), ch, opts)
    return F


# ---------------------------------------------------------------------------
# certificate


def kt_check(ch: ChannelModel, F: DiscreteInput,
             opts: SolveOptions = SolveOptions()) -> KTCertificate:
    """Evaluate i(x;F) - I(F) on a uniform grid and at the mass points."""
    A = ch.peak
    grid = np.linspace(-A, A, opts.grid_size)
    support = F.locations
    vals = np.atleast_1d(marginal_info_density(np.concatenate([support, grid]), F, ch, opts.quad))
    i_supp, i_grid = vals[:support.size], vals[support.size:]
    I = float(i_supp @ F.probabilities)
    if len(F) == 1:
        I = 0.0
        i_supp = np.zeros(1)
    residuals = i_grid - I
    support_residuals = i_supp - I
    max_violation = float(max(residuals.max(), np.abs(support_residuals).max()))
    passed = bool(residuals.max() <= opts.kt_tol
                  and np.abs(support_residuals).max() <= opts.kt_tol)
    return KTCertificate(grid=grid, residuals=residuals, support=support.copy(),
                         support_residuals=support_residuals, information=I,
                         max_violation=max_violation, passed=passed, kt_tol=opts.kt_tol)


# ---------------------------------------------------------------------------
# outer loop


def _equispaced(N, A):
    x = np.zeros(1) if N == 1 else np.linspace(-A, A, N)
    return DiscreteInput(x, np.full(N, 1.0 / N), A)


def _random_start(N, A, rng):
    x = np.sort(rng.uniform(-A, A, N))
    p = rng.dirichlet(np.ones(N))
    return DiscreteInput.from_points(x, p, A)


def _grow(F, cert, A):
    """Previous optimum plus a small atom where the KT residual peaks."""
    x_new = cert.grid[int(np.argmax(cert.residuals))]
    x = np.append(F.locations, x_new)
    p = np.append(0.9 * F.probabilities, 0.1)
    return DiscreteInput.from_points(x, p, A, merge_eps=1e-9 * A)


def _select(candidates, tol):
    """Highest information; near-ties go to the lexicographically smallest support."""
    best = max(I for _, I in candidates)
    near = [(F, I) for F, I in candidates if I >= best - tol]
    return min(near, key=lambda c: (len(c[0]), tuple(np.round(c[0].locations, 9))))


def solve_capacity(ch: ChannelModel, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Smallest-N certified capacity-achieving discrete input.

    Raises :class:`CertificateNeverPassed` (with the best uncertified result
    attached) when no N up to ``opts.n_max`` passes the certificate.
    """
    A = ch.peak
    trace = []
    prev = None
    best_result = None
    for N in range(1, opts.n_max + 1):
        rng = np.random.default_rng([opts.seed, N])
        starts = [_equispaced(N, A)]
        if N > 1:
            starts += [_random_start(N, A, rng) for _ in range(opts.restarts)]
        if prev is not None:
            starts.append(_grow(*prev, A))
        candidates = []
        for s in starts:
            F = optimize_fixed_n(ch, N, s, opts)
            candidates.append((F, _info(F, ch, opts)))
        F, _ = _select(candidates, opts.inner_tol)
        cert = kt_check(ch, F, opts)
        trace.append(TraceRecord(N, cert.information, cert.max_violation, cert.passed))
        log.info("N=%d I=%.9f max_violation=%.3g", N, cert.information, cert.max_violation)
        result = SolveResult(cert.information, F, cert, list(trace))
        if best_result is None or cert.max_violation < best_result.certificate.max_violation:
            best_result = result
        if cert.passed:
            return result
        prev = (F, cert)
    best_result = replace(best_result, trace=list(trace))
    raise CertificateNeverPassed(
        f"no certified input with at most {opts.n_max} mass points", best_result)


def cross_optimum_check(ch: ChannelModel, F_a: DiscreteInput, F_b: DiscreteInput,
                        opts: SolveOptions = SolveOptions()) -> bool:
    """Whether each optimum's information density equals its capacity on the other's support."""
    for F, G in ((F_a, F_b), (F_b, F_a)):
        i_own = np.atleast_1d(marginal_info_density(F.locations, F, ch, opts.quad))
        I = 0.0 if len(F) == 1 else float(i_own @ F.probabilities)
        i_other = np.atleast_1d(marginal_info_density(G.locations, F, ch, opts.quad))
        if np.abs(i_other - I).max() > opts.kt_tol:
            return False
    return True
