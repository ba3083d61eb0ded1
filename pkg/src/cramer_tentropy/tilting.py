"""Entropy minimisation over sequences with a prescribed mean.

All three problems share one shape: minimise ``sum_k t_k (ln t_k - w_k)``
over ``t_0..t_N >= 0`` with ``sum t_k = 1`` and ``sum k t_k = a``. The
minimiser is the tilted family ``t_k ∝ exp(w_k + theta k)``; ``theta`` is
found by bisection on the (strictly increasing) mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .config import DEFAULTS
from .cramer import DistributionSpec, moments

__all__ = [
    "SequencePoint",
    "TiltingSolution",
    "TruncationError",
    "min_entropy_given_mean",
    "min_form3",
    "contraction_discrete",
    "tilted_solution",
]


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class SequencePoint:
    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if np.any(t < 0) or abs(t.sum() - 1.0) > 1e-10:
            raise ValueError("sequence must be a probability vector")
        object.__setattr__(self, "t", t)

    @property
    def N(self) -> int:
        return self.t.size - 1

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.t.size), self.t))


@dataclass(frozen=True)
class TiltingSolution:
    theta: float
    optimum: SequencePoint
    value: float
    log_weights: np.ndarray = field(repr=False)
    boundary: bool = False
    tail_bound: float = 0.0

    @property
    def N(self) -> int:
        return self.optimum.N

    @property
    def mean_achieved(self) -> float:
        return self.optimum.mean

    def objective(self, t=None) -> float:
        """Direct evaluation of ``sum t_k (ln t_k - w_k)`` with ``0 ln 0 = 0``."""
        t = self.optimum.t if t is None else np.asarray(t, dtype=float)
        return _objective(t, self.log_weights)

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "value": self.value,
            "mean_achieved": self.mean_achieved,
            "N": self.N,
            "t": [float(v) for v in self.optimum.t[:50]],
        }


def _objective(t: np.ndarray, log_w: np.ndarray) -> float:
    keep = t >= DEFAULTS.zero_threshold
    return math.fsum(t[keep] * (np.log(t[keep]) - log_w[keep]))


def _tilt(log_w: np.ndarray, theta: float) -> np.ndarray:
    z = log_w + theta * np.arange(log_w.size)
    return np.exp(z - logsumexp(z))


def tilted_solution(log_w: np.ndarray, a: float,
                    bracket: float | None = None,
                    iterations: int | None = None) -> TiltingSolution:
    """Solve the mean-constrained problem for log-weights ``w_0..w_N``."""
    bracket = DEFAULTS.tilt_bracket if bracket is None else bracket
    iterations = DEFAULTS.tilt_iterations if iterations is None else iterations
    log_w = np.asarray(log_w, dtype=float)
    N = log_w.size - 1
    k = np.arange(N + 1)
    finite = np.flatnonzero(np.isfinite(log_w))
    lo_k, hi_k = int(finite[0]), int(finite[-1])
    if a < lo_k or a > hi_k:
        raise TruncationError(f"mean {a} outside attainable range [{lo_k}, {hi_k}]: increase truncation")
    if a == lo_k or a == hi_k:
        t = np.zeros(N + 1)
        t[int(a)] = 1.0
        sign = -math.inf if a == lo_k else math.inf
        return TiltingSolution(sign, SequencePoint(t), _objective(t, log_w), log_w, boundary=True)

    def mean(theta):
        return float(np.dot(k, _tilt(log_w, theta)))

    lo, hi = -bracket, bracket
    if mean(lo) > a or mean(hi) < a:
        raise TruncationError(f"tilt parameter not bracketed for mean {a}: increase truncation")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mean(mid) < a:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    theta = 0.5 * (lo + hi)
    t = _tilt(log_w, theta)
    # geometric extrapolation of the neglected tail beyond N
    tail = 0.0
    if N >= 1 and t[N - 1] > 0:
        r = t[N] / t[N - 1]
        tail = math.inf if r >= 1 else float(t[N] * r / (1 - r))
    return TiltingSolution(theta, SequencePoint(t), _objective(t, log_w), log_w,
                           boundary=False, tail_bound=tail)


def min_entropy_given_mean(a: float, N: int | None = None) -> TiltingSolution:
    """Minimise ``sum t_n ln t_n`` over sequences of mean ``a`` truncated at ``N``.

    The optimum is geometric, ``t_n = (a/(a+1))^n / (a+1)`` in the limit,
    with value ``a ln a - (a+1) ln(a+1)``.
    """
    if a < 0:
        raise ValueError("mean outside cone")
    N = DEFAULTS.truncation if N is None else N
    return tilted_solution(np.zeros(N + 1), a)


def min_form3(d: DistributionSpec, a: float, N: int | None = None) -> TiltingSolution:
    """Minimise ``sum t_k ln(t_k k! / E X^k)`` over truncated sequences of mean ``a``.

    In the limit ``N -> inf`` the value is the conjugate of ``ln M_X o exp``
    at ``a``. Requires the MGF to blow up at its radius.
    """
    if a < 0:
        raise ValueError("mean outside cone")
    if not d.mgf_blows_up:
        raise ValueError("moment formula needs M_X(t) -> inf at the convergence radius")
    N = DEFAULTS.truncation if N is None else N
    log_w = moments(d, N).log_moments - gammaln(np.arange(N + 1) + 1)
    return tilted_solution(log_w, a)


def contraction_discrete(d: DistributionSpec, a: float, N: int | None = None) -> TiltingSolution:
    """Minimal relative entropy ``D(t || p)`` among laws on ``0..N`` with mean ``a``.

    The pmf is truncated at ``N`` without renormalising. For a finite law
    the truncation is its own support length.
    """
    if not d.discrete:
        raise ValueError("contraction_discrete needs a law on the nonnegative integers")
    N = DEFAULTS.truncation if N is None else N
    if hasattr(d, "p"):
        N = len(d.p) - 1
    log_p = np.asarray(d.log_pmf(np.arange(N + 1)), dtype=float)
    if not np.all(np.isfinite(log_p)):
        raise ValueError("support gap: formula requires p_n > 0")
    return tilted_solution(log_p, a)
