"""Positive-matrix calculus for weighted composition operators.

A finite dynamical system ``(alpha, phi)`` on points ``0..n-1`` gives the
operator ``(e^phi C_alpha) u (i) = e^{phi(i)} u(alpha(i))``, i.e. a matrix
with one positive entry per row. Its spectral exponent is the largest mean
of ``phi`` over the cycles of ``alpha``; transient points only add a
nilpotent part.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .config import DEFAULTS
from .cramer import DistributionSpec, Exponential

__all__ = [
    "FiniteDynamicalSystem",
    "OperatorSeriesSpec",
    "SeriesDivergenceError",
    "wco_matrix",
    "spectral_radius",
    "lambda_functional",
    "lambda_batch",
    "operator_series",
    "check_rfA",
    "pgf_of_operator",
    "exp_series",
    "geometric_series",
    "cosh_series",
    "mgf_series",
    "pgf_series",
    "random_permutation_system",
]


class SeriesDivergenceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteDynamicalSystem:
    alpha: tuple[int, ...]
    phi: np.ndarray
    p_exponent: float = 1.0

    def __post_init__(self):
        alpha = tuple(int(v) for v in self.alpha)
        phi = np.asarray(self.phi, dtype=float)
        n = len(alpha)
        if n == 0:
            raise ValueError("system needs at least one point")
        if any(v < 0 or v >= n for v in alpha):
            raise ValueError("alpha must map {0..n-1} into itself")
        if phi.shape != (n,):
            raise ValueError("phi must have one weight per point")
        if self.p_exponent < 1:
            raise ValueError("L^p exponent must be >= 1")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def is_bijective(self) -> bool:
        return len(set(self.alpha)) == self.n

    @cached_property
    def cycles(self) -> tuple[tuple[int, ...], ...]:
        """Periodic orbits of ``alpha``, each listed from its smallest point."""
        found: dict[int, tuple[int, ...]] = {}
        for start in range(self.n):
            seen = {}
            i = start
            while i not in seen:
                seen[i] = len(seen)
                i = self.alpha[i]
            cyc = [i]
            j = self.alpha[i]
            while j != i:
                cyc.append(j)
                j = self.alpha[j]
            m = min(cyc)
            if m not in found:
                k = cyc.index(m)
                found[m] = tuple(cyc[k:] + cyc[:k])
        return tuple(found[m] for m in sorted(found))

    @cached_property
    def cycle_averaging(self) -> np.ndarray:
        """Matrix whose rows average a weight vector over each cycle."""
        C = np.zeros((len(self.cycles), self.n))
        for r, cyc in enumerate(self.cycles):
            C[r, list(cyc)] = 1.0 / len(cyc)
        return C

    def with_phi(self, phi) -> "FiniteDynamicalSystem":
        return FiniteDynamicalSystem(self.alpha, phi, self.p_exponent)

    def to_json(self) -> dict:
        return {"n": self.n, "alpha": list(self.alpha),
                "phi": [float(v) for v in self.phi], "p": self.p_exponent}

    @classmethod
    def from_json(cls, obj: dict | str) -> "FiniteDynamicalSystem":
        if isinstance(obj, str):
            obj = json.loads(obj)
        alpha = obj["alpha"]
        if "n" in obj and int(obj["n"]) != len(alpha):
            raise ValueError("n does not match the length of alpha")
        return cls(tuple(alpha), np.asarray(obj["phi"], dtype=float), float(obj.get("p", 1.0)))

    @classmethod
    def swap(cls, phi=(0.0, 0.0), p: float = 1.0) -> "FiniteDynamicalSystem":
        return cls((1, 0), np.asarray(phi, dtype=float), p)

    @classmethod
    def identity(cls, phi, p: float = 1.0) -> "FiniteDynamicalSystem":
        phi = np.asarray(phi, dtype=float)
        return cls(tuple(range(phi.size)), phi, p)


def random_permutation_system(rng: np.random.Generator, n: int,
                              phi_range: tuple[float, float] = (-1.0, 1.0),
                              p: float = 1.0) -> FiniteDynamicalSystem:
    alpha = tuple(int(v) for v in rng.permutation(n))
    return FiniteDynamicalSystem(alpha, rng.uniform(*phi_range, size=n), p)


def wco_matrix(s: FiniteDynamicalSystem) -> np.ndarray:
    A = np.zeros((s.n, s.n))
    A[np.arange(s.n), list(s.alpha)] = np.exp(s.phi)
    return A


# spectral radius -------------------------------------------------------------

def _sup_norm(A: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(A), axis=1))) if A.size else 0.0


def _gelfand(A: np.ndarray, squarings: int) -> float:
    """``lim ||A^k||^(1/k)`` via ``k = 2^squarings`` with log-scale bookkeeping."""
    nrm = _sup_norm(A)
    if nrm == 0.0:
        return 0.0
    log_scale = math.log(nrm)
    B = A / nrm
    # log r ~ log||A|| + sum_j log||B_j^2|| / 2^(j+1)
    weight = 0.5
    for _ in range(squarings):
        B = B @ B
        nrm = _sup_norm(B)
        if nrm == 0.0:
            return 0.0
        log_scale += weight * math.log(nrm)
        B /= nrm
        weight *= 0.5
    return math.exp(log_scale)


def spectral_radius(A, tol: float | None = None, max_iter: int | None = None,
                    squarings: int | None = None) -> float:
    """Spectral radius of a nonnegative matrix.

    Power iteration from the all-ones vector with sup-norm normalisation;
    converged when the Collatz-Wielandt bounds ``min/max (Ax)_i / x_i``
    agree to ``tol`` (relative). When the bounds stop closing (peripheral
    spectrum as for weighted permutations, reducible blocks, zero rows)
    the Gelfand formula is used.
    """
    tol = DEFAULTS.power_tol if tol is None else tol
    max_iter = DEFAULTS.power_max_iter if max_iter is None else max_iter
    squarings = DEFAULTS.gelfand_squarings if squarings is None else squarings
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    if np.any(A < 0):
        raise ValueError("matrix must be entrywise nonnegative")
    n = A.shape[0]
    if n == 0 or not np.any(A):
        return 0.0

    x = np.ones(n)
    gaps: list[float] = []
    check = DEFAULTS.power_stall_check
    for k in range(max_iter):
        y = A @ x
        m = float(np.max(y))
        if m == 0.0:
            return 0.0
        if not np.all(x > 0):
            # the support of x only shrinks; bounds are unavailable
            break
        # Collatz-Wielandt: min (Ax)_i/x_i <= r <= max (Ax)_i/x_i for x > 0
        q = y / x
        lo, hi = float(np.min(q)), float(np.max(q))
        gaps.append(hi - lo)
        if hi - lo <= tol * hi:
            return 0.5 * (lo + hi)
        x = y / m
        if k + 1 >= 2 * check and (k + 1) % check == 0:
            if gaps[-1] > 0.5 * gaps[-1 - check // 2]:
                break
    return _gelfand(A, squarings)


def lambda_batch(s: FiniteDynamicalSystem, phis) -> np.ndarray:
    """Spectral exponent for a batch of weight vectors (rows of ``phis``)."""
    phis = np.atleast_2d(np.asarray(phis, dtype=float))
    return np.max(phis @ s.cycle_averaging.T, axis=1)


def lambda_functional(s: FiniteDynamicalSystem, method: str = "cycles") -> float:
    """``ln r(e^phi C_alpha)``.

    ``"cycles"`` uses the maximal cycle mean of ``phi``, exact for any map
    of a finite set; ``"numeric"`` takes the log of :func:`spectral_radius`.
    """
    if method == "cycles":
        return float(lambda_batch(s, s.phi)[0])
    if method == "numeric":
        r = spectral_radius(wco_matrix(s))
        return math.log(r) if r > 0 else -math.inf
    raise ValueError(f"unknown method {method!r}")


# analytic functions of operators ----------------------------------------------

@dataclass(frozen=True)
class OperatorSeriesSpec:
    """Power series ``f(t) = sum c_n t^n`` with nonnegative coefficients.

    Coefficients are given in log form (``-inf`` for zero) so that large
    orders neither overflow nor underflow.
    """

    log_coefficient: Callable[[int], float]
    radius: float
    scalar_eval: Callable[[float], float]
    name: str = "series"

    def coefficient(self, n: int) -> float:
        return math.exp(self.log_coefficient(n))

    def partial_sum(self, t: float, N: int) -> float:
        if t == 0:
            return self.coefficient(0)
        lt = math.log(t)
        return math.fsum(math.exp(self.log_coefficient(k) + k * lt) for k in range(N + 1))


def exp_series() -> OperatorSeriesSpec:
    return OperatorSeriesSpec(lambda n: -math.lgamma(n + 1), math.inf, math.exp, "exp")


def cosh_series() -> OperatorSeriesSpec:
    return OperatorSeriesSpec(lambda n: -math.lgamma(n + 1) if n % 2 == 0 else -math.inf,
                              math.inf, math.cosh, "cosh")


def geometric_series(mu: float) -> OperatorSeriesSpec:
    """MGF of Exponential(mu): ``mu / (mu - t) = sum (t/mu)^n``."""
    lm = math.log(mu)
    return OperatorSeriesSpec(lambda n: -n * lm, float(mu),
                              lambda t: mu / (mu - t) if t < mu else math.inf,
                              f"geometric({mu:g})")


def mgf_series(d: DistributionSpec) -> OperatorSeriesSpec:
    """``M_X(t) = sum E X^n t^n / n!``."""
    if isinstance(d, Exponential):
        return geometric_series(d.mu)
    cache = {"lm": np.zeros(1)}

    def logc(n: int) -> float:
        lm = cache["lm"]
        if n >= lm.size:
            from .cramer import moments
            lm = moments(d, max(2 * n, 64)).log_moments
            cache["lm"] = lm
        return float(lm[n] - gammaln(n + 1))

    return OperatorSeriesSpec(logc, d.convergence_radius, lambda t: float(d.mgf(t)), f"mgf({d.kind})")


def pgf_series(d: DistributionSpec) -> OperatorSeriesSpec:
    """``g_X(s) = sum p_n s^n`` for an integer-valued law."""
    if not d.discrete:
        raise ValueError("pgf requires a law on the nonnegative integers")
    return OperatorSeriesSpec(lambda n: float(d.log_pmf(n)), math.inf,
                              lambda s: float(d.pgf(s)), f"pgf({d.kind})")


def _log_max_scaled_power(A: np.ndarray, q: float, m: int) -> float:
    """``log max_{0 <= j < m} ||A^j|| / q^j`` with renormalised products."""
    P = np.eye(A.shape[0])
    log_scale, best = 0.0, 0.0
    for _ in range(1, m):
        P = P @ (A / q)
        nr = _sup_norm(P)
        if nr == 0.0:
            break
        log_scale += math.log(nr)
        P /= nr
        best = max(best, log_scale)
    return best


def _growth_bound(A: np.ndarray, r: float, R: float,
                  exact_limit: int = 4096) -> tuple[float, float]:
    """``(q, log K)`` with ``||A^n|| <= K q^n`` for all n and ``q < R``.

    ``q = ||A^m||^(1/m)`` for the first power of two ``m`` that brings it
    inside the target ``(r + R) / 2``. Writing ``n = km + j`` gives
    ``K = max_{j<m} ||A^j|| / q^j``, computed exactly up to ``exact_limit``
    and bounded by ``(||A|| / q)^(m-1)`` beyond. ``q = 0`` flags a
    nilpotent matrix.
    """
    nrm = _sup_norm(A)
    target = r + 0.5 * (R - r) if math.isfinite(R) else math.inf
    if nrm < R and nrm <= target:
        return nrm, 0.0
    best = (nrm, 1) if nrm < R else None
    # A^m = ||A||^m e^{ell} B with ||B|| = 1
    B, ell, m = A / nrm, 0.0, 1
    for _ in range(30):
        B = B @ B
        m *= 2
        bn = _sup_norm(B)
        if bn == 0.0:
            return 0.0, 0.0
        ell = 2 * ell + math.log(bn)
        B /= bn
        q = nrm * math.exp(ell / m)
        if q < R and (best is None or q <= target):
            best = (q, m)
            if q <= target:
                break
    if best is None:
        raise SeriesDivergenceError("could not bound operator powers below the convergence radius")
    q, m = best
    if m == 1:
        return q, 0.0
    if m <= exact_limit:
        return q, _log_max_scaled_power(A, q, m)
    return q, (m - 1) * math.log(nrm / q)


def operator_series(f: OperatorSeriesSpec, A, tol: float | None = None,
                    max_terms: int | None = None) -> np.ndarray:
    """Truncated ``sum_n c_n A^n`` with a certified relative tail.

    ``N`` is the first order with ``K * sum_{n>N} c_n q^n <= tol * max(1, f(q))``
    where ``||A^n|| <= K q^n`` (``q = ||A||_inf`` when that is inside the
    disc of convergence, otherwise a Gelfand-type estimate). The loop also
    stops once the scalar tail is below rounding level of ``f(q)``, since no
    further term can change the floating-point sum.

    Raises
    ------
    SeriesDivergenceError
        If ``r(A) >= R``, or if the tail bound is not met within
        ``max_terms`` terms.
    """
    tol = DEFAULTS.series_tol if tol is None else tol
    max_terms = DEFAULTS.series_max_terms if max_terms is None else max_terms
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    r = spectral_radius(A)
    R = f.radius
    if math.isfinite(R) and r >= R * (1 - DEFAULTS.divergence_rtol):
        raise SeriesDivergenceError("series diverges: spectral radius exceeds convergence radius")
    S = f.coefficient(0) * np.eye(n)
    if not np.any(A):
        return S
    q, logK = _growth_bound(A, r, R)
    if q == 0.0:
        # nilpotent: A^n = 0 from n = size on
        P = np.eye(n)
        for k in range(1, n):
            P = P @ A
            S = S + f.coefficient(k) * P
        return np.maximum(S, 0.0)
    fq = f.scalar_eval(q)
    lq = math.log(q)
    log_target = math.log(tol * max(1.0, fq))
    floor = 4 * np.finfo(float).eps * fq
    P = np.eye(n)
    total, comp = f.coefficient(0), 0.0
    for N in range(1, max_terms + 1):
        P = (P @ A) / q
        lc = f.log_coefficient(N)
        if lc > -math.inf:
            w = math.exp(lc + N * lq)
            S = S + w * P
            # Neumaier-compensated running sum of the scalar terms
            t = total + w
            comp += (total - t) + w if abs(total) >= abs(w) else (w - t) + total
            total = t
        tail = fq - (total + comp)
        if tail <= floor or logK + math.log(tail) <= log_target:
            return np.maximum(S, 0.0)
    raise SeriesDivergenceError(f"tail bound not met within {max_terms} terms")


def check_rfA(f: OperatorSeriesSpec, A) -> dict:
    """Compare ``r(f(A))`` (series + spectral radius) with ``f(r(A))`` (scalar)."""
    lhs = spectral_radius(operator_series(f, A))
    rhs = f.scalar_eval(spectral_radius(A))
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / max(1.0, abs(rhs))}


def pgf_of_operator(d: DistributionSpec, A) -> dict:
    """Spectral radius of ``g_X(A)`` and the residual of ``ln r(g_X(A)) = ln M_X(ln r(A))``."""
    r = spectral_radius(A)
    if r == 0.0:
        raise ValueError("ln r undefined")
    g = operator_series(pgf_series(d), A)
    r_g = spectral_radius(g)
    return {"r_gx": r_g,
            "identity_check": abs(math.log(r_g) - float(d.cgf(math.log(r))))}
