"""Nonnegative laws: generating functions, Cramér transforms and moments.

Three families are supported, all supported on ``[0, inf)``::

    Exponential(mu)      rate mu > 0, MGF radius mu
    Poisson(mu)          mean mu > 0, MGF radius inf
    FiniteDiscrete(p)    P(X = n) = p[n], n = 0..N

Every scalar function accepts floats or numpy arrays.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from scipy.special import gammaln, logsumexp

from . import conjugate as cj
from .config import DEFAULTS

__all__ = [
    "DistributionSpec",
    "Exponential",
    "Poisson",
    "FiniteDiscrete",
    "MomentSequence",
    "parse_distribution",
    "mgf",
    "cgf",
    "cramer_transform",
    "cgf_exp_conjugate",
    "cramer_star_exp_conjugate",
    "moments",
    "pgf",
    "cgf_grid",
]


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


class DistributionSpec:
    """Base class; concrete laws override the closed forms they have."""

    kind: str
    convergence_radius: float
    discrete: bool = False

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def mgf_blows_up(self) -> bool:
        """Whether ``M_X(t) -> inf`` as ``t`` approaches the radius."""
        return True

    # generating functions -------------------------------------------------
    def cgf(self, t):
        raise NotImplementedError

    def mgf(self, t):
        with np.errstate(over="ignore"):
            return _out(np.exp(self.cgf(t)))

    def cramer_transform(self, a):
        raise NotImplementedError

    def log_moments(self, n_max: int) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    mu: float
    kind = "exponential"

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("Exponential rate must be positive")

    @property
    def convergence_radius(self) -> float:
        return float(self.mu)

    @property
    def mean(self) -> float:
        return 1.0 / self.mu

    def cgf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(t < self.mu, np.log(self.mu) - np.log(self.mu - np.minimum(t, self.mu)), np.inf)
        return _out(v)

    def cramer_transform(self, a):
        a = np.asarray(a, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ma = self.mu * a
            v = np.where(a > 0, ma - np.log(np.where(a > 0, ma, 1.0)) - 1.0, np.inf)
        return _out(v)

    def cgf_exp_conjugate(self, a):
        a = np.asarray(a, dtype=float)
        pos = np.where(a > 0, a, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = pos * np.log(self.mu * pos) - (pos + 1.0) * np.log1p(pos)
        v = np.where(a > 0, v, np.where(a == 0, 0.0, np.inf))
        return _out(v)

    def cramer_star_exp_conjugate(self, a):
        """``(a+1)ln(a+1) - a ln mu - a``; finite on ``[-1, inf)``."""
        a = np.asarray(a, dtype=float)
        b = np.where(a > -1, a + 1.0, 1.0)
        v = b * np.log(b) - a * math.log(self.mu) - a
        v = np.where(a > -1, v, np.where(a == -1, math.log(self.mu) + 1.0, np.inf))
        return _out(v)

    def log_moments(self, n_max: int) -> np.ndarray:
        n = np.arange(n_max + 1)
        return gammaln(n + 1) - n * math.log(self.mu)

    def to_json(self) -> dict:
        return {"kind": "exponential", "mu": self.mu}


class _IntegerLaw(DistributionSpec):
    discrete = True

    def log_pmf(self, k):
        raise NotImplementedError

    def pmf(self, k):
        return _out(np.exp(self.log_pmf(k)))

    def pgf(self, s):
        raise NotImplementedError


@dataclass(frozen=True)
class Poisson(_IntegerLaw):
    mu: float
    kind = "poisson"

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("Poisson mean must be positive")

    convergence_radius = math.inf

    @property
    def mean(self) -> float:
        return float(self.mu)

    def log_pmf(self, k):
        k = np.asarray(k, dtype=float)
        return _out(k * math.log(self.mu) - self.mu - gammaln(k + 1))

    def cgf(self, t):
        with np.errstate(over="ignore"):
            return _out(self.mu * np.expm1(np.asarray(t, dtype=float)))

    def pgf(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("pgf argument must be nonnegative")
        with np.errstate(over="ignore"):
            return _out(np.exp(self.mu * (s - 1.0)))

    def cramer_transform(self, a):
        a = np.asarray(a, dtype=float)
        pos = np.where(a > 0, a, 1.0)
        v = self.mu - pos + pos * np.log(pos / self.mu)
        v = np.where(a > 0, v, np.where(a == 0, float(self.mu), np.inf))
        return _out(v)

    def log_moments(self, n_max: int) -> np.ndarray:
        # Touchard recurrence E X^{n+1} = mu * sum_k C(n, k) E X^k, in log space
        out = np.zeros(n_max + 1)
        lmu = math.log(self.mu)
        for n in range(n_max):
            k = np.arange(n + 1)
            logbinom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
            out[n + 1] = lmu + logsumexp(logbinom + out[: n + 1])
        return out

    def to_json(self) -> dict:
        return {"kind": "poisson", "mu": self.mu}


@dataclass(frozen=True)
class FiniteDiscrete(_IntegerLaw):
    p: tuple[float, ...]
    kind = "finite"

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) == 0:
            raise ValueError("empty probability vector")
        if any(v < 0 for v in p):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        object.__setattr__(self, "p", p)

    convergence_radius = math.inf

    @cached_property
    def _p(self) -> np.ndarray:
        return np.asarray(self.p)

    @cached_property
    def support(self) -> tuple[int, int]:
        nz = np.flatnonzero(self._p > 0)
        return int(nz[0]), int(nz[-1])

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.p)), self._p))

    @property
    def mgf_blows_up(self) -> bool:
        return self.support[1] > 0

    def log_pmf(self, k):
        k = np.asarray(k)
        kk = np.clip(k.astype(int), 0, len(self.p) - 1)
        with np.errstate(divide="ignore"):
            v = np.where((k >= 0) & (k < len(self.p)), np.log(self._p[kk]), -np.inf)
        return _out(v)

    def cgf(self, t):
        t = np.asarray(t, dtype=float)
        n = np.arange(len(self.p))
        with np.errstate(divide="ignore"):
            logp = np.log(self._p)
        v = logsumexp(logp + np.multiply.outer(t, n), axis=-1)
        return _out(v)

    def pgf(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("pgf argument must be nonnegative")
        return _out(np.polynomial.polynomial.polyval(s, self._p))

    @cached_property
    def _cgf_samples(self) -> cj.ExtendedRealGridFunction:
        return cgf_grid(self)

    def cramer_transform(self, a):
        a = np.asarray(a, dtype=float)
        lo, hi = self.support
        flat = np.atleast_1d(a).astype(float)
        out = np.full(flat.shape, np.inf)
        inner = (flat > lo) & (flat < hi)
        if np.any(inner):
            vals = flat[inner]
            order = np.argsort(vals)
            uniq, inv = np.unique(vals[order], return_inverse=True)
            if uniq.size >= 2:
                conj = cj.lf_transform(self._cgf_samples, uniq).values[inv]
            else:
                conj = np.array([cj.conjugate_at(self._cgf_samples, uniq[0])] * order.size)
            res = np.empty(vals.size)
            res[order] = conj
            out[inner] = res
        # the supremum over t is a limit at the support boundary
        out[flat == lo] = -math.log(self.p[lo])
        out[flat == hi] = -math.log(self.p[hi])
        return _out(out.reshape(a.shape))

    def log_moments(self, n_max: int) -> np.ndarray:
        j = np.arange(len(self.p))
        with np.errstate(divide="ignore"):
            logp = np.log(self._p)
            logj = np.log(j.astype(float))
        n = np.arange(n_max + 1)
        # 0^0 = 1 keeps the j = 0 atom in the zeroth moment only
        with np.errstate(invalid="ignore"):
            terms = np.multiply.outer(n, logj)
        terms[0, :] = 0.0
        return logsumexp(logp[None, :] + terms, axis=1)

    def to_json(self) -> dict:
        return {"kind": "finite", "p": list(self.p)}


@dataclass(frozen=True)
class MomentSequence:
    """Moments ``E X^n`` for ``n = 0..n_max`` held in log space."""

    log_moments: np.ndarray

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_moments)

    def __len__(self) -> int:
        return len(self.log_moments)

    def __getitem__(self, n: int) -> float:
        return float(self.values[n])

    def is_log_convex(self, atol: float = 1e-12) -> bool:
        lm = self.log_moments
        if lm.size < 3:
            return True
        finite = np.isfinite(lm)
        mid = 2 * lm[1:-1] - lm[:-2] - lm[2:]
        ok = ~(finite[1:-1] & finite[:-2] & finite[2:]) | (mid <= atol * np.maximum(1, np.abs(lm[1:-1])))
        return bool(np.all(ok))


def parse_distribution(obj: dict | str) -> DistributionSpec:
    """Build a law from ``{"kind": ..., "mu" | "p": ...}`` or ``"kind:params"``.

    The string form accepts ``exponential:1``, ``poisson:2`` and
    ``finite:0.25,0.5,0.25``; a JSON object string is also accepted.
    """
    if isinstance(obj, str):
        text = obj.strip()
        if text.startswith("{"):
            obj = json.loads(text)
        else:
            kind, _, params = text.partition(":")
            kind = kind.strip().lower()
            if kind == "finite":
                obj = {"kind": kind, "p": [float(v) for v in params.split(",")]}
            else:
                obj = {"kind": kind, "mu": float(params)}
    kind = str(obj.get("kind", "")).lower()
    if kind == "exponential":
        return Exponential(float(obj["mu"]))
    if kind == "poisson":
        return Poisson(float(obj["mu"]))
    if kind == "finite":
        return FiniteDiscrete(tuple(float(v) for v in obj["p"]))
    raise ValueError(f"unknown distribution kind {kind!r}")


def cgf_grid(d: DistributionSpec, points: int | None = None) -> cj.ExtendedRealGridFunction:
    """The CGF sampled on ``[-20, R - 1e-6]`` (or ``[-20, 20]`` when R is infinite)."""
    points = DEFAULTS.cgf_grid_points if points is None else points
    hi = DEFAULTS.cgf_grid_upper
    if math.isfinite(d.convergence_radius):
        hi = d.convergence_radius - DEFAULTS.cgf_radius_margin
    t = np.linspace(DEFAULTS.cgf_grid_lower, hi, points)
    return cj.ExtendedRealGridFunction(t, np.asarray(d.cgf(t), dtype=float))


def composed_cgf_grid(d: DistributionSpec, points: int | None = None) -> cj.ExtendedRealGridFunction:
    """Samples of ``t -> ln M_X(e^t)`` on ``[-20, min(ln R - 1e-6, 3)]``."""
    points = DEFAULTS.cgf_grid_points if points is None else points
    hi = DEFAULTS.composed_grid_upper
    if math.isfinite(d.convergence_radius):
        hi = min(hi, math.log(d.convergence_radius) - DEFAULTS.cgf_radius_margin)
    t = np.linspace(DEFAULTS.cgf_grid_lower, hi, points)
    return cj.ExtendedRealGridFunction(t, np.asarray(d.cgf(np.exp(t)), dtype=float))


# module-level operations ---------------------------------------------------

def mgf(d: DistributionSpec, t):
    return d.mgf(t)


def cgf(d: DistributionSpec, t):
    return d.cgf(t)


def cramer_transform(d: DistributionSpec, a):
    """Legendre-Fenchel transform of the CGF; zero exactly at ``a = E X``."""
    return d.cramer_transform(a)


def cgf_exp_conjugate(d: DistributionSpec, a: float,
                      method: Literal["auto", "compose", "grid"] = "auto") -> float:
    """Conjugate of ``t -> ln M_X(e^t)``.

    ``auto`` uses the closed form when the law has one and otherwise
    minimises ``cramer(alpha) - a ln alpha`` over ``alpha > 0`` and adds
    ``exp*(a)``. ``grid`` conjugates the sampled composition directly and
    serves as an independent check.
    """
    if a < 0:
        return math.inf
    if a == 0:
        return 0.0
    if method == "auto" and hasattr(d, "cgf_exp_conjugate"):
        return float(d.cgf_exp_conjugate(a))
    if method in ("auto", "compose"):
        return cj.compose_with_exp_conjugate(lambda al: float(d.cramer_transform(al)), a, "positive")
    if method == "grid":
        return cj.conjugate_at(composed_cgf_grid(d), a)
    raise ValueError(f"unknown method {method!r}")


def cramer_star_exp_conjugate(d: DistributionSpec, a,
                              method: Literal["auto", "grid"] = "auto"):
    """Conjugate of ``t -> (ln M_X)*(e^t)``.

    Closed form for the exponential law; otherwise (or with
    ``method="grid"``) the composition is sampled on ``t in [-20, 20]`` and
    conjugated numerically.
    """
    if method == "auto" and hasattr(d, "cramer_star_exp_conjugate"):
        return d.cramer_star_exp_conjugate(a)
    t = np.linspace(DEFAULTS.cgf_grid_lower, DEFAULTS.cgf_grid_upper, DEFAULTS.cgf_grid_points)
    vals = np.asarray(d.cramer_transform(np.exp(t)), dtype=float)
    g = cj.ExtendedRealGridFunction(t, vals)
    a_arr = np.atleast_1d(np.asarray(a, dtype=float))
    res = np.array([cj.conjugate_at(g, v) for v in a_arr])
    return _out(res.reshape(np.shape(a)))


def moments(d: DistributionSpec, n_max: int) -> MomentSequence:
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    return MomentSequence(np.asarray(d.log_moments(n_max), dtype=float))


def pgf(d: DistributionSpec, s):
    if not d.discrete:
        raise ValueError("pgf requires a law on the nonnegative integers")
    return d.pgf(s)
