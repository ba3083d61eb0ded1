"""Conjugates of the spectral exponent and of its compositions with CGFs.

For a finite system with a bijective map the counting measure is
invariant, and the functionals here are

    lambda_tilde(phi) = ln M_X(exp(lambda(phi)))
    lambda_hat(phi)   = ln M_X(lambda(phi))

whose conjugates split into a scaled t-entropy term and a one-dimensional
conjugate of the total mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from . import conjugate as cj
from .config import DEFAULTS
from .cramer import DistributionSpec, cgf_exp_conjugate
from .operators import (FiniteDynamicalSystem, lambda_batch, lambda_functional,
                        pgf_of_operator, wco_matrix)

__all__ = [
    "FiniteMeasure",
    "TEntropyOracle",
    "kl_to_uniform",
    "invariant_check",
    "invariant_extreme_points",
    "lambda_conjugate_numeric",
    "t_entropy",
    "lambda_tilde",
    "lambda_tilde_conjugate",
    "lambda_hat",
    "lambda_hat_conjugate",
    "duality_reconstruct",
    "DualityReport",
]


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(w < 0):
            raise ValueError("measure weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def normalized(self) -> "FiniteMeasure":
        a = self.mass
        if a <= 0:
            raise ValueError("cannot normalise the zero measure")
        return FiniteMeasure(self.weights / a)

    def scaled(self, a: float) -> "FiniteMeasure":
        return FiniteMeasure(a * self.weights)


def _weights(nu) -> np.ndarray:
    return nu.weights if isinstance(nu, FiniteMeasure) else FiniteMeasure(nu).weights


def kl_to_uniform(nu) -> float:
    """``KL(nu || uniform)``, a convenient synthetic t-entropy."""
    w = _weights(nu)
    pos = w[w > 0]
    return math.fsum(pos * np.log(pos * w.size))


def invariant_check(s: FiniteDynamicalSystem, nu, atol: float = 1e-12) -> bool:
    """Whether ``nu`` equals its pushforward under the system map."""
    if not s.is_bijective:
        raise ValueError("invariance check needs a bijective map")
    w = _weights(nu)
    push = np.zeros_like(w)
    np.add.at(push, list(s.alpha), w)
    return bool(np.all(np.abs(push - w) <= atol))


def invariant_extreme_points(s: FiniteDynamicalSystem) -> list[np.ndarray]:
    """Uniform probability measures on the cycles of a permutation."""
    out = []
    for cyc in s.cycles:
        w = np.zeros(s.n)
        w[list(cyc)] = 1.0 / len(cyc)
        out.append(w)
    return out


# numeric conjugate of lambda --------------------------------------------------

def _line_search(J, phi, d, B, points=33, zooms=6):
    """Maximise the concave ``s -> J(phi + s d)`` keeping ``phi + s d`` in the box."""
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(d > 0, (B - phi) / d, np.where(d < 0, (-B - phi) / d, np.inf))
        dn = np.where(d > 0, (-B - phi) / d, np.where(d < 0, (B - phi) / d, -np.inf))
    lo, hi = float(np.max(dn)), float(np.min(up))
    best_s, best_v = 0.0, float(J(phi[None, :])[0])
    for _ in range(zooms):
        ss = np.linspace(lo, hi, points)
        vals = J(phi[None, :] + ss[:, None] * d[None, :])
        k = int(np.argmax(vals))
        if vals[k] > best_v:
            best_s, best_v = float(ss[k]), float(vals[k])
        lo, hi = ss[max(k - 1, 0)], ss[min(k + 1, points - 1)]
    return best_s, best_v


def _box_ascent(J, starts, B, sweeps):
    n = starts[0].size
    dirs = [np.eye(n)[i] for i in range(n)]
    dirs += [np.eye(n)[i] - np.eye(n)[j] for i in range(n) for j in range(i + 1, n)]
    best = -math.inf
    for phi in starts:
        phi = np.clip(phi, -B, B)
        val = float(J(phi[None, :])[0])
        for _ in range(sweeps):
            start_val = val
            for d in dirs:
                s, v = _line_search(J, phi, d, B)
                if v > val:
                    phi = np.clip(phi + s * d, -B, B)
                    val = v
            if val - start_val <= 1e-12 * max(1.0, abs(val)):
                break
        best = max(best, val)
    return best


def lambda_conjugate_numeric(s: FiniteDynamicalSystem, nu, cap: float | None = None,
                             boxes: Sequence[float] | None = None,
                             restarts: int | None = None,
                             seed: int | None = None) -> float:
    """``sup_phi {<phi, nu> - lambda(phi)}`` by coordinate and pairwise ascent.

    The box ``[-B, B]^n`` is enlarged along ``boxes``; the value is declared
    ``+inf`` as soon as it exceeds ``cap``, or if it is still growing at the
    largest box. Restarts are drawn from a fixed seed so the result is a
    pure function of the inputs.
    """
    cap = DEFAULTS.lambda_star_cap if cap is None else cap
    boxes = DEFAULTS.lambda_star_boxes if boxes is None else boxes
    restarts = DEFAULTS.lambda_star_restarts if restarts is None else restarts
    seed = DEFAULTS.lambda_star_seed if seed is None else seed
    w = _weights(nu)
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("probability measure required")
    if w.size != s.n:
        raise ValueError("measure and system sizes differ")

    def J(phis):
        return phis @ w - lambda_batch(s, phis)

    rng = np.random.default_rng(seed)
    prev = None
    for B in boxes:
        starts = [np.zeros(s.n)] + [rng.uniform(-B, B, size=s.n) for _ in range(restarts)]
        val = _box_ascent(J, starts, B, DEFAULTS.lambda_star_sweeps)
        if val > cap:
            return math.inf
        if prev is not None and abs(val - prev) <= 1e-9 * max(1.0, abs(val)):
            return val
        prev = val
    return math.inf


# t-entropy -----------------------------------------------------------------

@dataclass(frozen=True)
class TEntropyOracle:
    """Source of t-entropy values on probability measures.

    ``numeric`` computes ``p * lambda*(nu)`` for the given system;
    ``synthetic`` evaluates a caller-supplied convex nonnegative function
    of the probability vector.
    """

    kind: Literal["numeric", "synthetic"] = "numeric"
    func: Callable[[np.ndarray], float] | None = None
    cap: float | None = None

    @classmethod
    def numeric(cls, cap: float | None = None) -> "TEntropyOracle":
        return cls("numeric", None, cap)

    @classmethod
    def synthetic(cls, func: Callable[[np.ndarray], float]) -> "TEntropyOracle":
        return cls("synthetic", func)

    def __call__(self, s: FiniteDynamicalSystem, nu) -> float:
        return t_entropy(self, s, nu)


def t_entropy(oracle: TEntropyOracle, s: FiniteDynamicalSystem, nu) -> float:
    if oracle.kind == "numeric":
        return s.p_exponent * lambda_conjugate_numeric(s, nu, cap=oracle.cap)
    if oracle.kind == "synthetic":
        w = _weights(nu)
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("probability measure required")
        return float(oracle.func(w))
    raise ValueError(f"unknown oracle kind {oracle.kind!r}")


# the two functionals and their conjugates -------------------------------------

def lambda_tilde(s: FiniteDynamicalSystem, d: DistributionSpec) -> float:
    """``ln M_X(exp(lambda(phi)))``, or ``+inf`` when ``r >= R``."""
    r = math.exp(lambda_functional(s))
    if r >= d.convergence_radius:
        return math.inf
    return float(d.cgf(r))


def _scaled_term(oracle, s, nu_tilde) -> tuple[float, float]:
    w = _weights(nu_tilde)
    a = math.fsum(w)
    if a == 0:
        return 0.0, 0.0
    tau = t_entropy(oracle, s, w / a)
    return a, (math.inf if math.isinf(tau) else a * tau / s.p_exponent)


def lambda_tilde_conjugate(oracle: TEntropyOracle, s: FiniteDynamicalSystem,
                           d: DistributionSpec, nu_tilde) -> float:
    """``a tau(nu~/a) / p + (ln M_X o exp)*(a)`` with ``a`` the mass; 0 at the zero measure."""
    a, scaled = _scaled_term(oracle, s, nu_tilde)
    if a == 0:
        return 0.0
    h = cgf_exp_conjugate(d, a)
    if math.isinf(h) or math.isinf(scaled):
        return math.inf
    return scaled + h


def _require_discrete(d):
    if not d.discrete:
        raise ValueError("needs a law on the nonnegative integers")


def lambda_hat(s: FiniteDynamicalSystem, d: DistributionSpec) -> float:
    """``ln M_X(lambda(phi))``, ``+inf`` outside the CGF's domain."""
    _require_discrete(d)
    lam = lambda_functional(s)
    if lam >= d.convergence_radius:
        return math.inf
    return float(d.cgf(lam))


def lambda_hat_check(s: FiniteDynamicalSystem, d: DistributionSpec) -> float:
    """``|lambda_hat - ln r(g_X(e^phi C_alpha))|`` with the operator side built by series."""
    rep = pgf_of_operator(d, wco_matrix(s))
    return abs(lambda_hat(s, d) - math.log(rep["r_gx"]))


def lambda_hat_conjugate(oracle: TEntropyOracle, s: FiniteDynamicalSystem,
                         d: DistributionSpec, nu_hat) -> float:
    """``a tau(nu^/a) / p + (ln M_X)*(a)``; ``-ln p_0`` at the zero measure."""
    _require_discrete(d)
    a, scaled = _scaled_term(oracle, s, nu_hat)
    if a == 0:
        return -float(d.log_pmf(0))
    h = float(d.cramer_transform(a))
    if math.isinf(h) or math.isinf(scaled):
        return math.inf
    return scaled + h


# duality reconstruction ----------------------------------------------------------

@dataclass
class DualityReport:
    which: str
    phi: list[float]
    direct: float
    reconstructed: float | None
    gap: float | None
    a_star: float | None = None
    nu_star: list[float] | None = None
    resolution: float | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"which": self.which, "phi": self.phi, "direct": self.direct,
                "reconstructed": self.reconstructed, "gap": self.gap,
                "a_star": self.a_star, "nu_star": self.nu_star}


def duality_reconstruct(oracle: TEntropyOracle, s: FiniteDynamicalSystem,
                        d: DistributionSpec, which: Literal["tilde", "hat"],
                        a_grid=None, nu_samples: Sequence | None = None) -> DualityReport:
    """Rebuild ``lambda_tilde(phi)`` or ``lambda_hat(phi)`` from its conjugate.

    Computes ``sup_{a, nu} {a <phi, nu> - conj(a nu)}`` over the mass grid
    ``a_grid`` and candidate probability measures: the cycle-uniform
    measures plus any ``nu_samples``. Because ``a >= 0`` the inner sup over
    ``nu`` can be taken first. ``resolution`` is the improvement a golden
    refinement around the best grid mass would add.
    """
    if a_grid is None:
        a_grid = np.linspace(0.0, DEFAULTS.duality_a_max, DEFAULTS.duality_a_points)
    a_grid = np.asarray(a_grid, dtype=float)
    phi = np.asarray(s.phi, dtype=float)
    if which == "tilde":
        direct = lambda_tilde(s, d)

        def h(a):
            return cgf_exp_conjugate(d, a)
        conj = lambda_tilde_conjugate
    elif which == "hat":
        direct = lambda_hat(s, d)

        def h(a):
            return float(d.cramer_transform(a))
        conj = lambda_hat_conjugate
    else:
        raise ValueError("which must be 'tilde' or 'hat'")
    report = DualityReport(which, [float(v) for v in phi], direct, None, None)
    if math.isinf(direct):
        return report

    candidates = invariant_extreme_points(s) + [_weights(v) for v in (nu_samples or [])]
    inner_best, nu_best = -math.inf, None
    for nu in candidates:
        tau = t_entropy(oracle, s, nu)
        if math.isinf(tau):
            continue
        g = float(phi @ nu) - tau / s.p_exponent
        if g > inner_best:
            inner_best, nu_best = g, nu
    if nu_best is None:
        report.reconstructed = -math.inf
        report.gap = math.inf
        return report

    pos = a_grid[a_grid > 0]
    if which == "tilde" and hasattr(d, "cgf_exp_conjugate"):
        hv = np.asarray(d.cgf_exp_conjugate(pos), dtype=float)
    elif which == "hat":
        hv = np.asarray(d.cramer_transform(pos), dtype=float)
    else:
        hv = np.array([h(float(a)) for a in pos])
    with np.errstate(invalid="ignore"):
        vals = np.where(np.isfinite(hv), pos * inner_best - hv, -np.inf)
    best, a_star = -math.inf, None
    if vals.size:
        k = int(np.argmax(vals))
        best, a_star = float(vals[k]), float(pos[k])
    if np.any(a_grid == 0):
        v0 = -conj(oracle, s, d, np.zeros(s.n))
        if v0 >= best:
            best, a_star = v0, 0.0

    k = int(np.searchsorted(a_grid, a_star))
    lo, hi = a_grid[max(k - 1, 0)], a_grid[min(k + 1, a_grid.size - 1)]
    refined = best
    if hi > lo and hi > 0:
        _, negv = cj.golden_section_min(lambda a: -(a * inner_best - h(a)) if a > 0 else -best,
                                        float(lo), float(hi))
        refined = max(best, -negv)

    report.reconstructed = best
    report.gap = direct - best
    report.a_star = a_star
    report.nu_star = [float(v) for v in nu_best]
    report.resolution = refined - best
    return report
