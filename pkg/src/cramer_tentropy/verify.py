"""Acceptance sweeps.

Each ``criterion_*`` function runs one end-to-end check and returns a
:class:`CriterionResult` holding the worst residual seen and the threshold
it is judged against. Randomised sweeps draw from
``default_rng([seed, criterion_number])`` so a seed pins every report.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from . import conjugate as cj
from . import cramer as cr
from . import operators as op
from . import tentropy as te
from . import tilting as tl

DEFAULT_SEED = 7


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    residual: float
    threshold: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:2d} {self.name}: "
                f"residual={self.residual:.3e} threshold={self.threshold:.1e}")

    def to_json(self) -> dict:
        d = asdict(self)
        d["residual"] = _json_float(self.residual)
        return d


def _json_float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _rng(seed: int, number: int) -> np.random.Generator:
    return np.random.default_rng([seed, number])


def _result(number, name, residual, threshold, ok=True, **detail):
    return CriterionResult(number, name, bool(ok and residual < threshold), float(residual),
                           threshold, detail)


# 1 ---------------------------------------------------------------------------

def criterion_cramer_closed_forms(seed: int = DEFAULT_SEED) -> CriterionResult:
    a = np.linspace(0.05, 10.0, 200)
    worst = {}
    for d, closed in [
        (cr.Exponential(1.0), lambda a: 1.0 * a - np.log(1.0 * a) - 1.0),
        (cr.Poisson(2.0), lambda a: 2.0 - a + a * np.log(a / 2.0)),
    ]:
        num = cj.lf_transform(cr.cgf_grid(d), a).values
        worst[d.kind] = float(np.max(np.abs(num - closed(a))))
    return _result(1, "numeric Cramér transform vs closed forms", max(worst.values()), 1e-3, **worst)


# 2 ---------------------------------------------------------------------------

def criterion_composition_rule(seed: int = DEFAULT_SEED) -> CriterionResult:
    grid_res = 0.0
    for d in (cr.Exponential(1.0), cr.Poisson(2.0)):
        g = cr.composed_cgf_grid(d)
        for a in (0.25, 0.5, 1.0, 2.0, 4.0):
            via = cj.compose_with_exp_conjugate(lambda al: float(d.cramer_transform(al)), a)
            grid_res = max(grid_res, abs(via - cj.conjugate_at(g, a)))
    closed_res = 0.0
    d = cr.Exponential(1.0)
    for a in (0.25, 0.5, 1.0, 2.0, 4.0):
        via = cj.compose_with_exp_conjugate(lambda al: float(d.cramer_transform(al)), a)
        closed_res = max(closed_res, abs(via - (a * math.log(a) - (a + 1) * math.log(a + 1))))
    ok = closed_res < 1e-6
    return _result(2, "conjugate of CGF o exp: min formula vs grid and closed form",
                   grid_res, 1e-4, ok=ok, closed_form_residual=closed_res)


# 3 ---------------------------------------------------------------------------

def criterion_rate_exp_conjugate(seed: int = DEFAULT_SEED) -> CriterionResult:
    a = np.linspace(0.0, 10.0, 101)
    exact_res, num_res = 0.0, 0.0
    for mu in (1.0, 2.0, 5.0):
        d = cr.Exponential(mu)
        closed = np.asarray(cr.cramer_star_exp_conjugate(d, a))
        by_hand = np.array([(v + 1) * math.log(v + 1) - v * math.log(mu) - v for v in a])
        exact_res = max(exact_res, float(np.max(np.abs(closed - by_hand) / np.maximum(1, np.abs(by_hand)))))
        numeric = np.asarray(cr.cramer_star_exp_conjugate(d, a, method="grid"))
        num_res = max(num_res, float(np.max(np.abs(numeric - closed))))
    # "exact" agreement is judged at a few ulps
    return _result(3, "conjugate of Cramér transform o exp", num_res, 1e-4,
                   ok=exact_res <= 1e-14, closed_vs_closed=exact_res)


# 4 ---------------------------------------------------------------------------

def criterion_entropy_identity(seed: int = DEFAULT_SEED) -> CriterionResult:
    val_res, tv_res = 0.0, 0.0
    for a in (0.5, 1.0, 2.0, 3.0):
        sol = tl.min_entropy_given_mean(a, 400)
        target = a * math.log(a) - (a + 1) * math.log(a + 1)
        val_res = max(val_res, abs(sol.value - target))
        n = np.arange(sol.N + 1)
        geo = (1 / (a + 1)) * (a / (a + 1)) ** n
        tv = 0.5 * (np.sum(np.abs(sol.optimum.t - geo)) + (a / (a + 1)) ** (sol.N + 1))
        tv_res = max(tv_res, float(tv))
    return _result(4, "minimal entropy at prescribed mean", val_res, 1e-4, ok=tv_res < 1e-5, tv_to_geometric=tv_res)


# 5 ---------------------------------------------------------------------------

def criterion_moment_formula(seed: int = DEFAULT_SEED) -> CriterionResult:
    res = 0.0
    for mu in (1.0, 2.0):
        d = cr.Exponential(mu)
        for a in (0.5, 1.0, 2.0):
            res = max(res, abs(tl.min_form3(d, a, 300).value - cr.cgf_exp_conjugate(d, a)))
    return _result(5, "moment-sequence entropy formula vs conjugate", res, 1e-3)


# 6 ---------------------------------------------------------------------------

def criterion_contraction(seed: int = DEFAULT_SEED) -> CriterionResult:
    res = 0.0
    for mu in (1.0, 2.0):
        d = cr.Poisson(mu)
        for a in (0.5, 1.0, 2.0, 4.0):
            res = max(res, abs(tl.contraction_discrete(d, a, 100).value - float(d.cramer_transform(a))))
    return _result(6, "contraction principle for Poisson laws", res, 1e-5)


# 7 ---------------------------------------------------------------------------

def random_positive_matrix(rng, radius: float, n: int | None = None) -> np.ndarray:
    n = int(rng.integers(1, 9)) if n is None else n
    M = rng.uniform(0.05, 1.0, size=(n, n))
    return M * (radius / op.spectral_radius(M))


def criterion_spectral_mapping(seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = _rng(seed, 7)
    worst = {}
    for f, top in ((op.exp_series(), 5.0), (op.geometric_series(5.0), 4.5), (op.cosh_series(), 5.0)):
        w = 0.0
        for _ in range(100):
            A = random_positive_matrix(rng, rng.uniform(0.01, top))
            w = max(w, op.check_rfA(f, A)["residual"])
        worst[f.name] = w
    raised = 0
    g = op.geometric_series(5.0)
    for i in range(20):
        A = random_positive_matrix(rng, 5.0 if i < 5 else rng.uniform(5.0, 10.0))
        try:
            op.operator_series(g, A)
        except op.SeriesDivergenceError:
            raised += 1
    return _result(7, "r(f(A)) = f(r(A)) and divergence detection", max(worst.values()), 1e-8,
                   ok=raised == 20, divergence_raised=raised, **worst)


# 8 ---------------------------------------------------------------------------

def criterion_cycle_mean(seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = _rng(seed, 8)
    res = 0.0
    for _ in range(500):
        s = op.random_permutation_system(rng, int(rng.integers(1, 13)), (-2.0, 2.0))
        res = max(res, abs(op.lambda_functional(s, "cycles") - op.lambda_functional(s, "numeric")))
    return _result(8, "cycle-mean formula vs numeric spectral radius", res, 1e-10)


# 9 ---------------------------------------------------------------------------

def criterion_pgf_operator(seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = _rng(seed, 9)
    res = 0.0
    for _ in range(100):
        s = op.random_permutation_system(rng, int(rng.integers(1, 9)))
        d = cr.Poisson(float(rng.uniform(0.5, 3.0)))
        res = max(res, op.pgf_of_operator(d, op.wco_matrix(s))["identity_check"])
    return _result(9, "ln r(g_X(A)) = ln M_X(ln r(A))", res, 1e-8)


# 10 --------------------------------------------------------------------------

def random_invariant_measure(rng, s: op.FiniteDynamicalSystem) -> np.ndarray:
    ext = te.invariant_extreme_points(s)
    mix = rng.dirichlet(np.ones(len(ext)))
    return np.sum([m * e for m, e in zip(mix, ext)], axis=0)


def tv_to_invariant_set(s: op.FiniteDynamicalSystem, nu: np.ndarray) -> float:
    """LP: min over invariant probability mu of ||nu - mu||_1 / 2."""
    n = s.n
    c = np.concatenate([np.zeros(n), 0.5 * np.ones(n)])
    A_ub = np.block([[np.eye(n), -np.eye(n)], [-np.eye(n), -np.eye(n)]])
    b_ub = np.concatenate([nu, -nu])
    rows = [np.concatenate([np.ones(n), np.zeros(n)])]
    for cyc in s.cycles:
        for i, j in zip(cyc, cyc[1:]):
            r = np.zeros(2 * n)
            r[i], r[j] = 1.0, -1.0
            rows.append(r)
    b_eq = np.zeros(len(rows))
    b_eq[0] = 1.0
    sol = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=np.array(rows), b_eq=b_eq, bounds=(0, None))
    return float(sol.fun)


def criterion_tentropy_regimes(seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = _rng(seed, 10)
    zero_res = 0.0
    for _ in range(50):
        s = op.random_permutation_system(rng, int(rng.integers(1, 9)))
        nu = random_invariant_measure(rng, s)
        zero_res = max(zero_res, abs(te.lambda_conjugate_numeric(s, nu)))
    exceeded, tried = 0, 0
    while tried < 50:
        s = op.random_permutation_system(rng, int(rng.integers(2, 9)))
        long = [c for c in s.cycles if len(c) >= 2]
        if not long:
            continue
        cyc = long[int(rng.integers(len(long)))]
        point = np.zeros(s.n)
        point[cyc[int(rng.integers(len(cyc)))]] = 1.0
        w = rng.uniform(0.2, 1.0)
        nu = (1 - w) * random_invariant_measure(rng, s) + w * point
        if tv_to_invariant_set(s, nu) < 0.1:
            continue
        tried += 1
        exceeded += math.isinf(te.lambda_conjugate_numeric(s, nu, cap=1e3))
    return _result(10, "numeric lambda* vanishes on invariant, exceeds cap off it",
                   zero_res, 1e-5, ok=exceeded == 50, non_invariant_exceeding_cap=exceeded)


# 11 --------------------------------------------------------------------------

def criterion_duality(seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = _rng(seed, 11)
    five = op.random_permutation_system(rng, 5, (-2.0, -0.5))
    systems = {"swap": op.FiniteDynamicalSystem.swap((-1.0, -2.0)), "perm5": five}
    oracle = te.TEntropyOracle.numeric()
    gaps = {}
    weak_ok = True
    for which, laws in (("tilde", (cr.Exponential(1.0), cr.Exponential(5.0))),
                        ("hat", (cr.Poisson(1.0), cr.Poisson(2.0)))):
        for d in laws:
            for name, s in systems.items():
                samples = [random_invariant_measure(rng, s) for _ in range(3)]
                rep = te.duality_reconstruct(oracle, s, d, which, nu_samples=samples)
                gaps[f"{which}/{d.kind}({d.mu:g})/{name}"] = rep.gap
                weak_ok &= rep.gap >= -1e-9
    zero_ok = True
    for s in systems.values():
        z = np.zeros(s.n)
        for d in (cr.Exponential(1.0), cr.Exponential(5.0)):
            zero_ok &= te.lambda_tilde_conjugate(oracle, s, d, z) == 0.0
        for d in (cr.Poisson(1.0), cr.Poisson(2.0)):
            zero_ok &= te.lambda_hat_conjugate(oracle, s, d, z) == d.mu
    return _result(11, "duality reconstruction for the tilde and hat functionals",
                   max(abs(g) for g in gaps.values()), 1e-3, ok=weak_ok and zero_ok,
                   zero_measure_clauses=bool(zero_ok), weak_duality=bool(weak_ok), gaps=gaps)


# 12 --------------------------------------------------------------------------

def criterion_convexity(seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = _rng(seed, 12)
    lam = 0.0
    for _ in range(200):
        s = op.random_permutation_system(rng, int(rng.integers(1, 9)), (-2.0, 2.0))
        p1, p2 = rng.uniform(-2, 2, s.n), rng.uniform(-2, 2, s.n)
        l1 = op.lambda_functional(s.with_phi(p1), "numeric")
        l2 = op.lambda_functional(s.with_phi(p2), "numeric")
        lm = op.lambda_functional(s.with_phi(0.5 * (p1 + p2)), "numeric")
        lam = max(lam, lm - 0.5 * (l1 + l2))
    laws = [cr.Exponential(1.5), cr.Poisson(2.0), cr.FiniteDiscrete((0.2, 0.3, 0.1, 0.4))]
    cram = 0.0
    for i in range(200):
        d = laws[i % 3]
        hi = 3.0 if d.kind == "finite" else 6.0
        x, y = rng.uniform(0.01, hi, 2)
        fx, fy = float(d.cramer_transform(x)), float(d.cramer_transform(y))
        fm = float(d.cramer_transform(0.5 * (x + y)))
        cram = max(cram, fm - 0.5 * (fx + fy))
    persp = 0.0
    tau = te.kl_to_uniform

    def scaled(v):
        a = v.sum()
        return a * tau(v / a)

    for _ in range(200):
        n = int(rng.integers(2, 7))
        v1 = rng.uniform(0, 1, n) * rng.uniform(0.1, 5)
        v2 = rng.uniform(0, 1, n) * rng.uniform(0.1, 5)
        persp = max(persp, scaled(0.5 * (v1 + v2)) - 0.5 * (scaled(v1) + scaled(v2)))
    return _result(12, "midpoint convexity of lambda, Cramér transforms, scaled t-entropy",
                   max(lam, cram, persp, 0.0), 1e-8,
                   lambda_excess=lam, cramer_excess=cram, perspective_excess=persp)


CRITERIA: list[Callable[[int], CriterionResult]] = [
    criterion_cramer_closed_forms,
    criterion_composition_rule,
    criterion_rate_exp_conjugate,
    criterion_entropy_identity,
    criterion_moment_formula,
    criterion_contraction,
    criterion_spectral_mapping,
    criterion_cycle_mean,
    criterion_pgf_operator,
    criterion_tentropy_regimes,
    criterion_duality,
    criterion_convexity,
]


def run_criterion(func: Callable[[int], CriterionResult], seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = func(seed)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(seed: int = DEFAULT_SEED) -> list[CriterionResult]:
    return [run_criterion(f, seed) for f in CRITERIA]
