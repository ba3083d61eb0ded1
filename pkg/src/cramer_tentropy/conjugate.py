"""One-dimensional extended-real convex calculus.

Grid functions carry ``+inf`` explicitly; conjugation skips those points.
The fast Legendre transform walks the lower convex hull of the finite
samples, the direct transform is the O(n*m) reference used to check it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .config import DEFAULTS

__all__ = [
    "ExtendedReal",
    "ExtendedRealGridFunction",
    "ClosedFormConvexFunction",
    "ConvexEnvelopeWarning",
    "lower_hull",
    "lf_transform",
    "conjugate_at",
    "biconjugate",
    "exp_conjugate",
    "compose_with_exp_conjugate",
    "golden_section_min",
]

# Values live in (-inf, +inf]; a plain float with math.inf already has the
# required total arithmetic (x + inf = inf, min(x, inf) = x).
ExtendedReal = float


class ConvexEnvelopeWarning(UserWarning):
    """Raised (as a warning) when a biconjugate is taken of non-convex data."""


@dataclass(frozen=True, eq=False)
class ExtendedRealGridFunction:
    """A function sampled on a strictly increasing 1-D grid.

    ``values`` may contain ``+inf``; the finite entries must form one
    contiguous index block (convex effective domain). ``meta`` holds
    diagnostics such as the ``unreliable_edge`` mask produced by
    :func:`lf_transform`.
    """

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid needs at least 2 points")
        if values.shape != grid.shape:
            raise ValueError("grid and values must have the same length")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.isnan(values)) or np.any(values == -np.inf):
            raise ValueError("values must be real or +inf")
        finite = np.flatnonzero(np.isfinite(values))
        if finite.size and finite[-1] - finite[0] + 1 != finite.size:
            raise ValueError("effective domain must be a contiguous index range")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func: Callable, grid) -> "ExtendedRealGridFunction":
        grid = np.asarray(grid, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            vals = np.array([func(x) for x in grid], dtype=float)
        return cls(grid, vals)

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def domain(self) -> tuple[float, float] | None:
        idx = np.flatnonzero(self.finite_mask)
        if idx.size == 0:
            return None
        return float(self.grid[idx[0]]), float(self.grid[idx[-1]])

    @property
    def step(self) -> float:
        return float(np.max(np.diff(self.grid)))

    def __call__(self, x):
        """Piecewise-linear interpolation inside the effective domain, +inf outside."""
        x = np.asarray(x, dtype=float)
        dom = self.domain
        out = np.full(x.shape, np.inf)
        if dom is not None:
            m = self.finite_mask
            inside = (x >= dom[0]) & (x <= dom[1])
            out[inside] = np.interp(x[inside], self.grid[m], self.values[m])
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ClosedFormConvexFunction:
    """A convex function given by a formula (``exp``, a CGF, or any callable)."""

    kind: Literal["exp", "cgf", "custom"]
    func: Callable[[float], float]

    def __call__(self, x: float) -> ExtendedReal:
        return float(self.func(x))

    def sample(self, grid) -> ExtendedRealGridFunction:
        return ExtendedRealGridFunction.from_callable(self.func, grid)

    def spot_check_convexity(self, lo: float, hi: float, n: int = 200,
                             rng: np.random.Generator | None = None,
                             atol: float = 1e-10) -> bool:
        """Midpoint convexity on random pairs drawn from ``[lo, hi]``."""
        rng = np.random.default_rng(0) if rng is None else rng
        xs = rng.uniform(lo, hi, size=(n, 2))
        for x, y in xs:
            fx, fy, fm = self(x), self(y), self(0.5 * (x + y))
            if math.isinf(fx) or math.isinf(fy):
                continue
            if fm > 0.5 * (fx + fy) + atol * max(1.0, abs(fx), abs(fy)):
                return False
        return True


def exp_conjugate(c: float) -> ExtendedReal:
    """Convex conjugate of ``exp``: ``c ln c - c``, 0 at 0, +inf for c < 0."""
    if c > 0:
        return c * math.log(c) - c
    if c == 0:
        return 0.0
    return math.inf


def lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the vertices of the lower convex hull of sorted points.

    Andrew's monotone chain; collinear interior points are dropped so the
    returned slopes are strictly increasing.
    """
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def _finite_part(f: ExtendedRealGridFunction):
    idx = np.flatnonzero(f.finite_mask)
    if idx.size == 0:
        raise ValueError("empty effective domain")
    return idx, f.grid[idx], f.values[idx]


def lf_transform(f: ExtendedRealGridFunction, dual_grid,
                 method: Literal["fast", "direct"] = "fast") -> ExtendedRealGridFunction:
    """Discrete Legendre-Fenchel transform ``a -> max_x (a x - f(x))``.

    Parameters
    ----------
    f : ExtendedRealGridFunction
        Sampled function; ``+inf`` samples are skipped.
    dual_grid : array_like
        Strictly increasing slopes at which to evaluate the conjugate.
    method : {"fast", "direct"}
        ``"fast"`` locates each slope on the lower hull (exact for the grid
        data), ``"direct"`` is the brute-force reference.

    Returns
    -------
    ExtendedRealGridFunction
        Conjugate on ``dual_grid``. ``meta["unreliable_edge"]`` marks slopes
        whose maximiser is the first or last finite sample, where the true
        supremum may lie outside the sampled window; ``meta["argmax"]``
        holds the maximising abscissae.
    """
    idx, x, y = _finite_part(f)
    a = np.asarray(dual_grid, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise ValueError("dual grid needs at least 2 points; use conjugate_at for one slope")

    if method == "direct":
        arg = np.empty(a.size, dtype=int)
        chunk = max(1, 4_000_000 // x.size)
        for s in range(0, a.size, chunk):
            block = a[s:s + chunk, None] * x[None, :] - y[None, :]
            arg[s:s + chunk] = np.argmax(block, axis=1)
    elif method == "fast":
        h = lower_hull(x, y)
        slopes = np.diff(y[h]) / np.diff(x[h])
        # slope a is maximised at the hull vertex where slopes cross a
        arg = h[np.searchsorted(slopes, a, side="left")]
    else:
        raise ValueError(f"unknown method {method!r}")

    vals = a * x[arg] - y[arg]
    edge = (arg == 0) | (arg == x.size - 1)
    meta = {"unreliable_edge": edge, "argmax": x[arg]}
    return ExtendedRealGridFunction(a, vals, meta)


def conjugate_at(f: ExtendedRealGridFunction, a: float) -> ExtendedReal:
    """Value of the discrete conjugate at a single slope ``a``."""
    _, x, y = _finite_part(f)
    return float(np.max(a * x - y))


def _is_convex_samples(x, y, hull_vals, rtol=1e-12) -> bool:
    scale = max(1.0, float(np.max(np.abs(y))))
    return bool(np.all(y <= hull_vals + rtol * scale))


def biconjugate(f: ExtendedRealGridFunction) -> ExtendedRealGridFunction:
    """``(f*)*`` on ``f``'s own grid.

    The intermediate dual grid is the set of lower-hull slopes (padded by
    one on each side), which makes the round trip exact for grid data: the
    result is the lower convex envelope on the effective domain and ``+inf``
    outside it. Non-convex input triggers :class:`ConvexEnvelopeWarning` and
    sets ``meta["convex_envelope"]``.
    """
    idx, x, y = _finite_part(f)
    h = lower_hull(x, y)
    if h.size >= 2:
        slopes = np.unique(np.diff(y[h]) / np.diff(x[h]))
        dual = np.concatenate([[slopes[0] - 1.0], slopes, [slopes[-1] + 1.0]])
    else:
        dual = np.array([-1.0, 1.0])
    fstar = lf_transform(f, dual)
    back = lf_transform(fstar, f.grid)
    vals = np.full(f.grid.shape, np.inf)
    vals[idx] = back.values[idx]

    envelope = not _is_convex_samples(x, y, vals[idx])
    if envelope:
        warnings.warn("biconjugate of non-convex input is the convex envelope",
                      ConvexEnvelopeWarning, stacklevel=2)
    return ExtendedRealGridFunction(f.grid, vals, {"convex_envelope": envelope})


def golden_section_min(func: Callable[[float], float], lo: float, hi: float,
                       rel_width: float | None = None,
                       prescan: int | None = None) -> tuple[float, float]:
    """Minimise a unimodal extended-real function on ``[lo, hi]``.

    A coarse prescan picks the bracket around the best sample (this keeps
    ``+inf`` plateaus out of the golden-section comparisons), then the
    bracket is shrunk until its width is ``rel_width * max(1, |x|)``.
    Returns ``(argmin, min)``.
    """
    rel_width = DEFAULTS.golden_rel_width if rel_width is None else rel_width
    prescan = DEFAULTS.golden_prescan_points if prescan is None else prescan
    xs = np.linspace(lo, hi, prescan)
    fs = np.array([func(v) for v in xs], dtype=float)
    fs[np.isnan(fs)] = np.inf
    k = int(np.argmin(fs))
    if not np.isfinite(fs[k]):
        return float(xs[k]), math.inf
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, prescan - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = func(c), func(d)
    while b - a > rel_width * max(1.0, abs(a), abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = func(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    if fs[k] < best_f:
        best_x, best_f = float(xs[k]), float(fs[k])
    return float(best_x), float(best_f)


def compose_with_exp_conjugate(f_star: Callable[[float], float], a: float,
                               minimizer_domain: Literal["positive", "nonnegative"] = "positive",
                               ) -> ExtendedReal:
    """Conjugate of ``f o exp`` expressed through ``f*``.

    For ``a > 0`` this is ``min_{alpha>0} {f*(alpha) - a ln alpha} + exp*(a)``,
    searched by golden section over ``ln alpha``. At ``a = 0`` the value is
    ``min f*`` over ``alpha > 0`` (``"positive"``) or ``alpha >= 0``
    (``"nonnegative"``, which also tries ``f*(0)``). Negative ``a`` lies
    outside the effective domain and yields ``+inf``.
    """
    if a < 0:
        return math.inf
    lo, hi = DEFAULTS.golden_log_lo, DEFAULTS.golden_log_hi

    def objective(u: float) -> float:
        v = f_star(math.exp(u))
        return v - a * u if math.isfinite(v) else math.inf

    _, best = golden_section_min(objective, lo, hi)
    if a == 0:
        if minimizer_domain == "nonnegative":
            best = min(best, float(f_star(0.0)))
        return best
    if math.isinf(best):
        return math.inf
    return best + exp_conjugate(a)
