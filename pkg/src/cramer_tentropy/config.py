"""Numeric defaults shared by every module.

All grids, tolerances and truncations live here so they can be audited in
one place. Functions accept ``None`` for these parameters and fall back to
:data:`DEFAULTS`; the CLI overrides them through explicit flags.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Defaults:
    # CGF sampling for numeric conjugation
    cgf_grid_lower: float = -20.0
    cgf_grid_upper: float = 20.0
    cgf_grid_points: int = 20001
    cgf_radius_margin: float = 1e-6
    # upper abscissa for t -> ln M(e^t) samples when the radius is infinite
    composed_grid_upper: float = 3.0

    # golden-section minimisation over ln(alpha)
    golden_log_lo: float = math.log(1e-8)
    golden_log_hi: float = math.log(1e8)
    golden_rel_width: float = 1e-10
    golden_prescan_points: int = 401

    # exponential tilting
    truncation: int = 300
    tilt_bracket: float = 50.0
    tilt_iterations: int = 200
    zero_threshold: float = 1e-300

    # spectral radius
    power_tol: float = 1e-13
    power_max_iter: int = 20000
    power_stall_check: int = 100
    gelfand_squarings: int = 64

    # operator power series
    series_tol: float = 1e-13
    series_max_terms: int = 10000
    divergence_rtol: float = 1e-12

    # numeric conjugate of the spectral exponent
    lambda_star_cap: float = 1e3
    lambda_star_boxes: tuple[float, ...] = (10.0, 30.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7)
    lambda_star_restarts: int = 2
    lambda_star_seed: int = 0
    lambda_star_sweeps: int = 40

    # duality reconstruction
    duality_a_max: float = 20.0
    duality_a_points: int = 2001


DEFAULTS = Defaults()
