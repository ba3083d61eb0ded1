"""Cramér transforms, spectral exponents of weighted composition operators
and their t-entropy conjugates on finite dynamical systems."""
from .conjugate import (ExtendedRealGridFunction, biconjugate, compose_with_exp_conjugate,
                        conjugate_at, exp_conjugate, lf_transform)
from .cramer import (Exponential, FiniteDiscrete, Poisson, cgf, cgf_exp_conjugate,
                     cramer_star_exp_conjugate, cramer_transform, mgf, moments,
                     parse_distribution, pgf)
from .operators import (FiniteDynamicalSystem, OperatorSeriesSpec, SeriesDivergenceError,
                        check_rfA, lambda_functional, operator_series, pgf_of_operator,
                        spectral_radius, wco_matrix)
from .tentropy import (FiniteMeasure, TEntropyOracle, duality_reconstruct, invariant_check,
                       lambda_conjugate_numeric, lambda_hat, lambda_hat_conjugate,
                       lambda_tilde, lambda_tilde_conjugate, t_entropy)
from .tilting import contraction_discrete, min_entropy_given_mean, min_form3

__version__ = "0.1.0"
