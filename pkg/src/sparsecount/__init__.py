"""Bayesian multiple testing for quasi-sparse Poisson counts with one-group shrinkage priors."""

from .errors import ConvergenceError, DomainError, NonIntegrableError, RegimeError
from .posterior import (Method, ShrinkageCache, ShrinkageEstimate, TwoGroupPosterior,
                        kappa_log_density_unnormalized, kappa_tail_probability,
                        posterior_kappa_mean_closed_form, posterior_kappa_mean_quadrature,
                        posterior_shrinkage, posterior_theta_mean, two_group_posterior)
from .priors import (Family, GaussHypergeometricPrior, GlobalLocalPrior, check_assumption2,
                     gh_prior_density, make_gdp, make_generic, make_tpbn, prior_from_config)
from .rules import (DecisionOutcome, DecisionSet, RuleTag, TauHatConfig, one_group_decide_eb,
                    one_group_decide_tuned, oracle_decide, oracle_threshold, tau_hat)
from .samplers import GeneratedDataset, TwoGroupModel, generate_two_group, nb_cdf, nb_pmf
from .specfun import HypergeometricEval, gauss_2f1, log_beta, log_binom, log_gamma

__version__ = "0.1.0"
