"""Egalitarian welfare of random assignment mechanisms."""
from .egal_lp import EgalSolution, LinearProgram, oev_grid_oracle, solve_lp, solve_oeef, solve_oev
from .gen import (MallowsConfig, cyclic_ordinal_profile, fav_share_profile, kendall_tau,
                  lower_bound_profile, lower_bound_variant, mallows_sample, sample_profile, score_utilities)
from .mechanisms import MechanismOutcome, ps, rsd_exact, rsd_sampled, serial_dictatorship, uniform
from .model import (TOL, Allocation, PropertyReport, Ranking, ValuationProfile, achieved_ratio, agent_utility,
                    check_envy_free, check_favourite_share, check_feasible, check_proportional,
                    check_sd_envy_free, egalitarian_value, misreport_gain, property_report)

__version__ = "0.1.0"
