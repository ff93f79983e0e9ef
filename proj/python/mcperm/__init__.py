"""Monte Carlo permutation tests with budget-aware power analysis.

Significance levels may be given as strings ("1/20", "0.05"), which keep the
exact fraction, or as floats.
"""

from ._mcperm import (
    CapacityError,
    DomainError,
    NumericError,
    PreconditionError,
    ReplicationError,
    UnsupportedRangeError,
    ValidationError,
    aligned_budgets,
    binomial_cdf,
    binomial_pmf,
    critical_count,
    decrease_bound,
    exact_power,
    exceedance_prob,
    is_local_max_index,
    mc_power,
    next_aligned_budget,
    permutation_test,
    power_curve,
    regularized_incomplete_beta,
    rejection_threshold,
    scenario_defaults,
    simulate,
    step_type,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
