from ._core import (
    AvarError,
    SAConstants,
    average_reward,
    batch_means,
    chain_period,
    constants_violations,
    delta_one,
    delta_two,
    eta,
    exact_covariance,
    exact_kappa,
    exact_kappa_truncated,
    fit_loglog_slope,
    is_valid_chain,
    kappa_mu,
    min_approx_error,
    run_covariance,
    run_lfa,
    run_stationary,
    run_sweep,
    run_tabular,
    simulate,
    solve_poisson,
    stationary_distribution,
    suggest_constants,
    theorem_bound,
    theta_star,
)

__all__ = [name for name in dir() if not name.startswith("_")]
