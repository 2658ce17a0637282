//! Monte Carlo estimators of the six bound coefficients, the assembled
//! portmanteau bound, and the diagnostics built from the same integrands.
//!
//! Every estimator samples one configuration per replicate and evaluates
//! `z ↦ D_zV` and `z ↦ −D_zL⁻¹V` on a deterministic [`ZGrid`] rule, so all
//! quantities of a run share realizations.

mod coefficients;
mod diagnostics;
mod ustat_bounds;
mod zrule;

pub use coefficients::{
    assemble_portmanteau, estimate_coefficients, estimate_cross_coeff, estimate_gaussian_coeffs,
    estimate_poisson_coeffs, CoefficientOptions, CoefficientReport, MixedTarget, VectorFunctional,
};
pub use diagnostics::{
    covariance_identity, holder_beta_criterion, stable_condition_estimates, svp_diagnostics, CovarianceIdentityReport,
    HolderReport, StableWindowReport, SvpReport,
};
pub use ustat_bounds::{
    depoisson_coefficient, rho_n, ustat_gaussian_bound, ustat_gaussian_bound_from_projections, ustat_poisson_bound,
    POISSON_BOUND_CONSTANT,
};
pub use zrule::{ZGrid, ZRule};
