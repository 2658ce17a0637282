//! Disk graphs on Poisson samples, induced pattern counts, their kernels and
//! projections, and the mixed Poisson/Gaussian regime experiment.

mod disk;
mod experiment;
mod functional;
mod integrals;
mod pattern;

pub use disk::{adjacent, count_induced, induced_mask, DiskGraph};
pub use experiment::{
    depoisson_gap, depoissonized_counts, rate_fits, run_mixed_experiment, DepoissonGap, MixedExperiment, MixedRow,
    PatternRow, RateFit, RegimeSpec, H1_DICTIONARY, LIMIT_MC_SAMPLES,
};
pub use functional::PatternFunctional;
pub use integrals::{
    density_power_integral, limiting_poisson_parameter, pattern_kernel, pattern_moments, pattern_projection,
    unit_pattern_integral, PatternMoments, ProjectionValue,
};
pub use pattern::{GraphPattern, MAX_PATTERN_ORDER};
