//! Multiple integrals, U-statistics, chaos projections and the Malliavin
//! operators `D` and `DL⁻¹`.

mod cells;
mod decomposition;
mod functional;
mod isometry;
mod ustat;

pub use cells::{
    distinct_sum, multiple_integral_counts, multiple_integral_eval, product_formula_rhs, sample_counts, CellGrid,
    PreparedKernel,
};
pub use decomposition::{CellChaos, CellUStatistic, ChaosDecomposition};
pub use functional::{
    evaluate, mall_d, mall_dlinv, Affine, ClosureFunctional, Functional, Prepared, Structure, WindowCount,
};
pub use isometry::{verify_isometry, IsometryReport};
pub use ustat::{ustat_eval, Projection, UStatistic, QUADRATURE_BUDGET};
