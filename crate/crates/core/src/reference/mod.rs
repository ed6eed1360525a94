//! Reference solutions and error norms.

mod fine;
mod norms;
mod riemann;

pub use fine::{fine_reference, fine_reference_cached, FINE_REFINEMENT};
pub use norms::{error_norms, norm_p, norm_report, NormEntry, NormReport, NormWeighting};
pub use riemann::{
    pressure_function, riemann_exact, sample, sod_exact, star_state, RiemannState, SOD_LEFT,
    SOD_RIGHT,
};
