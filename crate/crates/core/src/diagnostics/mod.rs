//! Metrics, bound monitors and checks of the inequalities used in the
//! convergence analysis.

mod inequalities;
mod metrics;
mod monitors;

pub use inequalities::{
    check_dual_inequalities, check_majorization, check_majorization_with, estimate_link_constants, invert_link,
    mahalanobis_norm, DualReport, LinkConstants, MajorizationCheck, CHECK_TOL, DUAL_MIN_ENTRY,
};
pub use metrics::{classification_error, Confusion};
pub use monitors::{theorem1_monitor, theorem2_monitor, BoundConstants, BoundReport, BoundRow, BOUND_TOL};
