//! The truncated transfer kernel, its principal eigenpair, and the quadratic
//! forms used to check the a priori eigen-estimates.

mod eigen;
mod forms;
mod kernel;

pub use eigen::{
    gaussian_start, principal_eigenpair, principal_eigenpair_from, rayleigh_quotient,
    second_eigenvalue, solve, EigenOptions, Eigenpair, WINDOW_EDGE_RATIO,
};
pub use forms::{
    dirichlet_form, dirichlet_split, rescaled_eigenfunction, trial_second_moment,
    variational_lower_bound, VariationalBound,
};
pub use kernel::{auto_s_max, TruncatedKernel, Window, DEFAULT_DIM_CAP};
