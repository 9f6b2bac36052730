//! Empirical marginals, five copula families, BIC selection, and sampling
//! of ξ conditional on the forecast change ΔP.

mod family;
mod fit;
mod joint;
mod kendall;
mod marginal;

pub use family::{CopulaSpec, Family, PreparedCopula};
pub use fit::{
    correlation_from_tau, fit_copula, kendall_matrix, log_likelihood, nearest_correlation, select_by_bic, Candidate, FitReport, DOF_GRID,
    EIGEN_FLOOR,
};
pub use joint::{
    fit_joint, read_training_csv, training_row, write_training_csv, FittedJointModel, TrainingRow, JOINT_COLUMNS, JOINT_DIM, KNN_NEIGHBOURS,
};
pub use kendall::kendall_tau;
pub use marginal::{average_ranks, fit_marginal, pseudo_observations, MarginalModel, MIN_OBSERVATIONS};
