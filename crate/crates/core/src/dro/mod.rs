//! Piecewise-affine cost and risk terms, their Wasserstein-robust linear
//! reformulation, and the three dispatch formulations built on it.

mod assemble;
mod problem;
mod terms;
mod wasserstein;

pub use assemble::{assemble_p3, term_values, AmbiguitySet, P3Options, TermIndex};
pub use problem::{
    build_rted, minimal_robust_slack, solve_rted, solve_rted_checked, unramped_dispatch, Formulation, ObjectiveParts, RtedInputs,
    RtedProblem, RtedSolution, TermValue,
};
pub use terms::{cvar_pieces, generation_cost_terms, mileage_term, PiecewiseTerm, Segment, TermKind};
pub use wasserstein::{wasserstein_distance_discrete, wasserstein_uniform};
