//! Distributionally robust real-time economic dispatch with regulation
//! reserves: AGC signal statistics, copula scenario models, the dispatch
//! LP and a rolling-horizon simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod copula;
pub mod dispatch;
pub mod dro;
pub mod error;
pub mod grid;
pub mod lp;
pub mod par;
pub mod signal_stats;
pub mod sim;

pub use error::{Error, Result};
