//! Acceptance criteria for `rted-dro`; the checks live in `tests/acceptance.rs`.
//!
//! ```text
//! cargo test -p rted-dro-validation --test acceptance -- 1 5 14
//! ```
