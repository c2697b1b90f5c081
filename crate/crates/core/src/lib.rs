//! Checking the sufficiently scattered condition of nonnegative matrices.
//!
//! A nonnegative `r × n` matrix H is sufficiently scattered when its conic
//! hull contains the ice-cream cone `{x : eᵀx ≥ √(r−1)‖x‖}` and touches its
//! boundary only along the unit directions. [`check_ssc`] decides this by
//! maximizing `‖x‖²` over a polytope, with a spatial branch-and-bound for
//! general sizes and vertex enumeration for small ones.

pub mod bnb;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod relax;
pub mod ssc;
pub mod synth;

pub use bnb::{maximize_norm, verify_certificate, BnbConfig, GlobalResult, GlobalStatus, SolutionPool};
pub use error::{Error, Result};
pub use geometry::{ConeKind, FactorMatrix, Polytope, SecondOrderCone, Tolerances, UnitVector};
pub use lp::{cone_member, LpResult, LpStatus};
pub use oracle::{enumerate_vertices, exact_max_norm, OracleLimits};
pub use ssc::{check_ncssc, check_ssc, Method, Reason, SscOptions, SscReport, Verdict};
pub use synth::{generate, GenSpec};
