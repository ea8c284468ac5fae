//! HOTS link analysis and entropy-based matrix scaling on sparse graphs.
//!
//! The crate covers the ideal model for strongly connected graphs
//! ([`ideal`]), the effective model with an artificial node for arbitrary
//! graphs ([`effective`]), flow bounds ([`truncated`]), the row-normalized
//! variant ([`normalized`]) and the PageRank baseline with rank comparison
//! utilities ([`ranking`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cd;
pub mod effective;
pub mod error;
pub mod graph;
pub mod ideal;
pub mod normalized;
pub mod numeric;
pub mod ranking;
pub mod report;
pub mod spectral;
pub mod synth;
pub mod truncated;

pub use error::{HotsError, Result};
pub use graph::{GraphMeta, SparseMatrix};
pub use report::{Normalization, ScoreState, SolveReport, SolveStatus};
