//! Per-cardholder transaction-pattern models for card fraud scoring.
//!
//! The library learns two habits from a cardholder's history and scores each
//! new transaction against both on a common 0-100 confidence scale:
//!
//! * **Amount (`y`)** — log-amounts are modeled sequentially, either by an
//!   autoregression ([`ar`]) or by a Gaussian process ([`gp`]); the one-step
//!   predictive distribution turns an observed amount into an upper-tail
//!   confidence. An extreme-value stage ([`evt`]) tracks how surprising the
//!   recent run of deviations is.
//! * **Region (`x`)** — travel habits are mined from the region path
//!   ([`mobility`]) with gap-tolerant association rules or first-order
//!   transition probabilities.
//!
//! A transaction is called fraudulent only when both coordinates fall below
//! a threshold — an unusual amount in an unusual place ([`detect`]). The
//! [`data`] module ingests CSV streams, synthesizes fraud blocks, and
//! assembles the sliding-window evaluation datasets the CLI operates on.

// Validation guards are written as `!(x > 0.0)` on purpose: the suggested
// `x <= 0.0` rewrite is false for NaN and would wave bad input through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ar;
pub mod data;
pub mod detect;
pub mod evt;
pub mod gp;
pub mod mobility;
pub mod optim;
pub mod seeds;
pub mod types;

pub use detect::{
    amount_confidence, classify, outlier_scan, score_dataset, score_experiment, score_sequence,
    sweep, AmountModelKind, ComboScores, DetectError, OutlierMode, RegionModelKind,
    ScoredTransaction, SweepReport,
};
pub use types::{
    log_amounts, ConfidencePoint, CoreError, EvpSide, Label, LagPadding, ModelConfig, RefitPolicy,
    Transaction, TransactionSequence,
};
