//! Shared value types for the scoring pipeline.
//!
//! A cardholder's history is a [`TransactionSequence`]: positive amounts plus
//! small integer region ids (1-based; 0 is reserved for padding inside the
//! mobility model). Every scored transaction ends up as a [`ConfidencePoint`]
//! on the 0-100 x (region) / y (amount) plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("transaction {index}: amount must be positive, got {amount}")]
    NonPositiveAmount { index: usize, amount: f64 },
    #[error("transaction {index}: region ids start at 1 (0 is reserved for padding)")]
    ZeroRegion { index: usize },
    #[error("transaction indices must run 1..=n contiguously")]
    BadIndexing,
    #[error("confidence coordinates must lie in [0, 100], got ({x}, {y})")]
    ConfidenceOutOfRange { x: f64, y: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Ground truth / classifier output for a transaction or dataset block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Legitimate,
    Fraudulent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    /// 1-based position within its sequence.
    pub index: usize,
    /// Currency amount; strictly positive so the log transform is defined.
    pub amount: f64,
    /// Region id, 1-based.
    pub region: u32,
}

impl Transaction {
    pub fn new(index: usize, amount: f64, region: u32) -> Result<Self, CoreError> {
        if !(amount > 0.0) {
            return Err(CoreError::NonPositiveAmount { index, amount });
        }
        if region == 0 {
            return Err(CoreError::ZeroRegion { index });
        }
        Ok(Transaction {
            index,
            amount,
            region,
        })
    }
}

/// An ordered transaction history with a single ground-truth label.
///
/// For experiment datasets the label describes the trailing test block
/// (the training prefix is always legitimate by construction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionSequence {
    transactions: Vec<Transaction>,
    label: Label,
}

impl TransactionSequence {
    /// Indices must already run 1..=n contiguously.
    pub fn new(transactions: Vec<Transaction>, label: Label) -> Result<Self, CoreError> {
        for (i, tx) in transactions.iter().enumerate() {
            if tx.index != i + 1 {
                return Err(CoreError::BadIndexing);
            }
        }
        Ok(TransactionSequence {
            transactions,
            label,
        })
    }

    /// Builds a sequence from parallel amount/region slices, assigning indices.
    pub fn from_parts(amounts: &[f64], regions: &[u32], label: Label) -> Result<Self, CoreError> {
        if amounts.len() != regions.len() {
            return Err(CoreError::InvalidConfig(format!(
                "amounts ({}) and regions ({}) differ in length",
                amounts.len(),
                regions.len()
            )));
        }
        let transactions = amounts
            .iter()
            .zip(regions)
            .enumerate()
            .map(|(i, (&a, &r))| Transaction::new(i + 1, a, r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TransactionSequence {
            transactions,
            label,
        })
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn amounts(&self) -> Vec<f64> {
        self.transactions.iter().map(|t| t.amount).collect()
    }

    pub fn regions(&self) -> Vec<u32> {
        self.transactions.iter().map(|t| t.region).collect()
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }
}

/// A scored transaction on the confidence plane: `x` is the region score,
/// `y` the amount score, both in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidencePoint {
    pub x: f64,
    pub y: f64,
}

impl ConfidencePoint {
    /// Out-of-range coordinates are rejected, not clamped: the scoring
    /// formulas cannot produce them, so a violation is a caller bug.
    pub fn new(x: f64, y: f64) -> Result<Self, CoreError> {
        let in_range = |v: f64| (0.0..=100.0).contains(&v);
        if !in_range(x) || !in_range(y) {
            return Err(CoreError::ConfidenceOutOfRange { x, y });
        }
        Ok(ConfidencePoint { x, y })
    }
}

/// How autoregressive design rows handle the first `p` observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagPadding {
    /// Condition on the first `p` observations and fit the remaining rows.
    Drop,
    /// Keep a row per observation, substituting zero for missing lags.
    Zero,
}

/// How predictive deviations are standardized before extreme-value scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvpSide {
    /// |y - E| / sqrt(V): both directions count as deviation.
    Folded,
    /// max(y - E, 0) / sqrt(V): only upward deviations count.
    Upper,
}

/// Whether the amount model is refit before every test transaction or fit
/// once on the training window only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefitPolicy {
    Step,
    Once,
}

macro_rules! enum_str {
    ($ty:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $($ty::$variant => $s),+ })
            }
        }
        impl std::str::FromStr for $ty {
            type Err = CoreError;
            fn from_str(s: &str) -> Result<Self, CoreError> {
                match s {
                    $($s => Ok($ty::$variant),)+
                    other => Err(CoreError::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " value {:?}"), other
                    ))),
                }
            }
        }
    };
}

pub(crate) use enum_str;

enum_str!(LagPadding { Drop => "drop", Zero => "zero" });
enum_str!(EvpSide { Folded => "folded", Upper => "upper" });
enum_str!(RefitPolicy { Step => "step", Once => "once" });
enum_str!(Label { Legitimate => "legitimate", Fraudulent => "fraudulent" });

/// Knobs for the Gaussian-process fit that are implementation choices rather
/// than part of the model definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpOptions {
    /// Random restarts of the simplex search per fit.
    pub restarts: usize,
    /// Simplex value-spread convergence tolerance.
    pub nm_tolerance: f64,
    /// Simplex iteration cap per restart.
    pub nm_max_iter: usize,
    /// Subtract the training mean before fitting (added back on prediction).
    /// Off by default: the zero-mean form is the reference behaviour.
    pub center: bool,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions {
            restarts: 10,
            nm_tolerance: 1e-8,
            nm_max_iter: 400,
            center: false,
        }
    }
}

/// Scoring-pipeline configuration shared by the CLI and the library tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Autoregressive order.
    pub p: usize,
    /// Differencing order applied before the autoregression.
    pub d: usize,
    /// Width of the standard-deviation band used for intervals and SD-mode
    /// outlier flags (1 ~ 68%, 2 ~ 95%).
    pub sd_multiplier: f64,
    /// Extreme-value probability above which a point is flagged.
    pub theta_ev: f64,
    /// Classification threshold applied to both confidence coordinates.
    pub theta_xy: f64,
    /// Trailing window of observations used for fitting; `None` = full history.
    pub window: Option<usize>,
    /// Row length used when chunking region paths into a path matrix.
    pub row_len: usize,
    /// Master seed; all random substreams derive from it by stable indexing.
    pub seed: u64,
    pub lag_padding: LagPadding,
    pub evp_side: EvpSide,
    pub refit: RefitPolicy,
    pub gp: GpOptions,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            p: 5,
            d: 0,
            sd_multiplier: 2.0,
            theta_ev: 0.6,
            theta_xy: 40.0,
            window: None,
            row_len: 10,
            seed: 0,
            lag_padding: LagPadding::Drop,
            evp_side: EvpSide::Folded,
            refit: RefitPolicy::Step,
            gp: GpOptions::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let fail = |msg: String| Err(CoreError::InvalidConfig(msg));
        if self.p == 0 {
            return fail("p must be >= 1".into());
        }
        if !(self.sd_multiplier > 0.0) {
            return fail(format!(
                "sd_multiplier must be > 0, got {}",
                self.sd_multiplier
            ));
        }
        if !(0.0..=1.0).contains(&self.theta_ev) {
            return fail(format!(
                "theta_ev must lie in [0, 1], got {}",
                self.theta_ev
            ));
        }
        if !(0.0..=100.0).contains(&self.theta_xy) {
            return fail(format!(
                "theta_xy must lie in [0, 100], got {}",
                self.theta_xy
            ));
        }
        if self.row_len == 0 {
            return fail("row_len must be >= 1".into());
        }
        if self.window == Some(0) {
            return fail("window must be >= 1 when set".into());
        }
        if self.gp.restarts == 0 {
            return fail("gp.restarts must be >= 1".into());
        }
        if !(self.gp.nm_tolerance > 0.0) {
            return fail("gp.nm_tolerance must be > 0".into());
        }
        Ok(())
    }
}

/// Natural log of every amount. Amounts must be strictly positive; the
/// offending index (1-based) is reported otherwise.
pub fn log_amounts(amounts: &[f64]) -> Result<Vec<f64>, CoreError> {
    amounts
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if a > 0.0 {
                Ok(a.ln())
            } else {
                Err(CoreError::NonPositiveAmount {
                    index: i + 1,
                    amount: a,
                })
            }
        })
        .collect()
}

/// Log-amount series of a sequence; the model-facing view of the amounts.
pub fn log_transform(seq: &TransactionSequence) -> Result<Vec<f64>, CoreError> {
    log_amounts(&seq.amounts())
}
