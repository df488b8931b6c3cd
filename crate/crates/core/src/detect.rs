//! Scoring pipeline: turns a dataset into per-transaction confidence points
//! `(x, y)` — region score from mobility rules, amount score from a fitted
//! amount model — plus extreme-value probabilities, threshold classification,
//! and the threshold sweep used to compare model combinations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::ar::{fit_ar_diff, ArError, ArModel};
use crate::data::{Dataset, DatasetKind, ExperimentSet};
use crate::evt::{is_outlier, standardize_with, EvtError, RunLengthState};
use crate::gp::{fit_gp_with_inits, GpError, GpModel, KernelParams};
use crate::mobility::{
    region_confidence_adj, region_confidence_assoc, AdjacencyMatrix, MobilityError, PathMatrix,
};
use crate::seeds::substream_seed;
use crate::types::{
    enum_str, log_amounts, ConfidencePoint, CoreError, Label, ModelConfig, RefitPolicy,
};

/// Seed-substream namespace for model fits (fraud synthesis uses 2).
const SEED_NS_FIT: u64 = 3;

/// Relative slack on interval-exceedance flags. A noise-free fit has a
/// zero-width band whose center is only accurate to rounding, so exceedance
/// must mean more than the last bit of the predicted mean.
const FLAG_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("amount model: {0}")]
    Ar(#[from] ArError),
    #[error("amount model: {0}")]
    Gp(#[from] GpError),
    #[error("extreme-value stage: {0}")]
    Evt(#[from] EvtError),
    #[error("region model: {0}")]
    Mobility(#[from] MobilityError),
    #[error("predictive variance must be positive, got {variance}")]
    ZeroVariance { variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmountModelKind {
    Ar,
    Gp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionModelKind {
    /// Association rules over the path matrix (minimal-gap support).
    Assoc,
    /// First-order transition probabilities.
    Adj,
}

/// What the amount scan flags: interval exceedance or extreme-value
/// probability above the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierMode {
    Sd,
    Evp,
}

enum_str!(AmountModelKind { Ar => "ar", Gp => "gp" });
enum_str!(RegionModelKind { Assoc => "assoc", Adj => "adj" });
enum_str!(OutlierMode { Sd => "sd", Evp => "evp" });

// ---------------------------------------------------------------------------
// Pointwise scores

/// Amount confidence `100 * (1 - Phi((observed - mean) / sqrt(variance)))`:
/// 50 at the predicted mean, near 0 far above it, near 100 far below it.
/// All inputs are in the log-amount domain.
pub fn amount_confidence(mean: f64, variance: f64, observed: f64) -> Result<f64, DetectError> {
    if !(variance > 0.0) {
        return Err(DetectError::ZeroVariance { variance });
    }
    let z = (observed - mean) / variance.sqrt();
    let unit = Normal::new(0.0, 1.0).expect("unit normal is valid");
    Ok((100.0 * (1.0 - unit.cdf(z))).clamp(0.0, 100.0))
}

/// A transaction is called fraudulent only when BOTH coordinates fall below
/// the threshold: an unusual amount in an unusual place.
pub fn classify(point: &ConfidencePoint, theta: f64) -> Label {
    if point.x < theta && point.y < theta {
        Label::Fraudulent
    } else {
        Label::Legitimate
    }
}

// ---------------------------------------------------------------------------
// Sequential amount estimates (shared by scoring and outlier scans)

enum AmountModel {
    Ar(ArModel),
    Gp(GpModel),
}

/// One-step-ahead `(mean, variance)` per index of `logs`, plus the
/// extreme-value probability of each standardized deviation fed through the
/// run-length recursion in order.
///
/// Training indices use the model fit on the training prefix alone; test
/// indices refit per `config.refit` on everything seen so far (never the
/// index being predicted). Entries are `None` where the model cannot predict
/// (leading lag warm-up) or, for `evp`, where the variance vanished.
struct AmountEstimates {
    estimates: Vec<Option<(f64, f64)>>,
    evp: Vec<Option<f64>>,
}

fn windowed(series: &[f64], window: Option<usize>) -> &[f64] {
    match window {
        Some(w) if w < series.len() => &series[series.len() - w..],
        _ => series,
    }
}

fn fit_amount_model(
    kind: AmountModelKind,
    series: &[f64],
    config: &ModelConfig,
    seed: u64,
) -> Result<AmountModel, DetectError> {
    match kind {
        AmountModelKind::Ar => Ok(AmountModel::Ar(fit_ar_diff(
            series,
            config.p,
            config.d,
            config.window,
            config.lag_padding,
        )?)),
        AmountModelKind::Gp => {
            let fit_series = windowed(series, config.window);
            Ok(AmountModel::Gp(fit_gp_with_inits(
                fit_series,
                &config.gp,
                seed,
                &[],
            )?))
        }
    }
}

fn refit_amount_model(
    kind: AmountModelKind,
    series: &[f64],
    config: &ModelConfig,
    seed: u64,
    previous: &AmountModel,
) -> Result<AmountModel, DetectError> {
    match (kind, previous) {
        (AmountModelKind::Gp, AmountModel::Gp(prev)) => {
            // Warm start: the previous optimum is one extra simplex start.
            let fit_series = windowed(series, config.window);
            let inits: [KernelParams; 1] = [*prev.params()];
            Ok(AmountModel::Gp(fit_gp_with_inits(
                fit_series, &config.gp, seed, &inits,
            )?))
        }
        _ => fit_amount_model(kind, series, config, seed),
    }
}

impl AmountModel {
    /// Predicts the observation `steps_ahead + 1` positions after the last
    /// one the model was fit on, given the full history so far.
    fn predict(
        &self,
        history: &[f64],
        steps_ahead: usize,
    ) -> Result<Option<(f64, f64)>, DetectError> {
        match self {
            AmountModel::Ar(model) => match model.predict_next_level(history, 1.0) {
                Ok(pred) => Ok(Some((pred.mean, pred.variance))),
                Err(ArError::SeriesTooShort { .. }) => Ok(None),
                Err(e) => Err(e.into()),
            },
            AmountModel::Gp(model) => {
                let x_star = (model.train_len() + steps_ahead + 1) as f64;
                let pred = model.predict(x_star, 1.0)?;
                Ok(Some((pred.mean, pred.variance)))
            }
        }
    }
}

fn amount_estimates(
    logs: &[f64],
    train_len: usize,
    kind: AmountModelKind,
    config: &ModelConfig,
    dataset_kind: DatasetKind,
    dataset_id: u32,
) -> Result<AmountEstimates, DetectError> {
    let n = logs.len();
    let train_logs = &logs[..train_len];
    let kind_tag = match dataset_kind {
        DatasetKind::Legitimate => 0,
        DatasetKind::Fraud => 1,
    };
    let fit_seed = |step: u64| {
        substream_seed(
            config.seed,
            &[SEED_NS_FIT, kind_tag, dataset_id as u64, step],
        )
    };

    let base = fit_amount_model(kind, train_logs, config, fit_seed(0))?;
    let mut estimates: Vec<Option<(f64, f64)>> = vec![None; n];
    match &base {
        AmountModel::Ar(model) => {
            estimates[..train_len].copy_from_slice(&model.one_step_estimates(train_logs));
        }
        AmountModel::Gp(model) => {
            // With a fitting window the leading training indices fall outside
            // the model; align its estimates to the window's global offset.
            let offset = train_len - model.train_len();
            for (k, est) in model.one_step_estimates().into_iter().enumerate() {
                estimates[offset + k] = est;
            }
        }
    }

    let mut evp: Vec<Option<f64>> = vec![None; n];
    let mut state = RunLengthState::new();
    let feed = |state: &mut RunLengthState, index: usize, mean: f64, variance: f64| {
        match standardize_with(config.evp_side, logs[index], mean, variance) {
            Ok(z) => Some(state.step(z)),
            Err(EvtError::ZeroVariance { .. }) => None,
            Err(_) => None,
        }
    };
    for i in 0..train_len {
        if let Some((m, v)) = estimates[i] {
            evp[i] = feed(&mut state, i, m, v);
        }
    }

    let mut model = base;
    let mut fit_end = train_len;
    for gi in train_len..n {
        if config.refit == RefitPolicy::Step && gi > train_len {
            let step = (gi - train_len) as u64;
            // A failed refit (e.g. a briefly singular design) keeps the last
            // good model rather than losing the step.
            if let Ok(next) = refit_amount_model(kind, &logs[..gi], config, fit_seed(step), &model)
            {
                model = next;
                fit_end = gi;
            }
        }
        let pred = model.predict(&logs[..gi], gi - fit_end)?;
        estimates[gi] = pred;
        if let Some((m, v)) = pred {
            evp[gi] = feed(&mut state, gi, m, v);
        }
    }

    Ok(AmountEstimates { estimates, evp })
}

// ---------------------------------------------------------------------------
// Scoring

/// One scored test transaction. `pos` is 1-based within the test block.
/// `point` is `None` when the amount model could not produce a usable
/// predictive distribution (such a transaction raises no alarm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTransaction {
    pub dataset_id: u32,
    pub kind: DatasetKind,
    pub pos: usize,
    pub amount_model: AmountModelKind,
    pub region_model: RegionModelKind,
    pub point: Option<ConfidencePoint>,
    pub evp: Option<f64>,
    pub truth: Label,
}

fn region_confidence(
    region_kind: RegionModelKind,
    history: &[u32],
    next: u32,
    row_len: usize,
) -> Result<f64, DetectError> {
    if history.is_empty() {
        return Ok(0.0);
    }
    let matrix = PathMatrix::from_path(history, row_len)?;
    let prev1 = history.last().copied();
    let prev2 = history.len().checked_sub(2).map(|i| history[i]);
    let x = match region_kind {
        RegionModelKind::Assoc => region_confidence_assoc(&matrix, prev2, prev1, next),
        RegionModelKind::Adj => match prev1 {
            Some(prev) => {
                region_confidence_adj(&AdjacencyMatrix::from_path_matrix(&matrix)?, prev, next)
            }
            None => 0.0,
        },
    };
    Ok(x)
}

/// Scores every test transaction of `dataset` with one amount model and any
/// number of region models (the expensive amount predictions are shared).
/// Output: one vector per region kind, in the order given.
pub fn score_dataset(
    dataset: &Dataset,
    amount_kind: AmountModelKind,
    region_kinds: &[RegionModelKind],
    config: &ModelConfig,
) -> Result<Vec<Vec<ScoredTransaction>>, DetectError> {
    config.validate()?;
    let seq = &dataset.sequence;
    let logs = log_amounts(&seq.amounts())?;
    let regions = seq.regions();
    let train_len = dataset.train_len;
    let est = amount_estimates(
        &logs,
        train_len,
        amount_kind,
        config,
        dataset.kind,
        dataset.id,
    )?;

    let mut out: Vec<Vec<ScoredTransaction>> = vec![Vec::new(); region_kinds.len()];
    for gi in train_len..seq.len() {
        let y = match est.estimates[gi] {
            Some((m, v)) => amount_confidence(m, v, logs[gi]).ok(),
            None => None,
        };
        for (slot, &region_kind) in region_kinds.iter().enumerate() {
            let point = match y {
                Some(y) => {
                    let x = region_confidence(
                        region_kind,
                        &regions[..gi],
                        regions[gi],
                        config.row_len,
                    )?
                    .clamp(0.0, 100.0);
                    Some(ConfidencePoint::new(x, y)?)
                }
                None => None,
            };
            out[slot].push(ScoredTransaction {
                dataset_id: dataset.id,
                kind: dataset.kind,
                pos: gi - train_len + 1,
                amount_model: amount_kind,
                region_model: region_kind,
                point,
                evp: est.evp[gi],
                truth: seq.label(),
            });
        }
    }
    Ok(out)
}

/// [`score_dataset`] for a single model combination.
pub fn score_sequence(
    dataset: &Dataset,
    amount_kind: AmountModelKind,
    region_kind: RegionModelKind,
    config: &ModelConfig,
) -> Result<Vec<ScoredTransaction>, DetectError> {
    Ok(score_dataset(dataset, amount_kind, &[region_kind], config)?
        .pop()
        .expect("one region kind in, one score vector out"))
}

/// All test-transaction scores for one model combination across an
/// experiment (legitimate datasets first, then fraud, in id order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboScores {
    pub amount: AmountModelKind,
    pub region: RegionModelKind,
    pub scored: Vec<ScoredTransaction>,
}

/// Scores every dataset under every requested model combination. Datasets
/// are scored in parallel; combinations sharing an amount model share its
/// per-step predictions. Duplicate combinations are collapsed.
pub fn score_experiment(
    set: &ExperimentSet,
    combos: &[(AmountModelKind, RegionModelKind)],
    config: &ModelConfig,
) -> Result<Vec<ComboScores>, DetectError> {
    let mut unique: Vec<(AmountModelKind, RegionModelKind)> = Vec::new();
    for combo in combos {
        if !unique.contains(combo) {
            unique.push(*combo);
        }
    }
    let mut by_amount: Vec<(AmountModelKind, Vec<RegionModelKind>)> = Vec::new();
    for &(a, r) in &unique {
        match by_amount.iter_mut().find(|(kind, _)| *kind == a) {
            Some((_, regions)) => regions.push(r),
            None => by_amount.push((a, vec![r])),
        }
    }

    let datasets: Vec<&Dataset> = set.legitimate.iter().chain(&set.fraud).collect();
    let mut out: Vec<ComboScores> = unique
        .iter()
        .map(|&(amount, region)| ComboScores {
            amount,
            region,
            scored: Vec::new(),
        })
        .collect();
    for (amount_kind, region_kinds) in &by_amount {
        let per_dataset: Vec<Vec<Vec<ScoredTransaction>>> = datasets
            .par_iter()
            .map(|ds| score_dataset(ds, *amount_kind, region_kinds, config))
            .collect::<Result<_, _>>()?;
        for ds_scores in per_dataset {
            for (region_kind, scores) in region_kinds.iter().zip(ds_scores) {
                let slot = out
                    .iter_mut()
                    .find(|c| c.amount == *amount_kind && c.region == *region_kind)
                    .expect("every scored combination was requested");
                slot.scored.extend(scores);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Threshold sweep

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub theta: f64,
    /// Correctly classified test transactions.
    pub accuracy_count: usize,
    pub accuracy_rate: f64,
    /// Legitimate transactions called fraudulent.
    pub false_positive: usize,
    /// Fraudulent transactions the rule let through.
    pub false_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Test transactions per entry; `accuracy_count + false_positive +
    /// false_negative == total` always holds.
    pub total: usize,
    /// Transactions without a confidence point. They raise no alarm, so a
    /// fraudulent one counts as a false negative.
    pub unscored: usize,
    pub best_theta: f64,
}

/// Evaluates the classification rule at each threshold. The best threshold
/// maximizes accuracy; ties prefer balanced errors (smallest
/// `|false_positive - false_negative|`), then the smaller threshold.
pub fn sweep(scored: &[ScoredTransaction], thetas: &[f64]) -> SweepReport {
    let total = scored.len();
    let unscored = scored.iter().filter(|s| s.point.is_none()).count();
    let mut entries = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let mut accuracy_count = 0;
        let mut false_positive = 0;
        let mut false_negative = 0;
        for s in scored {
            let verdict = match &s.point {
                Some(point) => classify(point, theta),
                None => Label::Legitimate,
            };
            match (verdict, s.truth) {
                (Label::Fraudulent, Label::Legitimate) => false_positive += 1,
                (Label::Legitimate, Label::Fraudulent) => false_negative += 1,
                _ => accuracy_count += 1,
            }
        }
        entries.push(SweepEntry {
            theta,
            accuracy_count,
            accuracy_rate: if total == 0 {
                0.0
            } else {
                accuracy_count as f64 / total as f64
            },
            false_positive,
            false_negative,
        });
    }
    let best_theta = entries
        .iter()
        .min_by(|a, b| {
            let key = |e: &SweepEntry| {
                (
                    std::cmp::Reverse(e.accuracy_count),
                    (e.false_positive as i64 - e.false_negative as i64).abs(),
                )
            };
            key(a).cmp(&key(b)).then(a.theta.total_cmp(&b.theta))
        })
        .map_or(f64::NAN, |e| e.theta);
    SweepReport {
        entries,
        total,
        unscored,
        best_theta,
    }
}

// ---------------------------------------------------------------------------
// Amount outlier scan

/// One row of an amount scan: the one-step predictive distribution at each
/// position, the extreme-value probability, and whether the point is flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierPoint {
    /// 1-based position in the sequence.
    pub index: usize,
    pub log_amount: f64,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    /// `mean + sd_multiplier * sqrt(variance)`.
    pub upper: Option<f64>,
    pub evp: Option<f64>,
    pub flagged: bool,
}

/// Walks the whole sequence (training prefix included) and flags unusual
/// amounts, either by interval exceedance (`Sd`) or by extreme-value
/// probability (`Evp`). Also serves as plot data for inspecting a fit.
pub fn outlier_scan(
    dataset: &Dataset,
    amount_kind: AmountModelKind,
    mode: OutlierMode,
    config: &ModelConfig,
) -> Result<Vec<OutlierPoint>, DetectError> {
    config.validate()?;
    let logs = log_amounts(&dataset.sequence.amounts())?;
    let est = amount_estimates(
        &logs,
        dataset.train_len,
        amount_kind,
        config,
        dataset.kind,
        dataset.id,
    )?;
    let mut out = Vec::with_capacity(logs.len());
    for (i, &log_amount) in logs.iter().enumerate() {
        let (mean, variance, upper) = match est.estimates[i] {
            Some((m, v)) => (Some(m), Some(v), Some(m + config.sd_multiplier * v.sqrt())),
            None => (None, None, None),
        };
        let evp = est.evp[i];
        let flagged = match mode {
            OutlierMode::Sd => upper.is_some_and(|u| log_amount > u + FLAG_EPS * u.abs().max(1.0)),
            OutlierMode::Evp => evp.is_some_and(|p| is_outlier(p, config.theta_ev)),
        };
        out.push(OutlierPoint {
            index: i + 1,
            log_amount,
            mean,
            variance,
            upper,
            evp,
            flagged,
        });
    }
    Ok(out)
}
