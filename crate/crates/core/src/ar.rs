//! Autoregressive amount model.
//!
//! The log-amount series `y` is optionally differenced `d` times, then fit as
//!
//! ```text
//! y_i = a_0 + a_1 y_{i-1} + ... + a_p y_{i-p} + e_i
//! ```
//!
//! by least squares on the stacked design `Y = X A + E`. `noise_variance` is
//! the maximum-likelihood estimate `(1/rows) * ||Y - X A||^2`, and one-step
//! prediction intervals are `mean +- sd_multiplier * sqrt(noise_variance)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::LagPadding;

/// Gram-matrix eigenvalues below `max_eig * GRAM_RCOND` are treated as zero,
/// i.e. designs are usable up to a condition number of 1e12 on `X^T X`
/// (1e6 on `X` itself).
const GRAM_RCOND: f64 = 1e-12;

/// A rank-deficient design is accepted only when the system is consistent,
/// i.e. the minimum-norm solution reproduces the targets to this relative
/// tolerance (covers constant and other exactly collinear series).
const CONSISTENCY_TOL: f64 = 1e-8;

/// Residuals at rounding level mean the fit is exact; the innovation
/// variance snaps to zero so predictions are treated as deterministic
/// instead of inheriting a garbage variance of ~1e-32.
const NOISE_FREE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ArError {
    #[error("series too short: need more than {needed} observations, have {have}")]
    SeriesTooShort { needed: usize, have: usize },
    #[error("design matrix is numerically singular (inconsistent rank-deficient system)")]
    SingularDesign,
    #[error("expected {expected} lag values, got {got}")]
    WrongLagCount { expected: usize, got: usize },
    #[error("max_lag {max_lag} must be smaller than the series length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("every candidate order failed to fit")]
    AllCandidatesFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    /// `[a_0, a_1, ..., a_p]`: intercept first, then lag weights (lag 1 first).
    coefficients: Vec<f64>,
    /// MLE of the innovation variance (may be 0 for noise-free series).
    noise_variance: f64,
    p: usize,
    /// Differencing order that was applied to the series before fitting.
    d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArPrediction {
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `d`-fold first differences. Each pass maps `y` to `y_{i+1} - y_i`,
/// shortening the series by one.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>, ArError> {
    if series.len() <= d {
        return Err(ArError::SeriesTooShort {
            needed: d,
            have: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

fn apply_window(series: &[f64], window: Option<usize>) -> &[f64] {
    match window {
        Some(w) if w < series.len() => &series[series.len() - w..],
        _ => series,
    }
}

/// Stacks one regression row per target observation. `Drop` conditions on the
/// first `p` observations; `Zero` keeps a row for every observation and
/// substitutes zero for lags that reach before the start.
fn design(series: &[f64], p: usize, padding: LagPadding) -> (DMatrix<f64>, DVector<f64>) {
    let n = series.len();
    let first_target = match padding {
        LagPadding::Drop => p,
        LagPadding::Zero => 0,
    };
    let rows = n - first_target;
    let mut x = DMatrix::zeros(rows, p + 1);
    let mut y = DVector::zeros(rows);
    for (row, i) in (first_target..n).enumerate() {
        x[(row, 0)] = 1.0;
        for j in 1..=p {
            if i >= j {
                x[(row, j)] = series[i - j];
            }
        }
        y[row] = series[i];
    }
    (x, y)
}

/// Least-squares fit of an order-`p` autoregression on `series` as given
/// (no differencing; see [`fit_ar_diff`]). `window` keeps only the trailing
/// `window` observations before the design is built.
pub fn fit_ar(
    series: &[f64],
    p: usize,
    window: Option<usize>,
    padding: LagPadding,
) -> Result<ArModel, ArError> {
    let series = apply_window(series, window);
    let min_len = match padding {
        LagPadding::Drop => p,
        LagPadding::Zero => 0,
    };
    if series.len() <= min_len {
        return Err(ArError::SeriesTooShort {
            needed: min_len,
            have: series.len(),
        });
    }

    let (x, y) = design(series, p, padding);
    let rows = x.nrows();
    // Minimum-norm least squares through the spectral pseudo-inverse of the
    // Gram matrix: symmetric eigensolvers stay accurate on the exactly
    // collinear designs that degenerate series produce.
    let gram = x.tr_mul(&x);
    let xty = x.tr_mul(&y);
    let eig = gram.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let cut = max_eig * GRAM_RCOND;
    let mut coeffs = DVector::zeros(p + 1);
    let mut rank = 0;
    for i in 0..p + 1 {
        let lambda = eig.eigenvalues[i];
        if lambda > cut {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            coeffs += v * (v.dot(&xty) / lambda);
        }
    }
    let residual = &y - &x * &coeffs;

    if rank < p + 1 {
        // Exactly collinear designs (e.g. a constant series regressed on
        // itself) still define a consistent system; only an inconsistent
        // rank-deficient system is an error.
        let tol = CONSISTENCY_TOL * y.amax().max(1.0);
        if residual.amax() > tol {
            return Err(ArError::SingularDesign);
        }
    }

    let mut noise_variance = residual.norm_squared() / rows as f64;
    if residual.amax() <= NOISE_FREE_TOL * y.amax().max(1.0) {
        noise_variance = 0.0;
    }
    Ok(ArModel {
        coefficients: coeffs.iter().cloned().collect(),
        noise_variance,
        p,
        d: 0,
    })
}

/// Differences the (windowed) series `d` times, then fits.
pub fn fit_ar_diff(
    series: &[f64],
    p: usize,
    d: usize,
    window: Option<usize>,
    padding: LagPadding,
) -> Result<ArModel, ArError> {
    let windowed = apply_window(series, window);
    let diff = difference(windowed, d)?;
    let mut model = fit_ar(&diff, p, None, padding)?;
    model.d = d;
    Ok(model)
}

impl ArModel {
    /// `[a_0, a_1, ..., a_p]`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// In-sample root-mean-square one-step error, `sqrt(noise_variance)`.
    pub fn rmse(&self) -> f64 {
        self.noise_variance.sqrt()
    }

    /// One-step prediction in the fitted (differenced) domain. `recent` holds
    /// exactly `p` values with the most recent observation last.
    pub fn predict_next(
        &self,
        recent: &[f64],
        sd_multiplier: f64,
    ) -> Result<ArPrediction, ArError> {
        if recent.len() != self.p {
            return Err(ArError::WrongLagCount {
                expected: self.p,
                got: recent.len(),
            });
        }
        let mut mean = self.coefficients[0];
        for j in 1..=self.p {
            mean += self.coefficients[j] * recent[self.p - j];
        }
        let variance = self.noise_variance;
        let half_width = sd_multiplier * variance.sqrt();
        Ok(ArPrediction {
            mean,
            variance,
            lower: mean - half_width,
            upper: mean + half_width,
        })
    }

    /// One-step prediction in the level domain for a model fit with `d > 0`:
    /// the differenced-domain forecast is integrated back by adding the last
    /// value of each lower difference order. Variance is unchanged because the
    /// integration terms are observed constants.
    pub fn predict_next_level(
        &self,
        series: &[f64],
        sd_multiplier: f64,
    ) -> Result<ArPrediction, ArError> {
        let needed = self.p + self.d;
        if series.len() < needed {
            return Err(ArError::SeriesTooShort {
                needed,
                have: series.len(),
            });
        }
        let mut offset = 0.0;
        let mut level = series.to_vec();
        for _ in 0..self.d {
            offset += *level.last().expect("non-empty by length check");
            level = level.windows(2).map(|w| w[1] - w[0]).collect();
        }
        let recent = &level[level.len() - self.p..];
        let mut pred = self.predict_next(recent, sd_multiplier)?;
        pred.mean += offset;
        pred.lower += offset;
        pred.upper += offset;
        Ok(pred)
    }

    /// Level-domain one-step-ahead `(mean, variance)` for every index of
    /// `series`. Entries are `None` where the model lacks lags (the first
    /// `p + d` positions).
    pub fn one_step_estimates(&self, series: &[f64]) -> Vec<Option<(f64, f64)>> {
        let n = series.len();
        let mut out = vec![None; n];
        let start = self.p + self.d;
        for i in start..n {
            if let Ok(pred) = self.predict_next_level(&series[..i], 1.0) {
                out[i] = Some((pred.mean, pred.variance));
            }
        }
        out
    }
}

/// Sample autocorrelations `r_1..r_max_lag` plus the conventional white-noise
/// band `+-2/sqrt(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Acf {
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

pub fn acf(series: &[f64], max_lag: usize) -> Result<Acf, ArError> {
    let n = series.len();
    if max_lag >= n {
        return Err(ArError::LagTooLarge { max_lag, len: n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|y| y - mean).collect();
    let denom: f64 = dev.iter().map(|v| v * v).sum();
    let bound = 2.0 / (n as f64).sqrt();
    // Zero-variance guard: a (numerically) constant series has no
    // autocorrelation structure to report.
    if denom <= f64::EPSILON * n as f64 {
        return Ok(Acf {
            coefficients: vec![0.0; max_lag],
            bound,
        });
    }
    let coefficients = (1..=max_lag)
        .map(|k| (0..n - k).map(|i| dev[i] * dev[i + k]).sum::<f64>() / denom)
        .collect();
    Ok(Acf {
        coefficients,
        bound,
    })
}

/// One `(p, d)` candidate from [`select_order`]; `rmse` is `None` when the
/// fit failed, with the reason in `error`.
#[derive(Debug, Clone)]
pub struct OrderCandidate {
    pub p: usize,
    pub d: usize,
    pub rmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct OrderSelection {
    /// `(p, d)` with the smallest in-sample RMSE; ties prefer smaller `d`,
    /// then smaller `p`.
    pub best: (usize, usize),
    pub table: Vec<OrderCandidate>,
}

/// Candidates whose RMSEs agree to this relative tolerance count as tied, so
/// noise-free fits (RMSE at rounding level) fall to the simplicity
/// tie-break instead of an arbitrary last bit.
const RMSE_TIE_EPS: f64 = 1e-9;

pub fn select_order(
    series: &[f64],
    candidates: &[(usize, usize)],
    window: Option<usize>,
    padding: LagPadding,
) -> Result<OrderSelection, ArError> {
    let mut table = Vec::with_capacity(candidates.len());
    let mut best: Option<((usize, usize), f64)> = None;
    for &(p, d) in candidates {
        match fit_ar_diff(series, p, d, window, padding) {
            Ok(model) => {
                let rmse = model.rmse();
                table.push(OrderCandidate {
                    p,
                    d,
                    rmse: Some(rmse),
                    error: None,
                });
                let better = match best {
                    None => true,
                    Some(((bp, bd), brmse)) => {
                        let tie_tol = RMSE_TIE_EPS * brmse.max(rmse).max(1.0);
                        if (rmse - brmse).abs() <= tie_tol {
                            (d, p) < (bd, bp)
                        } else {
                            rmse < brmse
                        }
                    }
                };
                if better {
                    best = Some(((p, d), rmse));
                }
            }
            Err(e) => {
                table.push(OrderCandidate {
                    p,
                    d,
                    rmse: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    match best {
        Some((order, _)) => Ok(OrderSelection { best: order, table }),
        None => Err(ArError::AllCandidatesFailed),
    }
}
