//! Extreme-value probability of standardized prediction errors.
//!
//! Over a window of `m` standardized draws, the maximum is approximately
//! Gumbel with closed-form location/scale
//!
//! ```text
//! mu_m    = (2 ln m)^(1/2) - (ln(ln m) + ln(2 pi)) / (2 (2 ln m)^(1/2))
//! sigma_m = (2 ln m)^(-1/2)
//! ```
//!
//! valid for `m >= 2`. A window of one draw has no extreme-value limit, so
//! `m = 1` falls back to the exact folded-Gaussian CDF of a single draw.
//! Because the window (run) length is unknown, it is marginalized with the
//! recursion: a new run starts exactly when the current point is extreme,
//! so `P(l_{t+1} = 1) = P_EV(t)` and
//! `P(l_{t+1} = m) = (1 - P_EV(t)) P(l_t = m - 1)`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::types::EvpSide;

/// Trailing run-length mass whose cumulative sum stays below this bound is
/// pruned (and the rest renormalized). Tight enough that the recursion stays
/// within 1e-12 of the exact expansion over any test-scale horizon.
const TAIL_EPS: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum EvtError {
    #[error("closed-form extreme-value parameters require m >= 2, got {m}")]
    DegenerateCount { m: usize },
    #[error("variance must be strictly positive, got {variance}")]
    ZeroVariance { variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelParams {
    pub location: f64,
    pub scale: f64,
    pub m: usize,
}

/// Closed-form Gumbel parameters for the maximum of `m` standard draws.
pub fn gumbel_params(m: usize) -> Result<GumbelParams, EvtError> {
    if m < 2 {
        return Err(EvtError::DegenerateCount { m });
    }
    let two_ln_m = 2.0 * (m as f64).ln();
    let root = two_ln_m.sqrt();
    let location = root - ((m as f64).ln().ln() + (2.0 * std::f64::consts::PI).ln()) / (2.0 * root);
    Ok(GumbelParams {
        location,
        scale: 1.0 / root,
        m,
    })
}

/// Gumbel CDF: the probability that the window maximum stays below `z`.
pub fn evp_given_run_length(z: f64, params: &GumbelParams) -> f64 {
    (-(-(z - params.location) / params.scale).exp()).exp()
}

/// `P(extreme value <= z)` for a run of `m` draws: Gumbel for `m >= 2`, the
/// folded standard-Gaussian CDF for the single-draw case.
pub fn evp_single(z: f64, m: usize) -> f64 {
    if m == 1 {
        // P(|N(0,1)| <= z) = erf(z / sqrt(2)); clamp for callers that pass a
        // signed statistic.
        erf(z / std::f64::consts::SQRT_2).max(0.0)
    } else {
        let params = gumbel_params(m).expect("m >= 2");
        evp_given_run_length(z, &params)
    }
}

/// Run-length distribution carried across a sequence of standardized scores.
///
/// `mass()[i]` is the probability that the run covering the *next* point has
/// length `i + 1`; a fresh state assigns probability 1 to length 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthState {
    t: usize,
    mass: Vec<f64>,
    history: Vec<f64>,
}

impl Default for RunLengthState {
    fn default() -> Self {
        Self::new()
    }
}

impl RunLengthState {
    pub fn new() -> Self {
        RunLengthState {
            t: 0,
            mass: vec![1.0],
            history: Vec::new(),
        }
    }

    /// Steps completed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Every probability this state has emitted, oldest first.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Marginalizes the extreme-value probability of `z` over the current
    /// run-length distribution, then advances the distribution.
    pub fn step(&mut self, z: f64) -> f64 {
        let p: f64 = self
            .mass
            .iter()
            .enumerate()
            .map(|(i, &w)| w * evp_single(z, i + 1))
            .sum();
        let p = p.clamp(0.0, 1.0);

        let mut next = Vec::with_capacity(self.mass.len() + 1);
        next.push(p);
        next.extend(self.mass.iter().map(|&w| (1.0 - p) * w));

        // Prune the negligible tail, then renormalize to exact unit mass.
        let mut cut = next.len();
        let mut tail = 0.0;
        while cut > 1 && tail + next[cut - 1] < TAIL_EPS {
            tail += next[cut - 1];
            cut -= 1;
        }
        next.truncate(cut);
        let total: f64 = next.iter().sum();
        if total > 0.0 {
            for w in &mut next {
                *w /= total;
            }
        }

        self.mass = next;
        self.t += 1;
        self.history.push(p);
        p
    }
}

/// Extreme --> outlier, strictly above the threshold.
pub fn is_outlier(p_ev: f64, theta_ev: f64) -> bool {
    p_ev > theta_ev
}

/// Folded standardized deviation `|y - mean| / sqrt(variance)`.
pub fn standardize(y: f64, mean: f64, variance: f64) -> Result<f64, EvtError> {
    standardize_with(EvpSide::Folded, y, mean, variance)
}

/// Standardized deviation under either sidedness convention.
pub fn standardize_with(side: EvpSide, y: f64, mean: f64, variance: f64) -> Result<f64, EvtError> {
    if !(variance > 0.0) {
        return Err(EvtError::ZeroVariance { variance });
    }
    let raw = (y - mean) / variance.sqrt();
    Ok(match side {
        EvpSide::Folded => raw.abs(),
        EvpSide::Upper => raw.max(0.0),
    })
}
