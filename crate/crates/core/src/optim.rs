//! Derivative-free minimization by the Nelder-Mead simplex method.
//!
//! Standard coefficients: reflection 1, expansion 2, contraction 0.5,
//! shrink 0.5. The search stops when both the value spread across the simplex
//! and the simplex diameter fall below `tolerance` (value spread alone stops
//! too early when the simplex straddles a minimum symmetrically), or after
//! `max_iter` iterations. Infinite objective values are legal and simply rank
//! worst, which is how callers express hard parameter bounds.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("objective is not finite at the initial point")]
    NoProgress,
    #[error("initial point must be non-empty")]
    EmptyPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

/// Initial simplex step along dimension `i`: proportional to the coordinate,
/// with an absolute fallback for coordinates near zero.
fn initial_step(x: f64) -> f64 {
    if x.abs() > 1e-6 {
        0.1 * x.abs()
    } else {
        0.25
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` starting from `initial`. The returned value never exceeds
/// the objective at the starting point: the incumbent best vertex is only
/// ever replaced by a better one.
pub fn nelder_mead<F>(
    mut f: F,
    initial: &[f64],
    tolerance: f64,
    max_iter: usize,
) -> Result<NmResult, OptimError>
where
    F: FnMut(&[f64]) -> f64,
{
    let k = initial.len();
    if k == 0 {
        return Err(OptimError::EmptyPoint);
    }
    let f0 = sanitize(f(initial));
    if !f0.is_finite() {
        return Err(OptimError::NoProgress);
    }

    // k+1 vertices: the start plus one orthogonal step per dimension.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((initial.to_vec(), f0));
    for i in 0..k {
        let mut v = initial.to_vec();
        v[i] += initial_step(v[i]);
        let fv = sanitize(f(&v));
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("values are NaN-free"));
        let spread = simplex[k].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(x, b)| (x - b).abs()))
            .fold(0.0_f64, f64::max);
        if spread.is_finite() && spread <= tolerance && diameter <= tolerance {
            break;
        }
        iterations += 1;

        // Centroid of all vertices but the worst.
        let mut centroid = vec![0.0; k];
        for (v, _) in &simplex[..k] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / k as f64;
            }
        }
        let worst = simplex[k].clone();
        let at = |scale: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + scale * (c - w))
                .collect()
        };

        let reflected = at(ALPHA);
        let fr = sanitize(f(&reflected));
        if fr < simplex[0].1 {
            // Best so far: try to go further in the same direction.
            let expanded = at(GAMMA);
            let fe = sanitize(f(&expanded));
            simplex[k] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[k - 1].1 {
            simplex[k] = (reflected, fr);
            continue;
        }
        // Contract toward the better of worst/reflected.
        let contracted = if fr < worst.1 { at(RHO) } else { at(-RHO) };
        let fc = sanitize(f(&contracted));
        if fc < fr.min(worst.1) {
            simplex[k] = (contracted, fc);
            continue;
        }
        // Shrink everything toward the best vertex.
        let best = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (x, b) in v.iter_mut().zip(&best) {
                *x = b + SIGMA * (*x - b);
            }
            *fv = sanitize(f(v));
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("values are NaN-free"));
    let (point, value) = simplex.swap_remove(0);
    Ok(NmResult {
        point,
        value,
        iterations,
    })
}
