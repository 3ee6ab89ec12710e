use serde::{Deserialize, Serialize};

use super::histogram::ArrivalHistogram;
use crate::error::{Error, Result};
use crate::Real;

const MIN_BINS: usize = 5;
const MAX_ITERATIONS: usize = 500;

/// Weighted least-squares fit of `A·exp(−(t − t_ref)/τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit<T> {
    /// Model value at `reference_time`.
    pub amplitude: T,
    /// Center of the first fitted bin, s.
    pub reference_time: T,
    /// 1/τ, 1/s. May be zero (flat) or slightly negative on noisy data.
    pub decay_rate: T,
    /// τ, s. Infinite when the decay rate is zero.
    pub decay_time: T,
    /// First histogram bin included in the fit.
    pub first_bin: usize,
    pub times: Vec<T>,
    pub fitted: Vec<T>,
    /// Data minus model, one value per fitted bin.
    pub residuals: Vec<T>,
    pub iterations: usize,
}

/// Fits the bins whose left edge is at or after `start` (normally the
/// hardware delay). Weights are 1/σ² with σ = sqrt(max(count, 1)).
pub fn fit_exponential_background<T: Real>(hist: &ArrivalHistogram<T>, start: T) -> Result<ExponentialFit<T>> {
    let first = hist.first_bin_from(start);
    let centers = hist.bin_centers();
    let values: Vec<T> = hist.counts[first..].iter().map(|&c| T::from_u64(c).unwrap()).collect();
    let mut fit = fit_exponential(&centers[first..], &values)?;
    fit.first_bin = first;
    Ok(fit)
}

/// Levenberg–Marquardt on (A, 1/τ) with a log-linear starting point.
pub fn fit_exponential<T: Real>(times: &[T], values: &[T]) -> Result<ExponentialFit<T>> {
    if times.len() != values.len() {
        return Err(Error::invalid("values", "length must match times"));
    }
    if times.len() < MIN_BINS {
        return Err(Error::TooFewBins {
            found: times.len(),
            required: MIN_BINS,
        });
    }
    let t0 = times[0];
    // Work in units of the fitted span for conditioning.
    let span = (times[times.len() - 1] - t0).max(T::min_positive_value());
    let s: Vec<T> = times.iter().map(|&t| (t - t0) / span).collect();
    let w: Vec<T> = values.iter().map(|&y| T::one() / y.max(T::one())).collect();

    let chi2 = |a: T, k: T| -> T {
        s.iter()
            .zip(values)
            .zip(&w)
            .map(|((&si, &yi), &wi)| {
                let r = yi - a * (-k * si).exp();
                wi * r * r
            })
            .sum()
    };

    let (mut a, mut k) = initial_guess(&s, values);
    let mut current = chi2(a, k);
    let mut lambda = T::lit(1e-3);
    let mut iterations = 0;
    let tol = T::epsilon().sqrt() * T::lit(1e-3);

    while current > T::zero() {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NoConvergence(MAX_ITERATIONS));
        }
        // Normal equations JᵀWJ δ = JᵀW r.
        let (mut h00, mut h01, mut h11, mut g0, mut g1) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for ((&si, &yi), &wi) in s.iter().zip(values).zip(&w) {
            let e = (-k * si).exp();
            let r = yi - a * e;
            let ja = e;
            let jk = -a * si * e;
            h00 = h00 + wi * ja * ja;
            h01 = h01 + wi * ja * jk;
            h11 = h11 + wi * jk * jk;
            g0 = g0 + wi * ja * r;
            g1 = g1 + wi * jk * r;
        }
        let mut accepted = false;
        let mut step_small = false;
        for _ in 0..60 {
            let d00 = h00 * (T::one() + lambda);
            let d11 = h11 * (T::one() + lambda);
            let det = d00 * d11 - h01 * h01;
            if !(det.abs() > T::zero()) || !det.is_finite() {
                lambda = lambda * T::lit(10.0);
                continue;
            }
            let da = (d11 * g0 - h01 * g1) / det;
            let dk = (d00 * g1 - h01 * g0) / det;
            let (na, nk) = (a + da, k + dk);
            let trial = chi2(na, nk);
            if trial.is_finite() && trial <= current {
                step_small = da.abs() <= tol * (a.abs() + tol) && dk.abs() <= tol * (k.abs() + T::one());
                let improvement = current - trial;
                a = na;
                k = nk;
                let done = improvement <= current * T::epsilon() * T::lit(64.0);
                current = trial;
                lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                accepted = true;
                step_small = step_small || done;
                break;
            }
            lambda = lambda * T::lit(4.0);
        }
        if !accepted || step_small {
            break;
        }
    }
    if !a.is_finite() || !k.is_finite() {
        return Err(Error::NoConvergence(iterations));
    }

    let decay_rate = k / span;
    let fitted: Vec<T> = s.iter().map(|&si| a * (-k * si).exp()).collect();
    let residuals = values.iter().zip(&fitted).map(|(&y, &f)| y - f).collect();
    Ok(ExponentialFit {
        amplitude: a,
        reference_time: t0,
        decay_rate,
        decay_time: if decay_rate == T::zero() {
            T::infinity()
        } else {
            T::one() / decay_rate
        },
        first_bin: 0,
        times: times.to_vec(),
        fitted,
        residuals,
        iterations,
    })
}

/// Weighted regression of ln y on s over the positive values.
fn initial_guess<T: Real>(s: &[T], y: &[T]) -> (T, T) {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let mut n = 0;
    for (&si, &yi) in s.iter().zip(y) {
        if yi > T::zero() {
            let l = yi.ln();
            sw = sw + yi;
            sx = sx + yi * si;
            sy = sy + yi * l;
            sxx = sxx + yi * si * si;
            sxy = sxy + yi * si * l;
            n += 1;
        }
    }
    let mean = y.iter().copied().sum::<T>() / T::from_usize(y.len()).unwrap();
    if n < 2 {
        return (mean, T::zero());
    }
    let det = sw * sxx - sx * sx;
    if !(det.abs() > T::zero()) {
        return (mean, T::zero());
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    (intercept.exp(), -slope)
}
