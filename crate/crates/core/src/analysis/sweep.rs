use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::fit_exponential_background;
use super::histogram::build_histogram;
use super::proxy::{amplitude_proxy, ProxyInput};
use crate::error::{Error, Result};
use crate::photon::{expected_counts, run_experiment_with, DetectionConfig, RunOptions};
use crate::physics::{steady_state_response, ComTrajectory, DriveConfig, TrapConfig};
use crate::Real;

/// Drive-frequency scan. Row `i` of each map belongs to `omegas[i]`;
/// columns are the fitted histogram bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep<T> {
    /// Drive angular frequencies, rad/s.
    pub omegas: Vec<T>,
    /// Centers of the bins after the hardware delay, s.
    pub bin_centers: Vec<T>,
    /// Residuals of the exponential background fit.
    pub rows: Vec<Vec<T>>,
    /// Std-dev of each residual row.
    pub proxy: Vec<T>,
    /// Shot-noise expectation of the proxy with no modulation,
    /// sqrt(mean fitted counts).
    pub noise_floor: Vec<T>,
    /// Closed-form velocity amplitude per drive frequency, m/s.
    pub theory_velocity: Vec<T>,
    /// Closed-form phase per drive frequency, rad.
    pub theory_phase: Vec<T>,
    /// Expected counts minus the unmodulated expectation, noise free.
    pub theory_rows: Vec<Vec<T>>,
    pub theory_proxy: Vec<T>,
}

impl<T: Real> FrequencySweep<T> {
    /// Proxy with the shot-noise floor removed in quadrature.
    pub fn excess_amplitude(&self) -> Vec<T> {
        self.proxy
            .iter()
            .zip(&self.noise_floor)
            .map(|(&p, &f)| (p * p - f * f).max(T::zero()).sqrt())
            .collect()
    }
}

/// Seed for sweep point `index`; cycle seeds are derived from it.
pub fn point_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add((index as u64) << 32)
}

/// Runs one experiment per drive frequency and reduces each to a residual
/// row and its standard deviation.
pub fn frequency_sweep<T: Real>(
    trap: &TrapConfig<T>,
    drive_template: &DriveConfig<T>,
    cfg: &DetectionConfig<T>,
    omegas: &[T],
    n_cycles: usize,
    base_seed: u64,
    opts: &RunOptions<T>,
) -> Result<FrequencySweep<T>> {
    if omegas.is_empty() {
        return Err(Error::invalid("omegas", "sweep grid is empty"));
    }
    let points: Vec<Point<T>> = omegas
        .par_iter()
        .enumerate()
        .map(|(i, &omega_d)| {
            let drive = DriveConfig {
                omega_d,
                ..*drive_template
            };
            sweep_point(trap, &drive, cfg, n_cycles, point_seed(base_seed, i), opts)
        })
        .collect::<Result<_>>()?;

    let bin_centers = points[0].bin_centers.clone();
    let mut out = FrequencySweep {
        omegas: omegas.to_vec(),
        bin_centers,
        rows: Vec::with_capacity(points.len()),
        proxy: Vec::with_capacity(points.len()),
        noise_floor: Vec::with_capacity(points.len()),
        theory_velocity: Vec::with_capacity(points.len()),
        theory_phase: Vec::with_capacity(points.len()),
        theory_rows: Vec::with_capacity(points.len()),
        theory_proxy: Vec::with_capacity(points.len()),
    };
    for p in points {
        out.rows.push(p.residuals);
        out.proxy.push(p.proxy);
        out.noise_floor.push(p.noise_floor);
        out.theory_velocity.push(p.theory_velocity);
        out.theory_phase.push(p.theory_phase);
        out.theory_rows.push(p.theory_row);
        out.theory_proxy.push(p.theory_proxy);
    }
    Ok(out)
}

struct Point<T> {
    bin_centers: Vec<T>,
    residuals: Vec<T>,
    proxy: T,
    noise_floor: T,
    theory_velocity: T,
    theory_phase: T,
    theory_row: Vec<T>,
    theory_proxy: T,
}

fn sweep_point<T: Real>(
    trap: &TrapConfig<T>,
    drive: &DriveConfig<T>,
    cfg: &DetectionConfig<T>,
    n_cycles: usize,
    seed: u64,
    opts: &RunOptions<T>,
) -> Result<Point<T>> {
    let traces = run_experiment_with(trap, drive, cfg, n_cycles, seed, opts)?;
    let hist = build_histogram(&traces, cfg.bin_width, cfg.detect_window, cfg.acquisition)?;
    let fit = fit_exponential_background(&hist, cfg.hardware_delay)?;
    let proxy = amplitude_proxy(ProxyInput::Residuals(&fit.residuals))?;
    let nf = T::from_usize(fit.fitted.len()).unwrap();
    let noise_floor = (fit.fitted.iter().copied().sum::<T>() / nf).max(T::zero()).sqrt();

    let state = steady_state_response(trap, drive)?;
    let driven = ComTrajectory::driven(trap, drive, cfg.damping())?;
    let still = ComTrajectory {
        driven_amplitude: T::zero(),
        ..driven
    };
    let edges = &hist.bin_edges[fit.first_bin..];
    let with = expected_counts(&driven, cfg, n_cycles, edges);
    let without = expected_counts(&still, cfg, n_cycles, edges);
    let theory_row: Vec<T> = with.iter().zip(&without).map(|(&a, &b)| a - b).collect();
    let theory_proxy = amplitude_proxy(ProxyInput::Residuals(&theory_row))?;

    Ok(Point {
        bin_centers: fit.times,
        residuals: fit.residuals,
        proxy,
        noise_floor,
        theory_velocity: state.velocity_amplitude,
        theory_phase: state.phase,
        theory_row,
        theory_proxy,
    })
}

/// Full width at half maximum of the highest peak of `y(x)`, with linear
/// interpolation of the half-maximum crossings. `None` if the curve does
/// not fall below half maximum on both sides.
pub fn full_width_half_max<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    let peak = (0..y.len()).fold(0, |b, i| if y[i] > y[b] { i } else { b });
    let half = y[peak] * T::half();
    if !(half > T::zero()) {
        return None;
    }
    let cross = |i: usize, j: usize| -> T {
        // y[i] ≥ half > y[j]
        x[i] + (x[j] - x[i]) * (y[i] - half) / (y[i] - y[j])
    };
    let left = (0..peak).rev().find(|&j| y[j] < half).map(|j| cross(j + 1, j))?;
    let right = (peak + 1..y.len()).find(|&j| y[j] < half).map(|j| cross(j - 1, j))?;
    Some(right - left)
}

/// Index of the smallest `y` with `lo ≤ x ≤ hi`.
pub fn minimum_between<T: Real>(x: &[T], y: &[T], lo: T, hi: T) -> Option<usize> {
    (0..x.len().min(y.len()))
        .filter(|&i| x[i] >= lo && x[i] <= hi)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if y[b] <= y[i] => Some(b),
            _ => Some(i),
        })
}

/// Vertex of the least-squares parabola through the points within `half`
/// samples of `index`. Near a null the power proxy (signal² plus a flat
/// noise term) is quadratic in detuning, so the vertex averages out the
/// per-point noise that makes a bare argmin jitter. Falls back to
/// `x[index]` when the fit is not convex; the result is clamped to the
/// neighbouring samples.
pub fn refine_minimum<T: Real>(x: &[T], y: &[T], index: usize, half: usize) -> T {
    let n = x.len().min(y.len());
    if index >= n {
        return T::nan();
    }
    let lo = index.saturating_sub(half);
    let hi = (index + half).min(n - 1);
    if hi - lo < 2 {
        return x[index];
    }
    let x0 = x[index];
    // Normal equations for y = a + b u + c u², u = x − x0.
    let mut s = [T::zero(); 5];
    let mut t = [T::zero(); 3];
    for i in lo..=hi {
        let u = x[i] - x0;
        let mut p = T::one();
        for k in 0..5 {
            s[k] = s[k] + p;
            if k < 3 {
                t[k] = t[k] + p * y[i];
            }
            p = p * u;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det3 = |m: [[T; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(m);
    if d == T::zero() {
        return x0;
    }
    let with_col = |c: usize| {
        let mut r = m;
        for row in 0..3 {
            r[row][c] = t[row];
        }
        det3(r) / d
    };
    let (b, c) = (with_col(1), with_col(2));
    if !(c > T::zero()) {
        return x0;
    }
    let left = x[index.saturating_sub(1)];
    let right = x[(index + 1).min(n - 1)];
    (x0 - b / (c + c)).max(left).min(right)
}
