//! Analytic shot-noise projection of the force sensitivity.
//!
//! For a detected rate r(t) = r₀[1 + δ e^{−(t−t₀)/τ} sin(ω_z t + φ)] over a
//! detection window of length L after the delay, the ω_z Fourier component
//! of N summed cycles has signal power (N r₀ δ τ (1 − e^{−L/τ}) / 2)² and
//! shot-noise power N r₀ L. With δ = (2/γ) k F t_d / (2 n m) and
//! τ_M = N T_c this gives
//!
//! S_F = n m γ sqrt(T_c) / (k t_d sqrt(r₀ c)),  c = τ² (1 − e^{−L/τ})² / (4L),
//!
//! independent of the force and of N. It matches the SNR estimator used on
//! simulated spectra up to spectral-leakage losses.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetPoint {
    pub ion_count: f64,
    pub ion_mass: f64,
    pub charge: f64,
    pub drive_duration: f64,
    pub cycle_overhead: f64,
    /// Detected zero-velocity rate per ion before any collection gain.
    pub rate_per_ion: f64,
    pub collection_gain: f64,
    pub gamma: f64,
    pub wavevector: f64,
    /// Detection window after the hardware delay, s.
    pub window: f64,
    pub damping_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Projection {
    pub cycle_time: f64,
    pub detected_rate: f64,
    /// N/√Hz; `None` when no photons are detected.
    pub force_sensitivity: Option<f64>,
    /// V/m/√Hz for the same crystal.
    pub field_sensitivity: Option<f64>,
}

fn window_factor(window: f64, damping_time: f64) -> f64 {
    if damping_time.is_infinite() {
        return window / 4.0;
    }
    let captured = damping_time * -(-window / damping_time).exp_m1();
    captured * captured / (4.0 * window)
}

pub fn project(p: &BudgetPoint) -> Projection {
    let cycle_time = p.drive_duration + p.cycle_overhead;
    let detected_rate = p.rate_per_ion * p.collection_gain * p.ion_count;
    let rc = detected_rate * window_factor(p.window, p.damping_time);
    let force = (rc > 0.0).then(|| {
        p.ion_count * p.ion_mass * p.gamma * cycle_time.sqrt() / (p.wavevector * p.drive_duration * rc.sqrt())
    });
    Projection {
        cycle_time,
        detected_rate,
        force_sensitivity: force,
        field_sensitivity: force.map(|f| f / (p.ion_count * p.charge)),
    }
}
