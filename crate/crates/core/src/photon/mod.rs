//! Doppler-modulated photon synthesis and gated acquisition.
//!
//! Time origin for every event is the gated start pulse (the last start
//! pulse of the drive). The detection laser produces no photons before
//! `hardware_delay`, and acquisition ends at `detect_window`.

mod engine;
pub mod events;
mod expected;
mod rate;

pub use engine::{cycle_seed, generate_cycle, run_experiment, run_experiment_with, CycleTrace, RunOptions};
pub use expected::expected_counts;
pub use rate::{rate_bound, scatter_rate};

use serde::{Deserialize, Serialize};

use crate::constants::{DEFAULT_LINEWIDTH_HZ, DEFAULT_WAVELENGTH};
use crate::error::{Error, Result};
use crate::physics::Damping;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// base·[1 + (2/γ) k ż], clamped at zero.
    Linear,
    /// Full Lorentzian line shape evaluated at the Doppler-shifted detuning.
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionMode {
    /// Time-to-amplitude converter: first photon per cycle only.
    TacFirstPhoton,
    /// Multichannel scaler: every photon in the window.
    McsMultiPhoton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig<T> {
    /// Atomic linewidth γ, rad/s.
    pub gamma: T,
    /// Laser wavevector along the motion, rad/m.
    pub wavevector: T,
    /// Laser detuning from resonance, rad/s.
    pub detuning: T,
    /// Detected photons/s from the whole crystal at zero velocity.
    pub base_rate: T,
    /// AOM and electronics delay before the first photon can arrive, s.
    pub hardware_delay: T,
    /// End of acquisition after the start pulse, s.
    pub detect_window: T,
    /// Radiation-damping 1/e time of the driven motion, s. Not a measured
    /// value; a fit-adjustable placeholder.
    pub damping_time: T,
    pub rate_model: RateModel,
    pub acquisition: AcquisitionMode,
    pub bin_width: T,
}

impl<T: Real> Default for DetectionConfig<T> {
    fn default() -> Self {
        let gamma = T::TAU() * T::lit(DEFAULT_LINEWIDTH_HZ);
        Self {
            gamma,
            wavevector: T::TAU() / T::lit(DEFAULT_WAVELENGTH),
            detuning: -gamma * T::half(),
            base_rate: T::lit(3.0e5),
            hardware_delay: T::lit(4.0e-6),
            detect_window: T::lit(15.0e-6),
            damping_time: T::lit(25.0e-6),
            rate_model: RateModel::Linear,
            acquisition: AcquisitionMode::McsMultiPhoton,
            bin_width: T::lit(50.0e-9),
        }
    }
}

impl<T: Real> DetectionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        if !self.wavevector.is_finite() || !self.detuning.is_finite() {
            return Err(Error::invalid("wavevector", "wavevector and detuning must be finite"));
        }
        if !(self.base_rate >= T::zero()) || !self.base_rate.is_finite() {
            return Err(Error::invalid("base_rate", "must be non-negative"));
        }
        if !(self.hardware_delay >= T::zero()) {
            return Err(Error::invalid("hardware_delay", "must be non-negative"));
        }
        if !(self.detect_window > self.hardware_delay) || !self.detect_window.is_finite() {
            return Err(Error::invalid("detect_window", "must exceed hardware_delay"));
        }
        if !(self.bin_width > T::zero()) || self.bin_width > self.detect_window / T::lit(10.0) {
            return Err(Error::invalid(
                "bin_width",
                "must be positive and at most detect_window/10",
            ));
        }
        self.damping().validate()
    }

    /// Damping starts when the laser comes on, at the hardware delay.
    pub fn damping(&self) -> Damping<T> {
        Damping {
            time_constant: self.damping_time,
            onset: self.hardware_delay,
        }
    }

    /// Linear-response modulation depth (2/γ)·k·ż for speed `velocity`.
    pub fn modulation_depth(&self, velocity: T) -> T {
        T::two() / self.gamma * self.wavevector * velocity
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = DetectionConfig::<f64>::default();
        cfg.validate().unwrap();
        assert!((cfg.gamma - 1.194e8).abs() < 1e5);
        assert!((cfg.wavevector - 2.007e7).abs() < 1e4);
        // ~3-5 photons in a 15 μs window
        let photons = cfg.base_rate * (cfg.detect_window - cfg.hardware_delay);
        assert!((3.0..=5.0).contains(&photons));
    }

    #[test]
    fn validation_rejects() {
        let base = DetectionConfig::<f64>::default();
        let mut c = base;
        c.gamma = 0.0;
        assert!(c.validate().is_err());
        c = base;
        c.base_rate = -1.0;
        assert!(c.validate().is_err());
        c = base;
        c.hardware_delay = -1e-6;
        assert!(c.validate().is_err());
        c = base;
        c.bin_width = 2e-6;
        assert!(c.validate().is_err());
        c = base;
        c.damping_time = 0.0;
        assert!(c.validate().is_err());
        c = base;
        c.damping_time = f64::INFINITY;
        assert!(c.validate().is_ok());
    }
}
