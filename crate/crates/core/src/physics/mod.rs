//! COM oscillator models and calibration arithmetic.
//!
//! The crystal enters only through its COM coordinate and its ion count.
//! All quantities are SI: kg, s, rad/s, N, m, K, V/m.

mod calibration;
mod response;
mod thermal;
mod trajectory;

pub use calibration::{calibrate_force, geometry_factor, CalibrationInput, FieldCalibration};
pub use response::{
    com_displacement, last_start_pulse, steady_state_response, OscillationState, MAX_FRACTIONAL_DETUNING,
};
pub use thermal::{thermal_extent, thermal_velocity_rms, ThermalMode};
pub use trajectory::{com_trajectory, ComTrajectory, Damping};

use serde::{Deserialize, Serialize};

use crate::constants::{BE9_ION_MASS, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::Real;

/// Trap and crystal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig<T> {
    /// Mass of one ion, kg.
    pub ion_mass: T,
    pub ion_count: u32,
    /// Axial COM angular frequency, rad/s.
    pub omega_z: T,
    /// Axial mode temperature, K.
    pub temperature: T,
    /// Charge per ion, C.
    pub charge: T,
}

impl<T: Real> TrapConfig<T> {
    /// ⁹Be⁺ crystal with unit charge per ion.
    pub fn beryllium(ion_count: u32, omega_z: T, temperature: T) -> Self {
        Self {
            ion_mass: T::lit(BE9_ION_MASS),
            ion_count,
            omega_z,
            temperature,
            charge: T::lit(ELEMENTARY_CHARGE),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ion_count < 1 {
            return Err(Error::invalid("ion_count", "must be at least 1"));
        }
        if !(self.omega_z > T::zero()) || !self.omega_z.is_finite() {
            return Err(Error::invalid("omega_z", "must be positive and finite"));
        }
        if !(self.ion_mass > T::zero()) || !self.ion_mass.is_finite() {
            return Err(Error::invalid("ion_mass", "must be positive and finite"));
        }
        if !(self.temperature >= T::zero()) || !self.temperature.is_finite() {
            return Err(Error::invalid("temperature", "must be non-negative"));
        }
        if !self.charge.is_finite() {
            return Err(Error::invalid("charge", "must be finite"));
        }
        Ok(())
    }

    pub fn ion_count_real(&self) -> T {
        T::from_u32(self.ion_count).unwrap()
    }

    /// n·m, kg.
    pub fn total_mass(&self) -> T {
        self.ion_count_real() * self.ion_mass
    }
}

/// Pulsed sinusoidal drive `F sin(ω_d t)` applied for `drive_duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig<T> {
    /// Zero-to-peak force on one ion, N.
    pub force_per_ion: T,
    /// Drive angular frequency, rad/s.
    pub omega_d: T,
    /// Drive pulse length t_d, s.
    pub drive_duration: T,
}

impl<T: Real> DriveConfig<T> {
    pub fn new(force_per_ion: T, omega_d: T, drive_duration: T) -> Self {
        Self {
            force_per_ion,
            omega_d,
            drive_duration,
        }
    }

    /// Total force on the crystal, n·F⁽ⁱᵒⁿ⁾.
    pub fn total_force(&self, trap: &TrapConfig<T>) -> T {
        trap.ion_count_real() * self.force_per_ion
    }

    /// Minimum admissible pulse length, ten drive periods.
    pub fn minimum_duration(&self) -> T {
        T::lit(10.0) * T::TAU() / self.omega_d
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.force_per_ion >= T::zero()) || !self.force_per_ion.is_finite() {
            return Err(Error::invalid("force_per_ion", "must be non-negative and finite"));
        }
        if !(self.omega_d > T::zero()) || !self.omega_d.is_finite() {
            return Err(Error::invalid("omega_d", "must be positive and finite"));
        }
        if !(self.drive_duration > T::zero()) || !self.drive_duration.is_finite() {
            return Err(Error::invalid("drive_duration", "must be positive and finite"));
        }
        let minimum = self.minimum_duration();
        if self.drive_duration < minimum {
            return Err(Error::DriveTooShort {
                duration: self.drive_duration.as_f64(),
                minimum: minimum.as_f64(),
            });
        }
        Ok(())
    }
}
