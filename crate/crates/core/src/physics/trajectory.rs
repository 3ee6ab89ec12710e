use rand::Rng;
use serde::{Deserialize, Serialize};

use super::response::{last_start_pulse, steady_state_response};
use super::thermal::thermal_velocity_rms;
use super::{DriveConfig, TrapConfig};
use crate::error::{Error, Result};
use crate::real::fold_phase;
use crate::Real;

/// Radiation damping of the driven motion. Acts only once the detection
/// laser is on, from `onset` (seconds after the gated start pulse).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping<T> {
    /// 1/e time of the driven amplitude; `T::infinity()` disables damping.
    pub time_constant: T,
    pub onset: T,
}

impl<T: Real> Damping<T> {
    pub fn none() -> Self {
        Self {
            time_constant: T::infinity(),
            onset: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_constant > T::zero()) {
            return Err(Error::invalid("damping_time", "must be positive or infinite"));
        }
        if !(self.onset >= T::zero()) || !self.onset.is_finite() {
            return Err(Error::invalid("damping_onset", "must be non-negative"));
        }
        Ok(())
    }

    #[inline]
    pub fn factor(&self, t: T) -> T {
        let on = t - self.onset;
        if on <= T::zero() || self.time_constant.is_infinite() {
            T::one()
        } else {
            (-on / self.time_constant).exp()
        }
    }
}

/// COM velocity during one detection window. Time runs from the gated
/// start pulse, i.e. the last start pulse of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComTrajectory<T> {
    pub omega_z: T,
    pub driven_amplitude: T,
    /// Phase of the driven motion at the start pulse.
    pub driven_phase: T,
    pub damping: Damping<T>,
    pub thermal_amplitude: T,
    pub thermal_phase: T,
}

impl<T: Real> ComTrajectory<T> {
    /// Driven motion only, no thermal component.
    pub fn driven(trap: &TrapConfig<T>, drive: &DriveConfig<T>, damping: Damping<T>) -> Result<Self> {
        damping.validate()?;
        let state = steady_state_response(trap, drive)?;
        // ż = v sin(ω_z t + φ) with t from the drive start; shift the
        // origin to the last start pulse so the phase is drive-locked.
        let origin = last_start_pulse(drive);
        Ok(Self {
            omega_z: trap.omega_z,
            driven_amplitude: state.velocity_amplitude,
            driven_phase: fold_phase(trap.omega_z * origin + state.phase),
            damping,
            thermal_amplitude: T::zero(),
            thermal_phase: T::zero(),
        })
    }

    #[inline]
    pub fn driven_velocity(&self, t: T) -> T {
        self.driven_amplitude * (self.omega_z * t + self.driven_phase).sin() * self.damping.factor(t)
    }

    #[inline]
    pub fn thermal_velocity(&self, t: T) -> T {
        self.thermal_amplitude * (self.omega_z * t + self.thermal_phase).sin()
    }

    #[inline]
    pub fn velocity(&self, t: T) -> T {
        self.driven_velocity(t) + self.thermal_velocity(t)
    }

    /// Upper bound on |ż(t)| for t ≥ 0.
    pub fn speed_bound(&self) -> T {
        self.driven_amplitude + self.thermal_amplitude
    }
}

/// Driven trajectory plus one thermal draw: Boltzmann-distributed mode
/// energy and uniform phase, so the velocity is rms sqrt(k_B T / (n m))
/// over the ensemble.
pub fn com_trajectory<T: Real, R: Rng + ?Sized>(
    trap: &TrapConfig<T>,
    drive: &DriveConfig<T>,
    damping: Damping<T>,
    rng: &mut R,
) -> Result<ComTrajectory<T>> {
    let mut traj = ComTrajectory::driven(trap, drive, damping)?;
    // Energy E = k_B T · Exp(1); velocity amplitude sqrt(2E / (n m)).
    let rms = thermal_velocity_rms(trap);
    let energy = T::sample_exp1(rng);
    traj.thermal_amplitude = rms * (T::two() * energy).sqrt();
    traj.thermal_phase = T::TAU() * T::sample_unit(rng);
    Ok(traj)
}
