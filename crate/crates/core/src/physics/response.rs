use serde::{Deserialize, Serialize};

use super::{DriveConfig, TrapConfig};
use crate::error::{Error, Result};
use crate::real::fold_phase;
use crate::Real;

/// Largest admissible fractional detuning |ω_z − ω_d|/ω_z.
pub const MAX_FRACTIONAL_DETUNING: f64 = 0.1;

/// Below this value of |ω_z − ω_d|·t_d the on-resonance limit is used.
const RESONANCE_BRANCH: f64 = 1e-6;

/// Free COM oscillation left behind by the drive pulse, ż = v·sin(ω_z t + φ)
/// with t measured from the start of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationState<T> {
    /// |v|, m/s.
    pub velocity_amplitude: T,
    /// φ folded into (−π, π]; a negative closed-form amplitude adds π.
    pub phase: T,
    /// |v|/ω_z, m.
    pub displacement_amplitude: T,
}

/// Velocity amplitude and phase of the COM mode at the end of a drive pulse
/// of length t_d, starting from rest with no damping:
///
/// v = 2F ω_d / [n m (ω_z² − ω_d²)] · sin[(ω_z − ω_d) t_d / 2],
/// φ = (ω_d − ω_z) t_d / 2,
///
/// with F = n·F⁽ⁱᵒⁿ⁾, so only the per-ion force enters. On resonance the
/// limit v = F t_d / (2 n m), φ = 0 is returned.
pub fn steady_state_response<T: Real>(trap: &TrapConfig<T>, drive: &DriveConfig<T>) -> Result<OscillationState<T>> {
    trap.validate()?;
    drive.validate()?;
    let delta = trap.omega_z - drive.omega_d;
    let ratio = (delta / trap.omega_z).abs();
    if ratio >= T::lit(MAX_FRACTIONAL_DETUNING) {
        return Err(Error::OffResonance {
            ratio: ratio.as_f64(),
            limit: MAX_FRACTIONAL_DETUNING,
        });
    }

    let accel = drive.force_per_ion / trap.ion_mass;
    let t_d = drive.drive_duration;
    let (signed_v, phase) = if (delta * t_d).abs() < T::lit(RESONANCE_BRANCH) {
        (accel * t_d * T::half(), T::zero())
    } else {
        let half_beat = delta * t_d * T::half();
        let v = T::two() * accel * drive.omega_d / (delta * (trap.omega_z + drive.omega_d)) * half_beat.sin();
        (v, -half_beat)
    };

    let (v, phase) = if signed_v < T::zero() {
        (-signed_v, phase + T::PI())
    } else {
        (signed_v, phase)
    };
    Ok(OscillationState {
        velocity_amplitude: v,
        phase: fold_phase(phase),
        displacement_amplitude: v / trap.omega_z,
    })
}

/// On-resonance COM displacement amplitude z = F t_d / (2 n m ω_z) for a
/// total force F applied for t_d.
pub fn com_displacement<T: Real>(trap: &TrapConfig<T>, total_force: T, drive_duration: T) -> Result<T> {
    trap.validate()?;
    if !(drive_duration >= T::zero()) {
        return Err(Error::invalid("drive_duration", "must be non-negative"));
    }
    Ok(total_force * drive_duration / (T::two() * trap.total_mass() * trap.omega_z))
}

/// Time of the last start pulse inside the drive pulse, measured from the
/// start of the drive. Start pulses sit on the drive's upward zero
/// crossings, so this is the largest whole number of drive periods not
/// exceeding t_d.
pub fn last_start_pulse<T: Real>(drive: &DriveConfig<T>) -> T {
    let period = T::TAU() / drive.omega_d;
    let cycles = drive.drive_duration / period;
    let slack = cycles * T::epsilon() * T::lit(16.0);
    (cycles + slack).floor() * period
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::BE9_ION_MASS;
    use std::f64::consts::{PI, TAU};

    fn reference_trap() -> TrapConfig<f64> {
        TrapConfig::beryllium(130, TAU * 867e3, 0.5e-3)
    }

    #[test]
    fn resonant_amplitude_at_reference_point() {
        let trap = reference_trap();
        let drive = DriveConfig::new(377e-24 / 130.0, trap.omega_z, 1e-3);
        let s = steady_state_response(&trap, &drive).unwrap();
        // F t_d / (2 n m) with m = 1.496e-26 kg.
        assert!((s.velocity_amplitude - 0.0969).abs() < 5e-4, "{}", s.velocity_amplitude);
        assert_eq!(s.phase, 0.0);
        assert!((s.displacement_amplitude - 1.78e-8).abs() < 0.02e-8);
    }

    #[test]
    fn zero_force_keeps_phase() {
        let trap = reference_trap();
        let omega_d = trap.omega_z + TAU * 300.0;
        let drive = DriveConfig::new(0.0, omega_d, 1e-3);
        let s = steady_state_response(&trap, &drive).unwrap();
        assert_eq!(s.velocity_amplitude, 0.0);
        assert!((s.phase - fold_phase((omega_d - trap.omega_z) * 1e-3 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn detuning_null() {
        let trap = reference_trap();
        let t_d = 1e-3;
        for sign in [-1.0, 1.0] {
            let drive = DriveConfig::new(2.9e-24, trap.omega_z + sign * TAU / t_d, t_d);
            let s = steady_state_response(&trap, &drive).unwrap();
            let resonant = 2.9e-24 * t_d / (2.0 * BE9_ION_MASS);
            assert!(s.velocity_amplitude < 1e-9 * resonant);
        }
    }

    #[test]
    fn preconditions() {
        let trap = reference_trap();
        let far = DriveConfig::new(1e-24, trap.omega_z * 1.2, 1e-3);
        assert!(matches!(
            steady_state_response(&trap, &far),
            Err(Error::OffResonance { .. })
        ));
        let short = DriveConfig::new(1e-24, trap.omega_z, 5e-6);
        assert!(matches!(
            steady_state_response(&trap, &short),
            Err(Error::DriveTooShort { .. })
        ));
        let mut bad = reference_trap();
        bad.ion_mass = -1.0;
        let ok = DriveConfig::new(1e-24, trap.omega_z, 1e-3);
        assert!(steady_state_response(&bad, &ok).is_err());
    }

    #[test]
    fn branch_is_continuous() {
        let trap = reference_trap();
        let t_d = 1e-3;
        let on = steady_state_response(&trap, &DriveConfig::new(1e-24, trap.omega_z, t_d)).unwrap();
        // |Δ| t_d just above the branch threshold.
        let off = steady_state_response(&trap, &DriveConfig::new(1e-24, trap.omega_z - 2e-6 / t_d, t_d)).unwrap();
        assert!((on.velocity_amplitude - off.velocity_amplitude).abs() < 1e-9 * on.velocity_amplitude);
        assert!(off.phase.abs() < 1e-5);
    }

    #[test]
    fn sidelobe_sign_goes_into_phase() {
        let trap = reference_trap();
        let t_d = 1e-3;
        // Between the first and second null the closed form is negative.
        let omega_d = trap.omega_z - 1.5 * TAU / t_d;
        let s = steady_state_response(&trap, &DriveConfig::new(1e-24, omega_d, t_d)).unwrap();
        assert!(s.velocity_amplitude > 0.0);
        let expected = fold_phase((omega_d - trap.omega_z) * t_d / 2.0 + PI);
        assert!((s.phase - expected).abs() < 1e-9);
    }

    #[test]
    fn com_displacement_reference_value() {
        let z = com_displacement(&reference_trap(), 377e-24, 1e-3).unwrap();
        assert!((z - 18e-9).abs() < 0.03 * 18e-9, "{z}");
        assert_eq!(com_displacement(&reference_trap(), 0.0, 1e-3).unwrap(), 0.0);
        let z2 = com_displacement(&reference_trap(), 377e-24, 2e-3).unwrap();
        assert!((z2 - 2.0 * z).abs() < 1e-22);
        let mut bad = reference_trap();
        bad.ion_count = 0;
        assert!(com_displacement(&bad, 1.0, 1.0).is_err());
        bad = reference_trap();
        bad.omega_z = 0.0;
        assert!(com_displacement(&bad, 1.0, 1.0).is_err());
    }

    #[test]
    fn start_pulse_grid() {
        let w = TAU * 867e3;
        // Exactly 867 drive periods in 1 ms.
        let t = last_start_pulse(&DriveConfig::new(0.0, w, 1e-3));
        assert!((t - 1e-3).abs() < 1e-15);
        let t = last_start_pulse(&DriveConfig::new(0.0, w, 1e-3 + 0.5 / 867e3));
        assert!((t - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn works_in_f32() {
        let trap = TrapConfig::<f32>::beryllium(130, (TAU * 867e3) as f32, 0.5e-3);
        let z = com_displacement(&trap, 377e-24f32, 1e-3).unwrap();
        assert!((z - 1.78e-8).abs() < 0.02e-8);
        let s = steady_state_response(&trap, &DriveConfig::new(2.9e-24f32, trap.omega_z, 1e-3)).unwrap();
        assert!((s.velocity_amplitude - 0.0969).abs() < 1e-3);
    }
}
