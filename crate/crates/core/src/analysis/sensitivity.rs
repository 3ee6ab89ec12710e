use serde::{Deserialize, Serialize};

use super::spectrum::SpectrumResult;
use crate::error::{Error, Result};
use crate::physics::{com_displacement, DriveConfig, TrapConfig};
use crate::Real;

/// One-sigma inputs for first-order error propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uncertainties<T> {
    /// Relative uncertainty of the per-ion force calibration.
    pub force_per_ion_rel: T,
    /// Absolute uncertainty of the ion count.
    pub ion_count_abs: T,
    /// Relative uncertainty of the SNR estimate.
    pub snr_rel: T,
}

impl<T: Real> Default for Uncertainties<T> {
    fn default() -> Self {
        Self {
            force_per_ion_rel: T::zero(),
            ion_count_abs: T::zero(),
            snr_rel: T::zero(),
        }
    }
}

/// Bandwidth-normalized force and displacement sensitivity at SNR = 1.
/// Every `*_unc` field is a one-sigma absolute uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport<T> {
    pub total_force: T,
    pub total_force_unc: T,
    pub snr: T,
    /// τ_M including dead time, s.
    pub measurement_time: T,
    /// 1/τ_M, Hz.
    pub bandwidth: T,
    /// N/√Hz.
    pub force_sensitivity: T,
    pub force_sensitivity_unc: T,
    /// On-resonance COM amplitude, m.
    pub displacement: T,
    pub displacement_unc: T,
    /// m/√Hz.
    pub displacement_sensitivity: T,
    pub displacement_sensitivity_unc: T,
}

pub fn sensitivity_report<T: Real>(
    spectrum: &SpectrumResult<T>,
    total_force: T,
    measurement_time: T,
    trap: &TrapConfig<T>,
    drive: &DriveConfig<T>,
    unc: &Uncertainties<T>,
) -> Result<SensitivityReport<T>> {
    sensitivity_from_snr(spectrum.snr, total_force, measurement_time, trap, drive, unc)
}

/// S_F = (F / snr)·sqrt(τ_M); z from the on-resonance COM amplitude and
/// S_z = (z / snr)·sqrt(τ_M).
pub fn sensitivity_from_snr<T: Real>(
    snr: T,
    total_force: T,
    measurement_time: T,
    trap: &TrapConfig<T>,
    drive: &DriveConfig<T>,
    unc: &Uncertainties<T>,
) -> Result<SensitivityReport<T>> {
    if !(snr > T::zero()) {
        return Err(Error::ZeroSnr);
    }
    if !(measurement_time > T::zero()) {
        return Err(Error::invalid("measurement_time", "must be positive"));
    }
    let root_tau = measurement_time.sqrt();
    let displacement = com_displacement(trap, total_force, drive.drive_duration)?;

    // F = n·f, so n enters F but cancels in z = f t_d / (2 m ω_z).
    let n_rel = unc.ion_count_abs / trap.ion_count_real();
    let force_rel = unc.force_per_ion_rel.hypot(n_rel);
    let z_rel = unc.force_per_ion_rel;

    let force_sensitivity = total_force / snr * root_tau;
    let displacement_sensitivity = displacement / snr * root_tau;
    Ok(SensitivityReport {
        total_force,
        total_force_unc: total_force * force_rel,
        snr,
        measurement_time,
        bandwidth: T::one() / measurement_time,
        force_sensitivity,
        force_sensitivity_unc: force_sensitivity * force_rel.hypot(unc.snr_rel),
        displacement,
        displacement_unc: displacement * z_rel,
        displacement_sensitivity,
        displacement_sensitivity_unc: displacement_sensitivity * z_rel.hypot(unc.snr_rel),
    })
}
