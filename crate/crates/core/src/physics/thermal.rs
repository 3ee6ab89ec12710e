use serde::{Deserialize, Serialize};

use super::TrapConfig;
use crate::constants::BOLTZMANN;
use crate::error::Result;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalMode {
    /// Collective COM coordinate, mass n·m.
    Com,
    /// One ion of mass m in the same well.
    SingleIon,
}

/// RMS axial extent at equipartition, sqrt(k_B T / (M ω_z²)) with M = n·m
/// for the COM mode and M = m for a single ion.
pub fn thermal_extent<T: Real>(trap: &TrapConfig<T>, mode: ThermalMode) -> Result<T> {
    trap.validate()?;
    let kt = T::lit(BOLTZMANN) * trap.temperature;
    let com = (kt / trap.total_mass()).sqrt() / trap.omega_z;
    Ok(match mode {
        ThermalMode::Com => com,
        ThermalMode::SingleIon => com * trap.ion_count_real().sqrt(),
    })
}

/// RMS COM velocity at equipartition, sqrt(k_B T / (n m)).
pub fn thermal_velocity_rms<T: Real>(trap: &TrapConfig<T>) -> T {
    (T::lit(BOLTZMANN) * trap.temperature / trap.total_mass()).sqrt()
}
