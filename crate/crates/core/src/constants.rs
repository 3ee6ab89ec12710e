//! Physical constants (CODATA 2018, SI) and experiment defaults.

use crate::Real;

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// ⁹Be⁺ mass in kg (atomic mass minus one electron).
pub const BE9_ION_MASS: f64 = 9.012_183_065 * ATOMIC_MASS_UNIT - 9.109_383_701_5e-31;

/// Default axial COM frequency, ordinary Hz.
pub const DEFAULT_COM_FREQUENCY_HZ: f64 = 867.0e3;

/// Doppler-cooling transition linewidth γ/2π, Hz.
pub const DEFAULT_LINEWIDTH_HZ: f64 = 19.0e6;

/// Detection laser wavelength, m.
pub const DEFAULT_WAVELENGTH: f64 = 313.0e-9;

/// Angular frequency from ordinary frequency.
pub fn angular<T: Real>(hz: T) -> T {
    T::TAU() * hz
}

/// Ordinary frequency from angular frequency.
pub fn ordinary<T: Real>(rad_s: T) -> T {
    rad_s / T::TAU()
}
