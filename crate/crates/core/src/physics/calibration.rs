use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Partially specified calibration. Supply either `field_at_ions` alone, or
/// `applied_voltage` together with `geometry_factor`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInput<T> {
    /// Zero-to-peak endcap voltage, V.
    pub applied_voltage: Option<T>,
    /// Field per volt at the ions, 1/m.
    pub geometry_factor: Option<T>,
    /// Field at the ions, V/m.
    pub field_at_ions: Option<T>,
}

/// Completed voltage → field → force chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldCalibration<T> {
    pub applied_voltage: Option<T>,
    pub field_at_ions: T,
    /// q·E, N.
    pub force_per_ion: T,
}

/// Geometry factor E/V fixed by one reference measurement.
pub fn geometry_factor<T: Real>(reference_voltage: T, reference_field: T) -> Result<T> {
    if !(reference_voltage.abs() > T::zero()) {
        return Err(Error::invalid("reference_voltage", "must be nonzero"));
    }
    Ok(reference_field / reference_voltage)
}

pub fn calibrate_force<T: Real>(input: &CalibrationInput<T>, charge: T) -> Result<FieldCalibration<T>> {
    let field = match (input.field_at_ions, input.applied_voltage, input.geometry_factor) {
        (Some(e), None, None) => e,
        (None, Some(v), Some(g)) => g * v,
        (None, None, None) => return Err(Error::Calibration("under-determined: nothing supplied")),
        (None, Some(_), None) => return Err(Error::Calibration("under-determined: voltage without geometry factor")),
        (None, None, Some(_)) => return Err(Error::Calibration("under-determined: geometry factor without voltage")),
        (Some(_), _, _) => {
            return Err(Error::Calibration(
                "over-determined: field given together with voltage or geometry",
            ))
        }
    };
    if !field.is_finite() || !charge.is_finite() {
        return Err(Error::invalid("field_at_ions", "must be finite"));
    }
    Ok(FieldCalibration {
        applied_voltage: input.applied_voltage,
        field_at_ions: field,
        force_per_ion: charge * field,
    })
}
