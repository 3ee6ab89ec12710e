//! TOML experiment specs.
//!
//! Key names carry their unit. Frequencies come in two spellings: `_hz`
//! for ordinary frequency (converted with 2π) and `_rad_s` for angular
//! frequency. Giving both spellings of one quantity is an error.

use std::path::Path;

use ionforce::constants::{
    BE9_ION_MASS, DEFAULT_COM_FREQUENCY_HZ, DEFAULT_LINEWIDTH_HZ, DEFAULT_WAVELENGTH, ELEMENTARY_CHARGE,
};
use ionforce::physics::MAX_FRACTIONAL_DETUNING;
use ionforce::{
    steady_state_response, AcquisitionMode, CalibrationInput, DetectionConfig64, DriveConfig64, RateModel,
    SpectrumWindow, TrapConfig64, Uncertainties,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::RunError;

/// Detected rate per ion at zero velocity when a spec gives none: 3×10⁵
/// photons/s for a 130-ion crystal.
pub const DEFAULT_RATE_PER_ION: f64 = 3.0e5 / 130.0;
/// Cooling, state preparation and readout time per cycle beyond t_d.
pub const DEFAULT_CYCLE_OVERHEAD: f64 = 0.4e-3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cycles: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_ladder: Option<LadderSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub ion_count: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ion_mass_kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_z_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_z_rad_s: Option<f64>,
    pub temperature_k: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    /// Per-ion force amplitude. Alternative: `field_v_per_m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_per_ion_n: Option<f64>,
    /// Drive field at the ions; force = charge × field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_v_per_m: Option<f64>,
    /// Absolute drive frequency. Defaults to the COM frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_d_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_d_rad_s: Option<f64>,
    /// Drive frequency relative to the COM frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_rad_s: Option<f64>,
    pub t_d_s: f64,
}

/// Drive-frequency grid: either a symmetric grid around the COM frequency
/// or an explicit sorted list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_span_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_span_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_d_hz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_d_rad_s: Option<Vec<f64>>,
}

/// Forces for `sweep-force`: multiples of the drive force or explicit
/// per-ion values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_per_ion_n: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linewidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linewidth_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_rad_s: Option<f64>,
    /// Detuning in units of the linewidth γ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_linewidths: Option<f64>,
    /// Whole-crystal detected rate at zero velocity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_rate_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_rate_per_ion_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hardware_delay_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detect_window_s: Option<f64>,
    /// `inf` disables damping.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_model: Option<RateModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acquisition: Option<AcquisitionMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Bins before this time are dropped from fits and spectra. Defaults
    /// to the hardware delay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclude_before_s: Option<f64>,
    /// Peak search band is the COM frequency ± this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_half_width_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_band_hz: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<SpectrumWindow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_per_ion_rel_unc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ion_count_unc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_rel_unc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_overhead_s: Option<f64>,
    /// Per-cycle random-walk step of the COM frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_step_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_step_rad_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_v_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub applied_voltage_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry_per_m: Option<f64>,
    /// Reference pair fixing the geometry factor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_voltage_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_field_v_per_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub step: Vec<BudgetStep>,
}

/// One row of the projected-sensitivity table. Each row starts from the
/// previous row unless `inherit = false`, in which case it starts from the
/// spec itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetStep {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inherit: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ion_count: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_d_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collection_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_overhead_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventsFormat {
    #[default]
    Csv,
    Binary,
    None,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<EventsFormat>,
}

fn invalid(path: &str, reason: impl std::fmt::Display) -> RunError {
    RunError::Spec(format!("{path}: {reason}"))
}

/// Exactly one or none of an `_hz`/`_rad_s` pair, as rad/s.
fn angular(hz: Option<f64>, rad_s: Option<f64>, path: &str) -> Result<Option<f64>, RunError> {
    match (hz, rad_s) {
        (Some(_), Some(_)) => Err(invalid(path, "give either _hz or _rad_s, not both")),
        (Some(f), None) => Ok(Some(TAU * f)),
        (None, w) => Ok(w),
    }
}

fn finite(value: f64, path: &str) -> Result<f64, RunError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(path, "must be finite"))
    }
}

fn positive(value: f64, path: &str) -> Result<f64, RunError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(path, format!("must be positive, got {value}")))
    }
}

fn non_negative(value: f64, path: &str) -> Result<f64, RunError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(path, format!("must be non-negative, got {value}")))
    }
}

fn core(path: &str) -> impl Fn(ionforce::Error) -> RunError + '_ {
    move |e| invalid(path, e)
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Spec(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            RunError::Spec(msg) => RunError::Spec(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML text of the spec, as written into the output
    /// directory and hashed into the manifest.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn seed(&self) -> Result<u64, RunError> {
        self.seed
            .ok_or_else(|| invalid("seed", "required (no clock-based seeding)"))
    }

    pub fn n_cycles(&self) -> Result<usize, RunError> {
        match self.n_cycles {
            Some(0) => Err(invalid("n_cycles", "must be at least 1")),
            Some(n) => Ok(n as usize),
            None => Err(invalid("n_cycles", "required")),
        }
    }

    pub fn trap(&self) -> Result<TrapConfig64, RunError> {
        let s = self.trap.as_ref().ok_or_else(|| invalid("trap", "section required"))?;
        if s.ion_count == 0 {
            return Err(invalid("trap.ion_count", "must be at least 1"));
        }
        let omega_z = angular(s.omega_z_hz, s.omega_z_rad_s, "trap.omega_z")?.unwrap_or(TAU * DEFAULT_COM_FREQUENCY_HZ);
        let trap = TrapConfig64 {
            ion_mass: positive(s.ion_mass_kg.unwrap_or(BE9_ION_MASS), "trap.ion_mass_kg")?,
            ion_count: s.ion_count,
            omega_z: positive(omega_z, "trap.omega_z")?,
            temperature: non_negative(s.temperature_k, "trap.temperature_k")?,
            charge: finite(s.charge_c.unwrap_or(ELEMENTARY_CHARGE), "trap.charge_c")?,
        };
        trap.validate().map_err(core("trap"))?;
        Ok(trap)
    }

    /// Drive with its frequency resolved against the trap. Checks the
    /// closed-form validity window as well as the field invariants.
    pub fn drive(&self, trap: &TrapConfig64) -> Result<DriveConfig64, RunError> {
        let s = self
            .drive
            .as_ref()
            .ok_or_else(|| invalid("drive", "section required"))?;
        let force = match (s.force_per_ion_n, s.field_v_per_m) {
            (Some(f), None) => f,
            (None, Some(e)) => trap.charge * finite(e, "drive.field_v_per_m")?,
            (Some(_), Some(_)) => return Err(invalid("drive", "give force_per_ion_n or field_v_per_m, not both")),
            (None, None) => return Err(invalid("drive", "force_per_ion_n or field_v_per_m required")),
        };
        let absolute = angular(s.omega_d_hz, s.omega_d_rad_s, "drive.omega_d")?;
        let offset = angular(s.detuning_hz, s.detuning_rad_s, "drive.detuning")?;
        let omega_d = match (absolute, offset) {
            (Some(_), Some(_)) => return Err(invalid("drive", "give omega_d or detuning, not both")),
            (Some(w), None) => w,
            (None, Some(d)) => trap.omega_z + d,
            (None, None) => trap.omega_z,
        };
        let drive = DriveConfig64::new(force, omega_d, s.t_d_s);
        check_drive(trap, &drive, "drive")?;
        Ok(drive)
    }

    pub fn sweep_grid(&self, trap: &TrapConfig64, drive: &DriveConfig64) -> Result<Vec<f64>, RunError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| invalid("sweep", "section required"))?;
        let list = match (&s.omega_d_hz, &s.omega_d_rad_s) {
            (Some(_), Some(_)) => return Err(invalid("sweep.omega_d", "give either _hz or _rad_s, not both")),
            (Some(hz), None) => Some(hz.iter().map(|f| TAU * f).collect::<Vec<_>>()),
            (None, Some(w)) => Some(w.clone()),
            (None, None) => None,
        };
        let half = angular(s.half_span_hz, s.half_span_rad_s, "sweep.half_span")?;
        let grid = match (list, half, s.points) {
            (Some(g), None, None) => g,
            (None, Some(h), Some(points)) => {
                positive(h, "sweep.half_span")?;
                if points < 2 {
                    return Err(invalid("sweep.points", "must be at least 2"));
                }
                let step = 2.0 * h / (points - 1) as f64;
                (0..points).map(|i| trap.omega_z - h + step * i as f64).collect()
            }
            (Some(_), _, _) => return Err(invalid("sweep", "an explicit grid excludes half_span and points")),
            _ => {
                return Err(invalid(
                    "sweep",
                    "give half_span and points, or an explicit omega_d list",
                ))
            }
        };
        if grid.is_empty() {
            return Err(invalid("sweep", "grid is empty"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sweep", "grid must be strictly increasing"));
        }
        for (i, &w) in grid.iter().enumerate() {
            check_drive(trap, &DriveConfig64 { omega_d: w, ..*drive }, &format!("sweep[{i}]"))?;
        }
        Ok(grid)
    }

    pub fn ladder(&self, trap: &TrapConfig64, drive: &DriveConfig64) -> Result<Vec<f64>, RunError> {
        let s = self
            .force_ladder
            .as_ref()
            .ok_or_else(|| invalid("force_ladder", "section required"))?;
        let forces = match (&s.scales, &s.force_per_ion_n) {
            (Some(k), None) => k.iter().map(|k| k * drive.force_per_ion).collect::<Vec<_>>(),
            (None, Some(f)) => f.clone(),
            _ => return Err(invalid("force_ladder", "give exactly one of scales or force_per_ion_n")),
        };
        if forces.is_empty() {
            return Err(invalid("force_ladder", "must not be empty"));
        }
        for (i, &f) in forces.iter().enumerate() {
            check_drive(
                trap,
                &DriveConfig64 {
                    force_per_ion: f,
                    ..*drive
                },
                &format!("force_ladder[{i}]"),
            )?;
        }
        Ok(forces)
    }

    /// Detected rate per ion at zero velocity.
    pub fn rate_per_ion(&self, trap: &TrapConfig64) -> Result<f64, RunError> {
        let s = self.detection.clone().unwrap_or_default();
        match (s.base_rate_per_s, s.base_rate_per_ion_per_s) {
            (Some(_), Some(_)) => Err(invalid(
                "detection",
                "give base_rate_per_s or base_rate_per_ion_per_s, not both",
            )),
            (Some(r), None) => Ok(non_negative(r, "detection.base_rate_per_s")? / trap.ion_count as f64),
            (None, Some(r)) => non_negative(r, "detection.base_rate_per_ion_per_s"),
            (None, None) => Ok(DEFAULT_RATE_PER_ION),
        }
    }

    pub fn detection(&self, trap: &TrapConfig64) -> Result<DetectionConfig64, RunError> {
        let s = self.detection.clone().unwrap_or_default();
        let d = DetectionConfig64::default();
        let gamma =
            angular(s.linewidth_hz, s.linewidth_rad_s, "detection.linewidth")?.unwrap_or(TAU * DEFAULT_LINEWIDTH_HZ);
        let gamma = positive(gamma, "detection.linewidth")?;
        let detuning = match (
            angular(s.detuning_hz, s.detuning_rad_s, "detection.detuning")?,
            s.detuning_linewidths,
        ) {
            (Some(_), Some(_)) => return Err(invalid("detection.detuning", "give one spelling only")),
            (Some(d), None) => d,
            (None, Some(x)) => x * gamma,
            (None, None) => -gamma / 2.0,
        };
        let cfg = DetectionConfig64 {
            gamma,
            wavevector: TAU / positive(s.wavelength_m.unwrap_or(DEFAULT_WAVELENGTH), "detection.wavelength_m")?,
            detuning: finite(detuning, "detection.detuning")?,
            base_rate: self.rate_per_ion(trap)? * trap.ion_count as f64,
            hardware_delay: s.hardware_delay_s.unwrap_or(d.hardware_delay),
            detect_window: s.detect_window_s.unwrap_or(d.detect_window),
            damping_time: s.damping_time_s.unwrap_or(d.damping_time),
            rate_model: s.rate_model.unwrap_or(d.rate_model),
            acquisition: s.acquisition.unwrap_or(d.acquisition),
            bin_width: s.bin_width_s.unwrap_or(d.bin_width),
        };
        cfg.validate().map_err(core("detection"))?;
        Ok(cfg)
    }

    pub fn analysis(&self, trap: &TrapConfig64, cfg: &DetectionConfig64) -> Result<Analysis, RunError> {
        let s = self.analysis.clone().unwrap_or_default();
        let exclude = s.exclude_before_s.unwrap_or(cfg.hardware_delay);
        if !(exclude >= cfg.hardware_delay) || exclude >= cfg.detect_window {
            return Err(invalid(
                "analysis.exclude_before_s",
                "must lie in [hardware_delay, detect_window)",
            ));
        }
        let nyquist = 0.5 / cfg.bin_width;
        let half = positive(s.search_half_width_hz.unwrap_or(100e3), "analysis.search_half_width_hz")?;
        let noise = s.noise_band_hz.unwrap_or([300e3, nyquist]);
        if !(noise[0] >= 0.0 && noise[1] > noise[0]) {
            return Err(invalid(
                "analysis.noise_band_hz",
                "must be [low, high] with 0 ≤ low < high",
            ));
        }
        let centre = trap.omega_z / TAU;
        if centre + half < 0.0 || centre - half > nyquist {
            return Err(invalid(
                "analysis.search_half_width_hz",
                "search band lies outside the spectrum",
            ));
        }
        let unc = Uncertainties {
            force_per_ion_rel: non_negative(s.force_per_ion_rel_unc.unwrap_or(0.0), "analysis.force_per_ion_rel_unc")?,
            ion_count_abs: non_negative(s.ion_count_unc.unwrap_or(0.0), "analysis.ion_count_unc")?,
            snr_rel: non_negative(s.snr_rel_unc.unwrap_or(0.0), "analysis.snr_rel_unc")?,
        };
        Ok(Analysis {
            exclude_before: exclude,
            spectrum: ionforce::SpectrumOptions {
                search_band: (centre - half, centre + half),
                noise_band: (noise[0], noise[1]),
                window: s.window.unwrap_or_default(),
            },
            uncertainties: unc,
        })
    }

    pub fn timing(&self) -> Result<Timing, RunError> {
        let s = self.timing.clone().unwrap_or_default();
        Ok(Timing {
            cycle_overhead: non_negative(
                s.cycle_overhead_s.unwrap_or(DEFAULT_CYCLE_OVERHEAD),
                "timing.cycle_overhead_s",
            )?,
            drift_step: non_negative(
                angular(s.drift_step_hz, s.drift_step_rad_s, "timing.drift_step")?.unwrap_or(0.0),
                "timing.drift_step",
            )?,
        })
    }

    pub fn calibration(&self) -> Result<CalibrationInput<f64>, RunError> {
        let s = self
            .calibration
            .as_ref()
            .ok_or_else(|| invalid("calibration", "section required"))?;
        let geometry = match (s.geometry_per_m, s.reference_voltage_v, s.reference_field_v_per_m) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(invalid(
                    "calibration",
                    "give geometry_per_m or a reference pair, not both",
                ))
            }
            (Some(g), None, None) => Some(g),
            (None, Some(v), Some(e)) => Some(ionforce::physics::geometry_factor(v, e).map_err(core("calibration"))?),
            (None, None, None) => None,
            _ => {
                return Err(invalid(
                    "calibration",
                    "reference_voltage_v and reference_field_v_per_m go together",
                ))
            }
        };
        Ok(CalibrationInput {
            applied_voltage: s.applied_voltage_v,
            geometry_factor: geometry,
            field_at_ions: s.field_v_per_m,
        })
    }

    pub fn format(&self) -> Format {
        self.output.as_ref().and_then(|o| o.format).unwrap_or_default()
    }

    pub fn events_format(&self) -> EventsFormat {
        self.output.as_ref().and_then(|o| o.events).unwrap_or_default()
    }
}

fn check_drive(trap: &TrapConfig64, drive: &DriveConfig64, path: &str) -> Result<(), RunError> {
    drive.validate().map_err(core(path))?;
    let ratio = ((drive.omega_d - trap.omega_z) / trap.omega_z).abs();
    if ratio >= MAX_FRACTIONAL_DETUNING {
        return Err(invalid(
            path,
            format!("drive detuning {ratio:.3} of ω_z exceeds {MAX_FRACTIONAL_DETUNING}"),
        ));
    }
    steady_state_response(trap, drive).map_err(core(path))?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct Analysis {
    pub exclude_before: f64,
    pub spectrum: ionforce::SpectrumOptions<f64>,
    pub uncertainties: Uncertainties<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Timing {
    pub cycle_overhead: f64,
    pub drift_step: f64,
}

impl Timing {
    /// Simulated time per cycle: drive plus fixed overhead.
    pub fn cycle_time(&self, drive_duration: f64) -> f64 {
        drive_duration + self.cycle_overhead
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 1
        n_cycles = 10
        [trap]
        ion_count = 130
        omega_z_hz = 867e3
        temperature_k = 0.5e-3
        [drive]
        force_per_ion_n = 2.88e-24
        t_d_s = 1e-3
    "#;

    #[test]
    fn minimal_spec_resolves() {
        let spec = ExperimentSpec::parse(MINIMAL).unwrap();
        let trap = spec.trap().unwrap();
        assert!((trap.omega_z - TAU * 867e3).abs() < 1e-6);
        let drive = spec.drive(&trap).unwrap();
        assert_eq!(drive.omega_d, trap.omega_z);
        let cfg = spec.detection(&trap).unwrap();
        assert!((cfg.base_rate - 3e5).abs() < 1e-6);
        assert!((spec.timing().unwrap().cycle_time(1e-3) - 1.4e-3).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = MINIMAL.replace("temperature_k", "temprature_k");
        let err = ExperimentSpec::parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 7"), "{err}");
        assert!(err.contains("temprature_k"), "{err}");
    }

    #[test]
    fn both_frequency_spellings_rejected() {
        let text = MINIMAL.replace("omega_z_hz = 867e3", "omega_z_hz = 867e3\nomega_z_rad_s = 5.4e6");
        let spec = ExperimentSpec::parse(&text).unwrap();
        assert!(spec.trap().unwrap_err().to_string().contains("trap.omega_z"));
    }

    #[test]
    fn physical_violations_name_the_field() {
        let cases = [
            ("ion_count = 130", "ion_count = 0", "trap.ion_count"),
            ("temperature_k = 0.5e-3", "temperature_k = -1.0", "trap.temperature_k"),
            ("t_d_s = 1e-3", "t_d_s = 1e-6", "drive"),
            ("force_per_ion_n = 2.88e-24", "force_per_ion_n = -1.0", "drive"),
        ];
        for (from, to, path) in cases {
            let spec = ExperimentSpec::parse(&MINIMAL.replace(from, to)).unwrap();
            let err = spec.trap().and_then(|t| spec.drive(&t)).unwrap_err().to_string();
            assert!(err.starts_with(&format!("invalid spec: {path}")), "{to}: {err}");
        }
    }

    #[test]
    fn unsorted_sweep_rejected() {
        let text = format!("{MINIMAL}\n[sweep]\nomega_d_hz = [867e3, 866e3]\n");
        let spec = ExperimentSpec::parse(&text).unwrap();
        let trap = spec.trap().unwrap();
        let drive = spec.drive(&trap).unwrap();
        assert!(spec.sweep_grid(&trap, &drive).is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let spec = ExperimentSpec::parse(MINIMAL).unwrap();
        assert_eq!(ExperimentSpec::parse(&spec.to_toml()).unwrap(), spec);
    }
}
