//! Simulation and analysis of phase-coherent Doppler velocimetry on a
//! trapped-ion crystal.
//!
//! The crate is split the same way the experiment is:
//!
//! * [`physics`]: the driven, thermally agitated, radiation-damped
//!   center-of-mass (COM) oscillator and the force/field/displacement
//!   calibration arithmetic.
//! * [`photon`]: Doppler-modulated scattering rates, inhomogeneous Poisson
//!   photon synthesis by thinning, and the gated start/stop acquisition.
//! * [`analysis`]: arrival-time histograms, exponential background fits,
//!   amplitude proxies, drive-frequency sweeps, power spectra and
//!   sensitivity reports.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! command-line runner uses.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod error;
pub mod photon;
pub mod physics;
pub mod real;

pub use error::{Error, Result};
pub use real::Real;

pub use analysis::{
    amplitude_proxy, build_histogram, fit_exponential_background, frequency_sweep, power_spectrum, sensitivity_report,
    ArrivalHistogram, ExponentialFit, FrequencySweep, ProxyInput, SensitivityReport, SpectrumOptions, SpectrumResult,
    SpectrumWindow, Uncertainties,
};
pub use photon::{
    generate_cycle, run_experiment, run_experiment_with, scatter_rate, AcquisitionMode, CycleTrace, DetectionConfig,
    RateModel, RunOptions,
};
pub use physics::{
    calibrate_force, com_displacement, com_trajectory, steady_state_response, thermal_extent, CalibrationInput,
    ComTrajectory, DriveConfig, FieldCalibration, OscillationState, ThermalMode, TrapConfig,
};

pub type TrapConfig64 = TrapConfig<f64>;
pub type DriveConfig64 = DriveConfig<f64>;
pub type OscillationState64 = OscillationState<f64>;
pub type FieldCalibration64 = FieldCalibration<f64>;
pub type ComTrajectory64 = ComTrajectory<f64>;
pub type DetectionConfig64 = DetectionConfig<f64>;
pub type CycleTrace64 = CycleTrace<f64>;
pub type RunOptions64 = RunOptions<f64>;
pub type ArrivalHistogram64 = ArrivalHistogram<f64>;
pub type ExponentialFit64 = ExponentialFit<f64>;
pub type FrequencySweep64 = FrequencySweep<f64>;
pub type SpectrumOptions64 = SpectrumOptions<f64>;
pub type SpectrumResult64 = SpectrumResult<f64>;
pub type SensitivityReport64 = SensitivityReport<f64>;

pub type TrapConfig32 = TrapConfig<f32>;
pub type DriveConfig32 = DriveConfig<f32>;
pub type DetectionConfig32 = DetectionConfig<f32>;
