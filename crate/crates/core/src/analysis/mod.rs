//! Reduction of event streams to histograms, residual maps, spectra and
//! sensitivity figures.

mod fit;
mod histogram;
mod proxy;
mod sensitivity;
mod spectrum;
mod sweep;

pub use fit::{fit_exponential, fit_exponential_background, ExponentialFit};
pub use histogram::{build_histogram, ArrivalHistogram};
pub use proxy::{amplitude_proxy, ProxyInput};
pub use sensitivity::{sensitivity_from_snr, sensitivity_report, SensitivityReport, Uncertainties};
pub use spectrum::{power_spectrum, power_spectrum_of, SpectrumOptions, SpectrumResult, SpectrumWindow};
pub use sweep::{frequency_sweep, full_width_half_max, minimum_between, point_seed, refine_minimum, FrequencySweep};
