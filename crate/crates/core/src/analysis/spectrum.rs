use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::histogram::ArrivalHistogram;
use crate::error::{Error, Result};
use crate::Real;

const MIN_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumWindow {
    #[default]
    Rectangular,
    Hann,
}

impl SpectrumWindow {
    /// Bins on each side of the peak that belong to the window's main lobe
    /// and are kept out of the noise reference.
    pub fn main_lobe_half_width(self) -> usize {
        match self {
            SpectrumWindow::Rectangular => 1,
            SpectrumWindow::Hann => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions<T> {
    /// Inclusive band searched for the peak, Hz.
    pub search_band: (T, T),
    /// Inclusive band whose bins, minus DC and the peak's main lobe, form
    /// the noise reference, Hz.
    pub noise_band: (T, T),
    pub window: SpectrumWindow,
}

impl<T: Real> SpectrumOptions<T> {
    /// Search `center ± half_width`; noise over `noise_band`.
    pub fn around(center: T, half_width: T, noise_band: (T, T)) -> Self {
        Self {
            search_band: (center - half_width, center + half_width),
            noise_band,
            window: SpectrumWindow::Rectangular,
        }
    }
}

/// One-sided power spectrum of a binned time trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult<T> {
    /// k / (M Δt), k = 0..=M/2, Hz.
    pub frequencies: Vec<T>,
    /// |X_k|², counts².
    pub power: Vec<T>,
    pub peak_index: usize,
    pub peak_frequency: T,
    pub peak_power: T,
    /// Mean power of the noise-reference bins.
    pub noise_power: T,
    /// peak_power / noise_power.
    pub power_ratio: T,
    /// sqrt(power_ratio): peak magnitude over rms noise magnitude, so it
    /// grows linearly with signal amplitude.
    pub snr: T,
}

/// Spectrum of the histogram counts from the first bin at or after
/// `exclude_before`, mean-subtracted, no zero padding.
pub fn power_spectrum<T: Real>(
    hist: &ArrivalHistogram<T>,
    exclude_before: T,
    opts: &SpectrumOptions<T>,
) -> Result<SpectrumResult<T>> {
    let first = hist.first_bin_from(exclude_before);
    let series: Vec<T> = hist.counts[first..].iter().map(|&c| T::from_u64(c).unwrap()).collect();
    power_spectrum_of(&series, hist.bin_width(), opts)
}

/// Same as [`power_spectrum`] for a uniformly sampled series with spacing
/// `dt` seconds.
pub fn power_spectrum_of<T: Real>(series: &[T], dt: T, opts: &SpectrumOptions<T>) -> Result<SpectrumResult<T>> {
    let m = series.len();
    if m < MIN_BINS {
        return Err(Error::TooFewBins {
            found: m,
            required: MIN_BINS,
        });
    }
    if !(dt > T::zero()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let mf = T::from_usize(m).unwrap();
    let mean = series.iter().copied().sum::<T>() / mf;
    let mut buf: Vec<Complex<T>> = series
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = match opts.window {
                SpectrumWindow::Rectangular => T::one(),
                SpectrumWindow::Hann => {
                    let phase = T::TAU() * T::from_usize(i).unwrap() / mf;
                    T::half() * (T::one() - phase.cos())
                }
            };
            Complex::new((x - mean) * w, T::zero())
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let half = m / 2;
    let df = T::one() / (mf * dt);
    let frequencies: Vec<T> = (0..=half).map(|k| T::from_usize(k).unwrap() * df).collect();
    let power: Vec<T> = buf[..=half].iter().map(|c| c.norm_sqr()).collect();

    let in_band = |f: T, band: (T, T)| f >= band.0 && f <= band.1;
    let peak_index = (0..=half)
        .filter(|&k| in_band(frequencies[k], opts.search_band))
        .fold(None, |best: Option<usize>, k| match best {
            Some(b) if power[b] >= power[k] => Some(b),
            _ => Some(k),
        })
        .ok_or(Error::EmptyBand("search"))?;

    let lobe = opts.window.main_lobe_half_width();
    let noise: Vec<T> = (1..=half)
        .filter(|&k| in_band(frequencies[k], opts.noise_band) && k.abs_diff(peak_index) > lobe)
        .map(|k| power[k])
        .collect();
    if noise.is_empty() {
        return Err(Error::EmptyBand("noise"));
    }
    let noise_power = noise.iter().copied().sum::<T>() / T::from_usize(noise.len()).unwrap();
    let peak_power = power[peak_index];
    let power_ratio = if noise_power > T::zero() {
        peak_power / noise_power
    } else if peak_power > T::zero() {
        T::infinity()
    } else {
        T::zero()
    };

    Ok(SpectrumResult {
        peak_frequency: frequencies[peak_index],
        frequencies,
        power,
        peak_index,
        peak_power,
        noise_power,
        power_ratio,
        snr: power_ratio.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    /// Direct O(M²) DFT power, independent of the FFT path.
    fn dft_power(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let mean = x.iter().sum::<f64>() / m as f64;
        (0..=m / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &v) in x.iter().enumerate() {
                    let a = -TAU * (k * i) as f64 / m as f64;
                    re += (v - mean) * a.cos();
                    im += (v - mean) * a.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    fn opts() -> SpectrumOptions<f64> {
        SpectrumOptions::around(867e3, 150e3, (2e5, 5e6))
    }

    #[test]
    fn matches_direct_dft() {
        let dt = 50e-9;
        let x: Vec<f64> = (0..230)
            .map(|i| 100.0 + 7.0 * (TAU * 867e3 * i as f64 * dt).sin() + ((i * 37) % 11) as f64)
            .collect();
        let s = power_spectrum_of(&x, dt, &opts()).unwrap();
        let d = dft_power(&x);
        for (a, b) in s.power.iter().zip(&d) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn sinusoid_peak_within_one_bin() {
        let dt = 50e-9;
        let m = 400;
        let x: Vec<f64> = (0..m)
            .map(|i| 50.0 + 10.0 * (TAU * 867e3 * i as f64 * dt).cos())
            .collect();
        let s = power_spectrum_of(&x, dt, &opts()).unwrap();
        let df = 1.0 / (m as f64 * dt);
        assert!((s.peak_frequency - 867e3).abs() <= df);
        assert!(s.snr > 10.0);
    }

    #[test]
    fn hann_main_lobe_stays_out_of_the_noise_reference() {
        // tone halfway between bins over a small deterministic floor
        let dt = 50e-9;
        let m = 220;
        let f = 9.5 / (m as f64 * dt);
        let x: Vec<f64> = (0..m)
            .map(|i| 100.0 * (TAU * f * i as f64 * dt).sin() + 0.01 * ((i * 7919) % 13) as f64)
            .collect();
        let opts = SpectrumOptions::around(f, 150e3, (2e5, 5e6));
        let rect = power_spectrum_of(&x, dt, &opts).unwrap();
        let hann = power_spectrum_of(
            &x,
            dt,
            &SpectrumOptions {
                window: SpectrumWindow::Hann,
                ..opts
            },
        )
        .unwrap();
        // rectangular leakage falls as 1/k and dominates its noise mean
        assert!(hann.snr > 10.0 * rect.snr, "hann {} rect {}", hann.snr, rect.snr);
    }

    #[test]
    fn band_and_length_errors() {
        let x = vec![1.0; 10];
        assert!(matches!(
            power_spectrum_of(&x, 1e-7, &opts()),
            Err(Error::TooFewBins { .. })
        ));
        let x = vec![1.0; 64];
        let o = SpectrumOptions {
            search_band: (50e6, 60e6),
            ..opts()
        };
        assert!(matches!(
            power_spectrum_of(&x, 1e-7, &o),
            Err(Error::EmptyBand("search"))
        ));
        let o = SpectrumOptions {
            noise_band: (50e6, 60e6),
            ..opts()
        };
        assert!(matches!(
            power_spectrum_of(&x, 1e-7, &o),
            Err(Error::EmptyBand("noise"))
        ));
    }

    #[test]
    fn deterministic_input_reproducible() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 7919) % 13) as f64).collect();
        let a = power_spectrum_of(&x, 5e-8, &opts()).unwrap();
        let b = power_spectrum_of(&x, 5e-8, &opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hann_window_runs() {
        let dt = 50e-9;
        let x: Vec<f64> = (0..220)
            .map(|i| 20.0 + 5.0 * (TAU * 867e3 * i as f64 * dt).sin())
            .collect();
        let o = SpectrumOptions {
            window: SpectrumWindow::Hann,
            ..opts()
        };
        let s = power_spectrum_of(&x, dt, &o).unwrap();
        assert!((s.peak_frequency - 867e3).abs() < 1.0 / (220.0 * dt));
    }
}
