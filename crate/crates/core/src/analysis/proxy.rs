use super::histogram::ArrivalHistogram;
use crate::error::{Error, Result};
use crate::Real;

/// Input to [`amplitude_proxy`].
#[derive(Debug, Clone, Copy)]
pub enum ProxyInput<'a, T> {
    /// Count-weighted standard deviation of arrival times over the whole
    /// window (bin centers as sample times).
    Histogram(&'a ArrivalHistogram<T>),
    /// Standard deviation of the residual values across one row of a
    /// response map. This is the per-drive-frequency amplitude measure
    /// used in frequency sweeps.
    Residuals(&'a [T]),
}

pub fn amplitude_proxy<T: Real>(input: ProxyInput<'_, T>) -> Result<T> {
    match input {
        ProxyInput::Histogram(h) => {
            let total = h.total();
            if total == 0 {
                return Err(Error::ZeroCounts);
            }
            let n = T::from_u64(total).unwrap();
            let centers = h.bin_centers();
            let weighted = |f: &dyn Fn(T) -> T| -> T {
                centers
                    .iter()
                    .zip(&h.counts)
                    .map(|(&t, &c)| T::from_u64(c).unwrap() * f(t))
                    .sum::<T>()
            };
            let mean = weighted(&|t| t) / n;
            let var = weighted(&|t| (t - mean) * (t - mean)) / n;
            Ok(var.sqrt())
        }
        ProxyInput::Residuals(r) => {
            if r.is_empty() {
                return Err(Error::ZeroCounts);
            }
            let n = T::from_usize(r.len()).unwrap();
            let mean = r.iter().copied().sum::<T>() / n;
            let var = r.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
            Ok(var.sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::AcquisitionMode;

    #[test]
    fn uniform_histogram() {
        let w = 10e-6;
        let bins = 1000;
        let h = ArrivalHistogram {
            bin_edges: (0..=bins).map(|i| i as f64 * w / bins as f64).collect(),
            counts: vec![7; bins],
            n_cycles: 1,
            acquisition: AcquisitionMode::McsMultiPhoton,
        };
        let p = amplitude_proxy(ProxyInput::Histogram(&h)).unwrap();
        assert!((p / (w / 12f64.sqrt()) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn zero_counts_error() {
        let h = ArrivalHistogram {
            bin_edges: vec![0.0, 1.0, 2.0],
            counts: vec![0, 0],
            n_cycles: 1,
            acquisition: AcquisitionMode::McsMultiPhoton,
        };
        assert!(matches!(
            amplitude_proxy(ProxyInput::Histogram(&h)),
            Err(Error::ZeroCounts)
        ));
        assert!(amplitude_proxy::<f64>(ProxyInput::Residuals(&[])).is_err());
    }

    #[test]
    fn residual_std_of_sinusoid() {
        let r: Vec<f64> = (0..1000).map(|i| 3.0 * (i as f64 * 0.0628318530718).sin()).collect();
        let p = amplitude_proxy(ProxyInput::Residuals(&r)).unwrap();
        assert!((p - 3.0 / 2f64.sqrt()).abs() < 1e-3);
    }
}
