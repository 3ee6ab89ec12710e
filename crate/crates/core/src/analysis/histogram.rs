use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photon::{AcquisitionMode, CycleTrace};
use crate::Real;

/// Arrival-time histogram accumulated over all cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalHistogram<T> {
    /// `counts.len() + 1` uniformly spaced edges starting at 0, s.
    pub bin_edges: Vec<T>,
    pub counts: Vec<u64>,
    pub n_cycles: usize,
    pub acquisition: AcquisitionMode,
}

impl<T: Real> ArrivalHistogram<T> {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> T {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn bin_centers(&self) -> Vec<T> {
        self.bin_edges.windows(2).map(|e| (e[0] + e[1]) * T::half()).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the first bin whose left edge is at or after `t`.
    pub fn first_bin_from(&self, t: T) -> usize {
        let slack = self.bin_width() * T::lit(1e-6);
        self.bin_edges[..self.n_bins()]
            .iter()
            .position(|&e| e >= t - slack)
            .unwrap_or(self.n_bins())
    }
}

/// Bins every arrival of every cycle on `[0, window]` with width
/// `bin_width`. The last bin is closed on the right.
pub fn build_histogram<T: Real>(
    traces: &[CycleTrace<T>],
    bin_width: T,
    window: T,
    acquisition: AcquisitionMode,
) -> Result<ArrivalHistogram<T>> {
    if traces.is_empty() {
        return Err(Error::EmptyTraces);
    }
    if !(bin_width > T::zero()) || !bin_width.is_finite() {
        return Err(Error::invalid("bin_width", "must be positive"));
    }
    if !(window >= bin_width) || !window.is_finite() {
        return Err(Error::invalid("window", "must be at least one bin wide"));
    }
    let n_bins = (window / bin_width - T::lit(1e-9)).ceil().to_usize().unwrap().max(1);
    let bin_edges: Vec<T> = (0..=n_bins).map(|i| T::from_usize(i).unwrap() * bin_width).collect();
    let mut counts = vec![0u64; n_bins];
    let end = bin_edges[n_bins].max(window);
    for t in traces.iter().flat_map(|c| c.arrival_times.iter().copied()) {
        if t < T::zero() || t > end {
            continue;
        }
        let i = (t / bin_width).floor().to_usize().unwrap_or(0).min(n_bins - 1);
        counts[i] += 1;
    }
    Ok(ArrivalHistogram {
        bin_edges,
        counts,
        n_cycles: traces.len(),
        acquisition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(times: &[f64]) -> CycleTrace<f64> {
        CycleTrace {
            cycle_index: 0,
            arrival_times: times.to_vec(),
            rng_seed: 0,
        }
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(
            build_histogram::<f64>(&[], 1e-7, 1e-5, AcquisitionMode::McsMultiPhoton),
            Err(Error::EmptyTraces)
        ));
    }

    #[test]
    fn no_events_all_zero() {
        let h = build_histogram(&[trace(&[]), trace(&[])], 1e-7, 15e-6, AcquisitionMode::McsMultiPhoton).unwrap();
        assert_eq!(h.n_bins(), 150);
        assert_eq!(h.total(), 0);
        assert_eq!(h.n_cycles, 2);
    }

    #[test]
    fn single_event_single_bin() {
        let h = build_histogram(&[trace(&[7.23e-6])], 1e-7, 15e-6, AcquisitionMode::TacFirstPhoton).unwrap();
        let nonzero: Vec<_> = h.counts.iter().enumerate().filter(|(_, &c)| c > 0).collect();
        assert_eq!(nonzero, vec![(72, &1)]);
        // window end lands in the last bin
        let h = build_histogram(&[trace(&[15e-6])], 1e-7, 15e-6, AcquisitionMode::TacFirstPhoton).unwrap();
        assert_eq!(h.counts[149], 1);
    }

    #[test]
    fn first_bin_lookup() {
        let h = build_histogram(&[trace(&[])], 5e-8, 15e-6, AcquisitionMode::McsMultiPhoton).unwrap();
        assert_eq!(h.first_bin_from(4e-6), 80);
        assert_eq!(h.first_bin_from(0.0), 0);
    }
}
