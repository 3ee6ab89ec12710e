use super::rate::scatter_rate;
use super::{AcquisitionMode, DetectionConfig};
use crate::physics::ComTrajectory;
use crate::Real;

/// Sub-samples per bin for the rate integral.
const SUBSTEPS: usize = 32;

/// Expected counts per bin for `n_cycles` cycles of a fixed trajectory,
/// integrating the rate over each bin with the midpoint rule. In TAC mode
/// the density is rate(t)·exp(−∫ rate) from the hardware delay.
pub fn expected_counts<T: Real>(
    traj: &ComTrajectory<T>,
    cfg: &DetectionConfig<T>,
    n_cycles: usize,
    bin_edges: &[T],
) -> Vec<T> {
    let n = T::from_usize(n_cycles).unwrap();
    let sub = T::from_usize(SUBSTEPS).unwrap();
    let mut survival = T::one();
    let mut out = Vec::with_capacity(bin_edges.len().saturating_sub(1));
    for edge in bin_edges.windows(2) {
        let (a, b) = (edge[0].max(cfg.hardware_delay), edge[1].min(cfg.detect_window));
        if b <= a {
            out.push(T::zero());
            continue;
        }
        let h = (b - a) / sub;
        let mut total = T::zero();
        for k in 0..SUBSTEPS {
            let t = a + h * (T::from_usize(k).unwrap() + T::half());
            let r = scatter_rate(traj.velocity(t), cfg);
            match cfg.acquisition {
                AcquisitionMode::McsMultiPhoton => total = total + r * h,
                AcquisitionMode::TacFirstPhoton => {
                    let step = (-r * h).exp();
                    total = total + survival * (T::one() - step);
                    survival = survival * step;
                }
            }
        }
        out.push(n * total);
    }
    out
}
