use super::{DetectionConfig, RateModel};
use crate::Real;

#[inline]
fn lorentzian<T: Real>(detuning: T, gamma: T) -> T {
    let hw = gamma * T::half();
    hw * hw / (detuning * detuning + hw * hw)
}

/// Detected photon rate for COM velocity `velocity`.
///
/// Positive ż moves the effective detuning towards the blue (detuning +
/// k·ż), which with red detuning increases scattering. The Lorentzian
/// model at detuning −γ/2 then expands to the linear model at first order.
#[inline]
pub fn scatter_rate<T: Real>(velocity: T, cfg: &DetectionConfig<T>) -> T {
    match cfg.rate_model {
        RateModel::Linear => {
            let r = cfg.base_rate * (T::one() + cfg.modulation_depth(velocity));
            r.max(T::zero())
        }
        RateModel::Lorentzian => {
            let shifted = cfg.detuning + cfg.wavevector * velocity;
            cfg.base_rate * lorentzian(shifted, cfg.gamma) / lorentzian(cfg.detuning, cfg.gamma)
        }
    }
}

/// Rate that `scatter_rate` cannot exceed for any |ż| ≤ `max_speed`.
pub fn rate_bound<T: Real>(max_speed: T, cfg: &DetectionConfig<T>) -> T {
    let speed = max_speed.abs();
    match cfg.rate_model {
        RateModel::Linear => cfg.base_rate * (T::one() + cfg.modulation_depth(speed)),
        RateModel::Lorentzian => {
            let reach = cfg.wavevector.abs() * speed;
            let lo = cfg.detuning - reach;
            let hi = cfg.detuning + reach;
            let closest = if lo <= T::zero() && hi >= T::zero() {
                T::zero()
            } else if hi < T::zero() {
                hi
            } else {
                lo
            };
            cfg.base_rate * lorentzian(closest, cfg.gamma) / lorentzian(cfg.detuning, cfg.gamma)
        }
    }
}
