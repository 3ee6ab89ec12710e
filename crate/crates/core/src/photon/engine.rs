use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rate::{rate_bound, scatter_rate};
use super::{AcquisitionMode, DetectionConfig};
use crate::error::{Error, Result};
use crate::physics::{com_trajectory, ComTrajectory, DriveConfig, TrapConfig};
use crate::Real;

/// ChaCha stream used for photon events; thermal draws and the frequency
/// drift walk use their own streams of the same seed.
const PHOTON_STREAM: u64 = 0;
const THERMAL_STREAM: u64 = 1;
const DRIFT_STREAM: u64 = 2;

/// Photon arrivals of one experiment cycle, relative to the gated start
/// pulse. Strictly increasing and inside `[hardware_delay, detect_window]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleTrace<T> {
    pub cycle_index: u64,
    pub arrival_times: Vec<T>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions<T> {
    /// Standard deviation of the per-cycle Gaussian random-walk step of
    /// ω_z, rad/s. Zero disables drift.
    pub drift_step: T,
}

impl<T: Real> Default for RunOptions<T> {
    fn default() -> Self {
        Self { drift_step: T::zero() }
    }
}

/// Seed of cycle `cycle_index`: the cycle index XORed into a scrambled
/// base seed. Scrambling keeps small base seeds such as 1 and 2 from
/// producing the same set of cycle seeds in a different order.
pub fn cycle_seed(base_seed: u64, cycle_index: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(base_seed).next_u64() ^ cycle_index
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inhomogeneous Poisson arrivals on `[hardware_delay, detect_window]` with
/// rate `scatter_rate(ż(t))`, drawn by thinning a homogeneous process at the
/// trajectory's rate bound.
pub fn sample_arrivals<T: Real, R: Rng + ?Sized>(
    traj: &ComTrajectory<T>,
    cfg: &DetectionConfig<T>,
    rng: &mut R,
) -> Result<Vec<T>> {
    let speed = traj.speed_bound() * (T::one() + T::lit(1e-9));
    let bound = rate_bound(speed, cfg);
    let mut out = Vec::new();
    if !(bound > T::zero()) {
        return Ok(out);
    }
    let first_only = cfg.acquisition == AcquisitionMode::TacFirstPhoton;
    let mut t = cfg.hardware_delay;
    loop {
        t = t + T::sample_exp1(rng) / bound;
        if t > cfg.detect_window {
            break;
        }
        let rate = scatter_rate(traj.velocity(t), cfg);
        if rate > bound {
            return Err(Error::ThinningBound {
                time: t.as_f64(),
                rate: rate.as_f64(),
                bound: bound.as_f64(),
            });
        }
        if T::sample_unit(rng) * bound < rate {
            if out.last().is_none_or(|&last| t > last) {
                out.push(t);
            }
            if first_only {
                break;
            }
        }
    }
    Ok(out)
}

/// One cycle of events for a given trajectory. Deterministic in `seed`.
pub fn generate_cycle<T: Real>(
    traj: &ComTrajectory<T>,
    cfg: &DetectionConfig<T>,
    cycle_index: u64,
    seed: u64,
) -> Result<CycleTrace<T>> {
    let mut rng = stream_rng(seed, PHOTON_STREAM);
    Ok(CycleTrace {
        cycle_index,
        arrival_times: sample_arrivals(traj, cfg, &mut rng)?,
        rng_seed: seed,
    })
}

pub fn run_experiment<T: Real>(
    trap: &TrapConfig<T>,
    drive: &DriveConfig<T>,
    cfg: &DetectionConfig<T>,
    n_cycles: usize,
    base_seed: u64,
) -> Result<Vec<CycleTrace<T>>> {
    run_experiment_with(trap, drive, cfg, n_cycles, base_seed, &RunOptions::default())
}

/// Runs `n_cycles` drive/detect cycles. Cycle `i` uses
/// `cycle_seed(base_seed, i)` for its thermal draw and its photons, so the result is
/// independent of how rayon schedules the cycles.
pub fn run_experiment_with<T: Real>(
    trap: &TrapConfig<T>,
    drive: &DriveConfig<T>,
    cfg: &DetectionConfig<T>,
    n_cycles: usize,
    base_seed: u64,
    opts: &RunOptions<T>,
) -> Result<Vec<CycleTrace<T>>> {
    if n_cycles == 0 {
        return Err(Error::invalid("n_cycles", "must be at least 1"));
    }
    if !(opts.drift_step >= T::zero()) {
        return Err(Error::invalid("drift_step", "must be non-negative"));
    }
    trap.validate()?;
    drive.validate()?;
    cfg.validate()?;

    let drift = drift_walk(n_cycles, base_seed, opts.drift_step);

    (0..n_cycles)
        .into_par_iter()
        .map(|i| {
            let index = i as u64;
            let seed = cycle_seed(base_seed, index);
            let mut cycle_trap = *trap;
            if let Some(offsets) = &drift {
                cycle_trap.omega_z = trap.omega_z + offsets[i];
            }
            let mut thermal_rng = stream_rng(seed, THERMAL_STREAM);
            let traj = com_trajectory(&cycle_trap, drive, cfg.damping(), &mut thermal_rng)?;
            generate_cycle(&traj, cfg, index, seed)
        })
        .collect()
}

fn drift_walk<T: Real>(n_cycles: usize, base_seed: u64, step: T) -> Option<Vec<T>> {
    if step == T::zero() {
        return None;
    }
    let mut rng = stream_rng(base_seed, DRIFT_STREAM);
    let mut offset = T::zero();
    let mut out = Vec::with_capacity(n_cycles);
    for _ in 0..n_cycles {
        out.push(offset);
        offset = offset + step * T::sample_normal(&mut rng);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::RateModel;
    use crate::physics::Damping;
    use std::f64::consts::TAU;

    fn trap(temperature: f64) -> TrapConfig<f64> {
        TrapConfig::beryllium(130, TAU * 867e3, temperature)
    }

    #[test]
    fn zero_rate_is_empty() {
        let t = trap(0.0);
        let drive = DriveConfig::new(2.9e-22, t.omega_z, 1e-3);
        let cfg = DetectionConfig {
            base_rate: 0.0,
            ..Default::default()
        };
        let traces = run_experiment(&t, &drive, &cfg, 5, 3).unwrap();
        assert!(traces.iter().all(|c| c.arrival_times.is_empty()));
    }

    #[test]
    fn events_respect_window_and_order() {
        let t = trap(0.5e-3);
        let drive = DriveConfig::new(2.9e-23, t.omega_z, 1e-3);
        let cfg = DetectionConfig {
            base_rate: 2e6,
            ..Default::default()
        };
        let traces = run_experiment(&t, &drive, &cfg, 200, 11).unwrap();
        for (i, c) in traces.iter().enumerate() {
            assert_eq!(c.cycle_index, i as u64);
            assert_eq!(c.rng_seed, cycle_seed(11, i as u64));
            assert!(c.arrival_times.windows(2).all(|w| w[0] < w[1]));
            assert!(c
                .arrival_times
                .iter()
                .all(|&x| x >= cfg.hardware_delay && x <= cfg.detect_window));
        }
    }

    #[test]
    fn tac_keeps_first_photon() {
        let t = trap(0.0);
        let drive = DriveConfig::new(0.0, t.omega_z, 1e-3);
        let mcs = DetectionConfig {
            base_rate: 1e6,
            ..Default::default()
        };
        let tac = DetectionConfig {
            acquisition: AcquisitionMode::TacFirstPhoton,
            ..mcs
        };
        let a = run_experiment(&t, &drive, &mcs, 50, 9).unwrap();
        let b = run_experiment(&t, &drive, &tac, 50, 9).unwrap();
        for (m, f) in a.iter().zip(&b) {
            assert!(f.arrival_times.len() <= 1);
            // Same random stream, so the TAC photon is the first MCS photon.
            assert_eq!(m.arrival_times.first(), f.arrival_times.first());
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let t = trap(0.5e-3);
        let drive = DriveConfig::new(2.9e-23, t.omega_z, 1e-3);
        let cfg = DetectionConfig::default();
        let a = run_experiment(&t, &drive, &cfg, 300, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_experiment(&t, &drive, &cfg, 300, 42).unwrap());
        assert_eq!(a, b);
        let c = run_experiment(&t, &drive, &cfg, 300, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn thinning_bound_is_checked() {
        // A trajectory whose speed bound understates its real speed.
        let mut traj = ComTrajectory::driven(
            &trap(0.0),
            &DriveConfig::new(2.9e-22, TAU * 867e3, 1e-3),
            Damping::none(),
        )
        .unwrap();
        let cfg = DetectionConfig {
            base_rate: 1e7,
            rate_model: RateModel::Linear,
            ..Default::default()
        };
        traj.thermal_amplitude = -traj.driven_amplitude * 0.9;
        traj.thermal_phase = traj.driven_phase + std::f64::consts::PI;
        traj.driven_amplitude *= 3.0;
        let err = generate_cycle(&traj, &cfg, 0, 1).unwrap_err();
        assert!(matches!(err, Error::ThinningBound { .. }));
    }

    #[test]
    fn drift_walk_is_seeded() {
        let a = drift_walk(100, 5, 10.0f64).unwrap();
        let b = drift_walk(100, 5, 10.0f64).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], 0.0);
        assert!(drift_walk(100, 5, 0.0f64).is_none());
    }

    #[test]
    fn rejects_zero_cycles() {
        let t = trap(0.0);
        let drive = DriveConfig::new(0.0, t.omega_z, 1e-3);
        assert!(run_experiment(&t, &drive, &DetectionConfig::default(), 0, 0).is_err());
    }
}
