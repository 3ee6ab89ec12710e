//! The five subcommands. Each resolves and validates everything it needs
//! from the spec before any simulation starts, then writes its outputs and
//! a manifest into the output directory.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use ionforce::analysis::{full_width_half_max, minimum_between, power_spectrum_of, refine_minimum};
use ionforce::photon::events;
use ionforce::{
    build_histogram, calibrate_force, fit_exponential_background, frequency_sweep, power_spectrum, run_experiment_with,
    sensitivity_report, steady_state_response, ArrivalHistogram64, RunOptions64, SensitivityReport64,
};
use serde::Serialize;

use crate::budget::{project, BudgetPoint};
use crate::output::{matrix_csv, Cell, Manifest, OutputSet, Table};
use crate::spec::{EventsFormat, ExperimentSpec, Format};
use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    SweepFrequency,
    SweepForce,
    SensitivityBudget,
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SweepFrequency => "sweep-frequency",
            Command::SweepForce => "sweep-force",
            Command::SensitivityBudget => "sensitivity-budget",
            Command::Calibrate => "calibrate",
        }
    }
}

/// Command-line overrides applied on top of the spec file.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub spec: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// JSON schema version of `reports.json` and every `summary.json`.
pub const SCHEMA_VERSION: u32 = 1;

pub fn run(command: Command, inv: &Invocation) -> Result<Manifest, RunError> {
    let mut spec = ExperimentSpec::load(&inv.spec)?;
    if let Some(seed) = inv.seed {
        spec.seed = Some(seed);
    }
    let out_dir = match (&inv.out_dir, spec.output.as_ref().and_then(|o| o.dir.as_ref())) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => resolve_relative(&inv.spec, dir),
        (None, None) => PathBuf::from("out").join(spec_stem(&inv.spec)),
    };
    {
        let output = spec.output.get_or_insert_with(Default::default);
        if let Some(format) = inv.format {
            output.format = Some(format);
        }
        // where outputs go is not part of what they contain
        output.dir = None;
    }
    let workers = match inv.workers {
        Some(0) => return Err(RunError::Spec("--workers must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Runtime(e.to_string()))?;

    match command {
        Command::Simulate => simulate(&spec, &out_dir, workers, &pool),
        Command::SweepFrequency => sweep_frequency(&spec, &out_dir, workers, &pool),
        Command::SweepForce => sweep_force(&spec, &out_dir, workers, &pool),
        Command::SensitivityBudget => sensitivity_budget(&spec, &out_dir, workers),
        Command::Calibrate => calibrate(&spec, &out_dir, workers),
    }
}

fn spec_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn resolve_relative(spec: &Path, dir: &str) -> PathBuf {
    let dir = Path::new(dir);
    if dir.is_absolute() {
        dir.to_path_buf()
    } else {
        spec.parent().unwrap_or(Path::new(".")).join(dir)
    }
}

fn runtime(e: ionforce::Error) -> RunError {
    RunError::Runtime(e.to_string())
}

fn histogram_table(hist: &ArrivalHistogram64, from_bin: usize) -> Table {
    let mut t = Table::new(&["bin_start_s", "bin_end_s", "count"]);
    for i in from_bin..hist.n_bins() {
        t.push(vec![
            hist.bin_edges[i].into(),
            hist.bin_edges[i + 1].into(),
            hist.counts[i].into(),
        ]);
    }
    t
}

fn spectrum_table(frequencies: &[f64], power: &[f64]) -> Table {
    let mut t = Table::new(&["frequency_hz", "power"]);
    for (&f, &p) in frequencies.iter().zip(power) {
        t.push(vec![f.into(), p.into()]);
    }
    t
}

#[derive(Serialize)]
struct Theory {
    velocity_amplitude_m_s: f64,
    phase_rad: f64,
    displacement_m: f64,
    modulation_depth: f64,
}

#[derive(Serialize)]
struct BackgroundFit {
    amplitude: f64,
    reference_time_s: f64,
    decay_time_s: f64,
    residual_peak_frequency_hz: Option<f64>,
}

#[derive(Serialize)]
struct SpectrumSummary {
    peak_frequency_hz: f64,
    peak_power: f64,
    noise_power: f64,
    power_ratio: f64,
    snr: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    schema_version: u32,
    n_cycles: usize,
    total_photons: u64,
    photons_per_cycle: f64,
    measurement_time_s: f64,
    theory: Theory,
    background_fit: Option<BackgroundFit>,
    spectrum: Option<SpectrumSummary>,
}

fn simulate(spec: &ExperimentSpec, dir: &Path, workers: usize, pool: &rayon::ThreadPool) -> Result<Manifest, RunError> {
    let seed = spec.seed()?;
    let n_cycles = spec.n_cycles()?;
    let trap = spec.trap()?;
    let drive = spec.drive(&trap)?;
    let cfg = spec.detection(&trap)?;
    let analysis = spec.analysis(&trap, &cfg)?;
    let timing = spec.timing()?;
    let format = spec.format();
    let opts = RunOptions64 {
        drift_step: timing.drift_step,
    };

    let mut out = OutputSet::create(dir, "simulate", spec.to_toml(), Some(seed), workers)?;
    let traces = out
        .stage("simulate", || {
            pool.install(|| run_experiment_with(&trap, &drive, &cfg, n_cycles, seed, &opts))
        })
        .map_err(runtime)?;
    let hist = out
        .stage("histogram", || {
            build_histogram(&traces, cfg.bin_width, cfg.detect_window, cfg.acquisition)
        })
        .map_err(runtime)?;

    match spec.events_format() {
        EventsFormat::Csv => {
            let mut buf = Vec::new();
            events::write_csv(&mut buf, &traces).map_err(|e| RunError::Runtime(e.to_string()))?;
            out.write("events.csv", &buf)?;
        }
        EventsFormat::Binary => {
            let mut buf = Vec::new();
            events::write_binary(&mut buf, &traces).map_err(|e| RunError::Runtime(e.to_string()))?;
            out.write("events.bin", &buf)?;
        }
        EventsFormat::None => {}
    }
    out.write_table("histogram", &histogram_table(&hist, 0), format)?;

    // A flat or empty histogram has no exponential to fit; that is a
    // property of the data, not a failure.
    let fit = out
        .stage("fit", || fit_exponential_background(&hist, analysis.exclude_before))
        .ok();
    let background_fit = match &fit {
        Some(fit) => {
            let mut t = Table::new(&["t_s", "count", "fitted", "residual"]);
            for (k, &time) in fit.times.iter().enumerate() {
                t.push(vec![
                    time.into(),
                    hist.counts[fit.first_bin + k].into(),
                    fit.fitted[k].into(),
                    fit.residuals[k].into(),
                ]);
            }
            out.write_table("fit", &t, format)?;
            let residual_peak = power_spectrum_of(&fit.residuals, cfg.bin_width, &analysis.spectrum)
                .ok()
                .map(|s| s.peak_frequency);
            Some(BackgroundFit {
                amplitude: fit.amplitude,
                reference_time_s: fit.reference_time,
                decay_time_s: fit.decay_time,
                residual_peak_frequency_hz: residual_peak,
            })
        }
        None => None,
    };

    let spectrum = out
        .stage("spectrum", || {
            power_spectrum(&hist, analysis.exclude_before, &analysis.spectrum)
        })
        .ok();
    if let Some(s) = &spectrum {
        out.write_table("spectrum", &spectrum_table(&s.frequencies, &s.power), format)?;
    }

    let state = steady_state_response(&trap, &drive).map_err(runtime)?;
    let total = hist.total();
    let summary = SimulateSummary {
        schema_version: SCHEMA_VERSION,
        n_cycles,
        total_photons: total,
        photons_per_cycle: total as f64 / n_cycles as f64,
        measurement_time_s: n_cycles as f64 * timing.cycle_time(drive.drive_duration),
        theory: Theory {
            velocity_amplitude_m_s: state.velocity_amplitude,
            phase_rad: state.phase,
            displacement_m: state.displacement_amplitude,
            modulation_depth: cfg.modulation_depth(state.velocity_amplitude),
        },
        background_fit,
        spectrum: spectrum.map(|s| SpectrumSummary {
            peak_frequency_hz: s.peak_frequency,
            peak_power: s.peak_power,
            noise_power: s.noise_power,
            power_ratio: s.power_ratio,
            snr: s.snr,
        }),
    };
    out.write_json("summary.json", &summary)?;
    out.finish()
}

#[derive(Serialize)]
struct SweepSummary {
    schema_version: u32,
    n_cycles: usize,
    points: usize,
    drive_duration_s: f64,
    step_hz: f64,
    /// 1/t_d: expected first-null offset, Hz.
    expected_null_hz: f64,
    peak_detuning_hz: f64,
    /// FWHM of the excess amplitude (proxy minus shot-noise floor).
    fwhm_hz: Option<f64>,
    theory_fwhm_hz: Option<f64>,
    /// Parabolic vertex of proxy² around the smallest excess amplitude
    /// within 0.6..1.4 of the expected offset.
    lower_null_hz: Option<f64>,
    upper_null_hz: Option<f64>,
}

fn sweep_frequency(
    spec: &ExperimentSpec,
    dir: &Path,
    workers: usize,
    pool: &rayon::ThreadPool,
) -> Result<Manifest, RunError> {
    let seed = spec.seed()?;
    let n_cycles = spec.n_cycles()?;
    let trap = spec.trap()?;
    let drive = spec.drive(&trap)?;
    let grid = spec.sweep_grid(&trap, &drive)?;
    let cfg = spec.detection(&trap)?;
    let timing = spec.timing()?;
    let format = spec.format();
    let opts = RunOptions64 {
        drift_step: timing.drift_step,
    };

    let mut out = OutputSet::create(dir, "sweep-frequency", spec.to_toml(), Some(seed), workers)?;
    let sweep = out
        .stage("sweep", || {
            pool.install(|| frequency_sweep(&trap, &drive, &cfg, &grid, n_cycles, seed, &opts))
        })
        .map_err(runtime)?;

    match format {
        Format::Csv => {
            out.write(
                "map.csv",
                matrix_csv("t_s", &sweep.omegas, &sweep.bin_centers, &sweep.rows).as_bytes(),
            )?;
            out.write(
                "theory_map.csv",
                matrix_csv("t_s", &sweep.omegas, &sweep.bin_centers, &sweep.theory_rows).as_bytes(),
            )?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Map<'a> {
                omega_d_rad_s: &'a [f64],
                t_s: &'a [f64],
                rows: &'a [Vec<f64>],
            }
            out.write_json(
                "map.json",
                &Map {
                    omega_d_rad_s: &sweep.omegas,
                    t_s: &sweep.bin_centers,
                    rows: &sweep.rows,
                },
            )?;
            out.write_json(
                "theory_map.json",
                &Map {
                    omega_d_rad_s: &sweep.omegas,
                    t_s: &sweep.bin_centers,
                    rows: &sweep.theory_rows,
                },
            )?;
        }
    }

    let detuning: Vec<f64> = sweep.omegas.iter().map(|w| (w - trap.omega_z) / TAU).collect();
    let excess = sweep.excess_amplitude();
    let mut t = Table::new(&[
        "omega_d_rad_s",
        "drive_frequency_hz",
        "detuning_hz",
        "proxy",
        "noise_floor",
        "excess_amplitude",
        "theory_velocity_m_s",
        "theory_phase_rad",
        "theory_proxy",
    ]);
    for i in 0..sweep.omegas.len() {
        t.push(vec![
            sweep.omegas[i].into(),
            (sweep.omegas[i] / TAU).into(),
            detuning[i].into(),
            sweep.proxy[i].into(),
            sweep.noise_floor[i].into(),
            excess[i].into(),
            sweep.theory_velocity[i].into(),
            sweep.theory_phase[i].into(),
            sweep.theory_proxy[i].into(),
        ]);
    }
    out.write_table("proxy", &t, format)?;

    let null = 1.0 / drive.drive_duration;
    let peak = (0..excess.len())
        .max_by(|&a, &b| excess[a].total_cmp(&excess[b]))
        .unwrap_or(0);
    let covers =
        |lo: f64, hi: f64| detuning.first().is_some_and(|&d| d <= lo) && detuning.last().is_some_and(|&d| d >= hi);
    let power: Vec<f64> = sweep.proxy.iter().map(|p| p * p).collect();
    let find_null = |lo: f64, hi: f64| {
        covers(lo, hi)
            .then(|| minimum_between(&detuning, &excess, lo, hi))
            .flatten()
            .map(|i| refine_minimum(&detuning, &power, i, 2))
    };
    let lower = find_null(-1.4 * null, -0.6 * null);
    let upper = find_null(0.6 * null, 1.4 * null);
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        n_cycles,
        points: grid.len(),
        drive_duration_s: drive.drive_duration,
        step_hz: if detuning.len() > 1 {
            detuning[1] - detuning[0]
        } else {
            0.0
        },
        expected_null_hz: null,
        peak_detuning_hz: detuning[peak],
        fwhm_hz: full_width_half_max(&detuning, &excess),
        theory_fwhm_hz: full_width_half_max(&detuning, &sweep.theory_proxy),
        lower_null_hz: lower,
        upper_null_hz: upper,
    };
    out.write_json("summary.json", &summary)?;
    out.finish()
}

#[derive(Serialize)]
struct LadderPoint {
    index: usize,
    force_per_ion_n: f64,
    spectrum: SpectrumSummary,
    report: SensitivityReport64,
}

#[derive(Serialize)]
struct LinearFit {
    slope_per_n: f64,
    intercept: f64,
    r_squared: f64,
}

#[derive(Serialize)]
struct Reports {
    schema_version: u32,
    n_cycles: usize,
    cycle_time_s: f64,
    measurement_time_s: f64,
    points: Vec<LadderPoint>,
    /// Least-squares line through (total force, SNR); absent for fewer than
    /// two distinct forces.
    snr_vs_force: Option<LinearFit>,
}

fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if x.len() < 2 || sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LinearFit {
        slope_per_n: slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

fn sweep_force(
    spec: &ExperimentSpec,
    dir: &Path,
    workers: usize,
    pool: &rayon::ThreadPool,
) -> Result<Manifest, RunError> {
    let seed = spec.seed()?;
    let n_cycles = spec.n_cycles()?;
    let trap = spec.trap()?;
    let drive = spec.drive(&trap)?;
    let forces = spec.ladder(&trap, &drive)?;
    let cfg = spec.detection(&trap)?;
    let analysis = spec.analysis(&trap, &cfg)?;
    let timing = spec.timing()?;
    let format = spec.format();
    let opts = RunOptions64 {
        drift_step: timing.drift_step,
    };
    let cycle_time = timing.cycle_time(drive.drive_duration);
    let tau_m = n_cycles as f64 * cycle_time;

    let mut out = OutputSet::create(dir, "sweep-force", spec.to_toml(), Some(seed), workers)?;
    let mut points = Vec::with_capacity(forces.len());
    let mut table = Table::new(&[
        "index",
        "force_per_ion_yn",
        "total_force_yn",
        "snr",
        "force_sensitivity_yn_rthz",
        "force_sensitivity_unc_yn_rthz",
        "displacement_nm",
        "displacement_sensitivity_nm_rthz",
    ]);
    for (i, &force) in forces.iter().enumerate() {
        let d = ionforce::DriveConfig64 {
            force_per_ion: force,
            ..drive
        };
        // every point reuses the base seed, so points differ only in force
        let traces = out
            .stage(&format!("simulate[{i}]"), || {
                pool.install(|| run_experiment_with(&trap, &d, &cfg, n_cycles, seed, &opts))
            })
            .map_err(runtime)?;
        let hist = build_histogram(&traces, cfg.bin_width, cfg.detect_window, cfg.acquisition).map_err(runtime)?;
        let s = out
            .stage(&format!("spectrum[{i}]"), || {
                power_spectrum(&hist, analysis.exclude_before, &analysis.spectrum)
            })
            .map_err(runtime)?;
        let report =
            sensitivity_report(&s, d.total_force(&trap), tau_m, &trap, &d, &analysis.uncertainties).map_err(runtime)?;

        out.write_table(
            &format!("trace_{i}"),
            &histogram_table(&hist, hist.first_bin_from(analysis.exclude_before)),
            format,
        )?;
        out.write_table(
            &format!("spectrum_{i}"),
            &spectrum_table(&s.frequencies, &s.power),
            format,
        )?;
        table.push(vec![
            i.into(),
            (force * 1e24).into(),
            (report.total_force * 1e24).into(),
            report.snr.into(),
            (report.force_sensitivity * 1e24).into(),
            (report.force_sensitivity_unc * 1e24).into(),
            (report.displacement * 1e9).into(),
            (report.displacement_sensitivity * 1e9).into(),
        ]);
        points.push(LadderPoint {
            index: i,
            force_per_ion_n: force,
            spectrum: SpectrumSummary {
                peak_frequency_hz: s.peak_frequency,
                peak_power: s.peak_power,
                noise_power: s.noise_power,
                power_ratio: s.power_ratio,
                snr: s.snr,
            },
            report,
        });
    }
    out.write_table("reports", &table, format)?;

    let x: Vec<f64> = points.iter().map(|p| p.report.total_force).collect();
    let y: Vec<f64> = points.iter().map(|p| p.report.snr).collect();
    let reports = Reports {
        schema_version: SCHEMA_VERSION,
        n_cycles,
        cycle_time_s: cycle_time,
        measurement_time_s: tau_m,
        snr_vs_force: linear_fit(&x, &y),
        points,
    };
    out.write_json("reports.json", &reports)?;
    out.finish()
}

fn sensitivity_budget(spec: &ExperimentSpec, dir: &Path, workers: usize) -> Result<Manifest, RunError> {
    let trap = spec.trap()?;
    let drive = spec.drive(&trap)?;
    let cfg = spec.detection(&trap)?;
    let timing = spec.timing()?;
    let format = spec.format();
    let base = BudgetPoint {
        ion_count: trap.ion_count as f64,
        ion_mass: trap.ion_mass,
        charge: trap.charge,
        drive_duration: drive.drive_duration,
        cycle_overhead: timing.cycle_overhead,
        rate_per_ion: spec.rate_per_ion(&trap)?,
        collection_gain: 1.0,
        gamma: cfg.gamma,
        wavevector: cfg.wavevector,
        window: cfg.detect_window - cfg.hardware_delay,
        damping_time: cfg.damping_time,
    };

    let mut rows = vec![("spec".to_string(), base)];
    let steps = spec.budget.as_ref().map(|b| b.step.as_slice()).unwrap_or_default();
    for (i, step) in steps.iter().enumerate() {
        let path = |field: &str| format!("budget.step[{i}].{field}");
        let mut p = if step.inherit.unwrap_or(true) {
            rows[rows.len() - 1].1
        } else {
            base
        };
        if let Some(n) = step.ion_count {
            p.ion_count = positive(n, &path("ion_count"))?;
        }
        if let Some(t) = step.t_d_s {
            p.drive_duration = positive(t, &path("t_d_s"))?;
        }
        if let Some(g) = step.collection_gain {
            p.collection_gain = non_negative(g, &path("collection_gain"))?;
        }
        if let Some(o) = step.cycle_overhead_s {
            p.cycle_overhead = non_negative(o, &path("cycle_overhead_s"))?;
        }
        rows.push((step.label.clone(), p));
    }

    let mut table = Table::new(&[
        "label",
        "ion_count",
        "t_d_s",
        "collection_gain",
        "cycle_time_s",
        "detected_rate_per_s",
        "force_sensitivity_yn_rthz",
        "field_sensitivity_nv_m_rthz",
    ]);
    let unbounded = |x: Option<f64>, scale: f64| x.map_or(Cell::from("unbounded"), |v| Cell::from(v * scale));
    let mut out = OutputSet::create(dir, "sensitivity-budget", spec.to_toml(), spec.seed, workers)?;
    for (label, p) in &rows {
        let proj = project(p);
        table.push(vec![
            label.as_str().into(),
            p.ion_count.into(),
            p.drive_duration.into(),
            p.collection_gain.into(),
            proj.cycle_time.into(),
            proj.detected_rate.into(),
            unbounded(proj.force_sensitivity, 1e24),
            unbounded(proj.field_sensitivity, 1e9),
        ]);
    }
    out.write_table("budget", &table, format)?;
    out.finish()
}

fn positive(x: f64, path: &str) -> Result<f64, RunError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(RunError::Spec(format!("{path}: must be positive, got {x}")))
    }
}

fn non_negative(x: f64, path: &str) -> Result<f64, RunError> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(RunError::Spec(format!("{path}: must be non-negative, got {x}")))
    }
}

fn calibrate(spec: &ExperimentSpec, dir: &Path, workers: usize) -> Result<Manifest, RunError> {
    let input = spec.calibration()?;
    let trap = spec.trap.as_ref().map(|_| spec.trap()).transpose()?;
    let charge = trap.map_or(ionforce::constants::ELEMENTARY_CHARGE, |t| t.charge);
    let cal = calibrate_force(&input, charge).map_err(|e| RunError::Spec(format!("calibration: {e}")))?;

    let mut out = OutputSet::create(dir, "calibrate", spec.to_toml(), spec.seed, workers)?;
    let mut table = Table::new(&[
        "applied_voltage_v",
        "field_v_per_m",
        "force_per_ion_n",
        "force_per_ion_yn",
        "total_force_yn",
    ]);
    let total = trap.map_or(f64::NAN, |t| cal.force_per_ion * t.ion_count as f64 * 1e24);
    table.push(vec![
        cal.applied_voltage.unwrap_or(f64::NAN).into(),
        cal.field_at_ions.into(),
        cal.force_per_ion.into(),
        (cal.force_per_ion * 1e24).into(),
        total.into(),
    ]);
    out.write_table("calibration", &table, spec.format())?;
    out.finish()
}
