//! Monte Carlo sweeps over one scenario axis.
//!
//! Every trial draws its own channel realization from a generator stream
//! keyed by (master seed, trial index), runs the solver, and scores the
//! rates. Trials are embarrassingly parallel; results are collected in trial
//! order so thread count and scheduling never influence the output.

use rayon::prelude::*;
use silm_core::network::{draw_channels, trial_rng, validate_config, NetworkConfig};
use silm_core::rate::evaluate_rates;
use silm_core::solver::{run_silm, SolverParams};
use silm_core::Error as CoreError;

/// Swept scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    RhoDb,
    SnrDb,
    UsersPerCell,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::RhoDb => "rho_db",
            Axis::SnrDb => "snr_db",
            Axis::UsersPerCell => "k",
        }
    }

    pub fn parse(name: &str) -> Option<Axis> {
        match name {
            "rho_db" => Some(Axis::RhoDb),
            "snr_db" => Some(Axis::SnrDb),
            "k" => Some(Axis::UsersPerCell),
            _ => None,
        }
    }
}

/// A full sweep description: base scenario, axis, values, and trial plan.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Experiment tag written to the CSV.
    pub name: String,
    pub base: NetworkConfig,
    pub solver: SolverParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    /// Optional leakage weight per axis value, aligned with `values`.
    pub w_schedule: Option<Vec<f64>>,
}

impl SweepSpec {
    /// Check the sweep invariants and every materialized configuration.
    pub fn validate(&self) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("sweep needs at least one axis value".into());
        }
        if self.trials < 1 {
            return Err("sweep needs at least one trial".into());
        }
        if let Some(schedule) = &self.w_schedule {
            if schedule.len() != self.values.len() {
                return Err(format!(
                    "w schedule has {} entries for {} axis values",
                    schedule.len(),
                    self.values.len()
                ));
            }
        }
        for (i, &v) in self.values.iter().enumerate() {
            let cfg = self.config_at(i);
            if self.axis == Axis::UsersPerCell && (v.fract() != 0.0 || v < 1.0) {
                return Err(format!("axis value {v} is not a valid user count"));
            }
            validate_config(&cfg).map_err(|e| format!("axis value {v}: {e}"))?;
        }
        Ok(())
    }

    /// Scenario at axis position `i`.
    pub fn config_at(&self, i: usize) -> NetworkConfig {
        let mut cfg = self.base.clone();
        let value = self.values[i];
        match self.axis {
            Axis::RhoDb => cfg.rho_db = value,
            Axis::SnrDb => cfg.power = 10f64.powf(value / 10.0),
            Axis::UsersPerCell => cfg.users_per_cell = value.max(1.0) as usize,
        }
        if let Some(schedule) = &self.w_schedule {
            cfg.leakage_weight = schedule[i];
        }
        cfg
    }
}

/// Rates of one successful trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub r_dl: f64,
    pub r_ul: f64,
    pub r_total: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// One trial's result, keyed by its index; solver failures are recorded
/// instead of aborting the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub result: Result<TrialRecord, String>,
}

/// Run one trial of one scenario point.
pub fn run_single_trial(
    cfg: &NetworkConfig,
    solver: &SolverParams,
    master_seed: u64,
    trial: u64,
) -> TrialOutcome {
    let run = || -> Result<TrialRecord, CoreError> {
        let mut rng = trial_rng(master_seed, trial);
        let ch = draw_channels(cfg, &mut rng)?;
        let report = run_silm(cfg, &ch, solver, &mut rng)?;
        let rates = evaluate_rates(cfg, &ch, &report.final_state)?;
        Ok(TrialRecord {
            r_dl: rates.r_dl,
            r_ul: rates.r_ul,
            r_total: rates.r_total,
            converged: report.converged,
            iterations: report.iterations_run,
        })
    };
    TrialOutcome { trial, result: run().map_err(|e| e.to_string()) }
}

/// Run all trials of one scenario point in parallel, ordered by trial index.
pub fn run_trials(
    cfg: &NetworkConfig,
    solver: &SolverParams,
    trials: u64,
    master_seed: u64,
) -> Vec<TrialOutcome> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_single_trial(cfg, solver, master_seed, t))
        .collect()
}

/// Mean and standard error of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats {
    pub mean: f64,
    pub stderr: f64,
}

fn metric_stats(samples: &[f64]) -> MetricStats {
    let n = samples.len();
    if n == 0 {
        return MetricStats { mean: f64::NAN, stderr: f64::NAN };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return MetricStats { mean, stderr: 0.0 };
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    MetricStats { mean, stderr: (var / n as f64).sqrt() }
}

/// Aggregated rates at one axis value.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStats {
    pub r_dl: MetricStats,
    pub r_ul: MetricStats,
    pub r_total: MetricStats,
    /// Trials that completed without a solver error.
    pub trials_used: usize,
}

pub fn aggregate(outcomes: &[TrialOutcome]) -> RateStats {
    let ok: Vec<&TrialRecord> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    RateStats {
        r_dl: metric_stats(&ok.iter().map(|r| r.r_dl).collect::<Vec<_>>()),
        r_ul: metric_stats(&ok.iter().map(|r| r.r_ul).collect::<Vec<_>>()),
        r_total: metric_stats(&ok.iter().map(|r| r.r_total).collect::<Vec<_>>()),
        trials_used: ok.len(),
    }
}

/// One axis value's aggregated statistics plus the raw per-trial records.
#[derive(Debug, Clone)]
pub struct AxisResult {
    pub value: f64,
    pub stats: RateStats,
    pub trials: Vec<TrialOutcome>,
}

/// Run context kept out of the CSV so output bytes stay deterministic.
#[derive(Debug, Clone)]
pub struct RunMetadata {
    pub version: String,
    pub timestamp_unix: u64,
    pub effective_mode: String,
    pub effective_weight_note: String,
}

/// Full sweep output.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec_name: String,
    pub axis: Axis,
    pub master_seed: u64,
    pub rows: Vec<AxisResult>,
    pub metadata: RunMetadata,
}

/// Execute a validated sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, String> {
    spec.validate()?;
    let rows = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let cfg = spec.config_at(i);
            let trials = run_trials(&cfg, &spec.solver, spec.trials, spec.master_seed);
            let stats = aggregate(&trials);
            AxisResult { value, stats, trials }
        })
        .collect();

    let timestamp_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let weight_note = match &spec.w_schedule {
        Some(s) => format!("w schedule {s:?}"),
        None => format!("w = {}", spec.base.leakage_weight),
    };
    Ok(SweepResult {
        spec_name: spec.name.clone(),
        axis: spec.axis,
        master_seed: spec.master_seed,
        rows,
        metadata: RunMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix,
            effective_mode: if spec.base.leakage_weight == 0.0 && spec.w_schedule.is_none() {
                "ilm".to_string()
            } else {
                "silm".to_string()
            },
            effective_weight_note: weight_note,
        },
    })
}

fn preset_base(dl: usize, ul: usize, users: usize, antennas: usize) -> NetworkConfig {
    NetworkConfig {
        dl_cells: dl,
        ul_cells: ul,
        users_per_cell: users,
        bs_antennas: antennas,
        user_antennas: antennas,
        streams_per_user: 1,
        power: 10.0, // 10 dB unless the sweep axis overrides it
        rho_db: -20.0,
        leakage_weight: 0.01,
    }
}

const RHO_SWEEP_DB: [f64; 7] = [-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0];
const SNR_SWEEP_DB: [f64; 6] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0];

/// Named sweep configurations for the standard experiment set.
pub fn figure_preset(name: &str) -> Result<SweepSpec, String> {
    let spec = match name {
        // downlink-only, rate vs inter-cell gain at 10 dB SNR
        "fig2" => SweepSpec {
            name: "fig2".into(),
            base: preset_base(4, 0, 4, 5),
            solver: SolverParams::default(),
            axis: Axis::RhoDb,
            values: RHO_SWEEP_DB.to_vec(),
            trials: 200,
            master_seed: 0,
            w_schedule: None,
        },
        // downlink-only, rate vs SNR with the per-SNR weight schedule
        "fig3" => SweepSpec {
            name: "fig3".into(),
            base: preset_base(4, 0, 5, 5),
            solver: SolverParams::default(),
            axis: Axis::SnrDb,
            values: SNR_SWEEP_DB.to_vec(),
            trials: 200,
            master_seed: 0,
            w_schedule: Some(vec![0.02, 0.02, 0.005, 0.003, 0.002, 0.001]),
        },
        // downlink-only, rate vs users per cell
        "fig4" => SweepSpec {
            name: "fig4".into(),
            base: preset_base(4, 0, 1, 5),
            solver: SolverParams::default(),
            axis: Axis::UsersPerCell,
            values: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            trials: 200,
            master_seed: 0,
            w_schedule: None,
        },
        // uplink-only, rate vs inter-cell gain at 10 dB SNR
        "fig5" => SweepSpec {
            name: "fig5".into(),
            base: preset_base(0, 4, 4, 5),
            solver: SolverParams::default(),
            axis: Axis::RhoDb,
            values: RHO_SWEEP_DB.to_vec(),
            trials: 200,
            master_seed: 0,
            w_schedule: None,
        },
        // mixed uplink-downlink four-cell system, rate vs SNR
        "fig6" => SweepSpec {
            name: "fig6".into(),
            base: preset_base(2, 2, 2, 4),
            solver: SolverParams::default(),
            axis: Axis::SnrDb,
            values: SNR_SWEEP_DB.to_vec(),
            trials: 200,
            master_seed: 0,
            w_schedule: None,
        },
        other => return Err(format!("unknown figure preset '{other}'")),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            name: "tiny".into(),
            base: NetworkConfig {
                dl_cells: 1,
                ul_cells: 1,
                users_per_cell: 1,
                bs_antennas: 2,
                user_antennas: 2,
                streams_per_user: 1,
                power: 10.0,
                rho_db: -20.0,
                leakage_weight: 0.01,
            },
            solver: SolverParams { max_iters: 50, ..Default::default() },
            axis: Axis::SnrDb,
            values: vec![10.0],
            trials: 4,
            master_seed: 7,
            w_schedule: None,
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let spec = tiny_spec();
        let a = run_trials(&spec.config_at(0), &spec.solver, 4, 7);
        let b = run_trials(&spec.config_at(0), &spec.solver, 4, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn trials_are_order_independent() {
        let spec = tiny_spec();
        let batch = run_trials(&spec.config_at(0), &spec.solver, 4, 7);
        for t in (0..4u64).rev() {
            let single = run_single_trial(&spec.config_at(0), &spec.solver, 7, t);
            assert_eq!(batch[t as usize], single);
        }
    }

    #[test]
    fn stats_match_arithmetic_means() {
        let spec = tiny_spec();
        let result = run_sweep(&spec).unwrap();
        let row = &result.rows[0];
        let raw: Vec<f64> =
            row.trials.iter().map(|t| t.result.as_ref().unwrap().r_total).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        assert!((row.stats.r_total.mean - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        assert_eq!(row.stats.trials_used, 4);
    }

    #[test]
    fn validation_catches_bad_sweeps() {
        let mut spec = tiny_spec();
        spec.values.clear();
        assert!(spec.validate().is_err());

        let mut spec = tiny_spec();
        spec.w_schedule = Some(vec![0.1, 0.2]);
        assert!(spec.validate().is_err());

        let mut spec = tiny_spec();
        spec.axis = Axis::UsersPerCell;
        spec.values = vec![1.5];
        assert!(spec.validate().is_err());

        let mut spec = tiny_spec();
        spec.axis = Axis::UsersPerCell;
        spec.values = vec![5.0]; // Ks > N_b
        assert!(spec.validate().is_err());
    }

    #[test]
    fn presets_match_their_captions() {
        let fig2 = figure_preset("fig2").unwrap();
        assert_eq!(fig2.axis, Axis::RhoDb);
        assert_eq!(fig2.base.dl_cells, 4);
        assert_eq!(fig2.base.users_per_cell, 4);
        assert_eq!(fig2.base.power, 10.0);
        assert!(fig2.validate().is_ok());

        let fig3 = figure_preset("fig3").unwrap();
        assert_eq!(fig3.axis, Axis::SnrDb);
        assert_eq!(fig3.values, vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        assert_eq!(fig3.w_schedule, Some(vec![0.02, 0.02, 0.005, 0.003, 0.002, 0.001]));
        assert_eq!(fig3.base.users_per_cell, 5);
        assert_eq!(fig3.base.rho_db, -20.0);
        assert!(fig3.validate().is_ok());

        let fig4 = figure_preset("fig4").unwrap();
        assert_eq!(fig4.axis, Axis::UsersPerCell);
        assert_eq!(fig4.values.len(), 5);
        assert!(fig4.validate().is_ok());

        let fig5 = figure_preset("fig5").unwrap();
        assert_eq!(fig5.base.ul_cells, 4);
        assert_eq!(fig5.base.dl_cells, 0);
        assert!(fig5.validate().is_ok());

        let fig6 = figure_preset("fig6").unwrap();
        assert_eq!(
            (fig6.base.dl_cells, fig6.base.ul_cells, fig6.base.users_per_cell),
            (2, 2, 2)
        );
        assert_eq!(fig6.base.bs_antennas, 4);
        assert_eq!(fig6.base.rho_db, -20.0);
        assert!(fig6.validate().is_ok());

        assert!(figure_preset("fig9").is_err());
    }

    #[test]
    fn axis_application_hits_the_right_field() {
        let mut spec = tiny_spec();
        spec.axis = Axis::RhoDb;
        spec.values = vec![-7.0];
        assert_eq!(spec.config_at(0).rho_db, -7.0);

        spec.axis = Axis::SnrDb;
        spec.values = vec![20.0];
        assert!((spec.config_at(0).power - 100.0).abs() < 1e-9);

        spec.axis = Axis::UsersPerCell;
        spec.values = vec![2.0];
        assert_eq!(spec.config_at(0).users_per_cell, 2);

        spec.axis = Axis::SnrDb;
        spec.values = vec![0.0];
        spec.w_schedule = Some(vec![0.5]);
        assert_eq!(spec.config_at(0).leakage_weight, 0.5);
    }
}
