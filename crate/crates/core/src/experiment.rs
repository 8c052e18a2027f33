//! Experiment orchestration and artifact emission.
//!
//! Output layout for a single mode:
//!
//! ```text
//! out/
//!   manifest.toml        scenario hash, seed, resolved parameters, summary
//!   scenario.toml        canonical echo of the scenario file
//!   ystar-<hash>.json    cached clairvoyant optimum
//!   trajectory.csv
//!   metrics.csv
//!   regret_fit.svg       (plots on)
//!   triggers.csv         (event mode)
//!   triggers.svg         (event mode, plots on)
//! ```
//!
//! Both modes write the per-mode files under `continuous/` and
//! `event_triggered/` and add `compare.csv` at the top level.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::Mode;
use crate::oracle::{self, OracleError};
use crate::plot::{self, Panel, Series};
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{self, MetricsError, MetricsReport, SimError, Trajectory};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("simulation aborted: {0}")]
    Sim(#[from] SimError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("serialisation: {0}")]
    Serialise(String),
    #[error("scenario has no [sweep] section")]
    NoSweep,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    Continuous,
    Event,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Continuous => vec![Mode::Continuous],
            ModeSelection::Event => vec![Mode::EventTriggered],
            ModeSelection::Both => vec![Mode::Continuous, Mode::EventTriggered],
        }
    }
}

impl From<Mode> for ModeSelection {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Continuous => ModeSelection::Continuous,
            Mode::EventTriggered => ModeSelection::Event,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the scenario seed for initial states.
    pub seed: Option<u64>,
    pub plot: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            plot: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedOptimum {
    pub scenario_hash: String,
    pub y_star: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
}

pub fn cache_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("ystar-{hash}.json"))
}

/// Clairvoyant optimum, read from `cache_dir` when a sidecar for this
/// scenario hash exists and written there otherwise. The oracle seed is
/// always the scenario's own so the cache key is the hash alone.
pub fn clairvoyant(
    scenario: &Scenario,
    cache_dir: Option<&Path>,
) -> Result<CachedOptimum, ExperimentError> {
    let hash = scenario.file.hash();
    if let Some(dir) = cache_dir {
        let path = cache_path(dir, &hash);
        if let Ok(text) = fs::read_to_string(&path) {
            match serde_json::from_str::<CachedOptimum>(&text) {
                Ok(c) if c.scenario_hash == hash && c.y_star.len() == scenario.total_output_dim() => {
                    info!("using cached optimum {}", path.display());
                    return Ok(c);
                }
                _ => log::warn!("ignoring stale cache {}", path.display()),
            }
        }
    }
    let prog = scenario.sampled_program()?;
    let sol = oracle::solve_clairvoyant(&prog, scenario.oracle.iters, scenario.seed)?;
    let cached = CachedOptimum {
        scenario_hash: hash.clone(),
        y_star: sol.y_star.iter().copied().collect(),
        objective: sol.objective,
        max_violation: sol.max_violation,
    };
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = cache_path(dir, &hash);
        let text = serde_json::to_string_pretty(&cached)
            .map_err(|e| ExperimentError::Serialise(e.to_string()))?;
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(cached)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeOutcome {
    pub trajectory: Trajectory,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mode: Mode,
    pub final_regret: f64,
    pub final_fit: f64,
    pub broadcasts: usize,
    /// Broadcasts relative to the continuous run.
    pub broadcast_ratio: f64,
    pub savings: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub scenario_hash: String,
    pub seed: u64,
    pub y_star: DVector<f64>,
    pub runs: Vec<ModeOutcome>,
    pub comparison: Option<Vec<ComparisonRow>>,
}

impl ExperimentOutcome {
    pub fn run(&self, mode: Mode) -> Option<&ModeOutcome> {
        self.runs.iter().find(|r| r.trajectory.mode == mode)
    }
}

/// Simulate and measure one mode without writing anything.
pub fn simulate(
    scenario: &Scenario,
    mode: Mode,
    seed: u64,
    y_star: &DVector<f64>,
) -> Result<ModeOutcome, ExperimentError> {
    let trajectory = sim::run(scenario, mode, seed)?;
    let metrics = sim::compute_metrics(&trajectory, y_star, scenario)?;
    Ok(ModeOutcome {
        trajectory,
        metrics,
    })
}

pub fn comparison(runs: &[ModeOutcome]) -> Vec<ComparisonRow> {
    let base = runs
        .iter()
        .find(|r| r.trajectory.mode == Mode::Continuous)
        .map(|r| r.trajectory.broadcasts() as f64);
    runs.iter()
        .map(|r| {
            let b = r.trajectory.broadcasts();
            let ratio = base.map_or(f64::NAN, |c| if c > 0.0 { b as f64 / c } else { f64::NAN });
            ComparisonRow {
                mode: r.trajectory.mode,
                final_regret: r.metrics.final_regret(),
                final_fit: r.metrics.final_fit(),
                broadcasts: b,
                broadcast_ratio: ratio,
                savings: 1.0 - ratio,
            }
        })
        .collect()
}

/// Solve (or load) y*, run the selected modes on one seed and write every
/// artifact under `out_dir`.
pub fn run_experiment(
    scenario: &Scenario,
    selection: ModeSelection,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<ExperimentOutcome, ExperimentError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let seed = opts.seed.unwrap_or(scenario.seed);
    let optimum = clairvoyant(scenario, Some(out_dir))?;
    let y_star = DVector::from_vec(optimum.y_star.clone());

    let modes = selection.modes();
    let nested = modes.len() > 1;
    let mut runs = Vec::with_capacity(modes.len());
    for mode in modes {
        info!("running {mode} mode, seed {seed}");
        let outcome = simulate(scenario, mode, seed, &y_star)?;
        let dir = if nested {
            out_dir.join(mode.as_str())
        } else {
            out_dir.to_path_buf()
        };
        write_mode_artifacts(scenario, &outcome, &dir, opts.plot)?;
        runs.push(outcome);
    }
    let comparison = nested.then(|| comparison(&runs));
    if let Some(rows) = &comparison {
        write_comparison(&out_dir.join("compare.csv"), rows)?;
    }

    let outcome = ExperimentOutcome {
        scenario_hash: scenario.file.hash(),
        seed,
        y_star,
        runs,
        comparison,
    };
    write_echo(scenario, out_dir)?;
    write_manifest(scenario, &outcome, &optimum, out_dir)?;
    Ok(outcome)
}

/// Both modes on identical seeds; writes the full artifact set plus
/// `compare.csv` and returns the comparison rows.
pub fn compare_modes(
    scenario: &Scenario,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<Vec<ComparisonRow>, ExperimentError> {
    let outcome = run_experiment(scenario, ModeSelection::Both, out_dir, opts)?;
    Ok(outcome.comparison.unwrap_or_default())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub iota: f64,
    pub broadcasts: usize,
    pub final_regret: f64,
    pub final_fit: f64,
    pub regret_bound: f64,
}

/// Event-triggered runs over the scenario's `[sweep] sigma` list at fixed
/// `iota`; writes `sweep.csv`.
pub fn sweep(
    scenario: &Scenario,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let sigmas = scenario
        .file
        .sweep
        .as_ref()
        .map(|s| s.sigma.clone())
        .ok_or(ExperimentError::NoSweep)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let seed = opts.seed.unwrap_or(scenario.seed);
    let optimum = clairvoyant(scenario, Some(out_dir))?;
    let y_star = DVector::from_vec(optimum.y_star.clone());
    let mut rows = Vec::with_capacity(sigmas.len());
    for sigma in sigmas {
        let mut file = scenario.file.clone();
        file.params.sigma = sigma;
        let variant = Scenario::from_file(file)?;
        info!("sweep sigma = {sigma}");
        let out = simulate(&variant, Mode::EventTriggered, seed, &y_star)?;
        rows.push(SweepRow {
            sigma,
            iota: variant.params.iota,
            broadcasts: out.trajectory.broadcasts(),
            final_regret: out.metrics.final_regret(),
            final_fit: out.metrics.final_fit(),
            regret_bound: out.metrics.bounds.regret_triggered,
        });
    }
    let path = out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(&path))?;
    write_echo(scenario, out_dir)?;
    Ok(rows)
}

fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_echo(scenario: &Scenario, out_dir: &Path) -> Result<(), ExperimentError> {
    let path = out_dir.join("scenario.toml");
    fs::write(&path, scenario.file.to_canonical()).map_err(io_err(&path))
}

fn output_columns(dims: &[usize], prefix: &str) -> Vec<String> {
    dims.iter()
        .enumerate()
        .flat_map(|(i, &d)| (0..d).map(move |k| format!("{prefix}{i}_{k}")))
        .collect()
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<(), ExperimentError> {
    let n = traj.agent_count();
    let mut header = vec!["t".to_string()];
    header.extend(output_columns(&traj.output_dims, "y"));
    header.extend(output_columns(&vec![traj.q; n], "mu"));
    header.extend((0..traj.q).map(|j| format!("g_{j}")));
    header.push("cost".into());
    header.push("disagreement".into());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for k in 0..traj.times.len() {
        record.clear();
        record.push(traj.times[k].to_string());
        record.extend(traj.outputs[k].iter().map(f64::to_string));
        record.extend(traj.multipliers[k].iter().map(f64::to_string));
        record.extend(traj.aggregate_constraint[k].iter().map(f64::to_string));
        record.push(traj.cost[k].to_string());
        record.push(traj.disagreement[k].to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_metrics_csv(path: &Path, m: &MetricsReport) -> Result<(), ExperimentError> {
    let q = m.fit_components.first().map_or(0, Vec::len);
    let mut header: Vec<String> = ["t", "regret", "fit", "fit_over_t"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..q).map(|j| format!("fit_component_{j}")));
    header.extend(["regret_bound", "fit_bound"].iter().map(|s| s.to_string()));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    let regret_bound = m.bounds.regret(m.mode);
    let fit_bound = m.bounds.fit(m.mode);
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for k in 0..m.times.len() {
        record.clear();
        record.push(m.times[k].to_string());
        record.push(m.regret_curve[k].to_string());
        record.push(m.fit_curve[k].to_string());
        record.push(m.fit_rate(k).to_string());
        record.extend(m.fit_components[k].iter().map(f64::to_string));
        record.push(regret_bound.to_string());
        record.push(fit_bound[k].to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_triggers_csv(path: &Path, traj: &Trajectory) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["agent", "step", "t"])?;
    for (i, ks) in traj.trigger_steps.iter().enumerate() {
        for &k in ks {
            w.write_record([i.to_string(), k.to_string(), traj.times[k].to_string()])?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_mode_artifacts(
    scenario: &Scenario,
    outcome: &ModeOutcome,
    dir: &Path,
    plots: bool,
) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let traj = &outcome.trajectory;
    let m = &outcome.metrics;
    write_trajectory_csv(&dir.join("trajectory.csv"), traj)?;
    write_metrics_csv(&dir.join("metrics.csv"), m)?;
    let event = traj.mode == Mode::EventTriggered;
    if event {
        write_triggers_csv(&dir.join("triggers.csv"), traj)?;
    }
    if plots {
        let label = match traj.mode {
            Mode::Continuous => "continuous communication",
            Mode::EventTriggered => "event-triggered communication",
        };
        let rate: Vec<f64> = (0..m.times.len()).map(|k| m.fit_rate(k)).collect();
        let panels = [
            Panel {
                title: format!("Regret, {label}"),
                x_label: "T (s)".into(),
                series: vec![
                    Series::new("regret", m.times.clone(), m.regret_curve.clone()),
                    Series::new("bound", m.times.clone(), vec![m.bounds.regret(traj.mode); m.times.len()]).dashed(),
                ],
            },
            Panel {
                title: format!("Fit / T, {label}"),
                x_label: "T (s)".into(),
                series: vec![Series::new("fit / T", m.times.clone(), rate)],
            },
        ];
        write_text(&dir.join("regret_fit.svg"), &plot::line_panels(&panels))?;
        if event {
            let svg = plot::raster("Triggering instants", scenario.horizon, traj.step, &traj.trigger_steps);
            write_text(&dir.join("triggers.svg"), &svg)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    scenario_hash: &'a str,
    scenario_name: &'a str,
    seed: u64,
    oracle_seed: u64,
    version: &'static str,
    params: ParamEcho,
    oracle: OracleEcho,
    warnings: &'a [String],
    runs: Vec<RunSummary>,
}

#[derive(Debug, Serialize)]
struct ParamEcho {
    agents: usize,
    q: usize,
    epsilon: f64,
    k_mu: f64,
    sigma: f64,
    iota: f64,
    horizon: f64,
    step: f64,
    k_f: f64,
    k_g: f64,
}

#[derive(Debug, Serialize)]
struct OracleEcho {
    samples: usize,
    iters: usize,
    objective: f64,
    max_violation: f64,
    y_star: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    mode: Mode,
    final_regret: f64,
    final_fit: f64,
    regret_bound: f64,
    fit_bound: f64,
    broadcasts: usize,
    trigger_counts: Vec<usize>,
}

fn write_manifest(
    scenario: &Scenario,
    outcome: &ExperimentOutcome,
    optimum: &CachedOptimum,
    out_dir: &Path,
) -> Result<(), ExperimentError> {
    let manifest = Manifest {
        scenario_hash: &outcome.scenario_hash,
        scenario_name: &scenario.file.name,
        seed: outcome.seed,
        oracle_seed: scenario.seed,
        version: env!("CARGO_PKG_VERSION"),
        params: ParamEcho {
            agents: scenario.agent_count(),
            q: scenario.q,
            epsilon: scenario.params.epsilon,
            k_mu: scenario.params.k_mu,
            sigma: scenario.params.sigma,
            iota: scenario.params.iota,
            horizon: scenario.horizon,
            step: scenario.step,
            k_f: scenario.k_f,
            k_g: scenario.k_g,
        },
        oracle: OracleEcho {
            samples: scenario.oracle.samples,
            iters: scenario.oracle.iters,
            objective: optimum.objective,
            max_violation: optimum.max_violation,
            y_star: optimum.y_star.clone(),
        },
        warnings: &scenario.warnings,
        runs: outcome
            .runs
            .iter()
            .map(|r| RunSummary {
                mode: r.trajectory.mode,
                final_regret: r.metrics.final_regret(),
                final_fit: r.metrics.final_fit(),
                regret_bound: r.metrics.bounds.regret(r.trajectory.mode),
                fit_bound: *r.metrics.bounds.fit(r.trajectory.mode).last().unwrap_or(&0.0),
                broadcasts: r.trajectory.broadcasts(),
                trigger_counts: r.metrics.trigger_counts.clone(),
            })
            .collect(),
    };
    let text = toml::to_string(&manifest).map_err(|e| ExperimentError::Serialise(e.to_string()))?;
    write_text(&out_dir.join("manifest.toml"), &text)
}
