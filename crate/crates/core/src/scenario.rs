//! Scenario files: parsing, canonical serialisation and validation.
//!
//! A scenario is a TOML document with `[graph]`, `[params]`, `[oracle]`,
//! optional `[sweep]`, and one `[[agents]]` table per agent. See the
//! repository README for the full grammar.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::{AlgorithmParams, Mode};
use crate::convex::{
    compute_bounds, AffineConstraint, AffineRow, BoxSet, ConstraintFamily, CostFamily,
    FunctionBounds, QuadraticCost,
};
use crate::graph::{edges_connected, CommGraph};
use crate::oracle::{self, ProgramTerm, SampledProgram};
use crate::plant::{AgentPlant, GainPair};

const INIT_MAX_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Auto,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KMuSetting {
    Keyword(Keyword),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSetting {
    Keyword(Keyword),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub epsilon: f64,
    pub k_mu: KMuSetting,
    pub sigma: f64,
    pub iota: f64,
    pub horizon: f64,
    pub step: f64,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default = "default_ceiling")]
    pub state_ceiling: f64,
}

fn default_ceiling() -> f64 {
    1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub samples: SampleSetting,
    pub iters: usize,
    pub resolution: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            samples: SampleSetting::Keyword(Keyword::Grid),
            iters: 200_000,
            resolution: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_range: Option<[f64; 2]>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: QuadraticCost,
    pub constraint: Vec<AffineRow>,
}

/// The on-disk scenario, exactly as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub graph: GraphSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub agents: Vec<AgentSection>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            ScenarioError::Parse {
                path: None,
                line,
                message: e.message().to_string(),
            }
        })
    }

    /// Canonical TOML text; parsing it yields an equal value.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("scenario types always serialise")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical().as_bytes()))
    }
}

/// One failed validation check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub agent: Option<usize>,
    /// Which hypothesis failed: 1 graph, 2 sets and functions, 3 feasibility,
    /// 4 plant rank conditions. `None` for structural problems.
    pub assumption: Option<u8>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = self.assumption {
            write!(f, "assumption {a} violated")?;
        } else {
            write!(f, "invalid scenario")?;
        }
        if let Some(i) = self.agent {
            write!(f, " (agent {i})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}parse error{}: {message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default(), line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        line: Option<usize>,
        message: String,
    },
    #[error("{} violation(s):\n{}", .0.len(), .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error("agent {agent}: no initial state in range puts the output inside its box")]
    Initialisation { agent: usize },
}

impl ScenarioError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ScenarioError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Fixed(DVector<f64>),
    Uniform { lo: f64, hi: f64 },
}

/// A validated agent: plant, gains, private functions and output box.
#[derive(Debug, Clone)]
pub struct Agent {
    pub plant: AgentPlant,
    pub gains: GainPair,
    pub cost: Arc<dyn CostFamily>,
    pub constraint: Arc<dyn ConstraintFamily>,
    pub output_box: BoxSet,
    pub init: InitialState,
    pub bounds: FunctionBounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSettings {
    pub samples: usize,
    pub iters: usize,
    pub resolution: f64,
}

/// Fully validated scenario ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub graph: CommGraph,
    pub agents: Vec<Agent>,
    pub q: usize,
    pub params: AlgorithmParams,
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    pub state_ceiling: f64,
    pub oracle: OracleSettings,
    /// `max_i K_f,i`
    pub k_f: f64,
    /// `max_i K_g,i`
    pub k_g: f64,
    pub warnings: Vec<String>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file = ScenarioFile::parse(&text).map_err(|e| match e {
        ScenarioError::Parse { line, message, .. } => ScenarioError::Parse {
            path: Some(path.to_path_buf()),
            line,
            message,
        },
        other => other,
    })?;
    Scenario::from_file(file)
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(format!("{what} is empty"));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(format!("{what} has ragged rows"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let mut violations = Vec::new();
        let mut push = |agent: Option<usize>, assumption: Option<u8>, message: String| {
            violations.push(Violation {
                agent,
                assumption,
                message,
            })
        };

        let edges: Vec<(usize, usize)> = file.graph.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = match CommGraph::new(file.graph.nodes, &edges) {
            Ok(g) => Some(g),
            Err(e) => {
                let a = (!edges_connected(file.graph.nodes, &edges)).then_some(1);
                push(None, a, e.to_string());
                None
            }
        };
        if file.agents.len() != file.graph.nodes {
            push(
                None,
                None,
                format!(
                    "graph has {} nodes but {} agents are listed",
                    file.graph.nodes,
                    file.agents.len()
                ),
            );
        }

        let p = &file.params;
        for (name, value) in [("epsilon", p.epsilon), ("horizon", p.horizon), ("step", p.step)] {
            if !(value > 0.0 && value.is_finite()) {
                push(None, None, format!("params.{name} must be positive"));
            }
        }
        for (name, value) in [("sigma", p.sigma), ("iota", p.iota)] {
            if !(value > 0.0 && value.is_finite()) {
                push(None, None, format!("params.{name} must be positive"));
            }
        }
        if p.step > p.horizon {
            push(None, None, "params.step exceeds params.horizon".into());
        }
        match p.k_mu {
            KMuSetting::Value(v) if !(v > 0.0) => {
                push(None, None, "params.k_mu must be positive".into())
            }
            KMuSetting::Keyword(Keyword::Grid) => {
                push(None, None, "params.k_mu must be a number or \"auto\"".into())
            }
            _ => {}
        }
        match file.oracle.samples {
            SampleSetting::Keyword(Keyword::Auto) => {
                push(None, None, "oracle.samples must be a count or \"grid\"".into())
            }
            SampleSetting::Count(m) if m < 2 => {
                push(None, None, "oracle.samples must be at least 2".into())
            }
            _ => {}
        }
        if !(file.oracle.resolution > 0.0) || file.oracle.iters == 0 {
            push(None, None, "oracle.resolution and oracle.iters must be positive".into());
        }

        let q = file.agents.first().map_or(0, |a| a.constraint.len());
        let mut agents = Vec::new();
        for (i, sec) in file.agents.iter().enumerate() {
            match build_agent(i, sec, q, p.horizon) {
                Ok(agent) => agents.push(agent),
                Err(mut v) => violations.append(&mut v),
            }
        }

        if !violations.is_empty() {
            return Err(ScenarioError::Invalid(violations));
        }
        let graph = graph.expect("no violations implies a valid graph");

        let n = agents.len();
        let k_f = agents.iter().map(|a| a.bounds.k_f).fold(0.0, f64::max);
        let k_g = agents.iter().map(|a| a.bounds.k_g).fold(0.0, f64::max);
        let mut warnings = Vec::new();
        let k_mu = match p.k_mu {
            KMuSetting::Value(v) => {
                if v < n as f64 * k_g {
                    let msg = format!(
                        "k_mu = {v} is below N * K_g = {}; the regret and fit guarantees do not apply",
                        n as f64 * k_g
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                v
            }
            KMuSetting::Keyword(_) => n as f64 * k_g,
        };

        let steps = (p.horizon / p.step).round() as usize;
        let samples = match file.oracle.samples {
            SampleSetting::Count(m) => m,
            SampleSetting::Keyword(_) => steps + 1,
        };
        let scenario = Scenario {
            graph,
            agents,
            q,
            params: AlgorithmParams {
                epsilon: p.epsilon,
                k_mu,
                sigma: p.sigma,
                iota: p.iota,
                mode: p.mode,
            },
            horizon: p.horizon,
            step: p.step,
            seed: p.seed,
            state_ceiling: p.state_ceiling,
            oracle: OracleSettings {
                samples,
                iters: file.oracle.iters,
                resolution: file.oracle.resolution,
            },
            k_f,
            k_g,
            warnings,
            file,
        };

        if let Err(msg) = scenario.check_feasible() {
            return Err(ScenarioError::Invalid(vec![Violation {
                agent: None,
                assumption: Some(3),
                message: msg,
            }]));
        }
        Ok(scenario)
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Number of simulation steps `round(T / h)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.output_box.dim()).collect()
    }

    pub fn total_output_dim(&self) -> usize {
        self.output_dims().iter().sum()
    }

    pub fn program_terms(&self) -> Vec<ProgramTerm> {
        self.agents
            .iter()
            .map(|a| ProgramTerm {
                cost: a.cost.clone(),
                constraint: a.constraint.clone(),
                output_box: a.output_box.clone(),
            })
            .collect()
    }

    pub fn sampled_program(&self) -> Result<SampledProgram, oracle::OracleError> {
        SampledProgram::on_grid(self.program_terms(), self.horizon, self.oracle.samples)
    }

    /// Cheap certificate that the sampled feasible set is nonempty: an
    /// obvious candidate, else a short primal-dual run.
    fn check_feasible(&self) -> Result<(), String> {
        let prog = self.sampled_program().map_err(|e| e.to_string())?;
        let bx = prog.product_box();
        let candidates = [
            bx.project(&DVector::zeros(prog.dim())).expect("dimension fixed"),
            (bx.lower() + bx.upper()) * 0.5,
            bx.lower().clone(),
        ];
        if candidates
            .iter()
            .any(|c| prog.max_violation(c) <= oracle::FEASIBILITY_TOL)
        {
            return Ok(());
        }
        oracle::solve_clairvoyant(&prog, 5_000, self.seed)
            .map(|_| ())
            .map_err(|e| format!("no feasible output found on the sampled horizon ({e})"))
    }

    /// Initial plant states: fixed ones as given, ranged ones drawn
    /// uniformly (in agent order, from one seeded stream) and rejected until
    /// the output lies in the box.
    pub fn initial_states(&self, seed: u64) -> Result<Vec<DVector<f64>>, ScenarioError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.agents
            .iter()
            .enumerate()
            .map(|(i, agent)| match &agent.init {
                InitialState::Fixed(x) => Ok(x.clone()),
                InitialState::Uniform { lo, hi } => {
                    let n = agent.plant.states();
                    for _ in 0..INIT_MAX_DRAWS {
                        let x = DVector::from_fn(n, |_, _| rng.random_range(*lo..=*hi));
                        if agent.output_box.contains(&(agent.plant.c() * &x), 0.0) {
                            return Ok(x);
                        }
                    }
                    Err(ScenarioError::Initialisation { agent: i })
                }
            })
            .collect()
    }
}

fn build_agent(
    i: usize,
    sec: &AgentSection,
    q: usize,
    horizon: f64,
) -> Result<Agent, Vec<Violation>> {
    let structural = |message: String| {
        vec![Violation {
            agent: Some(i),
            assumption: None,
            message,
        }]
    };
    let (a, b, c) = match (matrix(&sec.a, "A"), matrix(&sec.b, "B"), matrix(&sec.c, "C")) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => {
            let msg = [a.err(), b.err(), c.err()]
                .into_iter()
                .flatten()
                .collect::<Vec<_>>()
                .join("; ");
            return Err(structural(msg));
        }
    };
    let n = a.nrows();
    let p = c.nrows();
    let (x_init, init) = match (&sec.x0, sec.init_range) {
        (Some(x), None) => {
            let x = DVector::from_column_slice(x);
            (x.clone(), InitialState::Fixed(x))
        }
        (None, Some([lo, hi])) => {
            if !(lo < hi) {
                return Err(structural("init_range must satisfy lo < hi".into()));
            }
            (DVector::zeros(n), InitialState::Uniform { lo, hi })
        }
        _ => return Err(structural("exactly one of x0 and init_range is required".into())),
    };
    let plant = AgentPlant::new(a, b, c, x_init).map_err(|e| structural(e.to_string()))?;

    let mut out = Vec::new();
    let output_box = match BoxSet::new(
        DVector::from_column_slice(&sec.lower),
        DVector::from_column_slice(&sec.upper),
    ) {
        Ok(bx) if bx.dim() == p && bx.is_bounded() => Some(bx),
        Ok(bx) if bx.dim() != p => {
            out.push(Violation {
                agent: Some(i),
                assumption: None,
                message: format!("box has dimension {} but the plant has {p} outputs", bx.dim()),
            });
            None
        }
        Ok(_) => {
            out.push(Violation {
                agent: Some(i),
                assumption: Some(2),
                message: "output box is unbounded".into(),
            });
            None
        }
        Err(e) => {
            out.push(Violation {
                agent: Some(i),
                assumption: Some(2),
                message: e.to_string(),
            });
            None
        }
    };
    let cost = match QuadraticCost::new(
        sec.cost.weights.clone(),
        sec.cost.base.clone(),
        sec.cost.amplitude.clone(),
        sec.cost.frequency.clone(),
    ) {
        Ok(c) if c.weights.len() == p => Some(c),
        Ok(_) => {
            out.push(Violation {
                agent: Some(i),
                assumption: None,
                message: format!("cost dimension differs from the {p} outputs"),
            });
            None
        }
        Err(e) => {
            out.push(Violation {
                agent: Some(i),
                assumption: Some(2),
                message: format!("cost is not convex: {e}"),
            });
            None
        }
    };
    if sec.constraint.len() != q || q == 0 {
        out.push(Violation {
            agent: Some(i),
            assumption: None,
            message: format!(
                "constraint has {} rows; every agent needs the shared q = {q} >= 1",
                sec.constraint.len()
            ),
        });
    }
    let constraint = match AffineConstraint::new(p, sec.constraint.clone()) {
        Ok(c) => Some(c),
        Err(e) => {
            out.push(Violation {
                agent: Some(i),
                assumption: None,
                message: format!("constraint: {e}"),
            });
            None
        }
    };
    if let Err(e) = plant.check_rank_conditions() {
        out.push(Violation {
            agent: Some(i),
            assumption: Some(4),
            message: e.to_string(),
        });
    }
    if let (Some(bx), InitialState::Fixed(x)) = (&output_box, &init) {
        if !bx.contains(&(plant.c() * x), 0.0) {
            out.push(Violation {
                agent: Some(i),
                assumption: None,
                message: "initial output C x0 lies outside the output box".into(),
            });
        }
    }
    if !out.is_empty() {
        return Err(out);
    }
    let (output_box, cost, constraint) = (
        output_box.expect("checked"),
        cost.expect("checked"),
        constraint.expect("checked"),
    );
    let gains = plant.synthesize_gains().map_err(|e| {
        vec![Violation {
            agent: Some(i),
            assumption: Some(4),
            message: e.to_string(),
        }]
    })?;
    let bounds = compute_bounds(&cost, &constraint, &output_box, horizon).map_err(|e| {
        vec![Violation {
            agent: Some(i),
            assumption: Some(2),
            message: e.to_string(),
        }]
    })?;
    Ok(Agent {
        plant,
        gains,
        cost: Arc::new(cost),
        constraint: Arc::new(constraint),
        output_box,
        init,
        bounds,
    })
}
