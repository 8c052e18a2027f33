#![allow(dead_code)]

use std::path::PathBuf;

use saddleflow::scenario::ScenarioFile;
use saddleflow::Scenario;

pub fn shipped_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/five_agents.toml")
}

pub fn shipped_file() -> ScenarioFile {
    ScenarioFile::parse(&std::fs::read_to_string(shipped_path()).unwrap()).unwrap()
}

pub fn shipped() -> Scenario {
    Scenario::from_file(shipped_file()).unwrap()
}

/// Shipped scenario with `edit` applied to the parsed file.
pub fn shipped_with(edit: impl FnOnce(&mut ScenarioFile)) -> Scenario {
    let mut f = shipped_file();
    edit(&mut f);
    Scenario::from_file(f).unwrap()
}

/// Scalar integrator `A = 0, B = 1, C = 1` with static cost
/// `w (y - target)^2` and one static row `coef y - offset`.
pub fn scalar_agent(x0: f64, w: f64, target: f64, coef: f64, offset: f64, lo: f64, hi: f64) -> String {
    format!(
        r#"
[[agents]]
a = [[0.0]]
b = [[1.0]]
c = [[1.0]]
x0 = [{x0:?}]
lower = [{lo:?}]
upper = [{hi:?}]
cost = {{ weights = [{w:?}], base = [{target:?}], amplitude = [0.0], frequency = [0.0] }}
constraint = [{{ coef_base = [{coef:?}], coef_amplitude = [0.0], coef_frequency = [0.0], offset = {offset:?} }}]
"#
    )
}

/// Header for an `n`-node path graph with the given run parameters.
pub fn header(n: usize, horizon: f64, step: f64, mode: &str) -> String {
    let edges: Vec<String> = (1..n).map(|i| format!("[{}, {}]", i - 1, i)).collect();
    format!(
        r#"
name = "test"

[graph]
nodes = {n}
edges = [{}]

[params]
epsilon = 1.0
k_mu = "auto"
sigma = 0.5
iota = 0.1
horizon = {horizon:?}
step = {step:?}
mode = "{mode}"
seed = 7

[oracle]
samples = 11
iters = 20000
resolution = 0.01
"#,
        edges.join(", ")
    )
}

pub fn scenario_from(text: &str) -> Scenario {
    Scenario::from_file(ScenarioFile::parse(text).unwrap()).unwrap()
}
