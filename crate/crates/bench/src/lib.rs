//! Fixtures shared by the benchmarks under `benches/`.

use std::path::PathBuf;

use saddleflow::scenario::ScenarioFile;
use saddleflow::Scenario;

pub fn shipped_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/five_agents.toml")
}

/// The shipped five-agent scenario cut to `horizon` seconds, with the oracle
/// sampled on `samples` points.
pub fn shipped(horizon: f64, samples: usize) -> Scenario {
    let text = std::fs::read_to_string(shipped_path()).expect("shipped scenario present");
    let mut file = ScenarioFile::parse(&text).expect("shipped scenario parses");
    file.params.horizon = horizon;
    file.oracle.samples = saddleflow::scenario::SampleSetting::Count(samples);
    Scenario::from_file(file).expect("shipped scenario validates")
}
