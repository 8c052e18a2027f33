//! Distributed online constrained optimisation over linear multi-agent plants.
//!
//! Agents steer their outputs with a projected saddle-point flow on a
//! time-varying Lagrangian and reach dual consensus over a communication
//! graph, either continuously or through event-triggered broadcasts.

pub mod controller;
pub mod convex;
pub mod experiment;
pub mod graph;
pub mod oracle;
pub mod plant;
pub mod plot;
pub mod scenario;
pub mod sim;

pub use controller::{AlgorithmParams, Mode};
pub use convex::{BoxSet, ConstraintFamily, CostFamily, FunctionBounds};
pub use experiment::{run_experiment, ModeSelection, RunOptions};
pub use graph::CommGraph;
pub use oracle::{solve_clairvoyant, ClairvoyantSolution, SampledProgram};
pub use plant::{AgentPlant, GainPair};
pub use scenario::{load_scenario, Scenario, ScenarioError};
pub use sim::{compute_metrics, run, MetricsReport, Trajectory};
