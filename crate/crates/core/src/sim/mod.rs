//! Closed-loop simulation and trajectory metrics.

mod engine;
mod metrics;
mod zeno;

pub use engine::{run, SimError, Trajectory};
pub use metrics::{
    compute_metrics, cumulative_trapezoid, output_flow_residual, positive_norm, BoundOverlays,
    MetricsError, MetricsReport, OutputFlowResidual,
};
pub use zeno::{zeno_report, ZenoStats};
