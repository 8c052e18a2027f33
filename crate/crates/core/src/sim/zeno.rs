//! Inter-event statistics for triggered runs.

use serde::Serialize;

use super::engine::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoStats {
    pub count: usize,
    /// `None` with fewer than two triggers.
    pub min_gap: Option<f64>,
    pub mean_gap: Option<f64>,
    /// Agent fired on every step, so the grid cannot tell it from continuous.
    pub saturated: bool,
}

pub fn zeno_report(traj: &Trajectory) -> Vec<ZenoStats> {
    let steps = traj.steps();
    traj.trigger_steps
        .iter()
        .map(|ks| {
            let gaps: Vec<f64> = ks
                .windows(2)
                .map(|w| (w[1] - w[0]) as f64 * traj.step)
                .collect();
            ZenoStats {
                count: ks.len(),
                min_gap: gaps.iter().copied().reduce(f64::min),
                mean_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
                saturated: steps > 0 && ks.len() >= steps,
            }
        })
        .collect()
}
