//! Regret, fit and bound overlays over a recorded trajectory.

use nalgebra::DVector;
use thiserror::Error;

use super::engine::Trajectory;
use super::zeno::{zeno_report, ZenoStats};
use crate::controller::Mode;
use crate::scenario::Scenario;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("comparator has dimension {got}, trajectory outputs have {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("trajectory ends at t = {traj}, scenario horizon is {horizon}")]
    GridMismatch { traj: f64, horizon: f64 },
    #[error("trajectory has {agents} agents, scenario has {expected}")]
    AgentMismatch { agents: usize, expected: usize },
}

/// Analytic regret and fit bounds for both modes, evaluated on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundOverlays {
    /// `||y(0) - y*||^2 / (2 eps)`.
    pub regret_continuous: f64,
    /// Continuous regret bound plus `sigma / iota`.
    pub regret_triggered: f64,
    /// `sqrt(N) ||y(0) - y*|| / eps + 2N sqrt(K_f / eps) sqrt(T)` per grid point.
    pub fit_continuous: Vec<f64>,
    /// Continuous fit bound plus `sqrt(2 N sigma / (eps iota))`.
    pub fit_triggered: Vec<f64>,
}

impl BoundOverlays {
    pub fn regret(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Continuous => self.regret_continuous,
            Mode::EventTriggered => self.regret_triggered,
        }
    }

    pub fn fit(&self, mode: Mode) -> &[f64] {
        match mode {
            Mode::Continuous => &self.fit_continuous,
            Mode::EventTriggered => &self.fit_triggered,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mode: Mode,
    pub times: Vec<f64>,
    pub regret_curve: Vec<f64>,
    pub fit_curve: Vec<f64>,
    /// Running `F_j^T` before the positive part, one row per grid point.
    pub fit_components: Vec<Vec<f64>>,
    pub trigger_counts: Vec<usize>,
    pub min_inter_event_gap: Vec<Option<f64>>,
    pub zeno: Vec<ZenoStats>,
    pub initial_distance: f64,
    pub bounds: BoundOverlays,
}

impl MetricsReport {
    pub fn final_regret(&self) -> f64 {
        *self.regret_curve.last().unwrap_or(&0.0)
    }

    pub fn final_fit(&self) -> f64 {
        *self.fit_curve.last().unwrap_or(&0.0)
    }

    /// `F^T / T` at grid index `k`; zero at `T = 0`.
    pub fn fit_rate(&self, k: usize) -> f64 {
        if self.times[k] > 0.0 {
            self.fit_curve[k] / self.times[k]
        } else {
            0.0
        }
    }

    /// Grid index closest to time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let h = self.times.get(1).map_or(1.0, |t1| t1 - self.times[0]);
        ((t / h).round() as usize).min(self.times.len() - 1)
    }
}

/// Running trapezoid integrals of a scalar sequence on `times`.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for k in 0..values.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// `||[v]_+||`.
pub fn positive_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Integrate regret against `y_star` (stacked agent outputs) and fit from the
/// recorded aggregate constraint.
pub fn compute_metrics(
    traj: &Trajectory,
    y_star: &DVector<f64>,
    scenario: &Scenario,
) -> Result<MetricsReport, MetricsError> {
    let p: usize = traj.output_dims.iter().sum();
    if y_star.len() != p {
        return Err(MetricsError::Dimension {
            expected: p,
            got: y_star.len(),
        });
    }
    if traj.agent_count() != scenario.agent_count() {
        return Err(MetricsError::AgentMismatch {
            agents: traj.agent_count(),
            expected: scenario.agent_count(),
        });
    }
    let end = *traj.times.last().unwrap_or(&0.0);
    if (end - scenario.horizon).abs() > 0.5 * scenario.step {
        return Err(MetricsError::GridMismatch {
            traj: end,
            horizon: scenario.horizon,
        });
    }

    let mut star_parts = Vec::with_capacity(scenario.agent_count());
    let mut offset = 0;
    for &d in &traj.output_dims {
        star_parts.push(y_star.rows(offset, d).into_owned());
        offset += d;
    }
    let gap: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.cost)
        .map(|(&t, &f)| {
            let f_star: f64 = scenario
                .agents
                .iter()
                .zip(&star_parts)
                .map(|(a, ys)| a.cost.value(t, ys))
                .sum();
            f - f_star
        })
        .collect();
    let regret_curve = cumulative_trapezoid(&traj.times, &gap);

    let q = traj.q;
    let columns: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let col: Vec<f64> = traj.aggregate_constraint.iter().map(|g| g[j]).collect();
            cumulative_trapezoid(&traj.times, &col)
        })
        .collect();
    let fit_components: Vec<Vec<f64>> = (0..traj.times.len())
        .map(|k| columns.iter().map(|c| c[k]).collect())
        .collect();
    let fit_curve = fit_components.iter().map(|f| positive_norm(f)).collect();

    let y0 = DVector::from_row_slice(&traj.outputs[0]);
    let initial_distance = (&y0 - y_star).norm();
    let n = scenario.agent_count() as f64;
    let params = &scenario.params;
    let eps = params.epsilon;
    let regret_continuous = initial_distance.powi(2) / (2.0 * eps);
    let fit_continuous: Vec<f64> = traj
        .times
        .iter()
        .map(|t| n.sqrt() * initial_distance / eps + 2.0 * n * (scenario.k_f / eps).sqrt() * t.sqrt())
        .collect();
    let fit_extra = (2.0 * n * params.sigma / (eps * params.iota)).sqrt();
    let bounds = BoundOverlays {
        regret_continuous,
        regret_triggered: regret_continuous + params.sigma / params.iota,
        fit_triggered: fit_continuous.iter().map(|b| b + fit_extra).collect(),
        fit_continuous,
    };

    let zeno = zeno_report(traj);
    Ok(MetricsReport {
        mode: traj.mode,
        times: traj.times.clone(),
        regret_curve,
        fit_curve,
        fit_components,
        trigger_counts: zeno.iter().map(|z| z.count).collect(),
        min_inter_event_gap: zeno.iter().map(|z| z.min_gap).collect(),
        zeno,
        initial_distance,
        bounds,
    })
}

/// Finite-difference check of the output flow on raw plant outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFlowResidual {
    /// `max_k ||(y_{k+1} - y_k)/h - v_k||`.
    pub max_residual: f64,
    /// `max_k ||v_{k+1} - v_k|| / h`, floored at one.
    pub lipschitz: f64,
    /// Largest distance of a raw output from its box.
    pub max_overshoot: f64,
}

pub fn output_flow_residual(traj: &Trajectory, scenario: &Scenario) -> OutputFlowResidual {
    let h = traj.step;
    let mut max_residual: f64 = 0.0;
    for k in 0..traj.primal_directions.len() {
        let r: f64 = traj.raw_outputs[k + 1]
            .iter()
            .zip(&traj.raw_outputs[k])
            .zip(&traj.primal_directions[k])
            .map(|((a, b), v)| ((a - b) / h - v).powi(2))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r);
    }
    let mut lipschitz: f64 = 1.0;
    for w in traj.primal_directions.windows(2) {
        let d: f64 = w[1]
            .iter()
            .zip(&w[0])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        lipschitz = lipschitz.max(d / h);
    }
    let mut max_overshoot: f64 = 0.0;
    for row in &traj.raw_outputs {
        let mut offset = 0;
        for agent in &scenario.agents {
            let d = agent.output_box.dim();
            let y = DVector::from_row_slice(&row[offset..offset + d]);
            max_overshoot = max_overshoot.max(agent.output_box.distance(&y));
            offset += d;
        }
    }
    OutputFlowResidual {
        max_residual,
        lipschitz,
        max_overshoot,
    }
}
