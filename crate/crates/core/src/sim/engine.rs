//! Synchronous fixed-step integration of every agent's closed loop.

use nalgebra::DVector;
use thiserror::Error;

use crate::controller::{
    self, disagreement, dual_direction_continuous, dual_direction_triggered, primal_direction,
    trigger_threshold, LocalProblem, Mode, MultiplierState,
};
use crate::convex::{positive_part, ConvexError};
use crate::plant::PlantError;
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("agent {agent} at t = {t}: {source}")]
    Plant {
        agent: usize,
        t: f64,
        source: PlantError,
    },
    #[error("agent {agent} at t = {t}: {source}")]
    Projection {
        agent: usize,
        t: f64,
        source: ConvexError,
    },
    #[error("agent {agent} at t = {t}: non-finite direction")]
    NonFinite { agent: usize, t: f64 },
    #[error("agent {agent} at t = {t}: state norm {norm:e} exceeds ceiling {ceiling:e}")]
    BlowUp {
        agent: usize,
        t: f64,
        norm: f64,
        ceiling: f64,
    },
}

/// Time-indexed record of one run. Per-step rows are flat vectors: outputs
/// stack agent outputs in agent order, multipliers stack `mu_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mode: Mode,
    pub step: f64,
    pub output_dims: Vec<usize>,
    pub q: usize,
    pub times: Vec<f64>,
    /// Box-clamped outputs, used for every metric.
    pub outputs: Vec<Vec<f64>>,
    /// Plant outputs `C x` before clamping.
    pub raw_outputs: Vec<Vec<f64>>,
    /// Output direction applied over `[t_k, t_{k+1})`; one fewer row than `times`.
    pub primal_directions: Vec<Vec<f64>>,
    pub multipliers: Vec<Vec<f64>>,
    /// `sum_i g_i(t, y_i)` per step.
    pub aggregate_constraint: Vec<Vec<f64>>,
    /// `f(t, y(t))` per step.
    pub cost: Vec<f64>,
    /// `h(mu)` per step.
    pub disagreement: Vec<f64>,
    /// Step indices at which each agent rebroadcast.
    pub trigger_steps: Vec<Vec<usize>>,
}

impl Trajectory {
    pub fn agent_count(&self) -> usize {
        self.output_dims.len()
    }

    /// Number of integration steps (grid points minus one).
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn trigger_times(&self, agent: usize) -> Vec<f64> {
        self.trigger_steps[agent]
            .iter()
            .map(|&k| self.times[k])
            .collect()
    }

    /// Broadcasts over the run. Continuous communication is one broadcast per
    /// agent per step.
    pub fn broadcasts(&self) -> usize {
        match self.mode {
            Mode::Continuous => self.steps() * self.agent_count(),
            Mode::EventTriggered => self.trigger_steps.iter().map(Vec::len).sum(),
        }
    }

    pub fn final_output(&self) -> &[f64] {
        self.outputs.last().expect("trajectory has at least one point")
    }
}

fn stack(parts: &[DVector<f64>]) -> Vec<f64> {
    parts.iter().flat_map(|v| v.iter().copied()).collect()
}

/// Integrate the scenario under `mode`, drawing ranged initial states from
/// `seed`. Multipliers start at zero.
pub fn run(scenario: &Scenario, mode: Mode, seed: u64) -> Result<Trajectory, SimError> {
    let n = scenario.agent_count();
    let q = scenario.q;
    let h = scenario.step;
    let steps = scenario.steps();
    let params = controller::AlgorithmParams {
        mode,
        ..scenario.params
    };

    let mut plants: Vec<_> = scenario.agents.iter().map(|a| a.plant.clone()).collect();
    for (plant, x0) in plants.iter_mut().zip(scenario.initial_states(seed)?) {
        plant.set_state(x0);
    }
    let mut mstate: Vec<MultiplierState> = (0..n).map(|_| MultiplierState::zero(q)).collect();
    let locals: Vec<LocalProblem<'_>> = scenario
        .agents
        .iter()
        .map(|a| LocalProblem {
            cost: a.cost.as_ref(),
            constraint: a.constraint.as_ref(),
            output_box: &a.output_box,
        })
        .collect();

    let mut traj = Trajectory {
        mode,
        step: h,
        output_dims: scenario.output_dims(),
        q,
        times: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        raw_outputs: Vec::with_capacity(steps + 1),
        primal_directions: Vec::with_capacity(steps),
        multipliers: Vec::with_capacity(steps + 1),
        aggregate_constraint: Vec::with_capacity(steps + 1),
        cost: Vec::with_capacity(steps + 1),
        disagreement: Vec::with_capacity(steps + 1),
        trigger_steps: vec![Vec::new(); n],
    };

    for k in 0..=steps {
        let t = k as f64 * h;
        let raw: Vec<DVector<f64>> = plants.iter().map(|p| p.output()).collect();
        let ys: Vec<DVector<f64>> = raw
            .iter()
            .zip(&scenario.agents)
            .map(|(y, a)| a.output_box.project(y).expect("dimension fixed at load"))
            .collect();
        let mus: Vec<DVector<f64>> = mstate.iter().map(|s| s.mu.clone()).collect();

        let mut agg = DVector::zeros(q);
        let mut cost = 0.0;
        for (local, y) in locals.iter().zip(&ys) {
            agg += local.constraint.value(t, y);
            cost += local.cost.value(t, y);
        }
        traj.times.push(t);
        traj.outputs.push(stack(&ys));
        traj.raw_outputs.push(stack(&raw));
        traj.multipliers.push(stack(&mus));
        traj.aggregate_constraint.push(agg.iter().copied().collect());
        traj.cost.push(cost);
        traj.disagreement.push(disagreement(&scenario.graph, &mus));
        if k == steps {
            break;
        }

        // Directions from one snapshot of every agent's values.
        let hats: Vec<DVector<f64>> = mstate.iter().map(|s| s.mu_hat.clone()).collect();
        let mut primal = Vec::with_capacity(n);
        let mut dual = Vec::with_capacity(n);
        for i in 0..n {
            let proj_err = |source| SimError::Projection { agent: i, t, source };
            let v = primal_direction(&locals[i], t, &ys[i], &mus[i], params.epsilon)
                .map_err(proj_err)?;
            let d = match mode {
                Mode::Continuous => {
                    let nb: Vec<&DVector<f64>> =
                        scenario.graph.neighbors(i).iter().map(|&j| &mus[j]).collect();
                    dual_direction_continuous(&locals[i], t, &ys[i], &mus[i], &nb, &params)
                }
                Mode::EventTriggered => {
                    let nb: Vec<&DVector<f64>> =
                        scenario.graph.neighbors(i).iter().map(|&j| &hats[j]).collect();
                    dual_direction_triggered(&locals[i], t, &ys[i], &mus[i], &hats[i], &nb, &params)
                }
            }
            .map_err(proj_err)?;
            if v.iter().chain(d.iter()).any(|e| !e.is_finite()) {
                return Err(SimError::NonFinite { agent: i, t });
            }
            primal.push(v);
            dual.push(d);
        }
        traj.primal_directions.push(stack(&primal));

        let t_next = (k + 1) as f64 * h;
        for i in 0..n {
            plants[i]
                .step_state(&scenario.agents[i].gains, &primal[i], h)
                .map_err(|source| SimError::Plant {
                    agent: i,
                    t: t_next,
                    source,
                })?;
            let norm = plants[i].state().norm();
            if norm > scenario.state_ceiling {
                return Err(SimError::BlowUp {
                    agent: i,
                    t: t_next,
                    norm,
                    ceiling: scenario.state_ceiling,
                });
            }
            mstate[i].mu = positive_part(&(&mstate[i].mu + &dual[i] * h));
        }

        if mode == Mode::EventTriggered {
            // Thresholds read the pre-reset broadcast values of all agents.
            let thresholds: Vec<f64> = (0..n)
                .map(|i| {
                    let nb: Vec<&DVector<f64>> =
                        scenario.graph.neighbors(i).iter().map(|&j| &hats[j]).collect();
                    trigger_threshold(t_next, &hats[i], &nb, &params, n, q)
                })
                .collect();
            for (i, th) in thresholds.into_iter().enumerate() {
                if mstate[i].maybe_trigger(th, t_next) {
                    traj.trigger_steps[i].push(k + 1);
                }
            }
        }
    }
    Ok(traj)
}
