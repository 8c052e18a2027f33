//! Distributed saddle-point control laws.
//!
//! Each agent descends its local Lagrangian in the output and ascends it in
//! the multiplier, with an l1 consensus penalty on neighbouring multipliers.
//! In event-triggered mode the penalty acts on last-broadcast copies and an
//! agent rebroadcasts when its measurement error crosses a threshold.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::convex::{dir_project_orthant, sign_vec, BoxSet, ConstraintFamily, ConvexError, CostFamily};
use crate::graph::CommGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Continuous,
    #[serde(alias = "event")]
    EventTriggered,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Continuous => "continuous",
            Mode::EventTriggered => "event_triggered",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "continuous" => Ok(Mode::Continuous),
            "event" | "event_triggered" | "event-triggered" => Ok(Mode::EventTriggered),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    /// Step size of both flows.
    pub epsilon: f64,
    /// Consensus penalty weight on multiplier disagreement.
    pub k_mu: f64,
    /// Trigger offset.
    pub sigma: f64,
    /// Trigger offset decay rate.
    pub iota: f64,
    pub mode: Mode,
}

/// The data an agent owns privately: its cost, its constraint and its
/// output box.
#[derive(Debug, Clone, Copy)]
pub struct LocalProblem<'a> {
    pub cost: &'a dyn CostFamily,
    pub constraint: &'a dyn ConstraintFamily,
    pub output_box: &'a BoxSet,
}

/// Multiplier `mu_i`, its last broadcast `mu_hat_i`, and the broadcast time.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierState {
    pub mu: DVector<f64>,
    pub mu_hat: DVector<f64>,
    pub last_trigger_time: Option<f64>,
}

impl MultiplierState {
    pub fn zero(q: usize) -> Self {
        Self {
            mu: DVector::zeros(q),
            mu_hat: DVector::zeros(q),
            last_trigger_time: None,
        }
    }

    /// Measurement error `mu_hat - mu`.
    pub fn error(&self) -> DVector<f64> {
        &self.mu_hat - &self.mu
    }

    /// Rebroadcast when `||mu_hat - mu|| >= threshold` (Euclidean norm).
    pub fn maybe_trigger(&mut self, threshold: f64, t: f64) -> bool {
        if self.error().norm() >= threshold {
            self.mu_hat.copy_from(&self.mu);
            self.last_trigger_time = Some(t);
            true
        } else {
            false
        }
    }
}

fn l1_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// `sum_j a_ij sgn(own - other_j)` over the listed neighbours.
fn sign_sum(own: &DVector<f64>, others: &[&DVector<f64>]) -> DVector<f64> {
    let mut acc = DVector::zeros(own.len());
    for other in others {
        acc += sign_vec(&(own - *other));
    }
    acc
}

/// Local Lagrangian `f + mu^T g - K_mu sum_j ||mu_i - mu_j||_1`. Diagnostic only.
pub fn lagrangian_value(
    local: &LocalProblem<'_>,
    t: f64,
    y: &DVector<f64>,
    mu: &DVector<f64>,
    neighbor_mus: &[&DVector<f64>],
    k_mu: f64,
) -> f64 {
    let f = local.cost.value(t, y);
    let g = local.constraint.value(t, y);
    let disagreement: f64 = neighbor_mus.iter().map(|m| l1_distance(mu, m)).sum();
    f + mu.dot(&g) - k_mu * disagreement
}

/// Output-flow direction: the negated scaled Lagrangian subgradient,
/// projected onto the tangent cone of the output box. Both modes share it.
pub fn primal_direction(
    local: &LocalProblem<'_>,
    t: f64,
    y: &DVector<f64>,
    mu: &DVector<f64>,
    epsilon: f64,
) -> Result<DVector<f64>, ConvexError> {
    let (_, grad_f) = local.cost.value_and_subgrad(t, y);
    let (_, jac_g) = local.constraint.value_and_jacobian(t, y);
    let subgrad = grad_f + jac_g.tr_mul(mu);
    local.output_box.dir_project(y, &(subgrad * -epsilon))
}

/// Multiplier-flow direction with live neighbour multipliers.
pub fn dual_direction_continuous(
    local: &LocalProblem<'_>,
    t: f64,
    y: &DVector<f64>,
    mu: &DVector<f64>,
    neighbor_mus: &[&DVector<f64>],
    params: &AlgorithmParams,
) -> Result<DVector<f64>, ConvexError> {
    let g = local.constraint.value(t, y);
    let drive = (g - sign_sum(mu, neighbor_mus) * params.k_mu) * params.epsilon;
    dir_project_orthant(mu, &drive)
}

/// Multiplier-flow direction with broadcast copies; the consensus gain is
/// doubled relative to the continuous law.
pub fn dual_direction_triggered(
    local: &LocalProblem<'_>,
    t: f64,
    y: &DVector<f64>,
    mu: &DVector<f64>,
    mu_hat: &DVector<f64>,
    neighbor_mu_hats: &[&DVector<f64>],
    params: &AlgorithmParams,
) -> Result<DVector<f64>, ConvexError> {
    let g = local.constraint.value(t, y);
    let drive = g * params.epsilon
        - sign_sum(mu_hat, neighbor_mu_hats) * (2.0 * params.epsilon * params.k_mu);
    dir_project_orthant(mu, &drive)
}

/// Right-hand side of the trigger inequality at time `t`.
pub fn trigger_threshold(
    t: f64,
    mu_hat: &DVector<f64>,
    neighbor_mu_hats: &[&DVector<f64>],
    params: &AlgorithmParams,
    n: usize,
    q: usize,
) -> f64 {
    let n = n as f64;
    let sq = (q as f64).sqrt();
    let spread: f64 = neighbor_mu_hats.iter().map(|m| l1_distance(mu_hat, m)).sum();
    spread / (6.0 * n * sq) + params.sigma * (-params.iota * t).exp() / (3.0 * n * n * params.k_mu * sq)
}

/// Network disagreement `h(mu) = sum_i sum_j a_ij ||mu_i - mu_j||_1`
/// (each edge counted twice).
pub fn disagreement(graph: &CommGraph, mus: &[DVector<f64>]) -> f64 {
    (0..graph.node_count())
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .map(|&j| l1_distance(&mus[i], &mus[j]))
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{AffineConstraint, QuadraticCost};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn params(epsilon: f64, k_mu: f64) -> AlgorithmParams {
        AlgorithmParams {
            epsilon,
            k_mu,
            sigma: 0.3,
            iota: 0.1,
            mode: Mode::Continuous,
        }
    }

    /// Scalar agent whose constraint is the constant `value`.
    struct Scalar {
        cost: QuadraticCost,
        constraint: AffineConstraint,
        bx: BoxSet,
    }

    impl Scalar {
        fn constant_constraint(value: f64) -> Self {
            Self {
                cost: QuadraticCost::zero(1),
                constraint: AffineConstraint::fixed(vec![(vec![0.0], -value)]).unwrap(),
                bx: BoxSet::uniform(1, -1.0, 5.0).unwrap(),
            }
        }

        fn local(&self) -> LocalProblem<'_> {
            LocalProblem {
                cost: &self.cost,
                constraint: &self.constraint,
                output_box: &self.bx,
            }
        }
    }

    #[test]
    fn lagrangian_examples() {
        let s = Scalar::constant_constraint(0.0);
        let l = s.local();
        let y = v(&[0.0]);
        assert_eq!(lagrangian_value(&l, 0.0, &y, &v(&[1.0]), &[&v(&[0.0])], 2.0), -2.0);
        assert_eq!(lagrangian_value(&l, 0.0, &y, &v(&[1.0]), &[&v(&[1.0])], 2.0), 0.0);

        let s = Scalar::constant_constraint(3.0);
        let l = s.local();
        assert_eq!(lagrangian_value(&l, 0.0, &y, &v(&[0.0]), &[&v(&[4.0])], 0.0), 0.0);
        assert_eq!(lagrangian_value(&l, 0.0, &y, &v(&[2.0]), &[&v(&[2.0])], 5.0), 6.0);
    }

    #[test]
    fn primal_direction_examples() {
        let cost = QuadraticCost::new(
            vec![1.0, 1.0],
            vec![1.0, 1.5],
            vec![1.0, 1.0],
            vec![1.0, 1.5],
        )
        .unwrap();
        let constraint = AffineConstraint::zero(2, 1);
        let bx = BoxSet::uniform(2, -1.0, 5.0).unwrap();
        let local = LocalProblem {
            cost: &cost,
            constraint: &constraint,
            output_box: &bx,
        };
        let mu = v(&[0.0]);
        assert_eq!(primal_direction(&local, 0.0, &v(&[0.0, 0.0]), &mu, 1.0).unwrap(), v(&[4.0, 5.0]));
        assert_eq!(
            primal_direction(&local, 0.0, &v(&[2.0, 2.5]), &mu, 1.0).unwrap(),
            v(&[0.0, 0.0])
        );
        // Lower face, drive pushing further down is blocked.
        let d = primal_direction(&local, 0.0, &v(&[-1.0, 2.5]), &v(&[0.0]), 1.0).unwrap();
        assert_eq!(d, v(&[6.0, 0.0]));
        let far_cost = QuadraticCost::fixed(vec![1.0, 1.0], vec![10.0, -10.0]).unwrap();
        let local = LocalProblem {
            cost: &far_cost,
            ..local
        };
        let d = primal_direction(&local, 0.0, &v(&[5.0, -1.0]), &mu, 1.0).unwrap();
        assert_eq!(d, v(&[0.0, 0.0]));
    }

    #[test]
    fn continuous_dual_examples() {
        let s = Scalar::constant_constraint(1.0);
        let l = s.local();
        let y = v(&[0.0]);
        let d = dual_direction_continuous(&l, 0.0, &y, &v(&[2.0]), &[&v(&[0.0])], &params(0.5, 3.0))
            .unwrap();
        assert_eq!(d, v(&[-1.0]));
        // Consensus: sign terms vanish.
        let d = dual_direction_continuous(&l, 0.0, &y, &v(&[2.0]), &[&v(&[2.0])], &params(0.5, 3.0))
            .unwrap();
        assert_eq!(d, v(&[0.5]));
        // Orthant blocks a negative drive at zero.
        let s = Scalar::constant_constraint(-1.0);
        let l = s.local();
        let d = dual_direction_continuous(&l, 0.0, &y, &v(&[0.0]), &[], &params(0.5, 3.0)).unwrap();
        assert_eq!(d, v(&[0.0]));
    }

    #[test]
    fn triggered_dual_examples() {
        let s = Scalar::constant_constraint(1.0);
        let l = s.local();
        let y = v(&[0.0]);
        let p = params(0.5, 3.0);
        let d = dual_direction_triggered(&l, 0.0, &y, &v(&[2.0]), &v(&[2.0]), &[&v(&[0.0])], &p).unwrap();
        assert_eq!(d, v(&[-2.5]));
        let d = dual_direction_triggered(&l, 0.0, &y, &v(&[2.0]), &v(&[1.0]), &[&v(&[1.0])], &p).unwrap();
        assert_eq!(d, v(&[0.5]));
        let s = Scalar::constant_constraint(-1.0);
        let l = s.local();
        let d = dual_direction_triggered(&l, 0.0, &y, &v(&[0.0]), &v(&[0.0]), &[], &p).unwrap();
        assert_eq!(d, v(&[0.0]));
    }

    #[test]
    fn modes_agree_at_consensus() {
        let s = Scalar::constant_constraint(0.7);
        let l = s.local();
        let y = v(&[1.0]);
        let mu = v(&[0.4]);
        let p = params(0.8, 4.0);
        let c = dual_direction_continuous(&l, 0.0, &y, &mu, &[&mu, &mu], &p).unwrap();
        let e = dual_direction_triggered(&l, 0.0, &y, &mu, &mu, &[&mu, &mu], &p).unwrap();
        assert_eq!(c, e);
    }

    #[test]
    fn threshold_examples() {
        let p = AlgorithmParams {
            epsilon: 1.0,
            k_mu: 10.0,
            sigma: 0.3,
            iota: 0.1,
            mode: Mode::EventTriggered,
        };
        let z = v(&[0.0]);
        let th = trigger_threshold(0.0, &z, &[&z, &z], &p, 5, 1);
        assert!((th - 0.0004).abs() < 1e-15);
        assert!(trigger_threshold(1e4, &z, &[&z], &p, 5, 1) < 1e-12);

        let p = AlgorithmParams { sigma: 0.0, ..p };
        let th = trigger_threshold(0.0, &v(&[12.0]), &[&v(&[0.0])], &p, 2, 1);
        assert!((th - 1.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_monotonicity() {
        let base = AlgorithmParams {
            epsilon: 1.0,
            k_mu: 10.0,
            sigma: 0.5,
            iota: 0.1,
            mode: Mode::EventTriggered,
        };
        let own = v(&[1.0, 0.5]);
        let near = v(&[0.8, 0.5]);
        let far = v(&[0.0, 2.0]);
        let th = |p: &AlgorithmParams, t: f64, other: &DVector<f64>, n: usize| {
            trigger_threshold(t, &own, &[other], p, n, 2)
        };
        let t0 = th(&base, 1.0, &near, 5);
        assert!(th(&AlgorithmParams { sigma: 1.0, ..base }, 1.0, &near, 5) >= t0);
        assert!(th(&base, 1.0, &far, 5) >= t0);
        assert!(th(&base, 2.0, &near, 5) <= t0);
        assert!(th(&base, 1.0, &near, 6) <= t0);
        assert!(th(&AlgorithmParams { k_mu: 20.0, ..base }, 1.0, &near, 5) <= t0);
    }

    #[test]
    fn trigger_rule() {
        let mut s = MultiplierState::zero(2);
        assert!(!s.maybe_trigger(0.1, 0.5));
        s.mu = v(&[0.3, 0.4]);
        // ||e|| == 0.5 exactly: closed inequality fires.
        assert!(s.maybe_trigger(0.5, 1.0));
        assert_eq!(s.mu_hat, s.mu);
        assert_eq!(s.error().norm(), 0.0);
        assert_eq!(s.last_trigger_time, Some(1.0));
        assert!(!s.maybe_trigger(1e-9, 1.1));
    }

    #[test]
    fn network_disagreement_counts_edges_twice() {
        let g = CommGraph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(disagreement(&g, &[v(&[1.0, 0.0]), v(&[0.0, 2.0])]), 6.0);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("event".parse::<Mode>().unwrap(), Mode::EventTriggered);
        assert_eq!("continuous".parse::<Mode>().unwrap(), Mode::Continuous);
        assert!("both".parse::<Mode>().is_err());
    }
}
