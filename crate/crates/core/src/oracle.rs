//! Clairvoyant benchmark: the best fixed output in hindsight.
//!
//! The "for all t" constraint is enforced on a finite set of sample times and
//! the time integral of the cost is replaced by trapezoid quadrature on the
//! same samples. [`solve_clairvoyant`] runs a projected primal-dual
//! subgradient method with diminishing steps over a working set of sampled
//! constraints, growing the set with the most violated samples until every
//! sample is satisfied. [`grid_oracle`] is an independent brute-force lattice
//! search used to cross-check it on small instances.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::convex::{BoxSet, ConstraintFamily, CostFamily, SeparableQuadratic};

/// Sampled constraints must hold to this absolute tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Largest total output dimension the lattice search accepts.
pub const GRID_MAX_DIM: usize = 4;

const MAX_ROUNDS: usize = 40;
const ADD_PER_ROUND: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("need at least two strictly increasing sample times starting at 0")]
    BadSamples,
    #[error("agent {0}: dimension mismatch between cost, constraint and box")]
    Dimension(usize),
    #[error("agents disagree on the number of constraint rows")]
    RowMismatch,
    #[error("no iterate satisfies the sampled constraints (max violation {0:e})")]
    Infeasible(f64),
    #[error("lattice search limited to dimension {GRID_MAX_DIM}, got {0}")]
    DimensionGuard(usize),
}

/// One agent's contribution to the program.
#[derive(Debug, Clone)]
pub struct ProgramTerm {
    pub cost: Arc<dyn CostFamily>,
    pub constraint: Arc<dyn ConstraintFamily>,
    pub output_box: BoxSet,
}

/// A sampled constraint row, cached when the family is affine.
#[derive(Debug, Clone)]
struct LinearRow {
    coef: Vec<f64>,
    offset: f64,
}

#[derive(Debug, Clone)]
pub struct SampledProgram {
    terms: Vec<ProgramTerm>,
    times: Vec<f64>,
    weights: Vec<f64>,
    offsets: Vec<usize>,
    dim: usize,
    q: usize,
    product_box: BoxSet,
    quadratic: Option<SeparableQuadratic>,
    linear_rows: Option<Vec<LinearRow>>,
}

/// Trapezoid weights on a strictly increasing grid.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let m = times.len();
    let mut w = vec![0.0; m];
    for k in 1..m {
        let half = 0.5 * (times[k] - times[k - 1]);
        w[k - 1] += half;
        w[k] += half;
    }
    w
}

impl SampledProgram {
    pub fn new(terms: Vec<ProgramTerm>, times: Vec<f64>) -> Result<Self, OracleError> {
        if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OracleError::BadSamples);
        }
        let q = terms.first().map_or(0, |t| t.constraint.rows());
        let mut offsets = Vec::with_capacity(terms.len());
        let mut dim = 0;
        for (i, term) in terms.iter().enumerate() {
            let d = term.output_box.dim();
            if term.cost.dim() != d || term.constraint.dim() != d {
                return Err(OracleError::Dimension(i));
            }
            if term.constraint.rows() != q {
                return Err(OracleError::RowMismatch);
            }
            offsets.push(dim);
            dim += d;
        }
        let weights = trapezoid_weights(&times);
        let product_box = BoxSet::product(terms.iter().map(|t| &t.output_box));

        let quadratic = terms
            .iter()
            .map(|t| t.cost.aggregate(&times, &weights))
            .collect::<Option<Vec<_>>>()
            .map(|parts| {
                let mut scale = Vec::with_capacity(dim);
                let mut center = Vec::with_capacity(dim);
                let mut constant = 0.0;
                for p in parts {
                    scale.extend(p.scale.iter());
                    center.extend(p.center.iter());
                    constant += p.constant;
                }
                SeparableQuadratic {
                    scale: DVector::from_vec(scale),
                    center: DVector::from_vec(center),
                    constant,
                }
            });

        let mut prog = Self {
            terms,
            times,
            weights,
            offsets,
            dim,
            q,
            product_box,
            quadratic,
            linear_rows: None,
        };
        if prog.terms.iter().all(|t| t.constraint.is_affine()) {
            prog.linear_rows = Some(prog.build_linear_rows());
        }
        Ok(prog)
    }

    /// Sample on `0, h, 2h, ..., horizon` (the simulation grid).
    pub fn on_grid(terms: Vec<ProgramTerm>, horizon: f64, samples: usize) -> Result<Self, OracleError> {
        if samples < 2 {
            return Err(OracleError::BadSamples);
        }
        let h = horizon / (samples - 1) as f64;
        let times = (0..samples).map(|k| k as f64 * h).collect();
        Self::new(terms, times)
    }

    fn build_linear_rows(&self) -> Vec<LinearRow> {
        let zero: Vec<DVector<f64>> = self
            .terms
            .iter()
            .map(|t| DVector::zeros(t.output_box.dim()))
            .collect();
        let mut rows = Vec::with_capacity(self.times.len() * self.q);
        for &t in &self.times {
            let mut coef = vec![vec![0.0; self.dim]; self.q];
            let mut offset = vec![0.0; self.q];
            for (i, term) in self.terms.iter().enumerate() {
                let (g0, jac) = term.constraint.value_and_jacobian(t, &zero[i]);
                for j in 0..self.q {
                    offset[j] += g0[j];
                    for k in 0..jac.ncols() {
                        coef[j][self.offsets[i] + k] = jac[(j, k)];
                    }
                }
            }
            for (c, o) in coef.into_iter().zip(offset) {
                rows.push(LinearRow { coef: c, offset: o });
            }
        }
        rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows_per_sample(&self) -> usize {
        self.q
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.times
    }

    pub fn product_box(&self) -> &BoxSet {
        &self.product_box
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn slice(&self, y: &DVector<f64>, i: usize) -> DVector<f64> {
        let d = self.terms[i].output_box.dim();
        y.rows(self.offsets[i], d).into_owned()
    }

    /// Trapezoid approximation of `int_0^T f(t, y) dt`.
    pub fn objective(&self, y: &DVector<f64>) -> f64 {
        if let Some(q) = &self.quadratic {
            return q.value(y);
        }
        let parts: Vec<DVector<f64>> = (0..self.terms.len()).map(|i| self.slice(y, i)).collect();
        self.times
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| {
                w * self
                    .terms
                    .iter()
                    .zip(&parts)
                    .map(|(term, yi)| term.cost.value(t, yi))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn objective_gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        if let Some(q) = &self.quadratic {
            return q.gradient(y);
        }
        let mut grad = DVector::zeros(self.dim);
        let parts: Vec<DVector<f64>> = (0..self.terms.len()).map(|i| self.slice(y, i)).collect();
        for (&t, &w) in self.times.iter().zip(&self.weights) {
            for (i, term) in self.terms.iter().enumerate() {
                let (_, g) = term.cost.value_and_subgrad(t, &parts[i]);
                let mut seg = grad.rows_mut(self.offsets[i], g.len());
                seg += g * w;
            }
        }
        grad
    }

    /// Number of sampled constraint rows, `M q`.
    pub fn constraint_count(&self) -> usize {
        self.times.len() * self.q
    }

    /// Aggregated row `c = m q + j` and its subgradient at `y`.
    fn row_value_and_grad(&self, c: usize, y: &DVector<f64>) -> (f64, DVector<f64>) {
        if let Some(rows) = &self.linear_rows {
            let r = &rows[c];
            let v = r.coef.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>() + r.offset;
            return (v, DVector::from_column_slice(&r.coef));
        }
        let (m, j) = (c / self.q, c % self.q);
        let t = self.times[m];
        let mut value = 0.0;
        let mut grad = DVector::zeros(self.dim);
        for (i, term) in self.terms.iter().enumerate() {
            let (g, jac) = term.constraint.value_and_jacobian(t, &self.slice(y, i));
            value += g[j];
            for k in 0..jac.ncols() {
                grad[self.offsets[i] + k] = jac[(j, k)];
            }
        }
        (value, grad)
    }

    /// Every aggregated row `sum_i g_{i,j}(t_m, y_i)`, sample-major.
    pub fn constraint_values(&self, y: &DVector<f64>) -> Vec<f64> {
        if let Some(rows) = &self.linear_rows {
            return rows
                .iter()
                .map(|r| r.coef.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>() + r.offset)
                .collect();
        }
        let parts: Vec<DVector<f64>> = (0..self.terms.len()).map(|i| self.slice(y, i)).collect();
        let mut out = Vec::with_capacity(self.constraint_count());
        for &t in &self.times {
            let mut acc = DVector::zeros(self.q);
            for (term, yi) in self.terms.iter().zip(&parts) {
                acc += term.constraint.value(t, yi);
            }
            out.extend(acc.iter());
        }
        out
    }

    pub fn max_violation(&self, y: &DVector<f64>) -> f64 {
        self.constraint_values(y)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_feasible(&self, y: &DVector<f64>, tol: f64) -> bool {
        self.product_box.contains(y, 0.0) && self.max_violation(y) <= tol
    }

    /// Objective error a lattice of spacing `resolution` can introduce:
    /// a gradient-norm bound over the box times the cell diagonal.
    pub fn resolution_gap(&self, resolution: f64) -> f64 {
        let bx = &self.product_box;
        let lip = match &self.quadratic {
            Some(q) => (0..self.dim)
                .map(|k| {
                    let dev = (bx.upper()[k] - q.center[k])
                        .abs()
                        .max((bx.lower()[k] - q.center[k]).abs());
                    (2.0 * q.scale[k] * dev).powi(2)
                })
                .sum::<f64>()
                .sqrt(),
            None => corners(bx)
                .iter()
                .map(|c| self.objective_gradient(c).norm())
                .fold(0.0, f64::max),
        };
        lip * resolution * (self.dim as f64).sqrt()
    }
}

fn corners(bx: &BoxSet) -> Vec<DVector<f64>> {
    let d = bx.dim();
    (0..1usize << d.min(12))
        .map(|mask| {
            DVector::from_fn(d, |k, _| {
                if mask >> k & 1 == 1 {
                    bx.upper()[k]
                } else {
                    bx.lower()[k]
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ClairvoyantSolution {
    pub y_star: DVector<f64>,
    /// Multipliers for every sampled row, sample-major (`M q` entries), in
    /// the units of the quadrature-weighted objective.
    pub dual_certificate: DVector<f64>,
    pub objective: f64,
    pub max_violation: f64,
    pub rounds: usize,
}

/// Projected primal-dual subgradient on the sampled program.
///
/// Steps are `c / sqrt(k)` with `c = diameter / sqrt(iters)`, applied to the
/// objective normalised by the total quadrature weight. The seed picks the
/// starting point.
pub fn solve_clairvoyant(
    prog: &SampledProgram,
    iters: usize,
    seed: u64,
) -> Result<ClairvoyantSolution, OracleError> {
    let bx = prog.product_box();
    let scale = 1.0 / prog.total_weight();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = DVector::from_fn(prog.dim(), |k, _| {
        let (lo, hi) = (bx.lower()[k], bx.upper()[k]);
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    });
    let iters = iters.max(1);
    let c = bx.diameter().max(1e-12) / gain_scale(prog, scale);

    let mut working: Vec<usize> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let slater = find_slater_point(prog);

    let mut best: Option<(DVector<f64>, f64, f64)> = None;
    let consider = |cand: DVector<f64>, best: &mut Option<(DVector<f64>, f64, f64)>| {
        let viol = prog.max_violation(&cand).max(0.0);
        let obj = prog.objective(&cand);
        let better = match best {
            None => true,
            Some((_, bo, bv)) => {
                let feas = viol <= FEASIBILITY_TOL;
                let bfeas = *bv <= FEASIBILITY_TOL;
                match (feas, bfeas) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => obj < *bo,
                    (false, false) => viol < *bv,
                }
            }
        };
        if better {
            *best = Some((cand, obj, viol));
        }
    };

    let mut rounds = 0;
    for round in 0..MAX_ROUNDS {
        rounds = round + 1;
        let mut avg = DVector::zeros(prog.dim());
        let mut avg_weight = 0.0;
        for k in 1..=iters {
            let step = c / (k as f64).sqrt();
            let mut grad = prog.objective_gradient(&y) * scale;
            let mut row_vals = Vec::with_capacity(working.len());
            for (&row, &l) in working.iter().zip(&lambda) {
                let (v, g) = prog.row_value_and_grad(row, &y);
                if l > 0.0 {
                    grad += g * l;
                }
                row_vals.push(v);
            }
            y = bx.project(&(&y - grad * step)).expect("dimension fixed");
            for (l, v) in lambda.iter_mut().zip(row_vals) {
                *l = (*l + step * v).max(0.0);
            }
            if 2 * k > iters {
                avg += &y * step;
                avg_weight += step;
            }
        }
        let avg = avg / avg_weight.max(f64::MIN_POSITIVE);
        for cand in [y.clone(), avg] {
            consider(cand.clone(), &mut best);
            if let Some(s) = &slater {
                consider(restore_feasibility(prog, s, &cand), &mut best);
            }
        }

        let values = prog.constraint_values(&y);
        let mut violated: Vec<(usize, f64)> = values
            .iter()
            .copied()
            .enumerate()
            .filter(|&(idx, v)| v > FEASIBILITY_TOL && !working.contains(&idx))
            .collect();
        if violated.is_empty() {
            break;
        }
        violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(idx, _) in violated.iter().take(ADD_PER_ROUND) {
            working.push(idx);
            lambda.push(0.0);
        }
    }

    let (y_star, objective, viol) = best.expect("at least one candidate evaluated");
    if viol > FEASIBILITY_TOL {
        return Err(OracleError::Infeasible(viol));
    }
    let mut dual = DVector::zeros(prog.constraint_count());
    for (&row, &l) in working.iter().zip(&lambda) {
        dual[row] = l / scale;
    }
    Ok(ClairvoyantSolution {
        y_star,
        dual_certificate: dual,
        objective,
        max_violation: viol,
        rounds,
    })
}

/// Largest normalised objective gradient over the box corners, floored at
/// one. Steps scale inversely so early moves stay within the box diameter.
fn gain_scale(prog: &SampledProgram, scale: f64) -> f64 {
    corners(prog.product_box())
        .iter()
        .map(|c| prog.objective_gradient(c).norm() * scale)
        .fold(1.0, f64::max)
}

/// A point of the box whose sampled rows are all strictly negative, if one
/// of the obvious candidates qualifies.
fn find_slater_point(prog: &SampledProgram) -> Option<DVector<f64>> {
    let bx = prog.product_box();
    let centre = (bx.lower() + bx.upper()) * 0.5;
    let origin = bx
        .project(&DVector::zeros(prog.dim()))
        .expect("dimension fixed");
    let mut candidates = vec![origin, bx.lower().clone(), centre];
    if prog.dim() <= 8 {
        candidates.extend(corners(bx));
    }
    candidates
        .into_iter()
        .map(|c| {
            let v = prog.max_violation(&c);
            (c, v)
        })
        .filter(|(_, v)| *v < 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| c)
}

/// Pull `cand` toward the strictly feasible `slater` until every sampled
/// row is satisfied. The feasible part of the segment is an interval
/// containing `slater`, so bisection on the mixing weight finds its end.
fn restore_feasibility(
    prog: &SampledProgram,
    slater: &DVector<f64>,
    cand: &DVector<f64>,
) -> DVector<f64> {
    if prog.max_violation(cand) <= 0.0 {
        return cand.clone();
    }
    let mix = |theta: f64| slater + (cand - slater) * theta;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if prog.max_violation(&mix(mid)) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mix(lo)
}

/// Exhaustive search over the lattice `lower + k * resolution` inside the
/// box, keeping the feasible point of least objective (first found on ties).
pub fn grid_oracle(prog: &SampledProgram, resolution: f64) -> Result<DVector<f64>, OracleError> {
    let d = prog.dim();
    if d > GRID_MAX_DIM {
        return Err(OracleError::DimensionGuard(d));
    }
    let bx = prog.product_box();
    let counts: Vec<usize> = (0..d)
        .map(|k| ((bx.upper()[k] - bx.lower()[k]) / resolution + 1e-9).floor() as usize + 1)
        .collect();
    let mut idx = vec![0usize; d];
    let mut point = DVector::zeros(d);
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut max_seen = f64::INFINITY;
    loop {
        for k in 0..d {
            point[k] = bx.lower()[k] + idx[k] as f64 * resolution;
        }
        let viol = prog.max_violation(&point);
        max_seen = max_seen.min(viol);
        if viol <= FEASIBILITY_TOL {
            let obj = prog.objective(&point);
            if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                best = Some((point.clone(), obj));
            }
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == d {
                return best.map(|(p, _)| p).ok_or(OracleError::Infeasible(max_seen));
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{AffineConstraint, QuadraticCost};

    fn term(center: f64, coef: f64, offset: f64, lo: f64, hi: f64) -> ProgramTerm {
        ProgramTerm {
            cost: Arc::new(QuadraticCost::fixed(vec![1.0], vec![center]).unwrap()),
            constraint: Arc::new(AffineConstraint::fixed(vec![(vec![coef], offset)]).unwrap()),
            output_box: BoxSet::uniform(1, lo, hi).unwrap(),
        }
    }

    fn static_program(terms: Vec<ProgramTerm>) -> SampledProgram {
        SampledProgram::new(terms, vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn trapezoid_weights_sum_to_horizon() {
        let w = trapezoid_weights(&[0.0, 0.5, 1.5, 3.0]);
        assert_eq!(w, vec![0.25, 0.75, 1.25, 0.75]);
    }

    #[test]
    fn bad_samples_rejected() {
        let t = vec![term(1.0, 1.0, 2.0, 0.0, 4.0)];
        assert!(matches!(SampledProgram::new(t.clone(), vec![0.0]), Err(OracleError::BadSamples)));
        assert!(matches!(
            SampledProgram::new(t.clone(), vec![0.0, 1.0, 1.0]),
            Err(OracleError::BadSamples)
        ));
        assert!(matches!(SampledProgram::new(t, vec![0.5, 1.0]), Err(OracleError::BadSamples)));
    }

    #[test]
    fn active_constraint_clamps_minimum() {
        let prog = static_program(vec![term(3.0, 1.0, 2.0, 0.0, 4.0)]);
        let sol = solve_clairvoyant(&prog, 20_000, 1).unwrap();
        assert!((sol.y_star[0] - 2.0).abs() < 1e-3, "{}", sol.y_star[0]);
        assert!(sol.max_violation <= FEASIBILITY_TOL);
        // Multiplier of y <= 2 for (y-3)^2 is 2.
        let total: f64 = sol.dual_certificate.iter().sum();
        assert!((total - 2.0).abs() < 0.1, "{total}");
    }

    #[test]
    fn inactive_constraint() {
        let prog = static_program(vec![term(1.0, 1.0, 2.0, 0.0, 4.0)]);
        let sol = solve_clairvoyant(&prog, 20_000, 1).unwrap();
        assert!((sol.y_star[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coupled_pair_matches_grid() {
        let prog = static_program(vec![term(3.0, 1.0, 1.0, 0.0, 4.0), term(3.0, 1.0, 1.0, 0.0, 4.0)]);
        let grid = grid_oracle(&prog, 1e-2).unwrap();
        assert!((grid[0] - 1.0).abs() <= 1e-2 && (grid[1] - 1.0).abs() <= 1e-2);
        let sol = solve_clairvoyant(&prog, 50_000, 3).unwrap();
        assert!((&sol.y_star - DVector::from_element(2, 1.0)).amax() < 1e-2);
        let gap = prog.resolution_gap(1e-2);
        assert!((sol.objective - prog.objective(&grid)).abs() <= 10.0 * gap);
    }

    #[test]
    fn deterministic_given_seed() {
        let prog = static_program(vec![term(3.0, 1.0, 1.0, 0.0, 4.0), term(2.0, 2.0, 1.0, 0.0, 4.0)]);
        let a = solve_clairvoyant(&prog, 5_000, 9).unwrap();
        let b = solve_clairvoyant(&prog, 5_000, 9).unwrap();
        assert_eq!(a.y_star, b.y_star);
    }

    #[test]
    fn grid_reports_empty_lattice() {
        // y >= 3 on [0, 1]: nothing feasible.
        let prog = static_program(vec![term(0.0, -1.0, -3.0, 0.0, 1.0)]);
        assert!(matches!(grid_oracle(&prog, 0.1), Err(OracleError::Infeasible(_))));
        assert!(matches!(solve_clairvoyant(&prog, 1_000, 0), Err(OracleError::Infeasible(_))));
    }

    #[test]
    fn coarse_lattice_is_lower_corner() {
        let prog = static_program(vec![term(0.5, 1.0, 5.0, 0.0, 1.0), term(0.5, 1.0, 5.0, 2.0, 3.0)]);
        let grid = grid_oracle(&prog, 10.0).unwrap();
        assert_eq!(grid.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn dimension_guard() {
        let terms = (0..5).map(|_| term(0.0, 1.0, 1.0, 0.0, 1.0)).collect();
        let prog = static_program(terms);
        assert_eq!(grid_oracle(&prog, 0.5), Err(OracleError::DimensionGuard(5)));
    }

    #[test]
    fn time_varying_pair_agrees_with_grid() {
        use crate::convex::AffineRow;
        let mk = |base: f64, amp: f64, freq: f64, cb: f64, ca: f64, cf: f64, r: f64| ProgramTerm {
            cost: Arc::new(QuadraticCost::new(vec![1.0], vec![base], vec![amp], vec![freq]).unwrap()),
            constraint: Arc::new(
                AffineConstraint::new(
                    1,
                    vec![AffineRow {
                        coef_base: vec![cb],
                        coef_amplitude: vec![ca],
                        coef_frequency: vec![cf],
                        offset: r,
                    }],
                )
                .unwrap(),
            ),
            output_box: BoxSet::uniform(1, -1.0, 5.0).unwrap(),
        };
        let terms = vec![mk(2.0, 1.0, 1.0, 1.5, 0.5, 3.0, 1.0), mk(2.5, 1.0, 2.0, 1.2, 0.3, 5.0, 2.0)];
        let prog = SampledProgram::on_grid(terms, 3.0, 61).unwrap();
        let grid = grid_oracle(&prog, 1e-2).unwrap();
        let sol = solve_clairvoyant(&prog, 50_000, 0).unwrap();
        let gap = prog.resolution_gap(1e-2);
        assert!(
            (sol.objective - prog.objective(&grid)).abs() <= 10.0 * gap,
            "{} vs {}",
            sol.objective,
            prog.objective(&grid)
        );
        assert!(prog.is_feasible(&sol.y_star, FEASIBILITY_TOL));
    }
}
