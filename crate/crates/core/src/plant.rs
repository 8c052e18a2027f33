//! Linear agent dynamics `x' = A x + B u`, `y = C x`, and the output-tracking
//! feedback gains that turn the plant into an output integrator.

use nalgebra::{DMatrix, DVector, SVD};
use thiserror::Error;

/// Singular values below `RANK_TOL * sigma_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Elementwise residual allowed in the gain equations.
pub const GAIN_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("rank(C B) = {rank} but the output dimension is {outputs}")]
    OutputRankDeficient { rank: usize, outputs: usize },
    #[error("(A, B) is not controllable: controllability rank {rank} < {states}")]
    Uncontrollable { rank: usize, states: usize },
    #[error("gain residual {0:e} exceeds tolerance")]
    GainResidual(f64),
    #[error("non-finite state entry")]
    NonFinite,
}

/// One agent's state-space model together with its current state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPlant {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    x: DVector<f64>,
}

/// Solution pair of `C B K_alpha = C A` and `C B K_beta = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPair {
    pub k_alpha: DMatrix<f64>,
    pub k_beta: DMatrix<f64>,
}

impl AgentPlant {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        x: DVector<f64>,
    ) -> Result<Self, PlantError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(PlantError::Dimension(format!(
                "A is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(PlantError::Dimension(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(PlantError::Dimension(format!(
                "C has {} columns, expected {n}",
                c.ncols()
            )));
        }
        if x.len() != n {
            return Err(PlantError::Dimension(format!(
                "x has length {}, expected {n}",
                x.len()
            )));
        }
        if n == 0 || b.ncols() == 0 || c.nrows() == 0 {
            return Err(PlantError::Dimension("empty plant".into()));
        }
        Ok(Self { a, b, c, x })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn set_state(&mut self, x: DVector<f64>) {
        assert_eq!(x.len(), self.states());
        self.x = x;
    }

    pub fn output(&self) -> DVector<f64> {
        &self.c * &self.x
    }

    /// Kalman matrix `[B, AB, ..., A^{n-1}B]`.
    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let n = self.states();
        let m = self.inputs();
        let mut out = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for k in 0..n {
            out.view_mut((0, k * m), (n, m)).copy_from(&block);
            block = &self.a * block;
        }
        out
    }

    /// Controllability plus full output rank of `C B`.
    pub fn satisfies_rank_conditions(&self) -> bool {
        self.check_rank_conditions().is_ok()
    }

    pub fn check_rank_conditions(&self) -> Result<(), PlantError> {
        let cb = &self.c * &self.b;
        let rank = numerical_rank(&cb);
        if rank != self.outputs() {
            return Err(PlantError::OutputRankDeficient {
                rank,
                outputs: self.outputs(),
            });
        }
        let rank = numerical_rank(&self.controllability_matrix());
        if rank != self.states() {
            return Err(PlantError::Uncontrollable {
                rank,
                states: self.states(),
            });
        }
        Ok(())
    }

    /// Minimum-Frobenius-norm gains `K_alpha = (CB)^+ C A`, `K_beta = (CB)^+`.
    pub fn synthesize_gains(&self) -> Result<GainPair, PlantError> {
        let cb = &self.c * &self.b;
        let rank = numerical_rank(&cb);
        if rank < self.outputs() {
            return Err(PlantError::OutputRankDeficient {
                rank,
                outputs: self.outputs(),
            });
        }
        let k_beta = pseudo_inverse(&cb);
        let k_alpha = &k_beta * (&self.c * &self.a);
        let gains = GainPair { k_alpha, k_beta };
        let residual = self.gain_residual(&gains);
        if residual > GAIN_RESIDUAL_TOL {
            return Err(PlantError::GainResidual(residual));
        }
        Ok(gains)
    }

    /// Larger of the two elementwise residuals of the gain equations.
    pub fn gain_residual(&self, gains: &GainPair) -> f64 {
        let cb = &self.c * &self.b;
        let r_alpha = &cb * &gains.k_alpha - &self.c * &self.a;
        let r_beta = &cb * &gains.k_beta - DMatrix::identity(self.outputs(), self.outputs());
        r_alpha.amax().max(r_beta.amax())
    }

    /// `A - B K_alpha`, the closed-loop drift.
    pub fn closed_loop_drift(&self, gains: &GainPair) -> DMatrix<f64> {
        &self.a - &self.b * &gains.k_alpha
    }

    /// One forward-Euler step of `x' = (A - B K_alpha) x + B K_beta v`.
    pub fn step_state(
        &mut self,
        gains: &GainPair,
        v: &DVector<f64>,
        h: f64,
    ) -> Result<(), PlantError> {
        if v.len() != self.outputs() {
            return Err(PlantError::Dimension(format!(
                "output direction has length {}, expected {}",
                v.len(),
                self.outputs()
            )));
        }
        let drift = self.closed_loop_drift(gains) * &self.x;
        let drive = &self.b * (&gains.k_beta * v);
        let next = &self.x + (drift + drive) * h;
        if next.iter().any(|e| !e.is_finite()) {
            return Err(PlantError::NonFinite);
        }
        self.x = next;
        Ok(())
    }
}

/// Rank from singular values above `RANK_TOL` times the largest one.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Moore-Penrose pseudoinverse via SVD with the relative rank cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    svd.pseudo_inverse(RANK_TOL * smax)
        .expect("both singular vector sets were computed")
}
