//! Time-varying cost and constraint families.
//!
//! Everything downstream only sees the [`CostFamily`] and
//! [`ConstraintFamily`] contracts: a value with a subgradient (or Jacobian),
//! plus a closed-form bound over a box. The shipped families are a separable
//! quadratic tracking cost with cosine targets and an affine constraint with
//! sinusoidal coefficients.

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BoxSet, ConvexError};

/// Smallest positive bound handed out when a family is identically zero.
pub const BOUND_FLOOR: f64 = f64::MIN_POSITIVE;

pub trait CostFamily: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// `f(t, y)` and one element of `∂f(t, y)`.
    fn value_and_subgrad(&self, t: f64, y: &DVector<f64>) -> (f64, DVector<f64>);

    fn value(&self, t: f64, y: &DVector<f64>) -> f64 {
        self.value_and_subgrad(t, y).0
    }

    /// Upper bound on `|f(t, y)|` over `s x [0, horizon]`.
    fn bound(&self, s: &BoxSet, horizon: f64) -> Result<f64, ConvexError>;

    /// Closed form of `sum_m weights[m] * f(times[m], y)` when the family has
    /// one; the clairvoyant solver falls back to summation otherwise.
    fn aggregate(&self, _times: &[f64], _weights: &[f64]) -> Option<SeparableQuadratic> {
        None
    }
}

pub trait ConstraintFamily: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn rows(&self) -> usize;

    /// `g(t, y)` and its Jacobian (one subgradient per row).
    fn value_and_jacobian(&self, t: f64, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>);

    fn value(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        self.value_and_jacobian(t, y).0
    }

    /// Upper bound on `||g(t, y)||` over `s x [0, horizon]`.
    fn bound(&self, s: &BoxSet, horizon: f64) -> Result<f64, ConvexError>;

    /// True when every row is affine in `y`, so the Jacobian does not depend
    /// on `y` and callers may cache it per sample time.
    fn is_affine(&self) -> bool {
        false
    }
}

/// `sum_k scale_k (y_k - center_k)^2 + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic {
    pub scale: DVector<f64>,
    pub center: DVector<f64>,
    pub constant: f64,
}

impl SeparableQuadratic {
    pub fn value(&self, y: &DVector<f64>) -> f64 {
        self.constant
            + (0..y.len())
                .map(|k| self.scale[k] * (y[k] - self.center[k]).powi(2))
                .sum::<f64>()
    }

    pub fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(y.len(), |k, _| {
            2.0 * self.scale[k] * (y[k] - self.center[k])
        })
    }
}

/// `f(t, y) = sum_k w_k (y_k - amp_k cos(freq_k t) - base_k)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCost {
    pub weights: Vec<f64>,
    pub base: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub frequency: Vec<f64>,
}

impl QuadraticCost {
    pub fn new(
        weights: Vec<f64>,
        base: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
    ) -> Result<Self, ConvexError> {
        let d = weights.len();
        for len in [base.len(), amplitude.len(), frequency.len()] {
            if len != d {
                return Err(ConvexError::Dimension {
                    expected: d,
                    got: len,
                });
            }
        }
        if let Some(k) = weights.iter().position(|&w| !(w >= 0.0)) {
            return Err(ConvexError::NegativeWeight(k));
        }
        Ok(Self {
            weights,
            base,
            amplitude,
            frequency,
        })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
            base: vec![0.0; d],
            amplitude: vec![0.0; d],
            frequency: vec![0.0; d],
        }
    }

    /// Static `f(y) = sum_k w_k (y_k - c_k)^2`.
    pub fn fixed(weights: Vec<f64>, center: Vec<f64>) -> Result<Self, ConvexError> {
        let d = weights.len();
        Self::new(weights, center, vec![0.0; d], vec![0.0; d])
    }

    pub fn target(&self, k: usize, t: f64) -> f64 {
        self.amplitude[k] * (self.frequency[k] * t).cos() + self.base[k]
    }

    fn target_range(&self, k: usize) -> (f64, f64) {
        if self.frequency[k] == 0.0 {
            let c = self.base[k] + self.amplitude[k];
            (c, c)
        } else {
            let a = self.amplitude[k].abs();
            (self.base[k] - a, self.base[k] + a)
        }
    }
}

impl CostFamily for QuadraticCost {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value_and_subgrad(&self, t: f64, y: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut value = 0.0;
        let grad = DVector::from_fn(self.dim(), |k, _| {
            let dev = y[k] - self.target(k, t);
            value += self.weights[k] * dev * dev;
            2.0 * self.weights[k] * dev
        });
        (value, grad)
    }

    fn bound(&self, s: &BoxSet, _horizon: f64) -> Result<f64, ConvexError> {
        if !s.is_bounded() {
            return Err(ConvexError::Unbounded);
        }
        if s.dim() != self.dim() {
            return Err(ConvexError::Dimension {
                expected: self.dim(),
                got: s.dim(),
            });
        }
        let total: f64 = (0..self.dim())
            .map(|k| {
                let (tlo, thi) = self.target_range(k);
                let dev = (s.upper()[k] - tlo).abs().max((s.lower()[k] - thi).abs());
                self.weights[k] * dev * dev
            })
            .sum();
        Ok(total.max(BOUND_FLOOR))
    }

    fn aggregate(&self, times: &[f64], weights: &[f64]) -> Option<SeparableQuadratic> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let d = self.dim();
        let mut center = DVector::zeros(d);
        let mut constant = 0.0;
        for k in 0..d {
            let mean = times
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * self.target(k, t))
                .sum::<f64>()
                / total;
            let spread = times
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * (self.target(k, t) - mean).powi(2))
                .sum::<f64>();
            center[k] = mean;
            constant += self.weights[k] * spread;
        }
        let scale = DVector::from_fn(d, |k, _| self.weights[k] * total);
        Some(SeparableQuadratic {
            scale,
            center,
            constant,
        })
    }
}

/// One row: `sum_k (amp_k sin(freq_k t) + base_k) y_k - offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineRow {
    pub coef_base: Vec<f64>,
    pub coef_amplitude: Vec<f64>,
    pub coef_frequency: Vec<f64>,
    pub offset: f64,
}

impl AffineRow {
    pub fn coefficient(&self, k: usize, t: f64) -> f64 {
        self.coef_amplitude[k] * (self.coef_frequency[k] * t).sin() + self.coef_base[k]
    }

    fn max_coefficient(&self, k: usize) -> f64 {
        if self.coef_frequency[k] == 0.0 {
            self.coef_base[k].abs()
        } else {
            self.coef_base[k].abs() + self.coef_amplitude[k].abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    rows: Vec<AffineRow>,
    dim: usize,
}

impl AffineConstraint {
    pub fn new(dim: usize, rows: Vec<AffineRow>) -> Result<Self, ConvexError> {
        for r in &rows {
            for len in [
                r.coef_base.len(),
                r.coef_amplitude.len(),
                r.coef_frequency.len(),
            ] {
                if len != dim {
                    return Err(ConvexError::Dimension {
                        expected: dim,
                        got: len,
                    });
                }
            }
        }
        Ok(Self { rows, dim })
    }

    /// `q` rows that are identically zero.
    pub fn zero(dim: usize, q: usize) -> Self {
        let row = AffineRow {
            coef_base: vec![0.0; dim],
            coef_amplitude: vec![0.0; dim],
            coef_frequency: vec![0.0; dim],
            offset: 0.0,
        };
        Self {
            rows: vec![row; q],
            dim,
        }
    }

    /// Static rows `coef . y - offset`.
    pub fn fixed(rows: Vec<(Vec<f64>, f64)>) -> Result<Self, ConvexError> {
        let dim = rows.first().map_or(0, |r| r.0.len());
        Self::new(
            dim,
            rows.into_iter()
                .map(|(c, offset)| AffineRow {
                    coef_amplitude: vec![0.0; c.len()],
                    coef_frequency: vec![0.0; c.len()],
                    coef_base: c,
                    offset,
                })
                .collect(),
        )
    }

    pub fn affine_rows(&self) -> &[AffineRow] {
        &self.rows
    }
}

impl ConstraintFamily for AffineConstraint {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn value_and_jacobian(&self, t: f64, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let jac = DMatrix::from_fn(self.rows.len(), self.dim, |j, k| {
            self.rows[j].coefficient(k, t)
        });
        let mut value = &jac * y;
        for (j, r) in self.rows.iter().enumerate() {
            value[j] -= r.offset;
        }
        (value, jac)
    }

    fn bound(&self, s: &BoxSet, _horizon: f64) -> Result<f64, ConvexError> {
        if !s.is_bounded() {
            return Err(ConvexError::Unbounded);
        }
        if s.dim() != self.dim {
            return Err(ConvexError::Dimension {
                expected: self.dim,
                got: s.dim(),
            });
        }
        let worst_row = self
            .rows
            .iter()
            .map(|r| {
                (0..self.dim)
                    .map(|k| {
                        r.max_coefficient(k) * s.lower()[k].abs().max(s.upper()[k].abs())
                    })
                    .sum::<f64>()
                    + r.offset.abs()
            })
            .fold(0.0, f64::max);
        Ok(((self.rows.len() as f64).sqrt() * worst_row).max(BOUND_FLOOR))
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// Bound pair `(K_f, K_g)` for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionBounds {
    pub k_f: f64,
    pub k_g: f64,
}

pub fn compute_bounds(
    cost: &dyn CostFamily,
    constraint: &dyn ConstraintFamily,
    s: &BoxSet,
    horizon: f64,
) -> Result<FunctionBounds, ConvexError> {
    Ok(FunctionBounds {
        k_f: cost.bound(s, horizon)?,
        k_g: constraint.bound(s, horizon)?,
    })
}
