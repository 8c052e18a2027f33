//! Convex sets, projections and the time-varying function families.

mod families;
mod sets;

pub use families::{
    compute_bounds, AffineConstraint, AffineRow, ConstraintFamily, CostFamily, FunctionBounds,
    QuadraticCost, SeparableQuadratic, BOUND_FLOOR,
};
pub use sets::{dir_project_orthant, positive_part, sign_vec, BoxSet, FACE_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("lower bound exceeds upper bound in coordinate {0}")]
    InvertedBox(usize),
    #[error("point outside the set: coordinate {index} = {value}")]
    OutsideSet { index: usize, value: f64 },
    #[error("box is unbounded")]
    Unbounded,
    #[error("cost weight {0} is negative")]
    NegativeWeight(usize),
}
