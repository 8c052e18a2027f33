//! Boxes, the nonnegative orthant, Euclidean and directional projections.

use nalgebra::DVector;

use super::ConvexError;

/// Absolute tolerance for deciding that a point sits on a face.
pub const FACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxSet {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, ConvexError> {
        if lower.len() != upper.len() {
            return Err(ConvexError::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] <= upper[k])) {
            return Err(ConvexError::InvertedBox(k));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, ConvexError> {
        Self::new(
            DVector::from_element(dim, lo),
            DVector::from_element(dim, hi),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(self.upper.iter()).all(|v| v.is_finite())
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|k| x[k] >= self.lower[k] - tol && x[k] <= self.upper[k] + tol)
    }

    pub fn diameter(&self) -> f64 {
        (&self.upper - &self.lower).norm()
    }

    /// Euclidean distance from `x` to the box.
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        (0..self.dim())
            .map(|k| {
                let d = (self.lower[k] - x[k]).max(x[k] - self.upper[k]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Cartesian product, stacking coordinates in order.
    pub fn product<'a>(boxes: impl IntoIterator<Item = &'a BoxSet>) -> BoxSet {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for b in boxes {
            lo.extend(b.lower.iter());
            hi.extend(b.upper.iter());
        }
        BoxSet {
            lower: DVector::from_vec(lo),
            upper: DVector::from_vec(hi),
        }
    }

    /// Euclidean projection: componentwise clamp.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>, ConvexError> {
        self.check_dim(x)?;
        Ok(DVector::from_fn(self.dim(), |k, _| {
            x[k].clamp(self.lower[k], self.upper[k])
        }))
    }

    /// Directional projection of `v` at a point `x` of the box: outward
    /// components on active faces are zeroed, everything else passes.
    pub fn dir_project(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>, ConvexError> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        let mut out = v.clone();
        for k in 0..self.dim() {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if x[k] < lo - FACE_TOL || x[k] > hi + FACE_TOL {
                return Err(ConvexError::OutsideSet {
                    index: k,
                    value: x[k],
                });
            }
            let at_lower = (x[k] - lo).abs() <= FACE_TOL;
            let at_upper = (x[k] - hi).abs() <= FACE_TOL;
            if (at_lower && v[k] < 0.0) || (at_upper && v[k] > 0.0) {
                out[k] = 0.0;
            }
        }
        Ok(out)
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), ConvexError> {
        if x.len() != self.dim() {
            return Err(ConvexError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Directional projection onto the nonnegative orthant at `x >= 0`.
pub fn dir_project_orthant(
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>, ConvexError> {
    if x.len() != v.len() {
        return Err(ConvexError::Dimension {
            expected: x.len(),
            got: v.len(),
        });
    }
    let mut out = v.clone();
    for k in 0..x.len() {
        if x[k] < -FACE_TOL {
            return Err(ConvexError::OutsideSet {
                index: k,
                value: x[k],
            });
        }
        if x[k].abs() <= FACE_TOL && v[k] < 0.0 {
            out[k] = 0.0;
        }
    }
    Ok(out)
}

/// `[x]_+`, the Euclidean projection onto the orthant.
pub fn positive_part(x: &DVector<f64>) -> DVector<f64> {
    x.map(|e| e.max(0.0))
}

/// Sign selection from the subdifferential of the 1-norm, choosing 0 at 0.
pub fn sign_vec(z: &DVector<f64>) -> DVector<f64> {
    z.map(|e| {
        if e > 0.0 {
            1.0
        } else if e < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}
