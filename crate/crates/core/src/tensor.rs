//! Symmetric second-order tensors in dimension 2 or 3 and isotropic
//! fourth-order operators acting on them.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of independent components of a symmetric `dim × dim` tensor.
pub const fn sym_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Symmetric tensor storing only the upper triangle, row-major.
///
/// For `dim = 2` the layout is `(xx, xy, yy)`, for `dim = 3` it is
/// `(xx, xy, xz, yy, yz, zz)`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    dim: usize,
    c: [f64; 6],
}

impl SymTensor {
    pub fn zero(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3, got {dim}");
        Self { dim, c: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zero(dim);
        for i in 0..dim {
            t.set(i, i, 1.0);
        }
        t
    }

    /// Builds a tensor from its upper-triangle components.
    pub fn from_components(dim: usize, comps: &[f64]) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Dimension(format!("unsupported dimension {dim}")));
        }
        if comps.len() != sym_len(dim) {
            return Err(Error::Dimension(format!(
                "expected {} components for dim {dim}, got {}",
                sym_len(dim),
                comps.len()
            )));
        }
        let mut t = Self::zero(dim);
        t.c[..comps.len()].copy_from_slice(comps);
        Ok(t)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut t = Self::zero(values.len());
        for (i, v) in values.iter().enumerate() {
            t.set(i, i, *v);
        }
        t
    }

    /// Symmetric part of a full `dim × dim` matrix given row by row.
    pub fn sym_part(dim: usize, m: &[[f64; 3]; 3]) -> Self {
        let mut t = Self::zero(dim);
        for i in 0..dim {
            for j in i..dim {
                t.set(i, j, 0.5 * (m[i][j] + m[j][i]));
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn components(&self) -> &[f64] {
        &self.c[..sym_len(self.dim)]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.c[index(self.dim, i, j)] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Deviatoric part `A - tr(A)/d I`.
    pub fn dev(&self) -> Self {
        let m = self.trace() / self.dim as f64;
        let mut t = *self;
        for i in 0..self.dim {
            let v = t.get(i, i) - m;
            t.set(i, i, v);
        }
        t
    }

    /// Full double contraction, off-diagonal entries counted twice.
    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "tensor dimension mismatch");
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let w = if i == j { 1.0 } else { 2.0 };
                s += w * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }

    /// Contracts with a vector: `A n`.
    pub fn apply_to(&self, n: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.get(i, j) * n[j]).sum();
        }
        out
    }
}

#[inline]
fn index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    debug_assert!(j < dim);
    // rows above i hold dim + (dim - 1) + ... + (dim - i + 1) entries
    i * dim - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Checked Frobenius product.
pub fn frobenius(a: &SymTensor, b: &SymTensor) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::Dimension(format!(
            "frobenius of dim {} and dim {} tensors",
            a.dim, b.dim
        )));
    }
    Ok(a.dot(b))
}

impl fmt::Debug for SymTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymTensor{}{:?}", self.dim, self.components())
    }
}

impl Add for SymTensor {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for SymTensor {
    fn add_assign(&mut self, rhs: Self) {
        assert_eq!(self.dim, rhs.dim, "tensor dimension mismatch");
        for k in 0..sym_len(self.dim) {
            self.c[k] += rhs.c[k];
        }
    }
}

impl Sub for SymTensor {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl SubAssign for SymTensor {
    fn sub_assign(&mut self, rhs: Self) {
        assert_eq!(self.dim, rhs.dim, "tensor dimension mismatch");
        for k in 0..sym_len(self.dim) {
            self.c[k] -= rhs.c[k];
        }
    }
}

impl Mul<SymTensor> for f64 {
    type Output = SymTensor;
    fn mul(self, mut rhs: SymTensor) -> SymTensor {
        for k in 0..sym_len(rhs.dim) {
            rhs.c[k] *= self;
        }
        rhs
    }
}

impl Neg for SymTensor {
    type Output = Self;
    fn neg(self) -> Self {
        -1.0 * self
    }
}

/// Isotropic operator `E ↦ 2 μ E + λ tr(E) I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicRank4 {
    pub mu: f64,
    pub lambda: f64,
}

impl IsotropicRank4 {
    pub fn new(mu: f64, lambda: f64) -> Self {
        Self { mu, lambda }
    }

    #[inline]
    pub fn apply(&self, e: &SymTensor) -> SymTensor {
        let mut out = 2.0 * self.mu * *e;
        let lt = self.lambda * e.trace();
        for i in 0..e.dim() {
            let v = out.get(i, i) + lt;
            out.set(i, i, v);
        }
        out
    }

    /// `apply` with the dimension checked against the configured one.
    pub fn apply_in(&self, dim: usize, e: &SymTensor) -> Result<SymTensor> {
        if e.dim() != dim {
            return Err(Error::Dimension(format!(
                "operator configured for dim {dim}, tensor has dim {}",
                e.dim()
            )));
        }
        Ok(self.apply(e))
    }

    /// Smallest eigenvalue on symmetric tensors: `min(2μ, dλ + 2μ)`.
    pub fn coercivity(&self, dim: usize) -> f64 {
        (2.0 * self.mu).min(dim as f64 * self.lambda + 2.0 * self.mu)
    }

    pub fn is_positive_definite(&self, dim: usize) -> bool {
        self.mu.is_finite() && self.lambda.is_finite() && self.coercivity(dim) > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offdiag(dim: usize, v: f64) -> SymTensor {
        let mut t = SymTensor::zero(dim);
        t.set(0, 1, v);
        t
    }

    #[test]
    fn layout_is_row_major_upper_triangle() {
        let t3 = SymTensor::from_components(3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(t3.get(0, 0), 1.0);
        assert_eq!(t3.get(1, 0), 2.0);
        assert_eq!(t3.get(2, 0), 3.0);
        assert_eq!(t3.get(1, 1), 4.0);
        assert_eq!(t3.get(2, 1), 5.0);
        assert_eq!(t3.get(2, 2), 6.0);
        let t2 = SymTensor::from_components(2, &[1., 2., 3.]).unwrap();
        assert_eq!(t2.get(1, 0), 2.0);
        assert_eq!(t2.get(1, 1), 3.0);
        assert!(SymTensor::from_components(2, &[1., 2.]).is_err());
    }

    #[test]
    fn apply_examples() {
        let op = IsotropicRank4::new(1.0, 1.0);
        assert_eq!(op.apply(&SymTensor::identity(3)), 5.0 * SymTensor::identity(3));

        let shear = IsotropicRank4::new(1.0, 0.0);
        let e = SymTensor::from_components(3, &[0.3, -1.0, 2.0, 0.5, 0.25, -4.0]).unwrap();
        assert_eq!(shear.apply(&e), 2.0 * e);

        let op = IsotropicRank4::new(2.0, 1.0);
        assert_eq!(
            op.apply(&SymTensor::diag(&[1.0, -1.0])),
            SymTensor::diag(&[4.0, -4.0])
        );
        assert!(op.apply_in(3, &SymTensor::zero(2)).is_err());
    }

    #[test]
    fn frobenius_examples() {
        let i3 = SymTensor::identity(3);
        assert_eq!(frobenius(&i3, &i3).unwrap(), 3.0);
        assert_eq!(frobenius(&i3, &SymTensor::zero(3)).unwrap(), 0.0);
        let o = offdiag(2, 1.0);
        assert_eq!(frobenius(&o, &o).unwrap(), 2.0);
        assert!(frobenius(&i3, &SymTensor::identity(2)).is_err());
    }

    #[test]
    fn dev_and_trace() {
        assert_eq!(SymTensor::identity(3).dev(), SymTensor::zero(3));
        assert_eq!(
            SymTensor::diag(&[2.0, 0.0]).dev(),
            SymTensor::diag(&[1.0, -1.0])
        );
        assert_eq!(SymTensor::diag(&[1.0, 2.0, 3.0]).trace(), 6.0);
    }
}
