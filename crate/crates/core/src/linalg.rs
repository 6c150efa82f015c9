//! Sparse symmetric matrices and a direct SPD solver.

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Default::default()
        }
    }

    #[inline]
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        self.rows.push(r);
        self.cols.push(c);
        self.vals.push(v);
    }

    pub fn to_csc(&self) -> CscMatrix<f64> {
        let coo = CooMatrix::try_from_triplets(
            self.n,
            self.n,
            self.rows.clone(),
            self.cols.clone(),
            self.vals.clone(),
        )
        .expect("triplet indices are in range by construction");
        CscMatrix::from(&coo)
    }
}

/// `y = A x` for a CSC matrix.
pub fn matvec(a: &CscMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for (j, col) in a.col_iter().enumerate() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (&i, &v) in col.row_indices().iter().zip(col.values()) {
            y[i] += v * xj;
        }
    }
    y
}

/// `a + s b` for matrices of identical shape.
pub fn add_scaled(a: &CscMatrix<f64>, s: f64, b: &CscMatrix<f64>) -> CscMatrix<f64> {
    let mut t = Triplets::new(a.nrows());
    for (m, scale) in [(a, 1.0), (b, s)] {
        for (j, col) in m.col_iter().enumerate() {
            for (&i, &v) in col.row_indices().iter().zip(col.values()) {
                t.push(i, j, scale * v);
            }
        }
    }
    t.to_csc()
}

/// Largest entrywise asymmetry `|A_ij - A_ji|`.
pub fn asymmetry(a: &CscMatrix<f64>) -> f64 {
    let dense = to_dense(a);
    let mut worst: f64 = 0.0;
    for i in 0..dense.nrows() {
        for j in 0..i {
            worst = worst.max((dense[(i, j)] - dense[(j, i)]).abs());
        }
    }
    worst
}

pub fn to_dense(a: &CscMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (j, col) in a.col_iter().enumerate() {
        for (&i, &v) in col.row_indices().iter().zip(col.values()) {
            d[(i, j)] += v;
        }
    }
    d
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cholesky-factored SPD matrix with a residual check on every solve.
pub struct SpdSolver {
    matrix: CscMatrix<f64>,
    factor: Option<CscCholesky<f64>>,
    rtol: f64,
}

impl SpdSolver {
    pub fn new(matrix: CscMatrix<f64>, rtol: f64) -> Result<Self> {
        let factor = if matrix.nrows() == 0 {
            None
        } else {
            Some(
                CscCholesky::factor(&matrix)
                    .map_err(|e| Error::LinearSolver(format!("Cholesky factorization: {e}")))?,
            )
        };
        Ok(Self {
            matrix,
            factor,
            rtol,
        })
    }

    pub fn matrix(&self) -> &CscMatrix<f64> {
        &self.matrix
    }

    /// Solves `A x = b`, refining until `‖b - A x‖ ≤ rtol ‖b‖`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let Some(factor) = &self.factor else {
            return Ok(Vec::new());
        };
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let solve = |rhs: &[f64]| -> Vec<f64> {
            let r = DMatrix::from_column_slice(rhs.len(), 1, rhs);
            factor.solve(&r).as_slice().to_vec()
        };
        let mut x = solve(b);
        for _ in 0..4 {
            let ax = matvec(&self.matrix, &x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let rn = norm2(&r);
            if !rn.is_finite() {
                break;
            }
            if rn <= self.rtol * bnorm {
                return Ok(x);
            }
            let dx = solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        let ax = matvec(&self.matrix, &x);
        let rn = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
        if rn <= self.rtol * bnorm {
            Ok(x)
        } else {
            Err(Error::LinearSolver(format!(
                "relative residual {:.3e} exceeds {:.1e}",
                rn / bnorm,
                self.rtol
            )))
        }
    }
}
