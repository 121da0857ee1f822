use crate::error::Result;
use crate::linalg::eigen::eigendecompose_with;
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{ComplexMatrix, ComplexVector, C64};
use crate::tolerances::Tolerances;

const MAX_TAYLOR_TERMS: usize = 80;

/// Reusable plan for `exp(scale * M)` at many scales. Decomposes `M` once;
/// when the eigenvector matrix is too ill-conditioned it falls back to
/// scaling and squaring for every call.
#[derive(Debug, Clone)]
pub struct ExpPlan {
    matrix: ComplexMatrix,
    diagonal: Option<Diagonalized>,
    exp_tol: f64,
}

#[derive(Debug, Clone)]
struct Diagonalized {
    vectors: ComplexMatrix,
    inverse: ComplexMatrix,
    values: Vec<C64>,
}

impl ExpPlan {
    pub fn new(m: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        m.require_square()?;
        Ok(ExpPlan {
            matrix: m.clone(),
            diagonal: diagonalize(m, tol),
            exp_tol: tol.exp_tol,
        })
    }

    pub fn uses_eigenbasis(&self) -> bool {
        self.diagonal.is_some()
    }

    pub fn exp(&self, scale: C64) -> ComplexMatrix {
        match &self.diagonal {
            Some(d) => {
                let n = d.values.len();
                let mut scaled = d.vectors.clone();
                for j in 0..n {
                    let f = (scale * d.values[j]).exp();
                    for i in 0..n {
                        scaled[(i, j)] *= f;
                    }
                }
                &scaled * &d.inverse
            }
            None => taylor_exp(&self.matrix, scale, self.exp_tol),
        }
    }

    pub fn apply(&self, scale: C64, v: &ComplexVector) -> Result<ComplexVector> {
        self.exp(scale).mul_vec(v)
    }
}

fn diagonalize(m: &ComplexMatrix, tol: &Tolerances) -> Option<Diagonalized> {
    let pairs = eigendecompose_with(m, tol).ok()?;
    let cols: Vec<ComplexVector> = pairs.iter().map(|p| p.right.clone()).collect();
    let vectors = ComplexMatrix::from_columns(&cols).ok()?;
    let inverse = Lu::factor(&vectors, tol).ok()?.inverse();
    let cond = vectors.norm() * inverse.norm();
    if cond.is_nan() || cond > tol.cond_max {
        log::debug!("eigenvector condition {cond:.3e} above cond_max, using Taylor path");
        return None;
    }
    Some(Diagonalized {
        vectors,
        inverse,
        values: pairs.iter().map(|p| p.value).collect(),
    })
}

/// `exp(scale * M)`.
pub fn mat_exp(m: &ComplexMatrix, scale: C64) -> Result<ComplexMatrix> {
    mat_exp_with(m, scale, &Tolerances::default())
}

pub fn mat_exp_with(m: &ComplexMatrix, scale: C64, tol: &Tolerances) -> Result<ComplexMatrix> {
    Ok(ExpPlan::new(m, tol)?.exp(scale))
}

/// Scaling and squaring with a truncated Taylor series.
pub fn taylor_exp(m: &ComplexMatrix, scale: C64, exp_tol: f64) -> ComplexMatrix {
    let n = m.rows();
    let a = m.scale(scale);
    let norm = a.norm_one();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a.scale_real(0.5f64.powi(squarings));
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TAYLOR_TERMS {
        term = (&term * &b).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.norm() <= exp_tol * 1e-4 * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
