use crate::error::{Error, Result};
use crate::linalg::matrix::{c64, ComplexMatrix, ComplexVector, C64};
use crate::tolerances::Tolerances;

/// Partial-pivot LU factorization `P M = L U`, stored compactly.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: ComplexMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    /// Factor `m`. Fails with `SingularMatrix` when a pivot drops below
    /// `singular_tol * ||m||`.
    pub fn factor(m: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let n = m.require_square()?;
        let scale = m.norm();
        let threshold = tol.singular_tol * scale;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            min_pivot = min_pivot.min(pmag);
            if pmag <= threshold || pmag == 0.0 {
                return Err(Error::SingularMatrix {
                    pivot: if scale > 0.0 { pmag / scale } else { 0.0 },
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l != c64(0.0, 0.0) {
                    for j in (k + 1)..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Lu {
            n,
            lu,
            perm,
            min_pivot,
        })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &ComplexVector) -> Result<ComplexVector> {
        if b.dim() != self.n {
            return Err(Error::mismatch(self.n, b.dim()));
        }
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(i) {
                s -= self.lu[(i, j)] * xj;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().skip(i + 1) {
                s -= self.lu[(i, j)] * xj;
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(ComplexVector::from_fn(n, |i| x[i]))
    }

    pub fn inverse(&self) -> ComplexMatrix {
        let cols: Vec<ComplexVector> = (0..self.n)
            .map(|j| {
                self.solve(&ComplexVector::basis(self.n, j))
                    .expect("dimension checked")
            })
            .collect();
        ComplexMatrix::from_columns(&cols).expect("square")
    }

    pub fn determinant(&self) -> C64 {
        let mut det = c64(1.0, 0.0);
        for i in 0..self.n {
            det *= self.lu[(i, i)];
        }
        // permutation parity
        let mut seen = vec![false; self.n];
        let mut sign = 1.0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.perm[k];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        det * sign
    }
}

/// Matrix inverse by partial-pivot LU.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    inverse_with(m, &Tolerances::default())
}

pub fn inverse_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    Ok(Lu::factor(m, tol)?.inverse())
}

pub fn solve(m: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    Lu::factor(m, &Tolerances::default())?.solve(b)
}
