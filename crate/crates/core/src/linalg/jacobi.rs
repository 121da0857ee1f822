use crate::error::{Error, Result};
use crate::linalg::matrix::{c64, ComplexMatrix, C64};
use crate::tolerances::Tolerances;

const MAX_SWEEPS: usize = 100;

/// Real eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi.
pub fn hermitian_spectrum(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_spectrum_with(m, &Tolerances::default())
}

pub fn hermitian_spectrum_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    m.require_square()?;
    let residual = m.anti_hermitian_part().norm();
    if residual > tol.herm_tol * m.norm() {
        return Err(Error::NotHermitian {
            residual: residual / m.norm(),
        });
    }
    Ok(hermitian_spectrum_unchecked(m))
}

/// Jacobi on the Hermitian part of `m`, skipping the Hermiticity gate.
pub(crate) fn hermitian_spectrum_unchecked(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut a = m.hermitian_part();
    let total = a.norm();
    if total == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, p, q);
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Zero `a[p][q]` with `U = diag(1, e^{-i phi}) * R(c, s)` restricted to
/// the (p, q) plane, where `a[p][q] = |a_pq| e^{i phi}`.
fn rotate(a: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let n = a.rows();
    let phase = apq / b;
    let alpha = a[(p, p)].re;
    let gamma = a[(q, q)].re;
    let theta = (gamma - alpha) / (2.0 * b);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + theta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let u_pp = c64(c, 0.0);
    let u_pq = c64(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;
    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = x * u_pp + y * u_qp;
        a[(k, q)] = x * u_pq + y * u_qq;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = u_pp.conj() * x + u_qp.conj() * y;
        a[(q, k)] = u_pq.conj() * x + u_qq.conj() * y;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = c64(a[(p, p)].re, 0.0);
    a[(q, q)] = c64(a[(q, q)].re, 0.0);
}
