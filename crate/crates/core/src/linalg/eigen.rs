//! General complex eigendecomposition.
//!
//! `n = 1` and `n = 2` are solved in closed form. Larger matrices go through
//! Householder reduction to upper Hessenberg form followed by single-shift
//! complex QR with Wilkinson shifts. Right eigenvectors come from inverse
//! iteration on the Hessenberg factor; left eigenvectors from a separate
//! reduction of `M^dag`, matched to the right spectrum by conjugate
//! eigenvalue.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi::hermitian_spectrum_unchecked;
use crate::linalg::matrix::{c64, complex_pair, ComplexMatrix, ComplexVector, C64};
use crate::tolerances::Tolerances;

const EPS: f64 = f64::EPSILON;

/// Eigenvalue with its right eigenvector and the matching eigenvector of
/// `M^dag` (eigenvalue `value.conj()`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    #[serde(with = "complex_pair")]
    pub value: C64,
    pub right: ComplexVector,
    pub left: ComplexVector,
}

/// Raw eigendecomposition result that also carries the defect indicator,
/// so callers near an exceptional point can inspect it instead of failing.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub pairs: Vec<EigenPair>,
    /// Smallest normalized left/right overlap over eigenvalue clusters.
    pub defect_indicator: f64,
    /// Frobenius norm of the decomposed matrix.
    pub matrix_norm: f64,
}

impl Eigensystem {
    pub fn values(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.value.im.abs())
            .fold(0.0, f64::max)
    }
}

fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

fn cmp_complex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues of `[[a, b], [c, d]]`, larger-modulus root first computed
/// directly and the other from the determinant to avoid cancellation.
pub(crate) fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let mean = (a + d) * 0.5;
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let plus = mean + disc;
    let minus = mean - disc;
    let (big, other) = if plus.norm() >= minus.norm() {
        (plus, minus)
    } else {
        (minus, plus)
    };
    let det = a * d - b * c;
    let small = if big.norm() > 0.0 { det / big } else { other };
    (big, small)
}

/// Householder reduction `M = Q H Q^dag` with `H` upper Hessenberg.
#[derive(Debug, Clone)]
pub struct Hessenberg {
    pub h: ComplexMatrix,
    pub q: ComplexMatrix,
}

impl Hessenberg {
    pub fn reduce(m: &ComplexMatrix) -> Result<Self> {
        let n = m.require_square()?;
        let mut h = m.clone();
        let mut q = ComplexMatrix::identity(n);
        for k in 0..n.saturating_sub(2) {
            let len = n - k - 1;
            let xnorm = (0..len)
                .map(|i| h[(k + 1 + i, k)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if xnorm == 0.0 {
                continue;
            }
            let x0 = h[(k + 1, k)];
            let phase = if x0.norm() > 0.0 {
                x0 / x0.norm()
            } else {
                c64(1.0, 0.0)
            };
            let alpha = -phase * xnorm;
            let mut v: Vec<C64> = (0..len).map(|i| h[(k + 1 + i, k)]).collect();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            let beta = 2.0 / vnorm2;
            // H <- P H
            for j in k..n {
                let s: C64 = (0..len).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
                let s = s * beta;
                for i in 0..len {
                    h[(k + 1 + i, j)] -= v[i] * s;
                }
            }
            // H <- H P, Q <- Q P
            for target in [&mut h, &mut q] {
                for i in 0..n {
                    let s: C64 = (0..len).map(|l| target[(i, k + 1 + l)] * v[l]).sum();
                    let s = s * beta;
                    for l in 0..len {
                        target[(i, k + 1 + l)] -= s * v[l].conj();
                    }
                }
            }
            h[(k + 1, k)] = alpha;
            for i in (k + 2)..n {
                h[(i, k)] = c64(0.0, 0.0);
            }
        }
        Ok(Hessenberg { h, q })
    }
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with real `c`,
/// chosen so that `G [a, b]^T = [r, 0]^T`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b.norm() == 0.0 {
        return (1.0, c64(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, c64(1.0, 0.0));
    }
    let na = a.norm();
    let nu = na.hypot(b.norm());
    (na / nu, (a / na) * b.conj() / nu)
}

fn qr_sweep(h: &mut ComplexMatrix, lo: usize, hi: usize, mu: C64) {
    for k in lo..=hi {
        h[(k, k)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        h[(k + 1, k)] = c64(0.0, 0.0);
        rots.push((c, s));
    }
    for (idx, k) in (lo..hi).enumerate() {
        let (c, s) = rots[idx];
        for i in lo..=(k + 1) {
            let u = h[(i, k)];
            let v = h[(i, k + 1)];
            h[(i, k)] = u * c + v * s.conj();
            h[(i, k + 1)] = -u * s + v * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += mu;
    }
}

/// Eigenvalues of an upper Hessenberg matrix by shifted QR.
fn hessenberg_qr_eigenvalues(mut h: ComplexMatrix, max_iters: usize) -> Result<Vec<C64>> {
    let n = h.rows();
    let norm = h.norm();
    let mut eig = vec![c64(0.0, 0.0); n];
    if norm == 0.0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let mut s = abs1(h[(lo, lo)]) + abs1(h[(lo - 1, lo - 1)]);
            if s == 0.0 {
                s = norm;
            }
            if abs1(h[(lo, lo - 1)]) <= EPS * s {
                h[(lo, lo - 1)] = c64(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if lo + 1 == hi {
            let (a, b) = eig2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eig[lo] = a;
            eig[hi] = b;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iters {
            return Err(Error::NoConvergence {
                iterations: total - 1,
            });
        }
        let mu = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + c64(0.75 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            let (a, b) = eig2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            let d = h[(hi, hi)];
            if (a - d).norm() <= (b - d).norm() {
                a
            } else {
                b
            }
        };
        qr_sweep(&mut h, lo, hi, mu);
    }
    Ok(eig)
}

/// LU of the shifted Hessenberg matrix `H - mu I` with adjacent-row pivoting.
/// Tiny pivots are lifted to `eps * ||H||` so inverse iteration can proceed
/// at (numerically) exact eigenvalues.
struct ShiftedHessLu {
    u: ComplexMatrix,
    mults: Vec<C64>,
    swaps: Vec<bool>,
}

impl ShiftedHessLu {
    fn new(h: &ComplexMatrix, mu: C64, hnorm: f64) -> Self {
        let n = h.rows();
        let mut a = h.clone();
        for i in 0..n {
            a[(i, i)] -= mu;
        }
        let floor = EPS * hnorm.max(f64::MIN_POSITIVE);
        let mut mults = vec![c64(0.0, 0.0); n.saturating_sub(1)];
        let mut swaps = vec![false; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            if a[(k + 1, k)].norm() > a[(k, k)].norm() {
                for j in k..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(k + 1, j)];
                    a[(k + 1, j)] = t;
                }
                swaps[k] = true;
            }
            if a[(k, k)].norm() < floor {
                a[(k, k)] = c64(floor, 0.0);
            }
            let l = a[(k + 1, k)] / a[(k, k)];
            mults[k] = l;
            a[(k + 1, k)] = c64(0.0, 0.0);
            for j in (k + 1)..n {
                let t = a[(k, j)];
                a[(k + 1, j)] -= l * t;
            }
        }
        if a[(n - 1, n - 1)].norm() < floor {
            a[(n - 1, n - 1)] = c64(floor, 0.0);
        }
        ShiftedHessLu { u: a, mults, swaps }
    }

    fn solve(&self, rhs: &ComplexVector) -> ComplexVector {
        let n = self.u.rows();
        let mut x = rhs.clone();
        for k in 0..n.saturating_sub(1) {
            if self.swaps[k] {
                let t = x[k];
                x[k] = x[k + 1];
                x[k + 1] = t;
            }
            let xk = x[k];
            x[k + 1] -= self.mults[k] * xk;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.u[(i, j)] * x[j];
            }
            x[i] = s / self.u[(i, i)];
        }
        x
    }
}

fn random_unit(n: usize, seed: u64) -> ComplexVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexVector::from_fn(n, |_| c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).normalized()
}

fn residual(m: &ComplexMatrix, v: &ComplexVector, lambda: C64) -> f64 {
    let mv = m.mul_vec(v).expect("square");
    let mut r = mv;
    r.axpy(-lambda, v);
    r.norm()
}

/// Eigenvectors of the Hessenberg factor for one cluster of shifts, returned
/// in the original basis.
fn cluster_vectors(
    hess: &Hessenberg,
    shifts: &[C64],
    hnorm: f64,
    seed: u64,
    accept: f64,
) -> Vec<ComplexVector> {
    let n = hess.h.rows();
    let same_shift = 100.0 * EPS * hnorm.max(f64::MIN_POSITIVE) * n as f64;
    let mut found: Vec<(C64, ComplexVector)> = Vec::with_capacity(shifts.len());
    for (j, &mu) in shifts.iter().enumerate() {
        let lu = ShiftedHessLu::new(&hess.h, mu, hnorm);
        let start_seed = seed.wrapping_add(j as u64);
        let against: Vec<&ComplexVector> = found
            .iter()
            .filter(|(prev_mu, _)| (prev_mu - mu).norm() <= same_shift)
            .map(|(_, v)| v)
            .collect();
        let mut x = inverse_iteration(&lu, &hess.h, mu, hnorm, start_seed, &against);
        // In a defective cluster there is no independent eigenvector to
        // find; accept the (parallel) plain iterate so the defect shows up.
        if !against.is_empty() && residual(&hess.h, &x, mu) > accept {
            x = inverse_iteration(&lu, &hess.h, mu, hnorm, start_seed, &[]);
        }
        found.push((mu, x));
    }
    found
        .into_iter()
        .map(|(_, y)| hess.q.mul_vec(&y).expect("square").normalized().fix_phase())
        .collect()
}

fn inverse_iteration(
    lu: &ShiftedHessLu,
    h: &ComplexMatrix,
    mu: C64,
    hnorm: f64,
    seed: u64,
    against: &[&ComplexVector],
) -> ComplexVector {
    let n = h.rows();
    let mut x = random_unit(n, seed);
    for it in 0..10 {
        let mut y = lu.solve(&x);
        for _ in 0..2 {
            for prev in against {
                let proj = prev.dot(&y);
                y.axpy(-proj, prev);
            }
        }
        let ny = y.norm();
        if !(ny.is_finite() && ny > 0.0) {
            x = random_unit(n, seed.wrapping_add(1000 + it as u64));
            continue;
        }
        x = y.scale_real(1.0 / ny);
        if it >= 1 && residual(h, &x, mu) <= 10.0 * n as f64 * EPS * hnorm {
            break;
        }
    }
    x
}

/// Group indices whose eigenvalues lie within `radius` of each other
/// (transitively).
pub(crate) fn clusters(values: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

pub(crate) fn spectral_scale(values: &[C64]) -> f64 {
    let s = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Smallest singular value of `L^dag R` over eigenvalue clusters, with
/// columns normalized. For a simple eigenvalue this is `|<l|r>|/(|l||r|)`;
/// it vanishes at an exceptional point.
pub fn defect_indicator(pairs: &[EigenPair], tol: &Tolerances) -> f64 {
    let values: Vec<C64> = pairs.iter().map(|p| p.value).collect();
    let radius = tol.cluster_tol * spectral_scale(&values);
    clusters(&values, radius)
        .iter()
        .map(|group| cluster_overlap(pairs, group))
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn cluster_overlap(pairs: &[EigenPair], group: &[usize]) -> f64 {
    if group.len() == 1 {
        let p = &pairs[group[0]];
        let denom = p.left.norm() * p.right.norm();
        return if denom > 0.0 {
            p.left.dot(&p.right).norm() / denom
        } else {
            0.0
        };
    }
    let k = group.len();
    let r: Vec<ComplexVector> = group.iter().map(|&i| pairs[i].right.normalized()).collect();
    let l: Vec<ComplexVector> = group.iter().map(|&i| pairs[i].left.normalized()).collect();
    let g = ComplexMatrix::from_fn(k, k, |a, b| l[a].dot(&r[b]));
    let gtg = &g.adjoint() * &g;
    let min = hermitian_spectrum_unchecked(&gtg)
        .first()
        .copied()
        .unwrap_or(0.0);
    min.max(0.0).sqrt()
}

fn vec2_for(a: C64, b: C64, c: C64, d: C64, lambda: C64, slot: usize, scale: f64) -> ComplexVector {
    let v1 = [b, lambda - a];
    let v2 = [lambda - d, c];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, nv) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    if nv.sqrt() <= EPS * scale {
        return ComplexVector::basis(2, slot);
    }
    ComplexVector::from_fn(2, |i| v[i]).normalized().fix_phase()
}

fn closed_form_2x2(m: &ComplexMatrix) -> Vec<EigenPair> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let (x, y) = eig2(a, b, c, d);
    let mut values = [x, y];
    values.sort_by(cmp_complex);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    values
        .iter()
        .enumerate()
        .map(|(slot, &lambda)| EigenPair {
            value: lambda,
            right: vec2_for(a, b, c, d, lambda, slot, scale),
            // M^dag = [[a*, c*], [b*, d*]] at eigenvalue lambda*
            left: vec2_for(
                a.conj(),
                c.conj(),
                b.conj(),
                d.conj(),
                lambda.conj(),
                slot,
                scale,
            ),
        })
        .collect()
}

/// Eigenvalues by the Hessenberg QR path regardless of size.
pub fn eigenvalues_qr(m: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<C64>> {
    let n = m.require_square()?;
    let hess = Hessenberg::reduce(m)?;
    let mut values = hessenberg_qr_eigenvalues(hess.h, tol.max_qr_iters(n))?;
    values.sort_by(cmp_complex);
    Ok(values)
}

/// Sorted eigenvalues (closed form for `n <= 2`).
pub fn eigenvalues(m: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<C64>> {
    let n = m.require_square()?;
    if n <= 2 {
        return Ok(eigensystem(m, tol)?.values());
    }
    eigenvalues_qr(m, tol)
}

/// Full eigendecomposition without the defectiveness gate.
pub fn eigensystem(m: &ComplexMatrix, tol: &Tolerances) -> Result<Eigensystem> {
    let n = m.require_square()?;
    let norm = m.norm();
    let pairs = match n {
        1 => vec![EigenPair {
            value: m[(0, 0)],
            right: ComplexVector::basis(1, 0),
            left: ComplexVector::basis(1, 0),
        }],
        2 => closed_form_2x2(m),
        _ => general_pairs(m, tol)?,
    };
    let max_res = tol.eig_tol * norm.max(f64::MIN_POSITIVE);
    let adj = m.adjoint();
    for p in &pairs {
        let rr = residual(m, &p.right, p.value);
        let rl = residual(&adj, &p.left, p.value.conj());
        if !(rr <= max_res && rl <= max_res) {
            log::debug!("eigenpair residuals {rr:.3e} / {rl:.3e} exceed {max_res:.3e}");
            return Err(Error::NoConvergence {
                iterations: tol.max_qr_iters(n),
            });
        }
    }
    let defect = defect_indicator(&pairs, tol);
    Ok(Eigensystem {
        pairs,
        defect_indicator: defect,
        matrix_norm: norm,
    })
}

fn general_pairs(m: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<EigenPair>> {
    let n = m.rows();
    let max_iters = tol.max_qr_iters(n);
    let hess_r = Hessenberg::reduce(m)?;
    let mut values = hessenberg_qr_eigenvalues(hess_r.h.clone(), max_iters)?;
    values.sort_by(cmp_complex);

    let adj = m.adjoint();
    let hess_l = Hessenberg::reduce(&adj)?;
    let left_values = hessenberg_qr_eigenvalues(hess_l.h.clone(), max_iters)?;

    // match each right eigenvalue to the closest unused conj on the M^dag side
    let mut used = vec![false; n];
    let mut matched = vec![c64(0.0, 0.0); n];
    for (i, lambda) in values.iter().enumerate() {
        let target = lambda.conj();
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (left_values[a] - target)
                    .norm()
                    .total_cmp(&(left_values[b] - target).norm())
            })
            .expect("n unused slots");
        used[j] = true;
        matched[i] = left_values[j];
        let gap = (left_values[j] - target).norm();
        if gap > tol.match_tol * m.norm() {
            log::debug!("conjugate eigenvalue match gap {gap:.3e} at index {i}");
        }
    }

    let hnorm = m.norm();
    let groups = clusters(&values, tol.cluster_tol * hnorm);
    let mut right = vec![ComplexVector::zeros(n); n];
    let mut left = vec![ComplexVector::zeros(n); n];
    for (g, group) in groups.iter().enumerate() {
        let shifts_r: Vec<C64> = group.iter().map(|&i| values[i]).collect();
        let shifts_l: Vec<C64> = group.iter().map(|&i| matched[i]).collect();
        let seed = 0x5eed_0000 + 97 * g as u64;
        let accept = 1e-2 * tol.eig_tol * hnorm;
        let rv = cluster_vectors(&hess_r, &shifts_r, hnorm, seed, accept);
        let lv = cluster_vectors(&hess_l, &shifts_l, hnorm, seed ^ 0xabcd, accept);
        for (k, &i) in group.iter().enumerate() {
            right[i] = rv[k].clone();
            left[i] = lv[k].clone();
        }
    }
    Ok(values
        .into_iter()
        .zip(right.into_iter().zip(left))
        .map(|(value, (right, left))| EigenPair { value, right, left })
        .collect())
}

/// Eigendecomposition with the defectiveness gate: fails with
/// `DefectiveMatrix` at (or numerically at) an exceptional point.
pub fn eigendecompose(m: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    eigendecompose_with(m, &Tolerances::default())
}

pub fn eigendecompose_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<EigenPair>> {
    let sys = eigensystem(m, tol)?;
    if sys.defect_indicator < tol.defect_tol {
        return Err(Error::DefectiveMatrix {
            overlap: sys.defect_indicator,
        });
    }
    Ok(sys.pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu::inverse;
    use proptest::prop_assert;
    use proptest::prop_assert_eq;

    fn real(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(n, n, |_, _| {
            c64(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
        })
    }

    /// Characteristic-polynomial root finder: Durand-Kerner on det(M - zI)
    /// expanded through the Faddeev-LeVerrier recursion. Independent of the
    /// QR path.
    fn charpoly_roots(m: &ComplexMatrix) -> Vec<C64> {
        let n = m.rows();
        // Faddeev-LeVerrier: coefficients of det(zI - M) = z^n + c1 z^{n-1} + ...
        let mut coeffs = vec![c64(1.0, 0.0)];
        let mut mk = ComplexMatrix::zeros(n, n);
        for k in 1..=n {
            let prev = coeffs[k - 1];
            let shifted = &mk + &ComplexMatrix::identity(n).scale(prev);
            mk = m * &shifted;
            let ck = -mk.trace() / k as f64;
            coeffs.push(ck);
        }
        let poly = |z: C64| coeffs.iter().fold(c64(0.0, 0.0), |acc, &c| acc * z + c);
        let mut roots: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0, 0.4 + 0.9 * k as f64))
            .collect();
        for _ in 0..2000 {
            let snapshot = roots.clone();
            for i in 0..n {
                let denom: C64 = (0..n)
                    .filter(|&j| j != i)
                    .fold(c64(1.0, 0.0), |acc, j| acc * (snapshot[i] - roots[j]));
                roots[i] = snapshot[i] - poly(snapshot[i]) / denom;
            }
        }
        roots.sort_by(cmp_complex);
        roots
    }

    #[test]
    fn jc_doublet_eigenvalues_match_formula_and_charpoly() {
        // n=0, eps=0.5, omega=1, rho=0.125
        let h = real(&[&[0.25, 0.125], &[-0.125, 0.75]]);
        let vals = eigenvalues(&h, &Tolerances::default()).unwrap();
        let root = 0.1875f64.sqrt();
        let expected = [0.5 * (1.0 - root), 0.5 * (1.0 + root)];
        let oracle = charpoly_roots(&h);
        for k in 0..2 {
            assert!((vals[k] - c64(expected[k], 0.0)).norm() < 1e-14);
            assert!((vals[k] - oracle[k]).norm() < 1e-12);
        }
        assert!((vals[0].re - 0.2835).abs() < 1e-4);
        assert!((vals[1].re - 0.7165).abs() < 1e-4);
    }

    #[test]
    fn diagonal_gives_standard_basis() {
        let m = real(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]);
        let pairs = eigendecompose(&m).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            assert!((p.value - c64(k as f64 + 1.0, 0.0)).norm() < 1e-14);
            let e = ComplexVector::basis(3, k);
            assert!((&p.right - &e).norm() < 1e-12);
            assert!((&p.left - &e).norm() < 1e-12);
        }
    }

    #[test]
    fn pt_matrix_eigenvalues() {
        let th = std::f64::consts::PI / 6.0;
        let h = ComplexMatrix::from_rows(&[
            [C64::from_polar(1.0, th), c64(1.0, 0.0)],
            [c64(1.0, 0.0), C64::from_polar(1.0, -th)],
        ])
        .unwrap();
        let vals = eigenvalues(&h, &Tolerances::default()).unwrap();
        let q = 0.75f64.sqrt();
        let oracle = [th.cos() - q, th.cos() + q];
        assert!((vals[0] - c64(oracle[0], 0.0)).norm() < 1e-14);
        assert!((vals[1] - c64(oracle[1], 0.0)).norm() < 1e-14);
        assert!(vals[0].norm() < 1e-14);
        assert!((vals[1].re - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn qr_path_matches_charpoly_on_random_matrices() {
        let tol = Tolerances::default();
        for (n, seed) in [(3, 1u64), (4, 2), (5, 3), (6, 4)] {
            let m = random_matrix(n, seed);
            let qr = eigenvalues_qr(&m, &tol).unwrap();
            let oracle = charpoly_roots(&m);
            for (a, b) in qr.iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-9, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn general_residuals_and_left_vectors_match_inverse_rows() {
        let tol = Tolerances::default();
        for (n, seed) in [(3, 11u64), (5, 12), (8, 13), (16, 14)] {
            let m = random_matrix(n, seed);
            let pairs = eigendecompose(&m).unwrap();
            let norm = m.norm();
            for p in &pairs {
                assert!(residual(&m, &p.right, p.value) <= 1e-8 * norm);
                assert!(residual(&m.adjoint(), &p.left, p.value.conj()) <= 1e-8 * norm);
            }
            // cross-check: left vectors are parallel to rows of V^-1
            let v = ComplexMatrix::from_columns(
                &pairs.iter().map(|p| p.right.clone()).collect::<Vec<_>>(),
            )
            .unwrap();
            let vinv = inverse(&v).unwrap();
            for (k, p) in pairs.iter().enumerate() {
                let row = vinv
                    .row(k)
                    .entries()
                    .iter()
                    .map(|z| z.conj())
                    .collect::<Vec<_>>();
                let row = ComplexVector::new(row).unwrap().normalized();
                let cos = row.dot(&p.left.normalized()).norm();
                assert!((cos - 1.0).abs() < 1e-8, "n={n} k={k} cos={cos}");
            }
            assert!(eigensystem(&m, &tol).unwrap().defect_indicator > 1e-6);
        }
    }

    #[test]
    fn closed_form_2x2_agrees_with_qr() {
        let tol = Tolerances::default();
        for seed in 0..1000u64 {
            let m = random_matrix(2, 10_000 + seed);
            let closed = eigenvalues(&m, &tol).unwrap();
            let qr = eigenvalues_qr(&m, &tol).unwrap();
            for (a, b) in closed.iter().zip(&qr) {
                assert!(
                    (a - b).norm() <= 1e-12 * m.norm().max(1.0),
                    "seed={seed}: {a} vs {b}"
                );
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn residuals_within_tolerance(n in 1usize..9, seed in 0u64..1_000_000) {
            let m = random_matrix(n, seed);
            let sys = eigensystem(&m, &Tolerances::default()).unwrap();
            prop_assert_eq!(sys.pairs.len(), n);
            for p in &sys.pairs {
                prop_assert!(residual(&m, &p.right, p.value) <= 1e-8 * m.norm());
            }
        }

        #[test]
        fn trace_is_eigenvalue_sum(n in 1usize..9, seed in 0u64..1_000_000) {
            let m = random_matrix(n, seed);
            let sum: C64 = eigenvalues(&m, &Tolerances::default()).unwrap().into_iter().sum();
            prop_assert!((sum - m.trace()).norm() <= 1e-10 * (1.0 + m.norm()));
        }
    }

    #[test]
    fn sorted_by_real_then_imag() {
        let m = random_matrix(7, 21);
        let vals = eigenvalues(&m, &Tolerances::default()).unwrap();
        for w in vals.windows(2) {
            assert!(cmp_complex(&w[0], &w[1]).is_le());
        }
    }

    #[test]
    fn degenerate_identity_cluster() {
        let m = ComplexMatrix::identity(4);
        let pairs = eigendecompose(&m).unwrap();
        let r =
            ComplexMatrix::from_columns(&pairs.iter().map(|p| p.right.clone()).collect::<Vec<_>>())
                .unwrap();
        let gram = &r.adjoint() * &r;
        assert!((&gram - &ComplexMatrix::identity(4)).norm() < 1e-10);
    }

    #[test]
    fn degenerate_nonnormal_but_diagonalizable() {
        // V diag(1, 1, 2) V^-1 with non-unitary V
        let v = real(&[&[1.0, 0.3, 0.2], &[0.0, 1.0, 0.5], &[0.1, 0.0, 1.0]]);
        let d = ComplexMatrix::diagonal(&[c64(1.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0)]);
        let m = &(&v * &d) * &inverse(&v).unwrap();
        let sys = eigensystem(&m, &Tolerances::default()).unwrap();
        assert!(sys.defect_indicator > 1e-3, "{}", sys.defect_indicator);
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = real(&[&[0.25, 0.25], &[-0.25, 0.75]]);
        let sys = eigensystem(&m, &Tolerances::default()).unwrap();
        assert!(sys.defect_indicator < 1e-8);
        assert!(matches!(
            eigendecompose(&m),
            Err(Error::DefectiveMatrix { .. })
        ));

        let j3 = real(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 1.0], &[0.0, 0.0, 2.0]]);
        assert!(matches!(
            eigendecompose(&j3),
            Err(Error::DefectiveMatrix { .. })
        ));
    }

    #[test]
    fn no_convergence_with_zero_budget() {
        let tol = Tolerances {
            qr_iters_per_dim: 0.0,
            ..Tolerances::default()
        };
        let m = random_matrix(6, 3);
        assert!(matches!(
            eigenvalues_qr(&m, &tol),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn hessenberg_similarity() {
        let m = random_matrix(6, 8);
        let hs = Hessenberg::reduce(&m).unwrap();
        let back = &(&hs.q * &hs.h) * &hs.q.adjoint();
        assert!((&back - &m).norm() < 1e-12);
        for i in 0..6usize {
            for j in 0..i.saturating_sub(1) {
                assert_eq!(hs.h[(i, j)], c64(0.0, 0.0));
            }
        }
    }
}
