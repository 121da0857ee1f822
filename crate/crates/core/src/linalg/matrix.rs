use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_finite(entries: &[C64]) -> Result<()> {
    match entries
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::mismatch(
                "positive dimensions",
                format!("{rows}x{cols}"),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::mismatch(rows * cols, data.len()));
        }
        check_finite(&data)?;
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Build from nested rows. All rows must have the same length.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::mismatch(ncols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::new(nrows, ncols, data)
    }

    /// Real-valued rows; most model Hamiltonians are real.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| c64(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) },
        )
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { c64(0.0, 0.0) })
    }

    /// Columns become the matrix columns.
    pub fn from_columns(columns: &[ComplexVector]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, |c| c.dim());
        if columns.iter().any(|c| c.dim() != nrows) {
            return Err(Error::mismatch(nrows, "ragged columns"));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| columns[j][i]))
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[ComplexMatrix]) -> Self {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        check_finite(&self.data).is_ok()
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn row(&self, i: usize) -> ComplexVector {
        ComplexVector::from_fn(self.cols, |j| self[(i, j)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c64(s, 0.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// (M - M^dag)/2, the anti-Hermitian part.
    pub fn anti_hermitian_part(&self) -> Self {
        (self - &self.adjoint()).scale_real(0.5)
    }

    /// (M + M^dag)/2.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.dim() != self.cols {
            return Err(Error::mismatch(self.cols, v.dim()));
        }
        Ok(ComplexVector::from_fn(self.rows, |i| {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            row.iter().zip(v.entries()).map(|(a, b)| a * b).sum()
        }))
    }

    pub fn try_mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::mismatch(
                format!("{} rows", self.cols),
                format!("{} rows", rhs.rows),
            ));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, rhs: &ComplexMatrix, f: impl Fn(C64, C64) -> C64) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch in elementwise operation"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn same_shape(&self, other: &ComplexMatrix) -> Result<()> {
        if (self.rows, self.cols) == (other.rows, other.cols) {
            Ok(())
        } else {
            Err(Error::mismatch(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ))
        }
    }

    /// Sub-block copy.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ComplexMatrix {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on shape mismatch; use [`ComplexMatrix::try_mul`] for fallible code paths.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("shape mismatch in matrix product")
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6e}{:+.6e}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

// JSON encoding: row-major nested arrays of [re, im] pairs.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .data
            .chunks(self.cols)
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| c64(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Dense complex column vector.
#[derive(Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<C64>,
}

impl ComplexVector {
    pub fn new(data: Vec<C64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::mismatch("positive dimension", 0));
        }
        check_finite(&data)?;
        Ok(ComplexVector { data })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| c64(x, 0.0)).collect())
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> C64) -> Self {
        ComplexVector {
            data: (0..dim).map(f).collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexVector {
            data: vec![c64(0.0, 0.0); dim],
        }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        Self::from_fn(dim, |i| if i == k { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Sesquilinear product <self|other>, conjugate-linear in `self`.
    pub fn dot(&self, other: &ComplexVector) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexVector {
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c64(s, 0.0))
    }

    /// Unit-norm copy. Zero vectors are returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.scale_real(1.0 / n)
        } else {
            self.clone()
        }
    }

    /// Outer product |self><other|.
    pub fn outer(&self, other: &ComplexVector) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), other.dim(), |i, j| {
            self.data[i] * other.data[j].conj()
        })
    }

    pub fn axpy(&mut self, a: C64, x: &ComplexVector) {
        for (y, xv) in self.data.iter_mut().zip(&x.data) {
            *y += a * xv;
        }
    }

    /// Rotate the global phase so the largest-modulus entry is real and positive.
    pub fn fix_phase(&self) -> Self {
        let pivot = self.data.iter().copied().fold(c64(0.0, 0.0), |best, z| {
            if z.norm() > best.norm() * (1.0 + 1e-12) {
                z
            } else {
                best
            }
        });
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        self.scale(pivot.conj() / pivot.norm())
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

impl<'a> Sub<&'a ComplexVector> for &'a ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Add<&'a ComplexVector> for &'a ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: &ComplexVector) -> ComplexVector {
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self
            .data
            .iter()
            .map(|z| format!("{:+.6e}{:+.6e}i", z.re, z.im))
            .collect();
        write!(f, "ComplexVector [{}]", cells.join(", "))
    }
}

impl Serialize for ComplexVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[f64; 2]> = self.data.iter().map(|z| [z.re, z.im]).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        ComplexVector::new(v.into_iter().map(|[re, im]| c64(re, im)).collect())
            .map_err(D::Error::custom)
    }
}

/// Serde helper for a single complex number as `[re, im]`.
pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(c64(re, im))
    }
}

/// Serde helper for `Vec<C64>` as a list of `[re, im]` pairs.
pub mod complex_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| c64(re, im)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjoint_of_hermitian_is_fixed_point() {
        let m = ComplexMatrix::from_rows(&[
            [c64(0.0, 0.0), c64(0.0, 1.0)],
            [c64(0.0, -1.0), c64(0.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(m.adjoint(), m);
    }

    #[test]
    fn adjoint_conjugate_transposes() {
        let m = ComplexMatrix::from_rows(&[
            [c64(1.0, 0.0), c64(2.0, 1.0)],
            [c64(0.0, 0.0), c64(3.0, 0.0)],
        ])
        .unwrap();
        let expected = ComplexMatrix::from_rows(&[
            [c64(1.0, 0.0), c64(0.0, 0.0)],
            [c64(2.0, -1.0), c64(3.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(m.adjoint(), expected);
        assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            ComplexMatrix::new(2, 2, vec![c64(0.0, 0.0); 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![c64(0.0, 0.0), c64(f64::NAN, 0.0)]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(ComplexVector::new(vec![]).is_err());
        assert!(ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn dot_is_conjugate_linear_in_first_slot() {
        let a = ComplexVector::new(vec![c64(0.0, 1.0), c64(1.0, 0.0)]).unwrap();
        let b = ComplexVector::new(vec![c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        assert_eq!(a.dot(&b), c64(0.0, -1.0));
        assert_eq!(a.scale(c64(0.0, 2.0)).dot(&b), c64(0.0, -2.0) * a.dot(&b));
    }

    #[test]
    fn block_diag_and_json_shape() {
        let a = ComplexMatrix::from_real_rows(&[[1.0]]).unwrap();
        let b = ComplexMatrix::from_real_rows(&[[2.0, 3.0], [4.0, 5.0]]).unwrap();
        let m = ComplexMatrix::block_diag(&[a, b]);
        assert_eq!(m.rows(), 3);
        assert_eq!(m[(1, 2)], c64(3.0, 0.0));
        assert_eq!(m[(0, 1)], c64(0.0, 0.0));
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.starts_with("[[[1.0,0.0],[0.0,0.0]"));
        let back: ComplexMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn fix_phase_makes_pivot_real_positive() {
        let v = ComplexVector::new(vec![c64(0.0, -2.0), c64(1.0, 0.0)]).unwrap();
        let w = v.fix_phase();
        assert!((w[0] - c64(2.0, 0.0)).norm() < 1e-15);
        assert!((w.norm() - v.norm()).abs() < 1e-15);
    }
}
