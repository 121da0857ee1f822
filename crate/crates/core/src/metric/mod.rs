//! Metric operators: biorthonormal systems, the spectral construction,
//! validation and comparison. The Das construction lives in [`das`].

pub mod das;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigen::{cluster_overlap, clusters, spectral_scale, EigenPair};
use crate::linalg::jacobi::hermitian_spectrum_unchecked;
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{c64, ComplexMatrix, ComplexVector, C64};
use crate::linalg::{eigensystem, inverse_with};
use crate::tolerances::Tolerances;

pub use das::{das_metric, DasConstruction, Generator};

/// How each biorthonormal pair `(right, left)` is scaled. Biorthonormality
/// only fixes `<left|right> = 1`, leaving one complex factor per pair free;
/// the spectral metric depends on it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Left vectors unit norm.
    #[default]
    UnitLeft,
    /// Right vectors unit norm.
    UnitRight,
    /// `|left| = |right|`.
    Balanced,
    /// Right vectors matched to reference vectors, one per eigenvalue.
    MatchRight(Vec<ReferenceVector>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceVector {
    #[serde(with = "crate::linalg::matrix::complex_pair")]
    pub energy: C64,
    pub vector: ComplexVector,
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::UnitLeft => "unit_left",
            Normalization::UnitRight => "unit_right",
            Normalization::Balanced => "balanced",
            Normalization::MatchRight(_) => "match_right",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "unit_left" => Ok(Normalization::UnitLeft),
            "unit_right" => Ok(Normalization::UnitRight),
            "balanced" => Ok(Normalization::Balanced),
            other => Err(Error::InvalidParams(format!(
                "unknown normalization '{other}' (expected unit_left, unit_right or balanced)"
            ))),
        }
    }
}

/// Eigenpairs rescaled so that `<left_m|right_n> = delta_mn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiorthSystem {
    pub pairs: Vec<EigenPair>,
    pub dim: usize,
}

impl BiorthSystem {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn right_matrix(&self) -> ComplexMatrix {
        let cols: Vec<ComplexVector> = self.pairs.iter().map(|p| p.right.clone()).collect();
        ComplexMatrix::from_columns(&cols).expect("non-empty system")
    }

    pub fn left_matrix(&self) -> ComplexMatrix {
        let cols: Vec<ComplexVector> = self.pairs.iter().map(|p| p.left.clone()).collect();
        ComplexMatrix::from_columns(&cols).expect("non-empty system")
    }

    /// `|right_i><left_i|`.
    pub fn projector(&self, i: usize) -> ComplexMatrix {
        self.pairs[i].right.outer(&self.pairs[i].left)
    }

    /// `||L^dag R - I||`.
    pub fn gram_residual(&self) -> f64 {
        let g = &self.left_matrix().adjoint() * &self.right_matrix();
        (&g - &ComplexMatrix::identity(self.dim)).norm()
    }

    /// `||sum_n |right_n><left_n| - I||`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = &self.right_matrix() * &self.left_matrix().adjoint();
        (&sum - &ComplexMatrix::identity(self.dim)).norm()
    }

    /// `sum_n E_n |right_n><left_n|`.
    pub fn hamiltonian(&self) -> ComplexMatrix {
        let r = self.right_matrix();
        let mut scaled = r.clone();
        for (j, p) in self.pairs.iter().enumerate() {
            for i in 0..self.dim {
                scaled[(i, j)] = r[(i, j)] * p.value;
            }
        }
        &scaled * &self.left_matrix().adjoint()
    }

    pub fn max_imag(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.value.im.abs())
            .fold(0.0, f64::max)
    }
}

/// Rescale raw eigenpairs into a biorthonormal system. Clusters of
/// (near-)degenerate eigenvalues are biorthonormalized jointly through their
/// Gram matrix. Fails with `DefectiveSystem` at an exceptional point.
pub fn biorthonormalize(
    raw: &[EigenPair],
    norm: &Normalization,
    tol: &Tolerances,
) -> Result<BiorthSystem> {
    let dim = raw.first().map(|p| p.right.dim()).ok_or_else(|| {
        Error::InvalidParams("cannot biorthonormalize an empty eigensystem".into())
    })?;
    if raw.len() != dim
        || raw
            .iter()
            .any(|p| p.right.dim() != dim || p.left.dim() != dim)
    {
        return Err(Error::mismatch(
            format!("{dim} pairs of dimension {dim}"),
            raw.len(),
        ));
    }
    let values: Vec<C64> = raw.iter().map(|p| p.value).collect();
    let groups = clusters(&values, tol.cluster_tol * spectral_scale(&values));
    let mut pairs: Vec<EigenPair> = raw
        .iter()
        .map(|p| EigenPair {
            value: p.value,
            right: p.right.normalized(),
            left: p.left.normalized(),
        })
        .collect();
    for group in &groups {
        let overlap = cluster_overlap(&pairs, group);
        if overlap < tol.defect_tol {
            return Err(Error::DefectiveSystem { overlap });
        }
        let k = group.len();
        let g = ComplexMatrix::from_fn(k, k, |a, b| {
            pairs[group[a]].left.dot(&pairs[group[b]].right)
        });
        let ginv_adj = inverse_with(&g, tol)?.adjoint();
        let lefts: Vec<ComplexVector> = group.iter().map(|&i| pairs[i].left.clone()).collect();
        for (col, &i) in group.iter().enumerate() {
            // L' = L (G^-1)^dag
            let mut v = ComplexVector::zeros(dim);
            for (row, l) in lefts.iter().enumerate() {
                v.axpy(ginv_adj[(row, col)], l);
            }
            pairs[i].left = v;
        }
    }
    for pair in pairs.iter_mut() {
        let alpha = pair_scale(pair, norm);
        pair.right = pair.right.scale(alpha);
        pair.left = pair.left.scale(c64(1.0, 0.0) / alpha.conj());
    }
    let sys = BiorthSystem { pairs, dim };
    let residual = sys.gram_residual();
    if residual > tol.biorth_tol {
        log::debug!("biorthonormal Gram residual {residual:.3e} above biorth_tol");
    }
    Ok(sys)
}

/// Factor applied to `right` (and `1/conj` of it to `left`).
fn pair_scale(pair: &EigenPair, norm: &Normalization) -> C64 {
    let (nr, nl) = (pair.right.norm(), pair.left.norm());
    match norm {
        Normalization::UnitLeft => c64(nl, 0.0),
        Normalization::UnitRight => c64(1.0 / nr, 0.0),
        Normalization::Balanced => c64((nl / nr).sqrt(), 0.0),
        Normalization::MatchRight(refs) => {
            let reference = refs
                .iter()
                .min_by(|a, b| {
                    (a.energy - pair.value)
                        .norm()
                        .total_cmp(&(b.energy - pair.value).norm())
                })
                .filter(|r| r.vector.dim() == pair.right.dim());
            match reference {
                // least-squares alpha minimizing |alpha r - ref|
                Some(r) => pair.right.dot(&r.vector) / (nr * nr),
                None => c64(1.0 / nr, 0.0),
            }
        }
    }
}

/// Where a metric came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMethod {
    Spectral,
    Das,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// `||m - m^dag|| / ||m||`.
    pub hermitian_residual: f64,
    pub min_metric_eigenvalue: f64,
    /// `||m H - H^dag m|| / (||m|| ||H||)`.
    pub intertwining_residual: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricOperator {
    pub matrix: ComplexMatrix,
    pub method: MetricMethod,
    pub report: ValidityReport,
}

impl MetricOperator {
    /// Wrap a matrix, validating it against `h`.
    pub fn new(
        h: &ComplexMatrix,
        matrix: ComplexMatrix,
        method: MetricMethod,
        tol: &Tolerances,
    ) -> Result<Self> {
        let report = validate_metric(h, &matrix, tol)?;
        Ok(MetricOperator {
            matrix,
            method,
            report,
        })
    }

    pub fn require_positive(&self) -> Result<()> {
        if self.report.positive {
            Ok(())
        } else {
            Err(Error::NotPositive {
                min_eigenvalue: self.report.min_metric_eigenvalue,
            })
        }
    }
}

fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// `||S H - H^dag S|| / (||S|| ||H||)`. `S` must be invertible.
pub fn check_pseudo_hermitian(
    h: &ComplexMatrix,
    s: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<f64> {
    let n = h.require_square()?;
    if s.require_square()? != n {
        return Err(Error::mismatch(
            format!("{n}x{n}"),
            format!("{}x{}", s.rows(), s.cols()),
        ));
    }
    Lu::factor(s, tol)?;
    let diff = &(s * h) - &(&h.adjoint() * s);
    Ok(relative(diff.norm(), s.norm() * h.norm()))
}

/// Residuals and positivity of a candidate metric for `h`.
pub fn validate_metric(
    h: &ComplexMatrix,
    m: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<ValidityReport> {
    let n = h.require_square()?;
    if m.require_square()? != n {
        return Err(Error::mismatch(
            format!("{n}x{n}"),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    let mnorm = m.norm();
    let hermitian_residual = relative((m - &m.adjoint()).norm(), mnorm);
    let min_metric_eigenvalue = hermitian_spectrum_unchecked(m)[0];
    let diff = &(m * h) - &(&h.adjoint() * m);
    let intertwining_residual = relative(diff.norm(), mnorm * h.norm());
    let positive =
        hermitian_residual <= tol.herm_tol && min_metric_eigenvalue > tol.pos_tol * mnorm;
    Ok(ValidityReport {
        hermitian_residual,
        min_metric_eigenvalue,
        intertwining_residual,
        positive,
    })
}

/// `sum_n |left_n><left_n|` over a biorthonormal system. The report is taken
/// against the Hamiltonian the system reconstructs.
pub fn spectral_metric(sys: &BiorthSystem, tol: &Tolerances) -> Result<MetricOperator> {
    let h = sys.hamiltonian();
    let max_imag = sys.max_imag();
    if max_imag > tol.real_tol * h.norm() {
        return Err(Error::BrokenPhase { max_imag });
    }
    let mut matrix = ComplexMatrix::zeros(sys.dim, sys.dim);
    for p in &sys.pairs {
        matrix = &matrix + &p.left.outer(&p.left);
    }
    MetricOperator::new(&h, matrix, MetricMethod::Spectral, tol)
}

/// Decompose `h`, biorthonormalize and build the spectral metric, with the
/// report taken against `h` itself.
pub fn spectral_metric_of(
    h: &ComplexMatrix,
    norm: &Normalization,
    tol: &Tolerances,
) -> Result<MetricOperator> {
    let sys = biorth_system_of(h, norm, tol)?;
    let max_imag = sys.max_imag();
    if max_imag > tol.real_tol * h.norm() {
        return Err(Error::BrokenPhase { max_imag });
    }
    let metric = spectral_metric(&sys, tol)?;
    MetricOperator::new(h, metric.matrix, MetricMethod::Spectral, tol)
}

pub fn biorth_system_of(
    h: &ComplexMatrix,
    norm: &Normalization,
    tol: &Tolerances,
) -> Result<BiorthSystem> {
    let sys = eigensystem(h, tol)?;
    biorthonormalize(&sys.pairs, norm, tol)
}

/// `a^dag m b`.
pub fn metric_inner_product(
    a: &ComplexVector,
    b: &ComplexVector,
    m: &ComplexMatrix,
) -> Result<C64> {
    let mb = m.mul_vec(b)?;
    if a.dim() != mb.dim() {
        return Err(Error::mismatch(mb.dim(), a.dim()));
    }
    Ok(a.dot(&mb))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Comparison {
    Equal,
    /// `a = factor * b`.
    Proportional {
        factor: f64,
    },
    Distinct,
}

impl Comparison {
    pub fn name(&self) -> &'static str {
        match self {
            Comparison::Equal => "equal",
            Comparison::Proportional { .. } => "proportional",
            Comparison::Distinct => "distinct",
        }
    }
}

pub fn compare_metrics(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<Comparison> {
    a.same_shape(b)?;
    let anorm = a.norm();
    if (a - b).norm() <= tol.cmp_tol * anorm {
        return Ok(Comparison::Equal);
    }
    let bb = (&b.adjoint() * b).trace();
    if bb.norm() == 0.0 {
        return Ok(Comparison::Distinct);
    }
    let factor = (&b.adjoint() * a).trace() / bb;
    let real_enough = factor.im.abs() <= 1e-9 * factor.norm().max(1.0);
    if real_enough
        && factor.re > 0.0
        && (a - &b.scale_real(factor.re)).norm() <= tol.cmp_tol * anorm
    {
        return Ok(Comparison::Proportional { factor: factor.re });
    }
    Ok(Comparison::Distinct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::c64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jc_h(sin: f64) -> ComplexMatrix {
        // eps = 0, omega = 1, n = 0 so that sin(theta) = 2 rho
        let g = sin / 2.0;
        ComplexMatrix::from_real_rows(&[[0.0, g], [-g, 1.0]]).unwrap()
    }

    fn jc_metric(sin: f64) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[1.0, -sin], [-sin, 1.0]]).unwrap()
    }

    #[test]
    fn hermitian_left_equals_right() {
        let h = ComplexMatrix::from_rows(&[
            [c64(1.0, 0.0), c64(0.3, 0.2)],
            [c64(0.3, -0.2), c64(-0.5, 0.0)],
        ])
        .unwrap();
        let sys = biorth_system_of(&h, &Normalization::UnitLeft, &Tolerances::default()).unwrap();
        for p in &sys.pairs {
            assert!((&p.left - &p.right).norm() < 1e-12);
        }
        let m = spectral_metric(&sys, &Tolerances::default()).unwrap();
        assert!((&m.matrix - &ComplexMatrix::identity(2)).norm() < 1e-12);
    }

    #[test]
    fn jc_completeness_by_direct_sum() {
        let tol = Tolerances::default();
        let sys = biorth_system_of(&jc_h(0.5), &Normalization::UnitLeft, &tol).unwrap();
        let mut sum = ComplexMatrix::zeros(2, 2);
        for p in &sys.pairs {
            sum = &sum + &p.right.outer(&p.left);
        }
        assert!((&sum - &ComplexMatrix::identity(2)).norm() < 1e-12);
        assert!(sys.gram_residual() < 1e-12);
    }

    #[test]
    fn normalizations_differ_by_cos_squared() {
        let tol = Tolerances::default();
        let h = jc_h(0.5);
        let left = spectral_metric_of(&h, &Normalization::UnitLeft, &tol).unwrap();
        let right = spectral_metric_of(&h, &Normalization::UnitRight, &tol).unwrap();
        assert!((&left.matrix - &jc_metric(0.5)).max_abs() < 1e-12);
        match compare_metrics(&right.matrix, &left.matrix, &tol).unwrap() {
            Comparison::Proportional { factor } => assert!((factor - 1.0 / 0.75).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let balanced = spectral_metric_of(&h, &Normalization::Balanced, &tol).unwrap();
        assert!(balanced.report.positive);
    }

    #[test]
    fn validate_reference_metric() {
        let tol = Tolerances::default();
        let r = validate_metric(&jc_h(0.5), &jc_metric(0.5), &tol).unwrap();
        assert!(r.intertwining_residual < 1e-12);
        assert!((r.min_metric_eigenvalue - 0.5).abs() < 1e-12);
        assert!(r.positive);

        let hermitian = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [2.0, -1.0]]).unwrap();
        let r = validate_metric(&hermitian, &ComplexMatrix::identity(2), &tol).unwrap();
        assert_eq!(r.hermitian_residual, 0.0);
        assert_eq!(r.intertwining_residual, 0.0);
        assert!(r.positive);
    }

    #[test]
    fn metric_degenerates_toward_exceptional_point() {
        let tol = Tolerances::default();
        let mut last = f64::INFINITY;
        for sin in [0.9, 0.99, 0.999, 0.99999] {
            let m = spectral_metric_of(&jc_h(sin), &Normalization::UnitLeft, &tol).unwrap();
            assert!(m.report.min_metric_eigenvalue < last);
            last = m.report.min_metric_eigenvalue;
        }
        assert!(last < 1e-4);
        // the limiting operator itself is singular
        let limit = validate_metric(&jc_h(1.0), &jc_metric(1.0), &tol).unwrap();
        assert!(limit.min_metric_eigenvalue.abs() < 1e-15);
        assert!(!limit.positive);
        assert!(matches!(
            biorth_system_of(&jc_h(1.0), &Normalization::UnitLeft, &tol),
            Err(Error::DefectiveSystem { .. })
        ));
    }

    #[test]
    fn inner_products() {
        let psi = ComplexVector::new(vec![c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
        let one = metric_inner_product(&psi, &psi, &ComplexMatrix::identity(2)).unwrap();
        assert!((one - c64(1.0, 0.0)).norm() < 1e-15);

        // sin(theta) = 0.5: theta/2 = pi/12
        let (c, s) = (
            (std::f64::consts::PI / 12.0).cos(),
            (std::f64::consts::PI / 12.0).sin(),
        );
        let plus = ComplexVector::from_real(&[s, c]).unwrap();
        let minus = ComplexVector::from_real(&[c, s]).unwrap();
        let q = jc_metric(0.5);
        assert!(metric_inner_product(&plus, &minus, &q).unwrap().norm() < 1e-15);
        // sesquilinear in the first slot
        let i = c64(0.0, 1.0);
        let lhs = metric_inner_product(&psi.scale(i), &plus, &q).unwrap();
        let rhs = metric_inner_product(&psi, &plus, &q).unwrap() * i.conj();
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn positive_norm_on_random_unbroken_draws() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let sin = rng.gen_range(0.0..0.999);
            let m = jc_metric(sin);
            let h = jc_h(sin);
            let sys = biorth_system_of(&h, &Normalization::UnitLeft, &tol).unwrap();
            let plus = &sys.pairs[1].right;
            assert!(metric_inner_product(plus, plus, &m).unwrap().re > 0.0);
            assert!(hermitian_spectrum_unchecked(&m)[0] > 0.0);
        }
    }

    #[test]
    fn comparison_verdicts() {
        let tol = Tolerances::default();
        let a = jc_metric(0.5);
        assert_eq!(compare_metrics(&a, &a, &tol).unwrap(), Comparison::Equal);
        match compare_metrics(&a.scale_real(4.0 / 3.0), &a, &tol).unwrap() {
            Comparison::Proportional { factor } => assert!((factor - 4.0 / 3.0).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            compare_metrics(&a, &jc_metric(0.2), &tol).unwrap(),
            Comparison::Distinct
        );
        assert_eq!(
            compare_metrics(&a.scale_real(-1.0), &a, &tol).unwrap(),
            Comparison::Distinct
        );
        assert_eq!(
            compare_metrics(&a.scale(c64(0.0, 1.0)), &a, &tol).unwrap(),
            Comparison::Distinct
        );
    }

    #[test]
    fn broken_phase_rejected() {
        let tol = Tolerances::default();
        let h = jc_h(1.2);
        assert!(matches!(
            spectral_metric_of(&h, &Normalization::UnitLeft, &tol),
            Err(Error::BrokenPhase { .. })
        ));
    }

    #[test]
    fn pseudo_hermiticity_checks() {
        let tol = Tolerances::default();
        let s = ComplexMatrix::diagonal(&[c64(1.0, 0.0), c64(-1.0, 0.0)]);
        assert!(check_pseudo_hermitian(&jc_h(0.5), &s, &tol).unwrap() < 1e-14);
        let hermitian = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [2.0, -1.0]]).unwrap();
        assert_eq!(
            check_pseudo_hermitian(&hermitian, &ComplexMatrix::identity(2), &tol).unwrap(),
            0.0
        );
        assert!(matches!(
            check_pseudo_hermitian(&hermitian, &ComplexMatrix::zeros(2, 2), &tol),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn degenerate_cluster_biorthonormalized_jointly() {
        let tol = Tolerances::default();
        // V diag(1, 1, 3) V^-1
        let v = ComplexMatrix::from_real_rows(&[[1.0, 0.4, 0.0], [0.2, 1.0, 0.3], [0.0, 0.1, 1.0]])
            .unwrap();
        let d = ComplexMatrix::diagonal(&[c64(1.0, 0.0), c64(1.0, 0.0), c64(3.0, 0.0)]);
        let h = &(&v * &d) * &crate::linalg::inverse(&v).unwrap();
        let sys = biorth_system_of(&h, &Normalization::UnitLeft, &tol).unwrap();
        assert!(sys.gram_residual() < 1e-10);
        assert!(sys.completeness_residual() < 1e-10);
        let m = spectral_metric(&sys, &tol).unwrap();
        let r = validate_metric(&h, &m.matrix, &tol).unwrap();
        assert!(r.positive && r.intertwining_residual < 1e-10);
    }
}
