//! Closed-form model families used as oracles for the generic machinery.

pub mod dirac;
pub mod jc;
pub mod pt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{complex_list, ComplexMatrix, ComplexVector, C64};
use crate::metric::{
    biorth_system_of, check_pseudo_hermitian, das_metric, spectral_metric_of, BiorthSystem,
    DasConstruction, Generator, MetricOperator, Normalization,
};
use crate::phase::Classification;
use crate::tolerances::Tolerances;

pub use dirac::{dirac_scalar, DiracParams};
pub use jc::{jc_doublet, jc_full, jc_metric_block, JcParams};
pub use pt::{pt_broken_eigenvectors, pt_matrix, pt_unbroken_eigenvectors, PtParams};

/// Model-specific inputs of the generator-based metric construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DasData {
    pub reference_metric: ComplexMatrix,
    pub generators: Vec<Generator>,
}

/// A model at fixed parameters together with its closed-form data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInstance {
    pub hamiltonian: ComplexMatrix,
    pub similarity: ComplexMatrix,
    /// Sorted like the generic eigensolver output.
    #[serde(with = "complex_list")]
    pub analytic_eigenvalues: Vec<C64>,
    /// Closed-form right eigenvectors aligned with `analytic_eigenvalues`
    /// when the model supplies them.
    pub analytic_right: Option<Vec<ComplexVector>>,
    pub analytic_metric: Option<MetricOperator>,
    pub das_data: Option<DasData>,
    /// Pair scaling under which the spectral metric reproduces the model's
    /// closed-form metric.
    pub normalization: Normalization,
    pub phase: Classification,
}

impl ModelInstance {
    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn pseudo_hermitian_residual(&self, tol: &Tolerances) -> Result<f64> {
        check_pseudo_hermitian(&self.hamiltonian, &self.similarity, tol)
    }

    pub fn biorth_system(&self, tol: &Tolerances) -> Result<BiorthSystem> {
        biorth_system_of(&self.hamiltonian, &self.normalization, tol)
    }

    pub fn spectral_metric(&self, tol: &Tolerances) -> Result<MetricOperator> {
        spectral_metric_of(&self.hamiltonian, &self.normalization, tol)
    }

    pub fn das_construction(&self, tol: &Tolerances) -> Result<DasConstruction> {
        let data = self.das_data.as_ref().ok_or_else(|| {
            Error::InvalidParams("no generator data for this model at these parameters".into())
        })?;
        let sys = self.biorth_system(tol)?;
        let max_imag = sys.max_imag();
        if max_imag > tol.real_tol * self.hamiltonian.norm() {
            return Err(Error::BrokenPhase { max_imag });
        }
        DasConstruction::from_system(data.reference_metric.clone(), data.generators.clone(), &sys)
    }

    pub fn das_metric(&self, tol: &Tolerances) -> Result<MetricOperator> {
        let metric = das_metric(&self.das_construction(tol)?, tol)?;
        MetricOperator::new(&self.hamiltonian, metric.matrix, metric.method, tol)
    }
}

/// `S / <psi|S|psi>`, the reference metric normalized on `psi`.
pub(crate) fn normalized_reference(
    s: &ComplexMatrix,
    psi: &ComplexVector,
) -> Result<ComplexMatrix> {
    let expectation = psi.dot(&s.mul_vec(psi)?);
    if expectation.norm() == 0.0 {
        return Err(Error::InvalidParams(
            "reference state has zero S-norm".into(),
        ));
    }
    Ok(s.scale(C64::new(1.0, 0.0) / expectation))
}

/// `R X R^-1` for the 2x2 eigenbasis `R = [a, b]`: exchanges `a` and `b`.
pub(crate) fn swap_generator(
    a: &ComplexVector,
    b: &ComplexVector,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    let r = ComplexMatrix::from_columns(&[a.clone(), b.clone()])?;
    let x = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])?;
    let rinv = Lu::factor(&r, tol)?.inverse();
    Ok(&(&r * &x) * &rinv)
}

pub(crate) fn require_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!(
                "{name} must be finite, got {v}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn sort_by_value<T>(items: &mut [(C64, T)]) {
    items.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
}
