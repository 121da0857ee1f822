//! Metric assembly from eigenstate generators:
//! `q = sum_E c_E (sigma_E^dag)^-1 q0 sigma_E^-1 P_E`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{c64, complex_list, complex_pair, ComplexMatrix, C64};
use crate::metric::{BiorthSystem, MetricMethod, MetricOperator};
use crate::tolerances::Tolerances;

/// Operator mapping the reference state to the eigenstate at `energy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    #[serde(with = "complex_pair")]
    pub energy: C64,
    pub sigma: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DasConstruction {
    pub reference_metric: ComplexMatrix,
    pub generators: Vec<Generator>,
    /// `P_E = |right_E><left_E|`, aligned with `generators`.
    pub projectors: Vec<ComplexMatrix>,
    /// Unit-modulus `c_E`, aligned with `generators`.
    #[serde(with = "complex_list")]
    pub phases: Vec<C64>,
}

impl DasConstruction {
    /// Pair each generator with the eigenpair of `sys` nearest its energy and
    /// pick each phase so the assembled metric gives `<psi_E|q|psi_E> > 0`.
    pub fn from_system(
        reference_metric: ComplexMatrix,
        generators: Vec<Generator>,
        sys: &BiorthSystem,
    ) -> Result<Self> {
        let n = sys.dim;
        if reference_metric.require_square()? != n {
            return Err(Error::mismatch(
                format!("{n}x{n} reference metric"),
                reference_metric.rows(),
            ));
        }
        if generators.len() != n {
            return Err(Error::mismatch(format!("{n} generators"), generators.len()));
        }
        let mut used = vec![false; n];
        let mut projectors = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        for g in &generators {
            if g.sigma.require_square()? != n {
                return Err(Error::mismatch(
                    format!("{n}x{n} generator"),
                    g.sigma.rows(),
                ));
            }
            let idx = (0..n)
                .filter(|&i| !used[i])
                .min_by(|&a, &b| {
                    (sys.pairs[a].value - g.energy)
                        .norm()
                        .total_cmp(&(sys.pairs[b].value - g.energy).norm())
                })
                .expect("as many pairs as generators");
            used[idx] = true;
            projectors.push(sys.projector(idx));
            let block = block_operator(&reference_metric, &g.sigma, &Tolerances::default())?;
            let psi = &sys.pairs[idx].right;
            let b = psi.dot(&block.mul_vec(psi)?);
            phases.push(if b.norm() > 0.0 {
                b.conj() / b.norm()
            } else {
                c64(1.0, 0.0)
            });
        }
        Ok(DasConstruction {
            reference_metric,
            generators,
            projectors,
            phases,
        })
    }

    /// `||P_E^2 - P_E||` (max over E), `||sum P_E - I||`, and max `||c_E| - 1|`.
    pub fn invariant_residuals(&self) -> (f64, f64, f64) {
        let n = self.reference_metric.rows();
        let idem = self
            .projectors
            .iter()
            .map(|p| (&(p * p) - p).norm())
            .fold(0.0, f64::max);
        let mut sum = ComplexMatrix::zeros(n, n);
        for p in &self.projectors {
            sum = &sum + p;
        }
        let complete = (&sum - &ComplexMatrix::identity(n)).norm();
        let unit = self
            .phases
            .iter()
            .map(|c| (c.norm() - 1.0).abs())
            .fold(0.0, f64::max);
        (idem, complete, unit)
    }

    /// `sum_E E P_E`.
    pub fn hamiltonian(&self) -> ComplexMatrix {
        let n = self.reference_metric.rows();
        let mut h = ComplexMatrix::zeros(n, n);
        for (g, p) in self.generators.iter().zip(&self.projectors) {
            h = &h + &p.scale(g.energy);
        }
        h
    }
}

/// `(sigma^dag)^-1 q0 sigma^-1`.
fn block_operator(
    q0: &ComplexMatrix,
    sigma: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    let inv = Lu::factor(sigma, tol)?.inverse();
    Ok(&(&inv.adjoint() * q0) * &inv)
}

/// Assemble the metric. Anti-Hermitian round-off up to `herm_tol` is
/// symmetrized away; anything larger means the inputs are inconsistent.
pub fn das_metric(c: &DasConstruction, tol: &Tolerances) -> Result<MetricOperator> {
    let n = c.reference_metric.require_square()?;
    if c.generators.len() != c.projectors.len() || c.generators.len() != c.phases.len() {
        return Err(Error::mismatch(
            format!("{} projectors and phases", c.generators.len()),
            format!("{} / {}", c.projectors.len(), c.phases.len()),
        ));
    }
    let mut q = ComplexMatrix::zeros(n, n);
    for ((g, p), &phase) in c.generators.iter().zip(&c.projectors).zip(&c.phases) {
        let block = block_operator(&c.reference_metric, &g.sigma, tol)?;
        q = &q + &(&block * p).scale(phase);
    }
    let qnorm = q.norm();
    let anti = q.anti_hermitian_part().norm();
    if anti > tol.herm_tol * qnorm {
        return Err(Error::NotHermitian {
            residual: if qnorm > 0.0 { anti / qnorm } else { anti },
        });
    }
    let q = q.hermitian_part();
    MetricOperator::new(&c.hamiltonian(), q, MetricMethod::Das, tol)
}
