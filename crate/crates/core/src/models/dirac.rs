//! Dirac particle with a scalar pseudo-Hermitian potential, one plane-wave
//! sector: `H = [[m c^2, c p + v0], [c p - v0, -m c^2]]` with `p = hbar kx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{c64, ComplexMatrix, ComplexVector, C64};
use crate::metric::{Generator, MetricMethod, MetricOperator, Normalization, ReferenceVector};
use crate::models::{normalized_reference, require_finite, swap_generator, DasData, ModelInstance};
use crate::phase::Classification;
use crate::tolerances::Tolerances;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracParams {
    pub m0: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default)]
    pub kx: f64,
    pub v0: f64,
}

impl DiracParams {
    pub fn new(m0: f64, kx: f64, v0: f64) -> Self {
        DiracParams {
            m0,
            c: 1.0,
            hbar: 1.0,
            kx,
            v0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_finite(&[
            ("m0", self.m0),
            ("c", self.c),
            ("hbar", self.hbar),
            ("kx", self.kx),
            ("v0", self.v0),
        ])?;
        if self.m0 < 0.0 || self.c <= 0.0 {
            return Err(Error::InvalidParams("need m0 >= 0 and c > 0".into()));
        }
        Ok(())
    }

    /// `c p = c hbar kx`.
    pub fn momentum_energy(&self) -> f64 {
        self.c * self.hbar * self.kx
    }

    /// `m0 c^2`.
    pub fn rest_energy(&self) -> f64 {
        self.m0 * self.c * self.c
    }

    /// `E^2 = (c p)^2 + (m0 c^2)^2 - v0^2`; positive in the unbroken phase.
    pub fn discriminant(&self) -> f64 {
        let cp = self.momentum_energy();
        let mc2 = self.rest_energy();
        cp * cp + mc2 * mc2 - self.v0 * self.v0
    }

    pub fn classification(&self) -> Classification {
        let cp = self.momentum_energy();
        let mc2 = self.rest_energy();
        if self.v0 == 0.0 {
            return Classification::Unbroken;
        }
        Classification::from_discriminant(
            self.discriminant(),
            cp * cp + mc2 * mc2 + self.v0 * self.v0,
        )
    }

    pub fn eigenvalues(&self) -> [C64; 2] {
        let e = c64(self.discriminant(), 0.0).sqrt();
        let mut v = [-e, e];
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }
}

pub fn dirac_hamiltonian(p: &DiracParams) -> ComplexMatrix {
    let cp = p.momentum_energy();
    let mc2 = p.rest_energy();
    ComplexMatrix::from_real_rows(&[[mc2, cp + p.v0], [cp - p.v0, -mc2]])
        .expect("finite parameters")
}

/// `S = [[m c^2, c p], [c p, -m c^2]]`, the Hermitian part of `H`, or
/// `diag(1, -1)` when that vanishes.
pub fn dirac_similarity(p: &DiracParams) -> ComplexMatrix {
    let cp = p.momentum_energy();
    let mc2 = p.rest_energy();
    if cp == 0.0 && mc2 == 0.0 {
        return ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]]).expect("finite");
    }
    ComplexMatrix::from_real_rows(&[[mc2, cp], [cp, -mc2]]).expect("finite")
}

/// `[(-E, psi_2), (E, psi_1)]` with the `sqrt((E + m c^2) / 2E)` normalization.
pub fn dirac_eigenvectors(p: &DiracParams) -> Result<[(C64, ComplexVector); 2]> {
    let e2 = p.discriminant();
    if e2 <= 0.0 {
        return Err(Error::InvalidParams("eigenvectors need E^2 > 0".into()));
    }
    let e = e2.sqrt();
    let cp = p.momentum_energy();
    let mc2 = p.rest_energy();
    let denom = e + mc2;
    let n = (denom / (2.0 * e)).sqrt();
    let psi1 = ComplexVector::from_real(&[n, n * (cp - p.v0) / denom])?;
    let psi2 = ComplexVector::from_real(&[-n * (cp + p.v0) / denom, n])?;
    Ok([(c64(-e, 0.0), psi2), (c64(e, 0.0), psi1)])
}

/// Closed-form metric in the normalization of [`dirac_eigenvectors`].
pub fn dirac_metric(p: &DiracParams) -> Result<ComplexMatrix> {
    let e2 = p.discriminant();
    if e2 <= 0.0 {
        return Err(Error::InvalidParams("metric needs E^2 > 0".into()));
    }
    let e = e2.sqrt();
    let cp = p.momentum_energy();
    let d = e + p.rest_energy();
    let k = d / (2.0 * e);
    let off = 2.0 * p.v0 / d;
    ComplexMatrix::from_real_rows(&[
        [k * (1.0 + ((cp - p.v0) / d).powi(2)), k * off],
        [k * off, k * (1.0 + ((cp + p.v0) / d).powi(2))],
    ])
}

pub fn dirac_scalar(p: &DiracParams) -> Result<ModelInstance> {
    p.validate()?;
    let tol = Tolerances::default();
    let h = dirac_hamiltonian(p);
    let s = dirac_similarity(p);
    let phase = p.classification();
    let vectors = if phase == Classification::Unbroken {
        dirac_eigenvectors(p).ok()
    } else {
        None
    };
    let (analytic_metric, das_data, normalization, analytic_right) = match vectors {
        Some([(e_minus, psi2), (e_plus, psi1)]) => {
            let metric = MetricOperator::new(&h, dirac_metric(p)?, MetricMethod::Analytic, &tol)?;
            let cp = p.momentum_energy();
            // maps psi_2 onto psi_1; degenerates when c p = -+ v0
            let sigma_plus = if (cp + p.v0) != 0.0 && (p.v0 - cp) != 0.0 {
                ComplexMatrix::from_real_rows(&[[0.0, 1.0], [(p.v0 - cp) / (cp + p.v0), 0.0]])?
            } else {
                swap_generator(&psi1, &psi2, &tol)?
            };
            let das = DasData {
                reference_metric: normalized_reference(&s, &psi2)?,
                generators: vec![
                    Generator {
                        energy: e_minus,
                        sigma: ComplexMatrix::identity(2),
                    },
                    Generator {
                        energy: e_plus,
                        sigma: sigma_plus,
                    },
                ],
            };
            let refs = vec![
                ReferenceVector {
                    energy: e_minus,
                    vector: psi2.clone(),
                },
                ReferenceVector {
                    energy: e_plus,
                    vector: psi1.clone(),
                },
            ];
            (
                Some(metric),
                Some(das),
                Normalization::MatchRight(refs),
                Some(vec![psi2, psi1]),
            )
        }
        None => (None, None, Normalization::UnitLeft, None),
    };
    Ok(ModelInstance {
        hamiltonian: h,
        similarity: s,
        analytic_eigenvalues: p.eigenvalues().to_vec(),
        analytic_right,
        analytic_metric,
        das_data,
        normalization,
        phase,
    })
}
