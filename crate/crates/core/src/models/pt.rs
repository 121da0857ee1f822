//! General 2x2 PT-symmetric matrix
//! `H = [[r e^{i theta}, s e^{i phi}], [t e^{-i phi}, r e^{-i theta}]]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{c64, ComplexMatrix, ComplexVector, C64};
use crate::metric::{Generator, MetricMethod, MetricOperator, Normalization};
use crate::models::{normalized_reference, require_finite, swap_generator, DasData, ModelInstance};
use crate::phase::Classification;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtParams {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

impl PtParams {
    pub fn validate(&self) -> Result<()> {
        require_finite(&[
            ("r", self.r),
            ("s", self.s),
            ("t", self.t),
            ("theta", self.theta),
            ("phi", self.phi),
        ])
    }

    fn gain(&self) -> f64 {
        self.r * self.theta.sin()
    }

    /// `s t - r^2 sin^2 theta`; positive in the unbroken phase.
    pub fn discriminant(&self) -> f64 {
        self.s * self.t - self.gain() * self.gain()
    }

    pub fn classification(&self) -> Classification {
        let scale = (self.s * self.t).abs() + self.gain() * self.gain();
        if scale == 0.0 {
            // H = r cos(theta) I
            return Classification::Unbroken;
        }
        Classification::from_discriminant(self.discriminant(), scale)
    }

    /// `r cos(theta) -+ sqrt(st - r^2 sin^2 theta)`, sorted.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let centre = c64(self.r * self.theta.cos(), 0.0);
        let root = c64(self.discriminant(), 0.0).sqrt();
        let mut v = [centre - root, centre + root];
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// Same Hamiltonian with `s, t > 0`: `(s, t, phi) -> (|s|, |t|, phi + pi)`
    /// when both are negative.
    fn with_positive_couplings(&self) -> Option<PtParams> {
        if self.s > 0.0 && self.t > 0.0 {
            Some(*self)
        } else if self.s < 0.0 && self.t < 0.0 {
            Some(PtParams {
                s: -self.s,
                t: -self.t,
                phi: self.phi + std::f64::consts::PI,
                ..*self
            })
        } else {
            None
        }
    }
}

pub fn pt_hamiltonian(p: &PtParams) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        [C64::from_polar(p.r, p.theta), C64::from_polar(p.s, p.phi)],
        [C64::from_polar(p.t, -p.phi), C64::from_polar(p.r, -p.theta)],
    ])
    .expect("finite parameters")
}

pub fn pt_similarity(p: &PtParams) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        [c64(0.0, 0.0), C64::from_polar(1.0, p.phi)],
        [C64::from_polar(1.0, -p.phi), c64(0.0, 0.0)],
    ])
    .expect("finite parameters")
}

/// Closed-form metric `2/(s+t) [[t, -i r sin(theta) e^{i phi}], [i r sin(theta) e^{-i phi}, s]]`.
pub fn pt_metric(p: &PtParams) -> ComplexMatrix {
    let g = p.gain();
    let i = c64(0.0, 1.0);
    ComplexMatrix::from_rows(&[
        [c64(p.t, 0.0), -i * C64::from_polar(g, p.phi)],
        [i * C64::from_polar(g, -p.phi), c64(p.s, 0.0)],
    ])
    .expect("finite parameters")
    .scale_real(2.0 / (p.s + p.t))
}

/// Unit right eigenvectors `[(E_-, psi_-), (E_+, psi_+)]` in the unbroken phase.
pub fn pt_unbroken_eigenvectors(p: &PtParams) -> Result<[(C64, ComplexVector); 2]> {
    if p.s * p.t <= 0.0 || p.discriminant() <= 0.0 {
        return Err(Error::InvalidParams(
            "unbroken eigenvectors need s t > 0 and s t > r^2 sin^2 theta".into(),
        ));
    }
    let q = p.with_positive_couplings().expect("same-sign couplings");
    let root_q = q.discriminant().sqrt();
    let g = q.gain();
    let i = c64(0.0, 1.0);
    let norm = 1.0 / (q.s + q.t).sqrt();
    let a = (q.s / q.t).powf(0.25);
    let b = (q.t / q.s).powf(0.25);
    let up = c64(root_q, g).sqrt();
    let down = c64(root_q, -g).sqrt();
    let e_half = C64::from_polar(1.0, q.phi / 2.0);
    let plus = ComplexVector::new(vec![
        e_half * up * a * norm,
        e_half.conj() * down * b * norm,
    ])?;
    let minus = ComplexVector::new(vec![
        i * e_half * down * a * norm,
        -i * e_half.conj() * up * b * norm,
    ])?;
    let centre = p.r * p.theta.cos();
    Ok([
        (c64(centre - root_q, 0.0), minus),
        (c64(centre + root_q, 0.0), plus),
    ])
}

/// Broken-phase eigenvectors `[(E, psi_E), (conj E, psi_conj E)]` with
/// `E = r cos(theta) - i Q~`. Requires `s, t > 0` and `r sin(theta) > 0`.
pub fn pt_broken_eigenvectors(p: &PtParams) -> Result<[(C64, ComplexVector); 2]> {
    let g = p.gain();
    if !(p.s > 0.0 && p.t > 0.0 && g > 0.0 && p.discriminant() < 0.0) {
        return Err(Error::InvalidParams(
            "broken eigenvectors need s, t > 0, r sin(theta) > 0 and s t < r^2 sin^2 theta".into(),
        ));
    }
    let qt = (-p.discriminant()).sqrt();
    let i = c64(0.0, 1.0);
    let norm = 1.0 / ((p.s + p.t) * g + (p.s - p.t) * qt).sqrt();
    let e_half = C64::from_polar(1.0, p.phi / 2.0);
    let lower = ComplexVector::new(vec![
        -i * norm * i * (p.s * (g - qt)).sqrt() * e_half,
        -i * norm * (p.t * (g + qt)).sqrt() * e_half.conj(),
    ])?;
    let upper = ComplexVector::new(vec![
        i * norm * (p.s * (g + qt)).sqrt() * e_half,
        i * norm * -i * (p.t * (g - qt)).sqrt() * e_half.conj(),
    ])?;
    let centre = p.r * p.theta.cos();
    Ok([(c64(centre, -qt), lower), (c64(centre, qt), upper)])
}

pub fn pt_matrix(p: &PtParams) -> Result<ModelInstance> {
    p.validate()?;
    let tol = Tolerances::default();
    let h = pt_hamiltonian(p);
    let s = pt_similarity(p);
    let phase = p.classification();
    let unbroken = pt_unbroken_eigenvectors(p).ok();

    let analytic_metric =
        match (&unbroken, phase) {
            (Some(_), Classification::Unbroken) => Some(MetricOperator::new(
                &h,
                pt_metric(p),
                MetricMethod::Analytic,
                &tol,
            )?),
            // r sin(theta) = 0 with s = t: Hermitian, metric I
            _ if phase == Classification::Unbroken && p.s + p.t != 0.0 => Some(
                MetricOperator::new(&h, pt_metric(p), MetricMethod::Analytic, &tol)?,
            ),
            _ => None,
        };
    let das_data = match &unbroken {
        Some([(e_minus, minus), (e_plus, plus)]) => Some(DasData {
            reference_metric: normalized_reference(&s, minus)?,
            generators: vec![
                Generator {
                    energy: *e_minus,
                    sigma: ComplexMatrix::identity(2),
                },
                Generator {
                    energy: *e_plus,
                    sigma: swap_generator(plus, minus, &tol)?,
                },
            ],
        }),
        None => None,
    };
    let analytic_right = match (&unbroken, pt_broken_eigenvectors(p)) {
        (Some(pairs), _) => Some(pairs.iter().map(|(_, v)| v.clone()).collect()),
        (None, Ok(pairs)) => Some(pairs.iter().map(|(_, v)| v.clone()).collect()),
        _ => None,
    };
    Ok(ModelInstance {
        hamiltonian: h,
        similarity: s,
        analytic_eigenvalues: p.eigenvalues().to_vec(),
        analytic_right,
        analytic_metric,
        das_data,
        normalization: Normalization::UnitLeft,
        phase,
    })
}
