//! Spin-1/2 in a magnetic field coupled to an oscillator through a
//! non-Hermitian interaction. The Hamiltonian splits into a ground state
//! `|0,-1/2>` and doublets `{|n,+1/2>, |n+1,-1/2>}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{c64, ComplexMatrix, ComplexVector, C64};
use crate::metric::{Generator, MetricMethod, MetricOperator, Normalization};
use crate::models::{require_finite, sort_by_value, DasData, ModelInstance};
use crate::phase::Classification;
use crate::tolerances::Tolerances;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcParams {
    /// Doublet index.
    #[serde(default)]
    pub n: u32,
    /// Magnetic splitting.
    #[serde(alias = "eps")]
    pub epsilon: f64,
    pub omega: f64,
    pub rho: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl JcParams {
    pub fn new(n: u32, epsilon: f64, omega: f64, rho: f64) -> Self {
        JcParams {
            n,
            epsilon,
            omega,
            rho,
            hbar: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_finite(&[
            ("epsilon", self.epsilon),
            ("omega", self.omega),
            ("rho", self.rho),
            ("hbar", self.hbar),
        ])?;
        if self.omega <= 0.0 || self.hbar <= 0.0 {
            return Err(Error::InvalidParams(
                "omega and hbar must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `hbar omega - epsilon`.
    pub fn detuning(&self) -> f64 {
        self.hbar * self.omega - self.epsilon
    }

    /// Off-diagonal magnitude `rho sqrt(n+1)`.
    pub fn coupling(&self) -> f64 {
        self.rho * (self.n as f64 + 1.0).sqrt()
    }

    /// `(hbar omega - epsilon)^2 - 4 rho^2 (n+1)`; positive in the unbroken phase.
    pub fn discriminant(&self) -> f64 {
        let d = self.detuning();
        let g = self.coupling();
        d * d - 4.0 * g * g
    }

    pub fn classification(&self) -> Classification {
        if self.coupling() == 0.0 {
            return Classification::Unbroken;
        }
        let d = self.detuning();
        let g = self.coupling();
        Classification::from_discriminant(self.discriminant(), d * d + 4.0 * g * g)
    }

    /// `sin(theta) = 2 rho sqrt(n+1) / (hbar omega - epsilon)`, defined in the
    /// unbroken phase.
    pub fn sin_theta(&self) -> Option<f64> {
        if self.coupling() == 0.0 {
            return Some(0.0);
        }
        let s = 2.0 * self.coupling() / self.detuning();
        (s.abs() <= 1.0).then_some(s)
    }

    fn centre(&self) -> f64 {
        0.5 * (2.0 * self.n as f64 + 1.0) * self.hbar * self.omega
    }

    /// `1/2 [(2n+1) hbar omega -+ sqrt(discriminant)]`, sorted.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let root = c64(self.discriminant(), 0.0).sqrt() * 0.5;
        let mut v = [
            c64(self.centre(), 0.0) - root,
            c64(self.centre(), 0.0) + root,
        ];
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }
}

/// Doublet block in the basis `{|n,+1/2>, |n+1,-1/2>}`.
pub fn jc_hamiltonian(p: &JcParams) -> ComplexMatrix {
    let nf = p.n as f64;
    let g = p.coupling();
    ComplexMatrix::from_real_rows(&[
        [p.epsilon / 2.0 + nf * p.hbar * p.omega, g],
        [-g, -p.epsilon / 2.0 + (nf + 1.0) * p.hbar * p.omega],
    ])
    .expect("finite parameters")
}

/// Closed-form doublet metric `[[1, -sin], [-sin, 1]]`.
pub fn jc_metric_block(sin_theta: f64) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[[1.0, -sin_theta], [-sin_theta, 1.0]]).expect("finite")
}

fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diagonal(&[c64(1.0, 0.0), c64(-1.0, 0.0)])
}

fn swap() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).expect("finite")
}

/// Unbroken-phase closed forms for one doublet.
struct DoubletData {
    /// (energy, unit right eigenvector), sorted by energy.
    pairs: [(C64, ComplexVector); 2],
    /// Energy of the reference state `(cos theta/2, sin theta/2)`.
    reference_energy: C64,
    other_energy: C64,
    cos_theta: f64,
    sin_theta: f64,
}

fn doublet_data(p: &JcParams) -> Option<DoubletData> {
    if p.classification() != Classification::Unbroken {
        return None;
    }
    let sin = p.sin_theta()?;
    let theta = sin.asin();
    let cos = theta.cos();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let d = p.detuning();
    let e_ref = c64(p.centre() - 0.5 * d * cos, 0.0);
    let e_other = c64(p.centre() + 0.5 * d * cos, 0.0);
    let mut pairs = [
        (e_ref, ComplexVector::from_real(&[c, s]).expect("finite")),
        (e_other, ComplexVector::from_real(&[s, c]).expect("finite")),
    ];
    sort_by_value(&mut pairs);
    Some(DoubletData {
        pairs,
        reference_energy: e_ref,
        other_energy: e_other,
        cos_theta: cos,
        sin_theta: sin,
    })
}

pub fn jc_doublet(p: &JcParams) -> Result<ModelInstance> {
    p.validate()?;
    let tol = Tolerances::default();
    let h = jc_hamiltonian(p);
    let data = doublet_data(p);
    let analytic_metric = match &data {
        Some(d) => Some(MetricOperator::new(
            &h,
            jc_metric_block(d.sin_theta),
            MetricMethod::Analytic,
            &tol,
        )?),
        None => None,
    };
    let das_data = data.as_ref().map(|d| DasData {
        // S / <psi_ref|S|psi_ref> with psi_ref scaled for unit left partner
        reference_metric: sigma_z().scale_real(d.cos_theta),
        generators: vec![
            Generator {
                energy: d.reference_energy,
                sigma: ComplexMatrix::identity(2),
            },
            Generator {
                energy: d.other_energy,
                sigma: swap(),
            },
        ],
    });
    Ok(ModelInstance {
        hamiltonian: h,
        similarity: sigma_z(),
        analytic_eigenvalues: p.eigenvalues().to_vec(),
        analytic_right: data.map(|d| d.pairs.iter().map(|(_, v)| v.clone()).collect()),
        analytic_metric,
        das_data,
        normalization: Normalization::UnitLeft,
        phase: p.classification(),
    })
}

/// Ground state plus `levels` doublets, basis
/// `{|0,-1/2>} U {|n,+1/2>, |n+1,-1/2>}` for `n = 0..levels`. The `n` field
/// of `p` is ignored.
pub fn jc_full(p: &JcParams, levels: usize) -> Result<ModelInstance> {
    p.validate()?;
    if levels == 0 {
        return Err(Error::InvalidParams("levels must be at least 1".into()));
    }
    let tol = Tolerances::default();
    let dim = 2 * levels + 1;
    let blocks: Vec<JcParams> = (0..levels)
        .map(|n| JcParams { n: n as u32, ..*p })
        .collect();
    let ground = c64(-p.epsilon / 2.0, 0.0);

    let mut h_blocks = vec![ComplexMatrix::diagonal(&[ground])];
    let mut s_blocks = vec![ComplexMatrix::diagonal(&[c64(-1.0, 0.0)])];
    h_blocks.extend(blocks.iter().map(jc_hamiltonian));
    s_blocks.extend(blocks.iter().map(|_| sigma_z()));
    let h = ComplexMatrix::block_diag(&h_blocks);
    let s = ComplexMatrix::block_diag(&s_blocks);

    let phase = blocks
        .iter()
        .map(JcParams::classification)
        .fold(Classification::Unbroken, Classification::worst);

    let mut eigenvalues = vec![ground];
    eigenvalues.extend(blocks.iter().flat_map(|b| b.eigenvalues()));
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let data: Option<Vec<DoubletData>> = blocks.iter().map(doublet_data).collect();
    let mut analytic_metric = None;
    let mut das_data = None;
    let mut analytic_right = None;
    if let Some(data) = data {
        let mut m_blocks = vec![ComplexMatrix::identity(1)];
        m_blocks.extend(data.iter().map(|d| jc_metric_block(d.sin_theta)));
        analytic_metric = Some(MetricOperator::new(
            &h,
            ComplexMatrix::block_diag(&m_blocks),
            MetricMethod::Analytic,
            &tol,
        )?);

        // the ground entry of q0 is <0,-1/2|sigma_z|0,-1/2> = -1; its phase
        // c_E flips it positive
        let mut q_blocks = vec![ComplexMatrix::diagonal(&[c64(-1.0, 0.0)])];
        q_blocks.extend(data.iter().map(|d| sigma_z().scale_real(d.cos_theta)));
        let mut generators = vec![Generator {
            energy: ground,
            sigma: ComplexMatrix::identity(dim),
        }];
        for (k, d) in data.iter().enumerate() {
            generators.push(Generator {
                energy: d.reference_energy,
                sigma: ComplexMatrix::identity(dim),
            });
            let mut sigma_blocks: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(1)];
            for j in 0..levels {
                sigma_blocks.push(if j == k {
                    swap()
                } else {
                    ComplexMatrix::identity(2)
                });
            }
            generators.push(Generator {
                energy: d.other_energy,
                sigma: ComplexMatrix::block_diag(&sigma_blocks),
            });
        }
        das_data = Some(DasData {
            reference_metric: ComplexMatrix::block_diag(&q_blocks),
            generators,
        });

        let mut pairs: Vec<(C64, ComplexVector)> = vec![(ground, ComplexVector::basis(dim, 0))];
        for (k, d) in data.iter().enumerate() {
            for (e, v) in &d.pairs {
                let mut full = ComplexVector::zeros(dim);
                full[1 + 2 * k] = v[0];
                full[2 + 2 * k] = v[1];
                pairs.push((*e, full));
            }
        }
        sort_by_value(&mut pairs);
        analytic_right = Some(pairs.into_iter().map(|(_, v)| v).collect());
    }

    Ok(ModelInstance {
        hamiltonian: h,
        similarity: s,
        analytic_eigenvalues: eigenvalues,
        analytic_right,
        analytic_metric,
        das_data,
        normalization: Normalization::UnitLeft,
        phase,
    })
}
