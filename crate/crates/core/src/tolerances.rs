use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every numerical threshold used by the crate. All values are relative
/// unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigenpair residual, relative to ||M||.
    pub eig_tol: f64,
    /// Accepted ||M M^-1 - I||.
    pub inv_tol: f64,
    /// Anti-Hermitian part relative to ||M||.
    pub herm_tol: f64,
    /// Minimum normalized left/right overlap before a system is called defective.
    pub defect_tol: f64,
    /// Taylor truncation for the matrix exponential.
    pub exp_tol: f64,
    /// Conjugate-eigenvalue matching between M and M^dag, relative to ||M||.
    pub match_tol: f64,
    /// Eigenvalues closer than this (relative to the spectral scale) form a cluster.
    pub cluster_tol: f64,
    /// |Im E| above this (relative to ||H||) means the spectrum is not real.
    pub real_tol: f64,
    /// Metric is positive when its smallest eigenvalue exceeds this times ||m||.
    pub pos_tol: f64,
    /// Metric comparison threshold.
    pub cmp_tol: f64,
    /// Biorthonormality and completeness residual.
    pub biorth_tol: f64,
    /// LU pivot threshold relative to ||M||.
    pub singular_tol: f64,
    /// Largest eigenvector-matrix condition number for the diagonal exp path.
    pub cond_max: f64,
    /// Upper bound on the exceptional-point bracket width, relative to hi - lo.
    pub ep_tol: f64,
    /// QR sweep budget per matrix dimension.
    pub qr_iters_per_dim: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_tol: 1e-8,
            inv_tol: 1e-10,
            herm_tol: 1e-10,
            defect_tol: 1e-8,
            exp_tol: 1e-12,
            match_tol: 1e-8,
            cluster_tol: 1e-7,
            real_tol: 1e-9,
            pos_tol: 1e-12,
            cmp_tol: 1e-9,
            biorth_tol: 1e-10,
            singular_tol: 1e-14,
            cond_max: 1e6,
            ep_tol: 1e-10,
            qr_iters_per_dim: 100.0,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 15] = [
        "eig_tol",
        "inv_tol",
        "herm_tol",
        "defect_tol",
        "exp_tol",
        "match_tol",
        "cluster_tol",
        "real_tol",
        "pos_tol",
        "cmp_tol",
        "biorth_tol",
        "singular_tol",
        "cond_max",
        "ep_tol",
        "qr_iters_per_dim",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "eig_tol" => &mut self.eig_tol,
            "inv_tol" => &mut self.inv_tol,
            "herm_tol" => &mut self.herm_tol,
            "defect_tol" => &mut self.defect_tol,
            "exp_tol" => &mut self.exp_tol,
            "match_tol" => &mut self.match_tol,
            "cluster_tol" => &mut self.cluster_tol,
            "real_tol" => &mut self.real_tol,
            "pos_tol" => &mut self.pos_tol,
            "cmp_tol" => &mut self.cmp_tol,
            "biorth_tol" => &mut self.biorth_tol,
            "singular_tol" => &mut self.singular_tol,
            "cond_max" => &mut self.cond_max,
            "ep_tol" => &mut self.ep_tol,
            "qr_iters_per_dim" => &mut self.qr_iters_per_dim,
            _ => return None,
        })
    }

    /// Override one tolerance by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "tolerance {name} must be finite and non-negative, got {value}"
            )));
        }
        match self.slot(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::InvalidParams(format!("unknown tolerance {name}"))),
        }
    }

    pub(crate) fn max_qr_iters(&self, n: usize) -> usize {
        ((self.qr_iters_per_dim * n as f64).ceil() as usize).max(1)
    }
}
