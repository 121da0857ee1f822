//! Time evolution under a metric inner product, and discrimination of two
//! nearly parallel entangled states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::linalg::jacobi::hermitian_spectrum_unchecked;
use crate::linalg::matrix::{c64, complex_pair, ComplexMatrix, ComplexVector, C64};
use crate::linalg::ExpPlan;
use crate::models::{jc_full, JcParams};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub states: Vec<ComplexVector>,
    /// `sqrt(<psi|m|psi>)`.
    pub metric_norms: Vec<f64>,
    pub standard_norms: Vec<f64>,
}

fn max_relative_deviation(norms: &[f64]) -> f64 {
    let Some(&first) = norms.first() else {
        return 0.0;
    };
    let dev = norms.iter().map(|n| (n - first).abs()).fold(0.0, f64::max);
    if first > 0.0 {
        dev / first
    } else {
        dev
    }
}

impl EvolutionRecord {
    /// `max_t |n(t) - n(0)| / n(0)` for the metric norm.
    pub fn max_metric_deviation(&self) -> f64 {
        max_relative_deviation(&self.metric_norms)
    }

    pub fn max_standard_deviation(&self) -> f64 {
        max_relative_deviation(&self.standard_norms)
    }

    /// Least-squares slope of `ln ||psi(t)||` over samples with
    /// `from <= t <= to`. `None` with fewer than two samples.
    pub fn growth_rate(&self, from: f64, to: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.standard_norms)
            .filter(|(t, n)| **t >= from && **t <= to && **n > 0.0)
            .map(|(t, n)| (*t, n.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }

    /// Columns `t`, `re_i`/`im_i` per component, `metric_norm`, `standard_norm`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let dim = self.states.first().map_or(0, ComplexVector::dim);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for i in 0..dim {
            header.push(format!("re_{i}"));
            header.push(format!("im_{i}"));
        }
        header.push("metric_norm".into());
        header.push("standard_norm".into());
        w.write_record(&header).map_err(csv_err)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![fmt_f64(*t)];
            for z in self.states[k].entries() {
                row.push(fmt_f64(z.re));
                row.push(fmt_f64(z.im));
            }
            row.push(fmt_f64(self.metric_norms[k]));
            row.push(fmt_f64(self.standard_norms[k]));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidParams(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::InvalidParams(format!("csv write failed: {e}"))
}

/// `t_k = to * k / (count - 1)`.
pub fn time_grid(to: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|k| to * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// `psi(t) = exp(-i t H / hbar) psi0`, each time computed directly from `psi0`.
/// Norms are taken against `metric` and against the identity.
pub fn evolve(
    h: &ComplexMatrix,
    psi0: &ComplexVector,
    times: &[f64],
    metric: &ComplexMatrix,
    hbar: f64,
    tol: &Tolerances,
) -> Result<EvolutionRecord> {
    let n = h.require_square()?;
    if psi0.dim() != n {
        return Err(Error::mismatch(n, psi0.dim()));
    }
    if metric.require_square()? != n {
        return Err(Error::mismatch(
            format!("{n}x{n}"),
            format!("{}x{}", metric.rows(), metric.cols()),
        ));
    }
    if !(hbar.is_finite() && hbar > 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams(
            "hbar must be positive and times finite".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("times must be ascending".into()));
    }
    let plan = ExpPlan::new(h, tol)?;
    let states: Vec<ComplexVector> = times
        .par_iter()
        .map(|&t| plan.apply(c64(0.0, -t / hbar), psi0))
        .collect::<Result<_>>()?;
    let mut metric_norms = Vec::with_capacity(states.len());
    let mut standard_norms = Vec::with_capacity(states.len());
    for s in &states {
        let q = s.dot(&metric.mul_vec(s)?).re;
        metric_norms.push(q.max(0.0).sqrt());
        standard_norms.push(s.norm());
    }
    Ok(EvolutionRecord {
        times: times.to_vec(),
        states,
        metric_norms,
        standard_norms,
    })
}

/// Two entangled states over the basis
/// `{|0,+1/2>, |1,-1/2>, |0,-1/2>, |1,+1/2>}` at angles `theta` and
/// `theta + 2 eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangledPair {
    pub psi1: ComplexVector,
    pub psi2: ComplexVector,
    pub theta: f64,
    pub eps: f64,
}

pub const PAIR_BASIS: [&str; 4] = ["|0,+1/2>", "|1,-1/2>", "|0,-1/2>", "|1,+1/2>"];

fn entangled_state(angle: f64) -> ComplexVector {
    let (s, c) = (angle / 2.0).sin_cos();
    let a = c / 2f64.sqrt();
    let b = s / 2f64.sqrt();
    ComplexVector::from_real(&[a, a, b, b]).expect("finite angle")
}

/// The two states overlap by `cos(eps)`.
pub fn build_entangled_pair(theta: f64, eps: f64) -> EntangledPair {
    if eps.abs() > 0.1 {
        log::warn!("eps = {eps} is not small; the pair is far from parallel");
    }
    EntangledPair {
        psi1: entangled_state(theta),
        psi2: entangled_state(theta + 2.0 * eps),
        theta,
        eps,
    }
}

/// The 4x4 metric in the pair basis, assembled from the spin-oscillator
/// blocks: the doublet-0 block on `{|0,+1/2>, |1,-1/2>}`, the ground-state
/// entry on `|0,-1/2>` and the first diagonal entry of the doublet-1 block
/// on `|1,+1/2>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetricLayout {
    pub doublet0: ComplexMatrix,
    #[serde(with = "complex_pair")]
    pub ground: C64,
    #[serde(with = "complex_pair")]
    pub partner: C64,
}

impl PairMetricLayout {
    /// Closed-form doublet-0 block `[[1, -sin], [-sin, 1]]`. The doublet-1
    /// block contributes only its unit diagonal entry.
    pub fn from_sin_theta(sin0: f64) -> Self {
        PairMetricLayout {
            doublet0: crate::models::jc_metric_block(sin0),
            ground: c64(1.0, 0.0),
            partner: c64(1.0, 0.0),
        }
    }

    /// Restrict a metric over the basis
    /// `{|0,-1/2>, |0,+1/2>, |1,-1/2>, |1,+1/2>, |2,-1/2>}`.
    pub fn restrict(full: &ComplexMatrix) -> Result<Self> {
        if full.require_square()? != 5 {
            return Err(Error::mismatch(
                "5x5",
                format!("{}x{}", full.rows(), full.cols()),
            ));
        }
        Ok(PairMetricLayout {
            doublet0: full.block(1, 1, 2, 2),
            ground: full[(0, 0)],
            partner: full[(3, 3)],
        })
    }

    /// Spectral metric of the two-doublet model, restricted to the pair basis.
    pub fn from_jc(p: &JcParams, tol: &Tolerances) -> Result<Self> {
        let model = jc_full(p, 2)?;
        PairMetricLayout::restrict(&model.spectral_metric(tol)?.matrix)
    }

    pub fn assemble(&self) -> ComplexMatrix {
        ComplexMatrix::block_diag(&[
            self.doublet0.clone(),
            ComplexMatrix::diagonal(&[self.ground]),
            ComplexMatrix::diagonal(&[self.partner]),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    #[serde(with = "complex_pair")]
    pub standard_overlap: C64,
    #[serde(with = "complex_pair")]
    pub metric_overlap: C64,
    /// `|standard|^2 - |metric|^2`; positive when the metric separates the states.
    pub distinguishability_gain: f64,
}

/// Raises unless `m` is Hermitian and positive definite.
pub fn require_positive_metric(m: &ComplexMatrix, tol: &Tolerances) -> Result<()> {
    m.require_square()?;
    let mnorm = m.norm();
    let herm = (m - &m.adjoint()).norm();
    if herm > tol.herm_tol * mnorm {
        return Err(Error::NotHermitian {
            residual: herm / mnorm,
        });
    }
    let min = hermitian_spectrum_unchecked(m)[0];
    if min.is_nan() || min <= tol.pos_tol * mnorm {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

fn normalized_overlap(
    a: &ComplexVector,
    b: &ComplexVector,
    ma: &ComplexVector,
    mb: &ComplexVector,
) -> C64 {
    let aa = a.dot(ma).re;
    let bb = b.dot(mb).re;
    a.dot(mb) / (aa * bb).sqrt()
}

/// Overlaps of the pair under the standard and the metric inner products.
pub fn discriminate(
    pair: &EntangledPair,
    metric: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<Discrimination> {
    if metric.require_square()? != pair.psi1.dim() {
        return Err(Error::mismatch(
            format!("{0}x{0}", pair.psi1.dim()),
            format!("{}x{}", metric.rows(), metric.cols()),
        ));
    }
    require_positive_metric(metric, tol)?;
    let (a, b) = (&pair.psi1, &pair.psi2);
    let standard_overlap = normalized_overlap(a, b, a, b);
    let metric_overlap = normalized_overlap(a, b, &metric.mul_vec(a)?, &metric.mul_vec(b)?);
    Ok(Discrimination {
        standard_overlap,
        metric_overlap,
        distinguishability_gain: standard_overlap.norm_sqr() - metric_overlap.norm_sqr(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub theta: f64,
    #[serde(flatten)]
    pub result: Discrimination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityScan {
    pub eps: f64,
    pub rows: Vec<ScanRow>,
    /// Angles where the metric overlap vanishes, refined by bisection on its
    /// real part between sign changes.
    pub crossings: Vec<f64>,
}

/// Discriminate the pair at every `theta` of the grid with fixed `eps`.
pub fn orthogonality_scan(
    thetas: &[f64],
    eps: f64,
    metric: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<OrthogonalityScan> {
    require_positive_metric(metric, tol)?;
    let at = |theta: f64| discriminate(&build_entangled_pair(theta, eps), metric, tol);
    let rows: Vec<ScanRow> = thetas
        .par_iter()
        .map(|&theta| at(theta).map(|result| ScanRow { theta, result }))
        .collect::<Result<_>>()?;
    let mut crossings = Vec::new();
    for w in rows.windows(2) {
        let (fa, fb) = (w[0].result.metric_overlap.re, w[1].result.metric_overlap.re);
        if fa == 0.0 {
            crossings.push(w[0].theta);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (w[0].theta, w[1].theta, fa);
        loop {
            let mid = lo + (hi - lo) / 2.0;
            if mid <= lo.min(hi) || mid >= lo.max(hi) {
                break;
            }
            let fm = at(mid)?.metric_overlap.re;
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        crossings.push(lo + (hi - lo) / 2.0);
    }
    if let Some(last) = rows.last() {
        if last.result.metric_overlap.re == 0.0 && rows.len() > 1 {
            crossings.push(last.theta);
        }
    }
    Ok(OrthogonalityScan {
        eps,
        rows,
        crossings,
    })
}

impl OrthogonalityScan {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "theta",
            "standard_re",
            "standard_im",
            "metric_re",
            "metric_im",
            "metric_abs",
            "gain",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            let d = &r.result;
            w.write_record([
                fmt_f64(r.theta),
                fmt_f64(d.standard_overlap.re),
                fmt_f64(d.standard_overlap.im),
                fmt_f64(d.metric_overlap.re),
                fmt_f64(d.metric_overlap.im),
                fmt_f64(d.metric_overlap.norm()),
                fmt_f64(d.distinguishability_gain),
            ])
            .map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidParams(format!("csv write failed: {e}")))?;
        Ok(())
    }
}
