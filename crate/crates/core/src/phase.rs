//! Spectral phase classification, exceptional-point location and grid sweeps.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::linalg::eigensystem;
use crate::linalg::matrix::ComplexMatrix;
use crate::metric::{biorthonormalize, spectral_metric, Normalization};
use crate::models::{
    dirac::dirac_hamiltonian, dirac_scalar, jc::jc_hamiltonian, jc_doublet, jc_full,
    pt::pt_hamiltonian, pt_matrix, DiracParams, JcParams, ModelInstance, PtParams,
};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Unbroken,
    Broken,
    Exceptional,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Unbroken => "unbroken",
            Classification::Broken => "broken",
            Classification::Exceptional => "exceptional",
        }
    }

    /// Sign of an analytic discriminant; values within rounding of zero
    /// (relative to `scale`) count as exceptional.
    pub fn from_discriminant(disc: f64, scale: f64) -> Self {
        if disc.abs() <= 8.0 * f64::EPSILON * scale {
            Classification::Exceptional
        } else if disc > 0.0 {
            Classification::Unbroken
        } else {
            Classification::Broken
        }
    }

    /// Combine block phases: exceptional over broken over unbroken.
    pub fn worst(self, other: Self) -> Self {
        use Classification::*;
        match (self, other) {
            (Exceptional, _) | (_, Exceptional) => Exceptional,
            (Broken, _) | (_, Broken) => Broken,
            _ => Unbroken,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub params: IndexMap<String, f64>,
    pub classification: Option<Classification>,
    /// Largest `|Im E|` over the spectrum.
    pub min_imag_gap: Option<f64>,
    pub metric_min_eig: Option<f64>,
    pub defect_indicator: Option<f64>,
    /// Set when the point could not be evaluated.
    pub error: Option<String>,
}

impl PhasePoint {
    fn failed(params: IndexMap<String, f64>, err: &Error) -> Self {
        PhasePoint {
            params,
            classification: None,
            min_imag_gap: None,
            metric_min_eig: None,
            defect_indicator: None,
            error: Some(format!("{}: {err}", err.code())),
        }
    }
}

/// Classify the spectrum of `h`. Defectiveness takes precedence over complex
/// eigenvalues.
pub fn classify(h: &ComplexMatrix, tol: &Tolerances) -> Result<PhasePoint> {
    let sys = eigensystem(h, tol)?;
    let max_imag = sys.max_imag();
    let defect = sys.defect_indicator;
    let (classification, metric_min_eig) = if defect < tol.defect_tol {
        (Classification::Exceptional, None)
    } else if max_imag > tol.real_tol * h.norm() {
        (Classification::Broken, None)
    } else {
        let biorth = biorthonormalize(&sys.pairs, &Normalization::UnitLeft, tol)?;
        let metric = spectral_metric(&biorth, tol)?;
        (
            Classification::Unbroken,
            Some(metric.report.min_metric_eigenvalue),
        )
    };
    Ok(PhasePoint {
        params: IndexMap::new(),
        classification: Some(classification),
        min_imag_gap: Some(max_imag),
        metric_min_eig,
        defect_indicator: Some(defect),
        error: None,
    })
}

/// A one-or-more-parameter family of Hamiltonians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    JcDoublet(JcParams),
    JcFull {
        model: JcParams,
        levels: usize,
    },
    PtMatrix(PtParams),
    DiracScalar(DiracParams),
    /// `H(lambda) = H0 + lambda H1`, for user matrices.
    Linear {
        h0: ComplexMatrix,
        h1: ComplexMatrix,
        lambda: f64,
    },
}

fn as_count(name: &str, value: f64) -> Result<u32> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u32)
    } else {
        Err(Error::InvalidParams(format!(
            "{name} must be a nonnegative integer, got {value}"
        )))
    }
}

fn unknown(family: &str, name: &str) -> Error {
    Error::InvalidParams(format!("unknown parameter '{name}' for {family}"))
}

impl Family {
    pub const NAMES: [&'static str; 4] = ["jc_doublet", "jc_full", "pt_matrix", "dirac_scalar"];

    pub fn name(&self) -> &'static str {
        match self {
            Family::JcDoublet(_) => "jc_doublet",
            Family::JcFull { .. } => "jc_full",
            Family::PtMatrix(_) => "pt_matrix",
            Family::DiracScalar(_) => "dirac_scalar",
            Family::Linear { .. } => "linear",
        }
    }

    /// Build a model family from `name=value` parameters. Unspecified
    /// parameters take neutral defaults (zero, or one for `omega`, `hbar`,
    /// `c`, `levels`).
    pub fn from_params(family: &str, params: &IndexMap<String, f64>) -> Result<Self> {
        let mut f = match family {
            "jc_doublet" => Family::JcDoublet(JcParams::new(0, 0.0, 1.0, 0.0)),
            "jc_full" => Family::JcFull {
                model: JcParams::new(0, 0.0, 1.0, 0.0),
                levels: 1,
            },
            "pt_matrix" => Family::PtMatrix(PtParams {
                r: 0.0,
                s: 0.0,
                t: 0.0,
                theta: 0.0,
                phi: 0.0,
            }),
            "dirac_scalar" => Family::DiracScalar(DiracParams::new(0.0, 0.0, 0.0)),
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown model family '{other}' (expected one of {})",
                    Family::NAMES.join(", ")
                )))
            }
        };
        for (k, v) in params {
            f = f.with(k, *v)?;
        }
        Ok(f)
    }

    /// Copy with one parameter replaced.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut f = self.clone();
        match &mut f {
            Family::JcDoublet(p) => set_jc(p, name, value, "jc_doublet")?,
            Family::JcFull { model, levels } => {
                if name == "levels" {
                    *levels = as_count(name, value)? as usize;
                } else if name == "n" {
                    return Err(unknown("jc_full", name));
                } else {
                    set_jc(model, name, value, "jc_full")?;
                }
            }
            Family::PtMatrix(p) => match name {
                "r" => p.r = value,
                "s" => p.s = value,
                "t" => p.t = value,
                "theta" => p.theta = value,
                "phi" => p.phi = value,
                _ => return Err(unknown("pt_matrix", name)),
            },
            Family::DiracScalar(p) => match name {
                "m0" => p.m0 = value,
                "c" => p.c = value,
                "hbar" => p.hbar = value,
                "kx" => p.kx = value,
                "v0" => p.v0 = value,
                _ => return Err(unknown("dirac_scalar", name)),
            },
            Family::Linear { lambda, .. } => match name {
                "lambda" => *lambda = value,
                _ => return Err(unknown("linear", name)),
            },
        }
        Ok(f)
    }

    /// Current parameter values in a stable order.
    pub fn params(&self) -> IndexMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match self {
            Family::JcDoublet(p) => vec![
                ("n", p.n as f64),
                ("eps", p.epsilon),
                ("omega", p.omega),
                ("rho", p.rho),
                ("hbar", p.hbar),
            ],
            Family::JcFull { model: p, levels } => vec![
                ("eps", p.epsilon),
                ("omega", p.omega),
                ("rho", p.rho),
                ("hbar", p.hbar),
                ("levels", *levels as f64),
            ],
            Family::PtMatrix(p) => vec![
                ("r", p.r),
                ("s", p.s),
                ("t", p.t),
                ("theta", p.theta),
                ("phi", p.phi),
            ],
            Family::DiracScalar(p) => vec![
                ("m0", p.m0),
                ("c", p.c),
                ("hbar", p.hbar),
                ("kx", p.kx),
                ("v0", p.v0),
            ],
            Family::Linear { lambda, .. } => vec![("lambda", *lambda)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params().get(name).copied()
    }

    pub fn hamiltonian(&self) -> Result<ComplexMatrix> {
        match self {
            Family::JcDoublet(p) => {
                p.validate()?;
                Ok(jc_hamiltonian(p))
            }
            Family::JcFull { .. } => Ok(self.instance()?.hamiltonian),
            Family::PtMatrix(p) => {
                p.validate()?;
                Ok(pt_hamiltonian(p))
            }
            Family::DiracScalar(p) => {
                p.validate()?;
                Ok(dirac_hamiltonian(p))
            }
            Family::Linear { h0, h1, lambda } => {
                h0.same_shape(h1)?;
                Ok(h0 + &h1.scale_real(*lambda))
            }
        }
    }

    /// Analytic discriminant, positive in the unbroken phase. For `jc_full`
    /// the smallest over the doublets.
    pub fn discriminant(&self) -> Option<f64> {
        match self {
            Family::JcDoublet(p) => Some(p.discriminant()),
            Family::JcFull { model, levels } => (0..*levels)
                .map(|n| {
                    JcParams {
                        n: n as u32,
                        ..*model
                    }
                    .discriminant()
                })
                .min_by(f64::total_cmp),
            Family::PtMatrix(p) => Some(p.discriminant()),
            Family::DiracScalar(p) => Some(p.discriminant()),
            Family::Linear { .. } => None,
        }
    }

    pub fn instance(&self) -> Result<ModelInstance> {
        match self {
            Family::JcDoublet(p) => jc_doublet(p),
            Family::JcFull { model, levels } => jc_full(model, *levels),
            Family::PtMatrix(p) => pt_matrix(p),
            Family::DiracScalar(p) => dirac_scalar(p),
            Family::Linear { .. } => Err(Error::InvalidParams(
                "user matrices have no closed-form model".into(),
            )),
        }
    }
}

fn set_jc(p: &mut JcParams, name: &str, value: f64, family: &str) -> Result<()> {
    match name {
        "n" => p.n = as_count(name, value)?,
        "eps" | "epsilon" => p.epsilon = value,
        "omega" => p.omega = value,
        "rho" => p.rho = value,
        "hbar" => p.hbar = value,
        _ => return Err(unknown(family, name)),
    }
    Ok(())
}

/// Classify one family member, recording its parameters.
pub fn classify_family(family: &Family, tol: &Tolerances) -> Result<PhasePoint> {
    let h = family.hamiltonian()?;
    let mut point = classify(&h, tol)?;
    point.params = family.params();
    Ok(point)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub value: f64,
    /// Final bracket; its width is at most `ep_tol * (hi - lo)`.
    pub bracket: (f64, f64),
    /// Analytic discriminant at `value`, when the family has one.
    pub discriminant: Option<f64>,
    pub iterations: usize,
}

/// Locate the unbroken/broken transition of `param` in `[lo, hi]` by
/// bisection, on the analytic discriminant when available and otherwise on
/// `real_tol ||H|| - max |Im E|`. Bisection runs until the bracket stops
/// shrinking in floating point.
pub fn find_exceptional(
    family: &Family,
    param: &str,
    lo: f64,
    hi: f64,
    tol: &Tolerances,
) -> Result<ExceptionalPoint> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParams(format!(
            "need finite lo < hi, got [{lo}, {hi}]"
        )));
    }
    family
        .get(param)
        .ok_or_else(|| unknown(family.name(), param))?;
    let at = |x: f64| family.with(param, x);
    let class_lo = classify_family(&at(lo)?, tol)?
        .classification
        .expect("classified");
    let class_hi = classify_family(&at(hi)?, tol)?
        .classification
        .expect("classified");
    if class_lo == class_hi {
        return Err(Error::NoBracket {
            lo,
            hi,
            classification: class_lo.name().to_string(),
        });
    }
    let indicator = |x: f64| -> Result<f64> {
        let f = at(x)?;
        match f.discriminant() {
            Some(d) => Ok(d),
            None => {
                let h = f.hamiltonian()?;
                let sys = eigensystem(&h, tol)?;
                Ok(tol.real_tol * h.norm() - sys.max_imag())
            }
        }
    };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (indicator(a)?, indicator(b)?);
    let mut iterations = 0;
    if fa == 0.0 || fb == 0.0 {
        let value = if fa == 0.0 { a } else { b };
        return Ok(ExceptionalPoint {
            value,
            bracket: (value, value),
            discriminant: at(value)?.discriminant(),
            iterations,
        });
    }
    if fa.signum() == fb.signum() {
        // classifications differ only through the exceptional endpoint or
        // numeric noise; the indicator has no sign change to follow
        return Err(Error::NoBracket {
            lo,
            hi,
            classification: format!("{} / {}", class_lo.name(), class_hi.name()),
        });
    }
    while iterations < 2000 {
        let mid = a + (b - a) / 2.0;
        if mid <= a || mid >= b {
            break;
        }
        iterations += 1;
        let fm = indicator(mid)?;
        if fm == 0.0 {
            a = mid;
            b = mid;
            fa = 0.0;
            fb = 0.0;
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    let value = if fa.abs() <= fb.abs() { a } else { b };
    debug_assert!(b - a <= tol.ep_tol * (hi - lo));
    Ok(ExceptionalPoint {
        value,
        bracket: (a, b),
        discriminant: at(value)?.discriminant(),
        iterations,
    })
}

/// One grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    /// `count` evenly spaced values `start + (stop - start) i / (count - 1)`.
    pub fn linspace(name: &str, start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParams(format!(
                "bad axis {name}={start}:{stop}:{count}"
            )));
        }
        let values = if count == 1 {
            vec![start]
        } else {
            (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect()
        };
        Ok(Axis {
            name: name.to_string(),
            values,
        })
    }

    /// Parse `name=start:stop:count` or `name=value`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParams(format!(
                "malformed axis '{spec}', expected name=start:stop:count"
            ))
        };
        let (name, range) = spec.split_once('=').ok_or_else(bad)?;
        let name = name.trim();
        if name.is_empty() {
            return Err(bad());
        }
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            [v] => Axis::linspace(name, num(v)?, num(v)?, 1),
            [a, b, n] => {
                let count: usize = n.parse().map_err(|_| bad())?;
                Axis::linspace(name, num(a)?, num(b)?, count).map_err(|_| bad())
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub axes: Vec<Axis>,
    /// Row-major: the last axis varies fastest.
    pub points: Vec<PhasePoint>,
}

/// A classification change between neighbouring grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub axis: String,
    pub lo: f64,
    pub hi: f64,
    pub from: Classification,
    pub to: Classification,
    /// Values of the other axes on this line.
    pub at: IndexMap<String, f64>,
}

/// Classify every grid point in parallel. Failures are recorded per point.
pub fn sweep(family: &Family, axes: &[Axis], tol: &Tolerances) -> Result<PhaseDiagram> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::InvalidParams(
            "sweep needs at least one non-empty axis".into(),
        ));
    }
    for a in axes {
        family
            .get(&a.name)
            .ok_or_else(|| unknown(family.name(), &a.name))?;
    }
    let shape: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
    let total: usize = shape.iter().product();
    let points = (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = unravel(flat, &shape);
            let mut f = Ok(family.clone());
            for (axis, &i) in axes.iter().zip(&idx) {
                f = f.and_then(|f| f.with(&axis.name, axis.values[i]));
            }
            let params = || {
                let mut p = family.params();
                for (axis, &i) in axes.iter().zip(&idx) {
                    p.insert(axis.name.clone(), axis.values[i]);
                }
                p
            };
            match f.and_then(|f| classify_family(&f, tol)) {
                Ok(point) => point,
                Err(e) => PhasePoint::failed(params(), &e),
            }
        })
        .collect();
    Ok(PhaseDiagram {
        axes: axes.to_vec(),
        points,
    })
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

impl PhaseDiagram {
    fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    /// Classification changes along every axis-aligned grid line.
    pub fn boundaries(&self) -> Vec<Boundary> {
        let shape = self.shape();
        let mut out = Vec::new();
        for (k, axis) in self.axes.iter().enumerate() {
            for flat in 0..self.points.len() {
                let idx = unravel(flat, &shape);
                if idx[k] + 1 >= shape[k] {
                    continue;
                }
                let mut next = idx.clone();
                next[k] += 1;
                let a = &self.points[flat];
                let b = &self.points[ravel(&next, &shape)];
                if let (Some(ca), Some(cb)) = (a.classification, b.classification) {
                    if ca != cb {
                        let at = self
                            .axes
                            .iter()
                            .zip(&idx)
                            .enumerate()
                            .filter(|(j, _)| *j != k)
                            .map(|(_, (ax, &i))| (ax.name.clone(), ax.values[i]))
                            .collect();
                        out.push(Boundary {
                            axis: axis.name.clone(),
                            lo: axis.values[idx[k]],
                            hi: axis.values[next[k]],
                            from: ca,
                            to: cb,
                            at,
                        });
                    }
                }
            }
        }
        out
    }

    /// One row per point: axis values, classification, `min_imag_gap`,
    /// `metric_min_eig`, `defect_indicator`, error.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.axes.iter().map(|a| a.name.clone()).collect();
        header.extend(
            [
                "classification",
                "min_imag_gap",
                "metric_min_eig",
                "defect_indicator",
                "error",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        w.write_record(&header).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for p in &self.points {
            let mut row: Vec<String> = self
                .axes
                .iter()
                .map(|a| fmt_f64(p.params[&a.name]))
                .collect();
            row.push(
                p.classification
                    .map(|c| c.name().to_string())
                    .unwrap_or_default(),
            );
            row.push(opt(p.min_imag_gap));
            row.push(opt(p.metric_min_eig));
            row.push(opt(p.defect_indicator));
            row.push(p.error.clone().unwrap_or_default());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidParams(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidParams(format!("csv write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{c64, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jc(rho: f64) -> Family {
        Family::JcDoublet(JcParams::new(0, 0.5, 1.0, rho))
    }

    fn class_of(f: &Family) -> Classification {
        classify_family(f, &Tolerances::default())
            .unwrap()
            .classification
            .unwrap()
    }

    #[test]
    fn jc_classification() {
        assert_eq!(class_of(&jc(0.125)), Classification::Unbroken);
        assert_eq!(class_of(&jc(0.3)), Classification::Broken);
        assert_eq!(class_of(&jc(0.25)), Classification::Exceptional);
    }

    #[test]
    fn metric_min_eig_tracks_closed_form() {
        let mut last = f64::INFINITY;
        for k in 0..24 {
            let rho = 0.01 * k as f64;
            let p = classify_family(&jc(rho), &Tolerances::default()).unwrap();
            let sin = 2.0 * rho / 0.5;
            let m = p.metric_min_eig.unwrap();
            assert!(m > 0.0);
            assert!((m - (1.0 - sin)).abs() < 1e-10, "rho={rho}");
            assert!(m <= last);
            last = m;
        }
    }

    #[test]
    fn exceptional_points_by_bisection() {
        let tol = Tolerances::default();
        let ep = find_exceptional(&jc(0.0), "rho", 0.0, 1.0, &tol).unwrap();
        assert!((ep.value - 0.25).abs() < 1e-12);
        assert!(ep.discriminant.unwrap().abs() < 1e-8);
        assert!(ep.bracket.1 - ep.bracket.0 <= tol.ep_tol);

        let dirac = Family::DiracScalar(DiracParams::new(1.0, 0.0, 0.0));
        let ep = find_exceptional(&dirac, "v0", 0.0, 2.0, &tol).unwrap();
        assert!((ep.value - 1.0).abs() < 1e-12);

        let pt = Family::PtMatrix(PtParams {
            r: 1.0,
            s: 1.0,
            t: 1.0,
            theta: std::f64::consts::FRAC_PI_2,
            phi: 0.0,
        });
        let ep = find_exceptional(&pt, "s", 0.1, 2.0, &tol).unwrap();
        assert!((ep.value - 1.0).abs() < 1e-12);
        // eigenvalues coalesce at the reported point
        let h = pt.with("s", ep.value).unwrap().hamiltonian().unwrap();
        let v = crate::linalg::eigenvalues(&h, &tol).unwrap();
        assert!((v[0] - v[1]).norm() < 1e-6 * h.norm());
    }

    #[test]
    fn numeric_fallback_for_user_family() {
        let tol = Tolerances::default();
        // H(lambda) = [[0, 1], [lambda, 0]]: EP at lambda = 0
        let h0 = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let h1 = ComplexMatrix::from_real_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let f = Family::Linear {
            h0,
            h1,
            lambda: 0.0,
        };
        let ep = find_exceptional(&f, "lambda", -0.7, 1.3, &tol).unwrap();
        assert!(ep.value.abs() < 1e-8, "{ep:?}");
        assert!(ep.discriminant.is_none());
    }

    #[test]
    fn no_bracket_when_same_side() {
        let err = find_exceptional(&jc(0.0), "rho", 0.0, 0.1, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn jc_sweep_boundaries() {
        let tol = Tolerances::default();
        let axes = vec![
            Axis::linspace("rho", 0.0, 0.5, 6).unwrap(),
            Axis::parse("n=0:1:2").unwrap(),
        ];
        let d = sweep(&jc(0.0), &axes, &tol).unwrap();
        assert_eq!(d.points.len(), 12);
        // row-major: n fastest
        assert_eq!(d.points[1].params["n"], 1.0);
        assert_eq!(d.points[2].params["rho"], 0.1);
        for p in &d.points {
            let rho_c = 0.25 / (p.params["n"] + 1.0).sqrt();
            let expected = if p.params["rho"] < rho_c {
                Classification::Unbroken
            } else {
                Classification::Broken
            };
            assert_eq!(p.classification, Some(expected), "{:?}", p.params);
        }
        let b = d.boundaries();
        let along_rho: Vec<_> = b.iter().filter(|b| b.axis == "rho").collect();
        assert_eq!(along_rho.len(), 2);
        for b in along_rho {
            let rho_c = 0.25 / (b.at["n"] + 1.0).sqrt();
            assert!(b.lo < rho_c && rho_c <= b.hi);
        }
    }

    #[test]
    fn single_point_sweep_is_classify() {
        let tol = Tolerances::default();
        let d = sweep(&jc(0.0), &[Axis::parse("rho=0.125").unwrap()], &tol).unwrap();
        assert_eq!(d.points.len(), 1);
        let direct = classify_family(&jc(0.125), &tol).unwrap();
        assert_eq!(d.points[0], direct);
    }

    #[test]
    fn dirac_sweep_region() {
        let tol = Tolerances::default();
        let axes = vec![
            Axis::parse("kx=0:2:5").unwrap(),
            Axis::parse("v0=0:2:9").unwrap(),
        ];
        let d = sweep(
            &Family::DiracScalar(DiracParams::new(1.0, 0.0, 0.0)),
            &axes,
            &tol,
        )
        .unwrap();
        for p in &d.points {
            let (k, v) = (p.params["kx"], p.params["v0"]);
            let c = p.classification.unwrap();
            let margin = v * v - k * k - 1.0;
            if margin > 1e-9 {
                assert_eq!(c, Classification::Broken, "kx={k} v0={v}");
            } else if margin < -1e-9 {
                assert_eq!(c, Classification::Unbroken, "kx={k} v0={v}");
            } else {
                assert_eq!(c, Classification::Exceptional, "kx={k} v0={v}");
            }
        }
    }

    #[test]
    fn per_point_errors_do_not_abort() {
        let tol = Tolerances::default();
        let d = sweep(&jc(0.1), &[Axis::parse("omega=-1:1:3").unwrap()], &tol).unwrap();
        assert!(d.points[0]
            .error
            .as_deref()
            .unwrap()
            .starts_with("invalid_params"));
        assert!(d.points[2].error.is_none());
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with(
            "omega,classification,min_imag_gap,metric_min_eig,defect_indicator,error"
        ));
    }

    #[test]
    fn sweep_is_deterministic() {
        let tol = Tolerances::default();
        let axes = vec![Axis::parse("rho=0:0.5:26").unwrap()];
        let a = sweep(&jc(0.0), &axes, &tol).unwrap();
        let b = sweep(&jc(0.0), &axes, &tol).unwrap();
        let serial: Vec<PhasePoint> = axes[0]
            .values
            .iter()
            .map(|&r| classify_family(&jc(r), &tol).unwrap())
            .collect();
        assert_eq!(a, b);
        assert_eq!(a.points, serial);
    }

    #[test]
    fn malformed_axes() {
        for bad in [
            "rho",
            "=0:1:2",
            "rho=0:1",
            "rho=a:1:2",
            "rho=0:1:0",
            "rho=0:1:-3",
        ] {
            assert!(Axis::parse(bad).is_err(), "{bad}");
        }
    }

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        // Gram-Schmidt on a random complex matrix
        let mut cols: Vec<crate::linalg::ComplexVector> = Vec::new();
        while cols.len() < n {
            let mut v = crate::linalg::ComplexVector::from_fn(n, |_| {
                c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            for c in &cols {
                let p: C64 = c.dot(&v);
                v.axpy(-p, c);
            }
            cols.push(v.normalized());
        }
        ComplexMatrix::from_columns(&cols).unwrap()
    }

    #[test]
    fn unitary_invariance() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for rho in [0.05, 0.125, 0.2, 0.3, 0.6] {
            let full = Family::JcFull {
                model: JcParams::new(0, 0.5, 1.0, rho),
                levels: 2,
            };
            let h = full.hamiltonian().unwrap();
            let base = classify(&h, &tol).unwrap().classification;
            for _ in 0..5 {
                let u = random_unitary(5, &mut rng);
                let rotated = &(&u.adjoint() * &h) * &u;
                assert_eq!(
                    classify(&rotated, &tol).unwrap().classification,
                    base,
                    "rho={rho}"
                );
            }
        }
    }
}
