use indexmap::IndexMap;
use metricforge_core::metric::das::DasConstruction;
use metricforge_core::models::DasData;
use metricforge_core::{ComplexMatrix, ComplexVector, Error, Family, Tolerances};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default)]
    pub params: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub h: ComplexMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<ComplexMatrix>,
    /// Candidate metric for `validate` and `compare`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<ComplexMatrix>,
    /// Reference metric and generators for the generator-based construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub das: Option<DasData>,
}

/// Exactly one of `model` and `matrix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
}

/// A validated input.
#[derive(Debug, Clone)]
pub enum Source {
    Model(Family),
    Matrix(MatrixSpec),
}

impl Source {
    pub fn hamiltonian(&self) -> Result<ComplexMatrix, CliError> {
        match self {
            Source::Model(f) => Ok(f.hamiltonian()?),
            Source::Matrix(m) => Ok(m.h.clone()),
        }
    }

    /// Canonical document: models are echoed with every parameter filled in.
    pub fn document(&self) -> InputDocument {
        match self {
            Source::Model(f) => InputDocument {
                model: Some(ModelSpec {
                    family: f.name().to_string(),
                    params: f.params(),
                }),
                matrix: None,
            },
            Source::Matrix(m) => InputDocument {
                model: None,
                matrix: Some(m.clone()),
            },
        }
    }
}

/// Parse `a=1,b=2` into an ordered map.
pub fn parse_assignments(text: &str, what: &str) -> Result<IndexMap<String, f64>, CliError> {
    let mut out = IndexMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| {
            CliError::parse(format!("malformed {what} '{item}', expected name=value"))
        })?;
        let value: f64 = v.trim().parse().map_err(|_| {
            CliError::parse(format!(
                "{what} {}: '{}' is not a number",
                k.trim(),
                v.trim()
            ))
        })?;
        if out.insert(k.trim().to_string(), value).is_some() {
            return Err(CliError::parse(format!("{what} {} given twice", k.trim())));
        }
    }
    Ok(out)
}

pub fn tolerances(overrides: &[String]) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    for text in overrides {
        for (name, value) in parse_assignments(text, "tolerance")? {
            tol.set(&name, value)
                .map_err(|e| CliError::parse(e.to_string()))?;
        }
    }
    Ok(tol)
}

pub fn family(name: &str, params: Option<&str>) -> Result<Family, CliError> {
    let params = match params {
        Some(p) => parse_assignments(p, "parameter")?,
        None => IndexMap::new(),
    };
    Ok(Family::from_params(name, &params)?)
}

fn read_document(path: &str) -> Result<InputDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{path}: {e}")))
}

fn check_matrix(m: &MatrixSpec, tol: &Tolerances) -> Result<(), CliError> {
    let n = m.h.require_square()?;
    if !m.h.is_finite() {
        return Err(CliError::parse("h has non-finite entries".into()));
    }
    for (name, other) in [("s", &m.s), ("metric", &m.metric)] {
        if let Some(x) = other {
            if x.require_square()? != n {
                return Err(CliError::parse(format!("{name} must be {n}x{n}")));
            }
        }
    }
    if let Some(s) = &m.s {
        metricforge_core::linalg::Lu::factor(s, tol)
            .map_err(|e| CliError::parse(format!("s must be invertible: {e}")))?;
    }
    Ok(())
}

/// Resolve `--in` or `--model/--params` into a source.
pub fn resolve(
    input: Option<&str>,
    model: Option<&str>,
    params: Option<&str>,
    tol: &Tolerances,
) -> Result<Source, CliError> {
    match (input, model) {
        (Some(_), Some(_)) => Err(CliError::parse(
            "give either --in or --model, not both".into(),
        )),
        (None, None) => Err(CliError::parse(
            "an input is required: --in FILE or --model FAMILY".into(),
        )),
        (None, Some(name)) => Ok(Source::Model(family(name, params)?)),
        (Some(path), None) => {
            if params.is_some() {
                return Err(CliError::parse("--params applies only with --model".into()));
            }
            let doc = read_document(path)?;
            match (doc.model, doc.matrix) {
                (Some(m), None) => Ok(Source::Model(Family::from_params(&m.family, &m.params)?)),
                (None, Some(m)) => {
                    check_matrix(&m, tol)?;
                    Ok(Source::Matrix(m))
                }
                _ => Err(CliError::parse(
                    "input needs exactly one of 'model' and 'matrix'".into(),
                )),
            }
        }
    }
}

/// `[1, 0]`, `[[1, 0], [0, 1]]` (pairs are `[re, im]`) or `1,0`.
pub fn parse_state(text: &str, dim: usize) -> Result<ComplexVector, CliError> {
    let bad = |why: String| CliError::parse(format!("bad --psi0 '{text}': {why}"));
    let trimmed = text.trim();
    let v = if trimmed.starts_with('[') {
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| bad(e.to_string()))?;
        let items = value
            .as_array()
            .ok_or_else(|| bad("expected an array".into()))?;
        if items.iter().all(|x| x.is_number()) {
            let re: Vec<f64> = items
                .iter()
                .map(|x| x.as_f64().unwrap_or(f64::NAN))
                .collect();
            ComplexVector::from_real(&re).map_err(|e| bad(e.to_string()))?
        } else {
            serde_json::from_value::<ComplexVector>(value).map_err(|e| bad(e.to_string()))?
        }
    } else {
        let re: Vec<f64> = trimmed
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        ComplexVector::from_real(&re).map_err(|e| bad(e.to_string()))?
    };
    if v.dim() != dim {
        return Err(bad(format!("expected {dim} components, got {}", v.dim())));
    }
    if v.norm() == 0.0 {
        return Err(bad("zero vector".into()));
    }
    Ok(v)
}

/// Generator data of the input, if any.
pub fn das_construction(
    source: &Source,
    sys: &metricforge_core::BiorthSystem,
) -> Result<Option<DasConstruction>, Error> {
    match source {
        Source::Matrix(MatrixSpec { das: Some(d), .. }) => Ok(Some(DasConstruction::from_system(
            d.reference_metric.clone(),
            d.generators.clone(),
            sys,
        )?)),
        _ => Ok(None),
    }
}
