//! TOML model specification files.
//!
//! ```toml
//! [model]
//! kind = "classical_hawkes"      # constant | piecewise_constant | classical_hawkes
//! alpha = 1.0
//! strong_uniqueness = true
//!
//! [model.kernel]
//! kind = "exponential"           # exponential | tabulated
//! a = 0.5
//! b = 1.0
//!
//! [model.phi]
//! kind = "identity"              # identity | affine | clipped_linear | sigmoid
//!
//! [tolerances]                   # optional
//! quadrature = 1e-10
//! root = 1e-10
//! ```
//!
//! A constant model uses `rate`; a piecewise-constant one uses
//! `breakpoints`, `levels` and `tail`. An optional `[run]` table is passed
//! through untouched for experiment runners.

use serde::{Deserialize, Serialize};

use super::{ClassicalHawkes, IntensityModel, KernelSpec, ModelIssue, PhiSpec, Tolerances};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: IntensityModel,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub run: toml::Table,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    model: toml::Table,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    run: toml::Table,
}

/// Externally tagged mirror of [`IntensityModel`]. Internally tagged enums are
/// buffered by serde, which loses the key path of errors inside them, so the
/// `kind` keys are rewritten as outer tags before deserializing into these.
#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ModelRepr {
    Constant {
        rate: f64,
    },
    PiecewiseConstant(super::PiecewiseConstant),
    ClassicalHawkes {
        phi: PhiRepr,
        alpha: f64,
        kernel: KernelRepr,
        #[serde(default)]
        strong_uniqueness: bool,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum PhiRepr {
    Identity {},
    Affine { slope: f64, intercept: f64 },
    ClippedLinear { slope: f64, floor: f64 },
    Sigmoid { scale: f64, midpoint: f64, max: f64 },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum KernelRepr {
    Exponential { a: f64, b: f64 },
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

const VARIANTS: [&str; 9] = [
    "constant",
    "piecewise_constant",
    "classical_hawkes",
    "identity",
    "affine",
    "clipped_linear",
    "sigmoid",
    "exponential",
    "tabulated",
];

impl From<ModelRepr> for IntensityModel {
    fn from(r: ModelRepr) -> Self {
        match r {
            ModelRepr::Constant { rate } => IntensityModel::Constant { rate },
            ModelRepr::PiecewiseConstant(p) => IntensityModel::PiecewiseConstant(p),
            ModelRepr::ClassicalHawkes {
                phi,
                alpha,
                kernel,
                strong_uniqueness,
            } => IntensityModel::ClassicalHawkes(ClassicalHawkes {
                phi: match phi {
                    PhiRepr::Identity {} => PhiSpec::Identity,
                    PhiRepr::Affine { slope, intercept } => PhiSpec::Affine { slope, intercept },
                    PhiRepr::ClippedLinear { slope, floor } => PhiSpec::ClippedLinear { slope, floor },
                    PhiRepr::Sigmoid { scale, midpoint, max } => PhiSpec::Sigmoid { scale, midpoint, max },
                },
                alpha,
                kernel: match kernel {
                    KernelRepr::Exponential { a, b } => KernelSpec::Exponential { a, b },
                    KernelRepr::Tabulated { times, values } => KernelSpec::Tabulated { times, values },
                },
                strong_uniqueness,
            }),
        }
    }
}

/// Rewrites `{kind = "k", ...}` tables as `{k = {...}}`, recursively.
fn retag(table: &mut toml::Table, path: &str, source: &str) -> Result<()> {
    for (key, value) in table.iter_mut() {
        if let toml::Value::Table(inner) = value {
            if key == "kernel" || key == "phi" {
                retag(inner, &format!("{path}.{key}"), source)?;
            }
        }
    }
    match table.remove("kind") {
        Some(toml::Value::String(kind)) => {
            let rest = std::mem::take(table);
            table.insert(kind, toml::Value::Table(rest));
            Ok(())
        }
        Some(other) => Err(config_error(source, &format!("{path}.kind"), format!("expected a string, got {other}"))),
        None => Err(config_error(source, &format!("{path}.kind"), "missing field `kind`".into())),
    }
}

impl ModelFile {
    pub fn parse(source: &str) -> Result<Self> {
        let raw: RawFile = parse_toml(source)?;
        let mut fields = raw.model;
        retag(&mut fields, "model", source)?;
        let repr: ModelRepr = serde_path_to_error::deserialize(fields).map_err(|e| {
            let path: Vec<String> = e
                .path()
                .to_string()
                .split('.')
                .filter(|seg| !VARIANTS.contains(seg) && *seg != "?")
                .map(str::to_string)
                .collect();
            let path = std::iter::once("model".to_string()).chain(path).collect::<Vec<_>>().join(".");
            let message = e.into_inner().message().to_string();
            config_error(source, &path, message)
        })?;
        let model = IntensityModel::from(repr);
        let file = ModelFile {
            model,
            tolerances: raw.tolerances,
            run: raw.run,
        };
        file.model.validate().map_err(|issue| located(source, issue))?;
        validate_tolerances(&file.tolerances).map_err(|issue| located(source, issue))?;
        Ok(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&source)
    }
}

/// Deserializes TOML, reporting failures with their key path and line.
pub fn parse_toml<T: serde::de::DeserializeOwned>(source: &str) -> Result<T> {
    let de = toml::Deserializer::parse(source).map_err(|e| Error::Config {
        path: String::new(),
        line: e.span().map_or(0, |s| line_of(source, s.start)),
        message: e.message().to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let line = inner
            .span()
            .map(|s| line_of(source, s.start))
            .filter(|&l| l > 0)
            .unwrap_or_else(|| locate_key(source, &path));
        Error::Config {
            path,
            line,
            message: inner.message().to_string(),
        }
    })
}

fn config_error(source: &str, path: &str, message: String) -> Error {
    Error::Config {
        path: path.to_string(),
        line: locate_key(source, path),
        message,
    }
}

pub(crate) fn located(source: &str, issue: ModelIssue) -> Error {
    Error::Config {
        line: locate_key(source, &issue.path),
        path: issue.path,
        message: issue.message,
    }
}

fn validate_tolerances(t: &Tolerances) -> std::result::Result<(), ModelIssue> {
    for (key, v) in [("quadrature", t.quadrature), ("root", t.root), ("horizon_multiple", t.horizon_multiple)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(ModelIssue::new(format!("tolerances.{key}"), format!("must be finite and > 0, got {v}")));
        }
    }
    if t.max_subdivisions == 0 {
        return Err(ModelIssue::new("tolerances.max_subdivisions", "must be > 0"));
    }
    Ok(())
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn normalize_key(key: &str) -> String {
    key.split('.')
        .map(|p| p.trim().trim_matches('"'))
        .collect::<Vec<_>>()
        .join(".")
}

/// Best-effort line number (1-based) of a dotted key path; falls back to the
/// nearest enclosing key or table, 0 when nothing matches.
pub fn locate_key(source: &str, path: &str) -> usize {
    let mut wanted = path.to_string();
    // Sequence indices (`levels[2]`) map to the line of the array key.
    while let Some(open) = wanted.find('[') {
        let close = wanted[open..].find(']').map_or(wanted.len(), |c| open + c + 1);
        wanted.replace_range(open..close, "");
    }
    loop {
        if wanted.is_empty() {
            return 0;
        }
        let mut table = String::new();
        for (i, raw) in source.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if let Some(header) = line.strip_prefix('[') {
                table = normalize_key(header.trim_start_matches('[').trim_end_matches(']'));
                if table == wanted {
                    return i + 1;
                }
                continue;
            }
            if let Some((key, _)) = line.split_once('=') {
                let key = normalize_key(key);
                let full = if table.is_empty() { key } else { format!("{table}.{key}") };
                if full == wanted {
                    return i + 1;
                }
            }
        }
        match wanted.rfind('.') {
            Some(dot) => wanted.truncate(dot),
            None => return 0,
        }
    }
}
