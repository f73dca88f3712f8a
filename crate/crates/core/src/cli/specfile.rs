//! Line-oriented measurement and state files.
//!
//! Measurement file:
//!
//! ```text
//! # comments and blank lines are ignored
//! dim = 2
//! tol = 1e-8
//! entry = 1.0 ; 1,0,0,0 ; 1,0,0,0
//! entry = 1.0 ; 0,0,1,0 ; 0,0,1,0
//! ```
//!
//! Each `entry` is `nu ; probe ; output`, a state being `2D` comma-separated
//! reals `re,im,re,im,...`. State file: a single `state = ...` line (pure,
//! `2D` reals) or `rho = ...` (`2D²` reals, row-major).

use std::fmt;

use num_complex::Complex64;

use crate::measurement::{MeasurementEntry, MeasurementSpec};
use crate::qstate::{ComplexMatrix, DensityMatrix, PureState};

pub const DEFAULT_FILE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum FileError {
    /// Malformed content, with the 1-based line number (0 for whole-file issues).
    Parse { line: usize, message: String },
    /// The parsed measurement violates completeness.
    Completeness { deviation: f64, tol: f64 },
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileError::Parse { line: 0, message } => write!(f, "{message}"),
            FileError::Parse { line, message } => write!(f, "line {line}: {message}"),
            FileError::Completeness { deviation, tol } => write!(
                f,
                "completeness violated: max deviation {deviation:.3e} exceeds tol {tol:.1e}"
            ),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> FileError {
    FileError::Parse {
        line,
        message: message.into(),
    }
}

fn key_values(text: &str) -> impl Iterator<Item = (usize, Result<(&str, &str), FileError>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let n = i + 1;
        Some((
            n,
            line.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| parse_err(n, format!("expected `key = value`, found `{line}`"))),
        ))
    })
}

fn parse_reals(line: usize, text: &str) -> Result<Vec<f64>, FileError> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(line, format!("invalid number `{t}`")))
        })
        .collect()
}

fn parse_complex(line: usize, text: &str, expected: usize) -> Result<Vec<Complex64>, FileError> {
    let reals = parse_reals(line, text)?;
    if reals.len() != 2 * expected {
        return Err(parse_err(
            line,
            format!("expected {} reals, found {}", 2 * expected, reals.len()),
        ));
    }
    Ok(reals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

fn parse_state(line: usize, text: &str, dim: usize, tol: f64) -> Result<PureState, FileError> {
    let amps = parse_complex(line, text, dim)?;
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > tol {
        return Err(parse_err(line, format!("state has squared norm {norm}, expected 1")));
    }
    PureState::normalized(amps).map_err(|e| parse_err(line, e.to_string()))
}

/// Parsed measurement file.
#[derive(Clone, Debug)]
pub struct SpecFile {
    pub spec: MeasurementSpec,
    pub tol: f64,
}

pub fn parse_spec_file(text: &str) -> Result<SpecFile, FileError> {
    let mut dim: Option<usize> = None;
    let mut tol = DEFAULT_FILE_TOL;
    let mut raw_entries: Vec<(usize, &str)> = Vec::new();
    for (n, kv) in key_values(text) {
        let (key, value) = kv?;
        match key {
            "dim" => {
                if dim.is_some() {
                    return Err(parse_err(n, "duplicate `dim`"));
                }
                let d: usize = value
                    .parse()
                    .map_err(|_| parse_err(n, format!("invalid dimension `{value}`")))?;
                if d == 0 {
                    return Err(parse_err(n, "dimension must be positive"));
                }
                dim = Some(d);
            }
            "tol" => {
                tol = value
                    .parse::<f64>()
                    .ok()
                    .filter(|t| *t > 0.0 && t.is_finite())
                    .ok_or_else(|| parse_err(n, format!("invalid tolerance `{value}`")))?;
            }
            "entry" => raw_entries.push((n, value)),
            other => return Err(parse_err(n, format!("unknown key `{other}`"))),
        }
    }
    let dim = dim.ok_or_else(|| parse_err(0, "missing `dim`"))?;
    if raw_entries.is_empty() {
        return Err(parse_err(0, "no `entry` lines"));
    }
    let mut entries = Vec::with_capacity(raw_entries.len());
    for (n, value) in raw_entries {
        let parts: Vec<&str> = value.split(';').collect();
        if parts.len() != 3 {
            return Err(parse_err(n, "entry needs `nu ; probe ; output`"));
        }
        let nu: f64 = parts[0]
            .trim()
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite() && *x >= 0.0)
            .ok_or_else(|| parse_err(n, format!("invalid weight `{}`", parts[0].trim())))?;
        let probe = parse_state(n, parts[1], dim, tol)?;
        let output = parse_state(n, parts[2], dim, tol)?;
        entries.push(MeasurementEntry::new(probe, output, nu));
    }
    let spec = MeasurementSpec::assemble(dim, entries).map_err(|e| parse_err(0, e.to_string()))?;
    let deviation = spec.completeness_deviation();
    if deviation > tol {
        return Err(FileError::Completeness { deviation, tol });
    }
    Ok(SpecFile { spec, tol })
}

/// Serializes a measurement in the format read by [`parse_spec_file`].
pub fn write_spec_file(spec: &MeasurementSpec, tol: f64) -> String {
    let state = |s: &PureState| {
        s.amplitudes()
            .iter()
            .map(|z| format!("{:?},{:?}", z.re, z.im))
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = format!("dim = {}\ntol = {:e}\n", spec.object_dim(), tol);
    for e in spec.entries() {
        out.push_str(&format!(
            "entry = {:?} ; {} ; {}\n",
            e.weight,
            state(&e.probe),
            state(&e.output)
        ));
    }
    out
}

/// Input state file for `measure`; `dim` comes from the measurement.
pub fn parse_state_file(text: &str, dim: usize) -> Result<DensityMatrix, FileError> {
    let mut found: Option<DensityMatrix> = None;
    for (n, kv) in key_values(text) {
        let (key, value) = kv?;
        if found.is_some() {
            return Err(parse_err(n, "only one `state` or `rho` line is allowed"));
        }
        let rho = match key {
            "state" => parse_state(n, value, dim, DEFAULT_FILE_TOL)?.to_density(),
            "rho" => {
                let entries = parse_complex(n, value, dim * dim)?;
                let m = ComplexMatrix::from_vec(dim, dim, entries).map_err(|e| parse_err(n, e.to_string()))?;
                DensityMatrix::new(m).map_err(|e| parse_err(n, e.to_string()))?
            }
            other => return Err(parse_err(n, format!("unknown key `{other}`"))),
        };
        found = Some(rho);
    }
    found.ok_or_else(|| parse_err(0, "missing `state` or `rho` line"))
}
