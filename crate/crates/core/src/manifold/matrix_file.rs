//! Text format for explicit operators.
//!
//! ```text
//! # three nodes in dimension five
//! n 5
//! N 3
//! weights 1 1 1
//! P
//!   1 0 0
//!   0 2 0
//!   0 0 3
//! Q0 2        # optional, as are R0 and Ric_dir
//! ```
//!
//! Field names are followed by their numbers; tokens are separated by any
//! whitespace, and `#` starts a comment running to the end of the line. An
//! optional `=` or trailing `:` after a field name is ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Contents of an operator file.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixData {
    pub n: usize,
    pub weights: Vec<f64>,
    /// Nodal operator, row-major `N × N`.
    pub p: Vec<f64>,
    pub r0: Option<f64>,
    pub ric_dir: Option<f64>,
    pub q0: Option<f64>,
}

const FIELDS: [&str; 7] = ["n", "N", "weights", "P", "R0", "Ric_dir", "Q0"];

impl MatrixData {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values: [Vec<(usize, f64)>; 7] = Default::default();
        let mut seen = [false; 7];
        let mut current: Option<usize> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for token in line.split_whitespace() {
                if token == "=" {
                    continue;
                }
                let name = token.trim_end_matches([':', '=']);
                if let Some(field) = FIELDS.iter().position(|f| *f == name) {
                    if seen[field] {
                        return Err(Error::Parse(format!(
                            "line {}: field `{name}` given twice",
                            lineno + 1
                        )));
                    }
                    seen[field] = true;
                    current = Some(field);
                    continue;
                }
                let Some(field) = current else {
                    return Err(Error::Parse(format!(
                        "line {}: expected a field name, found `{token}`",
                        lineno + 1
                    )));
                };
                let v: f64 = token.parse().map_err(|_| {
                    Error::Parse(format!(
                        "line {}: `{token}` is neither a number nor a known field",
                        lineno + 1
                    ))
                })?;
                values[field].push((lineno + 1, v));
            }
        }

        let scalar = |field: usize| -> Result<Option<f64>> {
            match values[field].as_slice() {
                [] if !seen[field] => Ok(None),
                [(_, v)] => Ok(Some(*v)),
                [] => Err(Error::Parse(format!(
                    "field `{}` has no value",
                    FIELDS[field]
                ))),
                [_, (line, _), ..] => Err(Error::Parse(format!(
                    "line {line}: field `{}` takes a single number",
                    FIELDS[field]
                ))),
            }
        };
        let count = |field: usize| -> Result<usize> {
            let v = scalar(field)?
                .ok_or_else(|| Error::Parse(format!("missing field `{}`", FIELDS[field])))?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Parse(format!(
                    "field `{}` must be a non-negative integer, got {v}",
                    FIELDS[field]
                )));
            }
            Ok(v as usize)
        };
        let n = count(0)?;
        let size = count(1)?;
        let list = |field: usize| values[field].iter().map(|(_, v)| *v).collect::<Vec<_>>();
        let data = MatrixData {
            n,
            weights: list(2),
            p: list(3),
            r0: scalar(4)?,
            ric_dir: scalar(5)?,
            q0: scalar(6)?,
        };
        if data.weights.len() != size {
            return Err(Error::Parse(format!(
                "`weights` has {} entries, expected N = {size}",
                data.weights.len()
            )));
        }
        if data.p.len() != size * size {
            return Err(Error::Parse(format!(
                "`P` has {} entries, expected N² = {}",
                data.p.len(),
                size * size
            )));
        }
        Ok(data)
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        let size = self.weights.len();
        if size == 0 {
            return Err(Error::InvalidParameter(
                "operator needs at least one node".into(),
            ));
        }
        if self.p.len() != size * size {
            return Err(Error::LengthMismatch {
                expected: size * size,
                got: self.p.len(),
            });
        }
        if self.weights.iter().chain(&self.p).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "operator data contains non-finite values".into(),
            ));
        }
        Ok(())
    }

    /// `max |S_ij - S_ji| / max |S_ij|` for `S = W P`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let size = self.weights.len();
        let s = |i: usize, j: usize| self.weights[i] * self.p[i * size + j];
        let mut scale = 0.0_f64;
        let mut defect = 0.0_f64;
        for i in 0..size {
            for j in 0..size {
                scale = scale.max(s(i, j).abs());
                defect = defect.max((s(i, j) - s(j, i)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    /// Serializes in the format accepted by [`MatrixData::parse`].
    pub fn to_text(&self) -> String {
        let size = self.weights.len();
        let mut out = String::new();
        let _ = writeln!(out, "n {}\nN {size}", self.n);
        out.push_str("weights");
        for w in &self.weights {
            let _ = write!(out, " {w:e}");
        }
        out.push_str("\nP\n");
        for row in self.p.chunks(size.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "  {}", line.join(" "));
        }
        for (name, v) in [("R0", self.r0), ("Ric_dir", self.ric_dir), ("Q0", self.q0)] {
            if let Some(v) = v {
                let _ = writeln!(out, "{name} {v:e}");
            }
        }
        out
    }
}
