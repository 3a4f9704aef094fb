//! Run configuration: a flat TOML file of `key = value` pairs.
//!
//! ```toml
//! scenario = "flow"            # flow | bubble-sweep | validate | crosscheck
//! manifold = "s4xs1 pi"        # s4xs1 [length] | sphere [n] | matrix <path>
//! nodes = 32
//! f = "const 1"                # const c | cosine-bump a [k] | polar-bump a m | file <path>
//! u0 = "perturbed 0.03"        # constant c | perturbed a [k] | bubble eps delta [center] | file <path>
//! integrator = "rk4"
//! dt = 1e-3
//! ```

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::flow::{FlowParams, Integrator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Flow,
    BubbleSweep,
    Validate,
    Crosscheck,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldSpec {
    S4xS1 { length: f64 },
    Sphere { n: usize },
    Matrix { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub enum FSpec {
    Const(f64),
    /// `1 + a cos(k s)`; `k` defaults to the first circle harmonic.
    CosineBump {
        a: f64,
        k: Option<f64>,
    },
    /// `1 + a cos(θ)^m`
    PolarBump {
        a: f64,
        m: i32,
    },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum U0Spec {
    Constant(f64),
    /// `1 + a cos(k s)` on a circle product, `1 + a cos θ` on the sphere.
    Perturbed {
        a: f64,
        k: Option<f64>,
    },
    Bubble {
        eps: f64,
        delta: f64,
        center: f64,
    },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub manifold: ManifoldSpec,
    pub nodes: usize,
    pub f: FSpec,
    pub u0: U0Spec,
    pub flow: FlowParams,
    /// ε values of a bubble sweep.
    pub eps: Vec<f64>,
    /// Cutoff radius of a bubble sweep.
    pub delta: f64,
    pub center: f64,
    /// Flatness threshold and declared vanishing order for `n >= 6` certificates.
    pub flatness: f64,
    pub vanishing_order: bool,
    pub seed: u64,
    pub out: PathBuf,
}

const KEYS: &[&str] = &[
    "scenario",
    "manifold",
    "nodes",
    "f",
    "u0",
    "integrator",
    "dt",
    "t_max",
    "tol_F2",
    "tol_residual",
    "record_every",
    "eps",
    "delta",
    "center",
    "flatness",
    "vanishing_order",
    "seed",
    "out",
];

/// Line of the first `key = ...` assignment, for messages.
fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

struct Reader<'a> {
    text: &'a str,
    table: Table,
    base: PathBuf,
}

impl Reader<'_> {
    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("line {}: {key}: {msg}", line_of(self.text, key)))
    }

    fn number(&self, key: &str, default: f64) -> Result<f64> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Float(v)) => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(v) => Err(self.err(key, format!("expected a number, found {}", v.type_str()))),
        }
    }

    fn integer(&self, key: &str, default: i64) -> Result<i64> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Integer(v)) => Ok(*v),
            Some(v) => Err(self.err(key, format!("expected an integer, found {}", v.type_str()))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(self.err(key, format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn boolean(&self, key: &str) -> Result<bool> {
        match self.table.get(key) {
            None => Ok(false),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(self.err(
                key,
                format!("expected true or false, found {}", v.type_str()),
            )),
        }
    }

    fn numbers(&self, key: &str) -> Result<Vec<f64>> {
        match self.table.get(key) {
            None => Ok(Vec::new()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    _ => Err(self.err(key, "expected an array of numbers")),
                })
                .collect(),
            Some(v) => Err(self.err(key, format!("expected an array, found {}", v.type_str()))),
        }
    }

    fn path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

/// Parses a real number, accepting multiples of π written `pi`, `2pi` or `0.5pi`.
fn real(token: &str) -> Option<f64> {
    if let Some(c) = token.strip_suffix("pi") {
        let c = if c.is_empty() {
            1.0
        } else {
            c.trim_end_matches('*').parse().ok()?
        };
        return Some(c * std::f64::consts::PI);
    }
    token.parse().ok()
}

fn words(r: &Reader, key: &str, spec: &str, expected: &str) -> Result<Vec<String>> {
    let w: Vec<String> = spec.split_whitespace().map(str::to_string).collect();
    if w.is_empty() {
        return Err(r.err(key, format!("empty value, expected {expected}")));
    }
    Ok(w)
}

fn arg(r: &Reader, key: &str, w: &[String], i: usize, expected: &str) -> Result<f64> {
    w.get(i)
        .and_then(|t| real(t))
        .ok_or_else(|| r.err(key, format!("expected {expected}")))
}

fn opt_arg(r: &Reader, key: &str, w: &[String], i: usize, expected: &str) -> Result<Option<f64>> {
    if i < w.len() {
        arg(r, key, w, i, expected).map(Some)
    } else {
        Ok(None)
    }
}

fn check_arity(r: &Reader, key: &str, w: &[String], max: usize, expected: &str) -> Result<()> {
    if w.len() > max {
        return Err(r.err(key, format!("too many arguments, expected {expected}")));
    }
    Ok(())
}

fn manifold_spec(r: &Reader) -> Result<ManifoldSpec> {
    const KEY: &str = "manifold";
    let spec = r
        .string(KEY)?
        .ok_or_else(|| Error::Parse("missing required key `manifold`".into()))?;
    let w = words(r, KEY, spec, "s4xs1, sphere or matrix")?;
    match w[0].as_str() {
        "s4xs1" => {
            check_arity(r, KEY, &w, 2, "s4xs1 [length]")?;
            Ok(ManifoldSpec::S4xS1 {
                length: opt_arg(r, KEY, &w, 1, "a circle length")?
                    .unwrap_or(2.0 * std::f64::consts::PI),
            })
        }
        "sphere" => {
            check_arity(r, KEY, &w, 2, "sphere [n]")?;
            let n = match w.get(1) {
                None => 5,
                Some(t) => t
                    .parse()
                    .map_err(|_| r.err(KEY, "dimension must be an integer"))?,
            };
            Ok(ManifoldSpec::Sphere { n })
        }
        "matrix" => {
            check_arity(r, KEY, &w, 2, "matrix <path>")?;
            let p = w
                .get(1)
                .ok_or_else(|| r.err(KEY, "matrix needs a file path"))?;
            Ok(ManifoldSpec::Matrix { path: r.path(p) })
        }
        other => Err(r.err(KEY, format!("unknown manifold `{other}`"))),
    }
}

fn f_spec(r: &Reader) -> Result<FSpec> {
    const KEY: &str = "f";
    let Some(spec) = r.string(KEY)? else {
        return Ok(FSpec::Const(1.0));
    };
    let w = words(r, KEY, spec, "a profile")?;
    match w[0].as_str() {
        "const" => {
            check_arity(r, KEY, &w, 2, "const c")?;
            Ok(FSpec::Const(arg(r, KEY, &w, 1, "const c")?))
        }
        "cosine-bump" => {
            check_arity(r, KEY, &w, 3, "cosine-bump a [k]")?;
            Ok(FSpec::CosineBump {
                a: arg(r, KEY, &w, 1, "cosine-bump a [k]")?,
                k: opt_arg(r, KEY, &w, 2, "a wavenumber")?,
            })
        }
        "polar-bump" => {
            check_arity(r, KEY, &w, 3, "polar-bump a m")?;
            let m = arg(r, KEY, &w, 2, "polar-bump a m")?;
            if m.fract() != 0.0 || m < 0.0 {
                return Err(r.err(KEY, "polar-bump exponent must be a non-negative integer"));
            }
            Ok(FSpec::PolarBump {
                a: arg(r, KEY, &w, 1, "polar-bump a m")?,
                m: m as i32,
            })
        }
        "file" => {
            check_arity(r, KEY, &w, 2, "file <path>")?;
            let p = w.get(1).ok_or_else(|| r.err(KEY, "file needs a path"))?;
            Ok(FSpec::File(r.path(p)))
        }
        other => Err(r.err(KEY, format!("unknown profile `{other}`"))),
    }
}

fn u0_spec(r: &Reader) -> Result<U0Spec> {
    const KEY: &str = "u0";
    let Some(spec) = r.string(KEY)? else {
        return Ok(U0Spec::Constant(1.0));
    };
    let w = words(r, KEY, spec, "initial data")?;
    match w[0].as_str() {
        "constant" => {
            check_arity(r, KEY, &w, 2, "constant c")?;
            Ok(U0Spec::Constant(arg(r, KEY, &w, 1, "constant c")?))
        }
        "perturbed" => {
            check_arity(r, KEY, &w, 3, "perturbed a [k]")?;
            Ok(U0Spec::Perturbed {
                a: arg(r, KEY, &w, 1, "perturbed a [k]")?,
                k: opt_arg(r, KEY, &w, 2, "a wavenumber")?,
            })
        }
        "bubble" => {
            check_arity(r, KEY, &w, 4, "bubble eps delta [center]")?;
            Ok(U0Spec::Bubble {
                eps: arg(r, KEY, &w, 1, "bubble eps delta [center]")?,
                delta: arg(r, KEY, &w, 2, "bubble eps delta [center]")?,
                center: opt_arg(r, KEY, &w, 3, "a center coordinate")?.unwrap_or(0.0),
            })
        }
        "file" => {
            check_arity(r, KEY, &w, 2, "file <path>")?;
            let p = w.get(1).ok_or_else(|| r.err(KEY, "file needs a path"))?;
            Ok(U0Spec::File(r.path(p)))
        }
        other => Err(r.err(KEY, format!("unknown initial data `{other}`"))),
    }
}

/// Parses configuration text. Relative paths resolve against `base`.
///
/// Unknown keys are errors in strict mode and warnings on stderr otherwise.
pub fn parse_config_str(text: &str, base: &Path, strict: bool) -> Result<RunConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map_or(0, |s| {
            text[..s.start.min(text.len())].lines().count().max(1)
        });
        Error::Parse(format!("line {line}: {}", e.message()))
    })?;
    let r = Reader {
        text,
        table,
        base: base.to_path_buf(),
    };
    for key in r.table.keys() {
        if !KEYS.contains(&key.as_str()) {
            let msg = format!("line {}: unknown key `{key}`", line_of(text, key));
            if strict {
                return Err(Error::Parse(msg));
            }
            eprintln!("warning: {msg} (ignored)");
        }
    }

    let scenario = match r.string("scenario")?.unwrap_or("flow") {
        "flow" => Scenario::Flow,
        "bubble-sweep" => Scenario::BubbleSweep,
        "validate" => Scenario::Validate,
        "crosscheck" => Scenario::Crosscheck,
        other => return Err(r.err("scenario", format!("unknown scenario `{other}`"))),
    };
    let manifold = manifold_spec(&r)?;
    let nodes = r.integer("nodes", 64)?;
    if nodes < 1 {
        return Err(r.err("nodes", "must be positive"));
    }
    let defaults = FlowParams::default();
    let integrator = match r.string("integrator")? {
        None => defaults.integrator,
        Some(s) => s
            .parse::<Integrator>()
            .map_err(|e| r.err("integrator", e))?,
    };
    let record_every = r.integer("record_every", defaults.record_every as i64)?;
    if record_every < 1 {
        return Err(r.err("record_every", "must be at least 1"));
    }
    let flow = FlowParams {
        integrator,
        dt: r.number("dt", defaults.dt)?,
        t_max: r.number("t_max", defaults.t_max)?,
        tol_f2: r.number("tol_F2", defaults.tol_f2)?,
        tol_residual: r.number("tol_residual", defaults.tol_residual)?,
        record_every: record_every as usize,
    };
    for (key, v) in [
        ("dt", flow.dt),
        ("tol_F2", flow.tol_f2),
        ("tol_residual", flow.tol_residual),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(r.err(key, format!("{key} must be positive")));
        }
    }
    if !(flow.t_max >= 0.0) {
        return Err(r.err("t_max", "t_max must be non-negative"));
    }

    let eps = r.numbers("eps")?;
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(r.err("eps", "values must be positive"));
    }
    if scenario == Scenario::BubbleSweep && eps.is_empty() {
        return Err(Error::Parse("bubble-sweep needs the key `eps`".into()));
    }
    let delta = r.number("delta", 0.4)?;
    if !(delta > 0.0) {
        return Err(r.err("delta", "delta must be positive"));
    }
    let seed = r.integer("seed", 0)?;
    if seed < 0 {
        return Err(r.err("seed", "must be non-negative"));
    }
    Ok(RunConfig {
        scenario,
        manifold,
        nodes: nodes as usize,
        f: f_spec(&r)?,
        u0: u0_spec(&r)?,
        flow,
        eps,
        delta,
        center: r.number("center", 0.0)?,
        flatness: r.number("flatness", 1e-2)?,
        vanishing_order: r.boolean("vanishing_order")?,
        seed: seed as u64,
        out: r.path(r.string("out")?.unwrap_or("qflow-out")),
    })
}

/// Reads and parses a configuration file.
pub fn parse_config(path: impl AsRef<Path>, strict: bool) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base, strict)
}
