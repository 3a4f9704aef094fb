//! Configuration-driven scenario runner behind the `qflow` binary.
//!
//! `qflow run|validate|sweep [--strict] <config>` parses a [`RunConfig`],
//! executes it and writes CSV files into the output directory, which the
//! `QFLOW_OUT` environment variable overrides.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{
    parse_config, parse_config_str, FSpec, ManifoldSpec, RunConfig, Scenario, U0Spec,
};

use crate::bubble::{
    certify, corrected_bubble, power_integral_slopes, sphere_quotient_asymptotic,
    write_asymptotics_csv, write_certificates_csv, BubbleParams, CandidateOptions,
};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::flow::{
    check_structural_identities, energy_drift, max_relative_increase, modified_flow_crosscheck,
    run, write_trajectory_csv, FlowParams, Integrator, MonitorRecord, MONOTONE_SLACK,
};
use crate::manifold::{
    sphere_multiplier, CirclePreset, DiscreteManifold, ManifoldKind, MatrixData,
};
use crate::paneitz::energy_report;

pub const EXIT_OK: i32 = 0;
/// A validation or cross-check failed.
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_POSITIVITY: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Exit code for an error raised while executing a scenario.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Positivity { .. } | Error::PositivityLoss { .. } => EXIT_POSITIVITY,
        Error::Divergence { .. } => EXIT_NOT_CONVERGED,
        Error::FitResidual { .. } | Error::MarginNotPositive { .. } => EXIT_FAIL,
        _ => EXIT_CONFIG,
    }
}

/// Builds the discrete manifold named by the configuration.
pub fn build_manifold(cfg: &RunConfig) -> Result<DiscreteManifold> {
    match &cfg.manifold {
        ManifoldSpec::S4xS1 { length } => {
            DiscreteManifold::einstein_circle_product(CirclePreset::S4xS1, *length, cfg.nodes)
        }
        ManifoldSpec::Sphere { n } => DiscreteManifold::sphere_axisym(*n, cfg.nodes),
        ManifoldSpec::Matrix { path } => DiscreteManifold::load_matrix(path),
    }
}

/// Reads whitespace- or comma-separated samples, one field per file; `#` starts a comment.
pub fn read_field_file(path: &Path) -> Result<ScalarField> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            values.push(tok.parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "{}: line {}: `{tok}` is not a number",
                    path.display(),
                    no + 1
                ))
            })?);
        }
    }
    ScalarField::new(values)
}

fn sized(man: &DiscreteManifold, h: ScalarField, what: &str) -> Result<ScalarField> {
    if h.len() != man.node_count() {
        return Err(Error::Parse(format!(
            "{what} file has {} values but the manifold has {} nodes",
            h.len(),
            man.node_count()
        )));
    }
    Ok(h)
}

fn first_wavenumber(man: &DiscreteManifold) -> Result<f64> {
    man.circle_length()
        .map(|l| 2.0 * std::f64::consts::PI / l)
        .ok_or(Error::UnsupportedKind(
            "cosine profiles outside circle products",
        ))
}

/// Samples the prescribed function `f`.
pub fn build_f(man: &DiscreteManifold, spec: &FSpec) -> Result<ScalarField> {
    let x = man.node_coordinates();
    match spec {
        FSpec::Const(c) => Ok(ScalarField::constant(man.node_count(), *c)),
        FSpec::CosineBump { a, k } => {
            let k = k.map_or_else(|| first_wavenumber(man), Ok)?;
            Ok(ScalarField::from_fn(&x, |s| 1.0 + a * (k * s).cos()))
        }
        FSpec::PolarBump { a, m } => {
            if man.kind() != ManifoldKind::SphereAxisym {
                return Err(Error::UnsupportedKind("polar-bump outside the sphere"));
            }
            Ok(ScalarField::from_fn(&x, |t| 1.0 + a * t.cos().powi(*m)))
        }
        FSpec::File(p) => sized(man, read_field_file(p)?, "f"),
    }
}

/// Samples the initial data.
pub fn build_u0(man: &DiscreteManifold, spec: &U0Spec, f: &ScalarField) -> Result<ScalarField> {
    let x = man.node_coordinates();
    match spec {
        U0Spec::Constant(c) => Ok(ScalarField::constant(man.node_count(), *c)),
        U0Spec::Perturbed { a, k } => match man.kind() {
            ManifoldKind::SphereAxisym => Ok(ScalarField::from_fn(&x, |t| 1.0 + a * t.cos())),
            ManifoldKind::EinsteinCircleProduct => {
                let k = k.map_or_else(|| first_wavenumber(man), Ok)?;
                Ok(ScalarField::from_fn(&x, |s| 1.0 + a * (k * s).cos()))
            }
            ManifoldKind::MatrixLoaded => Err(Error::UnsupportedKind(
                "perturbed data on a matrix manifold",
            )),
        },
        U0Spec::Bubble { eps, delta, center } => {
            Ok(corrected_bubble(man, f, &BubbleParams::new(*center, *eps, *delta)?)?.u_hat)
        }
        U0Spec::File(p) => sized(man, read_field_file(p)?, "u0"),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn io_result(dir: &Path, r: std::io::Result<()>) -> Result<()> {
    r.map_err(|e| Error::io(dir, e))
}

/// `key,value` report rows.
#[derive(Default)]
struct Report(Vec<(String, String)>);

impl Report {
    fn num(&mut self, key: &str, v: f64) {
        self.0.push((key.into(), format!("{v:.16e}")));
    }
    fn text(&mut self, key: &str, v: impl ToString) {
        self.0.push((key.into(), v.to_string()));
    }
    fn write(&self, dir: &Path) -> Result<()> {
        let mut out = create(dir, "report.csv")?;
        let mut body = String::from("key,value\n");
        for (k, v) in &self.0 {
            body.push_str(&format!("{k},{v}\n"));
        }
        io_result(
            dir,
            out.write_all(body.as_bytes()).and_then(|_| out.flush()),
        )
    }
}

fn write_trajectory(dir: &Path, records: &[MonitorRecord]) -> Result<()> {
    let mut out = create(dir, "trajectory.csv")?;
    io_result(
        dir,
        write_trajectory_csv(&mut out, records).and_then(|_| out.flush()),
    )
}

/// Runs the configured scenario and returns the process exit code.
pub fn execute(cfg: &RunConfig) -> i32 {
    let result = match cfg.scenario {
        Scenario::Flow => execute_flow(cfg),
        Scenario::Crosscheck => execute_crosscheck(cfg),
        Scenario::BubbleSweep => execute_sweep(cfg),
        Scenario::Validate => return validate(cfg),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

fn setup(cfg: &RunConfig) -> Result<(DiscreteManifold, ScalarField, ScalarField)> {
    let man = build_manifold(cfg)?;
    let f = build_f(&man, &cfg.f)?;
    let u0 = build_u0(&man, &cfg.u0, &f)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok((man, f, u0))
}

fn execute_flow(cfg: &RunConfig) -> Result<i32> {
    let (man, f, u0) = setup(cfg)?;
    let (records, rep) = run(&man, &f, &u0, &cfg.flow)?;
    write_trajectory(&cfg.out, &records)?;
    let mut r = Report::default();
    r.text("converged", rep.converged);
    r.num("t_final", rep.t_final);
    r.text("steps", rep.steps);
    r.num("F2_final", rep.f2_final);
    r.num("residual_inf_final", rep.residual_inf_final);
    r.num("alpha_final", rep.alpha_final);
    r.num("l2_mass", rep.l2_mass);
    r.num("min_u_limit", rep.u_limit.min());
    r.num("max_u_limit", rep.u_limit.max());
    r.text("started_on_cone_boundary", rep.started_on_cone_boundary);
    r.num("energy_drift", energy_drift(&records));
    r.write(&cfg.out)?;
    println!(
        "converged={} t_final={:.6} residual_inf={:.3e}",
        rep.converged, rep.t_final, rep.residual_inf_final
    );
    Ok(if rep.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn execute_crosscheck(cfg: &RunConfig) -> Result<i32> {
    let (man, f, u0) = setup(cfg)?;
    // fixed-horizon run: the identities need the whole interval
    let params = FlowParams {
        tol_f2: f64::MIN_POSITIVE,
        tol_residual: f64::MIN_POSITIVE,
        ..cfg.flow.clone()
    };
    let (records, _) = run(&man, &f, &u0, &params)?;
    write_trajectory(&cfg.out, &records)?;
    let s = check_structural_identities(&man, &records)?;
    let c = modified_flow_crosscheck(&man, &f, &u0, cfg.flow.t_max, cfg.flow.dt)?;
    let mut r = Report::default();
    r.num("alpha_rate_error", s.alpha_rate);
    r.num("dissipation_integral_error", s.dissipation_integral);
    r.num("energy_rate_error", s.energy_rate);
    r.num("modified_flow_deviation", c.max_deviation);
    r.num("alpha_relation_error", c.alpha_relation);
    r.num("alpha0", c.alpha0);
    r.num("scale", c.scale);
    r.num("s_final", c.s_final);
    r.write(&cfg.out)?;
    let ok = s.alpha_rate.max(s.dissipation_integral).max(s.energy_rate) <= 1e-4
        && c.max_deviation.max(c.alpha_relation) <= 1e-6;
    println!(
        "crosscheck={} structural_max={:.3e} modified_flow_deviation={:.3e}",
        if ok { "PASS" } else { "FAIL" },
        s.alpha_rate.max(s.dissipation_integral).max(s.energy_rate),
        c.max_deviation
    );
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

fn execute_sweep(cfg: &RunConfig) -> Result<i32> {
    if cfg.eps.is_empty() {
        return Err(Error::Parse("bubble-sweep needs the key `eps`".into()));
    }
    let (man, f, _) = setup(cfg)?;
    let mut r = Report::default();
    if man.kind() == ManifoldKind::SphereAxisym {
        let rows = sphere_quotient_asymptotic(&man, cfg.center, &cfg.eps, cfg.delta)?;
        let mut out = create(&cfg.out, "asymptotics.csv")?;
        io_result(
            &cfg.out,
            write_asymptotics_csv(&mut out, &rows).and_then(|_| out.flush()),
        )?;
        if cfg.eps.len() >= 2 {
            let slopes = power_integral_slopes(&man, cfg.center, &cfg.eps, cfg.delta)?;
            for j in 0..3 {
                r.num(
                    &format!("slope_p{}", slopes.exponents[j]),
                    slopes.measured[j],
                );
            }
        }
    }
    let opts = CandidateOptions {
        flatness_threshold: cfg.flatness,
        vanishing_order_declared: cfg.vanishing_order,
    };
    let mut certs = Vec::new();
    for &eps in &cfg.eps {
        certs.push(certify(
            &man,
            &f,
            &BubbleParams::new(cfg.center, eps, cfg.delta)?,
            &opts,
        )?);
    }
    let mut out = create(&cfg.out, "certificates.csv")?;
    io_result(
        &cfg.out,
        write_certificates_csv(&mut out, &certs).and_then(|_| out.flush()),
    )?;
    let best = certs
        .iter()
        .map(|c| c.margin)
        .fold(f64::NEG_INFINITY, f64::max);
    r.num("best_margin", best);
    r.write(&cfg.out)?;
    println!("sweep rows={} best_margin={best:.6e}", certs.len());
    Ok(EXIT_OK)
}

/// One line of the validation suite.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, value: f64, bound: f64) -> Check {
    Check {
        name,
        passed: value <= bound,
        detail: format!("{value:.3e} (bound {bound:.1e})"),
    }
}

/// Random fields; band-limited to the lowest quarter of the basis on the
/// spectral kinds so that roundoff in the top modes does not dominate.
fn random_fields(man: &DiscreteManifold, rng: &mut ChaCha8Rng, count: usize) -> Vec<ScalarField> {
    let n = man.node_count();
    (0..count)
        .map(|_| match man.kind() {
            ManifoldKind::MatrixLoaded => {
                ScalarField::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            }
            _ => {
                let mut h = ScalarField::zeros(n);
                for m in 0..(n / 4).max(1) {
                    let b = man.basis_function(m).expect("spectral basis");
                    h = h.axpy(rng.random_range(-1.0..1.0), &b);
                }
                h
            }
        })
        .collect()
}

/// Runs the invariant suite on the configured manifold, `f` and `u0`.
pub fn validation_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    if let ManifoldSpec::Matrix { path } = &cfg.manifold {
        let defect = MatrixData::read(path)?.self_adjoint_defect();
        let c = check("self-adjointness", defect, 1e-10);
        let passed = c.passed;
        checks.push(c);
        if !passed {
            return Ok(checks);
        }
    }
    let man = build_manifold(cfg)?;
    let f = build_f(&man, &cfg.f)?;
    let u0 = build_u0(&man, &cfg.u0, &f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fields = random_fields(&man, &mut rng, 8);

    let mut sa: f64 = 0.0;
    let mut rt: f64 = 0.0;
    for pair in fields.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (pa, pb) = (man.apply_p(a)?, man.apply_p(b)?);
        let scale = man.lp_norm(a, 2.0)? * man.lp_norm(&pb, 2.0)?
            + man.lp_norm(&pa, 2.0)? * man.lp_norm(b, 2.0)?;
        sa = sa.max((man.inner(a, &pb)? - man.inner(&pa, b)?).abs() / scale);
        for h in pair {
            let back = man.solve_p(&man.apply_p(h)?)?;
            rt = rt.max(back.axpy(-1.0, h).sup_norm() / h.sup_norm());
        }
    }
    if !matches!(cfg.manifold, ManifoldSpec::Matrix { .. }) {
        checks.push(check("self-adjointness", sa, 1e-10));
    }

    let c = man.coeffs();
    let p1 = man.apply_p(&ScalarField::constant(man.node_count(), 1.0))?;
    let target = c.half_nm4() * man.background().q0;
    checks.push(check(
        "constant identity",
        p1.iter().map(|v| (v - target).abs()).fold(0.0, f64::max) / target.abs(),
        1e-12,
    ));
    checks.push(check("round-trip solve", rt, 1e-10));

    if let Some(mult) = man.multipliers() {
        let mut worst: f64 = 0.0;
        let bg = man.background();
        for m in 0..=(man.node_count() / 2).min(mult.len() - 1) {
            let b = man.basis_function(m).expect("spectral basis");
            let measured = man.quadratic_form(&b)? / man.inner(&b, &b)?;
            let exact = match man.kind() {
                ManifoldKind::SphereAxisym => sphere_multiplier(c.n, m),
                _ => {
                    crate::manifold::CircleSymbol::new(c, &bg, man.circle_length().expect("circle"))
                        .at_harmonic(m.div_ceil(2))
                }
            };
            worst = worst.max((measured - exact).abs() / exact.abs());
        }
        checks.push(check("spectral multipliers", worst, 1e-8));
    }

    // short run from the configured data
    let horizon = cfg.flow.t_max.min(1.0);
    let params = FlowParams {
        t_max: horizon,
        tol_f2: f64::MIN_POSITIVE,
        tol_residual: f64::MIN_POSITIVE,
        ..cfg.flow.clone()
    };
    let (records, _) = run(&man, &f, &u0, &params)?;
    let orth = records
        .iter()
        .map(|r| r.constraint_defect)
        .fold(0.0, f64::max);
    checks.push(check("orthogonality", orth, 1e-10));
    let mono = max_relative_increase(&records, |r| r.e_f)
        .max(max_relative_increase(&records, |r| r.alpha));
    checks.push(check("monotonicity", mono.max(0.0), MONOTONE_SLACK));
    if records.len() >= 3 {
        let s = check_structural_identities(&man, &records)?;
        checks.push(check(
            "structural identities",
            s.alpha_rate.max(s.dissipation_integral).max(s.energy_rate),
            1e-4,
        ));
    }

    let ladder = [0.2, 0.1, 0.05, 0.025];
    let mut drifts = Vec::new();
    for dt in ladder {
        let p = FlowParams {
            integrator: Integrator::Rk4,
            dt,
            t_max: 1.0,
            record_every: 1,
            ..params.clone()
        };
        drifts.push(energy_drift(&run(&man, &f, &u0, &p)?.0));
    }
    let floor = 1e-13;
    if drifts.iter().all(|d| *d <= floor) {
        checks.push(Check {
            name: "conservation order",
            passed: true,
            detail: format!("drift at roundoff ({:.1e})", drifts[0]),
        });
    } else {
        let used: Vec<(f64, f64)> = ladder
            .iter()
            .copied()
            .zip(drifts)
            .filter(|(_, d)| *d > floor)
            .collect();
        let slope = if used.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = used.into_iter().unzip();
            crate::bubble::log_log_slope(&x, &y)
        } else {
            f64::NAN
        };
        checks.push(Check {
            name: "conservation order",
            passed: (slope - 4.0).abs() <= 0.5,
            detail: format!("slope {slope:.3} (expected 4 +- 0.5)"),
        });
    }

    let rep = energy_report(&man, &u0, &f)?;
    checks.push(Check {
        name: "initial energy",
        passed: rep.e > 0.0 && rep.e_f.is_finite(),
        detail: format!("E = {:.6e}, E_f = {:.6e}", rep.e, rep.e_f),
    });
    Ok(checks)
}

/// Prints the validation suite and returns 0 iff every check passes.
pub fn validate(cfg: &RunConfig) -> i32 {
    match validation_suite(cfg) {
        Ok(checks) => {
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            println!("FAIL setup: {e}");
            exit_code(&e)
        }
    }
}

const USAGE: &str = "usage: qflow run|validate|sweep [--strict] <config>";

/// Entry point of the binary; `out_override` carries `QFLOW_OUT`.
pub fn main_with(args: &[String], out_override: Option<PathBuf>) -> i32 {
    let strict = args.iter().any(|a| a == "--strict");
    let rest: Vec<&String> = args.iter().filter(|a| *a != "--strict").collect();
    let (command, path) = match rest.as_slice() {
        [c, p] => (c.as_str(), p.as_str()),
        _ => {
            eprintln!("{USAGE}");
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match parse_config(path, strict) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(dir) = out_override {
        cfg.out = dir;
    }
    match command {
        "run" => execute(&cfg),
        "validate" => validate(&cfg),
        "sweep" => {
            cfg.scenario = Scenario::BubbleSweep;
            execute(&cfg)
        }
        other => {
            eprintln!("unknown command `{other}`\n{USAGE}");
            EXIT_CONFIG
        }
    }
}
