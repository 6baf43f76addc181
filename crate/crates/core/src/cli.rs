//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification, 2 invalid input,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::operators::{
    boundary_functional, quadratic_form_sides, section, symmetry_defect, MatrixKind,
};
use crate::selfsim::{fixed_point_residual, weight_truncation, SelfSimilarParams};
use crate::spectral::{
    compute_spectrum, cross_validate, estimate_c, indefinite_report, negative_mass_count,
    pencil_eigenpairs, stable_window, AsymptoticsReport, Formulation, IndefiniteReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const VERIFY_SEED: u64 = 20;
const VERIFY_PAIRS: usize = 100;
const FIXED_POINT_DEPTH: usize = 40;

#[derive(Debug, Parser)]
#[command(
    name = "selfsim",
    version,
    about = "Spectra of self-similar point-mass Sturm–Liouville problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mass positions, masses and values of P.
    #[command(allow_negative_numbers = true)]
    Weight(RunConfig),
    /// An N×N matrix section.
    #[command(allow_negative_numbers = true)]
    Matrix {
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, default_value = "ABinv", value_parser = parse_kind)]
        kind: MatrixKind,
    },
    /// Lowest eigenvalues of one formulation.
    #[command(allow_negative_numbers = true)]
    Spectrum(RunConfig),
    /// Fit of the eigenvalue asymptotics.
    #[command(allow_negative_numbers = true)]
    Asymptotics(RunConfig),
    /// Run the invariant checks.
    #[command(allow_negative_numbers = true)]
    Verify {
        #[command(flatten)]
        config: RunConfig,
        /// Multiplies every check tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Jacobi,
    Fem,
    Green,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::Jacobi => Formulation::Jacobi,
            FormulationArg::Fem => Formulation::Fem,
            FormulationArg::Green => Formulation::Green,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub d: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta2: f64,
    /// Truncation order.
    #[arg(long = "n", default_value_t = 10)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = FormulationArg::Fem)]
    pub formulation: FormulationArg,
    /// Number of eigenvalues (default: all).
    #[arg(long)]
    pub count: Option<usize>,
    /// Fit window `k1:k2` (default: the stable window).
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<MatrixKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("window must be k1:k2, got {s:?}"))?;
    let k1 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let k2 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((k1, k2))
}

impl RunConfig {
    fn params(&self) -> crate::Result<SelfSimilarParams> {
        SelfSimilarParams::new(self.a, self.d, self.beta1, self.beta2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsOut {
    pub a: f64,
    pub d: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub q: f64,
    pub r: f64,
}

impl From<&SelfSimilarParams> for ParamsOut {
    fn from(p: &SelfSimilarParams) -> Self {
        Self {
            a: p.a(),
            d: p.d(),
            beta1: p.beta1(),
            beta2: p.beta2(),
            q: p.q(),
            r: p.r(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightOut {
    pub params: ParamsOut,
    #[serde(rename = "N")]
    pub n: usize,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    /// Value of P on `[x_k, x_{k+1})`.
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOut {
    pub params: ParamsOut,
    #[serde(rename = "N")]
    pub n: usize,
    pub formulation: Formulation,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsOut {
    pub params: ParamsOut,
    #[serde(rename = "N")]
    pub n: usize,
    pub formulation: Formulation,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub definite: Option<AsymptoticsReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub indefinite: Option<IndefiniteReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOut {
    pub params: ParamsOut,
    #[serde(rename = "N")]
    pub n: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (config, result) = match &cli.command {
        Command::Weight(c) => (c, cmd_weight(c)),
        Command::Matrix { config, kind } => (config, cmd_matrix(config, *kind)),
        Command::Spectrum(c) => (c, cmd_spectrum(c)),
        Command::Asymptotics(c) => (c, cmd_asymptotics(c)),
        Command::Verify { config, tol_scale } => (config, cmd_verify(config, *tol_scale)),
    };
    match result {
        Ok((text, code)) => {
            let written = match &config.out {
                Some(path) => {
                    fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display()))
                }
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => code,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    EXIT_INVALID
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {e}", e.name());
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn num(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| format!("{v:?}"))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn cmd_weight(c: &RunConfig) -> crate::Result<(String, i32)> {
    let p = c.params()?;
    let w = weight_truncation(&p, c.n)?;
    let values: Vec<f64> = (1..=c.n).map(|k| p.step_value(k)).collect();
    let text = match c.format {
        Format::Json => to_json(&WeightOut {
            params: (&p).into(),
            n: c.n,
            x: w.positions().to_vec(),
            m: w.masses().to_vec(),
            p: values,
        }),
        Format::Csv => {
            let mut s = String::from("k,x,m,p\n");
            for (k, ((x, m), v)) in w
                .positions()
                .iter()
                .zip(w.masses())
                .zip(&values)
                .enumerate()
            {
                s += &format!("{},{},{},{}\n", k + 1, num(*x), num(*m), num(*v));
            }
            s
        }
    };
    Ok((text, EXIT_OK))
}

pub fn cmd_matrix(c: &RunConfig, kind: MatrixKind) -> crate::Result<(String, i32)> {
    let p = c.params()?;
    let rows = section(&p, c.n, kind)?.matrix.to_rows();
    let text = match c.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("k");
            for j in 1..=c.n {
                s += &format!(",{j}");
            }
            s.push('\n');
            for (i, row) in rows.iter().enumerate() {
                s += &(i + 1).to_string();
                for v in row {
                    s.push(',');
                    s += &num(*v);
                }
                s.push('\n');
            }
            s
        }
    };
    Ok((text, EXIT_OK))
}

pub fn cmd_spectrum(c: &RunConfig) -> crate::Result<(String, i32)> {
    let p = c.params()?;
    let spectrum = compute_spectrum(&p, c.n, c.formulation.into(), c.count.unwrap_or(c.n))?;
    let text = match c.format {
        Format::Json => to_json(&SpectrumOut {
            params: (&p).into(),
            n: c.n,
            formulation: spectrum.formulation,
            eigenvalues: spectrum.eigenvalues,
        }),
        Format::Csv => {
            let mut s = String::from("k,lambda\n");
            for (k, v) in spectrum.eigenvalues.iter().enumerate() {
                s += &format!("{},{}\n", k + 1, num(*v));
            }
            s
        }
    };
    Ok((text, EXIT_OK))
}

fn report_csv(s: &mut String, branch: &str, r: &AsymptoticsReport) {
    for (i, c) in r.per_k_c.iter().enumerate() {
        let k = r.window.0 + i;
        *s += &format!(
            "{branch},{k},{},{},{}\n",
            num(*c),
            num(r.c_estimate),
            num(r.max_rel_dispersion)
        );
    }
}

pub fn cmd_asymptotics(c: &RunConfig) -> crate::Result<(String, i32)> {
    let p = c.params()?;
    let formulation: Formulation = c.formulation.into();
    let count = c.count.unwrap_or(c.n);
    let spectrum = compute_spectrum(&p, c.n, formulation, count)?;
    let window = match c.window {
        Some(w) => w,
        None => stable_window(&p, c.n, formulation)?,
    };
    let mut out = AsymptoticsOut {
        params: (&p).into(),
        n: c.n,
        formulation,
        definite: None,
        indefinite: None,
    };
    if p.is_definite() {
        out.definite = Some(estimate_c(&spectrum, window)?);
    } else {
        out.indefinite = Some(indefinite_report(&spectrum, window)?);
    }
    let text = match c.format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut s = String::from("branch,k,c_k,c_estimate,max_rel_dispersion\n");
            if let Some(r) = &out.definite {
                report_csv(&mut s, "all", r);
            }
            if let Some(r) = &out.indefinite {
                report_csv(&mut s, "positive", &r.positive);
                report_csv(&mut s, "negative", &r.negative);
            }
            s
        }
    };
    Ok((text, EXIT_OK))
}

fn check(name: &str, value: f64, bound: f64) -> Check {
    Check {
        name: name.to_string(),
        passed: value <= bound,
        value,
        bound,
    }
}

pub fn cmd_verify(c: &RunConfig, tol_scale: f64) -> crate::Result<(String, i32)> {
    let p = c.params()?;
    if !(tol_scale.is_finite() && tol_scale >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance scale {tol_scale}")));
    }
    if c.n < 2 {
        return Err(Error::InvalidInput("verify needs N ≥ 2".into()));
    }
    let n = c.n;
    let formulation: Formulation = c.formulation.into();
    let mut checks = Vec::new();

    checks.push(check(
        "fixed_point_residual",
        fixed_point_residual(&p, FIXED_POINT_DEPTH)?,
        1e-12 * tol_scale,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let mut worst = 0.0f64;
    for _ in 0..VERIFY_PAIRS {
        let u: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
        let defect = symmetry_defect(&p, &u, &v, n)?;
        worst = worst.max(defect.abs() / (norm(&u) * norm(&v)));
    }
    checks.push(check("symmetry_defect", worst, 1e-12 * tol_scale));

    let pairs = pencil_eigenpairs(&p, n)?;
    let mut form = 0.0f64;
    let mut boundary = 0.0f64;
    for pair in &pairs {
        let (lhs, rhs) = quadratic_form_sides(&p, &pair.slopes, pair.lambda, n);
        form = form.max((lhs - rhs).abs() / lhs.abs());
        boundary = boundary.max(boundary_functional(&p, &pair.slopes).abs());
    }
    checks.push(check("form_identity", form, 1e-9 * tol_scale));
    checks.push(check("boundary_functional", boundary, 1e-9 * tol_scale));

    let cv = cross_validate(&p, n, n)?;
    checks.push(check(
        "fem_vs_green",
        cv.max_fem_vs_green(),
        1e-10 * tol_scale,
    ));

    let spectrum = compute_spectrum(&p, n, Formulation::Fem, n)?;
    let mismatch = spectrum.inertia().0.abs_diff(negative_mass_count(&p, n)?);
    checks.push(check("inertia", mismatch as f64, 0.0));

    if formulation == Formulation::Jacobi {
        let jac = compute_spectrum(&p, n, Formulation::Jacobi, n)?;
        let wrong_sign = jac
            .eigenvalues
            .iter()
            .filter(|v| v.signum() != p.r().signum())
            .count();
        checks.push(check("jacobi_sign", wrong_sign as f64, 0.0));
    }

    let passed = checks.iter().all(|c| c.passed);
    let out = VerifyOut {
        params: (&p).into(),
        n,
        checks,
        passed,
    };
    let text = match c.format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut s = String::from("check,status,value,bound\n");
            for ch in &out.checks {
                let status = if ch.passed { "pass" } else { "fail" };
                s += &format!("{},{status},{},{}\n", ch.name, num(ch.value), num(ch.bound));
            }
            s
        }
    };
    Ok((text, if passed { EXIT_OK } else { EXIT_VERIFY }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["selfsim"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn weight_csv() {
        let (code, out, _) = run_str(&["weight", "--n", "3", "--format", "csv"]);
        assert_eq!(code, 0);
        let rows: Vec<&str> = out.lines().collect();
        assert_eq!(rows[0], "k,x,m,p");
        assert!(rows[1].starts_with("1,0.5,1.0,"));
        assert!(rows[2].starts_with("2,0.75,0.5,"));
        assert!(rows[3].starts_with("3,0.875,0.25,"));
    }

    #[test]
    fn validation_messages() {
        let (code, _, err) = run_str(&["weight", "--a", "1.5"]);
        assert_eq!(code, 2);
        assert!(err.contains("a out of (0,1)"));
        let (code, _, err) = run_str(&["weight", "--a", "0.5", "--d", "2"]);
        assert_eq!(code, 2);
        assert!(err.contains("contraction a·d² < 1 violated"));
        let (code, _, err) = run_str(&["matrix", "--kind", "sym", "--d", "-0.5", "--n", "3"]);
        assert_eq!(code, 2);
        assert!(err.contains("symmetrization requires d > 0"));
        let (code, _, _) = run_str(&["spectrum", "--formulation", "qr"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn matrix_json() {
        let (code, out, _) = run_str(&["matrix", "--kind", "A", "--n", "2"]);
        assert_eq!(code, 0);
        let m: Vec<Vec<f64>> = serde_json::from_str(&out).unwrap();
        assert_eq!(m, vec![vec![1.0, -1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn spectrum_round_trips() {
        let (code, out, _) = run_str(&["spectrum", "--n", "7", "--d", "-0.5"]);
        assert_eq!(code, 0);
        let parsed: SpectrumOut = serde_json::from_str(&out).unwrap();
        assert_eq!(to_json(&parsed), out);
        let (_, again, _) = run_str(&["spectrum", "--n", "7", "--d", "-0.5"]);
        assert_eq!(again, out);
        let (code, out, _) = run_str(&["spectrum", "--n", "4", "--count", "0"]);
        assert_eq!(code, 0);
        let parsed: SpectrumOut = serde_json::from_str(&out).unwrap();
        assert!(parsed.eigenvalues.is_empty());
    }

    #[test]
    fn numerical_failure_exit() {
        let (code, _, err) = run_str(&["matrix", "--kind", "ABinv", "--n", "1000"]);
        assert_eq!(code, 3);
        assert!(err.contains("RangeOverflow"));
    }

    #[test]
    fn empty_window_exit() {
        let (code, _, err) = run_str(&["asymptotics", "--n", "20", "--window", "15:40"]);
        assert_eq!(code, 2);
        assert!(err.contains("empty window"));
    }

    #[test]
    fn window_parser() {
        assert_eq!(parse_window("10:20"), Ok((10, 20)));
        assert!(parse_window("10-20").is_err());
    }
}
