//! Spectra of the truncated problems and the fits of `λ_k ≈ c·q^k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigensolve::{
    dense_cholesky, dense_symmetric_eigs, inverse_iteration, reciprocals, solve_pencil,
    tridiag_eigs_all, PencilProblem,
};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operators::{
    green_kernel_matrix, mass_matrix, stiffness_matrix, symmetrized_section, SlopeSequence,
};
use crate::selfsim::{weight_truncation, DiscreteWeight, SelfSimilarParams};

/// Relative tolerance handed to the eigensolvers.
pub const SOLVER_TOL: f64 = 1e-15;
/// Smallest index admitted into a definite-case fit.
pub const MIN_FIT_INDEX: usize = 8;
/// Smallest branch index admitted into an indefinite-case fit.
pub const MIN_BRANCH_INDEX: usize = 4;
/// Truncation-stability threshold `|λ_k(N) − λ_k(N/2)|/|λ_k|`.
pub const STABILITY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    /// Bisection on the symmetrized `A·B⁻¹` section.
    #[serde(rename = "jacobi-section")]
    Jacobi,
    /// Piecewise-linear pencil `K·y = λ·M·y`.
    #[serde(rename = "fem-pencil")]
    Fem,
    /// Reciprocal eigenvalues of the Green-kernel matrix `G·M`.
    #[serde(rename = "green-kernel")]
    Green,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::Jacobi => "jacobi-section",
            Formulation::Fem => "fem-pencil",
            Formulation::Green => "green-kernel",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jacobi" | "jacobi-section" => Ok(Formulation::Jacobi),
            "fem" | "fem-pencil" => Ok(Formulation::Fem),
            "green" | "green-kernel" => Ok(Formulation::Green),
            _ => Err(Error::InvalidInput(format!("unknown formulation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub params: SelfSimilarParams,
    pub n: usize,
    pub formulation: Formulation,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl SpectrumResult {
    /// Positive eigenvalues, ascending.
    pub fn positive(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|v| *v > 0.0)
            .collect()
    }

    /// Negative eigenvalues by increasing magnitude.
    pub fn negative(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .rev()
            .copied()
            .filter(|v| *v < 0.0)
            .collect()
    }

    /// `(negative, positive)` counts.
    pub fn inertia(&self) -> (usize, usize) {
        let neg = self.eigenvalues.iter().filter(|v| **v < 0.0).count();
        (neg, self.eigenvalues.len() - neg)
    }

    /// Magnitudes in increasing order.
    pub fn magnitudes(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.eigenvalues.iter().map(|v| v.abs()).collect();
        m.sort_by(f64::total_cmp);
        m
    }
}

/// Number of negative masses in the order-`n` truncation.
pub fn negative_mass_count(params: &SelfSimilarParams, n: usize) -> Result<usize> {
    Ok(weight_truncation(params, n)?
        .masses()
        .iter()
        .filter(|m| **m < 0.0)
        .count())
}

pub fn compute_spectrum(
    params: &SelfSimilarParams,
    n: usize,
    formulation: Formulation,
    count: usize,
) -> Result<SpectrumResult> {
    if n == 0 {
        return Err(Error::InvalidInput("truncation order must be ≥ 1".into()));
    }
    let mut values = match formulation {
        Formulation::Jacobi => {
            let t = symmetrized_section(params, n)?;
            let r = params.r();
            tridiag_eigs_all(&t, SOLVER_TOL)?
                .values
                .into_iter()
                .map(|mu| mu / r)
                .collect()
        }
        Formulation::Fem => {
            let w = weight_truncation(params, n)?;
            solve_pencil(&pencil(&w)?, SOLVER_TOL)?.values
        }
        Formulation::Green => green_spectrum(&weight_truncation(params, n)?)?,
    };
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    values.truncate(count.min(n));
    values.sort_by(f64::total_cmp);
    Ok(SpectrumResult {
        params: *params,
        n,
        formulation,
        eigenvalues: values,
    })
}

pub fn pencil(weight: &DiscreteWeight) -> Result<PencilProblem> {
    PencilProblem::new(stiffness_matrix(weight)?, mass_matrix(weight))
}

fn green_spectrum(weight: &DiscreteWeight) -> Result<Vec<f64>> {
    let m = weight.masses();
    let n = weight.order();
    let sign = m[0].signum();
    let s = if m.iter().all(|v| v.signum() == sign) {
        // G·M is similar to σ·√|M|·G·√|M|
        let root: Vec<f64> = m.iter().map(|v| v.abs().sqrt()).collect();
        let c = green_kernel_matrix(weight);
        let mut s = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = sign * root[i] * (c[(i, j)] / m[j]) * root[j];
            }
        }
        s
    } else {
        // G = R·Rᵀ, and G·M is similar to Rᵀ·M·R
        let mut g = DenseMatrix::zeros(n);
        let x = weight.positions();
        let gap = weight.gaps();
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = x[i.min(j)] * gap[i.max(j)];
            }
        }
        let r = dense_cholesky(&g)?;
        let mut s = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (i.max(j)..n).map(|k| r[(k, i)] * m[k] * r[(k, j)]).sum();
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    };
    reciprocals(&dense_symmetric_eigs(&s, SOLVER_TOL)?.values)
}

fn rel_diffs(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(u, v)| (u - v).abs() / v.abs())
        .collect()
}

/// Pairwise relative differences, one entry per eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub fem_vs_green: Vec<f64>,
    /// Absent in the indefinite case.
    pub jacobi_vs_fem: Option<Vec<f64>>,
}

impl CrossValidation {
    pub fn max_fem_vs_green(&self) -> f64 {
        self.fem_vs_green.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_jacobi_vs_fem(&self) -> Option<f64> {
        self.jacobi_vs_fem
            .as_ref()
            .map(|v| v.iter().copied().fold(0.0, f64::max))
    }
}

pub fn cross_validate(
    params: &SelfSimilarParams,
    n: usize,
    count: usize,
) -> Result<CrossValidation> {
    if count == 0 {
        return Ok(CrossValidation {
            fem_vs_green: vec![],
            jacobi_vs_fem: params.is_definite().then(Vec::new),
        });
    }
    let fem = compute_spectrum(params, n, Formulation::Fem, count)?;
    let green = compute_spectrum(params, n, Formulation::Green, count)?;
    let jacobi_vs_fem = if params.is_definite() {
        let jac = compute_spectrum(params, n, Formulation::Jacobi, count)?;
        Some(rel_diffs(&jac.eigenvalues, &fem.eigenvalues))
    } else {
        None
    };
    Ok(CrossValidation {
        fem_vs_green: rel_diffs(&fem.eigenvalues, &green.eigenvalues),
        jacobi_vs_fem,
    })
}

/// Fit of one eigenvalue sequence against `c·q^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub c_estimate: f64,
    pub q_used: f64,
    /// 1-based inclusive index window.
    pub window: (usize, usize),
    /// `|λ_k|/q^{e(k)}` for `k` in the window.
    pub per_k_c: Vec<f64>,
    pub max_rel_dispersion: f64,
    /// Consecutive ratios of the whole sequence.
    pub ratio_list: Vec<f64>,
    /// `−1` when the fitted eigenvalues are negative.
    pub sign: f64,
}

fn check_window(window: (usize, usize), first: usize, len: usize) -> Result<()> {
    let (k1, k2) = window;
    if k1 < first || k1 > k2 || k2 > len {
        return Err(Error::EmptyWindow);
    }
    Ok(())
}

/// Fits `magnitudes[k−1] ≈ c·q^{exponent(k)}` over `window`.
fn fit(
    magnitudes: &[f64],
    q: f64,
    window: (usize, usize),
    exponent: impl Fn(usize) -> i32,
    sign: f64,
) -> Result<AsymptoticsReport> {
    let per_k_c: Vec<f64> = (window.0..=window.1)
        .map(|k| magnitudes[k - 1] / q.powi(exponent(k)))
        .collect();
    if per_k_c.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::EmptyWindow);
    }
    let log_mean = per_k_c.iter().map(|c| c.ln()).sum::<f64>() / per_k_c.len() as f64;
    let c = if per_k_c.len() == 1 {
        per_k_c[0]
    } else {
        log_mean.exp()
    };
    let max_rel_dispersion = per_k_c
        .iter()
        .map(|v| (v / c - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(AsymptoticsReport {
        c_estimate: c,
        q_used: q,
        window,
        per_k_c,
        max_rel_dispersion,
        ratio_list: consecutive_ratios(magnitudes),
        sign,
    })
}

fn consecutive_ratios(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Fits `|λ_k| ≈ c·q^k` for magnitudes listed in increasing order.
pub fn estimate_c_from(
    magnitudes: &[f64],
    q: f64,
    window: (usize, usize),
) -> Result<AsymptoticsReport> {
    check_window(window, 1, magnitudes.len())?;
    fit(magnitudes, q, window, |k| k as i32, 1.0)
}

/// Definite-case fit `λ_k ≈ c·q^k` over the 1-based `window`.
pub fn estimate_c(spectrum: &SpectrumResult, window: (usize, usize)) -> Result<AsymptoticsReport> {
    if !spectrum.params.is_definite() {
        return Err(Error::IndefiniteCase);
    }
    let mut report = estimate_c_from(&spectrum.magnitudes(), spectrum.params.q(), window)?;
    if spectrum.eigenvalues.first().is_some_and(|v| *v < 0.0) {
        report.sign = -1.0;
    }
    Ok(report)
}

/// Both branches of the indefinite spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndefiniteReport {
    /// `λ_{j} ≈ c·|q|^{2(j−1)}`.
    pub positive: AsymptoticsReport,
    /// `|λ_{−j}| ≈ c·|q|^{2j−3}`, `j ≥ 2`.
    pub negative: AsymptoticsReport,
    /// `|λ_{−(k+2)}|/λ_{k+1}` for `k = 0, 1, …`.
    pub cross_ratios: Vec<f64>,
    /// `|λ_{−j}|/λ_j` for `j = 1, 2, …`.
    pub aligned_ratios: Vec<f64>,
    /// Listed but not fitted.
    pub lambda_minus_one: Option<f64>,
}

impl IndefiniteReport {
    /// Cross ratios `|λ_{−(k+2)}|/λ_{k+1}` with `k+1` and `k+2` inside the window.
    pub fn cross_ratios_in_window(&self) -> &[f64] {
        let (j1, j2) = self.positive.window;
        let end = (j2 - 1).min(self.cross_ratios.len());
        let start = (j1 - 1).min(end);
        &self.cross_ratios[start..end]
    }
}

/// Indefinite-case report from positive eigenvalues (ascending) and negative
/// eigenvalues by increasing magnitude, the first of which is `λ_{−1}`.
pub fn indefinite_report_from(
    positive: &[f64],
    negative: &[f64],
    q_abs: f64,
    window: (usize, usize),
) -> Result<IndefiniteReport> {
    let neg_mag: Vec<f64> = negative.iter().map(|v| v.abs()).collect();
    check_window(window, 1, positive.len())?;
    check_window(window, 2, neg_mag.len())?;
    let pos = fit(positive, q_abs, window, |j| 2 * (j as i32 - 1), 1.0)?;
    let mut neg = fit(&neg_mag, q_abs, window, |j| 2 * j as i32 - 3, -1.0)?;
    neg.ratio_list = consecutive_ratios(&neg_mag[1..]);
    let cross_ratios = (0..positive.len())
        .take_while(|k| k + 1 < neg_mag.len())
        .map(|k| neg_mag[k + 1] / positive[k])
        .collect();
    let aligned_ratios = positive.iter().zip(&neg_mag).map(|(p, m)| m / p).collect();
    Ok(IndefiniteReport {
        positive: pos,
        negative: neg,
        cross_ratios,
        aligned_ratios,
        lambda_minus_one: negative.first().copied(),
    })
}

pub fn indefinite_report(
    spectrum: &SpectrumResult,
    window: (usize, usize),
) -> Result<IndefiniteReport> {
    if spectrum.params.is_definite() {
        return Err(Error::WrongSign);
    }
    indefinite_report_from(
        &spectrum.positive(),
        &spectrum.negative(),
        spectrum.params.q().abs(),
        window,
    )
}

/// Consecutive ratios `λ_{k+1}/λ_k` in stored order.
pub fn ratio_diagnostics(spectrum: &SpectrumResult) -> Vec<f64> {
    consecutive_ratios(&spectrum.eigenvalues)
}

/// Longest run of leading indices with `|x_k − y_k|/|x_k| ≤ tol`.
fn stable_prefix(x: &[f64], y: &[f64], tol: f64) -> usize {
    x.iter()
        .zip(y)
        .take_while(|(u, v)| (*u - *v).abs() <= tol * u.abs())
        .count()
}

/// Index window admitted into the fits at truncation `n`.
///
/// Definite case: eigenvalue indices from [`MIN_FIT_INDEX`] up to the last
/// index that moves by at most [`STABILITY_TOL`] between `n/2` and `n`.
/// Indefinite case: branch indices from [`MIN_BRANCH_INDEX`], stable in both
/// branches.
pub fn stable_window(
    params: &SelfSimilarParams,
    n: usize,
    formulation: Formulation,
) -> Result<(usize, usize)> {
    let full = compute_spectrum(params, n, formulation, n)?;
    let half = compute_spectrum(params, n / 2, formulation, n / 2)?;
    let (first, last) = if params.is_definite() {
        (
            MIN_FIT_INDEX,
            stable_prefix(&full.magnitudes(), &half.magnitudes(), STABILITY_TOL),
        )
    } else {
        let pos = stable_prefix(&full.positive(), &half.positive(), STABILITY_TOL);
        let neg = stable_prefix(&full.negative(), &half.negative(), STABILITY_TOL);
        (MIN_BRANCH_INDEX, pos.min(neg))
    };
    if last < first {
        return Err(Error::EmptyWindow);
    }
    Ok((first, last))
}

/// A pencil eigenpair with its slope sequence normalized to unit energy
/// `Σ a^{k−1}·s_k² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub nodal: Vec<f64>,
    pub slopes: SlopeSequence,
}

/// All eigenpairs of the order-`n` pencil, ascending in `λ`.
pub fn pencil_eigenpairs(params: &SelfSimilarParams, n: usize) -> Result<Vec<EigenPair>> {
    let w = weight_truncation(params, n)?;
    let p = pencil(&w)?;
    let values = solve_pencil(&p, SOLVER_TOL)?.values;
    values
        .into_iter()
        .map(|lambda| {
            let y = inverse_iteration(&p, lambda, SOLVER_TOL)?;
            let s = SlopeSequence::from_nodal_values(&w, &y)?;
            let (energy, _) = crate::operators::quadratic_form_sides(params, &s, 0.0, 0);
            let scale = energy.sqrt();
            Ok(EigenPair {
                lambda,
                nodal: y.iter().map(|v| v / scale).collect(),
                slopes: SlopeSequence {
                    slopes: s.slopes.iter().map(|v| v / scale).collect(),
                    tail: s.tail / scale,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        apply_b, boundary_functional, extension_condition_trace, quadratic_form_sides,
    };

    fn canonical() -> SelfSimilarParams {
        SelfSimilarParams::new(0.5, 0.5, 0.0, 1.0).unwrap()
    }

    fn indefinite() -> SelfSimilarParams {
        SelfSimilarParams::new(0.5, -0.5, 0.0, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn synthetic(params: SelfSimilarParams, values: Vec<f64>) -> SpectrumResult {
        SpectrumResult {
            params,
            n: values.len(),
            formulation: Formulation::Fem,
            eigenvalues: values,
        }
    }

    #[test]
    fn closed_form_spectra() {
        let s = 57f64.sqrt();
        for f in [Formulation::Fem, Formulation::Green] {
            let e = compute_spectrum(&canonical(), 2, f, 2).unwrap().eigenvalues;
            assert!(
                rel(e[0], 11.0 - s) <= 1e-12 && rel(e[1], 11.0 + s) <= 1e-12,
                "{f}: {e:?}"
            );
            let e = compute_spectrum(&indefinite(), 2, f, 2)
                .unwrap()
                .eigenvalues;
            let t = 89f64.sqrt();
            assert!(
                rel(e[0], -5.0 - t) <= 1e-12 && rel(e[1], -5.0 + t) <= 1e-12,
                "{f}: {e:?}"
            );
        }
    }

    #[test]
    fn jacobi_rejects_indefinite() {
        assert_eq!(
            compute_spectrum(&indefinite(), 4, Formulation::Jacobi, 4),
            Err(Error::IndefiniteCase)
        );
    }

    #[test]
    fn count_selects_smallest_magnitudes() {
        let full = compute_spectrum(&indefinite(), 10, Formulation::Fem, 10).unwrap();
        let few = compute_spectrum(&indefinite(), 10, Formulation::Fem, 3).unwrap();
        let mut mags = full.magnitudes();
        mags.truncate(3);
        let mut got: Vec<f64> = few.eigenvalues.iter().map(|v| v.abs()).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, mags);
        assert!(compute_spectrum(&canonical(), 5, Formulation::Fem, 0)
            .unwrap()
            .eigenvalues
            .is_empty());
        assert_eq!(
            compute_spectrum(&canonical(), 5, Formulation::Fem, 50)
                .unwrap()
                .eigenvalues
                .len(),
            5
        );
    }

    #[test]
    fn formulation_names() {
        for f in [Formulation::Jacobi, Formulation::Fem, Formulation::Green] {
            assert_eq!(f.name().parse::<Formulation>().unwrap(), f);
        }
        assert_eq!("fem".parse::<Formulation>().unwrap(), Formulation::Fem);
        assert!("qr".parse::<Formulation>().is_err());
    }

    #[test]
    fn fem_matches_green() {
        for p in [
            canonical(),
            indefinite(),
            SelfSimilarParams::new(0.3, 1.5, 0.2, 0.7).unwrap(),
        ] {
            let cv = cross_validate(&p, 20, 20).unwrap();
            assert!(cv.max_fem_vs_green() <= 1e-10, "{:?}", cv.fem_vs_green);
        }
        let cv = cross_validate(&canonical(), 20, 0).unwrap();
        assert!(cv.fem_vs_green.is_empty());
    }

    #[test]
    fn jacobi_section_converges() {
        let p = canonical();
        let j40 = compute_spectrum(&p, 40, Formulation::Jacobi, 10)
            .unwrap()
            .eigenvalues;
        let j60 = compute_spectrum(&p, 60, Formulation::Jacobi, 10)
            .unwrap()
            .eigenvalues;
        let f60 = compute_spectrum(&p, 60, Formulation::Fem, 10)
            .unwrap()
            .eigenvalues;
        for k in 0..10 {
            assert!(rel(j40[k], j60[k]) <= 1e-8);
            assert!(rel(j60[k], f60[k]) <= 1e-6);
        }
    }

    #[test]
    fn inertia_matches_masses() {
        for n in [2usize, 5, 10, 17] {
            let s = compute_spectrum(&indefinite(), n, Formulation::Fem, n).unwrap();
            assert_eq!(
                s.inertia().0,
                negative_mass_count(&indefinite(), n).unwrap()
            );
        }
        let s = compute_spectrum(&indefinite(), 2, Formulation::Green, 2).unwrap();
        assert_eq!(s.inertia(), (1, 1));
    }

    #[test]
    fn negative_r_flips_spectrum() {
        let p = SelfSimilarParams::new(0.5, 0.5, 0.0, -1.0).unwrap();
        let s = compute_spectrum(&p, 6, Formulation::Fem, 6).unwrap();
        let base = compute_spectrum(&canonical(), 6, Formulation::Fem, 6).unwrap();
        for (u, v) in s.eigenvalues.iter().rev().zip(&base.eigenvalues) {
            assert!(rel(-u, *v) <= 1e-12);
        }
        let report = estimate_c(&s, (1, 6)).unwrap();
        assert_eq!(report.sign, -1.0);
    }

    #[test]
    fn geometric_input_fits_exactly() {
        let p = canonical();
        let values: Vec<f64> = (1..=12).map(|k| 7.0 * 4f64.powi(k)).collect();
        let r = estimate_c(&synthetic(p, values.clone()), (3, 10)).unwrap();
        assert!(rel(r.c_estimate, 7.0) <= 1e-15);
        assert!(r.max_rel_dispersion <= 1e-15);
        let single = estimate_c(&synthetic(p, values.clone()), (5, 5)).unwrap();
        assert_eq!(single.c_estimate, values[4] / 4f64.powi(5));
        assert_eq!(single.max_rel_dispersion, 0.0);
        assert!(ratio_diagnostics(&synthetic(p, values))
            .iter()
            .all(|r| *r == 4.0));
    }

    #[test]
    fn window_errors() {
        let s = synthetic(canonical(), vec![4.0, 16.0, 64.0]);
        for w in [(0, 2), (2, 1), (2, 4)] {
            assert_eq!(estimate_c(&s, w), Err(Error::EmptyWindow));
        }
        assert_eq!(
            estimate_c(&synthetic(indefinite(), vec![1.0]), (1, 1)),
            Err(Error::IndefiniteCase)
        );
        assert_eq!(indefinite_report(&s, (1, 1)), Err(Error::WrongSign));
    }

    #[test]
    fn ratio_examples() {
        let s = synthetic(canonical(), vec![3.4501660, 18.5498340]);
        let r = ratio_diagnostics(&s);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 5.37650).abs() < 1e-5);
        assert!(ratio_diagnostics(&synthetic(canonical(), vec![1.0])).is_empty());
    }

    #[test]
    fn synthetic_indefinite_branches() {
        let pos: Vec<f64> = (0..8).map(|k| 3.0 * 16f64.powi(k)).collect();
        let mut neg = vec![-1.0];
        neg.extend((0..8).map(|k| -12.0 * 16f64.powi(k)));
        let r = indefinite_report_from(&pos, &neg, 4.0, (2, 6)).unwrap();
        assert!(rel(r.positive.c_estimate, 3.0) <= 1e-14);
        assert!(rel(r.negative.c_estimate, 3.0) <= 1e-14);
        assert!(r.cross_ratios.iter().all(|v| rel(*v, 4.0) <= 1e-15));
        assert!(r.positive.ratio_list.iter().all(|v| *v == 16.0));
        assert!(r.negative.ratio_list.iter().all(|v| *v == 16.0));
        assert_eq!(r.lambda_minus_one, Some(-1.0));
        assert_eq!(r.cross_ratios_in_window().len(), 4);
        assert_eq!(
            indefinite_report_from(&pos, &neg, 4.0, (1, 3)),
            Err(Error::EmptyWindow)
        );
    }

    #[test]
    fn definite_ratios_approach_q() {
        let s = compute_spectrum(&canonical(), 60, Formulation::Green, 60).unwrap();
        let ratios = ratio_diagnostics(&s);
        for k in 8..=20 {
            assert!(
                rel(ratios[k - 1], 4.0) <= 0.05,
                "k = {k}: {}",
                ratios[k - 1]
            );
        }
        let w = stable_window(&canonical(), 60, Formulation::Green).unwrap();
        assert_eq!(w.0, MIN_FIT_INDEX);
        assert!(w.1 >= 20, "{w:?}");
    }

    #[test]
    fn indefinite_branches_with_negative_r() {
        let p = SelfSimilarParams::new(0.5, -0.5, 0.0, -1.0).unwrap();
        let s = compute_spectrum(&p, 40, Formulation::Fem, 40).unwrap();
        let w = stable_window(&p, 40, Formulation::Fem).unwrap();
        let r = indefinite_report(&s, w).unwrap();
        assert!(r
            .cross_ratios_in_window()
            .iter()
            .all(|v| rel(*v, 4.0) <= 1e-6));
        assert!(rel(r.positive.c_estimate, r.negative.c_estimate) <= 1e-9);
    }

    #[test]
    fn eigenpairs_satisfy_identities() {
        for p in [canonical(), indefinite()] {
            let n = 12;
            for pair in pencil_eigenpairs(&p, n).unwrap() {
                let (lhs, rhs) = quadratic_form_sides(&p, &pair.slopes, pair.lambda, n);
                assert!(rel(rhs, lhs) <= 1e-9, "λ = {}: {lhs} vs {rhs}", pair.lambda);
                assert!((lhs - 1.0).abs() <= 1e-12);
                assert!(boundary_functional(&p, &pair.slopes).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn eigenvector_selects_extension() {
        let p = canonical();
        let pairs = pencil_eigenpairs(&p, 40).unwrap();
        let u = apply_b(&p, &pairs[0].slopes, 40);
        let trace = extension_condition_trace(&p, &u, 40).unwrap();
        assert!(trace[39].abs() <= 1e-6 * trace[0].abs());
    }
}
