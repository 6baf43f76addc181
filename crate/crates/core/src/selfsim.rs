//! Self-similar step functions of zero spectral order and their jump measures.
//!
//! The similarity operator acts on functions on `[0, 1]` by
//!
//! ```text
//! G(f)(x) = β₁                          for x in [0, 1 − a)
//! G(f)(x) = d·f((x − 1 + a)/a) + β₂      for x in (1 − a, 1]
//! ```
//!
//! and is a contraction in L²[0,1] whenever `a·d² < 1`. Its fixed point `P` is
//! piecewise constant with breakpoints `x_k = 1 − a^k` accumulating at 1, and
//! its distributional derivative is the discrete weight `Σ m_k δ(x − x_k)`.
//!
//! Breakpoints are stored through their distance to 1 (`gap_k = a^k`, built by
//! repeated multiplication). The affine pullback in `G` then maps a gap `g` to
//! `a·g`, which reproduces the gaps of a deeper truncation bit for bit.

use crate::error::{Error, Result};

const BREAKPOINT_REL_TOL: f64 = 1e-15;
const UNDERFLOW_GUARD: f64 = 1e-300;
const OVERFLOW_GUARD: f64 = 1e290;

/// Validated similarity parameters `(a, d, β₁, β₂)` with the derived `q` and `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarParams {
    a: f64,
    d: f64,
    beta1: f64,
    beta2: f64,
    q: f64,
    r: f64,
    max_order: usize,
    max_weight_order: usize,
}

impl SelfSimilarParams {
    /// Validates the tuple and computes `q = 1/(a·d)` and `r = (1 − a)(d·β₁ + β₂ − β₁)`.
    pub fn new(a: f64, d: f64, beta1: f64, beta2: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("d", d), ("beta1", beta1), ("beta2", beta2)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::OutOfRange(a));
        }
        if d == 0.0 {
            return Err(Error::DegenerateWeight("d = 0"));
        }
        let contraction = a * d * d;
        if contraction >= 1.0 {
            return Err(Error::NotContractive(contraction));
        }
        let jump = d * beta1 + beta2 - beta1;
        let scale = (d * beta1).abs() + beta1.abs() + beta2.abs();
        if jump == 0.0 || jump.abs() <= 4.0 * f64::EPSILON * scale {
            return Err(Error::DegenerateWeight("r = 0 (d·β₁ + β₂ − β₁ = 0)"));
        }
        let q = 1.0 / (a * d);
        let r = (1.0 - a) * jump;
        debug_assert!(q.abs() > 1.0);

        let max_weight_order = largest_order(|n| a.powi(n) > UNDERFLOW_GUARD, a.ln().abs());
        let max_q_order = largest_order(|n| q.abs().powi(n) < OVERFLOW_GUARD, q.abs().ln());
        Ok(Self {
            a,
            d,
            beta1,
            beta2,
            q,
            r,
            max_order: max_weight_order.min(max_q_order),
            max_weight_order,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    /// `q = 1/(a·d)`; negative in the indefinite case.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `r = (1 − a)(d·β₁ + β₂ − β₁)`.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// The common jump factor `d·β₁ + β₂ − β₁ = m₁`.
    pub fn first_mass(&self) -> f64 {
        self.r / (1.0 - self.a)
    }

    pub fn is_definite(&self) -> bool {
        self.d > 0.0
    }

    /// Largest truncation order with `a^N > 1e−300` and `|q|^N < 1e290`.
    ///
    /// Matrices whose entries grow like `q^N` (Jacobi sections, stiffness)
    /// are limited to this order.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Largest order for which the gaps `a^N` stay above the underflow guard.
    pub fn max_weight_order(&self) -> usize {
        self.max_weight_order
    }

    pub(crate) fn check_order(&self, n: usize) -> Result<()> {
        if n > self.max_order {
            return Err(Error::RangeOverflow {
                order: n,
                limit: self.max_order,
            });
        }
        Ok(())
    }

    /// Value of `P` on the k-th interval (`k = 0` is `[0, 1 − a)`).
    ///
    /// `d^k·β₁ + β₂·(1 + d + … + d^{k−1})`.
    pub fn step_value(&self, k: usize) -> f64 {
        let mut power = 1.0;
        let mut geometric = 0.0;
        for _ in 0..k {
            geometric += power;
            power *= self.d;
        }
        power * self.beta1 + self.beta2 * geometric
    }
}

/// Largest `n ≥ 0` with `ok(n)`, seeded from a logarithmic estimate.
fn largest_order(ok: impl Fn(i32) -> bool, log_step: f64) -> usize {
    const CAP: i32 = i32::MAX / 2;
    let mut n = if log_step > 0.0 {
        ((300.0 * std::f64::consts::LN_10) / log_step).min(CAP as f64) as i32
    } else {
        CAP
    };
    while n > 0 && !ok(n) {
        n -= 1;
    }
    while n < CAP && ok(n + 1) {
        n += 1;
    }
    n.max(0) as usize
}

/// A right-continuous step function on `[0, 1]` with breakpoints accumulating at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    /// `1 − breakpoint`, strictly decreasing in `(0, 1)`.
    gaps: Vec<f64>,
    /// `values[k]` holds on the interval between breakpoints `k` and `k + 1`.
    values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        Self {
            gaps: Vec::new(),
            values: vec![value],
        }
    }

    /// Builds a step function from ascending breakpoints in `(0, 1)` and
    /// `breakpoints.len() + 1` interval values.
    pub fn new(breakpoints: &[f64], values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        let gaps: Vec<f64> = breakpoints.iter().map(|x| 1.0 - x).collect();
        let ordered = gaps.windows(2).all(|w| w[0] > w[1]);
        if !ordered || gaps.iter().any(|&g| !(g > 0.0 && g < 1.0)) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing inside (0,1)".into(),
            ));
        }
        Ok(Self { gaps, values })
    }

    /// The depth-K truncation of the fixed point `P`, from the closed form.
    pub fn self_similar(params: &SelfSimilarParams, depth: usize) -> Self {
        let mut gaps = Vec::with_capacity(depth);
        let mut gap = 1.0;
        for _ in 0..depth {
            gap *= params.a();
            gaps.push(gap);
        }
        let values = (0..=depth).map(|k| params.step_value(k)).collect();
        Self { gaps, values }
    }

    pub fn depth(&self) -> usize {
        self.gaps.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| 1.0 - g).collect()
    }

    fn value_at_gap(&self, gap: f64) -> f64 {
        self.values[self.gaps.partition_point(|&g| g > gap)]
    }

    /// Evaluates away from breakpoints; at a breakpoint the right-hand value is returned.
    pub fn eval(&self, x: f64) -> f64 {
        self.value_at_gap(1.0 - x)
    }

    /// L² distance between `self` and `other` on `[0, 1 − min_gap]`.
    pub fn l2_distance(&self, other: &StepFunction, min_gap: f64) -> f64 {
        let mut cuts: Vec<f64> = std::iter::once(1.0)
            .chain(self.gaps.iter().copied())
            .chain(other.gaps.iter().copied())
            .filter(|&g| g > min_gap)
            .chain(std::iter::once(min_gap))
            .collect();
        cuts.sort_by(|x, y| y.total_cmp(x));
        cuts.dedup();

        let sum: f64 = cuts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let diff = self.value_at_gap(mid) - other.value_at_gap(mid);
                (w[0] - w[1]) * diff * diff
            })
            .sum();
        sum.sqrt()
    }
}

/// Closed-form value of `P(x)`.
///
/// `depth` bounds the interval index: `x` must lie below `1 − a^{depth+1}`.
pub fn eval_p(params: &SelfSimilarParams, x: f64, depth: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutsideDomain(x));
    }
    let tail = 1.0 - x;
    let mut index = 0;
    let mut gap = 1.0;
    for k in 1..=depth + 1 {
        gap *= params.a();
        if (x - (1.0 - gap)).abs() <= BREAKPOINT_REL_TOL * x.abs() {
            return Err(Error::AtBreakpoint(x));
        }
        if tail < gap {
            index = k;
        } else {
            break;
        }
    }
    if index > depth {
        return Err(Error::DepthExceeded { x, depth });
    }
    Ok(params.step_value(index))
}

/// One application of the similarity operator `G`.
pub fn apply_g(params: &SelfSimilarParams, f: &StepFunction) -> StepFunction {
    let a = params.a();
    let gaps = std::iter::once(a)
        .chain(f.gaps.iter().map(|g| g * a))
        .collect();
    let values = std::iter::once(params.beta1())
        .chain(f.values.iter().map(|v| params.d() * v + params.beta2()))
        .collect();
    StepFunction { gaps, values }
}

/// `‖G(P_K) − P_K‖` in L² over `[0, 1 − a^K]`, where `P_K` is the closed-form
/// depth-K truncation. Vanishes up to roundoff.
pub fn fixed_point_residual(params: &SelfSimilarParams, depth: usize) -> Result<f64> {
    if depth < 2 {
        return Err(Error::InvalidInput(format!(
            "fixed-point residual needs depth ≥ 2, got {depth}"
        )));
    }
    let truncated = StepFunction::self_similar(params, depth);
    let image = apply_g(params, &truncated);
    let min_gap = truncated.gaps[depth - 1];
    Ok(image.l2_distance(&truncated, min_gap))
}

/// The first `N` point masses of the jump measure of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWeight {
    a: f64,
    positions: Vec<f64>,
    gaps: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteWeight {
    pub fn order(&self) -> usize {
        self.masses.len()
    }

    /// Mass positions `x_k = 1 − a^k`.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Distances `1 − x_k = a^k`, stored exactly as built.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Masses `m_k = d^{k−1}·(d·β₁ + β₂ − β₁)`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn scale(&self) -> f64 {
        self.a
    }

    /// Lengths `h_1 … h_N` of the intervals between consecutive nodes
    /// (`x_0 = 0`), followed by the closing interval `1 − x_N = a^N`.
    pub fn interval_lengths(&self) -> Vec<f64> {
        let one_minus_a = 1.0 - self.a;
        let n = self.order();
        let mut h = Vec::with_capacity(n + 1);
        h.push(one_minus_a);
        h.extend(self.gaps[..n - 1].iter().map(|g| g * one_minus_a));
        h.push(self.gaps[n - 1]);
        h
    }
}

/// Truncates the discrete weight to its first `n` masses.
pub fn weight_truncation(params: &SelfSimilarParams, n: usize) -> Result<DiscreteWeight> {
    if n == 0 {
        return Err(Error::InvalidInput("weight order must be ≥ 1".into()));
    }
    let overflow = || Error::RangeOverflow {
        order: n,
        limit: params.max_weight_order(),
    };
    if n > params.max_weight_order() {
        return Err(overflow());
    }
    let mut gaps = Vec::with_capacity(n);
    let mut masses = Vec::with_capacity(n);
    let mut gap = 1.0;
    let mut mass = params.first_mass();
    for _ in 0..n {
        gap *= params.a();
        gaps.push(gap);
        masses.push(mass);
        mass *= params.d();
    }
    if gap.is_nan() || gap <= UNDERFLOW_GUARD || !masses[n - 1].is_normal() {
        return Err(overflow());
    }
    let positions = gaps.iter().map(|g| 1.0 - g).collect();
    Ok(DiscreteWeight {
        a: params.a(),
        positions,
        gaps,
        masses,
    })
}
