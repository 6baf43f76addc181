//! Finite sections of the infinite matrices attached to the point-mass
//! Sturm–Liouville problem `−y″ = λ·ρ·y`, `y(0) = y(1) = 0`, together with
//! the quadratic forms and boundary functionals on slope sequences.
//!
//! A piecewise-linear eigenfunction has slope `s_k` on `(x_{k−1}, x_k)` and the
//! jump conditions at the masses read
//!
//! ```text
//! s_k − s_{k+1} = λ·r·d^{k−1}·Σ_{j≤k} a^{j−1}·s_j,
//! ```
//!
//! i.e. `A·s = λ·r·B·s` with `A` the bidiagonal difference matrix and `B`
//! lower triangular, `B[k][j] = d^{k−1}·a^{j−1}`. With `u = B·s` this becomes
//! the Jacobi matrix problem `A·B⁻¹·u = λ·r·u`.
//!
//! Indices in the docs are 1-based; slices are 0-based.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, TridiagonalSymmetric};
use crate::selfsim::{weight_truncation, DiscreteWeight, SelfSimilarParams};

/// Which infinite matrix a finite section is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    /// Difference matrix: unit diagonal, −1 superdiagonal.
    A,
    /// `B[k][j] = d^{k−1}·a^{j−1}` for `j ≤ k`.
    B,
    Binv,
    /// The Jacobi matrix `A·B⁻¹`.
    ABinv,
    /// Symmetrized Jacobi section (requires `d > 0`).
    Sym,
    Stiffness,
    Mass,
    /// Green-kernel matrix `G(x_i, x_j)·m_j`.
    Green,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 8] = [
        MatrixKind::A,
        MatrixKind::B,
        MatrixKind::Binv,
        MatrixKind::ABinv,
        MatrixKind::Sym,
        MatrixKind::Stiffness,
        MatrixKind::Mass,
        MatrixKind::Green,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::A => "A",
            MatrixKind::B => "B",
            MatrixKind::Binv => "Binv",
            MatrixKind::ABinv => "ABinv",
            MatrixKind::Sym => "sym",
            MatrixKind::Stiffness => "K",
            MatrixKind::Mass => "M",
            MatrixKind::Green => "green",
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MatrixKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown matrix kind {s:?}")))
    }
}

/// The `N × N` leading principal section of one of the infinite matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSection {
    pub kind: MatrixKind,
    pub matrix: DenseMatrix,
}

impl MatrixSection {
    pub fn order(&self) -> usize {
        self.matrix.order()
    }
}

pub fn section(params: &SelfSimilarParams, n: usize, kind: MatrixKind) -> Result<MatrixSection> {
    if n == 0 {
        return Err(Error::InvalidInput("section order must be ≥ 1".into()));
    }
    let (a, d, q) = (params.a(), params.d(), params.q());
    let mut m = DenseMatrix::zeros(n);
    match kind {
        MatrixKind::A => {
            for k in 0..n {
                m[(k, k)] = 1.0;
                if k + 1 < n {
                    m[(k, k + 1)] = -1.0;
                }
            }
        }
        MatrixKind::B => {
            params.check_order(n)?;
            let mut row_scale = 1.0;
            for k in 0..n {
                let mut col_scale = 1.0;
                for j in 0..=k {
                    m[(k, j)] = row_scale * col_scale;
                    col_scale *= a;
                }
                row_scale *= d;
            }
        }
        MatrixKind::Binv => {
            params.check_order(n)?;
            for k in 0..n {
                m[(k, k)] = q.powi(k as i32);
                if k + 1 < n {
                    m[(k + 1, k)] = -d * q.powi(k as i32 + 1);
                }
            }
        }
        MatrixKind::ABinv => {
            params.check_order(n)?;
            let alpha = 1.0 + d * q;
            for k in 0..n {
                m[(k, k)] = alpha * q.powi(k as i32);
                if k + 1 < n {
                    let qk = q.powi(k as i32 + 1);
                    m[(k, k + 1)] = -qk;
                    m[(k + 1, k)] = -d * qk;
                }
            }
        }
        MatrixKind::Sym => m = symmetrized_section(params, n)?.to_dense(),
        MatrixKind::Stiffness => {
            params.check_order(n)?;
            m = stiffness_matrix(&weight_truncation(params, n)?)?.to_dense();
        }
        MatrixKind::Mass => {
            m = DenseMatrix::from_diagonal(&mass_matrix(&weight_truncation(params, n)?))
        }
        MatrixKind::Green => m = green_kernel_matrix(&weight_truncation(params, n)?),
    }
    Ok(MatrixSection { kind, matrix: m })
}

/// Symmetric tridiagonal matrix similar to the `A·B⁻¹` section.
///
/// The similarity is the diagonal scaling by the square root of the
/// `ℓ²` weight `(1/d)^{k−1}`: diagonal `(1+dq)·q^{k−1}`, off-diagonal
/// `√d·q^k = √(M[k][k+1]·M[k+1][k])`.
pub fn symmetrized_section(params: &SelfSimilarParams, n: usize) -> Result<TridiagonalSymmetric> {
    if !params.is_definite() {
        return Err(Error::IndefiniteCase);
    }
    if n == 0 {
        return Err(Error::InvalidInput("section order must be ≥ 1".into()));
    }
    params.check_order(n)?;
    let (d, q) = (params.d(), params.q());
    let alpha = 1.0 + d * q;
    let diag = (0..n).map(|k| alpha * q.powi(k as i32)).collect();
    let off = (1..n).map(|k| d.sqrt() * q.powi(k as i32)).collect();
    TridiagonalSymmetric::new(diag, off)
}

/// Dirichlet stiffness matrix of the piecewise-linear trial space with nodes
/// at the mass positions and the closing interval `[x_N, 1]`.
pub fn stiffness_matrix(weight: &DiscreteWeight) -> Result<TridiagonalSymmetric> {
    let h = weight.interval_lengths();
    let n = weight.order();
    let inv: Vec<f64> = h.iter().map(|v| 1.0 / v).collect();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::RangeOverflow {
            order: n,
            limit: n - 1,
        });
    }
    let diag = (0..n).map(|k| inv[k] + inv[k + 1]).collect();
    let off = (0..n - 1).map(|k| -inv[k + 1]).collect();
    TridiagonalSymmetric::new(diag, off)
}

/// Diagonal of the mass matrix, `(m_1, …, m_N)`.
pub fn mass_matrix(weight: &DiscreteWeight) -> Vec<f64> {
    weight.masses().to_vec()
}

/// Dirichlet Green function of `−y″` on `[0, 1]`.
pub fn green_function(x: f64, t: f64) -> f64 {
    x.min(t) * (1.0 - x.max(t))
}

/// `C[i][j] = G(x_i, x_j)·m_j`.
///
/// Uses the stored gaps for `1 − x`, so tiny entries keep full relative accuracy.
pub fn green_kernel_matrix(weight: &DiscreteWeight) -> DenseMatrix {
    let x = weight.positions();
    let gap = weight.gaps();
    let m = weight.masses();
    let n = weight.order();
    let mut c = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let g = x[i.min(j)] * gap[i.max(j)];
            c[(i, j)] = g * m[j];
        }
    }
    c
}

/// Slopes `s_1, s_2, …` of a piecewise-linear function on the mass intervals.
///
/// Beyond the stored slopes the sequence continues with the constant `tail`
/// (the function is linear past the last mass). `tail == 0` means finite
/// support.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSequence {
    pub slopes: Vec<f64>,
    pub tail: f64,
}

impl SlopeSequence {
    pub fn finite(slopes: Vec<f64>) -> Self {
        Self { slopes, tail: 0.0 }
    }

    /// Slopes of the interpolant through `y(0) = 0`, `y(x_k) = nodal[k−1]`,
    /// `y(1) = 0`. The slope on `[x_N, 1]` becomes the tail.
    pub fn from_nodal_values(weight: &DiscreteWeight, nodal: &[f64]) -> Result<Self> {
        let n = weight.order();
        if nodal.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} nodal values for {} masses",
                nodal.len(),
                n
            )));
        }
        let h = weight.interval_lengths();
        let mut prev = 0.0;
        let slopes = (0..n)
            .map(|k| {
                let s = (nodal[k] - prev) / h[k];
                prev = nodal[k];
                s
            })
            .collect();
        Ok(Self {
            slopes,
            tail: -prev / h[n],
        })
    }

    /// `s_k` for 1-based `k`.
    pub fn get(&self, k: usize) -> f64 {
        self.slopes.get(k - 1).copied().unwrap_or(self.tail)
    }

    pub fn is_zero(&self) -> bool {
        self.tail == 0.0 && self.slopes.iter().all(|s| *s == 0.0)
    }

    /// `a^n/(1 − a)`: total weight `Σ_{k>n} a^{k−1}` carried by the tail.
    fn tail_weight(&self, a: f64) -> f64 {
        a.powi(self.slopes.len() as i32) / (1.0 - a)
    }
}

/// Both sides of the discrete energy identity
///
/// ```text
/// Σ_k a^{k−1}·s_k² = λ·r·Σ_{k=1}^{depth} d^{k−1}·(Σ_{j≤k} a^{j−1}·s_j)²
/// ```
///
/// The left side is `‖y′‖²/(1 − a)`, the right side `λ·Σ m_k·y(x_k)²/(1 − a)`
/// with `y(x_k) = (1 − a)·Σ_{j≤k} a^{j−1}·s_j`; `depth` is the number of masses.
pub fn quadratic_form_sides(
    params: &SelfSimilarParams,
    s: &SlopeSequence,
    lambda: f64,
    depth: usize,
) -> (f64, f64) {
    let (a, d) = (params.a(), params.d());
    let mut lhs = 0.0;
    let mut w = 1.0;
    for v in &s.slopes {
        lhs += w * v * v;
        w *= a;
    }
    if s.tail != 0.0 {
        lhs += s.tail * s.tail * s.tail_weight(a);
    }

    let mut rhs = 0.0;
    let mut partial = 0.0;
    let mut aw = 1.0;
    let mut dw = 1.0;
    for k in 1..=depth {
        partial += aw * s.get(k);
        rhs += dw * partial * partial;
        aw *= a;
        dw *= d;
    }
    (lhs, lambda * params.r() * rhs)
}

/// `Σ_k a^{k−1}·s_k`, proportional to `y(1)`; vanishes exactly when the
/// Dirichlet condition at `x = 1` holds.
pub fn boundary_functional(params: &SelfSimilarParams, s: &SlopeSequence) -> f64 {
    let a = params.a();
    let mut w = 1.0;
    let mut sum = 0.0;
    for v in &s.slopes {
        sum += w * v;
        w *= a;
    }
    if s.tail != 0.0 {
        sum += s.tail * s.tail_weight(a);
    }
    sum
}

/// `u = B·s` over the first `n` rows.
pub fn apply_b(params: &SelfSimilarParams, s: &SlopeSequence, n: usize) -> Vec<f64> {
    let (a, d) = (params.a(), params.d());
    let mut out = Vec::with_capacity(n);
    let mut partial = 0.0;
    let mut aw = 1.0;
    let mut dw = 1.0;
    for k in 1..=n {
        partial += aw * s.get(k);
        out.push(dw * partial);
        aw *= a;
        dw *= d;
    }
    out
}

fn support_check(u: &[f64], n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput("section order must be ≥ 2".into()));
    }
    if u.len() > n || u.iter().skip(n - 1).any(|v| *v != 0.0) {
        return Err(Error::InvalidInput(format!(
            "sequence must be supported on indices 1..{}",
            n - 1
        )));
    }
    Ok(())
}

/// `⟨M·u, v⟩ − ⟨u, M·v⟩` in `ℓ²` with weight `(1/d)^{k−1}`, for `M` the
/// `A·B⁻¹` section of order `n`.
///
/// Diagonal contributions cancel identically, so the defect is accumulated
/// over the off-diagonal pairs as
/// `(w_k·M[k][k+1] − w_{k+1}·M[k+1][k])·(u_{k+1}·v_k − u_k·v_{k+1})`.
pub fn symmetry_defect(params: &SelfSimilarParams, u: &[f64], v: &[f64], n: usize) -> Result<f64> {
    support_check(u, n)?;
    support_check(v, n)?;
    let m = section(params, n, MatrixKind::ABinv)?.matrix;
    let inv_d = 1.0 / params.d();
    let at = |x: &[f64], k: usize| x.get(k).copied().unwrap_or(0.0);
    let mut defect = 0.0;
    for k in 0..n - 1 {
        let w_k = inv_d.powi(k as i32);
        let w_next = inv_d.powi(k as i32 + 1);
        let coeff = w_k * m[(k, k + 1)] - w_next * m[(k + 1, k)];
        if coeff != 0.0 {
            defect += coeff * (at(u, k + 1) * at(v, k) - at(u, k) * at(v, k + 1));
        }
    }
    Ok(defect)
}

/// `Σ_k w^{k−1}·u_k·v_k`.
pub fn weighted_inner(u: &[f64], v: &[f64], w: f64) -> f64 {
    let mut scale = 1.0;
    let mut sum = 0.0;
    for (a, b) in u.iter().zip(v) {
        sum += scale * a * b;
        scale *= w;
    }
    sum
}

/// `(1+dq)·Σ (q/d)^{k−1}·u_k·v_k − q·Σ (q/d)^{k−1}·(u_{k+1}·v_k + u_k·v_{k+1})`,
/// the closed form of `⟨A·B⁻¹·u, v⟩` in `ℓ²_{1/d}` for finitely supported `u, v`.
pub fn jacobi_bilinear_form(params: &SelfSimilarParams, u: &[f64], v: &[f64]) -> f64 {
    let (d, q) = (params.d(), params.q());
    let n = u.len().max(v.len());
    let at = |x: &[f64], k: usize| x.get(k).copied().unwrap_or(0.0);
    let ratio = q / d;
    let mut scale = 1.0;
    let mut sum = 0.0;
    for k in 0..n {
        sum += scale
            * ((1.0 + d * q) * at(u, k) * at(v, k)
                - q * (at(u, k + 1) * at(v, k) + at(u, k) * at(v, k + 1)));
        scale *= ratio;
    }
    sum
}

/// `u_n / d^{n−1}` for `n = 1..N`; tends to zero on the selected self-adjoint
/// extension.
pub fn extension_condition_trace(
    params: &SelfSimilarParams,
    u: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    if u.len() < n {
        return Err(Error::InvalidInput(format!(
            "need {n} entries, got {}",
            u.len()
        )));
    }
    let d = params.d();
    let mut dw = 1.0;
    Ok(u[..n]
        .iter()
        .map(|v| {
            let t = v / dw;
            dw *= d;
            t
        })
        .collect())
}

/// Partial sum `Σ_{k=2}^{N} d^{−(k−1)}·(−d·q^{k−1}·u_{k−1} + (1+dq)·q^{k−1}·u_k + q^k·u_{k+1})²`,
/// with the signs exactly as in the adjoint-domain criterion.
pub fn adjoint_domain_residual(params: &SelfSimilarParams, u: &[f64], n: usize) -> Result<f64> {
    if u.len() < n + 1 {
        return Err(Error::InvalidInput(format!(
            "need {} entries, got {}",
            n + 1,
            u.len()
        )));
    }
    let (d, q) = (params.d(), params.q());
    let alpha = 1.0 + d * q;
    let mut sum = 0.0;
    for k in 2..=n {
        let qk1 = q.powi(k as i32 - 1);
        let row = -d * qk1 * u[k - 2] + alpha * qk1 * u[k - 1] + q * qk1 * u[k];
        sum += row * row / d.powi(k as i32 - 1);
    }
    Ok(sum)
}
