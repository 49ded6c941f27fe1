//! Weighted kernel norms.
//!
//! All column norms take the supremum over the column index `x'` and sum
//! over the row index `x`, with the weight `⟨x - x'⟩ = (1 + |x - x'|²)^{1/2}`.

use std::f64::consts::PI;

use faer::MatRef;
use serde::Serialize;
use serde_json::json;

use crate::c64;
use crate::error::{Error, Result};
use crate::kernel::KernelOperator;
use crate::lattice::{Lattice, Point};
use crate::probe::{json_f64, ProbeReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum NormKind {
    SchurHolmgren,
    CAlpha(f64),
    HAlpha(f64),
    Operator,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub kind: NormKind,
    pub value: f64,
}

impl NormReport {
    pub fn compute(k: &KernelOperator, kind: NormKind) -> Result<Self> {
        let value = match kind {
            NormKind::SchurHolmgren => schur_holmgren_norm(k),
            NormKind::CAlpha(a) => c_alpha_norm(k, a),
            NormKind::HAlpha(a) => h_alpha_norm(k, a),
            NormKind::Operator => operator_norm(k)?,
        };
        Ok(NormReport { kind, value })
    }
}

/// `max_{x'} Σ_x |M(x, x')|`.
pub fn schur_holmgren_matrix(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `max_{x'} Σ_x ⟨x - x'⟩^α |M(x, x')|` for a matrix indexed by `lattice`.
pub fn c_alpha_matrix(m: MatRef<'_, c64>, lattice: &Lattice, alpha: f64) -> f64 {
    let pos = lattice.positions();
    (0..m.ncols())
        .map(|j| {
            (0..m.nrows())
                .map(|i| {
                    let v = m[(i, j)].norm();
                    if v == 0.0 {
                        0.0
                    } else {
                        bracket_pow(pos[i] - pos[j], alpha) * v
                    }
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `max_{x'} (Σ_x ⟨x - x'⟩^{2α} |M(x, x')|²)^{1/2}`.
pub fn h_alpha_matrix(m: MatRef<'_, c64>, lattice: &Lattice, alpha: f64) -> f64 {
    let pos = lattice.positions();
    (0..m.ncols())
        .map(|j| {
            (0..m.nrows())
                .map(|i| {
                    let v = m[(i, j)].norm_sqr();
                    if v == 0.0 {
                        0.0
                    } else {
                        bracket_pow(pos[i] - pos[j], 2.0 * alpha) * v
                    }
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// `⟨v⟩^p`, exact for the integer powers that dominate the tests.
fn bracket_pow(v: Point, p: f64) -> f64 {
    let s = 1.0 + v.norm_sq();
    if p == 0.0 {
        1.0
    } else if p == 2.0 {
        s
    } else {
        s.powf(0.5 * p)
    }
}

pub fn schur_holmgren_norm(k: &KernelOperator) -> f64 {
    schur_holmgren_matrix(k.matrix.as_ref())
}

pub fn c_alpha_norm(k: &KernelOperator, alpha: f64) -> f64 {
    c_alpha_matrix(k.matrix.as_ref(), &k.lattice, alpha)
}

pub fn h_alpha_norm(k: &KernelOperator, alpha: f64) -> f64 {
    h_alpha_matrix(k.matrix.as_ref(), &k.lattice, alpha)
}

/// Spectral norm of a Hermitian operator: the largest `|λ|`.
pub fn operator_norm(k: &KernelOperator) -> Result<f64> {
    let values = crate::spectral::eigvalsh(k.matrix.as_ref())?;
    Ok(values.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

/// Largest singular value of an arbitrary square matrix.
pub fn spectral_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let s = m
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Frobenius norm, an upper bound for the spectral norm.
pub fn frobenius_norm(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

/// Cauchy–Schwarz constant `(Σ_{v ∈ Z²} ⟨v⟩^{-2(1+ε)})^{1/2}` of the
/// `H^α → C^β` embedding.
///
/// The lattice sum runs over the difference set of a box of side `n_side`;
/// the remainder is bounded by an integral comparison and returned as the
/// second component. The first component already includes it.
pub fn embedding_constant(n_side: usize, epsilon: f64) -> (f64, f64) {
    let s = 2.0 + 2.0 * epsilon;
    let m = n_side as i64 - 1;
    let mut sum = 0.0;
    for a in -m..=m {
        for b in -m..=m {
            sum += (1.0 + (a * a + b * b) as f64).powf(-0.5 * s);
        }
    }
    // Points with |v|_∞ >= n_side: ⟨v⟩^{-s} <= |v|^{-s} <= (|y| - √2/2)^{-s}
    // on the unit cell around v, and those cells lie outside |y| >= n_side - 1/2.
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let u0 = n_side as f64 - 0.5 - c;
    let tail = 2.0 * PI * (u0.powf(2.0 - s) / (s - 2.0) + c * u0.powf(1.0 - s) / (s - 1.0));
    ((sum + tail).sqrt(), tail)
}

/// Side of the smallest integer box containing the lattice's points.
fn box_side(lattice: &Lattice) -> usize {
    let pos = lattice.positions();
    let span = |f: fn(&Point) -> f64| {
        let (lo, hi) = pos
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                (l.min(v), h.max(v))
            });
        hi - lo
    };
    (span(|p| p.x1).max(span(|p| p.x2)).ceil() as usize + 1).max(1)
}

/// Checks `‖K‖_{C^β} <= C_{α,β}‖K‖_{H^α}` with the explicit constant.
pub fn embedding_check(
    k: &KernelOperator,
    alpha: f64,
    beta: f64,
    epsilon: f64,
) -> Result<ProbeReport> {
    if !(alpha > 1.0) || !(epsilon > 0.0) || !(beta >= 0.0) || !(beta < alpha - 1.0 - epsilon) {
        return Err(Error::InvalidParameter(format!(
            "embedding needs alpha > 1, epsilon > 0, 0 <= beta < alpha - 1 - epsilon \
             (alpha={alpha}, beta={beta}, epsilon={epsilon})"
        )));
    }
    let side = box_side(&k.lattice);
    let (constant, tail) = embedding_constant(side, epsilon);
    let c_beta = c_alpha_norm(k, beta);
    let h_alpha = h_alpha_norm(k, alpha);
    let mut report = ProbeReport::new("embedding")
        .input("alpha", alpha)
        .input("beta", beta)
        .input("epsilon", epsilon)
        .input("box_side", side);
    report.measure("constant", json_f64(constant));
    report.measure("tail_bound", json_f64(tail));
    report.measure("h_alpha_norm", json_f64(h_alpha));
    report.check_le("c_beta_norm", c_beta, constant * h_alpha);
    report.measure("ratio", json!(c_beta / (constant * h_alpha)));
    Ok(report)
}
