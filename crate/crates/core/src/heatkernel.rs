//! The magnetic heat kernel on `R²` and the integral identities behind the
//! edge comparison `sup σ(K̃_b) <= sup σ(A_b(t))`.
//!
//! `G_b(x, x'; t) = e^{ibφ(x,x')} · b/(4π sinh bt) · exp[-b|x - x'|²/(4 tanh bt)]`
//! is the kernel of `e^{-tH_b}` for `H_b = (p - b a)²`, `a = (-x2/2, x1/2)`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;
use serde_json::json;

use crate::c64;
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::magnetics::{magnetic_phase, unimodular};
use crate::probe::ProbeReport;

/// Relative tolerance of the identity checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatKernelParams {
    pub b: f64,
    pub t: f64,
}

impl HeatKernelParams {
    pub fn new(b: f64, t: f64) -> Result<Self> {
        if !(b > 0.0 && t > 0.0 && b.is_finite() && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "heat kernel needs b > 0, t > 0 (b={b}, t={t})"
            )));
        }
        Ok(HeatKernelParams { b, t })
    }

    /// Same field, time `t` replaced by `t2`.
    pub fn at_time(&self, t2: f64) -> Result<Self> {
        HeatKernelParams::new(self.b, t2)
    }

    /// Prefactor `b/(4π sinh bt)`.
    pub fn amplitude(&self) -> f64 {
        self.b / (4.0 * PI * (self.b * self.t).sinh())
    }

    /// Gaussian rate `b/(4 tanh bt)`.
    pub fn rate(&self) -> f64 {
        self.b / (4.0 * (self.b * self.t).tanh())
    }
}

/// `G̃_b(x, x'; t)`, the kernel without its phase.
pub fn mehler_envelope(params: &HeatKernelParams, x: Point, x2: Point) -> f64 {
    params.amplitude() * (-params.rate() * (x - x2).norm_sq()).exp()
}

pub fn mehler_kernel(params: &HeatKernelParams, x: Point, x2: Point) -> c64 {
    unimodular(params.b * magnetic_phase(x, x2)) * mehler_envelope(params, x, x2)
}

/// Free heat kernel `(4πt)⁻¹ exp[-|x - x'|²/(4t)]`.
pub fn free_heat_kernel(t: f64, x: Point, x2: Point) -> f64 {
    (-(x - x2).norm_sq() / (4.0 * t)).exp() / (4.0 * PI * t)
}

/// Tensor-product composite Gauss–Legendre rule on a square centred on the
/// Gaussian bulk of the integrand. The half-width is chosen so the
/// analytically bounded tail stays below `tail_tolerance` relative to the
/// target value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quadrature {
    pub order: usize,
    pub panels: usize,
    pub tail_tolerance: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            order: 10,
            panels: 16,
            tail_tolerance: 1e-10,
        }
    }
}

impl Quadrature {
    pub fn new(order: usize, panels: usize) -> Result<Self> {
        let q = Quadrature {
            order,
            panels,
            ..Quadrature::default()
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 || self.panels == 0 || !(self.tail_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid quadrature {self:?}"
            )));
        }
        Ok(())
    }

    /// The same rule with twice as many panels (half the step).
    pub fn refined(&self) -> Self {
        Quadrature {
            panels: 2 * self.panels,
            ..*self
        }
    }

    fn nodes_1d(&self, center: f64, half_width: f64) -> Vec<(f64, f64)> {
        let rule = GaussLegendre::new(NonZeroUsize::new(self.order).expect("order validated"));
        let h = 2.0 * half_width / self.panels as f64;
        let mut out = Vec::with_capacity(self.order * self.panels);
        for p in 0..self.panels {
            let a = center - half_width + p as f64 * h;
            for (&node, &weight) in rule.nodes().zip(rule.weights()) {
                out.push((a + 0.5 * h * (node + 1.0), 0.5 * h * weight));
            }
        }
        out
    }
}

/// Integral of `f(y)` whose modulus is bounded by
/// `c_t² e^{-β|x-x'|²/2} e^{-2β|y-m|²}`, `m` the midpoint of `x` and `x'`.
/// Returns the value, the tail bound and the half-width used.
fn integrate_pair(
    params: &HeatKernelParams,
    x: Point,
    x2: Point,
    target_scale: f64,
    quad: &Quadrature,
    f: impl Fn(Point) -> c64,
) -> Result<(c64, f64, f64)> {
    quad.validate()?;
    let beta = params.rate();
    let c = params.amplitude();
    let mass = c * c * (-0.5 * beta * (x - x2).norm_sq()).exp() * PI / (2.0 * beta);
    // outside the disk of radius R: mass · e^{-2βR²}
    let goal = quad.tail_tolerance * target_scale;
    let r2 = if mass > goal {
        (mass / goal).ln() / (2.0 * beta)
    } else {
        0.0
    };
    let half_width = r2.sqrt().max(1.0 / beta.sqrt());
    let tail = mass * (-2.0 * beta * half_width * half_width).exp();
    let m = 0.5 * (x + x2);
    let n1 = quad.nodes_1d(m.x1, half_width);
    let n2 = quad.nodes_1d(m.x2, half_width);
    let mut acc = c64::new(0.0, 0.0);
    for &(y2, w2) in &n2 {
        let mut row = c64::new(0.0, 0.0);
        for &(y1, w1) in &n1 {
            row += f(Point::new(y1, y2)) * w1;
        }
        acc += row * w2;
    }
    Ok((acc, tail, half_width))
}

/// `∫ G_b(x, y; t) G_b(y, x'; t) dy` and its tail bound.
pub fn composed_kernel(
    params: &HeatKernelParams,
    x: Point,
    x2: Point,
    quad: &Quadrature,
) -> Result<(c64, f64)> {
    let target = params.at_time(2.0 * params.t)?;
    let scale = mehler_envelope(&target, x, x2);
    let (v, tail, _) = integrate_pair(params, x, x2, scale, quad, |y| {
        mehler_kernel(params, x, y) * mehler_kernel(params, y, x2)
    })?;
    Ok((v, tail))
}

fn base_report(name: &str, params: &HeatKernelParams, quad: &Quadrature) -> ProbeReport {
    ProbeReport::new(name)
        .input("b", params.b)
        .input("t", params.t)
        .input(
            "quadrature",
            json!({"order": quad.order, "panels": quad.panels}),
        )
}

/// `G_b(x, x'; 2t) = ∫ G_b(x, y; t) G_b(y, x'; t) dy`.
pub fn semigroup_check(
    params: &HeatKernelParams,
    x: Point,
    x2: Point,
    quad: &Quadrature,
) -> Result<ProbeReport> {
    let lhs = mehler_kernel(&params.at_time(2.0 * params.t)?, x, x2);
    let (rhs, tail) = composed_kernel(params, x, x2, quad)?;
    let mut r = base_report("heat_semigroup", params, quad)
        .input("x", json!([x.x1, x.x2]))
        .input("x2", json!([x2.x1, x2.x2]));
    r.measure("lhs", json!([lhs.re, lhs.im]));
    r.measure("rhs", json!([rhs.re, rhs.im]));
    r.measure("tail_bound", tail);
    r.check_le(
        "relative_error",
        (lhs - rhs).norm() / lhs.norm() + tail / lhs.norm(),
        IDENTITY_TOLERANCE,
    );
    Ok(r)
}

/// Recovers `e^{±ibφ(x, x')}` from the composed kernels, in both argument
/// orders:
///
/// ```text
/// e^{ibφ(x,x')}  = (4π sinh 2bt / b) e^{b|x-x'|²/(4 tanh 2bt)} ∫ G(x,y) G(y,x') dy
/// e^{-ibφ(x,x')} = (4π sinh 2bt / b) e^{b|x-x'|²/(4 tanh 2bt)} ∫ G(y,x) G(x',y) dy
/// ```
pub fn phase_identity_check(
    params: &HeatKernelParams,
    x: Point,
    x2: Point,
    quad: &Quadrature,
) -> Result<ProbeReport> {
    let doubled = params.at_time(2.0 * params.t)?;
    let inv_envelope = 1.0 / mehler_envelope(&doubled, x, x2);
    let (forward, tail) = composed_kernel(params, x, x2, quad)?;
    let (backward, _, _) = integrate_pair(params, x, x2, 1.0 / inv_envelope, quad, |y| {
        mehler_kernel(params, y, x) * mehler_kernel(params, x2, y)
    })?;
    let phase = unimodular(params.b * magnetic_phase(x, x2));
    let rhs = forward * inv_envelope;
    let rhs_conj = backward * inv_envelope;
    let mut r = base_report("heat_phase_identity", params, quad)
        .input("x", json!([x.x1, x.x2]))
        .input("x2", json!([x2.x1, x2.x2]));
    r.measure("phase", json!([phase.re, phase.im]));
    r.measure("rhs", json!([rhs.re, rhs.im]));
    r.measure("rhs_conjugate", json!([rhs_conj.re, rhs_conj.im]));
    let budget = tail * inv_envelope;
    r.check_le(
        "forward_error",
        (rhs - phase).norm() + budget,
        IDENTITY_TOLERANCE,
    );
    r.check_le(
        "conjugate_error",
        (rhs_conj - phase.conj()).norm() + budget,
        IDENTITY_TOLERANCE,
    );
    r.check_le(
        "modulus_error",
        (rhs.norm() - 1.0).abs(),
        IDENTITY_TOLERANCE,
    );
    Ok(r)
}

/// `∫ |G_b(y, x; t)|² dy = b/(4π sinh 2bt)`, at `x` and at `x_alt`.
pub fn normalization_check(
    params: &HeatKernelParams,
    x: Point,
    x_alt: Point,
    quad: &Quadrature,
) -> Result<ProbeReport> {
    let expected = params.b / (4.0 * PI * (2.0 * params.b * params.t).sinh());
    let integral = |p: Point| -> Result<(f64, f64)> {
        let (v, tail, _) = integrate_pair(params, p, p, expected, quad, |y| {
            c64::new(mehler_kernel(params, y, p).norm_sqr(), 0.0)
        })?;
        Ok((v.re, tail))
    };
    let (v0, tail0) = integral(x)?;
    let (v1, tail1) = integral(x_alt)?;
    let mut r = base_report("heat_normalization", params, quad)
        .input("x", json!([x.x1, x.x2]))
        .input("x_alt", json!([x_alt.x1, x_alt.x2]));
    r.measure("expected", expected);
    r.measure("integral", v0);
    r.measure("integral_alt", v1);
    r.check_le(
        "relative_error",
        ((v0 - expected).abs() + tail0) / expected,
        IDENTITY_TOLERANCE,
    );
    r.check_le(
        "relative_error_alt",
        ((v1 - expected).abs() + tail1) / expected,
        IDENTITY_TOLERANCE,
    );
    r.check_le("x_independence", (v0 - v1).abs() / expected, 1e-8);
    Ok(r)
}

/// Semigroup error with a low-order rule at step `h` and `h/2`; the error
/// must drop by at least 4×.
pub fn quadrature_convergence_check(
    params: &HeatKernelParams,
    x: Point,
    x2: Point,
    coarse: &Quadrature,
) -> Result<ProbeReport> {
    let lhs = mehler_kernel(&params.at_time(2.0 * params.t)?, x, x2);
    let fine = coarse.refined();
    let (c, _) = composed_kernel(params, x, x2, coarse)?;
    let (f, _) = composed_kernel(params, x, x2, &fine)?;
    let e_coarse = (c - lhs).norm() / lhs.norm();
    let e_fine = (f - lhs).norm() / lhs.norm();
    let mut r = base_report("heat_quadrature_convergence", params, coarse)
        .input("x", json!([x.x1, x.x2]))
        .input("x2", json!([x2.x1, x2.x2]));
    r.measure("error_coarse", e_coarse);
    r.measure("error_fine", e_fine);
    r.check_ge("reduction", e_coarse / e_fine, 4.0);
    Ok(r)
}

/// All identity checks on the grid `b ∈ {0.1, 1}`, `t ∈ {0.5, 1}`.
pub fn identity_suite(quad: &Quadrature) -> Result<Vec<ProbeReport>> {
    let pairs = [
        (Point::ORIGIN, Point::ORIGIN),
        (Point::new(1.0, 0.0), Point::new(0.0, 1.0)),
        (Point::new(-0.5, 2.0), Point::new(1.5, -1.0)),
    ];
    let mut out = Vec::new();
    for b in [0.1, 1.0] {
        for t in [0.5, 1.0] {
            let p = HeatKernelParams::new(b, t)?;
            for &(x, x2) in &pairs {
                out.push(semigroup_check(&p, x, x2, quad)?);
                out.push(phase_identity_check(&p, x, x2, quad)?);
            }
            out.push(normalization_check(
                &p,
                Point::ORIGIN,
                Point::new(3.0, -2.0),
                quad,
            )?);
            out.push(quadrature_convergence_check(
                &p,
                pairs[1].0,
                pairs[1].1,
                &Quadrature::new(2, 8)?,
            )?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_value() {
        let p = HeatKernelParams::new(1.0, 1.0).unwrap();
        let g = mehler_kernel(&p, Point::new(2.0, -1.0), Point::new(2.0, -1.0));
        assert!((g.re - 1.0 / (4.0 * PI * 1f64.sinh())).abs() < 1e-15);
        assert_eq!(g.im, 0.0);
        assert!((g.re - 0.0677139).abs() < 1e-6);
    }

    #[test]
    fn weak_field_limit() {
        let p = HeatKernelParams::new(1e-6, 0.7).unwrap();
        for (x, y) in [
            (Point::ORIGIN, Point::new(1.0, 0.5)),
            (Point::new(-1.0, 2.0), Point::new(0.3, 0.3)),
        ] {
            let g = mehler_kernel(&p, x, y);
            let free = free_heat_kernel(0.7, x, y);
            assert!((g - c64::new(free, 0.0)).norm() / free < 1e-5);
        }
    }

    #[test]
    fn modulus_symmetric() {
        let p = HeatKernelParams::new(0.4, 0.9).unwrap();
        let (x, y) = (Point::new(1.0, 2.0), Point::new(-0.5, 0.25));
        assert_eq!(
            mehler_kernel(&p, x, y).norm(),
            mehler_kernel(&p, y, x).norm()
        );
        assert_eq!(mehler_kernel(&p, x, y), mehler_kernel(&p, y, x).conj());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(HeatKernelParams::new(0.0, 1.0).is_err());
        assert!(HeatKernelParams::new(1.0, -1.0).is_err());
        assert!(Quadrature::new(0, 4).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let q = Quadrature::default();
        let r = semigroup_check(
            &HeatKernelParams::new(1.0, 0.5).unwrap(),
            Point::ORIGIN,
            Point::ORIGIN,
            &q,
        )
        .unwrap();
        assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
        let p = HeatKernelParams::new(0.1, 1.0).unwrap();
        let r = semigroup_check(&p, Point::new(1.0, 0.0), Point::new(0.0, 1.0), &q).unwrap();
        assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
    }

    #[test]
    fn reflected_integrand_gives_conjugate() {
        // G(x,y)G(y,x') conjugated is G(x',y)G(y,x): swapping the endpoints
        // conjugates the composed kernel.
        let p = HeatKernelParams::new(1.0, 1.0).unwrap();
        let q = Quadrature::default();
        let (x, y) = (Point::new(1.0, 0.0), Point::new(0.0, 1.0));
        let (a, _) = composed_kernel(&p, x, y, &q).unwrap();
        let (b, _) = composed_kernel(&p, y, x, &q).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn phase_examples() {
        let q = Quadrature::default();
        let p = HeatKernelParams::new(1.0, 1.0).unwrap();
        let r = phase_identity_check(&p, Point::new(2.0, 2.0), Point::new(2.0, 2.0), &q).unwrap();
        assert!(r.pass);
        let r = phase_identity_check(&p, Point::new(1.0, 0.0), Point::new(0.0, 1.0), &q).unwrap();
        assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
        let phase = r.measured["phase"].as_array().unwrap();
        assert!((phase[0].as_f64().unwrap() - (-0.5f64).cos()).abs() < 1e-15);
        assert!((phase[1].as_f64().unwrap() - (-0.5f64).sin()).abs() < 1e-15);
    }

    #[test]
    fn normalization_examples() {
        let q = Quadrature::default();
        let p = HeatKernelParams::new(1.0, 0.5).unwrap();
        let r = normalization_check(&p, Point::ORIGIN, Point::new(3.0, -2.0), &q).unwrap();
        assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
        assert!((r.measured["integral"].as_f64().unwrap() - 0.0677139).abs() < 1e-6);
        let p = HeatKernelParams::new(0.1, 1.0).unwrap();
        let r = normalization_check(&p, Point::ORIGIN, Point::new(3.0, -2.0), &q).unwrap();
        assert!(r.pass);
        let expected = 0.1 / (4.0 * PI * 0.2f64.sinh());
        assert!((r.measured["integral"].as_f64().unwrap() - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn coarse_rule_converges() {
        let p = HeatKernelParams::new(1.0, 0.5).unwrap();
        let r = quadrature_convergence_check(
            &p,
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            &Quadrature::new(2, 8).unwrap(),
        )
        .unwrap();
        assert!(r.pass, "{}", serde_json::to_string(&r).unwrap());
    }
}
