//! Resolvents, the `S_b`/`T_b` factorization and resolvent decay probes.
//!
//! With `G = (K - z)⁻¹` and `S_b = e^{ibφ} G` entrywise, the additive
//! identity for `φ` gives
//!
//! ```text
//! (K_b - z) S_b = 1 + T_b,
//! T_b(x, x') = e^{ibφ(x,x')} Σ_y (e^{ibφ(x-y, y-x')} - 1) K(x, y) G(y, x').
//! ```
//!
//! Note the argument order `(x - y, y - x')`: with `(x - y, x' - y)` the
//! identity fails as soon as `b ≠ 0`.

use std::sync::Arc;

use faer::prelude::Solve;
use faer::Mat;
use serde_json::json;

use crate::c64;
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::kernel::KernelOperator;
use crate::lattice::{Lattice, Point};
use crate::magnetics::{magnetic_phase, peierls_twist, unimodular, Flux, PhaseSource};
use crate::norms::{c_alpha_matrix, h_alpha_matrix, spectral_norm};
use crate::probe::{json_f64, ProbeReport};
use crate::spectral::{eigh, eigvalsh, Eigen};

/// Closest a resolvent point may come to the spectrum.
pub const SPECTRUM_CLEARANCE: f64 = 1e-10;

/// `G = (K - z)⁻¹` on the lattice of `K`.
#[derive(Clone, Debug)]
pub struct ResolventBundle {
    pub z: c64,
    pub g: Mat<c64>,
    pub dist_to_spectrum: f64,
    pub lattice: Arc<Lattice>,
}

impl ResolventBundle {
    /// `max |((K - z) G - I)_{ij}|`.
    pub fn residual(&self, k: &KernelOperator) -> f64 {
        let n = self.g.nrows();
        let prod = &k.matrix * &self.g;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j {
                    c64::new(1.0, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                };
                worst = worst.max((prod[(i, j)] - self.z * self.g[(i, j)] - target).norm());
            }
        }
        worst
    }
}

fn dist_to(values: &[f64], z: c64) -> f64 {
    values
        .iter()
        .map(|&l| (c64::new(l, 0.0) - z).norm())
        .fold(f64::INFINITY, f64::min)
}

fn resolvent_from_eigen(eigen: &Eigen, z: c64) -> Mat<c64> {
    let n = eigen.values.len();
    let scaled = Mat::from_fn(n, n, |i, j| {
        eigen.vectors[(i, j)] * (c64::new(eigen.values[j], 0.0) - z).inv()
    });
    &scaled * eigen.vectors.adjoint()
}

/// `(K - z)⁻¹` from the eigendecomposition of `K`.
pub fn resolvent(k: &KernelOperator, z: c64) -> Result<ResolventBundle> {
    let eigen = eigh(k.matrix.as_ref())?;
    let dist = dist_to(&eigen.values, z);
    if dist < SPECTRUM_CLEARANCE {
        return Err(Error::TooCloseToSpectrum {
            re: z.re,
            im: z.im,
            dist,
        });
    }
    Ok(ResolventBundle {
        z,
        g: resolvent_from_eigen(&eigen, z),
        dist_to_spectrum: dist,
        lattice: k.lattice.clone(),
    })
}

/// `S_b(z)`: the resolvent kernel twisted by `e^{ibφ(x, x')}`.
pub fn build_s(g: &ResolventBundle, b: Flux) -> Mat<c64> {
    let pos = g.lattice.positions();
    let bv = b.value();
    let n = g.g.nrows();
    Mat::from_fn(n, n, |i, j| {
        if bv == 0.0 {
            g.g[(i, j)]
        } else {
            g.g[(i, j)] * unimodular(bv * magnetic_phase(pos[i], pos[j]))
        }
    })
}

/// `T_b(z)` assembled from the factored kernel, summing over the nonzero
/// entries of the untwisted `K`.
pub fn build_t(k: &KernelOperator, g: &ResolventBundle, b: Flux) -> Result<Mat<c64>> {
    build_t_with(k, g, b, |x, y, x2| magnetic_phase(x - y, y - x2))
}

/// `T_b` with an arbitrary inner phase `(x, y, x') ↦ ψ(x, y, x')`.
pub(crate) fn build_t_with(
    k: &KernelOperator,
    g: &ResolventBundle,
    b: Flux,
    inner: impl Fn(Point, Point, Point) -> f64,
) -> Result<Mat<c64>> {
    if k.is_twisted() {
        return Err(Error::InvalidParameter(
            "build_t expects the untwisted base kernel".into(),
        ));
    }
    let n = k.dim();
    if g.g.nrows() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: g.g.nrows(),
        });
    }
    let pos = k.lattice.positions();
    let bv = b.value();
    let mut t = Mat::<c64>::zeros(n, n);
    if bv == 0.0 {
        return Ok(t);
    }
    let zero = c64::new(0.0, 0.0);
    let rows: Vec<Vec<(usize, c64)>> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| k.matrix[(x, y)] != zero)
                .map(|y| (y, k.matrix[(x, y)]))
                .collect()
        })
        .collect();
    for xp in 0..n {
        for x in 0..n {
            let mut acc = zero;
            for &(y, kxy) in &rows[x] {
                let w = unimodular(bv * inner(pos[x], pos[y], pos[xp])) - c64::new(1.0, 0.0);
                acc += w * kxy * g.g[(y, xp)];
            }
            t[(x, xp)] = unimodular(bv * magnetic_phase(pos[x], pos[xp])) * acc;
        }
    }
    Ok(t)
}

/// `max |(K_b - z) S_b - I - T_b|` with `T_b` from the factored kernel.
pub fn factorization_defect(k: &KernelOperator, g: &ResolventBundle, b: Flux) -> Result<f64> {
    let t = build_t(k, g, b)?;
    direct_t_difference(k, g, b, &t)
}

fn direct_t(k: &KernelOperator, g: &ResolventBundle, b: Flux) -> Result<Mat<c64>> {
    let kb = peierls_twist(k, b, PhaseSource::Standard)?;
    let s = build_s(g, b);
    let n = k.dim();
    let prod = &kb.matrix * &s;
    Ok(Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        prod[(i, j)] - g.z * s[(i, j)] - c64::new(id, 0.0)
    }))
}

fn direct_t_difference(
    k: &KernelOperator,
    g: &ResolventBundle,
    b: Flux,
    t: &Mat<c64>,
) -> Result<f64> {
    let direct = direct_t(k, g, b)?;
    Ok((&direct - t).norm_max())
}

/// Resolvent stability under the field: for each `b` with `‖T_b‖ <= 1/2`,
/// `‖(K_b - z)⁻¹‖ <= ‖S_b‖ / (1 - ‖T_b‖)`, cross-checked against the
/// directly computed distance from `z` to `σ(K_b)`.
pub fn stability_probe(k: &KernelOperator, z: c64, b_grid: &[f64]) -> Result<ProbeReport> {
    let g = resolvent(k, z)?;
    let k_c1 = c_alpha_matrix(k.matrix.as_ref(), &k.lattice, 1.0);
    let g_c1 = c_alpha_matrix(g.g.as_ref(), &k.lattice, 1.0);
    let n = k.dim();
    let identity = Mat::<c64>::identity(n, n);
    let mut report = ProbeReport::new("resolvent_stability")
        .input("z", json!([z.re, z.im]))
        .input("b_grid", json!(b_grid))
        .input("dim", n);
    report.measure("dist_b0", g.dist_to_spectrum);
    report.measure("k_c1", k_c1);
    report.measure("g_c1", g_c1);
    for &b in b_grid {
        let t = build_t(k, &g, Flux(b))?;
        let s = build_s(&g, Flux(b));
        let t_norm = spectral_norm(t.as_ref())?;
        let s_norm = spectral_norm(s.as_ref())?;
        report.check_le(&format!("t_norm[b={b}]"), t_norm, b.abs() * k_c1 * g_c1);
        if t_norm > 0.5 {
            report.measure(&format!("skipped[b={b}]"), "‖T_b‖ > 1/2");
            continue;
        }
        let kb = peierls_twist(k, Flux(b), PhaseSource::Standard)?;
        let dist_b = dist_to(&eigvalsh(kb.matrix.as_ref())?, z);
        // ‖(K_b - z)⁻¹‖ = 1/dist for Hermitian K_b
        report.check_ge(&format!("dist[b={b}]"), dist_b, (1.0 - t_norm) / s_norm);
        let one_plus_t = &identity + &t;
        let neumann = &s * one_plus_t.partial_piv_lu().solve(&identity);
        let direct = resolvent(&kb, z)?;
        report.check_le(
            &format!("neumann[b={b}]"),
            (&neumann - &direct.g).norm_max(),
            1e-8,
        );
    }
    Ok(report)
}

/// `count` real points `top + d` with `d` log-spaced from `d_min` to `d_max`.
pub fn distance_ladder(top: f64, d_min: f64, d_max: f64, count: usize) -> Result<Vec<c64>> {
    if !(d_min > 0.0 && d_max > d_min) || count < 2 {
        return Err(Error::InvalidParameter(format!(
            "ladder needs 0 < d_min < d_max and count >= 2 (d_min={d_min}, d_max={d_max}, count={count})"
        )));
    }
    let ratio = (d_max / d_min).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| c64::new(top + d_min * (ratio * i as f64).exp(), 0.0))
        .collect())
}

/// Weighted resolvent decay: `‖(K - z)⁻¹‖_{H^{α'}}` against the two-term
/// bound `dist^{-(α+2)} + dist^{-1}`.
///
/// The log-log slope against `1/dist` is fitted on the points with
/// `dist <= 1` and must not exceed `α + 2 + 0.2`. The ratio to the two-term
/// bound counts as bounded when its maximum over the half of `z_list`
/// nearest the spectrum is at most `bound_factor` times its maximum over the
/// farther half.
pub fn weighted_decay_probe(
    k: &KernelOperator,
    alpha: f64,
    alpha_prime: f64,
    z_list: &[c64],
    bound_factor: f64,
) -> Result<ProbeReport> {
    if !(alpha_prime < alpha) {
        return Err(Error::InvalidParameter(format!(
            "need α' < α, got α'={alpha_prime}, α={alpha}"
        )));
    }
    if z_list.len() < 4 {
        return Err(Error::InvalidParameter(
            "weighted decay probe needs at least 4 points".into(),
        ));
    }
    let eigen = eigh(k.matrix.as_ref())?;
    let mut rows: Vec<(f64, f64)> = Vec::with_capacity(z_list.len());
    for &z in z_list {
        let dist = dist_to(&eigen.values, z);
        if dist < SPECTRUM_CLEARANCE {
            return Err(Error::TooCloseToSpectrum {
                re: z.re,
                im: z.im,
                dist,
            });
        }
        let g = resolvent_from_eigen(&eigen, z);
        rows.push((dist, h_alpha_matrix(g.as_ref(), &k.lattice, alpha_prime)));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (dmin, dmax) = (rows[0].0, rows[rows.len() - 1].0);
    if (dmax / dmin).log10() < 1.5 {
        return Err(Error::InvalidParameter(format!(
            "distances must span at least 1.5 decades ({dmin:e}..{dmax:e})"
        )));
    }
    let near: Vec<&(f64, f64)> = rows.iter().filter(|r| r.0 <= 1.0).collect();
    let xs: Vec<f64> = near.iter().map(|r| (1.0 / r.0).ln()).collect();
    let ys: Vec<f64> = near.iter().map(|r| r.1.ln()).collect();
    let ratios: Vec<f64> = rows
        .iter()
        .map(|&(d, h)| h / (d.powf(-(alpha + 2.0)) + 1.0 / d))
        .collect();
    let half = rows.len() / 2;
    let near_max = ratios[..half].iter().copied().fold(0.0, f64::max);
    let far_max = ratios[half..].iter().copied().fold(0.0, f64::max);

    let mut report = ProbeReport::new("weighted_resolvent_decay")
        .input("alpha", alpha)
        .input("alpha_prime", alpha_prime)
        .input("points", z_list.len())
        .input("bound_factor", bound_factor);
    report.measure("dist", json!(rows.iter().map(|r| r.0).collect::<Vec<_>>()));
    report.measure(
        "h_norm",
        json!(rows.iter().map(|r| r.1).collect::<Vec<_>>()),
    );
    report.measure("ratio", json!(ratios));
    match linear_fit(&xs, &ys) {
        Some((slope, _)) if near.len() >= 2 => {
            report.check_le("near_field_slope", slope, alpha + 2.0 + 0.2);
        }
        _ => {
            report.measure("near_field_slope", json_f64(f64::NAN));
            report.check_that("near_field_points", false);
        }
    }
    report.check_le("ratio_near_over_far", near_max, bound_factor * far_max);
    Ok(report)
}

/// `U_k (K - z)⁻¹ U_k* = (K_k - z)⁻¹` for the plane-wave conjugation
/// `K_k(x, x') = e^{ik·(x-x')} K(x, x')`.
pub fn conjugation_check(k: &KernelOperator, k_vec: [f64; 2], z: c64) -> Result<ProbeReport> {
    let pos = k.lattice.positions();
    let wave = Point::new(k_vec[0], k_vec[1]);
    let plane = |i: usize, j: usize| unimodular(wave.dot(pos[i] - pos[j]));
    let hk = k.map_entries(|i, j, v| v * plane(i, j));
    let g = resolvent(k, z)?;
    let gk = resolvent(&hk, z)?;
    let n = k.dim();
    let mut defect: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            defect = defect.max((gk.g[(i, j)] - plane(i, j) * g.g[(i, j)]).norm());
        }
    }
    let s0 = eigvalsh(k.matrix.as_ref())?;
    let s1 = eigvalsh(hk.matrix.as_ref())?;
    let iso = s0
        .iter()
        .zip(&s1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut report = ProbeReport::new("conjugation_identity")
        .input("k", json!(k_vec))
        .input("z", json!([z.re, z.im]));
    report.check_le("entrywise_defect", defect, 1e-10);
    report.check_le(
        "isospectrality",
        iso,
        1e-10 * s0.iter().fold(1.0, |m: f64, v| m.max(v.abs())),
    );
    Ok(report)
}
