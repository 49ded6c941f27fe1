//! Hermitian eigensolves, band and gap edges, Riesz projectors.

use std::f64::consts::PI;

use faer::prelude::Solve;
use faer::{Mat, MatRef, Side};
use serde::Serialize;
use serde_json::json;

use crate::c64;
use crate::error::{Error, Result};
use crate::fit::median;
use crate::kernel::KernelOperator;
use crate::probe::ProbeReport;

/// Largest dimension accepted by the dense solver.
pub const MAX_DIMENSION: usize = 8192;

/// Relative Hermiticity tolerance for inputs.
const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Closest approach of an eigenvalue to a projector contour.
pub const CONTOUR_CLEARANCE: f64 = 1e-8;

/// Eigenvalues (ascending) with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

impl Eigen {
    /// `max_j ‖M v_j - λ_j v_j‖` and `max |V†V - I|`.
    pub fn residuals(&self, m: MatRef<'_, c64>) -> (f64, f64) {
        let n = self.values.len();
        let mv = m * &self.vectors;
        let mut residual: f64 = 0.0;
        for j in 0..n {
            let col: f64 = (0..n)
                .map(|i| (mv[(i, j)] - self.vectors[(i, j)] * self.values[j]).norm_sqr())
                .sum();
            residual = residual.max(col.sqrt());
        }
        let gram = self.vectors.adjoint() * &self.vectors;
        let mut ortho: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((gram[(i, j)] - c64::new(target, 0.0)).norm());
            }
        }
        (residual, ortho)
    }
}

pub fn hermiticity_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for j in 0..n {
        for i in j..n {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

pub(crate) fn check_hermitian(m: MatRef<'_, c64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            left: m.nrows(),
            right: m.ncols(),
        });
    }
    if m.nrows() > MAX_DIMENSION {
        return Err(Error::DimensionTooLarge {
            dim: m.nrows(),
            limit: MAX_DIMENSION,
        });
    }
    let defect = hermiticity_defect(m);
    let scale = m.norm_max().max(1.0);
    if defect > HERMITIAN_TOLERANCE * scale || defect.is_nan() {
        return Err(Error::NonHermitian { defect });
    }
    Ok(())
}

fn real_part_if_real(m: MatRef<'_, c64>) -> Option<Mat<f64>> {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            if m[(i, j)].im != 0.0 {
                return None;
            }
        }
    }
    Some(Mat::from_fn(n, n, |i, j| m[(i, j)].re))
}

fn evd_error(e: impl std::fmt::Debug) -> Error {
    Error::Decomposition(format!("{e:?}"))
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Real symmetric inputs take the (much cheaper) real path.
pub fn eigvalsh(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut values = match real_part_if_real(m) {
        Some(r) => r.self_adjoint_eigenvalues(Side::Lower).map_err(evd_error)?,
        None => m.self_adjoint_eigenvalues(Side::Lower).map_err(evd_error)?,
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh(m: MatRef<'_, c64>) -> Result<Eigen> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: Mat::zeros(0, 0),
        });
    }
    let (values, vectors) = match real_part_if_real(m) {
        Some(r) => {
            let e = r.self_adjoint_eigen(Side::Lower).map_err(evd_error)?;
            let vals: Vec<f64> = (0..n).map(|i| e.S()[i]).collect();
            let u = e.U();
            (vals, Mat::from_fn(n, n, |i, j| c64::new(u[(i, j)], 0.0)))
        }
        None => {
            let e = m.self_adjoint_eigen(Side::Lower).map_err(evd_error)?;
            let vals: Vec<f64> = (0..n).map(|i| e.S()[i].re).collect();
            (vals, e.U().to_owned())
        }
    };
    Ok(Eigen { values, vectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

impl Gap {
    pub fn new(lower: f64, upper: f64) -> Self {
        Gap {
            lower,
            upper,
            width: upper - lower,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn overlaps(&self, other: &Gap) -> bool {
        self.lower < other.upper && other.lower < self.upper
    }

    pub fn contains(&self, e: f64) -> bool {
        self.lower < e && e < self.upper
    }
}

/// Sorted spectrum with its edges and detected gaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub e_minus: f64,
    pub e_plus: f64,
    pub gaps: Vec<Gap>,
}

impl SpectralSummary {
    /// Builds a summary; `min_width = None` uses [`default_gap_width`].
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, min_width: Option<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        eigenvalues.sort_by(f64::total_cmp);
        let width = min_width.unwrap_or_else(|| default_gap_width(&eigenvalues));
        let gaps = detect_gaps(&eigenvalues, width);
        Ok(SpectralSummary {
            e_minus: eigenvalues[0],
            e_plus: eigenvalues[eigenvalues.len() - 1],
            eigenvalues,
            gaps,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Smallest eigenvalue strictly above `e`.
    pub fn first_above(&self, e: f64) -> Option<f64> {
        let k = self.eigenvalues.partition_point(|&v| v <= e);
        self.eigenvalues.get(k).copied()
    }

    /// Largest eigenvalue strictly below `e`.
    pub fn last_below(&self, e: f64) -> Option<f64> {
        let k = self.eigenvalues.partition_point(|&v| v < e);
        k.checked_sub(1).map(|i| self.eigenvalues[i])
    }

    /// The widest detected gap.
    pub fn widest_gap(&self) -> Option<Gap> {
        self.gaps
            .iter()
            .copied()
            .max_by(|a, b| a.width.total_cmp(&b.width))
    }
}

pub fn spectrum(k: &KernelOperator) -> Result<SpectralSummary> {
    SpectralSummary::from_eigenvalues(eigvalsh(k.matrix.as_ref())?, None)
}

pub fn spectrum_with_width(k: &KernelOperator, min_width: Option<f64>) -> Result<SpectralSummary> {
    SpectralSummary::from_eigenvalues(eigvalsh(k.matrix.as_ref())?, min_width)
}

/// Ten times the median spacing of consecutive eigenvalues.
///
/// Falls back to ten times the mean spacing when more than half the
/// spacings vanish (degenerate spectra).
pub fn default_gap_width(sorted: &[f64]) -> f64 {
    if sorted.len() < 2 {
        return f64::INFINITY;
    }
    let spacings: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(&spacings);
    if med > 0.0 {
        10.0 * med
    } else {
        10.0 * (sorted[sorted.len() - 1] - sorted[0]) / (sorted.len() - 1) as f64
    }
}

/// Open intervals between consecutive eigenvalues whose spacing is at least
/// `min_width`. The spacings adjacent to the outermost eigenvalues are
/// excluded: an isolated extreme eigenvalue is an edge effect, not a gap.
pub fn detect_gaps(sorted: &[f64], min_width: f64) -> Vec<Gap> {
    let n = sorted.len();
    if n < 4 {
        return Vec::new();
    }
    (1..n - 2)
        .filter(|&i| sorted[i + 1] - sorted[i] >= min_width)
        .map(|i| Gap::new(sorted[i], sorted[i + 1]))
        .collect()
}

/// Hausdorff distance between two finite sorted sets.
pub fn hausdorff_sets(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    Ok(directed(a, b).max(directed(b, a)))
}

fn directed(from: &[f64], to: &[f64]) -> f64 {
    from.iter()
        .map(|&x| {
            let k = to.partition_point(|&v| v < x);
            let mut d = f64::INFINITY;
            if k < to.len() {
                d = d.min((to[k] - x).abs());
            }
            if k > 0 {
                d = d.min((x - to[k - 1]).abs());
            }
            d
        })
        .fold(0.0, f64::max)
}

pub fn hausdorff_distance(s1: &SpectralSummary, s2: &SpectralSummary) -> Result<f64> {
    hausdorff_sets(&s1.eigenvalues, &s2.eigenvalues)
}

/// Checks `|sup σ(M) - sup σ(N)| <= ‖M - N‖` and the same for infima.
pub fn sup_comparison_check(m: &KernelOperator, n: &KernelOperator) -> Result<ProbeReport> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch {
            left: m.dim(),
            right: n.dim(),
        });
    }
    let sm = eigvalsh(m.matrix.as_ref())?;
    let sn = eigvalsh(n.matrix.as_ref())?;
    let diff = &m.matrix - &n.matrix;
    let dist = eigvalsh(diff.as_ref())?
        .iter()
        .fold(0.0, |a: f64, v| a.max(v.abs()));
    let (last_m, last_n) = (sm[sm.len() - 1], sn[sn.len() - 1]);
    let mut report = ProbeReport::new("sup_comparison").input("dim", m.dim());
    report.measure("norm_difference", dist);
    report.check_le("sup_shift", (last_m - last_n).abs(), dist + 1e-12);
    report.check_le("inf_shift", (sm[0] - sn[0]).abs(), dist + 1e-12);
    Ok(report)
}

/// Positively oriented circle in the complex plane, centred on the real axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourSpec {
    pub center: f64,
    pub radius: f64,
    pub quadrature_nodes: usize,
}

impl ContourSpec {
    pub fn new(center: f64, radius: f64, quadrature_nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || quadrature_nodes < 8 || !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "contour needs radius > 0 and >= 8 nodes (radius={radius}, nodes={quadrature_nodes})"
            )));
        }
        Ok(ContourSpec {
            center,
            radius,
            quadrature_nodes,
        })
    }

    /// Circle crossing the real axis at `left` and `right`.
    pub fn through(left: f64, right: f64, quadrature_nodes: usize) -> Result<Self> {
        ContourSpec::new(0.5 * (left + right), 0.5 * (right - left), quadrature_nodes)
    }

    pub fn encloses(&self, e: f64) -> bool {
        (e - self.center).abs() < self.radius
    }

    pub fn clearance(&self, e: f64) -> f64 {
        ((e - self.center).abs() - self.radius).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProjectorMethod {
    /// Sum of eigenprojections inside the contour.
    Spectral,
    /// Trapezoid rule for `(i/2π)∮(K - z)⁻¹ dz` with LU-based resolvents.
    Quadrature,
}

fn check_contour(values: &[f64], contour: &ContourSpec) -> Result<()> {
    for &v in values {
        let d = contour.clearance(v);
        if d < CONTOUR_CLEARANCE {
            return Err(Error::EigenvalueOnContour {
                eigenvalue: v,
                distance: d,
            });
        }
    }
    Ok(())
}

/// Projector from a precomputed eigendecomposition.
pub fn projector_from_eigen(eigen: &Eigen, contour: &ContourSpec) -> Result<Mat<c64>> {
    check_contour(&eigen.values, contour)?;
    let n = eigen.values.len();
    let inside: Vec<usize> = (0..n)
        .filter(|&j| contour.encloses(eigen.values[j]))
        .collect();
    let v = Mat::from_fn(n, inside.len(), |i, k| eigen.vectors[(i, inside[k])]);
    Ok(&v * v.adjoint())
}

fn projector_by_quadrature(m: MatRef<'_, c64>, contour: &ContourSpec) -> Result<Mat<c64>> {
    let n = m.nrows();
    let nodes = contour.quadrature_nodes;
    let mut acc = Mat::<c64>::zeros(n, n);
    let identity = Mat::<c64>::identity(n, n);
    // Nodes sit at θ = 2π(k + ½)/N, so node N-1-k is the conjugate of node k
    // and (K - z̄)⁻¹ = ((K - z)⁻¹)† pairs them for Hermitian K.
    let paired = nodes % 2 == 0;
    let count = if paired { nodes / 2 } else { nodes };
    for k in 0..count {
        let theta = 2.0 * PI * (k as f64 + 0.5) / nodes as f64;
        let w = c64::new(theta.cos(), theta.sin());
        let z = c64::new(contour.center, 0.0) + w * contour.radius;
        let shifted = Mat::from_fn(n, n, |i, j| if i == j { m[(i, j)] - z } else { m[(i, j)] });
        let inv = shifted.partial_piv_lu().solve(&identity);
        // (i/2π)·i r e^{iθ}·(2π/N) = -r e^{iθ}/N
        let term = &inv * faer::Scale(-w * (contour.radius / nodes as f64));
        if paired {
            acc += &term + term.adjoint();
        } else {
            acc += &term;
        }
    }
    Ok(acc)
}

/// Riesz projector `P = (i/2π)∮_L (K - z)⁻¹ dz`.
pub fn riesz_projector(
    k: &KernelOperator,
    contour: &ContourSpec,
    method: ProjectorMethod,
) -> Result<Mat<c64>> {
    match method {
        ProjectorMethod::Spectral => projector_from_eigen(&eigh(k.matrix.as_ref())?, contour),
        ProjectorMethod::Quadrature => {
            check_contour(&eigvalsh(k.matrix.as_ref())?, contour)?;
            projector_by_quadrature(k.matrix.as_ref(), contour)
        }
    }
}

/// Frobenius-norm defects of `P² = P`, `P = P†` and `PK = KP`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectorDefects {
    pub idempotence: f64,
    pub self_adjointness: f64,
    pub commutator: f64,
}

pub fn projector_defects(p: MatRef<'_, c64>, k: MatRef<'_, c64>) -> ProjectorDefects {
    let p2 = p * p;
    let idempotence = (&p2 - p).norm_l2();
    let self_adjointness = (p - p.adjoint()).norm_l2();
    let commutator = (mul_right_sparse(p, k) - mul_left_sparse(k, p)).norm_l2();
    ProjectorDefects {
        idempotence,
        self_adjointness,
        commutator,
    }
}

/// Nonzero pattern of `k` by rows, or `None` when `k` is too dense for the
/// sparse products to pay off.
fn sparse_rows(k: MatRef<'_, c64>) -> Option<Vec<Vec<(usize, c64)>>> {
    let n = k.nrows();
    let zero = c64::new(0.0, 0.0);
    let mut rows = Vec::with_capacity(n);
    let mut nnz = 0usize;
    for i in 0..n {
        let row: Vec<(usize, c64)> = (0..k.ncols())
            .filter(|&j| k[(i, j)] != zero)
            .map(|j| (j, k[(i, j)]))
            .collect();
        nnz += row.len();
        if nnz > n * k.ncols() / 20 + 64 {
            return None;
        }
        rows.push(row);
    }
    Some(rows)
}

/// `K M`, exploiting sparsity of `K`.
pub(crate) fn mul_left_sparse(k: MatRef<'_, c64>, m: MatRef<'_, c64>) -> Mat<c64> {
    match sparse_rows(k) {
        None => k * m,
        Some(rows) => Mat::from_fn(k.nrows(), m.ncols(), |i, j| {
            rows[i].iter().map(|&(y, v)| v * m[(y, j)]).sum()
        }),
    }
}

/// `M K`, exploiting sparsity of `K`.
pub(crate) fn mul_right_sparse(m: MatRef<'_, c64>, k: MatRef<'_, c64>) -> Mat<c64> {
    match sparse_rows(k.transpose()) {
        None => m * k,
        // rows of Kᵀ are the columns of K
        Some(cols) => Mat::from_fn(m.nrows(), k.ncols(), |i, j| {
            cols[j].iter().map(|&(y, v)| m[(i, y)] * v).sum()
        }),
    }
}

fn trace_rank(p: MatRef<'_, c64>) -> usize {
    let tr: f64 = (0..p.nrows()).map(|i| p[(i, i)].re).sum();
    tr.round().max(0.0) as usize
}

/// `λ + inf σ(D)` with `D = K P - λ P`, given the projector `P`.
pub fn gap_edge_from_projector(k: MatRef<'_, c64>, p: MatRef<'_, c64>, lambda: f64) -> Result<f64> {
    let n = k.nrows();
    let rank = trace_rank(p);
    if rank == 0 || rank >= n {
        return Err(Error::ContourMisconfigured { rank, dim: n });
    }
    let d = mul_left_sparse(k, p) - p * faer::Scale(c64::new(lambda, 0.0));
    // K and P commute only up to rounding; use the Hermitian part
    let dh = Mat::from_fn(n, n, |i, j| (d[(i, j)] + d[(j, i)].conj()) * 0.5);
    let values = eigvalsh(dh.as_ref())?;
    let inf = values[0];
    if inf > -0.5 {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} too small: inf σ(D) = {inf} > -1/2"
        )));
    }
    Ok(lambda + inf)
}

/// Upper gap edge `e_+ = λ + inf σ(K P - λ P)` for the part of the spectrum
/// enclosed by `contour`.
pub fn gap_edge_via_db(k: &KernelOperator, contour: &ContourSpec, lambda: f64) -> Result<f64> {
    let p = riesz_projector(k, contour, ProjectorMethod::Spectral)?;
    gap_edge_from_projector(k.matrix.as_ref(), p.as_ref(), lambda)
}

/// Serializable record of a projector cross-check.
pub fn projector_report(defects: &ProjectorDefects, k_norm: f64) -> ProbeReport {
    let mut r = ProbeReport::new("projector_identities");
    r.check_le("idempotence", defects.idempotence, 1e-10);
    r.check_le("self_adjointness", defects.self_adjointness, 1e-10);
    r.check_le("commutator", defects.commutator, 1e-10 * k_norm.max(1.0));
    r.measure("operator_scale", json!(k_norm));
    r
}
