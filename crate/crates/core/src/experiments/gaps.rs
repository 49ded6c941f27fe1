//! Tracking a spectral gap across a flux interval.

use std::sync::Arc;

use faer::Mat;
use serde::Serialize;
use serde_json::json;

use super::lipschitz::{lipschitz_probe, EdgeSelector, LipschitzReport, DEFAULT_BOUND_FACTOR};
use super::sweep::{linear_grid, operator_at, FluxSweep, SweepModel};
use crate::c64;
use crate::error::{Error, Result};
use crate::kernel::GeneratingKernel;
use crate::lattice::Lattice;
use crate::magnetics::{Flux, PhaseSource};
use crate::probe::ProbeReport;
use crate::spectral::{
    eigh, eigvalsh, gap_edge_from_projector, projector_defects, projector_from_eigen,
    riesz_projector, ContourSpec, ProjectorDefects, ProjectorMethod, SpectralSummary,
};

/// Agreement required between the projector edge and the direct reading,
/// and of the projector identities.
const EDGE_TOLERANCE: f64 = 1e-10;

/// Agreement required between the spectral and quadrature projectors.
const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Default minimum width of a tracked gap, as a fraction of the spectral
/// range at the base point. Narrower spacings on the default boxes are
/// finite-size level spacings (at most 0.07 for the 30×30 Harper box).
pub const TRACKING_WIDTH_FRACTION: f64 = 0.02;

pub fn tracking_width(sorted: &[f64]) -> f64 {
    match (sorted.first(), sorted.last()) {
        (Some(lo), Some(hi)) => TRACKING_WIDTH_FRACTION * (hi - lo),
        _ => f64::INFINITY,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapTrackOptions {
    /// Minimum gap width; `None` uses [`tracking_width`] at the base point.
    pub min_width: Option<f64>,
    pub bound_factor: f64,
    pub phase_source: PhaseSource,
    /// Trapezoid nodes for the quadrature projector.
    pub quadrature_nodes: usize,
    /// Flux values (on the grid) where the quadrature projector is built
    /// and compared with the spectral one. Each costs `nodes/2` dense
    /// inversions.
    pub quadrature_at: Vec<f64>,
}

impl Default for GapTrackOptions {
    fn default() -> Self {
        GapTrackOptions {
            min_width: None,
            bound_factor: DEFAULT_BOUND_FACTOR,
            phase_source: PhaseSource::Standard,
            quadrature_nodes: 64,
            quadrature_at: Vec::new(),
        }
    }
}

/// Direct and projector-based readings of `e_+` at one flux value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeCrossCheck {
    pub b: f64,
    pub direct: f64,
    pub via_db: f64,
    pub difference: f64,
    pub defects: ProjectorDefects,
    /// Operator-norm distance between the spectral and quadrature projectors.
    pub quadrature_difference: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapTrack {
    pub sweep: FluxSweep,
    /// Index of the tracked gap at the base point.
    pub gap_index: usize,
    pub lambda: f64,
    pub contour: ContourSpec,
    pub lower: LipschitzReport,
    pub upper: LipschitzReport,
    pub cross_checks: Vec<EdgeCrossCheck>,
    pub persists: bool,
}

impl GapTrack {
    /// Hard checks on the projector cross-validation.
    pub fn cross_check_report(&self) -> ProbeReport {
        let mut r = ProbeReport::new("gap_edge_cross_check")
            .input("lambda", self.lambda)
            .input("contour", json!(self.contour));
        let worst = |f: &dyn Fn(&EdgeCrossCheck) -> f64| {
            self.cross_checks.iter().map(f).fold(0.0, f64::max)
        };
        r.measure(
            "b",
            json!(self.cross_checks.iter().map(|c| c.b).collect::<Vec<_>>()),
        );
        r.check_le("edge_difference", worst(&|c| c.difference), EDGE_TOLERANCE);
        r.check_le(
            "idempotence",
            worst(&|c| c.defects.idempotence),
            EDGE_TOLERANCE,
        );
        r.check_le(
            "self_adjointness",
            worst(&|c| c.defects.self_adjointness),
            EDGE_TOLERANCE,
        );
        r.check_le(
            "commutator",
            worst(&|c| c.defects.commutator),
            EDGE_TOLERANCE,
        );
        let quad: Vec<f64> = self
            .cross_checks
            .iter()
            .filter_map(|c| c.quadrature_difference)
            .collect();
        if !quad.is_empty() {
            r.check_le(
                "quadrature_projector",
                quad.iter().copied().fold(0.0, f64::max),
                QUADRATURE_TOLERANCE,
            );
        }
        r.check_that("gap_persists", self.persists);
        r
    }
}

/// Tracks the widest gap at `b_min` over `steps` equally spaced flux values
/// in `[b_min, b_max]`.
///
/// At each step the upper edge is read directly from the spectrum and again
/// as `λ + inf σ(K_b P - λP)`, with `P` the projector onto the spectrum
/// between the gap midpoint at `b_min` and `λ = 1 + sup σ(K_{b_min})`.
/// Quadrature projectors are built only at `opts.quadrature_at`.
pub fn gap_track(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b_min: f64,
    b_max: f64,
    steps: usize,
    opts: &GapTrackOptions,
) -> Result<GapTrack> {
    let grid = linear_grid(b_min, b_max, steps)?;
    for b in &opts.quadrature_at {
        if !grid.contains(b) {
            return Err(Error::InvalidParameter(format!(
                "quadrature point b = {b} is not on the grid"
            )));
        }
    }
    let source = opts.phase_source;
    let base = operator_at(lattice, gen, Flux(b_min), source)?;
    let base_values = eigvalsh(base.matrix.as_ref())?;
    let min_width = Some(
        opts.min_width
            .unwrap_or_else(|| tracking_width(&base_values)),
    );
    let base_spec = SpectralSummary::from_eigenvalues(base_values, min_width)?;
    let widest = base_spec
        .widest_gap()
        .ok_or_else(|| Error::NoGap(format!("{} at b = {b_min}", gen.description())))?;
    let gap_index = base_spec
        .gaps
        .iter()
        .position(|g| *g == widest)
        .expect("widest gap is listed");
    let lambda = 1.0 + base_spec.e_plus;
    let contour = ContourSpec::through(widest.midpoint(), lambda, opts.quadrature_nodes)?;

    // Sequential: each step holds several dense n×n complex matrices.
    let mut rows = Vec::with_capacity(grid.len());
    let mut cross_checks = Vec::with_capacity(grid.len());
    for &b in &grid {
        let k = operator_at(lattice, gen, Flux(b), source)?;
        let eig = eigh(k.matrix.as_ref())?;
        let row = SpectralSummary::from_eigenvalues(eig.values.clone(), min_width)?;
        let p = projector_from_eigen(&eig, &contour)?;
        drop(eig);
        let via_db = gap_edge_from_projector(k.matrix.as_ref(), p.as_ref(), lambda)?;
        let direct = row
            .first_above(widest.midpoint())
            .ok_or_else(|| Error::NoGap(format!("no spectrum above the gap at b = {b}")))?;
        let defects = projector_defects(p.as_ref(), k.matrix.as_ref());
        let quadrature_difference = if opts.quadrature_at.contains(&b) {
            let q = riesz_projector(&k, &contour, ProjectorMethod::Quadrature)?;
            let d: Mat<c64> = &q - &p;
            // the difference is Hermitian up to rounding
            let v = eigvalsh(d.as_ref())?;
            Some(v[0].abs().max(v[v.len() - 1].abs()))
        } else {
            None
        };
        cross_checks.push(EdgeCrossCheck {
            b,
            direct,
            via_db,
            difference: (direct - via_db).abs(),
            defects,
            quadrature_difference,
        });
        rows.push(row);
    }

    let model = SweepModel::new(
        gen.description(),
        format!("{:?}[{}]", lattice.kind(), lattice.len()),
        source,
    );
    let sweep = FluxSweep::from_rows(model, grid, rows)?;
    let lower = lipschitz_probe(
        &sweep,
        EdgeSelector::GapLower(gap_index),
        b_min,
        opts.bound_factor,
    )?;
    let upper = lipschitz_probe(
        &sweep,
        EdgeSelector::GapUpper(gap_index),
        b_min,
        opts.bound_factor,
    )?;
    let persists = lower.closed_at.is_empty() && upper.closed_at.is_empty();
    Ok(GapTrack {
        sweep,
        gap_index,
        lambda,
        contour,
        lower,
        upper,
        cross_checks,
        persists,
    })
}
