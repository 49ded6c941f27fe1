//! Harper-like operators on a randomly deformed square lattice.

use std::sync::Arc;

use faer::Mat;
use serde::Serialize;

use super::gaps::tracking_width;
use super::lipschitz::{lipschitz_probe, EdgeSelector, LipschitzReport};
use super::sweep::{flux_sweep_with, operator_at, FluxSweep, SweepModel};
use crate::c64;
use crate::error::{Error, Result};
use crate::kernel::{assemble, GeneratingKernel, KernelOperator};
use crate::lattice::{build_deformed_lattice, build_square_lattice, Lattice};
use crate::magnetics::{magnetic_phase, unimodular, Flux, PhaseSource};
use crate::spectral::eigvalsh;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IrregularExperiment {
    pub n_side: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub sweep: FluxSweep,
    /// `max_j |λ_j - μ_j|` between the operator on Γ and its counterpart on
    /// the integer box, per flux value.
    pub equivalence_defects: Vec<f64>,
    pub gap_index: usize,
    pub lower: LipschitzReport,
    pub upper: LipschitzReport,
}

impl IrregularExperiment {
    pub fn max_equivalence_defect(&self) -> f64 {
        self.equivalence_defects.iter().copied().fold(0.0, f64::max)
    }
}

/// The deformed lattice enumerated by physical position (`x1`, then `x2`),
/// so that its index order differs from the order of the integer labels.
pub fn deformed_by_position(n_side: usize, amplitude: f64, seed: u64) -> Result<Lattice> {
    let lattice = build_deformed_lattice(n_side, amplitude, seed)?;
    let pos = lattice.positions();
    let mut order: Vec<usize> = (0..lattice.len()).collect();
    order.sort_by(|&i, &j| {
        pos[i]
            .x1
            .total_cmp(&pos[j].x1)
            .then(pos[i].x2.total_cmp(&pos[j].x2))
    });
    lattice.relabeled(&order)
}

/// The counterpart on `Z²`: kernel `K(n, n')e^{ibφ(F⁻¹n, F⁻¹n')}` on the
/// integer box, with `F⁻¹` looked up from `deformed`.
pub fn integer_counterpart(
    deformed: &Lattice,
    gen: &GeneratingKernel,
    b: Flux,
    n_side: usize,
) -> Result<KernelOperator> {
    let square = Arc::new(build_square_lattice(n_side)?);
    let inverse = deformed.inverse_image()?;
    let preimage = square
        .integer_image()
        .ok_or(Error::MissingIntegerImage)?
        .iter()
        .map(|v| {
            inverse.get(v).map(|&i| deformed.point(i)).ok_or_else(|| {
                Error::InvalidParameter(format!("label {v:?} missing from the deformed lattice"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = assemble(&square, gen, b)?;
    let bv = b.value();
    let n = k.dim();
    let matrix = Mat::from_fn(n, n, |i, j| {
        let v = k.matrix[(i, j)];
        if v == c64::new(0.0, 0.0) {
            v
        } else {
            v * unimodular(bv * magnetic_phase(preimage[i], preimage[j]))
        }
    });
    KernelOperator::from_matrix(
        square,
        matrix,
        "integer counterpart of a deformed-phase operator",
    )
}

/// Deformed-phase sweep over `b_grid`, cross-checked against the integer-box
/// counterpart, with Lipschitz probes of the widest gap at `b_grid[0]`.
/// Gaps narrower than [`tracking_width`] at `b_grid[0]` are ignored.
pub fn irregular_lattice_experiment(
    n_side: usize,
    amplitude: f64,
    seed: u64,
    gen: &GeneratingKernel,
    b_grid: &[f64],
    bound_factor: f64,
) -> Result<IrregularExperiment> {
    let lattice = Arc::new(deformed_by_position(n_side, amplitude, seed)?);
    let model = SweepModel::new(
        gen.description(),
        format!("deformed(n={n_side}, amplitude={amplitude}, seed={seed})"),
        PhaseSource::Deformed,
    );
    let build = |b| operator_at(&lattice, gen, Flux(b), PhaseSource::Deformed);
    let b0 = *b_grid
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty flux grid".into()))?;
    let min_width = tracking_width(&eigvalsh(build(b0)?.matrix.as_ref())?);
    let sweep = flux_sweep_with(model, b_grid, Some(min_width), build)?;
    let equivalence_defects = b_grid
        .iter()
        .zip(&sweep.rows)
        .map(|(&b, row)| {
            let other = eigvalsh(
                integer_counterpart(&lattice, gen, Flux(b), n_side)?
                    .matrix
                    .as_ref(),
            )?;
            Ok(row
                .eigenvalues
                .iter()
                .zip(&other)
                .map(|(a, c)| (a - c).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    let base = &sweep.rows[0];
    let widest = base.widest_gap().ok_or_else(|| {
        Error::NoGap(format!(
            "{} on the deformed lattice at b = {b0}",
            gen.description()
        ))
    })?;
    let gap_index = base
        .gaps
        .iter()
        .position(|g| *g == widest)
        .expect("widest gap is listed");
    let lower = lipschitz_probe(&sweep, EdgeSelector::GapLower(gap_index), b0, bound_factor)?;
    let upper = lipschitz_probe(&sweep, EdgeSelector::GapUpper(gap_index), b0, bound_factor)?;
    Ok(IrregularExperiment {
        n_side,
        amplitude,
        seed,
        sweep,
        equivalence_defects,
        gap_index,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::lipschitz::DEFAULT_BOUND_FACTOR;
    use crate::experiments::sweep::{flux_sweep, linear_grid};

    #[test]
    fn enumeration_differs_from_labels() {
        let lat = deformed_by_position(8, 0.3, 11).unwrap();
        let image = lat.integer_image().unwrap();
        let label_order = (0..lat.len()).all(|i| image[i] == [(i % 8) as i64, (i / 8) as i64]);
        assert!(!label_order);
    }

    #[test]
    fn unitary_equivalence_small() {
        let gen = GeneratingKernel::StaggeredMassHarper { mass: 1.0 };
        let grid = linear_grid(0.0, 0.1, 9).unwrap();
        let e =
            irregular_lattice_experiment(10, 0.3, 11, &gen, &grid, DEFAULT_BOUND_FACTOR).unwrap();
        assert!(
            e.max_equivalence_defect() < 1e-10,
            "{:?}",
            e.equivalence_defects
        );
    }

    #[test]
    fn zero_amplitude_is_the_square_lattice() {
        let gen = GeneratingKernel::StaggeredMassHarper { mass: 1.0 };
        let grid = linear_grid(0.0, 0.1, 6).unwrap();
        let e =
            irregular_lattice_experiment(8, 0.0, 11, &gen, &grid, DEFAULT_BOUND_FACTOR).unwrap();
        let square = Arc::new(build_square_lattice(8).unwrap());
        let reference = flux_sweep(&square, &gen, &grid, PhaseSource::Standard, None).unwrap();
        for (a, b) in e.sweep.rows.iter().zip(&reference.rows) {
            let d = a
                .eigenvalues
                .iter()
                .zip(&b.eigenvalues)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn deformed_phase_changes_the_spectrum() {
        let gen = GeneratingKernel::HarperNN;
        let lat = Arc::new(deformed_by_position(8, 0.3, 11).unwrap());
        let square = Arc::new(build_square_lattice(8).unwrap());
        let a = eigvalsh(
            operator_at(&lat, &gen, Flux(0.5), PhaseSource::Deformed)
                .unwrap()
                .matrix
                .as_ref(),
        )
        .unwrap();
        let b = eigvalsh(
            operator_at(&square, &gen, Flux(0.5), PhaseSource::Standard)
                .unwrap()
                .matrix
                .as_ref(),
        )
        .unwrap();
        assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-3));
    }
}
