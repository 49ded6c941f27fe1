use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{assemble_twisted, GeneratingKernel, KernelOperator};
use crate::lattice::Lattice;
use crate::magnetics::{Flux, PhaseSource};
use crate::spectral::{eigvalsh, SpectralSummary};

/// What was swept: a free-form model label plus the phase convention.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepModel {
    pub description: String,
    pub lattice: String,
    pub phase_source: PhaseSource,
}

impl SweepModel {
    pub fn new(
        description: impl Into<String>,
        lattice: impl Into<String>,
        phase_source: PhaseSource,
    ) -> Self {
        SweepModel {
            description: description.into(),
            lattice: lattice.into(),
            phase_source,
        }
    }
}

/// Spectra of `K_b` on a strictly increasing grid of `b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxSweep {
    pub model: SweepModel,
    pub b_values: Vec<f64>,
    pub rows: Vec<SpectralSummary>,
}

impl FluxSweep {
    pub fn from_rows(
        model: SweepModel,
        b_values: Vec<f64>,
        rows: Vec<SpectralSummary>,
    ) -> Result<Self> {
        if b_values.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                left: b_values.len(),
                right: rows.len(),
            });
        }
        check_increasing(&b_values)?;
        Ok(FluxSweep {
            model,
            b_values,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.b_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b_values.is_empty()
    }

    pub fn index_of(&self, b: f64) -> Option<usize> {
        self.b_values.iter().position(|&v| v == b)
    }

    pub fn row_at(&self, b: f64) -> Option<&SpectralSummary> {
        self.index_of(b).map(|i| &self.rows[i])
    }
}

fn check_increasing(b: &[f64]) -> Result<()> {
    if b.iter().any(|v| !v.is_finite()) || b.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "flux grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `K_b` for any generator: `b`-dependent generators are evaluated at `b`.
pub fn operator_at(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
    source: PhaseSource,
) -> Result<KernelOperator> {
    assemble_twisted(lattice, gen, b, source)
}

pub fn flux_sweep(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b_grid: &[f64],
    source: PhaseSource,
    min_width: Option<f64>,
) -> Result<FluxSweep> {
    let model = SweepModel::new(
        gen.description(),
        format!("{:?}[{}]", lattice.kind(), lattice.len()),
        source,
    );
    flux_sweep_with(model, b_grid, min_width, |b| {
        operator_at(lattice, gen, Flux(b), source)
    })
}

/// Sweep over an arbitrary operator family. Points are evaluated in
/// parallel; rows come back in grid order.
pub fn flux_sweep_with<F>(
    model: SweepModel,
    b_grid: &[f64],
    min_width: Option<f64>,
    build: F,
) -> Result<FluxSweep>
where
    F: Fn(f64) -> Result<KernelOperator> + Sync,
{
    check_increasing(b_grid)?;
    if b_grid.is_empty() {
        return Err(Error::InvalidParameter("empty flux grid".into()));
    }
    let rows = b_grid
        .par_iter()
        .map(|&b| {
            let k = build(b)?;
            SpectralSummary::from_eigenvalues(eigvalsh(k.matrix.as_ref())?, min_width)
        })
        .collect::<Result<Vec<_>>>()?;
    FluxSweep::from_rows(model, b_grid.to_vec(), rows)
}

/// `steps` equally spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidParameter(
            "flux grid needs steps >= 1 and finite bounds".into(),
        ));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    if !(max > min) {
        return Err(Error::InvalidParameter(format!(
            "flux grid needs max > min (min={min}, max={max})"
        )));
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                max
            } else {
                min + h * i as f64
            }
        })
        .collect())
}

/// `{b0} ∪ {b0 + π 2^{-k} : k_min <= k <= k_max}`, ascending.
pub fn geometric_grid(b0: f64, k_min: u32, k_max: u32) -> Result<Vec<f64>> {
    if k_min > k_max {
        return Err(Error::InvalidParameter(format!(
            "k_min {k_min} > k_max {k_max}"
        )));
    }
    let mut grid: Vec<f64> = (k_min..=k_max)
        .map(|k| b0 + PI * 0.5f64.powi(k as i32))
        .collect();
    grid.push(b0);
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

/// `max_j |λ_j(K_b) - λ_j(K_{-b})|`.
pub fn symmetry_defect(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
    source: PhaseSource,
) -> Result<f64> {
    let plus = eigvalsh(operator_at(lattice, gen, b, source)?.matrix.as_ref())?;
    let minus = eigvalsh(
        operator_at(lattice, gen, Flux(-b.value()), source)?
            .matrix
            .as_ref(),
    )?;
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(a, c)| (a - c).abs())
        .fold(0.0, f64::max))
}
