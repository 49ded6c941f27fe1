//! Peierls finite-difference discretization of `(p - ba)² + V` on a box.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use super::lipschitz::{
    lipschitz_from_points, EdgeSelector, LipschitzReport, DEFAULT_BOUND_FACTOR,
};
use super::sweep::geometric_grid;
use crate::c64;
use crate::error::{Error, Result};
use crate::kernel::{Cutoff, KernelOperator, OperatorMeta, Provenance, Twist};
use crate::lattice::{build_grid_lattice, Lattice, Point};
use crate::magnetics::{magnetic_phase, unimodular, Flux, PhaseSource};
use crate::spectral::{default_gap_width, eigvalsh};

/// `strength·(2 + cos(2πx1/period) + cos(2πx2/period))`.
pub fn periodic_potential(strength: f64, period: f64) -> impl Fn(Point) -> f64 + Sync {
    let q = 2.0 * PI / period;
    move |x| strength * (2.0 + (q * x.x1).cos() + (q * x.x2).cos())
}

pub fn sample_potential(lattice: &Lattice, v: impl Fn(Point) -> f64) -> Vec<f64> {
    lattice.points().iter().map(|p| v(p.position())).collect()
}

/// The `grid_n × grid_n` grid with spacing `h` and points `h·(i+1, j+1)`,
/// i.e. the interior of the box `[0, (grid_n+1)h]²` with Dirichlet walls.
pub fn continuum_grid(grid_n: usize, h: f64) -> Result<Lattice> {
    build_grid_lattice(grid_n, h, Point::new(h, h))
}

/// Five-point Laplacian with Peierls factors: hops `-e^{ibφ(x, x')}/h²`
/// between grid neighbours, diagonal `4/h² + V(x)`.
///
/// The line integral of `a(x) = (-x2, x1)/2` along the segment from `x'` to
/// `x` is exactly `φ(x, x')`, so the phases are exact for straight hops.
pub fn continuum_model(
    grid_n: usize,
    h: f64,
    potential: &[f64],
    b: Flux,
) -> Result<KernelOperator> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    let lattice = Arc::new(continuum_grid(grid_n, h)?);
    let n = lattice.len();
    if potential.len() != n {
        return Err(Error::DimensionMismatch {
            left: potential.len(),
            right: n,
        });
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "potential samples must be finite".into(),
        ));
    }
    let pos = lattice.positions();
    let bv = b.value();
    let hop = -1.0 / (h * h);
    let mut matrix = Mat::<c64>::zeros(n, n);
    let index = |i: usize, j: usize| j * grid_n + i;
    for j in 0..grid_n {
        for i in 0..grid_n {
            let p = index(i, j);
            matrix[(p, p)] = c64::new(4.0 / (h * h) + potential[p], 0.0);
            let mut link = |q: usize| {
                let v = unimodular(bv * magnetic_phase(pos[p], pos[q])) * hop;
                matrix[(p, q)] = v;
                matrix[(q, p)] = v.conj();
            };
            if i + 1 < grid_n {
                link(index(i + 1, j));
            }
            if j + 1 < grid_n {
                link(index(i, j + 1));
            }
        }
    }
    let mut k = KernelOperator::from_matrix(lattice, matrix, "continuum")?;
    k.meta = OperatorMeta {
        provenance: Provenance::Continuum { spacing: h },
        b,
        cutoff: Cutoff::None,
        twist: Some(Twist {
            b,
            source: PhaseSource::Standard,
        }),
        comparison_t: None,
    };
    Ok(k)
}

/// The lowest cluster of eigenvalues, cut at the widest spacing in the
/// lower half of the spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowestBand {
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    /// First eigenvalue above the band.
    pub next: f64,
    pub band_width: f64,
    pub gap_width: f64,
    /// The gap is wider than the band and than the default gap width.
    pub isolated: bool,
}

pub fn locate_lowest_band(sorted: &[f64]) -> Result<LowestBand> {
    let n = sorted.len();
    if n < 4 {
        return Err(Error::InvalidParameter(
            "need at least 4 eigenvalues to locate a band".into(),
        ));
    }
    let (cut, gap_width) = (0..n / 2)
        .map(|i| (i, sorted[i + 1] - sorted[i]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    Ok(band_with_count(sorted, cut + 1, gap_width))
}

fn band_with_count(sorted: &[f64], count: usize, gap_width: f64) -> LowestBand {
    let band_width = sorted[count - 1] - sorted[0];
    LowestBand {
        count,
        lower: sorted[0],
        upper: sorted[count - 1],
        next: sorted[count],
        band_width,
        gap_width,
        isolated: gap_width > band_width && gap_width >= default_gap_width(sorted),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuumOptions {
    pub grid_n: usize,
    pub spacing: f64,
    pub strength: f64,
    pub period: f64,
    pub b0: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub bound_factor: f64,
}

impl Default for ContinuumOptions {
    fn default() -> Self {
        ContinuumOptions {
            grid_n: 64,
            spacing: 0.25,
            strength: 10.0,
            period: 4.0,
            b0: 0.0,
            k_min: 3,
            k_max: 9,
            bound_factor: DEFAULT_BOUND_FACTOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuumExperiment {
    pub options: ContinuumOptions,
    pub b_values: Vec<f64>,
    /// The band at `b0`; its eigenvalue count is held fixed across the grid.
    pub band: LowestBand,
    /// The band (same count) at each grid point.
    pub bands: Vec<LowestBand>,
    pub lower: LipschitzReport,
    pub upper: LipschitzReport,
}

impl ContinuumExperiment {
    pub fn isolated_throughout(&self) -> bool {
        self.bands.iter().all(|b| b.isolated)
    }
}

/// Locates the lowest band at `b0` and probes the Lipschitz quotients of its
/// edges `s_-(b)`, `s_+(b)` over the geometric grid.
pub fn continuum_experiment(opts: &ContinuumOptions) -> Result<ContinuumExperiment> {
    let lattice = continuum_grid(opts.grid_n, opts.spacing)?;
    let v = sample_potential(&lattice, periodic_potential(opts.strength, opts.period));
    let grid = geometric_grid(opts.b0, opts.k_min, opts.k_max)?;
    let spectra = grid
        .par_iter()
        .map(|&b| {
            eigvalsh(
                continuum_model(opts.grid_n, opts.spacing, &v, Flux(b))?
                    .matrix
                    .as_ref(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let i0 = grid
        .iter()
        .position(|&b| b == opts.b0)
        .expect("b0 is on the grid");
    let band = locate_lowest_band(&spectra[i0])?;
    if !band.isolated {
        return Err(Error::NoGap(format!(
            "lowest band at b = {} is not isolated: {band:?}",
            opts.b0
        )));
    }
    let bands: Vec<LowestBand> = spectra
        .iter()
        .map(|s| band_with_count(s, band.count, s[band.count] - s[band.count - 1]))
        .collect();
    let points = |f: fn(&LowestBand) -> f64| -> Vec<(f64, f64)> {
        grid.iter()
            .zip(&bands)
            .filter(|(&b, _)| b != opts.b0)
            .map(|(&b, lb)| (b, f(lb)))
            .collect()
    };
    let lower = lipschitz_from_points(
        EdgeSelector::EMinus,
        opts.b0,
        band.lower,
        &points(|lb| lb.lower),
        opts.bound_factor,
    )?;
    let upper = lipschitz_from_points(
        EdgeSelector::GapLower(0),
        opts.b0,
        band.upper,
        &points(|lb| lb.upper),
        opts.bound_factor,
    )?;
    Ok(ContinuumExperiment {
        options: opts.clone(),
        b_values: grid,
        band,
        bands,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_laplacian_bounds() {
        let n = 12;
        let h = 0.5;
        let k = continuum_model(n, h, &vec![0.0; n * n], Flux::ZERO).unwrap();
        let vals = eigvalsh(k.matrix.as_ref()).unwrap();
        assert!(vals[0] > 0.0 && vals[vals.len() - 1] < 8.0 / (h * h));
        // Dirichlet box: λ = (2 - 2cos(πk/(n+1)) + 2 - 2cos(πl/(n+1)))/h²
        let lowest = 2.0 * (2.0 - 2.0 * (PI / (n + 1) as f64).cos()) / (h * h);
        assert!((vals[0] - lowest).abs() < 1e-12);
    }

    #[test]
    fn magnetic_model_is_hermitian_and_gauge_covariant() {
        let n = 8;
        let k = continuum_model(n, 0.3, &vec![1.0; n * n], Flux(0.7)).unwrap();
        assert!(k.hermiticity_defect() == 0.0);
        // plaquette flux b h²
        let p = |i: usize, j: usize| j * n + i;
        let m = &k.matrix;
        let loop_ = m[(p(1, 0), p(0, 0))]
            * m[(p(1, 1), p(1, 0))]
            * m[(p(0, 1), p(1, 1))]
            * m[(p(0, 0), p(0, 1))];
        let arg = loop_.arg();
        assert!((arg - 0.7 * 0.09).abs() < 1e-12, "{arg}");
    }

    #[test]
    fn constant_potential_shifts_the_spectrum() {
        let n = 6;
        let a = eigvalsh(
            continuum_model(n, 0.5, &vec![0.0; n * n], Flux(0.3))
                .unwrap()
                .matrix
                .as_ref(),
        )
        .unwrap();
        let b = eigvalsh(
            continuum_model(n, 0.5, &vec![2.5; n * n], Flux(0.3))
                .unwrap()
                .matrix
                .as_ref(),
        )
        .unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (y - x - 2.5).abs() < 1e-12));
    }

    #[test]
    fn band_location() {
        let s = [0.0, 0.1, 0.2, 5.0, 5.1, 5.2, 5.3, 5.4, 5.5, 5.6];
        let band = locate_lowest_band(&s).unwrap();
        assert_eq!(band.count, 3);
        assert!(band.isolated);
        assert!((band.gap_width - 4.8).abs() < 1e-12);
    }

    #[test]
    fn wells_give_an_isolated_band() {
        // 12×12 grid at h = 0.5 covers a 6.5 box: 2×2 wells of period 3
        let opts = ContinuumOptions {
            grid_n: 12,
            spacing: 0.5,
            period: 3.0,
            ..Default::default()
        };
        let lattice = continuum_grid(opts.grid_n, opts.spacing).unwrap();
        let v = sample_potential(&lattice, periodic_potential(opts.strength, opts.period));
        let vals = eigvalsh(
            continuum_model(12, 0.5, &v, Flux::ZERO)
                .unwrap()
                .matrix
                .as_ref(),
        )
        .unwrap();
        let band = locate_lowest_band(&vals).unwrap();
        assert!(band.isolated, "{band:?}");
        assert_eq!(band.count, 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(continuum_model(4, 0.0, &[0.0; 16], Flux::ZERO).is_err());
        assert!(continuum_model(4, 0.5, &[0.0; 15], Flux::ZERO).is_err());
    }
}
