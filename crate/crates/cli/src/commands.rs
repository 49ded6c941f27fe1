//! Maps each command to its experiment and collects reports and tables.

use std::sync::Arc;

use magband::experiments::{
    continuum_experiment, flux_sweep, gap_track, geometric_grid, hausdorff_scaling_probe,
    integer_counterpart, linear_grid, lipschitz_probe, ContinuumOptions, EdgeSelector, FluxSweep,
    GapTrackOptions,
};
use magband::heatkernel::{identity_suite, Quadrature};
use magband::kernel::assemble;
use magband::lattice::build_square_lattice;
use magband::magnetics::{magnetic_phase, peierls_twist, phase_additive_defect};
use magband::norms::{c_alpha_norm, embedding_check, h_alpha_norm, schur_holmgren_norm};
use magband::resolvent::{
    conjugation_check, distance_ladder, factorization_defect, resolvent, weighted_decay_probe,
};
use magband::spectral::{
    eigh, eigvalsh, projector_defects, projector_from_eigen, projector_report,
    sup_comparison_check, ContourSpec,
};
use magband::{
    c64, Flux, GeneratingKernel, KernelOperator, Lattice, Mat, PhaseSource, Point, ProbeReport,
    Result,
};

use crate::config::{Command, GridKind, RunConfig};
use crate::output::Table;

/// Exponents of the weighted resolvent-decay probe.
const DECAY_ALPHA: f64 = 4.0;
const DECAY_ALPHA_PRIME: f64 = 3.5;

pub struct Outcome {
    pub reports: Vec<ProbeReport>,
    pub table: Option<Table>,
    /// Sweep plotted when an SVG path is configured.
    pub sweep: Option<FluxSweep>,
}

impl Outcome {
    fn reports(reports: Vec<ProbeReport>) -> Self {
        Outcome {
            reports,
            table: None,
            sweep: None,
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Butterfly => butterfly(cfg),
        Command::Edges => edges(cfg),
        Command::Gaptrack => gaptrack(cfg),
        Command::Verify => verify().map(Outcome::reports),
        Command::Heatcheck => identity_suite(&Quadrature::default()).map(Outcome::reports),
        Command::Resolventdecay => resolvent_decay(cfg),
        Command::Continuum => continuum(cfg),
    }
}

fn lattice(cfg: &RunConfig) -> Result<(Arc<Lattice>, PhaseSource)> {
    if cfg.amplitude > 0.0 {
        let l = magband::experiments::deformed_by_position(cfg.n_side, cfg.amplitude, cfg.seed)?;
        Ok((Arc::new(l), PhaseSource::Deformed))
    } else {
        Ok((
            Arc::new(build_square_lattice(cfg.n_side)?),
            PhaseSource::Standard,
        ))
    }
}

fn grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    match cfg.grid {
        GridKind::Linear => linear_grid(cfg.flux_min, cfg.flux_max, cfg.flux_steps),
        GridKind::Geometric => geometric_grid(cfg.b0, cfg.geometric_k_min, cfg.geometric_k_max),
    }
}

fn butterfly(cfg: &RunConfig) -> Result<Outcome> {
    let (lat, source) = lattice(cfg)?;
    let sweep = flux_sweep(
        &lat,
        &cfg.generator(),
        &grid(cfg)?,
        source,
        cfg.gap_min_width,
    )?;
    let mut table = Table::new(&["b", "eigen_index", "eigenvalue"]);
    for (b, row) in sweep.b_values.iter().zip(&sweep.rows) {
        for (i, e) in row.eigenvalues.iter().enumerate() {
            table.push(vec![b.to_string(), i.to_string(), e.to_string()]);
        }
    }
    Ok(Outcome {
        reports: Vec::new(),
        table: Some(table),
        sweep: Some(sweep),
    })
}

fn edges_table(sweep: &FluxSweep) -> Table {
    let max_gaps = sweep.rows.iter().map(|r| r.gaps.len()).max().unwrap_or(0);
    let mut header: Vec<String> = ["b", "e_minus", "e_plus", "gap_count"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 1..=max_gaps {
        header.push(format!("gap_{i}_lower"));
        header.push(format!("gap_{i}_upper"));
    }
    let mut table = Table::with_header(header);
    for (b, row) in sweep.b_values.iter().zip(&sweep.rows) {
        let mut fields = vec![
            b.to_string(),
            row.e_minus.to_string(),
            row.e_plus.to_string(),
            row.gaps.len().to_string(),
        ];
        for i in 0..max_gaps {
            match row.gaps.get(i) {
                Some(g) => fields.extend([g.lower.to_string(), g.upper.to_string()]),
                None => fields.extend([String::new(), String::new()]),
            }
        }
        table.push(fields);
    }
    table
}

fn edges(cfg: &RunConfig) -> Result<Outcome> {
    let (lat, source) = lattice(cfg)?;
    let gen = cfg.generator();
    let grid = grid(cfg)?;
    let min_width = match cfg.gap_min_width {
        Some(w) => w,
        None => {
            let base = magband::experiments::operator_at(&lat, &gen, Flux(grid[0]), source)?;
            magband::experiments::tracking_width(&eigvalsh(base.matrix.as_ref())?)
        }
    };
    let sweep = flux_sweep(&lat, &gen, &grid, source, Some(min_width))?;
    let b0 = match cfg.grid {
        GridKind::Geometric => cfg.b0,
        GridKind::Linear => cfg.flux_min,
    };
    let mut reports = vec![
        lipschitz_probe(&sweep, EdgeSelector::EPlus, b0, cfg.bound_factor)?
            .to_probe("lipschitz_e_plus"),
        lipschitz_probe(&sweep, EdgeSelector::EMinus, b0, cfg.bound_factor)?
            .to_probe("lipschitz_e_minus"),
    ];
    if sweep.len() >= 6 {
        reports.push(hausdorff_scaling_probe(&sweep, b0)?);
    }
    Ok(Outcome {
        reports,
        table: Some(edges_table(&sweep)),
        sweep: Some(sweep),
    })
}

fn gaptrack(cfg: &RunConfig) -> Result<Outcome> {
    let (lat, source) = lattice(cfg)?;
    let gen = cfg.generator();
    let opts = GapTrackOptions {
        min_width: cfg.gap_min_width,
        bound_factor: cfg.bound_factor,
        phase_source: source,
        quadrature_nodes: cfg.quadrature_nodes,
        quadrature_at: vec![cfg.flux_max],
    };
    let track = gap_track(
        &lat,
        &gen,
        cfg.flux_min,
        cfg.flux_max,
        cfg.flux_steps,
        &opts,
    )?;
    let mut reports = vec![
        track.cross_check_report(),
        track.lower.to_probe("lipschitz_gap_lower"),
        track.upper.to_probe("lipschitz_gap_upper"),
    ];
    if source == PhaseSource::Deformed {
        let mut r = ProbeReport::new("integer_box_equivalence")
            .input("amplitude", cfg.amplitude)
            .input("seed", cfg.seed);
        let mut worst: f64 = 0.0;
        for (&b, row) in track.sweep.b_values.iter().zip(&track.sweep.rows) {
            let other = eigvalsh(
                integer_counterpart(&lat, &gen, Flux(b), cfg.n_side)?
                    .matrix
                    .as_ref(),
            )?;
            for (x, y) in row.eigenvalues.iter().zip(&other) {
                worst = worst.max((x - y).abs());
            }
        }
        r.check_le("spectral_difference", worst, 1e-10);
        reports.push(r);
    }
    Ok(Outcome {
        reports,
        table: Some(edges_table(&track.sweep)),
        sweep: Some(track.sweep),
    })
}

fn resolvent_decay(cfg: &RunConfig) -> Result<Outcome> {
    let (lat, source) = lattice(cfg)?;
    let k = magband::experiments::operator_at(&lat, &cfg.generator(), Flux(cfg.b0), source)?;
    let top = *eigvalsh(k.matrix.as_ref())?.last().expect("nonempty");
    let z = distance_ladder(top, 1e-2, 10.0, 12)?;
    let r = weighted_decay_probe(&k, DECAY_ALPHA, DECAY_ALPHA_PRIME, &z, cfg.bound_factor)?;
    Ok(Outcome::reports(vec![r]))
}

fn continuum(cfg: &RunConfig) -> Result<Outcome> {
    let opts = ContinuumOptions {
        grid_n: cfg.grid_n,
        spacing: cfg.spacing,
        strength: cfg.strength,
        period: cfg.period,
        b0: cfg.b0,
        k_min: cfg.geometric_k_min,
        k_max: cfg.geometric_k_max,
        bound_factor: cfg.bound_factor,
    };
    let e = continuum_experiment(&opts)?;
    let mut isolated = ProbeReport::new("continuum_band")
        .input("grid_n", cfg.grid_n)
        .input("spacing", cfg.spacing)
        .input("band_count", e.band.count);
    isolated.measure("gap_width", e.band.gap_width);
    isolated.measure("band_width", e.band.band_width);
    isolated.check_that("isolated_throughout", e.isolated_throughout());
    let mut table = Table::new(&["b", "band_lower", "band_upper", "next", "gap_width"]);
    for (b, band) in e.b_values.iter().zip(&e.bands) {
        table.push(vec![
            b.to_string(),
            band.lower.to_string(),
            band.upper.to_string(),
            band.next.to_string(),
            band.gap_width.to_string(),
        ]);
    }
    Ok(Outcome {
        reports: vec![
            isolated,
            e.lower.to_probe("lipschitz_band_lower"),
            e.upper.to_probe("lipschitz_band_upper"),
        ],
        table: Some(table),
        sweep: None,
    })
}

fn harper(n: usize) -> Result<KernelOperator> {
    assemble(
        &Arc::new(build_square_lattice(n)?),
        &GeneratingKernel::HarperNN,
        Flux::ZERO,
    )
}

/// Deterministic points in `[-5, 5)²` from a Weyl sequence.
fn sample_points(count: usize) -> Vec<Point> {
    let (a1, a2) = (0.754_877_666_246_692_8, 0.569_840_290_998_053_2);
    (1..=count)
        .map(|i| {
            let i = i as f64;
            Point::new(10.0 * (i * a1).fract() - 5.0, 10.0 * (i * a2).fract() - 5.0)
        })
        .collect()
}

fn phase_identities() -> ProbeReport {
    let pts = sample_points(30_000);
    let mut anti: f64 = 0.0;
    let mut additive: f64 = 0.0;
    for t in pts.chunks_exact(3) {
        let (x, y, x2) = (t[0], t[1], t[2]);
        anti = anti.max((magnetic_phase(x, y) + magnetic_phase(y, x)).abs());
        let d = phase_additive_defect(x, y, x2) - magnetic_phase(x - y, y - x2);
        additive = additive.max(d.abs());
    }
    let mut r = ProbeReport::new("phase_identities").input("triples", pts.len() / 3);
    r.check_le("antisymmetry", anti, 1e-12);
    r.check_le("additive", additive, 1e-12);
    r
}

fn twist_hermiticity() -> Result<ProbeReport> {
    let mut r = ProbeReport::new("twist_hermiticity");
    let lat = Arc::new(build_square_lattice(10)?);
    let mut worst: f64 = 0.0;
    for gen in [
        GeneratingKernel::HarperNN,
        GeneratingKernel::ExpDecay { rate: 1.0 },
        GeneratingKernel::StaggeredMassHarper { mass: 1.0 },
    ] {
        let k = assemble(&lat, &gen, Flux::ZERO)?;
        for b in [0.1, 0.7, std::f64::consts::PI] {
            worst =
                worst.max(peierls_twist(&k, Flux(b), PhaseSource::Standard)?.hermiticity_defect());
        }
    }
    r.check_le("hermiticity_defect", worst, 1e-12);
    Ok(r)
}

fn harper_norms() -> Result<ProbeReport> {
    let k = harper(10)?;
    let mut r = ProbeReport::new("harper_norms").input("n_side", 10);
    let sqrt2 = std::f64::consts::SQRT_2;
    r.check_le(
        "schur_holmgren_error",
        (schur_holmgren_norm(&k) - 4.0).abs(),
        1e-12,
    );
    r.check_le(
        "c1_error",
        (c_alpha_norm(&k, 1.0) - 4.0 * sqrt2).abs(),
        1e-12,
    );
    r.check_le(
        "h1_error",
        (h_alpha_norm(&k, 1.0) - 2.0 * sqrt2).abs(),
        1e-12,
    );
    Ok(r)
}

fn embeddings() -> Result<Vec<ProbeReport>> {
    let lat = Arc::new(build_square_lattice(10)?);
    let n = lat.len();
    let id = KernelOperator::from_matrix(lat.clone(), Mat::<c64>::identity(n, n), "identity")?;
    let power = assemble(&lat, &GeneratingKernel::power_decay(), Flux::ZERO)?;
    Ok(vec![
        embedding_check(&id, 3.0, 1.5, 0.25)?,
        embedding_check(&harper(10)?, 3.0, 1.5, 0.25)?,
        embedding_check(&power, 4.5, 3.0, 0.25)?,
    ])
}

fn factorization() -> Result<ProbeReport> {
    let k = harper(20)?;
    let z = c64::new(5.0, 0.0);
    let g = resolvent(&k, z)?;
    let mut r = ProbeReport::new("factorization")
        .input("n_side", 20)
        .input("z", 5.0);
    for b in [0.05, 0.1, 0.2] {
        r.check_le(
            &format!("defect[b={b}]"),
            factorization_defect(&k, &g, Flux(b))?,
            1e-12,
        );
    }
    Ok(r)
}

fn projectors() -> Result<ProbeReport> {
    let lat = Arc::new(build_square_lattice(10)?);
    let gen = GeneratingKernel::StaggeredMassHarper { mass: 1.0 };
    let k = magband::experiments::operator_at(&lat, &gen, Flux(0.1), PhaseSource::Standard)?;
    let eig = eigh(k.matrix.as_ref())?;
    let top = eig.values[eig.values.len() - 1];
    let contour = ContourSpec::through(0.0, top + 1.0, 64)?;
    let p = projector_from_eigen(&eig, &contour)?;
    let scale = eig.values[0].abs().max(top);
    Ok(projector_report(
        &projector_defects(p.as_ref(), k.matrix.as_ref()),
        scale,
    ))
}

fn sup_comparison() -> Result<ProbeReport> {
    let lat = Arc::new(build_square_lattice(10)?);
    let gen = GeneratingKernel::HarperNN;
    let k0 = assemble(&lat, &gen, Flux::ZERO)?;
    let kb = peierls_twist(&k0, Flux(0.3), PhaseSource::Standard)?;
    sup_comparison_check(&kb, &k0)
}

/// Every exact identity and inequality that runs in seconds.
pub fn verify() -> Result<Vec<ProbeReport>> {
    let mut out = vec![phase_identities(), twist_hermiticity()?, harper_norms()?];
    out.extend(embeddings()?);
    out.push(factorization()?);
    out.push(conjugation_check(
        &harper(10)?,
        [0.3, -0.7],
        c64::new(5.0, 0.0),
    )?);
    out.push(projectors()?);
    out.push(sup_comparison()?);
    out.extend(identity_suite(&Quadrature::default())?);
    Ok(out)
}
