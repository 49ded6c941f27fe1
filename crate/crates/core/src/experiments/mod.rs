//! Flux sweeps and the edge-regularity experiments built on them.

mod checks;
mod continuum;
mod gaps;
mod hausdorff;
mod irregular;
mod lipschitz;
mod sweep;

pub use checks::{
    b_family_bound_check, comparison_constant, comparison_monotonicity_check,
    comparison_scaling_check, cutoff_reduction_check, edge_comparison_check,
};
pub use continuum::{
    continuum_experiment, continuum_grid, continuum_model, locate_lowest_band, periodic_potential,
    sample_potential, ContinuumExperiment, ContinuumOptions, LowestBand,
};
pub use gaps::{
    gap_track, tracking_width, EdgeCrossCheck, GapTrack, GapTrackOptions, TRACKING_WIDTH_FRACTION,
};
pub use hausdorff::hausdorff_scaling_probe;
pub use irregular::{
    deformed_by_position, integer_counterpart, irregular_lattice_experiment, IrregularExperiment,
};
pub use lipschitz::{
    edge_series, lipschitz_from_points, lipschitz_probe, EdgeSelector, EdgeSeries, LipschitzReport,
    LipschitzSample, Verdict, DEFAULT_BOUND_FACTOR,
};
pub use sweep::{
    flux_sweep, flux_sweep_with, geometric_grid, linear_grid, operator_at, symmetry_defect,
    FluxSweep, SweepModel,
};
