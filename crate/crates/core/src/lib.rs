//! Magnetic Harper-like operators on finite planar lattices.
//!
//! The crate builds dense Hermitian kernel operators on box truncations of
//! `Z²` (and on injectively deformed copies of it), attaches Peierls phases
//! `e^{ibφ(x,x')}` for a constant magnetic field `b`, and measures how band
//! and gap edges move with `b`. Alongside the operators live the weighted
//! kernel norms, resolvent machinery, Riesz projectors and the continuum
//! Mehler heat kernel needed to check the associated inequalities
//! numerically.
//!
//! Module map:
//!
//! * [`lattice`]: box and deformed lattices.
//! * [`magnetics`]: the phase `φ`, its identities and the Peierls twist.
//! * [`kernel`]: generating kernels, assembly, cut-offs, `A_b(t)`.
//! * [`norms`]: Schur–Holmgren, `C^α`, `H^α` and operator norms.
//! * [`spectral`]: eigensolves, gaps, Hausdorff distance, projectors.
//! * [`resolvent`]: resolvents, the `S_b`/`T_b` factorization and decay probes.
//! * [`heatkernel`]: Mehler kernel identities by panel quadrature.
//! * [`experiments`]: flux sweeps, Lipschitz probes and the continuum model.

pub mod error;
pub mod experiments;
pub mod heatkernel;
pub mod kernel;
pub mod lattice;
pub mod magnetics;
pub mod norms;
pub mod probe;
pub mod resolvent;
pub mod spectral;

mod fit;

pub use error::{Error, Result};
pub use faer::c64;
pub use faer::Mat;
pub use kernel::{GeneratingKernel, KernelOperator};
pub use lattice::{Lattice, LatticeKind, LatticePoint, Point};
pub use magnetics::{Flux, PhaseSource};
pub use probe::ProbeReport;
pub use spectral::SpectralSummary;
