//! Generating kernels and dense Hermitian kernel operators.

use std::sync::Arc;

use faer::Mat;
use serde::Serialize;

use crate::c64;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Point};
use crate::magnetics::{peierls_twist, Flux, PhaseSource};

/// Distances within this tolerance of 1 count as nearest neighbours.
const NN_TOLERANCE: f64 = 1e-9;

/// Real symmetric kernel `K(x, x'; b)` generating a Harper-like family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GeneratingKernel {
    /// `K = 1` when `|x - x'| = 1`, else 0.
    HarperNN,
    /// `e^{-rate |x - x'|}` off the diagonal.
    ExpDecay { rate: f64 },
    /// `⟨x - x'⟩^{-exponent}` off the diagonal.
    PowerDecay { exponent: f64 },
    /// Nearest-neighbour hopping plus the checkerboard mass `mass·(-1)^{x1+x2}`.
    StaggeredMassHarper { mass: f64 },
    /// `base(x, x')·(1 + modulation_scale·b·e^{-|x - x'|})`.
    BDependent {
        base: Box<GeneratingKernel>,
        modulation_scale: f64,
    },
}

impl GeneratingKernel {
    pub fn power_decay() -> Self {
        GeneratingKernel::PowerDecay { exponent: 6.0 }
    }

    pub fn b_dependent(base: GeneratingKernel, modulation_scale: f64) -> Self {
        GeneratingKernel::BDependent {
            base: Box::new(base),
            modulation_scale,
        }
    }

    pub fn description(&self) -> String {
        match self {
            GeneratingKernel::HarperNN => "harper".into(),
            GeneratingKernel::ExpDecay { rate } => format!("expdecay(rate={rate})"),
            GeneratingKernel::PowerDecay { exponent } => format!("powerdecay(exponent={exponent})"),
            GeneratingKernel::StaggeredMassHarper { mass } => format!("staggered(mass={mass})"),
            GeneratingKernel::BDependent {
                base,
                modulation_scale,
            } => {
                format!(
                    "bdependent(base={}, scale={modulation_scale})",
                    base.description()
                )
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        match self {
            GeneratingKernel::ExpDecay { rate } if !(*rate > 0.0) => {
                bad("decay rate must be positive")
            }
            GeneratingKernel::PowerDecay { exponent } if !(*exponent > 0.0) => {
                bad("decay exponent must be positive")
            }
            GeneratingKernel::StaggeredMassHarper { mass } if !mass.is_finite() => {
                bad("mass must be finite")
            }
            GeneratingKernel::BDependent {
                base,
                modulation_scale,
            } => {
                if !modulation_scale.is_finite() {
                    return bad("modulation scale must be finite");
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    /// True when every kernel entry is nonnegative for `b >= 0`.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            GeneratingKernel::HarperNN
            | GeneratingKernel::ExpDecay { .. }
            | GeneratingKernel::PowerDecay { .. } => true,
            // the diagonal alternates between `mass` and `-mass`
            GeneratingKernel::StaggeredMassHarper { mass } => *mass == 0.0,
            GeneratingKernel::BDependent {
                base,
                modulation_scale,
            } => base.is_nonnegative() && *modulation_scale >= 0.0,
        }
    }

    pub fn eval(&self, x: Point, y: Point, b: f64) -> f64 {
        let r = (x - y).norm();
        let diagonal = r == 0.0;
        match self {
            GeneratingKernel::HarperNN => nearest_neighbour(r),
            GeneratingKernel::ExpDecay { rate } => {
                if diagonal {
                    0.0
                } else {
                    (-rate * r).exp()
                }
            }
            GeneratingKernel::PowerDecay { exponent } => {
                if diagonal {
                    0.0
                } else {
                    (1.0 + r * r).powf(-0.5 * exponent)
                }
            }
            GeneratingKernel::StaggeredMassHarper { mass } => {
                if diagonal {
                    let parity = (x.x1.round() + x.x2.round()).rem_euclid(2.0);
                    if parity == 0.0 {
                        *mass
                    } else {
                        -mass
                    }
                } else {
                    nearest_neighbour(r)
                }
            }
            GeneratingKernel::BDependent {
                base,
                modulation_scale,
            } => base.eval(x, y, b) * (1.0 + modulation_scale * b * (-r).exp()),
        }
    }
}

fn nearest_neighbour(r: f64) -> f64 {
    if (r - 1.0).abs() <= NN_TOLERANCE {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Cutoff {
    #[default]
    None,
    /// `χ(√b|x - x'|)K(x, x')`.
    Hat,
    /// `χ(√b|x - x'|)e^{ibφ(x, x')}K(x, x')`.
    Tilde,
}

/// Which coordinates a generating kernel is evaluated on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum KernelCoordinates {
    /// The lattice points themselves.
    #[default]
    Positions,
    /// The integer labels `F(γ)`: the kernel is transported through `F`.
    IntegerImage,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Provenance {
    Kernel {
        generator: GeneratingKernel,
        coordinates: KernelCoordinates,
    },
    Continuum {
        spacing: f64,
    },
    Custom(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Twist {
    pub b: Flux,
    pub source: PhaseSource,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorMeta {
    pub provenance: Provenance,
    pub b: Flux,
    pub cutoff: Cutoff,
    pub twist: Option<Twist>,
    pub comparison_t: Option<f64>,
}

/// Dense Hermitian matrix indexed by the points of a lattice.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    pub lattice: Arc<Lattice>,
    pub matrix: Mat<c64>,
    pub meta: OperatorMeta,
}

impl KernelOperator {
    /// Wraps an explicit matrix. The matrix must be Hermitian.
    pub fn from_matrix(lattice: Arc<Lattice>, matrix: Mat<c64>, description: &str) -> Result<Self> {
        if matrix.nrows() != lattice.len() || matrix.ncols() != lattice.len() {
            return Err(Error::DimensionMismatch {
                left: matrix.nrows(),
                right: lattice.len(),
            });
        }
        crate::spectral::check_hermitian(matrix.as_ref())?;
        Ok(KernelOperator {
            lattice,
            matrix,
            meta: OperatorMeta {
                provenance: Provenance::Custom(description.into()),
                b: Flux::ZERO,
                cutoff: Cutoff::None,
                twist: None,
                comparison_t: None,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_twisted(&self) -> bool {
        self.meta.twist.is_some_and(|t| t.b.value() != 0.0)
    }

    /// Entrywise map over `(i, j, value)`, keeping lattice and metadata.
    pub(crate) fn map_entries(&self, mut f: impl FnMut(usize, usize, c64) -> c64) -> Self {
        let n = self.dim();
        let matrix = Mat::from_fn(n, n, |i, j| f(i, j, self.matrix[(i, j)]));
        KernelOperator {
            lattice: self.lattice.clone(),
            matrix,
            meta: self.meta.clone(),
        }
    }

    /// `max |K_ij - K_ji^*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        crate::spectral::hermiticity_defect(self.matrix.as_ref())
    }
}

/// Dense matrix of `gen(x_i, x_j; b)` on the lattice points. No phase.
pub fn assemble(lattice: &Arc<Lattice>, gen: &GeneratingKernel, b: Flux) -> Result<KernelOperator> {
    assemble_with(lattice, gen, b, KernelCoordinates::Positions)
}

/// As [`assemble`], evaluating the kernel on the chosen coordinates.
pub fn assemble_with(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
    coordinates: KernelCoordinates,
) -> Result<KernelOperator> {
    gen.validate()?;
    let coords = match coordinates {
        KernelCoordinates::Positions => lattice.positions(),
        KernelCoordinates::IntegerImage => lattice.integer_positions()?,
    };
    let n = coords.len();
    let bv = b.value();
    let mut matrix = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = gen.eval(coords[i], coords[j], bv);
            if v != 0.0 {
                matrix[(i, j)] = c64::new(v, 0.0);
                matrix[(j, i)] = c64::new(v, 0.0);
            }
        }
    }
    Ok(KernelOperator {
        lattice: lattice.clone(),
        matrix,
        meta: OperatorMeta {
            provenance: Provenance::Kernel {
                generator: gen.clone(),
                coordinates,
            },
            b,
            cutoff: Cutoff::None,
            twist: None,
            comparison_t: None,
        },
    })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn require_untwisted(k: &KernelOperator) -> Result<()> {
    if k.is_twisted() {
        Err(Error::InvalidParameter(
            "cut-off expects an untwisted kernel".into(),
        ))
    } else {
        Ok(())
    }
}

/// `χ(√b|x - x'|)` with `χ` the indicator of the closed interval `[0, 1]`.
fn inside_cutoff(b: f64, x: Point, y: Point) -> bool {
    b.sqrt() * (x - y).norm() <= 1.0
}

/// `K̂_b`: zeroes every entry with `√b|x - x'| > 1`.
pub fn apply_cutoff_hat(k: &KernelOperator, b: Flux) -> Result<KernelOperator> {
    let bv = b.value();
    positive("b", bv)?;
    require_untwisted(k)?;
    let pos = k.lattice.positions();
    let zero = c64::new(0.0, 0.0);
    let mut out = k.map_entries(|i, j, v| {
        if inside_cutoff(bv, pos[i], pos[j]) {
            v
        } else {
            zero
        }
    });
    out.meta.cutoff = Cutoff::Hat;
    Ok(out)
}

/// `K̃_b`: the hat cut-off followed by the Peierls twist.
pub fn apply_cutoff_tilde(
    k: &KernelOperator,
    b: Flux,
    source: PhaseSource,
) -> Result<KernelOperator> {
    let hat = apply_cutoff_hat(k, b)?;
    let mut out = peierls_twist(&hat, b, source)?;
    out.meta.cutoff = Cutoff::Tilde;
    Ok(out)
}

/// Growth factor `exp[b r² / (4 tanh 2bt)]` of the comparison operator.
pub fn comparison_growth(b: f64, t: f64, r: f64) -> f64 {
    (b * r * r / (4.0 * (2.0 * b * t).tanh())).exp()
}

/// `A_b(t)`: `K̂_b` multiplied entrywise by `exp[b|x - x'|² / (4 tanh 2bt)]`.
pub fn comparison_operator(k: &KernelOperator, b: Flux, t: f64) -> Result<KernelOperator> {
    let bv = b.value();
    positive("b", bv)?;
    positive("t", t)?;
    let hat = apply_cutoff_hat(k, b)?;
    let pos = k.lattice.positions();
    let mut out = hat.map_entries(|i, j, v| v * comparison_growth(bv, t, (pos[i] - pos[j]).norm()));
    out.meta.comparison_t = Some(t);
    Ok(out)
}

/// `K_b` with kernel `e^{ibφ(x, x')}K(x, x'; b)` for a `b`-dependent generator.
pub fn assemble_b_family(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
) -> Result<KernelOperator> {
    if !matches!(gen, GeneratingKernel::BDependent { .. }) {
        return Err(Error::InvalidParameter(
            "assemble_b_family needs a BDependent generator".into(),
        ));
    }
    let k = assemble(lattice, gen, b)?;
    peierls_twist(&k, b, PhaseSource::Standard)
}

/// Assembles `gen` at `b` and twists it, for any generator.
///
/// With [`PhaseSource::Deformed`] the kernel is evaluated on the integer
/// labels and the phase on the deformed points.
pub fn assemble_twisted(
    lattice: &Arc<Lattice>,
    gen: &GeneratingKernel,
    b: Flux,
    source: PhaseSource,
) -> Result<KernelOperator> {
    let coordinates = match source {
        PhaseSource::Standard => KernelCoordinates::Positions,
        PhaseSource::Deformed => KernelCoordinates::IntegerImage,
    };
    let k = assemble_with(lattice, gen, b, coordinates)?;
    peierls_twist(&k, b, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_square_lattice;
    use crate::norms::{c_alpha_norm, schur_holmgren_matrix, schur_holmgren_norm};

    fn square(n: usize) -> Arc<Lattice> {
        Arc::new(build_square_lattice(n).unwrap())
    }

    #[test]
    fn harper_two_by_two() {
        let k = assemble(&square(2), &GeneratingKernel::HarperNN, Flux::ZERO).unwrap();
        // (0,0)-(1,0), (0,0)-(0,1), (1,0)-(1,1), (0,1)-(1,1)
        let expected = [
            [0.0, 1.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 1.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k.matrix[(i, j)], c64::new(expected[i][j], 0.0));
            }
        }
    }

    #[test]
    fn steep_exponential_is_nearly_diagonal() {
        let l = square(4);
        let k = assemble(&l, &GeneratingKernel::ExpDecay { rate: 50.0 }, Flux::ZERO).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                if (l.point(i) - l.point(j)).norm() > 1.0 + 1e-12 {
                    assert!(k.matrix[(i, j)].norm() < 1e-20);
                }
            }
        }
    }

    #[test]
    fn staggered_checkerboard() {
        let l = square(5);
        let k = assemble(
            &l,
            &GeneratingKernel::StaggeredMassHarper { mass: 1.0 },
            Flux::ZERO,
        )
        .unwrap();
        for i in 0..25 {
            let p = l.point(i);
            let sign = if (p.x1 + p.x2) as i64 % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            assert_eq!(k.matrix[(i, i)].re, sign);
        }
    }

    #[test]
    fn harper_schur_holmgren_is_four() {
        for n in [3, 7] {
            let k = assemble(&square(n), &GeneratingKernel::HarperNN, Flux::ZERO).unwrap();
            assert_eq!(schur_holmgren_norm(&k), 4.0);
        }
    }

    #[test]
    fn hat_cutoff_cases() {
        let l = square(6);
        let diam = l.diameter();
        let k = assemble(&l, &GeneratingKernel::power_decay(), Flux::ZERO).unwrap();
        let tiny = 0.99 / (diam * diam);
        assert_eq!(apply_cutoff_hat(&k, Flux(tiny)).unwrap().matrix, k.matrix);
        let h = assemble(&l, &GeneratingKernel::HarperNN, Flux::ZERO).unwrap();
        assert_eq!(apply_cutoff_hat(&h, Flux(1.0)).unwrap().matrix, h.matrix);
        assert!(apply_cutoff_hat(&h, Flux(0.0)).is_err());
        assert!(apply_cutoff_hat(&h, Flux(-1.0)).is_err());
    }

    #[test]
    fn cutoff_error_bounded_by_c2_norm() {
        let l = square(8);
        let k = assemble(&l, &GeneratingKernel::power_decay(), Flux::ZERO).unwrap();
        let c2 = c_alpha_norm(&k, 2.0);
        for b in [0.02, 0.1, 0.3, 0.7] {
            let hat = apply_cutoff_hat(&k, Flux(b)).unwrap();
            let diff = &k.matrix - &hat.matrix;
            assert!(schur_holmgren_matrix(diff.as_ref()) <= b * c2);
            let kb = peierls_twist(&k, Flux(b), PhaseSource::Standard).unwrap();
            let tilde = apply_cutoff_tilde(&k, Flux(b), PhaseSource::Standard).unwrap();
            let diff = &kb.matrix - &tilde.matrix;
            assert!(schur_holmgren_matrix(diff.as_ref()) <= b * c2);
            for i in 0..64 {
                for j in 0..64 {
                    assert!(
                        (tilde.matrix[(i, j)].norm() - hat.matrix[(i, j)].norm()).abs() < 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn tilde_tends_to_kernel() {
        let l = square(5);
        let k = assemble(&l, &GeneratingKernel::ExpDecay { rate: 1.0 }, Flux::ZERO).unwrap();
        let tilde = apply_cutoff_tilde(&k, Flux(1e-6), PhaseSource::Standard).unwrap();
        let diff = &tilde.matrix - &k.matrix;
        assert!(diff.norm_max() < 1e-4);
    }

    #[test]
    fn cutoffs_are_idempotent() {
        let l = square(6);
        let k = assemble(&l, &GeneratingKernel::power_decay(), Flux::ZERO).unwrap();
        let once = apply_cutoff_hat(&k, Flux(0.1)).unwrap();
        let twice = apply_cutoff_hat(&once, Flux(0.1)).unwrap();
        assert_eq!(once.matrix, twice.matrix);
    }

    #[test]
    fn comparison_growth_on_support() {
        let l = square(10);
        let k = assemble(&l, &GeneratingKernel::power_decay(), Flux::ZERO).unwrap();
        for b in [0.05, 0.2, 0.9] {
            let hat = apply_cutoff_hat(&k, Flux(b)).unwrap();
            let a = comparison_operator(&k, Flux(b), 1.0 / b).unwrap();
            assert_eq!(a.meta.comparison_t, Some(1.0 / b));
            for i in 0..100 {
                for j in 0..100 {
                    let (av, hv) = (a.matrix[(i, j)].re, hat.matrix[(i, j)].re);
                    assert!(av >= hv);
                    if hv != 0.0 {
                        assert!(av / hv <= 1.30);
                    }
                }
            }
            assert_eq!(a.hermiticity_defect(), 0.0);
        }
        assert!(comparison_operator(&k, Flux(0.1), 0.0).is_err());
    }

    #[test]
    fn comparison_difference_linear_in_b() {
        // |A - K̂| <= b r² |K| e^{1/(4 tanh 2)} / (4 tanh 2) on the cut-off support
        let l = square(10);
        let k = assemble(&l, &GeneratingKernel::power_decay(), Flux::ZERO).unwrap();
        let pos = l.positions();
        let weighted = k.map_entries(|i, j, v| v * (pos[i] - pos[j]).norm_sq());
        let w = schur_holmgren_norm(&weighted);
        let t2 = 2f64.tanh();
        let constant = (0.25 / t2).exp() / (4.0 * t2);
        for b in [0.01, 0.05, 0.25] {
            let hat = apply_cutoff_hat(&k, Flux(b)).unwrap();
            let a = comparison_operator(&k, Flux(b), 1.0 / b).unwrap();
            let diff = &a.matrix - &hat.matrix;
            assert!(schur_holmgren_matrix(diff.as_ref()) <= constant * b * w);
        }
    }

    #[test]
    fn b_family() {
        let l = square(6);
        let base = GeneratingKernel::HarperNN;
        let gen = GeneratingKernel::b_dependent(base.clone(), 0.5);
        let at0 = assemble_b_family(&l, &gen, Flux::ZERO).unwrap();
        let plain = assemble(&l, &base, Flux::ZERO).unwrap();
        assert_eq!(at0.matrix, plain.matrix);
        let base_c0 = schur_holmgren_norm(&plain);
        for b in [0.01, 0.2, -0.6, 1.0] {
            let kb = assemble(&l, &gen, Flux(b)).unwrap();
            let k0 = assemble(&l, &gen, Flux::ZERO).unwrap();
            let diff = &kb.matrix - &k0.matrix;
            assert!(schur_holmgren_matrix(diff.as_ref()) <= 0.5 * base_c0 * f64::abs(b) + 1e-14);
            let fam = assemble_b_family(&l, &gen, Flux(b)).unwrap();
            assert_eq!(fam.hermiticity_defect(), 0.0);
        }
        assert!(assemble_b_family(&l, &base, Flux(0.1)).is_err());
    }
}
