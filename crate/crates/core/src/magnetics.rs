//! The magnetic phase `φ(x, x') = -(x1 x2' - x2 x1')/2` and Peierls twisting.
//!
//! Sign convention: the hop from `p` to `q` carries the factor
//! `e^{ibφ(q, p)}` (kernel entry `K(q, p)` acts on `ψ(p)`). Traversing a unit
//! square counter-clockwise accumulates `b·φ` summing to `+b`, so the flux per
//! unit plaquette is `b` and the Hofstadter parameter is `b/2π`.

use serde::Serialize;

use crate::c64;
use crate::error::{Error, Result};
use crate::kernel::{KernelOperator, Twist};
use crate::lattice::{Lattice, LatticePoint, Point};

/// Intensity `b` of the constant magnetic field.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize)]
pub struct Flux(pub f64);

impl Flux {
    pub const ZERO: Flux = Flux(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Flux {
    fn from(b: f64) -> Self {
        Flux(b)
    }
}

/// Where the phase of a twisted kernel comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum PhaseSource {
    /// `φ` evaluated at the lattice's own coordinates.
    #[default]
    Standard,
    /// `φ̃(x, x') = φ(F⁻¹(x), F⁻¹(x'))`: the operator is indexed by the
    /// integer labels `F(γ)` while the phase sees the deformed points.
    Deformed,
}

pub fn magnetic_phase(x: Point, y: Point) -> f64 {
    -0.5 * (x.x1 * y.x2 - x.x2 * y.x1)
}

/// `φ` between two lattice points.
pub fn lattice_phase(x: &LatticePoint, y: &LatticePoint) -> f64 {
    magnetic_phase(x.position(), y.position())
}

/// `φ(x,y) + φ(y,x2) - φ(x,x2)`, which equals `φ(x-y, y-x2)`.
pub fn phase_additive_defect(x: Point, y: Point, x2: Point) -> f64 {
    magnetic_phase(x, y) + magnetic_phase(y, x2) - magnetic_phase(x, x2)
}

/// `φ̃` between the lattice points with indices `i` and `j`.
///
/// On a lattice built by deformation the point at index `i` is exactly
/// `F⁻¹` of the integer label at index `i`, so `φ̃` pairs the deformed
/// coordinates.
pub fn deformed_phase(lattice: &Lattice, i: usize, j: usize) -> Result<f64> {
    if lattice.integer_image().is_none() {
        return Err(Error::MissingIntegerImage);
    }
    let n = lattice.len();
    if i >= n || j >= n {
        return Err(Error::InvalidParameter(format!(
            "index out of range for {n} points"
        )));
    }
    Ok(magnetic_phase(lattice.point(i), lattice.point(j)))
}

/// Phase matrix `φ(x_i, x_j)` for the given source.
pub(crate) fn phase_table(lattice: &Lattice, source: PhaseSource) -> Result<Vec<Point>> {
    match source {
        PhaseSource::Standard => Ok(lattice.positions()),
        PhaseSource::Deformed => {
            if lattice.integer_image().is_none() {
                return Err(Error::MissingIntegerImage);
            }
            Ok(lattice.positions())
        }
    }
}

pub(crate) fn unimodular(theta: f64) -> c64 {
    let (s, c) = theta.sin_cos();
    c64::new(c, s)
}

/// Multiplies `K(x, x')` entrywise by `e^{ibφ(x, x')}`.
pub fn peierls_twist(k: &KernelOperator, b: Flux, source: PhaseSource) -> Result<KernelOperator> {
    let coords = phase_table(&k.lattice, source)?;
    let bv = b.value();
    let mut out = k.clone();
    if bv != 0.0 {
        let n = out.dim();
        for j in 0..n {
            for i in 0..n {
                let entry = out.matrix[(i, j)];
                if entry != c64::new(0.0, 0.0) {
                    out.matrix[(i, j)] =
                        entry * unimodular(bv * magnetic_phase(coords[i], coords[j]));
                }
            }
        }
    }
    out.meta.b = b;
    out.meta.twist = Some(Twist { b, source });
    Ok(out)
}

/// Sum of `b·φ(to, from)` around the unit square with lower-left `corner`,
/// traversed counter-clockwise. Equals `+b` for every corner.
pub fn plaquette_circulation(b: Flux, corner: Point) -> f64 {
    let c = [
        corner,
        corner + Point::new(1.0, 0.0),
        corner + Point::new(1.0, 1.0),
        corner + Point::new(0.0, 1.0),
    ];
    (0..4)
        .map(|k| b.value() * magnetic_phase(c[(k + 1) % 4], c[k]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{assemble, GeneratingKernel};
    use crate::lattice::{build_deformed_lattice, build_square_lattice};
    use proptest::prelude::*;

    #[test]
    fn phase_values() {
        let p = Point::new(2.0, 3.0);
        assert_eq!(magnetic_phase(p, p), 0.0);
        assert_eq!(
            magnetic_phase(Point::new(1.0, 0.0), Point::new(0.0, 1.0)),
            -0.5
        );
        assert_eq!(
            magnetic_phase(Point::new(2.0, 3.0), Point::new(5.0, 7.0)),
            0.5
        );
    }

    #[test]
    fn defect_examples() {
        let x = Point::new(1.0, 0.0);
        let y = Point::ORIGIN;
        let x2 = Point::new(0.0, 1.0);
        // brute force both sides of the identity
        let lhs = magnetic_phase(x, y) + magnetic_phase(y, x2);
        let rhs = magnetic_phase(x, x2) + magnetic_phase(x - y, y - x2);
        assert_eq!(lhs, rhs);
        assert_eq!(phase_additive_defect(x, y, x2), 0.5);
        assert_eq!(phase_additive_defect(x, x, x2), 0.0);
        let (a, b, c) = (
            Point::new(1.0, 2.0),
            Point::new(2.0, 4.0),
            Point::new(-3.0, -6.0),
        );
        assert_eq!(phase_additive_defect(a, b, c), 0.0);
    }

    proptest! {
        #[test]
        fn antisymmetry_and_identity(
            a in prop::array::uniform6(-50.0f64..50.0)
        ) {
            let x = Point::new(a[0], a[1]);
            let y = Point::new(a[2], a[3]);
            let z = Point::new(a[4], a[5]);
            prop_assert_eq!(magnetic_phase(x, y) + magnetic_phase(y, x), 0.0);
            let d = phase_additive_defect(x, y, z);
            let scale = 1.0 + x.norm_sq() + y.norm_sq() + z.norm_sq();
            prop_assert!((d - magnetic_phase(x - y, y - z)).abs() <= 1e-12 * scale);
            prop_assert!(d.abs() <= 0.5 * (x - y).norm() * (y - z).norm() + 1e-12 * scale);
        }
    }

    #[test]
    fn deformed_phase_properties() {
        let sq = build_square_lattice(4).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(
                    deformed_phase(&sq, i, j).unwrap(),
                    magnetic_phase(sq.point(i), sq.point(j))
                );
            }
        }
        let l = build_deformed_lattice(6, 0.3, 4).unwrap();
        for i in 0..36 {
            for j in 0..36 {
                assert_eq!(
                    deformed_phase(&l, i, j).unwrap(),
                    -deformed_phase(&l, j, i).unwrap()
                );
            }
        }
        for i in 0..36 {
            for j in 0..36 {
                for k in (0..36).step_by(5) {
                    let (u, v, w) = (l.point(i), l.point(j), l.point(k));
                    let d = deformed_phase(&l, i, j).unwrap() + deformed_phase(&l, j, k).unwrap()
                        - deformed_phase(&l, i, k).unwrap();
                    assert!(d.abs() <= 0.5 * (u - v).norm() * (v - w).norm() + 1e-12);
                }
            }
        }
        let bare = Lattice::from_positions(vec![Point::ORIGIN, Point::new(1.0, 0.0)]).unwrap();
        assert!(matches!(
            deformed_phase(&bare, 0, 1),
            Err(Error::MissingIntegerImage)
        ));
    }

    #[test]
    fn twist_properties() {
        let l = std::sync::Arc::new(build_square_lattice(5).unwrap());
        let k = assemble(
            &l,
            &GeneratingKernel::StaggeredMassHarper { mass: 0.7 },
            Flux::ZERO,
        )
        .unwrap();
        let same = peierls_twist(&k, Flux::ZERO, PhaseSource::Standard).unwrap();
        assert_eq!(same.matrix, k.matrix);
        for b in [0.3, -1.1, 2.0] {
            let kb = peierls_twist(&k, Flux(b), PhaseSource::Standard).unwrap();
            for i in 0..25 {
                assert_eq!(kb.matrix[(i, i)], k.matrix[(i, i)]);
                for j in 0..25 {
                    assert!((kb.matrix[(i, j)].norm() - k.matrix[(i, j)].norm()).abs() < 1e-15);
                    // exact Hermiticity: φ is exactly antisymmetric in floating point
                    assert_eq!(kb.matrix[(i, j)], kb.matrix[(j, i)].conj());
                }
            }
        }
    }

    #[test]
    fn plaquette_flux_is_b() {
        assert_eq!(plaquette_circulation(Flux::ZERO, Point::ORIGIN), 0.0);
        assert_eq!(plaquette_circulation(Flux(1.0), Point::ORIGIN), 1.0);
        assert_eq!(plaquette_circulation(Flux(1.0), Point::new(5.0, 7.0)), 1.0);
        for (x, y) in [(-3.0, 2.0), (10.0, -4.0)] {
            let c = plaquette_circulation(Flux(0.37), Point::new(x, y));
            assert!((c - 0.37).abs() < 1e-12);
        }
    }
}
