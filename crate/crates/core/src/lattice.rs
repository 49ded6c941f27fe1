//! Finite planar lattices.
//!
//! Every lattice is enumerated row-major over an integer box (`x1` varies
//! fastest) and all matrices built on it inherit that order. Boundaries are
//! plain restriction: no periodic wrapping.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Point { x1, x2 }
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn norm_sq(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// Japanese bracket `⟨v⟩ = (1 + |v|²)^{1/2}`.
    pub fn bracket(self) -> f64 {
        (1.0 + self.norm_sq()).sqrt()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point::new(self * rhs.x1, self * rhs.x2)
    }
}

impl From<[i64; 2]> for Point {
    fn from(v: [i64; 2]) -> Self {
        Point::new(v[0] as f64, v[1] as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticePoint {
    pub x1: f64,
    pub x2: f64,
    pub index: usize,
}

impl LatticePoint {
    pub fn position(&self) -> Point {
        Point::new(self.x1, self.x2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LatticeKind {
    /// Integer box; points coincide with their integer image.
    SquareBox,
    /// Integer box displaced pointwise by less than 1/2.
    Deformed,
    /// Integer box scaled by a mesh width (finite-difference grids).
    ScaledGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lattice {
    points: Vec<LatticePoint>,
    integer_image: Option<Vec<[i64; 2]>>,
    kind: LatticeKind,
}

impl Lattice {
    fn from_parts(
        positions: Vec<Point>,
        integer_image: Option<Vec<[i64; 2]>>,
        kind: LatticeKind,
    ) -> Self {
        let points = positions
            .into_iter()
            .enumerate()
            .map(|(index, p)| LatticePoint {
                x1: p.x1,
                x2: p.x2,
                index,
            })
            .collect();
        Lattice {
            points,
            integer_image,
            kind,
        }
    }

    /// A finite point set with no integer labelling.
    ///
    /// Such lattices support every operation except the ones that need
    /// `F(γ)` (deformed phases, transported kernels).
    pub fn from_positions(positions: Vec<Point>) -> Result<Self> {
        let lattice = Lattice::from_parts(positions, None, LatticeKind::Deformed);
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i].position()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.points.iter().map(LatticePoint::position).collect()
    }

    /// The values `F(γ)` in enumeration order, if present.
    pub fn integer_image(&self) -> Option<&[[i64; 2]]> {
        self.integer_image.as_deref()
    }

    pub fn integer_positions(&self) -> Result<Vec<Point>> {
        let image = self.integer_image().ok_or(Error::MissingIntegerImage)?;
        Ok(image.iter().map(|&v| Point::from(v)).collect())
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let pos = self.positions();
        let mut d: f64 = 0.0;
        for (i, p) in pos.iter().enumerate() {
            for q in &pos[i + 1..] {
                d = d.max((*p - *q).norm());
            }
        }
        d
    }

    /// The same point set enumerated in a different order.
    ///
    /// `order[k]` is the old index of the point that becomes index `k`.
    pub fn relabeled(&self, order: &[usize]) -> Result<Lattice> {
        let n = self.len();
        let mut seen = vec![false; n];
        if order.len() != n
            || order
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::InvalidParameter(
                "relabeling is not a permutation".into(),
            ));
        }
        let positions = order.iter().map(|&i| self.point(i)).collect();
        let image = self
            .integer_image
            .as_ref()
            .map(|img| order.iter().map(|&i| img[i]).collect());
        Ok(Lattice::from_parts(positions, image, self.kind))
    }

    /// Index of the point whose integer image is `label`, i.e. `F^{-1}`.
    pub fn inverse_image(&self) -> Result<HashMap<[i64; 2], usize>> {
        let image = self.integer_image().ok_or(Error::MissingIntegerImage)?;
        Ok(image.iter().enumerate().map(|(i, &v)| (v, i)).collect())
    }

    /// Checks distinctness, injectivity of `F` and `|F(γ) - γ| < 1/2`.
    pub fn validate(&self) -> Result<()> {
        let pos = self.positions();
        for (i, p) in pos.iter().enumerate() {
            if pos[i + 1..].iter().any(|q| q == p) {
                return Err(Error::InvalidParameter(format!("duplicate point {p:?}")));
            }
        }
        if let Some(image) = &self.integer_image {
            let mut labels = image.clone();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() != image.len() {
                return Err(Error::InvalidParameter(
                    "integer image is not injective".into(),
                ));
            }
            if self.kind != LatticeKind::ScaledGrid {
                for (p, &v) in pos.iter().zip(image) {
                    if (Point::from(v) - *p).norm() >= 0.5 {
                        return Err(Error::InvalidParameter(format!(
                            "|F(γ) - γ| >= 1/2 at {p:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The `n_side × n_side` box `{0, …, n_side-1}²`.
pub fn build_square_lattice(n_side: usize) -> Result<Lattice> {
    build_box_lattice(n_side, n_side)
}

/// Rectangular integer box with `n1` columns and `n2` rows.
pub fn build_box_lattice(n1: usize, n2: usize) -> Result<Lattice> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidParameter("box sides must be positive".into()));
    }
    let image = box_labels(n1, n2);
    let positions = image.iter().map(|&v| Point::from(v)).collect();
    Ok(Lattice::from_parts(
        positions,
        Some(image),
        LatticeKind::SquareBox,
    ))
}

/// Integer box scaled by `spacing` and shifted by `origin`.
pub fn build_grid_lattice(n_side: usize, spacing: f64, origin: Point) -> Result<Lattice> {
    if n_side == 0 || !(spacing > 0.0) {
        return Err(Error::InvalidParameter(
            "grid needs n_side >= 1 and spacing > 0".into(),
        ));
    }
    let image = box_labels(n_side, n_side);
    let positions = image
        .iter()
        .map(|&v| origin + spacing * Point::from(v))
        .collect();
    Ok(Lattice::from_parts(
        positions,
        Some(image),
        LatticeKind::ScaledGrid,
    ))
}

/// Box lattice with every point displaced by a seeded pseudo-random offset
/// of norm at most `amplitude`.
///
/// Offsets come from a ChaCha stream keyed by `(seed, γ)`, so each point's
/// displacement is independent of the enumeration and of the box size.
/// The integer image keeps the undisplaced labels.
pub fn build_deformed_lattice(n_side: usize, amplitude: f64, seed: u64) -> Result<Lattice> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!(
            "deformation amplitude {amplitude} outside [0, 1/2)"
        )));
    }
    if amplitude == 0.0 {
        return build_square_lattice(n_side);
    }
    if n_side == 0 {
        return Err(Error::InvalidParameter("box sides must be positive".into()));
    }
    let image = box_labels(n_side, n_side);
    let positions = image
        .iter()
        .map(|&v| Point::from(v) + offset(seed, v, amplitude))
        .collect();
    let lattice = Lattice::from_parts(positions, Some(image), LatticeKind::Deformed);
    lattice.validate()?;
    Ok(lattice)
}

fn box_labels(n1: usize, n2: usize) -> Vec<[i64; 2]> {
    (0..n2)
        .flat_map(|j| (0..n1).map(move |i| [i as i64, j as i64]))
        .collect()
}

fn offset(seed: u64, label: [i64; 2], amplitude: f64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = ((label[0] as u32 as u64) << 32) | (label[1] as u32 as u64);
    rng.set_stream(key);
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    // uniform in the disk of radius `amplitude`
    let r = amplitude * u.sqrt();
    let theta = 2.0 * PI * v;
    Point::new(r * theta.cos(), r * theta.sin())
}
