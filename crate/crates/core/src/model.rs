//! Problem and solution representations.
//!
//! The container is centered on the origin. A strip has a fixed width `W`
//! along the y axis and an open length `L` along x; a disc has an open radius
//! `R`. Circles are stored in descending radius order; the original input
//! position of every circle is retained so results can be reported in input
//! order.

use rand::Rng;

use crate::error::{Error, Result};
use crate::penalty;

/// A point (or center) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn distance(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// A circle placed at a center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }
}

/// The container shape. Its open dimension (strip length or disc radius)
/// lives on the [`Layout`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContainerSpec {
    /// Strip of fixed width along y, open length along x.
    Strip { width: f64 },
    /// Circular container with open radius.
    Disc,
}

impl ContainerSpec {
    pub fn strip(width: f64) -> Self {
        ContainerSpec::Strip { width }
    }

    pub fn is_disc(&self) -> bool {
        matches!(self, ContainerSpec::Disc)
    }
}

/// Immutable problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    radii: Vec<f64>,
    /// `order[k]` is the input position of the circle at sorted position `k`.
    order: Vec<usize>,
    container: ContainerSpec,
}

impl Instance {
    /// Validates the radii, sorts them in descending order (stable for ties)
    /// and checks that a strip is wide enough for the largest circle.
    pub fn new(radii: &[f64], container: ContainerSpec) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::EmptyInstance);
        }
        for (index, &radius) in radii.iter().enumerate() {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(Error::InvalidRadius { index, radius });
            }
        }
        if let ContainerSpec::Strip { width } = container {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::InvalidWidth(width));
            }
            let diameter = 2.0 * radii.iter().cloned().fold(0.0, f64::max);
            if width < diameter {
                return Err(Error::InfeasibleByWidth { width, diameter });
            }
        }

        let mut order: Vec<usize> = (0..radii.len()).collect();
        // sort_by is stable, so equal radii keep their input order
        order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]));
        let sorted = order.iter().map(|&i| radii[i]).collect();
        Ok(Self {
            radii: sorted,
            order,
            container,
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Radii in descending order.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.radii[k]
    }

    pub fn container(&self) -> ContainerSpec {
        self.container
    }

    /// Input position of the circle at sorted position `k`.
    pub fn input_index(&self, k: usize) -> usize {
        self.order[k]
    }

    /// Radii in the order they were supplied.
    pub fn input_radii(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = self.radii[k];
        }
        out
    }

    pub fn max_radius(&self) -> f64 {
        self.radii[0]
    }

    /// Reorders sorted-order centers into input order.
    pub fn to_input_order(&self, centers: &[Point]) -> Vec<Point> {
        let mut out = vec![Point::ORIGIN; centers.len()];
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = centers[k];
        }
        out
    }

    /// Reorders input-order centers into sorted order.
    pub fn from_input_order(&self, centers: &[Point]) -> Vec<Point> {
        self.order.iter().map(|&i| centers[i]).collect()
    }

    pub fn with_container(&self, container: ContainerSpec) -> Result<Self> {
        Instance::new(&self.input_radii(), container)
    }
}

/// Convenience wrapper around [`Instance::new`].
pub fn make_instance(radii: &[f64], container: ContainerSpec) -> Result<Instance> {
    Instance::new(radii, container)
}

/// A candidate solution: one center per circle (sorted order) plus the open
/// dimension (strip length or disc radius).
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub centers: Vec<Point>,
    pub dimension: f64,
}

impl Layout {
    pub fn new(centers: Vec<Point>, dimension: f64) -> Self {
        Self { centers, dimension }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn with_dimension(&self, dimension: f64) -> Self {
        Self {
            centers: self.centers.clone(),
            dimension,
        }
    }

    /// Interleaved `[x0, y0, x1, y1, ...]`.
    pub fn to_coords(&self) -> Vec<f64> {
        self.centers.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn from_coords(coords: &[f64], dimension: f64) -> Self {
        let centers = coords
            .chunks_exact(2)
            .map(|c| Point::new(c[0], c[1]))
            .collect();
        Self { centers, dimension }
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.centers.len() != inst.len() {
            return Err(Error::LayoutMismatch {
                expected: inst.len(),
                got: self.centers.len(),
            });
        }
        if !(self.dimension.is_finite() && self.dimension > 0.0) {
            return Err(Error::InvalidDimension(self.dimension));
        }
        Ok(())
    }
}

/// Largest overlap depth still counted as feasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityTolerance(pub f64);

impl FeasibilityTolerance {
    /// Exact comparison: every depth must be `<= 0`.
    pub const STRICT: FeasibilityTolerance = FeasibilityTolerance(0.0);

    pub fn eps(self) -> f64 {
        self.0
    }
}

impl Default for FeasibilityTolerance {
    fn default() -> Self {
        FeasibilityTolerance(1e-10)
    }
}

/// Largest single overlap depth of the layout (pairwise and containment).
pub fn max_violation(inst: &Instance, lay: &Layout) -> f64 {
    let radii = inst.radii();
    let centers = &lay.centers;
    let mut worst: f64 = 0.0;
    for i in 0..centers.len() {
        let ci = Circle::new(centers[i], radii[i]);
        match inst.container() {
            ContainerSpec::Strip { width } => {
                let (dx, dy) = penalty::border_depths(ci, width, lay.dimension);
                worst = worst.max(dx).max(dy);
            }
            ContainerSpec::Disc => {
                worst = worst.max(penalty::disc_border_depth(ci, lay.dimension));
            }
        }
        for j in i + 1..centers.len() {
            let cj = Circle::new(centers[j], radii[j]);
            worst = worst.max(penalty::pair_depth(ci, cj));
        }
    }
    worst
}

/// True iff no containment or non-overlap constraint is violated by more
/// than `tol`.
pub fn is_feasible(inst: &Instance, lay: &Layout, tol: FeasibilityTolerance) -> bool {
    max_violation(inst, lay) <= tol.eps()
}

/// Samples a center for a circle of radius `radius` uniformly over the
/// positions that keep it inside the container. A range that is empty
/// because the container is too small collapses to the point 0.
pub fn sample_center<R: Rng + ?Sized>(
    container: ContainerSpec,
    dimension: f64,
    radius: f64,
    rng: &mut R,
) -> Point {
    match container {
        ContainerSpec::Strip { width } => {
            let x = symmetric_uniform(dimension / 2.0 - radius, rng);
            let y = symmetric_uniform(width / 2.0 - radius, rng);
            Point::new(x, y)
        }
        ContainerSpec::Disc => {
            let reach = (dimension - radius).max(0.0);
            if reach == 0.0 {
                return Point::ORIGIN;
            }
            let rho = reach * rng.gen::<f64>().sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            Point::new(rho * theta.cos(), rho * theta.sin())
        }
    }
}

fn symmetric_uniform<R: Rng + ?Sized>(half: f64, rng: &mut R) -> f64 {
    if half > 0.0 {
        rng.gen_range(-half..=half)
    } else {
        0.0
    }
}

/// Random initial layout at the given dimension. Overlaps between circles
/// are allowed; containment always holds unless the container is smaller
/// than a circle.
pub fn random_layout<R: Rng + ?Sized>(inst: &Instance, dimension: f64, rng: &mut R) -> Layout {
    let centers = inst
        .radii()
        .iter()
        .map(|&r| sample_center(inst.container(), dimension, r, rng))
        .collect();
    Layout::new(centers, dimension)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radii_sorted_descending() {
        let inst = make_instance(&[1.0, 2.0, 3.0], ContainerSpec::strip(9.0)).unwrap();
        assert_eq!(inst.radii(), &[3.0, 2.0, 1.0]);
        assert_eq!(inst.input_index(0), 2);
        assert_eq!(inst.input_radii(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn width_too_small() {
        let err = make_instance(&[1.0], ContainerSpec::strip(1.9)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleByWidth { .. }));
        assert!(err.to_string().contains("instance infeasible by width"));
    }

    #[test]
    fn disc_instance() {
        let inst = make_instance(&[5.0, 5.0], ContainerSpec::Disc).unwrap();
        assert_eq!(inst.len(), 2);
    }

    #[test]
    fn rejects_bad_radii() {
        assert_eq!(
            make_instance(&[], ContainerSpec::Disc).unwrap_err(),
            Error::EmptyInstance
        );
        assert!(matches!(
            make_instance(&[1.0, 0.0], ContainerSpec::Disc).unwrap_err(),
            Error::InvalidRadius { index: 1, .. }
        ));
        assert!(make_instance(&[1.0, -2.0], ContainerSpec::Disc).is_err());
        assert!(make_instance(&[f64::NAN], ContainerSpec::Disc).is_err());
    }

    #[test]
    fn stable_sort_on_ties() {
        let inst = make_instance(&[2.0, 3.0, 2.0, 2.0], ContainerSpec::Disc).unwrap();
        assert_eq!(
            (0..4).map(|k| inst.input_index(k)).collect::<Vec<_>>(),
            vec![1, 0, 2, 3]
        );
    }

    #[test]
    fn input_order_round_trip() {
        let inst = make_instance(&[1.0, 3.0, 2.0], ContainerSpec::strip(6.0)).unwrap();
        let sorted = vec![Point::new(3.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 0.0)];
        let input = inst.to_input_order(&sorted);
        assert_eq!(input[0].x, 1.0);
        assert_eq!(input[1].x, 3.0);
        assert_eq!(inst.from_input_order(&input), sorted);
    }

    #[test]
    fn feasibility_examples() {
        let tol = FeasibilityTolerance::default();
        let one = make_instance(&[1.0], ContainerSpec::strip(2.0)).unwrap();
        assert!(is_feasible(&one, &Layout::new(vec![Point::ORIGIN], 2.0), tol));
        assert!(!is_feasible(&one, &Layout::new(vec![Point::new(0.0, 0.5)], 2.0), tol));

        let two = make_instance(&[1.0, 1.0], ContainerSpec::strip(2.0)).unwrap();
        let lay = Layout::new(vec![Point::new(-1.0, 0.0), Point::new(0.5, 0.0)], 4.0);
        assert!(!is_feasible(&two, &lay, tol));
    }

    #[test]
    fn degenerate_sampling_ranges() {
        let inst = make_instance(&[1.0], ContainerSpec::strip(2.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let lay = random_layout(&inst, 4.0, &mut rng);
            let c = lay.centers[0];
            assert!((-1.0..=1.0).contains(&c.x));
            assert_eq!(c.y, 0.0);
        }
        // container shorter than the circle: x collapses to 0
        let lay = random_layout(&inst, 1.0, &mut rng);
        assert_eq!(lay.centers[0].x, 0.0);
    }

    #[test]
    fn random_layout_is_seeded() {
        let inst = make_instance(&[1.0, 2.0, 0.5, 0.7], ContainerSpec::strip(5.0)).unwrap();
        let a = random_layout(&inst, 7.0, &mut ChaCha8Rng::seed_from_u64(11));
        let b = random_layout(&inst, 7.0, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }
}
