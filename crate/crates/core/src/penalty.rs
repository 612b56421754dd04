//! Overlap depths and the squared-depth penalty energy.
//!
//! The energy of a layout is the sum of squared overlap depths over all
//! unordered circle pairs plus all containment terms. It is zero exactly on
//! feasible layouts and continuously differentiable everywhere except at
//! coincident centers.

use crate::model::{Circle, ContainerSpec, Instance, Layout, Point};

/// Pairwise overlap depth `max{0, r_i + r_j - |c_i - c_j|}`.
pub fn pair_depth(a: Circle, b: Circle) -> f64 {
    (a.radius + b.radius - a.center.distance(b.center)).max(0.0)
}

/// Depths past the vertical and horizontal borders of a strip of length
/// `length` and width `width`.
pub fn border_depths(c: Circle, width: f64, length: f64) -> (f64, f64) {
    let dx = (c.radius + c.center.x.abs() - 0.5 * length).max(0.0);
    let dy = (c.radius + c.center.y.abs() - 0.5 * width).max(0.0);
    (dx, dy)
}

/// Depth past the boundary of a disc of radius `radius` centered on the
/// origin.
pub fn disc_border_depth(c: Circle, radius: f64) -> f64 {
    (c.radius + c.center.norm() - radius).max(0.0)
}

/// Energy, gradient and worst depth of one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyReport {
    pub energy: f64,
    /// `(dE/dx_i, dE/dy_i)` per circle, sorted order.
    pub grad: Vec<Point>,
    pub max_depth: f64,
    /// Set when two overlapping circles share a center; the gradient of
    /// that pair term then points along +x for the first circle's partner.
    pub coincident: bool,
}

/// Scalar result of a flat-coordinate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub energy: f64,
    pub max_depth: f64,
    pub coincident: bool,
}

/// The penalty energy over a set of circles at a fixed container dimension,
/// evaluated on interleaved coordinates `[x0, y0, x1, y1, ...]`.
///
/// `pad` is added to every radius; the finisher uses a small positive pad
/// to keep a separation margin.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyField<'a> {
    pub radii: &'a [f64],
    pub container: ContainerSpec,
    pub dimension: f64,
    pub pad: f64,
}

impl<'a> PenaltyField<'a> {
    pub fn new(radii: &'a [f64], container: ContainerSpec, dimension: f64) -> Self {
        Self {
            radii,
            container,
            dimension,
            pad: 0.0,
        }
    }

    pub fn for_instance(inst: &'a Instance, dimension: f64) -> Self {
        Self::new(inst.radii(), inst.container(), dimension)
    }

    pub fn with_pad(mut self, pad: f64) -> Self {
        self.pad = pad;
        self
    }

    /// Energy only.
    pub fn energy(&self, coords: &[f64]) -> Evaluation {
        self.run(coords, None)
    }

    /// Energy and gradient; `grad` is overwritten.
    pub fn eval(&self, coords: &[f64], grad: &mut [f64]) -> Evaluation {
        debug_assert_eq!(coords.len(), grad.len());
        grad.fill(0.0);
        self.run(coords, Some(grad))
    }

    fn run(&self, coords: &[f64], mut grad: Option<&mut [f64]>) -> Evaluation {
        let n = self.radii.len();
        debug_assert_eq!(coords.len(), 2 * n);
        let mut energy = 0.0;
        let mut max_depth: f64 = 0.0;
        let mut coincident = false;

        for i in 0..n {
            let ri = self.radii[i] + self.pad;
            let (xi, yi) = (coords[2 * i], coords[2 * i + 1]);

            match self.container {
                ContainerSpec::Strip { width } => {
                    let ox = ri + xi.abs() - 0.5 * self.dimension;
                    if ox > 0.0 {
                        energy += ox * ox;
                        max_depth = max_depth.max(ox);
                        if let Some(g) = grad.as_deref_mut() {
                            g[2 * i] += 2.0 * ox * sign(xi);
                        }
                    }
                    let oy = ri + yi.abs() - 0.5 * width;
                    if oy > 0.0 {
                        energy += oy * oy;
                        max_depth = max_depth.max(oy);
                        if let Some(g) = grad.as_deref_mut() {
                            g[2 * i + 1] += 2.0 * oy * sign(yi);
                        }
                    }
                }
                ContainerSpec::Disc => {
                    let dist = (xi * xi + yi * yi).sqrt();
                    let o = ri + dist - self.dimension;
                    if o > 0.0 {
                        energy += o * o;
                        max_depth = max_depth.max(o);
                        if let Some(g) = grad.as_deref_mut() {
                            if dist > 0.0 {
                                g[2 * i] += 2.0 * o * xi / dist;
                                g[2 * i + 1] += 2.0 * o * yi / dist;
                            }
                        }
                    }
                }
            }

            for j in i + 1..n {
                let dx = xi - coords[2 * j];
                let dy = yi - coords[2 * j + 1];
                let reach = ri + self.radii[j] + self.pad;
                // cheap reject before the square root
                if dx.abs() >= reach || dy.abs() >= reach {
                    continue;
                }
                let dist = (dx * dx + dy * dy).sqrt();
                let o = reach - dist;
                if o <= 0.0 {
                    continue;
                }
                energy += o * o;
                max_depth = max_depth.max(o);
                if let Some(g) = grad.as_deref_mut() {
                    let (ux, uy) = if dist > 0.0 {
                        (dx / dist, dy / dist)
                    } else {
                        coincident = true;
                        (1.0, 0.0)
                    };
                    // d(o^2)/dc_i = -2 o u, d(o^2)/dc_j = +2 o u
                    let fx = 2.0 * o * ux;
                    let fy = 2.0 * o * uy;
                    g[2 * i] -= fx;
                    g[2 * i + 1] -= fy;
                    g[2 * j] += fx;
                    g[2 * j + 1] += fy;
                }
            }
        }

        Evaluation {
            energy,
            max_depth,
            coincident,
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Penalty energy and analytic gradient of a layout.
pub fn evaluate(inst: &Instance, lay: &Layout) -> PenaltyReport {
    let coords = lay.to_coords();
    let mut grad = vec![0.0; coords.len()];
    let ev = PenaltyField::for_instance(inst, lay.dimension).eval(&coords, &mut grad);
    PenaltyReport {
        energy: ev.energy,
        grad: grad
            .chunks_exact(2)
            .map(|g| Point::new(g[0], g[1]))
            .collect(),
        max_depth: ev.max_depth,
        coincident: ev.coincident,
    }
}

/// Penalty energy of a layout without the gradient.
pub fn energy(inst: &Instance, lay: &Layout) -> f64 {
    PenaltyField::for_instance(inst, lay.dimension)
        .energy(&lay.to_coords())
        .energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_instance;

    fn circle(x: f64, y: f64, r: f64) -> Circle {
        Circle::new(Point::new(x, y), r)
    }

    #[test]
    fn pair_depth_examples() {
        assert_eq!(pair_depth(circle(0.0, 0.0, 1.0), circle(1.0, 0.0, 1.0)), 1.0);
        assert_eq!(pair_depth(circle(0.0, 0.0, 1.0), circle(2.0, 0.0, 1.0)), 0.0);
        assert_eq!(pair_depth(circle(0.0, 0.0, 2.0), circle(4.0, 0.0, 3.0)), 1.0);
    }

    #[test]
    fn border_depth_examples() {
        assert_eq!(border_depths(circle(0.0, 0.0, 1.0), 2.0, 2.0), (0.0, 0.0));
        assert_eq!(border_depths(circle(0.5, 0.0, 1.0), 2.0, 2.0).0, 0.5);
        assert_eq!(border_depths(circle(0.0, -1.0, 1.0), 2.0, 2.0).1, 1.0);
    }

    #[test]
    fn disc_depth_examples() {
        assert_eq!(disc_border_depth(circle(0.0, 0.0, 1.0), 1.0), 0.0);
        assert_eq!(disc_border_depth(circle(1.0, 0.0, 1.0), 1.0), 1.0);
        assert_eq!(disc_border_depth(circle(3.0, 4.0, 2.0), 7.0), 0.0);
    }

    #[test]
    fn two_overlapping_unit_circles() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::strip(4.0)).unwrap();
        let lay = Layout::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], 8.0);
        let rep = evaluate(&inst, &lay);
        assert_eq!(rep.energy, 1.0);
        assert_eq!(rep.grad[0], Point::new(2.0, 0.0));
        assert_eq!(rep.grad[1], Point::new(-2.0, 0.0));
        assert_eq!(rep.max_depth, 1.0);
    }

    #[test]
    fn feasible_layout_has_zero_energy() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::strip(2.0)).unwrap();
        let lay = Layout::new(vec![Point::new(-1.0, 0.0), Point::new(1.0, 0.0)], 4.0);
        let rep = evaluate(&inst, &lay);
        assert_eq!(rep.energy, 0.0);
        assert!(rep.grad.iter().all(|g| g.x == 0.0 && g.y == 0.0));
        assert_eq!(rep.max_depth, 0.0);
    }

    #[test]
    fn coincident_centers_are_flagged() {
        let inst = make_instance(&[1.0, 1.0], ContainerSpec::Disc).unwrap();
        let lay = Layout::new(vec![Point::ORIGIN, Point::ORIGIN], 5.0);
        let rep = evaluate(&inst, &lay);
        assert!(rep.coincident);
        assert_eq!(rep.energy, 4.0);
        assert_eq!(rep.grad[0], Point::new(-4.0, 0.0));
        assert_eq!(rep.grad[1], Point::new(4.0, 0.0));
    }

    #[test]
    fn disc_gradient_is_radial() {
        let inst = make_instance(&[1.0], ContainerSpec::Disc).unwrap();
        let lay = Layout::new(vec![Point::new(3.0, 4.0)], 5.0);
        let rep = evaluate(&inst, &lay);
        // depth 1, gradient 2 * (3/5, 4/5)
        assert_eq!(rep.energy, 1.0);
        assert!((rep.grad[0].x - 1.2).abs() < 1e-15);
        assert!((rep.grad[0].y - 1.6).abs() < 1e-15);
    }

    #[test]
    fn pad_widens_every_radius() {
        let radii = [1.0, 1.0];
        let coords = [-1.0, 0.0, 1.0, 0.0];
        let field = PenaltyField::new(&radii, ContainerSpec::strip(2.0), 4.0);
        assert_eq!(field.energy(&coords).energy, 0.0);
        let padded = field.with_pad(0.5);
        // pair depth 1, each of 2 circles sticks out 0.5 in x and y
        assert!((padded.energy(&coords).energy - (1.0 + 4.0 * 0.25)).abs() < 1e-15);
    }
}
