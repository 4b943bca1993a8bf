//! Bounded domains: 1D intervals and 2D balls.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Domain shape. The boundary chart is an endpoint label in 1D (-1 left,
/// +1 right) and the polar angle in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DomainGeometry {
    Interval { a: f64, b: f64 },
    Ball { center: [f64; 2], radius: f64 },
}

impl DomainGeometry {
    pub fn interval(a: f64, b: f64) -> Self {
        assert!(a < b, "interval requires a < b");
        DomainGeometry::Interval { a, b }
    }

    pub fn ball(center: [f64; 2], radius: f64) -> Self {
        assert!(radius > 0.0, "ball requires positive radius");
        DomainGeometry::Ball { center, radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainGeometry::Interval { .. } => 1,
            DomainGeometry::Ball { .. } => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DomainGeometry::Interval { a, b } => b - a,
            DomainGeometry::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Signed distance to the boundary: negative inside, zero on the
    /// boundary, positive outside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            DomainGeometry::Interval { a, b } => (a - x[0]).max(x[0] - b),
            DomainGeometry::Ball { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                (dx * dx + dy * dy).sqrt() - radius
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boundary_distance(x) < 0.0
    }

    /// Unit outward normal at a boundary point.
    pub fn outward_normal(&self, z: &[f64]) -> Result<[f64; 2], EvalError> {
        self.check_on_boundary(z)?;
        Ok(match self {
            DomainGeometry::Interval { a, b } => {
                if (z[0] - a).abs() <= (z[0] - b).abs() {
                    [-1.0, 0.0]
                } else {
                    [1.0, 0.0]
                }
            }
            DomainGeometry::Ball { center, .. } => {
                let dx = z[0] - center[0];
                let dy = z[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                [dx / r, dy / r]
            }
        })
    }

    /// Scalar chart value of a boundary point: -1/+1 endpoint labels in 1D,
    /// the angle in (-pi, pi] in 2D.
    pub fn boundary_coordinate(&self, z: &[f64]) -> Result<f64, EvalError> {
        self.check_on_boundary(z)?;
        Ok(match self {
            DomainGeometry::Interval { a, b } => {
                if (z[0] - a).abs() <= (z[0] - b).abs() {
                    -1.0
                } else {
                    1.0
                }
            }
            DomainGeometry::Ball { center, .. } => (z[1] - center[1]).atan2(z[0] - center[0]),
        })
    }

    /// Boundary point at a given chart value.
    pub fn boundary_point(&self, coord: f64) -> [f64; 2] {
        match self {
            DomainGeometry::Interval { a, b } => {
                if coord < 0.0 {
                    [*a, 0.0]
                } else {
                    [*b, 0.0]
                }
            }
            DomainGeometry::Ball { center, radius } => [
                center[0] + radius * coord.cos(),
                center[1] + radius * coord.sin(),
            ],
        }
    }

    fn check_on_boundary(&self, z: &[f64]) -> Result<(), EvalError> {
        let tol = 1e-9 * self.diameter().max(1.0);
        if self.boundary_distance(z).abs() > tol {
            return Err(EvalError::NotOnBoundary);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_geometry() {
        let g = DomainGeometry::interval(-2.0, 2.0);
        assert_eq!(g.dim(), 1);
        assert!(g.contains(&[0.0]));
        assert!(!g.contains(&[2.5]));
        assert_eq!(g.boundary_distance(&[2.0]), 0.0);
        assert_eq!(g.outward_normal(&[-2.0]).unwrap(), [-1.0, 0.0]);
        assert_eq!(g.outward_normal(&[2.0]).unwrap(), [1.0, 0.0]);
        assert_eq!(g.boundary_coordinate(&[-2.0]).unwrap(), -1.0);
        assert!(g.outward_normal(&[0.5]).is_err());
    }

    #[test]
    fn ball_geometry() {
        let g = DomainGeometry::ball([0.5, -0.5], 2.0);
        assert_eq!(g.dim(), 2);
        assert!(g.contains(&[0.5, -0.5]));
        let z = [2.5, -0.5];
        assert!(g.boundary_distance(&z).abs() < 1e-12);
        let n = g.outward_normal(&z).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-12 && n[1].abs() < 1e-12);
        assert!((g.boundary_coordinate(&z).unwrap()).abs() < 1e-12);
        let p = g.boundary_point(std::f64::consts::FRAC_PI_2);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 1.5).abs() < 1e-12);
        // contains(x) <=> boundary_distance(x) < 0
        for pt in [[0.5, 1.49], [0.5, 1.51]] {
            assert_eq!(g.contains(&pt), g.boundary_distance(&pt) < 0.0);
        }
    }
}
