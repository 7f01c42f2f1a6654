//! Uniform cell-centred scalar fields.

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Point2};

/// Scalar field on an `nx` by `ny` lattice. `origin` is the lower-left corner
/// of the lattice; cell `(i, j)` has its centre at
/// `origin + ((i + 1/2) dx, (j + 1/2) dy)`. Values are stored row-major with
/// `j` (the y index) as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridImage {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point2,
    pub spacing: (f64, f64),
    pub values: Vec<f64>,
}

/// Lattice geometry without values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point2,
    pub spacing: (f64, f64),
}

impl Lattice {
    pub fn new(nx: usize, ny: usize, origin: Point2, spacing: (f64, f64)) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("lattice needs at least 2x2 cells, got {nx}x{ny}")));
        }
        if !(spacing.0 > 0.0 && spacing.1 > 0.0) || !origin.is_finite() {
            return Err(Error::Config(format!("invalid lattice spacing {spacing:?}")));
        }
        Ok(Self { nx, ny, origin, spacing })
    }

    /// `n` by `n` cells covering the bounding box of `domain`.
    pub fn covering(domain: &ConvexDomain, n: usize) -> Result<Self> {
        let (lo, hi) = domain.bounding_box();
        let dx = (hi.x - lo.x) / n as f64;
        let dy = (hi.y - lo.y) / n as f64;
        Self::new(n, n, lo, (dx, dy))
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + (i as f64 + 0.5) * self.spacing.0,
            self.origin.y + (j as f64 + 0.5) * self.spacing.1,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing.0 * self.spacing.1
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.0.max(self.spacing.1)
    }

    /// Cell centres in storage order.
    pub fn centers(&self) -> impl Iterator<Item = Point2> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| self.center(i, j)))
    }

    /// Cells whose centres are at least `margin` inside the domain.
    pub fn interior_mask(&self, domain: &ConvexDomain, margin: f64) -> Vec<bool> {
        self.centers()
            .map(|p| domain.contains(p) && domain.boundary_distance(p) >= margin)
            .collect()
    }
}

impl GridImage {
    pub fn zeros(lattice: Lattice) -> Self {
        Self {
            nx: lattice.nx,
            ny: lattice.ny,
            origin: lattice.origin,
            spacing: lattice.spacing,
            values: vec![0.0; lattice.len()],
        }
    }

    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(Point2) -> f64) -> Self {
        let values = lattice.centers().map(&mut f).collect();
        Self { nx: lattice.nx, ny: lattice.ny, origin: lattice.origin, spacing: lattice.spacing, values }
    }

    pub fn lattice(&self) -> Lattice {
        Lattice { nx: self.nx, ny: self.ny, origin: self.origin, spacing: self.spacing }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.nx + i] = v;
    }

    /// Bilinear interpolation between cell centres; zero outside the lattice.
    pub fn sample(&self, p: Point2) -> f64 {
        let fx = (p.x - self.origin.x) / self.spacing.0 - 0.5;
        let fy = (p.y - self.origin.y) / self.spacing.1 - 0.5;
        if !(fx > -1.0 && fy > -1.0 && fx < self.nx as f64 && fy < self.ny as f64) {
            return 0.0;
        }
        let i0 = fx.floor() as isize;
        let j0 = fy.floor() as isize;
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                0.0
            } else {
                self.get(i as usize, j as usize)
            }
        };
        (1.0 - ty) * ((1.0 - tx) * at(i0, j0) + tx * at(i0 + 1, j0))
            + ty * ((1.0 - tx) * at(i0, j0 + 1) + tx * at(i0 + 1, j0 + 1))
    }

    pub fn check_same_lattice(&self, other: &GridImage) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::LatticeMismatch(format!(
                "{}x{} vs {}x{}",
                self.nx, self.ny, other.nx, other.ny
            )));
        }
        let tol = 1e-12 * self.spacing.0.max(self.spacing.1);
        if (self.origin - other.origin).norm() > tol
            || (self.spacing.0 - other.spacing.0).abs() > tol
            || (self.spacing.1 - other.spacing.1).abs() > tol
        {
            return Err(Error::LatticeMismatch("origin or spacing differ".into()));
        }
        Ok(())
    }

    /// `||values||_2` weighted by the cell area.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.spacing.0 * self.spacing.1).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks the field vanishes within `margin` of the boundary (and outside).
    pub fn check_support(&self, domain: &ConvexDomain, margin: f64) -> Result<()> {
        let lat = self.lattice();
        for (k, p) in lat.centers().enumerate() {
            let v = self.values[k];
            if v != 0.0 && !(domain.contains(p) && domain.boundary_distance(p) >= margin) {
                return Err(Error::SupportViolation(format!(
                    "value {v:e} at ({}, {}) lies within {margin} of the boundary",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine_fields() {
        let lat = Lattice::new(10, 8, Point2::new(-1.0, -1.0), (0.2, 0.25)).unwrap();
        let g = GridImage::from_fn(lat, |p| 2.0 * p.x - 3.0 * p.y + 0.5);
        for &(x, y) in &[(-0.5, -0.3), (0.1, 0.2), (0.63, 0.52)] {
            let v = g.sample(Point2::new(x, y));
            assert!((v - (2.0 * x - 3.0 * y + 0.5)).abs() < 1e-12);
        }
        assert_eq!(g.sample(Point2::new(5.0, 0.0)), 0.0);
    }

    #[test]
    fn lattice_rejects_degenerate() {
        assert!(Lattice::new(1, 4, Point2::ORIGIN, (1.0, 1.0)).is_err());
        assert!(Lattice::new(4, 4, Point2::ORIGIN, (0.0, 1.0)).is_err());
    }
}
