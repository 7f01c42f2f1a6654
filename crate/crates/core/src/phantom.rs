//! Smooth compactly supported test phantoms built from mollifier bumps.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Point2};
use crate::grid::{GridImage, Lattice};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Point2,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    /// `amp * exp(1 - 1/(1 - s^2))` with `s = |x - c| / rho`, zero for `s >= 1`.
    #[inline]
    pub fn eval(&self, x: Point2) -> f64 {
        let s2 = (x - self.center).norm_sq() / (self.radius * self.radius);
        if s2 < 1.0 {
            self.amplitude * (1.0 - 1.0 / (1.0 - s2)).exp()
        } else {
            0.0
        }
    }
}

/// Anything that can be evaluated pointwise.
pub trait Field2: Sync {
    fn eval(&self, x: Point2) -> f64;

    /// Mean over the circle of radius `r` about `x` by the periodic
    /// trapezoid rule with `n_ang` nodes.
    fn circle_mean(&self, x: Point2, r: f64, n_ang: usize) -> f64 {
        let h = TAU / n_ang as f64;
        let sum: f64 = (0..n_ang).map(|k| self.eval(x + Point2::from_angle(h * k as f64) * r)).sum();
        sum / n_ang as f64
    }
}

impl Field2 for GridImage {
    fn eval(&self, x: Point2) -> f64 {
        self.sample(x)
    }
}

/// Sum of C-infinity bumps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Phantom {
    pub bumps: Vec<Bump>,
}

impl Field2 for Phantom {
    fn eval(&self, x: Point2) -> f64 {
        self.bumps.iter().map(|b| b.eval(x)).sum()
    }

    // same nodes as the default, but bumps the circle misses are skipped
    fn circle_mean(&self, x: Point2, r: f64, n_ang: usize) -> f64 {
        let h = TAU / n_ang as f64;
        let mut sum = 0.0;
        for b in &self.bumps {
            if ((b.center - x).norm() - r).abs() >= b.radius {
                continue;
            }
            sum += (0..n_ang).map(|k| b.eval(x + Point2::from_angle(h * k as f64) * r)).sum::<f64>();
        }
        sum / n_ang as f64
    }
}

impl Phantom {
    pub fn new(bumps: Vec<Bump>) -> Self {
        Self { bumps }
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    /// Checks each bump's closed support lies inside `domain` with at least
    /// `margin` to spare.
    pub fn check_support(&self, domain: &ConvexDomain, margin: f64) -> Result<()> {
        for (k, b) in self.bumps.iter().enumerate() {
            if !(b.radius > 0.0) || !b.amplitude.is_finite() || !b.center.is_finite() {
                return Err(Error::SupportViolation(format!("bump {k} is malformed: {b:?}")));
            }
            let clearance = domain.boundary_distance(b.center) - b.radius;
            if !domain.contains(b.center) || clearance < margin {
                return Err(Error::SupportViolation(format!(
                    "bump {k} at ({}, {}) radius {} has clearance {clearance:.4} < {margin:.4}",
                    b.center.x, b.center.y, b.radius
                )));
            }
        }
        Ok(())
    }

    /// Exact evaluation at the cell centres of `lattice`.
    pub fn rasterize(&self, lattice: Lattice) -> GridImage {
        GridImage::from_fn(lattice, |p| self.eval(p))
    }

    /// Like [`Phantom::rasterize`] but enforces the support margin
    /// (two target pixels unless stated otherwise).
    pub fn rasterize_checked(&self, domain: &ConvexDomain, lattice: Lattice, margin: f64) -> Result<GridImage> {
        self.check_support(domain, margin)?;
        Ok(self.rasterize(lattice))
    }

    /// Three bumps inside `x^2 + (y/b)^2 < 1` in the spirit of the classical
    /// elliptical-domain example.
    pub fn three_bumps(b: f64) -> Self {
        Self::new(vec![
            Bump { center: Point2::new(-0.35, 0.2 * b), radius: 0.28, amplitude: 1.0 },
            Bump { center: Point2::new(0.3, 0.25 * b), radius: 0.2, amplitude: 0.7 },
            Bump { center: Point2::new(0.05, -0.35 * b), radius: 0.25, amplitude: -0.5 },
        ])
    }

    /// `count` bumps placed at random inside `domain`, reproducible from `seed`.
    /// Each bump keeps `margin` clearance from the boundary.
    pub fn random(domain: &ConvexDomain, count: usize, seed: u64, margin: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = domain.bounding_box();
        let scale = domain.diameter();
        let mut bumps = Vec::with_capacity(count);
        let mut attempts = 0;
        while bumps.len() < count {
            attempts += 1;
            if attempts > 100_000 {
                return Err(Error::Config("could not place random bumps inside the domain".into()));
            }
            let c = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
            let radius = scale * rng.gen_range(0.05..0.15);
            if domain.contains(c) && domain.boundary_distance(c) - radius >= margin {
                let amplitude = rng.gen_range(0.3..1.0);
                bumps.push(Bump { center: c, radius, amplitude });
            }
        }
        Ok(Self::new(bumps))
    }
}
