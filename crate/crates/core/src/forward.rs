//! Forward simulation of boundary data: circular means `M f` on circles
//! centred at the boundary nodes and the wave traces `U f`, `V f` obtained
//! from them through the mean-value (Abel-type) representations
//!
//! ```text
//! (V f)(x, t) = ∫_0^t r (M f)(x, r) / √(t² - r²) dr
//! (U f)(x, t) = ∫_0^t (∂_r M f)(x, r) t / √(t² - r²) dr
//! ```
//!
//! Both are evaluated with `r = t sin ψ`, which removes the endpoint singularity.

use std::f64::consts::FRAC_PI_2;
use std::ops::Deref;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Point2};
use crate::grid::GridImage;
use crate::numerics::{cubic_interp_from_zero, deriv4, trapezoid};
use crate::phantom::Field2;

pub const DEFAULT_RADII: usize = 1024;
pub const DEFAULT_TIMES: usize = 2048;
pub const DEFAULT_ANGLES: usize = 512;
pub const DEFAULT_TMAX_FACTOR: f64 = 8.0;

/// Samples at boundary centres `x_i` and abscissae `s_j = (j + 1) step`,
/// `j = 0..n_samples`, stored row-per-centre.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTable {
    pub centers: Vec<Point2>,
    pub step: f64,
    pub n_samples: usize,
    pub values: Vec<f64>,
}

impl BoundaryTable {
    pub fn zeros(centers: Vec<Point2>, step: f64, n_samples: usize) -> Self {
        let len = centers.len() * n_samples;
        Self { centers, step, n_samples, values: vec![0.0; len] }
    }

    pub fn n_centers(&self) -> usize {
        self.centers.len()
    }

    /// Largest abscissa, `n_samples * step`.
    pub fn extent(&self) -> f64 {
        self.n_samples as f64 * self.step
    }

    #[inline]
    pub fn abscissa(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.step
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_samples..(i + 1) * self.n_samples]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_samples.max(1))
    }

    fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64> + Sync + Send) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = self.values.par_chunks(self.n_samples).map(f).collect();
        rows.concat()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks the centres coincide with the boundary nodes of `domain`.
    pub fn check_centers(&self, domain: &ConvexDomain) -> Result<()> {
        let nodes = domain.nodes();
        if nodes.len() != self.centers.len() {
            return Err(Error::Config(format!(
                "data has {} centres but the domain has {} boundary nodes",
                self.centers.len(),
                nodes.len()
            )));
        }
        let tol = 1e-9 * domain.diameter();
        for (k, (c, n)) in self.centers.iter().zip(nodes).enumerate() {
            if (*c - n.point).norm() > tol {
                return Err(Error::Config(format!("centre {k} does not lie on the domain boundary node")));
            }
        }
        Ok(())
    }
}

/// Circular means `(M f)(x_i, r_j)`; radii span `(0, r_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeansData(pub BoundaryTable);

/// Wave traces `(U f)(x_i, t_j)` (or `V f`); times span `(0, T_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveData(pub BoundaryTable);

impl Deref for MeansData {
    type Target = BoundaryTable;
    fn deref(&self) -> &BoundaryTable {
        &self.0
    }
}

impl Deref for WaveData {
    type Target = BoundaryTable;
    fn deref(&self) -> &BoundaryTable {
        &self.0
    }
}

impl MeansData {
    pub fn r_max(&self) -> f64 {
        self.extent()
    }
}

impl WaveData {
    pub fn t_max(&self) -> f64 {
        self.extent()
    }
}

/// `(1/2π) ∫ f(x + r ω) dω` by the periodic trapezoid rule with `n_ang` nodes.
pub fn circular_mean_at(f: &dyn Field2, x: Point2, r: f64, n_ang: usize) -> f64 {
    f.circle_mean(x, r, n_ang)
}

/// Circular means on `n_r` radii up to `r_max` (the domain diameter when `None`).
pub fn circular_means(
    f: &dyn Field2,
    domain: &ConvexDomain,
    n_r: usize,
    r_max: Option<f64>,
    n_ang: usize,
) -> Result<MeansData> {
    let r_max = r_max.unwrap_or_else(|| domain.diameter());
    if n_r < 8 || n_ang < 8 || !(r_max > 0.0) {
        return Err(Error::Config(format!("bad means grid: n_r = {n_r}, n_ang = {n_ang}, r_max = {r_max}")));
    }
    let centers: Vec<Point2> = domain.nodes().iter().map(|n| n.point).collect();
    let step = r_max / n_r as f64;
    let values: Vec<f64> = centers
        .par_iter()
        .flat_map_iter(|&x| (0..n_r).map(move |j| circular_mean_at(f, x, (j + 1) as f64 * step, n_ang)))
        .collect();
    Ok(MeansData(BoundaryTable { centers, step, n_samples: n_r, values }))
}

/// [`circular_means`] of a gridded field, which must vanish within two pixels
/// of the boundary.
pub fn circular_means_grid(
    f: &GridImage,
    domain: &ConvexDomain,
    n_r: usize,
    r_max: Option<f64>,
    n_ang: usize,
) -> Result<MeansData> {
    f.check_support(domain, 2.0 * f.spacing.0.max(f.spacing.1))?;
    circular_means(f, domain, n_r, r_max, n_ang)
}

/// One means row with the value at `r = 0` (cubic extrapolation) prepended
/// and a few zeros appended, so that node `k` sits at `r = k step`.
fn extended_row(row: &[f64]) -> Vec<f64> {
    let mut ext = Vec::with_capacity(row.len() + 5);
    let m0 = if row.len() >= 4 { 4.0 * row[0] - 6.0 * row[1] + 4.0 * row[2] - row[3] } else { row[0] };
    ext.push(m0);
    ext.extend_from_slice(row);
    ext.extend_from_slice(&[0.0; 4]);
    ext
}

/// ψ-interval and node count for the Abel integral at time `t` when the
/// integrand vanishes outside `r_lo <= r <= r_hi`.
fn psi_nodes(t: f64, r_lo: f64, r_hi: f64, dr: f64) -> (f64, f64, usize) {
    let psi_of = |r: f64| if t <= r { FRAC_PI_2 } else { (r / t).asin() };
    let (lo, hi) = (psi_of(r_lo), psi_of(r_hi));
    let n = ((t * (hi - lo) / dr).ceil() as usize).max(16);
    (lo, hi, n)
}

/// Wave traces from circular means by the sine-substituted Abel integral,
/// on `n_t` times up to `t_max`.
pub fn wave_from_means(m: &MeansData, n_t: usize, t_max: f64) -> Result<WaveData> {
    abel_transform(m, n_t, t_max, AbelKind::U).map(WaveData)
}

/// `V f` from circular means, same time grid conventions as [`wave_from_means`].
pub fn v_from_means(m: &MeansData, n_t: usize, t_max: f64) -> Result<WaveData> {
    abel_transform(m, n_t, t_max, AbelKind::V).map(WaveData)
}

#[derive(Clone, Copy)]
enum AbelKind {
    U,
    V,
}

fn abel_transform(m: &MeansData, n_t: usize, t_max: f64, kind: AbelKind) -> Result<BoundaryTable> {
    if n_t < 8 || !(t_max > 0.0) {
        return Err(Error::Config(format!("bad time grid: n_t = {n_t}, t_max = {t_max}")));
    }
    let dr = m.step;
    let r_max = m.r_max();
    let dt = t_max / n_t as f64;
    let values = m.map_rows(|row| {
        let ext = extended_row(row);
        let table = match kind {
            AbelKind::U => deriv4(&ext, dr),
            AbelKind::V => ext,
        };
        let inv_dr = 1.0 / dr;
        let mut out = Vec::with_capacity(n_t);
        // r-range on which the interpolated table can be nonzero
        let (Some(i0), Some(i1)) = (table.iter().position(|&v| v != 0.0), table.iter().rposition(|&v| v != 0.0))
        else {
            return vec![0.0; n_t];
        };
        let r_lo = (i0 as f64 - 2.0).max(0.0) * dr;
        let r_hi = ((i1 + 1) as f64 * dr).min(r_max);
        let mut buf = Vec::new();
        for j in 0..n_t {
            let t = (j + 1) as f64 * dt;
            if t <= r_lo {
                out.push(0.0);
                continue;
            }
            let (psi_lo, psi_hi, n) = psi_nodes(t, r_lo, r_hi, dr);
            let h = (psi_hi - psi_lo) / n as f64;
            buf.clear();
            // sin(ψ_lo + k h) by the recurrence s_{k+1} = 2 cos(h) s_k - s_{k-1}
            let two_cos = 2.0 * h.cos();
            let (mut s_prev, mut s_cur) = ((psi_lo - h).sin(), psi_lo.sin());
            for _ in 0..=n {
                let r = t * s_cur;
                let g = cubic_interp_from_zero(&table, inv_dr, r);
                buf.push(match kind {
                    // t ∂_r M(t sin ψ)
                    AbelKind::U => t * g,
                    // r M(r) with r = t sin ψ
                    AbelKind::V => r * g,
                });
                let s_next = two_cos * s_cur - s_prev;
                s_prev = s_cur;
                s_cur = s_next;
            }
            out.push(trapezoid(&buf, h));
        }
        out
    });
    Ok(BoundaryTable { centers: m.centers.clone(), step: dt, n_samples: n_t, values })
}

/// `∂_t (U f / t)` by fourth-order differences along each trace.
pub fn dt_over_t(w: &WaveData) -> BoundaryTable {
    let dt = w.step;
    let values = w.map_rows(|row| {
        let scaled: Vec<f64> = row.iter().enumerate().map(|(j, v)| v / ((j + 1) as f64 * dt)).collect();
        deriv4(&scaled, dt)
    });
    BoundaryTable { centers: w.centers.clone(), step: dt, n_samples: w.n_samples, values }
}

/// `∂_r M f` by fourth-order differences along each row.
pub fn dr_means(m: &MeansData) -> BoundaryTable {
    let dr = m.step;
    let values = m.map_rows(|row| {
        let ext = extended_row(row);
        deriv4(&ext, dr)[1..=row.len()].to_vec()
    });
    BoundaryTable { centers: m.centers.clone(), step: dr, n_samples: m.n_samples, values }
}

/// Time derivative of every trace (fourth order).
pub fn dt_table(w: &BoundaryTable) -> BoundaryTable {
    let values = w.map_rows(|row| deriv4(row, w.step));
    BoundaryTable { centers: w.centers.clone(), step: w.step, n_samples: w.n_samples, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{Bump, Phantom};

    fn setup() -> (ConvexDomain, Phantom) {
        let d = ConvexDomain::disc(Point2::ORIGIN, 1.0, 32).unwrap();
        let p = Phantom::new(vec![Bump { center: Point2::new(0.2, -0.1), radius: 0.3, amplitude: 1.0 }]);
        (d, p)
    }

    #[test]
    fn zero_field_gives_zero_data() {
        let (d, _) = setup();
        let m = circular_means(&Phantom::default(), &d, 64, None, 64).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
        let w = wave_from_means(&m, 64, 16.0).unwrap();
        assert!(w.values.iter().all(|&v| v == 0.0));
        let v = v_from_means(&m, 64, 16.0).unwrap();
        assert!(v.values.iter().all(|&v| v == 0.0));
        assert!(dt_over_t(&w).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disjoint_circle_gives_zero() {
        let (_, p) = setup();
        let x = Point2::new(-1.0, 0.0);
        // |x - c| = 1.2 > r + ρ for r = 0.85
        assert_eq!(circular_mean_at(&p, x, 0.85, 512), 0.0);
    }

    #[test]
    fn dt_over_t_synthetic() {
        let n = 200;
        let dt = 0.05;
        let centers = vec![Point2::ORIGIN; 2];
        let mk = |f: &dyn Fn(f64) -> f64| {
            let mut t = BoundaryTable::zeros(centers.clone(), dt, n);
            for i in 0..2 {
                for j in 0..n {
                    t.values[i * n + j] = f((j + 1) as f64 * dt);
                }
            }
            WaveData(t)
        };
        let lin = dt_over_t(&mk(&|t| t));
        assert!(lin.values.iter().all(|v| v.abs() < 1e-10));
        let quad = dt_over_t(&mk(&|t| t * t));
        assert!(quad.values.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn means_are_linear() {
        let (d, p) = setup();
        let q = Phantom::new(vec![Bump { center: Point2::new(-0.3, 0.3), radius: 0.2, amplitude: 0.5 }]);
        let mut both = p.clone();
        both.bumps.extend(q.bumps.iter().map(|b| Bump { amplitude: -2.0 * b.amplitude, ..*b }));
        let mp = circular_means(&p, &d, 32, None, 64).unwrap();
        let mq = circular_means(&q, &d, 32, None, 64).unwrap();
        let mb = circular_means(&both, &d, 32, None, 64).unwrap();
        for k in 0..mb.values.len() {
            assert!((mb.values[k] - (mp.values[k] - 2.0 * mq.values[k])).abs() < 1e-13);
        }
    }
}
