//! Back-projection reconstruction from wave traces or circular means.
//!
//! All four formulas share the structure
//!
//! ```text
//! f(x0) - (K f)(x0) = (1/π) ∫_∂Ω  w(x, x0) J_x(|x - x0|) ds(x)
//! ```
//!
//! where the inner integral `J_x(d)` depends on the boundary node only through
//! its data row and on the target only through the distance `d`. The inner
//! integrals are therefore tabulated once per boundary node on a fine distance
//! grid and interpolated per target pixel (or evaluated directly when
//! [`InversionConfig::tabulate`] is off).
//!
//! * wave, divergence form: `J(d) = ∫_d^T U(t) / √(t² - d²) dt`, `w = ν_x` under `∇_{x0}·`
//! * wave, dot form: `J(d) = ∫_d^T ∂_t(U/t) / √(t² - d²) dt`, `w = ν_x · (x0 - x)`
//! * means, divergence form: `J(d) = PV ∫_0^R r M(r) / (r² - d²) dr`
//! * means, dot form: `J(d) = PV ∫_0^R ∂_r M(r) / (r² - d²) dr`

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{self, BoundaryTable, MeansData, WaveData};
use crate::geometry::{ConvexDomain, Point2};
use crate::grid::{GridImage, Lattice};
use crate::metrics::rel_l2;
use crate::numerics::{cubic_interp, deriv4};
use crate::phantom::Field2;
use crate::radon_hilbert::{kernel_field, KernelCache, KernelConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    WaveA,
    WaveB,
    MeansA,
    MeansB,
}

impl Formula {
    pub const ALL: [Formula; 4] = [Formula::WaveA, Formula::WaveB, Formula::MeansA, Formula::MeansB];

    pub fn uses_means(self) -> bool {
        matches!(self, Formula::MeansA | Formula::MeansB)
    }

    pub fn is_divergence_form(self) -> bool {
        matches!(self, Formula::WaveA | Formula::MeansA)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Formula::WaveA => "wave-a",
            Formula::WaveB => "wave-b",
            Formula::MeansA => "means-a",
            Formula::MeansB => "means-b",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Formula::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown formula '{s}' (expected wave-a|wave-b|means-a|means-b)")))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InversionConfig {
    /// reconstruction targets keep this many pixels from the boundary
    pub margin_pixels: f64,
    /// distance-table step as a fraction of the data step
    pub d_step_factor: f64,
    /// time beyond which traces are treated as a smooth tail; sets the
    /// `u`-step of the cosh substitution to `dt / t_signal`. `None` means
    /// twice the domain diameter.
    pub t_signal: Option<f64>,
    /// tabulate inner integrals per boundary node (fast) or evaluate per pair
    pub tabulate: bool,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self { margin_pixels: 2.0, d_step_factor: 0.5, t_signal: None, tabulate: true }
    }
}

/// Reconstruction lattice and the mask of admissible targets.
#[derive(Clone, Debug)]
pub struct Targets {
    pub lattice: Lattice,
    pub mask: Vec<bool>,
    pub margin: f64,
}

impl Targets {
    pub fn new(domain: &ConvexDomain, lattice: Lattice, margin_pixels: f64) -> Self {
        let margin = margin_pixels * lattice.max_spacing();
        let mask = lattice.interior_mask(domain, margin);
        Self { lattice, mask, margin }
    }

    pub fn covering(domain: &ConvexDomain, n: usize, margin_pixels: f64) -> Result<Self> {
        Ok(Self::new(domain, Lattice::covering(domain, n)?, margin_pixels))
    }
}

/// `u`-step for the cosh substitution given the data step and signal extent.
pub fn default_du(dt: f64, t_signal: f64) -> f64 {
    (dt / t_signal).min(0.02)
}

/// `∫_d^T g(t) / √(t² - d²) dt` for a trace sampled at `t_j = (j + 1) dt`,
/// `T = n dt`, via `t = d cosh u` and the trapezoid rule in `u` with step at
/// most `du`; `g` is cubically interpolated.
pub fn singular_time_integral(trace: &[f64], dt: f64, d: f64, du: f64) -> Result<f64> {
    let t_max = trace.len() as f64 * dt;
    if !(d > 0.0 && d < t_max) {
        return Err(Error::BadDistance { d, limit: t_max });
    }
    let u_max = (t_max / d).acosh();
    let n = ((u_max / du).ceil() as usize).max(8);
    let h = u_max / n as f64;
    let growth = h.exp();
    let mut e = 1.0;
    let mut sum = 0.0;
    for k in 0..=n {
        // cosh(k h) from the running power e^{k h}
        let t = 0.5 * d * (e + 1.0 / e);
        let g = cubic_interp(trace, dt, dt, t.min(t_max));
        sum += if k == 0 || k == n { 0.5 * g } else { g };
        e *= growth;
    }
    Ok(sum * h)
}

/// `PV ∫_0^R g(r) / (r² - d²) dr` for a profile sampled at `r_j = (j + 1) dr`,
/// `R = n dr`. `g(0)` is obtained by cubic extrapolation.
///
/// Uses `1/(r² - d²) = (1/2d) [1/(r - d) - 1/(r + d)]` and
/// `PV ∫ g/(r - d) = ∫ (g(r) - g(d))/(r - d) dr + g(d) ln((R - d)/d)`.
pub fn pv_radius_integral(profile: &[f64], dr: f64, d: f64) -> Result<f64> {
    let ext = with_origin(profile);
    let deriv = deriv4(&ext, dr);
    pv_radius_integral_ext(&ext, &deriv, dr, d)
}

fn with_origin(profile: &[f64]) -> Vec<f64> {
    let mut ext = Vec::with_capacity(profile.len() + 1);
    let g0 = match profile {
        [a, b, c, d, ..] => 4.0 * a - 6.0 * b + 4.0 * c - d,
        [a, ..] => *a,
        [] => 0.0,
    };
    ext.push(g0);
    ext.extend_from_slice(profile);
    ext
}

/// PV integral on a table whose node `k` sits at `r = k dr` (including `r = 0`).
fn pv_radius_integral_ext(ext: &[f64], deriv: &[f64], dr: f64, d: f64) -> Result<f64> {
    let n = ext.len() - 1;
    let r_max = n as f64 * dr;
    if !(d > 0.0 && d < r_max) {
        return Err(Error::BadDistance { d, limit: r_max });
    }
    let gd = cubic_interp(ext, 0.0, dr, d);
    let gpd = cubic_interp(deriv, 0.0, dr, d);
    let mut reg = 0.0;
    let mut plus = 0.0;
    for (k, &g) in ext.iter().enumerate() {
        let r = k as f64 * dr;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        let gap = r - d;
        let q = if gap.abs() < 1e-9 * dr { gpd } else { (g - gd) / gap };
        reg += w * q;
        plus += w * g / (r + d);
    }
    let minus_pv = reg * dr + gd * ((r_max - d) / d).ln();
    Ok((minus_pv - plus * dr) / (2.0 * d))
}

/// The per-node inner integral of one formula, either tabulated in `d` or
/// evaluated on demand.
struct InnerIntegrals<'a> {
    rows: &'a BoundaryTable,
    /// `d`-tables per node (empty when evaluating directly)
    tables: Vec<Vec<f64>>,
    d_step: f64,
    means: bool,
    du: f64,
}

impl<'a> InnerIntegrals<'a> {
    fn new(rows: &'a BoundaryTable, means: bool, d_max: f64, cfg: &InversionConfig, t_signal: f64) -> Result<Self> {
        let d_step = rows.step * cfg.d_step_factor;
        let du = default_du(rows.step, t_signal);
        let mut this = Self { rows, tables: Vec::new(), d_step, means, du };
        if cfg.tabulate {
            let limit = rows.extent();
            let n_d = ((d_max.min(limit) / d_step).ceil() as usize + 2).min(((limit / d_step) as usize).saturating_sub(1));
            this.tables = (0..rows.n_centers())
                .into_par_iter()
                .map(|i| {
                    let row = rows.row(i);
                    let (ext, deriv) = if means {
                        let ext = with_origin(row);
                        let deriv = deriv4(&ext, rows.step);
                        (ext, deriv)
                    } else {
                        (Vec::new(), Vec::new())
                    };
                    (1..=n_d)
                        .map(|k| {
                            let d = k as f64 * d_step;
                            if means {
                                pv_radius_integral_ext(&ext, &deriv, rows.step, d)
                            } else {
                                singular_time_integral(row, rows.step, d, du)
                            }
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(this)
    }

    #[inline]
    fn eval(&self, i: usize, d: f64) -> Result<f64> {
        if self.tables.is_empty() {
            let row = self.rows.row(i);
            return if self.means {
                pv_radius_integral(row, self.rows.step, d)
            } else {
                singular_time_integral(row, self.rows.step, d, self.du)
            };
        }
        let table = &self.tables[i];
        let top = table.len() as f64 * self.d_step;
        if !(d > 0.0 && d <= top) {
            return Err(Error::BadDistance { d, limit: top });
        }
        Ok(cubic_interp(table, self.d_step, self.d_step, d))
    }
}

/// Inner data rows for a formula: `U`, `∂_t(U/t)`, `r M` or `∂_r M`.
fn formula_rows(formula: Formula, wave: Option<&WaveData>, means: Option<&MeansData>) -> Result<BoundaryTable> {
    match formula {
        Formula::WaveA => Ok(wave.ok_or_else(|| missing("wave"))?.0.clone()),
        Formula::WaveB => Ok(forward::dt_over_t(wave.ok_or_else(|| missing("wave"))?)),
        Formula::MeansA => {
            let m = means.ok_or_else(|| missing("means"))?;
            let mut t = m.0.clone();
            for (k, v) in t.values.iter_mut().enumerate() {
                *v *= m.abscissa(k % m.n_samples);
            }
            Ok(t)
        }
        Formula::MeansB => Ok(forward::dr_means(means.ok_or_else(|| missing("means"))?)),
    }
}

fn missing(what: &str) -> Error {
    Error::Config(format!("formula needs {what} data"))
}

/// Back-projection of boundary data onto `targets`; zero outside the mask.
pub fn back_project(
    domain: &ConvexDomain,
    formula: Formula,
    wave: Option<&WaveData>,
    means: Option<&MeansData>,
    targets: &Targets,
    cfg: &InversionConfig,
) -> Result<GridImage> {
    let rows = formula_rows(formula, wave, means)?;
    rows.check_centers(domain)?;
    let lat = targets.lattice;
    let h = 0.5 * lat.spacing.0.min(lat.spacing.1);
    let d_max = domain.diameter() + 2.0 * h;
    let t_signal = cfg.t_signal.unwrap_or(2.0 * domain.diameter());
    let inner = InnerIntegrals::new(&rows, formula.uses_means(), d_max, cfg, t_signal)?;
    let nodes = domain.nodes();

    let boundary_field = |x0: Point2| -> Result<Point2> {
        let mut acc = Point2::ORIGIN;
        for (i, nd) in nodes.iter().enumerate() {
            let j = inner.eval(i, (nd.point - x0).norm())?;
            acc = acc + nd.outward_normal * (nd.arc_weight * j);
        }
        Ok(acc)
    };

    let values = (0..lat.len())
        .into_par_iter()
        .map(|k| -> Result<f64> {
            if !targets.mask[k] {
                return Ok(0.0);
            }
            let x0 = lat.center(k % lat.nx, k / lat.nx);
            let v = if formula.is_divergence_form() {
                let ex = Point2::new(h, 0.0);
                let ey = Point2::new(0.0, h);
                let dx = boundary_field(x0 + ex)?.x - boundary_field(x0 - ex)?.x;
                let dy = boundary_field(x0 + ey)?.y - boundary_field(x0 - ey)?.y;
                (dx + dy) / (2.0 * h)
            } else {
                let mut acc = 0.0;
                for (i, nd) in nodes.iter().enumerate() {
                    let j = inner.eval(i, (nd.point - x0).norm())?;
                    acc += nd.arc_weight * nd.outward_normal.dot(x0 - nd.point) * j;
                }
                acc
            };
            Ok(v / PI)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GridImage { nx: lat.nx, ny: lat.ny, origin: lat.origin, spacing: lat.spacing, values })
}

pub fn bp_wave_a(domain: &ConvexDomain, data: &WaveData, targets: &Targets, cfg: &InversionConfig) -> Result<GridImage> {
    back_project(domain, Formula::WaveA, Some(data), None, targets, cfg)
}

pub fn bp_wave_b(domain: &ConvexDomain, data: &WaveData, targets: &Targets, cfg: &InversionConfig) -> Result<GridImage> {
    back_project(domain, Formula::WaveB, Some(data), None, targets, cfg)
}

pub fn bp_means_a(domain: &ConvexDomain, data: &MeansData, targets: &Targets, cfg: &InversionConfig) -> Result<GridImage> {
    back_project(domain, Formula::MeansA, None, Some(data), targets, cfg)
}

pub fn bp_means_b(domain: &ConvexDomain, data: &MeansData, targets: &Targets, cfg: &InversionConfig) -> Result<GridImage> {
    back_project(domain, Formula::MeansB, None, Some(data), targets, cfg)
}

/// Forward-simulation grids.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SimConfig {
    pub n_r: usize,
    pub n_t: usize,
    pub n_ang: usize,
    /// `T_max = tmax_factor * diam`
    pub tmax_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_r: forward::DEFAULT_RADII,
            n_t: forward::DEFAULT_TIMES,
            n_ang: forward::DEFAULT_ANGLES,
            tmax_factor: forward::DEFAULT_TMAX_FACTOR,
        }
    }
}

impl SimConfig {
    pub fn t_max(&self, domain: &ConvexDomain) -> f64 {
        self.tmax_factor * domain.diameter()
    }
}

/// Circular means and wave traces of `f` at the boundary nodes of `domain`.
pub fn simulate(f: &dyn Field2, domain: &ConvexDomain, sim: &SimConfig) -> Result<(MeansData, WaveData)> {
    let means = forward::circular_means(f, domain, sim.n_r, None, sim.n_ang)?;
    let wave = forward::wave_from_means(&means, sim.n_t, sim.t_max(domain))?;
    Ok((means, wave))
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub residual: GridImage,
    pub kernel_field: GridImage,
    pub rel_gap: f64,
}

/// Compares the back-projection residual `f - BP f` (dot-form wave formula)
/// with the smoothing operator `K f` evaluated on the same targets.
/// `f_grid` must be `f` sampled on the target lattice.
pub fn residual_vs_kernel(
    domain: &ConvexDomain,
    f: &dyn Field2,
    f_grid: &GridImage,
    targets: &Targets,
    sim: &SimConfig,
    inv: &InversionConfig,
    kernel: KernelConfig,
) -> Result<ResidualReport> {
    if f_grid.lattice() != targets.lattice {
        return Err(Error::LatticeMismatch("f_grid must live on the target lattice".into()));
    }
    let (_, wave) = simulate(f, domain, sim)?;
    let recon = bp_wave_b(domain, &wave, targets, inv)?;
    let mut residual = f_grid.clone();
    for (k, v) in residual.values.iter_mut().enumerate() {
        *v = if targets.mask[k] { *v - recon.values[k] } else { 0.0 };
    }
    let cache = KernelCache::new(domain, kernel)?;
    let kf = kernel_field(&cache, f_grid, targets.lattice, &targets.mask)?;
    let mut gap = residual.clone();
    for (g, k) in gap.values.iter_mut().zip(&kf.values) {
        *g -= k;
    }
    let norm_f = masked_norm(f_grid, &targets.mask);
    let rel_gap = if norm_f > 0.0 { masked_norm(&gap, &targets.mask) / norm_f } else { masked_norm(&gap, &targets.mask) };
    Ok(ResidualReport { residual, kernel_field: kf, rel_gap })
}

fn masked_norm(img: &GridImage, mask: &[bool]) -> f64 {
    img.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v * v).sum::<f64>().sqrt()
}

/// Relative L2 difference of two reconstructions over the target mask.
pub fn cross_difference(a: &GridImage, b: &GridImage, targets: &Targets) -> Result<f64> {
    rel_l2(a, b, Some(&targets.mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_integral_of_constant() {
        // ∫_d^T dt/√(t² - d²) = ln(T + √(T² - d²)) - ln d
        let dt = 1e-3;
        let n = 5000;
        let trace = vec![1.0; n];
        let t_max = n as f64 * dt;
        for &d in &[0.05, 0.4, 1.3, 3.0] {
            let v = singular_time_integral(&trace, dt, d, default_du(dt, 2.0)).unwrap();
            let exact = (t_max + (t_max * t_max - d * d).sqrt()).ln() - d.ln();
            assert!((v - exact).abs() < 1e-8 * exact, "d = {d}: {v} vs {exact}");
        }
    }

    #[test]
    fn singular_integral_errors() {
        let trace = vec![0.0; 100];
        assert_eq!(singular_time_integral(&trace, 0.1, 0.5, 0.01).unwrap(), 0.0);
        assert!(matches!(singular_time_integral(&trace, 0.1, 0.0, 0.01), Err(Error::BadDistance { .. })));
        assert!(matches!(singular_time_integral(&trace, 0.1, 10.0, 0.01), Err(Error::BadDistance { .. })));
    }

    #[test]
    fn pv_of_linear_profile() {
        // PV ∫_0^R r/(r² - d²) dr = ½ ln|(R² - d²)/d²|
        let n = 20_000;
        let big_r = 2.0;
        let dr = big_r / n as f64;
        let profile: Vec<f64> = (1..=n).map(|j| j as f64 * dr).collect();
        for &d in &[0.3, 0.7777, 1.0, 1.5] {
            let v = pv_radius_integral(&profile, dr, d).unwrap();
            let exact = 0.5 * ((big_r * big_r - d * d) / (d * d)).ln();
            assert!((v - exact).abs() < 1e-8 * exact.abs(), "d = {d}: {v} vs {exact}");
        }
        assert_eq!(pv_radius_integral(&vec![0.0; 64], 0.1, 1.0).unwrap(), 0.0);
        assert!(matches!(pv_radius_integral(&profile, dr, 2.5), Err(Error::BadDistance { .. })));
    }

    #[test]
    fn formula_parsing() {
        for f in Formula::ALL {
            assert_eq!(f.as_str().parse::<Formula>().unwrap(), f);
        }
        assert!("wave-c".parse::<Formula>().is_err());
    }
}
