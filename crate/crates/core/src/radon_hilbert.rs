//! Chord-length (Radon) profiles of the domain indicator, their Hilbert
//! transforms in the offset variable, and the smoothing operator
//!
//! ```text
//! (K f)(x0) = 1/(8π) ∫ f(x1) (∂_a² H_a R χ)(n̂(x1,x0), â(x1,x0)) / |x1 - x0| dx1
//! ```
//!
//! `H_a` is convolution with `1/(π a)`: `(H φ)(a) = (1/π) PV ∫ φ(s) / (a - s) ds`,
//! under which the half-disc profile `√(1 - a²)` maps to `a` on `|a| < 1`.
//! Handbook tables using the kernel `-1/(π a)` list the opposite sign; with
//! that convention the residual `f - BP f` comes out as `-K f`.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{nhat_ahat, ConvexDomain, DomainKind, Point2};
use crate::grid::{GridImage, Lattice};
use crate::numerics::{cubic_interp, cubic_weights, second_diff5};

/// Discretisation of the kernel profiles.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelConfig {
    /// offset step relative to the support width
    pub da_rel: f64,
    /// absolute offset step; overrides `da_rel` when set
    pub da_abs: Option<f64>,
    /// zero padding on each side, relative to the support width
    pub pad_frac: f64,
    /// distance of the trusted range from each tangency, relative to the support width
    pub margin_frac: f64,
    /// number of cached directions over the full circle
    pub n_dirs: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { da_rel: 1e-3, da_abs: None, pad_frac: 0.1, margin_frac: 0.05, n_dirs: 1024 }
    }
}

/// Samples on a uniform offset grid `a_k = a0 + k da`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformTable {
    pub a0: f64,
    pub da: f64,
    pub values: Vec<f64>,
}

impl UniformTable {
    pub fn from_fn(a0: f64, da: f64, len: usize, f: impl Fn(f64) -> f64) -> Self {
        Self { a0, da, values: (0..len).map(|k| f(a0 + da * k as f64)).collect() }
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        self.a0 + self.da * k as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn a_end(&self) -> f64 {
        self.node(self.values.len().saturating_sub(1))
    }
}

/// Chord lengths `R χ(n, ·)` on a zero-padded grid around the support.
#[derive(Clone, Debug)]
pub struct RadonProfile {
    pub n: Point2,
    pub support: (f64, f64),
    pub table: UniformTable,
}

impl RadonProfile {
    pub fn build(domain: &ConvexDomain, n: Point2, cfg: &KernelConfig) -> Result<Self> {
        let scanner = domain.chord_scanner(n)?;
        let (lo, hi) = scanner.support_interval();
        let width = hi - lo;
        let da = cfg.da_abs.unwrap_or(cfg.da_rel * width);
        if !(da > 0.0 && da < width) {
            return Err(Error::Config(format!("offset step {da} incompatible with support width {width}")));
        }
        let pad = cfg.pad_frac * width;
        let a0 = lo - pad;
        let len = ((width + 2.0 * pad) / da).ceil() as usize + 1;
        let mut values = Vec::with_capacity(len);
        for k in 0..len {
            values.push(scanner.chord(a0 + da * k as f64)?);
        }
        Ok(Self { n, support: (lo, hi), table: UniformTable { a0, da, values } })
    }
}

/// Principal-value Hilbert transform `(1/π) PV ∫ φ(s)/(a - s) ds` of a
/// table that vanishes at both ends, evaluated at every node.
///
/// Singularity subtraction: `PV ∫ φ(s)/(a - s) ds = ∫ (φ(s) - φ(a))/(a - s) ds
/// + φ(a) ln|(a - s_min)/(s_max - a)|`, with the regular part by the trapezoid rule.
/// At `s = a` the regular integrand is replaced by `-φ'(a)` (centred difference).
pub fn hilbert_pv(table: &UniformTable) -> UniformTable {
    let phi = &table.values;
    let n = phi.len();
    if n < 3 {
        return UniformTable { a0: table.a0, da: table.da, values: vec![0.0; n] };
    }
    // 1/(i - j) with the step cancelling against the trapezoid weight
    let inv: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 }).collect();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi_ = phi[i];
            let mut acc = 0.0;
            for j in 0..n {
                let term = if j == i {
                    let dphi = if i == 0 {
                        phi[1] - phi[0]
                    } else if i == n - 1 {
                        phi[n - 1] - phi[n - 2]
                    } else {
                        0.5 * (phi[i + 1] - phi[i - 1])
                    };
                    // (φ(s)-φ(a))/(a-s) -> -φ'(a), times the step
                    -dphi
                } else if j < i {
                    (phi[j] - pi_) * inv[i - j]
                } else {
                    -(phi[j] - pi_) * inv[j - i]
                };
                acc += if j == 0 || j == n - 1 { 0.5 * term } else { term };
            }
            if pi_ != 0.0 && i > 0 && i < n - 1 {
                acc += pi_ * ((i as f64) / ((n - 1 - i) as f64)).ln();
            }
            acc / PI
        })
        .collect();
    UniformTable { a0: table.a0, da: table.da, values }
}

/// Second derivative of a tabulated function at `a`: five-point second
/// differences at the four nodes around `a`, cubically interpolated.
/// `valid_range` is the interval where the table is trusted.
pub fn second_deriv(table: &UniformTable, a: f64, valid_range: (f64, f64)) -> Result<f64> {
    if !(a >= valid_range.0 && a <= valid_range.1) {
        return Err(Error::OutOfValidRange { a, lo: valid_range.0, hi: valid_range.1 });
    }
    let n = table.len();
    let pos = (a - table.a0) / table.da;
    if !(pos >= 3.0 && pos <= n as f64 - 4.0) {
        return Err(Error::OutOfValidRange { a, lo: table.node(3), hi: table.node(n.saturating_sub(4)) });
    }
    let k = pos.floor() as usize;
    let p = pos - k as f64;
    let w = cubic_weights(p);
    let v = &table.values;
    Ok(w[0] * second_diff5(v, k - 1, table.da)
        + w[1] * second_diff5(v, k, table.da)
        + w[2] * second_diff5(v, k + 1, table.da)
        + w[3] * second_diff5(v, k + 2, table.da))
}

/// Closed-form `H_a R χ(n, a)` for discs and ellipses.
pub fn hilbert_closed_form(domain: &ConvexDomain, n: Point2, a: f64) -> Option<f64> {
    let (center, sa, sb) = elliptic_params(domain)?;
    let s = (sa * n.x).hypot(sb * n.y);
    let t = (a - center.dot(n)) / s;
    let disc = if t > 1.0 {
        t - (t * t - 1.0).sqrt()
    } else if t < -1.0 {
        t + (t * t - 1.0).sqrt()
    } else {
        t
    };
    Some(2.0 * sa * sb / s * disc)
}

/// Closed-form `∂_a² H_a R χ(n, a)` for discs and ellipses; exactly zero
/// strictly inside the support.
pub fn kernel_closed_form(domain: &ConvexDomain, n: Point2, a: f64) -> Option<f64> {
    let (center, sa, sb) = elliptic_params(domain)?;
    let s = (sa * n.x).hypot(sb * n.y);
    let t = (a - center.dot(n)) / s;
    let q = t * t - 1.0;
    let disc = if q <= 0.0 {
        0.0
    } else if t > 0.0 {
        2.0 / (q * q.sqrt())
    } else {
        -2.0 / (q * q.sqrt())
    };
    Some(sa * sb / (s * s * s) * disc)
}

fn elliptic_params(domain: &ConvexDomain) -> Option<(Point2, f64, f64)> {
    match domain.kind() {
        DomainKind::Disc { center, radius } => Some((*center, *radius, *radius)),
        DomainKind::Ellipse { center, semi_axes } => Some((*center, semi_axes.0, semi_axes.1)),
        DomainKind::ParametricConvex(_) => None,
    }
}

/// `∂_a² H_a R χ(n, ·)` tabulated for one direction.
#[derive(Clone, Debug)]
pub struct KernelProfile {
    pub n: Point2,
    /// the Hilbert-transformed Radon profile
    pub hilbert: UniformTable,
    /// second derivative at the nodes (zero where the stencil does not fit)
    pub table: UniformTable,
    pub valid_range: (f64, f64),
}

impl KernelProfile {
    pub fn build(domain: &ConvexDomain, n: Point2, cfg: &KernelConfig) -> Result<Self> {
        if domain.is_elliptic() {
            return Self::build_closed_form(domain, n, cfg);
        }
        let radon = RadonProfile::build(domain, n, cfg)?;
        let hilbert = hilbert_pv(&radon.table);
        let da = hilbert.da;
        let m = hilbert.len();
        let mut d2 = vec![0.0; m];
        for k in 2..m - 2 {
            d2[k] = second_diff5(&hilbert.values, k, da);
        }
        let valid_range = valid_range(radon.support, da, cfg);
        Ok(Self { n, hilbert, table: UniformTable { a0: radon.table.a0, da, values: d2 }, valid_range })
    }

    fn build_closed_form(domain: &ConvexDomain, n: Point2, cfg: &KernelConfig) -> Result<Self> {
        let support = domain.support_interval(n);
        let width = support.1 - support.0;
        let da = cfg.da_abs.unwrap_or(cfg.da_rel * width);
        let pad = cfg.pad_frac * width;
        let a0 = support.0 - pad;
        let len = ((width + 2.0 * pad) / da).ceil() as usize + 1;
        let hilbert = UniformTable::from_fn(a0, da, len, |a| hilbert_closed_form(domain, n, a).unwrap_or(0.0));
        let valid = valid_range(support, da, cfg);
        let table = UniformTable::from_fn(a0, da, len, |a| {
            if a > support.0 && a < support.1 {
                0.0
            } else {
                kernel_closed_form(domain, n, a).unwrap_or(0.0)
            }
        });
        Ok(Self { n, hilbert, table, valid_range: valid })
    }

    /// `∂_a² H_a R χ(n, a)` by cubic interpolation of the nodal second differences.
    #[inline]
    pub fn eval(&self, a: f64) -> Result<f64> {
        if !(a >= self.valid_range.0 && a <= self.valid_range.1) {
            return Err(Error::OutOfValidRange { a, lo: self.valid_range.0, hi: self.valid_range.1 });
        }
        Ok(cubic_interp(&self.table.values, self.table.a0, self.table.da, a))
    }
}

fn valid_range(support: (f64, f64), da: f64, cfg: &KernelConfig) -> (f64, f64) {
    let width = support.1 - support.0;
    let margin = (cfg.margin_frac * width).max(3.0 * da);
    (support.0 + margin, support.1 - margin)
}

/// Kernel profiles on a uniform direction grid, built lazily (once per
/// direction) or all at once with [`KernelCache::precompute`].
#[derive(Debug)]
pub struct KernelCache<'d> {
    domain: &'d ConvexDomain,
    cfg: KernelConfig,
    slots: Vec<OnceLock<std::result::Result<KernelProfile, String>>>,
}

impl<'d> KernelCache<'d> {
    pub fn new(domain: &'d ConvexDomain, cfg: KernelConfig) -> Result<Self> {
        if cfg.n_dirs < 8 {
            return Err(Error::Config(format!("need at least 8 cached directions, got {}", cfg.n_dirs)));
        }
        let slots = (0..cfg.n_dirs).map(|_| OnceLock::new()).collect();
        Ok(Self { domain, cfg, slots })
    }

    pub fn config(&self) -> &KernelConfig {
        &self.cfg
    }

    pub fn domain(&self) -> &ConvexDomain {
        self.domain
    }

    pub fn direction(&self, k: usize) -> Point2 {
        Point2::from_angle(TAU * k as f64 / self.cfg.n_dirs as f64)
    }

    /// Index of the cached direction nearest to `n`.
    pub fn nearest(&self, n: Point2) -> usize {
        let m = self.cfg.n_dirs as f64;
        let k = (n.angle().rem_euclid(TAU) / TAU * m).round() as usize;
        k % self.cfg.n_dirs
    }

    pub fn profile(&self, k: usize) -> Result<&KernelProfile> {
        let slot = self.slots[k].get_or_init(|| {
            KernelProfile::build(self.domain, self.direction(k), &self.cfg).map_err(|e| e.to_string())
        });
        slot.as_ref().map_err(|e| Error::InvalidDomain(e.clone()))
    }

    pub fn precompute(&self) -> Result<()> {
        (0..self.cfg.n_dirs).into_par_iter().try_for_each(|k| self.profile(k).map(|_| ()))
    }
}

/// Integrand of the smoothing operator without `f`:
/// `(∂_a² H_a R χ)(n̂, â) / |x1 - x0|`. Exactly zero for discs and ellipses.
pub fn kernel_weight(cache: &KernelCache<'_>, x1: Point2, x0: Point2) -> Result<f64> {
    let line = nhat_ahat(x1, x0)?;
    if cache.domain.is_elliptic() {
        return Ok(0.0);
    }
    let dist = (x1 - x0).norm();
    let profile = cache.profile(cache.nearest(line.n))?;
    Ok(profile.eval(line.a)? / dist)
}

/// `(K f)(x0)` by the midpoint rule over the cells of `f`, skipping the cell
/// that contains `x0`.
pub fn apply_k(cache: &KernelCache<'_>, f: &GridImage, x0: Point2) -> Result<f64> {
    if cache.domain.is_elliptic() {
        return Ok(0.0);
    }
    let lat = f.lattice();
    let own = cell_of(&lat, x0);
    let mut acc = 0.0;
    for j in 0..f.ny {
        for i in 0..f.nx {
            let v = f.get(i, j);
            if v == 0.0 || own == Some((i, j)) {
                continue;
            }
            acc += v * kernel_weight(cache, lat.center(i, j), x0)?;
        }
    }
    Ok(acc * lat.cell_area() / (8.0 * PI))
}

fn cell_of(lat: &Lattice, p: Point2) -> Option<(usize, usize)> {
    let fx = ((p.x - lat.origin.x) / lat.spacing.0).floor();
    let fy = ((p.y - lat.origin.y) / lat.spacing.1).floor();
    if fx < 0.0 || fy < 0.0 || fx >= lat.nx as f64 || fy >= lat.ny as f64 {
        None
    } else {
        Some((fx as usize, fy as usize))
    }
}

/// `K f` at the centres of `targets` where `mask` holds; zero elsewhere.
pub fn kernel_field(cache: &KernelCache<'_>, f: &GridImage, targets: Lattice, mask: &[bool]) -> Result<GridImage> {
    if mask.len() != targets.len() {
        return Err(Error::LatticeMismatch("mask does not match target lattice".into()));
    }
    if !cache.domain.is_elliptic() {
        cache.precompute()?;
    }
    let values = (0..targets.len())
        .into_par_iter()
        .map(|k| {
            if !mask[k] {
                return Ok(0.0);
            }
            let p = targets.center(k % targets.nx, k / targets.nx);
            apply_k(cache, f, p)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GridImage { nx: targets.nx, ny: targets.ny, origin: targets.origin, spacing: targets.spacing, values })
}
