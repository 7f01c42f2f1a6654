//! Smooth convex planar domains and the line geometry used by the
//! back-projection formulas: boundary quadrature nodes, support function,
//! chord lengths (the Radon transform of the indicator function) and the
//! equidistant line between two points.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Separation below which two points are treated as coincident.
pub const DEFAULT_EPS_SEP: f64 = 1e-12;

/// Default number of boundary quadrature nodes.
pub const DEFAULT_BOUNDARY_NODES: usize = 256;

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;
const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector `(cos alpha, sin alpha)`.
    #[inline]
    pub fn from_angle(alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Self::new(c, s)
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by a right angle.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// A line `{x : n . x = a}` given by its unit normal and signed offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirOffset {
    pub n: Point2,
    pub a: f64,
}

/// Normal and offset of the line of points equidistant from `x1` and `x0`.
///
/// `n = (x1 - x0)/|x1 - x0|` and `a = (|x1|^2 - |x0|^2) / (2 |x1 - x0|)`.
pub fn nhat_ahat(x1: Point2, x0: Point2) -> Result<DirOffset> {
    nhat_ahat_eps(x1, x0, DEFAULT_EPS_SEP)
}

pub fn nhat_ahat_eps(x1: Point2, x0: Point2, eps_sep: f64) -> Result<DirOffset> {
    let diff = x1 - x0;
    let dist = diff.norm();
    if !(dist > eps_sep) {
        return Err(Error::DegeneratePair { separation: dist, eps: eps_sep });
    }
    // |x1|^2 - |x0|^2 = (x1 - x0).(x1 + x0), which avoids cancellation
    let a = 0.5 * diff.dot(x1 + x0) / dist;
    Ok(DirOffset { n: diff * (1.0 / dist), a })
}

/// A closed, counter-clockwise, 2π-periodic boundary parameterisation.
pub trait BoundaryCurve: Send + Sync + fmt::Debug {
    fn point(&self, s: f64) -> Point2;

    /// d gamma / ds. The default uses central differences.
    fn derivative(&self, s: f64) -> Point2 {
        (self.point(s + FD_STEP) - self.point(s - FD_STEP)) * (0.5 / FD_STEP)
    }
}

/// Superellipse `|x/a|^p + |y/b|^p = 1` (p >= 2), parameterised by polar angle.
#[derive(Clone, Copy, Debug)]
pub struct Superellipse {
    pub center: Point2,
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

impl Superellipse {
    fn radius_and_slope(&self, theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        let u = (c / self.a).abs();
        let v = (s / self.b).abs();
        let p = self.p;
        let big_s = u.powf(p) + v.powf(p);
        let r = big_s.powf(-1.0 / p);
        // d/dtheta |cos/a|^p = -p |cos/a|^(p-1) sgn(cos) sin / a, likewise for sin
        let ds = -p * u.powf(p - 1.0) * c.signum() * s / self.a
            + p * v.powf(p - 1.0) * s.signum() * c / self.b;
        let dr = -r / (p * big_s) * ds;
        (r, dr)
    }

    pub fn contains(&self, q: Point2) -> bool {
        let d = q - self.center;
        (d.x / self.a).abs().powf(self.p) + (d.y / self.b).abs().powf(self.p) < 1.0
    }
}

impl BoundaryCurve for Superellipse {
    fn point(&self, theta: f64) -> Point2 {
        let (r, _) = self.radius_and_slope(theta);
        self.center + Point2::from_angle(theta) * r
    }

    fn derivative(&self, theta: f64) -> Point2 {
        let (r, dr) = self.radius_and_slope(theta);
        let dir = Point2::from_angle(theta);
        dir * dr + dir.perp() * r
    }
}

/// Axis-aligned ellipse as a generic parametric curve. Used to push discs and
/// ellipses through the numeric pipeline instead of their closed forms.
#[derive(Clone, Copy, Debug)]
pub struct EllipseCurve {
    pub center: Point2,
    pub a: f64,
    pub b: f64,
}

impl BoundaryCurve for EllipseCurve {
    fn point(&self, s: f64) -> Point2 {
        let (sn, cs) = s.sin_cos();
        self.center + Point2::new(self.a * cs, self.b * sn)
    }

    fn derivative(&self, s: f64) -> Point2 {
        let (sn, cs) = s.sin_cos();
        Point2::new(-self.a * sn, self.b * cs)
    }
}

#[derive(Clone, Debug)]
pub enum DomainKind {
    Disc { center: Point2, radius: f64 },
    Ellipse { center: Point2, semi_axes: (f64, f64) },
    ParametricConvex(Arc<dyn BoundaryCurve>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryNode {
    pub param: f64,
    pub point: Point2,
    pub outward_normal: Point2,
    pub arc_weight: f64,
}

/// A bounded convex domain with smooth boundary and its trapezoid boundary
/// quadrature. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ConvexDomain {
    kind: DomainKind,
    nodes: Vec<BoundaryNode>,
    /// fine boundary polygon for distance queries
    dense: Vec<Point2>,
    diameter: f64,
    area: f64,
}

const DENSE_NODES: usize = 4096;

impl ConvexDomain {
    pub fn disc(center: Point2, radius: f64, n_nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidDomain(format!("disc radius must be positive, got {radius}")));
        }
        Self::build(DomainKind::Disc { center, radius }, n_nodes)
    }

    pub fn ellipse(center: Point2, semi_axes: (f64, f64), n_nodes: usize) -> Result<Self> {
        let (a, b) = semi_axes;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidDomain(format!("ellipse semi-axes must be positive, got ({a}, {b})")));
        }
        Self::build(DomainKind::Ellipse { center, semi_axes }, n_nodes)
    }

    pub fn superellipse(center: Point2, a: f64, b: f64, p: f64, n_nodes: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidDomain(format!("superellipse semi-axes must be positive, got ({a}, {b})")));
        }
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidDomain(format!("superellipse exponent must be >= 2, got {p}")));
        }
        Self::parametric(Arc::new(Superellipse { center, a, b, p }), n_nodes)
    }

    /// General convex domain from a counter-clockwise boundary curve.
    /// Convexity is checked from the sign of the curvature at every node.
    pub fn parametric(curve: Arc<dyn BoundaryCurve>, n_nodes: usize) -> Result<Self> {
        let closure = (curve.point(TAU) - curve.point(0.0)).norm();
        let scale = curve.point(0.0).norm().max(1.0);
        if !(closure <= 1e-9 * scale) {
            return Err(Error::InvalidDomain(format!("curve is not closed (gap {closure:e})")));
        }
        let domain = Self::build(DomainKind::ParametricConvex(curve.clone()), n_nodes)?;
        if !(domain.area > 0.0) {
            return Err(Error::InvalidDomain("curve must be oriented counter-clockwise".into()));
        }
        let check = n_nodes.max(512);
        let h = 1e-4;
        for k in 0..check {
            let s = TAU * k as f64 / check as f64;
            let d1 = curve.derivative(s);
            let d2 = (curve.derivative(s + h) - curve.derivative(s - h)) * (0.5 / h);
            let speed = d1.norm();
            let kappa = d1.cross(d2) / (speed * speed * speed);
            if !kappa.is_finite() || kappa < -1e-6 * domain.diameter.recip() {
                return Err(Error::NonConvex(format!("negative curvature {kappa:e} at s = {s}")));
            }
        }
        Ok(domain)
    }

    /// The same domain with the closed-form kind replaced by its boundary
    /// parameterisation, so every query goes through the numeric path.
    pub fn as_parametric(&self) -> Result<Self> {
        match &self.kind {
            DomainKind::Disc { center, radius } => Self::parametric(
                Arc::new(EllipseCurve { center: *center, a: *radius, b: *radius }),
                self.nodes.len(),
            ),
            DomainKind::Ellipse { center, semi_axes } => Self::parametric(
                Arc::new(EllipseCurve { center: *center, a: semi_axes.0, b: semi_axes.1 }),
                self.nodes.len(),
            ),
            DomainKind::ParametricConvex(_) => Ok(self.clone()),
        }
    }

    fn build(kind: DomainKind, n_nodes: usize) -> Result<Self> {
        if n_nodes < 8 {
            return Err(Error::InvalidDomain(format!("need at least 8 boundary nodes, got {n_nodes}")));
        }
        let ds = TAU / n_nodes as f64;
        let mut nodes = Vec::with_capacity(n_nodes);
        for k in 0..n_nodes {
            let s = ds * k as f64;
            let (point, tangent) = boundary_eval(&kind, s);
            let speed = tangent.norm();
            if !(speed > 0.0 && point.is_finite()) {
                return Err(Error::InvalidDomain(format!("degenerate boundary at s = {s}")));
            }
            nodes.push(BoundaryNode {
                param: s,
                point,
                outward_normal: Point2::new(tangent.y / speed, -tangent.x / speed),
                arc_weight: speed * ds,
            });
        }
        let dense: Vec<Point2> = (0..DENSE_NODES)
            .map(|k| boundary_eval(&kind, TAU * k as f64 / DENSE_NODES as f64).0)
            .collect();
        let area = match &kind {
            DomainKind::Disc { radius, .. } => PI * radius * radius,
            DomainKind::Ellipse { semi_axes, .. } => PI * semi_axes.0 * semi_axes.1,
            DomainKind::ParametricConvex(curve) => {
                // 1/2 \oint x dy - y dx by the (spectrally accurate) periodic trapezoid rule
                let h = TAU / DENSE_NODES as f64;
                0.5 * h
                    * (0..DENSE_NODES)
                        .map(|k| {
                            let s = h * k as f64;
                            curve.point(s).cross(curve.derivative(s))
                        })
                        .sum::<f64>()
            }
        };
        let diameter = match &kind {
            DomainKind::Disc { radius, .. } => 2.0 * radius,
            DomainKind::Ellipse { semi_axes, .. } => 2.0 * semi_axes.0.max(semi_axes.1),
            DomainKind::ParametricConvex(_) => {
                let step = 4;
                let mut best: f64 = 0.0;
                for i in (0..DENSE_NODES).step_by(step) {
                    for j in (i + step..DENSE_NODES).step_by(step) {
                        best = best.max((dense[i] - dense[j]).norm_sq());
                    }
                }
                best.sqrt()
            }
        };
        Ok(Self { kind, nodes, dense, diameter, area })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    /// True for discs and ellipses, where the smoothing kernel vanishes.
    pub fn is_elliptic(&self) -> bool {
        !matches!(self.kind, DomainKind::ParametricConvex(_))
    }

    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.nodes.iter().map(|n| n.arc_weight).sum()
    }

    pub fn boundary_point(&self, s: f64) -> Point2 {
        boundary_eval(&self.kind, s).0
    }

    pub fn boundary_derivative(&self, s: f64) -> Point2 {
        boundary_eval(&self.kind, s).1
    }

    pub fn contains(&self, q: Point2) -> bool {
        match &self.kind {
            DomainKind::Disc { center, radius } => (q - *center).norm() < *radius,
            DomainKind::Ellipse { center, semi_axes } => {
                let d = q - *center;
                (d.x / semi_axes.0).powi(2) + (d.y / semi_axes.1).powi(2) < 1.0
            }
            DomainKind::ParametricConvex(_) => {
                let n = self.dense.len();
                (0..n).all(|k| (self.dense[(k + 1) % n] - self.dense[k]).cross(q - self.dense[k]) > 0.0)
            }
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn boundary_distance(&self, q: Point2) -> f64 {
        if let DomainKind::Disc { center, radius } = &self.kind {
            return radius - (q - *center).norm();
        }
        let n = self.dense.len();
        let mut best = f64::INFINITY;
        for k in 0..n {
            let p0 = self.dense[k];
            let seg = self.dense[(k + 1) % n] - p0;
            let t = ((q - p0).dot(seg) / seg.norm_sq()).clamp(0.0, 1.0);
            best = best.min((q - (p0 + seg * t)).norm_sq());
        }
        let d = best.sqrt();
        if self.contains(q) {
            d
        } else {
            -d
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let ex = Point2::new(1.0, 0.0);
        let ey = Point2::new(0.0, 1.0);
        (
            Point2::new(-self.support(-ex), -self.support(-ey)),
            Point2::new(self.support(ex), self.support(ey)),
        )
    }

    /// Support function `h(n) = max_{x in domain} n . x`.
    pub fn support(&self, n: Point2) -> f64 {
        match &self.kind {
            DomainKind::Disc { center, radius } => center.dot(n) + radius * n.norm(),
            DomainKind::Ellipse { center, semi_axes } => {
                center.dot(n) + (semi_axes.0 * n.x).hypot(semi_axes.1 * n.y)
            }
            DomainKind::ParametricConvex(curve) => {
                let s = self.extremal_param(curve.as_ref(), n);
                n.dot(curve.point(s))
            }
        }
    }

    /// Offsets `(a_min, a_max) = (-h(-n), h(n))` of the two tangent lines with normal `n`.
    pub fn support_interval(&self, n: Point2) -> (f64, f64) {
        (-self.support(-n), self.support(n))
    }

    /// Parameter maximising `n . gamma(s)`: grid scan, then bisection on the
    /// sign of `n . gamma'(s)`.
    fn extremal_param(&self, curve: &dyn BoundaryCurve, n: Point2) -> f64 {
        let m = self.dense.len();
        let (k, _) = self
            .dense
            .iter()
            .enumerate()
            .map(|(k, p)| (k, n.dot(*p)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let h = TAU / m as f64;
        let mut lo = h * (k as f64 - 1.0);
        let mut hi = h * (k as f64 + 1.0);
        // n . gamma' goes from + to - across the maximum
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if n.dot(curve.derivative(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Length of the chord `{x : n . x = a}` inside the domain, i.e. the
    /// Radon transform of the indicator function at `(n, a)`.
    pub fn chord_length(&self, d: DirOffset) -> Result<f64> {
        match &self.kind {
            DomainKind::Disc { center, radius } => {
                let off = d.a - center.dot(d.n);
                let q = radius * radius - off * off;
                Ok(if q > 0.0 { 2.0 * q.sqrt() } else { 0.0 })
            }
            DomainKind::Ellipse { center, semi_axes } => {
                // image of the unit disc under diag(A, B): R(n, a) = AB/s * 2 sqrt(1 - (a'/s)^2)
                let (sa, sb) = *semi_axes;
                let s = (sa * d.n.x).hypot(sb * d.n.y);
                let t = (d.a - center.dot(d.n)) / s;
                let q = 1.0 - t * t;
                Ok(if q > 0.0 { 2.0 * sa * sb / s * q.sqrt() } else { 0.0 })
            }
            DomainKind::ParametricConvex(_) => self.chord_scanner(d.n)?.chord(d.a),
        }
    }

    /// Chord-length evaluator for many offsets along one direction. For
    /// closed-form kinds it delegates to [`ConvexDomain::chord_length`].
    pub fn chord_scanner(&self, n: Point2) -> Result<ChordScanner<'_>> {
        let curve = match &self.kind {
            DomainKind::ParametricConvex(c) => c.as_ref(),
            _ => return Ok(ChordScanner { domain: self, n, arcs: None }),
        };
        let s_max = self.extremal_param(curve, n);
        let s_min = self.extremal_param(curve, -n);
        let s_lo = s_min;
        let mut s_hi = s_max;
        while s_hi <= s_lo {
            s_hi += TAU;
        }
        while s_hi - s_lo > TAU {
            s_hi -= TAU;
        }
        let h_max = n.dot(curve.point(s_max));
        let h_min = n.dot(curve.point(s_min));

        // at most two crossings per offset: n.gamma is monotone on both arcs
        let m = self.nodes.len();
        let vals: Vec<f64> = self.nodes.iter().map(|nd| n.dot(nd.point)).collect();
        let mut turns = 0;
        for k in 0..m {
            let d0 = vals[(k + 1) % m] - vals[k];
            let d1 = vals[(k + 2) % m] - vals[(k + 1) % m];
            if d0 * d1 < 0.0 {
                turns += 1;
            }
        }
        if turns > 2 {
            return Err(Error::NonConvex(format!(
                "n.gamma has {turns} extrema along direction ({}, {})",
                n.x, n.y
            )));
        }
        Ok(ChordScanner {
            domain: self,
            n,
            arcs: Some(ChordArcs { curve, s_lo, s_hi, h_min, h_max }),
        })
    }
}

struct ChordArcs<'a> {
    curve: &'a dyn BoundaryCurve,
    /// argmin and argmax of n . gamma with s_lo < s_hi <= s_lo + 2π
    s_lo: f64,
    s_hi: f64,
    h_min: f64,
    h_max: f64,
}

pub struct ChordScanner<'a> {
    domain: &'a ConvexDomain,
    n: Point2,
    arcs: Option<ChordArcs<'a>>,
}

impl ChordScanner<'_> {
    pub fn support_interval(&self) -> (f64, f64) {
        match &self.arcs {
            Some(arcs) => (arcs.h_min, arcs.h_max),
            None => self.domain.support_interval(self.n),
        }
    }

    pub fn chord(&self, a: f64) -> Result<f64> {
        let arcs = match &self.arcs {
            Some(arcs) => arcs,
            None => return self.domain.chord_length(DirOffset { n: self.n, a }),
        };
        if !(a > arcs.h_min && a < arcs.h_max) {
            return Ok(0.0);
        }
        let n = self.n;
        let phi = |s: f64| n.dot(arcs.curve.point(s)) - a;
        // increasing on [s_lo, s_hi], decreasing on [s_hi, s_lo + 2π]
        let s1 = bisect(&phi, arcs.s_lo, arcs.s_hi, true)?;
        let s2 = bisect(&phi, arcs.s_hi, arcs.s_lo + TAU, false)?;
        Ok((arcs.curve.point(s1) - arcs.curve.point(s2)).norm())
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, increasing: bool) -> Result<f64> {
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL * 1e-2 || mid == lo || mid == hi {
            return Ok(mid);
        }
        let v = f(mid);
        if !v.is_finite() {
            break;
        }
        if (v < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= ROOT_TOL {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::RootFindFailure { iterations: ROOT_MAX_ITER })
    }
}

fn boundary_eval(kind: &DomainKind, s: f64) -> (Point2, Point2) {
    match kind {
        DomainKind::Disc { center, radius } => {
            let dir = Point2::from_angle(s);
            (*center + dir * *radius, dir.perp() * *radius)
        }
        DomainKind::Ellipse { center, semi_axes } => {
            let (sn, cs) = s.sin_cos();
            (
                *center + Point2::new(semi_axes.0 * cs, semi_axes.1 * sn),
                Point2::new(-semi_axes.0 * sn, semi_axes.1 * cs),
            )
        }
        DomainKind::ParametricConvex(curve) => (curve.point(s), curve.derivative(s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disc() -> ConvexDomain {
        ConvexDomain::disc(Point2::ORIGIN, 1.0, 256).unwrap()
    }

    fn ellipse08() -> ConvexDomain {
        ConvexDomain::ellipse(Point2::ORIGIN, (1.0, 0.8), 256).unwrap()
    }

    #[test]
    fn nhat_ahat_examples() {
        let d = nhat_ahat(Point2::new(0.5, 0.0), Point2::new(-0.5, 0.0)).unwrap();
        assert_eq!(d.n, Point2::new(1.0, 0.0));
        assert_eq!(d.a, 0.0);
        let d = nhat_ahat(Point2::new(1.0, 0.0), Point2::ORIGIN).unwrap();
        assert_eq!(d.n, Point2::new(1.0, 0.0));
        assert_eq!(d.a, 0.5);
    }

    #[test]
    fn nhat_ahat_degenerate() {
        let p = Point2::new(0.3, 0.2);
        assert!(matches!(nhat_ahat(p, p), Err(Error::DegeneratePair { .. })));
    }

    #[test]
    fn support_interval_examples() {
        let disc = unit_disc();
        let e = ellipse08();
        for k in 0..16 {
            let n = Point2::from_angle(0.4 * k as f64);
            let (lo, hi) = disc.support_interval(n);
            assert!((lo + 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
        }
        let (lo, hi) = e.support_interval(Point2::new(1.0, 0.0));
        assert!((lo + 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ellipse_support_matches_dense_sampling() {
        let e = ellipse08();
        for k in 0..12 {
            let alpha = 0.53 * k as f64;
            let n = Point2::from_angle(alpha);
            let c = alpha.cos().powi(2) + 0.64 * alpha.sin().powi(2);
            // dense boundary sampling oracle
            let brute = (0..200_000)
                .map(|j| {
                    let s = TAU * j as f64 / 200_000.0;
                    n.dot(Point2::new(s.cos(), 0.8 * s.sin()))
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = e.support_interval(n);
            assert!((hi - c.sqrt()).abs() < 1e-12);
            assert!((lo + c.sqrt()).abs() < 1e-12);
            assert!((hi - brute).abs() < 1e-9);
            // and the numeric path
            let p = e.as_parametric().unwrap();
            let (plo, phi) = p.support_interval(n);
            assert!((phi - c.sqrt()).abs() < 1e-12 && (plo + c.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn chord_examples() {
        let disc = unit_disc();
        let e1 = Point2::new(1.0, 0.0);
        assert_eq!(disc.chord_length(DirOffset { n: e1, a: 0.0 }).unwrap(), 2.0);
        assert!((disc.chord_length(DirOffset { n: e1, a: 0.6 }).unwrap() - 1.6).abs() < 1e-15);
        let e = ellipse08();
        let ey = Point2::new(0.0, 1.0);
        assert!((e.chord_length(DirOffset { n: ey, a: 0.0 }).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(disc.chord_length(DirOffset { n: e1, a: 1.2 }).unwrap(), 0.0);
    }

    #[test]
    fn parametric_disc_chords_match_closed_form() {
        let disc = unit_disc();
        let p = disc.as_parametric().unwrap();
        for k in 0..20 {
            let n = Point2::from_angle(0.31 * k as f64 + 0.1);
            for &a in &[-0.999, -0.7, 0.0, 0.25, 0.9, 0.99999] {
                let d = DirOffset { n, a };
                let exact = disc.chord_length(d).unwrap();
                let num = p.chord_length(d).unwrap();
                assert!((exact - num).abs() < 1e-9, "n={n:?} a={a}: {exact} vs {num}");
            }
        }
    }

    #[test]
    fn perimeter_is_spectrally_accurate() {
        // ellipse perimeter by Richardson-extrapolated trapezoid on very fine grids
        let reference = {
            let trap = |m: usize| {
                let h = TAU / m as f64;
                (0..m).map(|k| {
                    let s = h * k as f64;
                    (s.sin()).hypot(0.8 * s.cos())
                }).sum::<f64>() * h
            };
            let (t1, t2) = (trap(4096), trap(8192));
            t2 + (t2 - t1) / 3.0
        };
        let e = ellipse08();
        assert!((e.perimeter() - reference).abs() < 1e-8 * reference);
        let disc = unit_disc();
        assert!((disc.perimeter() - TAU).abs() < 1e-12);
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let s = ConvexDomain::superellipse(Point2::ORIGIN, 1.0, 0.8, 4.0, 256).unwrap();
        for nd in s.nodes() {
            assert!((nd.outward_normal.norm() - 1.0).abs() < 1e-12);
            assert!(!s.contains(nd.point + nd.outward_normal * 1e-3));
            assert!(s.contains(nd.point - nd.outward_normal * 1e-3));
        }
    }

    #[test]
    fn superellipse_area() {
        // area of |x/a|^p+|y/b|^p<1 is 4ab Γ(1+1/p)^2 / Γ(1+2/p); for p=4:
        // Γ(1.25) = 0.9064024770554771, Γ(1.5) = 0.886226925452758
        let s = ConvexDomain::superellipse(Point2::ORIGIN, 1.0, 0.8, 4.0, 256).unwrap();
        let exact = 4.0 * 0.8 * 0.906_402_477_055_477_1_f64.powi(2) / 0.886_226_925_452_758;
        assert!((s.area() - exact).abs() < 1e-9, "{} vs {exact}", s.area());
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(ConvexDomain::disc(Point2::ORIGIN, -1.0, 64).is_err());
        assert!(ConvexDomain::ellipse(Point2::ORIGIN, (1.0, 0.0), 64).is_err());
        assert!(ConvexDomain::superellipse(Point2::ORIGIN, 1.0, 1.0, 1.5, 64).is_err());
        assert!(ConvexDomain::disc(Point2::ORIGIN, 1.0, 4).is_err());
    }

    #[derive(Debug)]
    struct Peanut;
    impl BoundaryCurve for Peanut {
        fn point(&self, s: f64) -> Point2 {
            let r = 1.0 + 0.6 * (2.0 * s).cos();
            Point2::from_angle(s) * r
        }
    }

    #[test]
    fn rejects_non_convex_curve() {
        let err = ConvexDomain::parametric(Arc::new(Peanut), 128).unwrap_err();
        assert!(matches!(err, Error::NonConvex(_)), "{err}");
    }

    #[test]
    fn boundary_distance_disc_and_ellipse() {
        let disc = unit_disc();
        assert!((disc.boundary_distance(Point2::new(0.3, 0.4)) - 0.5).abs() < 1e-14);
        let e = ellipse08();
        assert!((e.boundary_distance(Point2::ORIGIN) - 0.8).abs() < 1e-6);
        assert!(e.boundary_distance(Point2::new(0.0, 0.9)) < 0.0);
    }
}
