use std::f64::consts::{PI, TAU};

use convexbp::grid::Lattice;
use convexbp::radon_hilbert::{apply_k, hilbert_pv, kernel_weight, KernelCache, KernelConfig, UniformTable};
use convexbp::{nhat_ahat, ConvexDomain, GridImage, Phantom, Point2};

fn bump_table(c: f64, w: f64) -> UniformTable {
    UniformTable::from_fn(-3.0, 2e-3, 3001, |a| {
        let s = (a - c) / w;
        if s.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    })
}

fn dot(a: &UniformTable, b: &UniformTable) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() * a.da
}

#[test]
fn hilbert_is_skew_adjoint() {
    let (p, q) = (bump_table(-0.4, 0.9), bump_table(0.7, 0.5));
    let (hp, hq) = (hilbert_pv(&p), hilbert_pv(&q));
    let lhs = dot(&hp, &q);
    let rhs = -dot(&p, &hq);
    assert!(lhs.abs() > 1e-2);
    assert!((lhs - rhs).abs() < 1e-6 * lhs.abs(), "{lhs} vs {rhs}");
}

fn superellipse() -> ConvexDomain {
    ConvexDomain::superellipse(Point2::ORIGIN, 1.0, 0.8, 4.0, 128).unwrap()
}

#[test]
fn apply_k_is_linear() {
    let d = superellipse();
    let cfg = KernelConfig { n_dirs: 256, ..Default::default() };
    let cache = KernelCache::new(&d, cfg).unwrap();
    let lat = Lattice::covering(&d, 24).unwrap();
    let f = Phantom::three_bumps(0.8).rasterize(lat);
    let g = GridImage::from_fn(lat, |p| if d.boundary_distance(p) > 0.2 { p.x * p.y - 0.3 } else { 0.0 });
    let (alpha, beta) = (1.7, -0.6);
    let mut h = f.clone();
    for (k, v) in h.values.iter_mut().enumerate() {
        *v = alpha * f.values[k] + beta * g.values[k];
    }
    for x0 in [Point2::new(0.1, 0.2), Point2::new(-0.45, -0.3)] {
        let (kf, kg, kh) =
            (apply_k(&cache, &f, x0).unwrap(), apply_k(&cache, &g, x0).unwrap(), apply_k(&cache, &h, x0).unwrap());
        let comb = alpha * kf + beta * kg;
        assert!((kh - comb).abs() <= 1e-12 * (kf.abs() + kg.abs()).max(1e-300), "{kh} vs {comb}");
    }
}

/// Hilbert transform of a chord profile from its sine series in `θ`, with
/// `a = c - w cos θ`: if `R(a(θ)) = Σ b_n sin nθ` then
/// `(1/π) PV ∫ R(s)/(a - s) ds = -Σ b_n cos nθ_a` (Glauert's integrals).
struct SpectralHilbert {
    c: f64,
    w: f64,
    b: Vec<f64>,
}

impl SpectralHilbert {
    fn new(d: &ConvexDomain, n: Point2, m: usize) -> Self {
        let (lo, hi) = d.support_interval(n);
        let (c, w) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let scan = d.chord_scanner(n).unwrap();
        let h = PI / m as f64;
        let samples: Vec<f64> = (0..=m).map(|k| scan.chord(c - w * (k as f64 * h).cos()).unwrap()).collect();
        let b = (1..m)
            .map(|j| {
                let s: f64 = (1..m).map(|k| samples[k] * (j as f64 * k as f64 * h).sin()).sum();
                2.0 / m as f64 * s
            })
            .collect();
        Self { c, w, b }
    }

    fn eval(&self, a: f64) -> f64 {
        let th = ((self.c - a) / self.w).acos();
        -self.b.iter().enumerate().map(|(j, bj)| bj * ((j + 1) as f64 * th).cos()).sum::<f64>()
    }

    /// Five-point second difference at steps `h` and `h/2`, Richardson-combined.
    fn second_deriv(&self, a: f64, h: f64) -> f64 {
        let d2 = |h: f64| {
            (-self.eval(a + 2.0 * h) + 16.0 * self.eval(a + h) - 30.0 * self.eval(a) + 16.0 * self.eval(a - h)
                - self.eval(a - 2.0 * h))
                / (12.0 * h * h)
        };
        let (coarse, fine) = (d2(h), d2(0.5 * h));
        fine + (fine - coarse) / 15.0
    }
}

#[test]
fn superellipse_kernel_weight_matches_dense_oracle() {
    let d = superellipse();
    let cfg = KernelConfig::default();
    let cache = KernelCache::new(&d, cfg).unwrap();
    // offsets along cached directions so the nearest-direction lookup is exact
    let cases = [(128usize, Point2::new(-0.3, -0.1), 0.7), (160, Point2::new(0.2, -0.25), 0.5), (900, Point2::new(-0.1, 0.3), 0.6)];
    for (k, x0, rho) in cases {
        let dir = Point2::from_angle(TAU * k as f64 / cfg.n_dirs as f64);
        let x1 = x0 + dir * rho;
        assert!(d.contains(x1));
        let w = kernel_weight(&cache, x1, x0).unwrap();
        let line = nhat_ahat(x1, x0).unwrap();
        // four times the profile resolution of the library table
        let oracle = SpectralHilbert::new(&d, line.n, 4000);
        let width = 2.0 * oracle.w;
        let expected = oracle.second_deriv(line.a, 0.01 * width) / (x1 - x0).norm();
        assert!(expected.abs() > 1e-3, "degenerate case {k}: {expected}");
        assert!((w - expected).abs() <= 1e-2 * expected.abs(), "direction {k}: {w} vs {expected}");
    }
}

#[test]
fn spectral_oracle_reproduces_disc() {
    let d = ConvexDomain::disc(Point2::ORIGIN, 1.0, 64).unwrap().as_parametric().unwrap();
    let o = SpectralHilbert::new(&d, Point2::from_angle(0.4), 256);
    for &a in &[-0.8, -0.1, 0.5] {
        assert!((o.eval(a) - 2.0 * a).abs() < 1e-9);
        assert!(o.second_deriv(a, 0.02).abs() < 1e-6);
    }
}
