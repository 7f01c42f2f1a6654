use convexbp::forward::BoundaryTable;
use convexbp::io::{self, BserKind};
use convexbp::{Bump, ConvexDomain, Field2, GridImage, Lattice, Phantom, Point2};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1e-6f64..1e-6, Just(0.0), Just(-0.0), Just(f64::MIN_POSITIVE), Just(f64::MAX)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid2_round_trip_is_bit_exact(nx in 2usize..12, ny in 2usize..12, ox in -5.0f64..5.0, h in 1e-4f64..1.0,
                                     seed in prop::collection::vec(finite(), 144)) {
        let lat = Lattice::new(nx, ny, Point2::new(ox, -ox), (h, 1.5 * h)).unwrap();
        let mut img = GridImage::zeros(lat);
        for (k, v) in img.values.iter_mut().enumerate() {
            *v = seed[k];
        }
        let back = io::parse_grid2(&io::format_grid2(&img), "mem").unwrap();
        prop_assert_eq!(back.nx, nx);
        prop_assert_eq!(back.ny, ny);
        prop_assert_eq!(back.origin.x.to_bits(), img.origin.x.to_bits());
        prop_assert_eq!(back.spacing.1.to_bits(), img.spacing.1.to_bits());
        for (a, b) in back.values.iter().zip(&img.values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bser_round_trip_is_bit_exact(n_c in 1usize..6, n_s in 1usize..40, step in 1e-5f64..0.1,
                                    vals in prop::collection::vec(finite(), 240), wave in any::<bool>()) {
        let centers: Vec<Point2> = (0..n_c).map(|i| Point2::from_angle(0.7 * i as f64) * 1.3).collect();
        let mut t = BoundaryTable::zeros(centers, step, n_s);
        for (k, v) in t.values.iter_mut().enumerate() {
            *v = vals[k];
        }
        let kind = if wave { BserKind::Wave } else { BserKind::Means };
        let (k2, back) = io::parse_bser(&io::format_bser(&t, kind), "mem").unwrap();
        prop_assert_eq!(k2, kind);
        prop_assert_eq!(back.step.to_bits(), step.to_bits());
        prop_assert_eq!(&back.centers, &t.centers);
        for (a, b) in back.values.iter().zip(&t.values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn truncated_and_padded_files_are_rejected() {
    let lat = Lattice::new(3, 2, Point2::ORIGIN, (0.5, 0.5)).unwrap();
    let text = io::format_grid2(&GridImage::from_fn(lat, |p| p.x + p.y));
    let cut: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    assert!(io::parse_grid2(&cut, "cut").is_err());
    assert!(io::parse_grid2(&format!("{text}1 2 3\n"), "pad").is_err());
    assert!(io::parse_grid2(&text.replacen("GRID2", "GRID3", 1), "hdr").is_err());
}

#[test]
fn phantom_file_round_trip() {
    let d = ConvexDomain::ellipse(Point2::ORIGIN, (1.0, 0.7), 64).unwrap();
    let p = Phantom::random(&d, 5, 7, 0.05).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    io::write_phantom(&p, &path).unwrap();
    assert_eq!(io::read_phantom(&path).unwrap(), p);
}

#[test]
fn random_phantoms_are_reproducible_and_supported() {
    let d = ConvexDomain::superellipse(Point2::ORIGIN, 1.0, 0.8, 4.0, 128).unwrap();
    let a = Phantom::random(&d, 4, 11, 0.04).unwrap();
    assert_eq!(a, Phantom::random(&d, 4, 11, 0.04).unwrap());
    assert_ne!(a, Phantom::random(&d, 4, 12, 0.04).unwrap());
    a.check_support(&d, 0.04).unwrap();
}

#[test]
fn rasterize_samples_cell_centres() {
    let p = Phantom::three_bumps(0.8);
    let lat = Lattice::new(20, 16, Point2::new(-1.0, -0.8), (0.1, 0.1)).unwrap();
    let img = p.rasterize(lat);
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            let c = Point2::new(-1.0 + 0.1 * (i as f64 + 0.5), -0.8 + 0.1 * (j as f64 + 0.5));
            assert!((img.get(i, j) - p.eval(c)).abs() <= 1e-14);
        }
    }
}

// The bump is C-infinity, so second differences converge at the edge of its
// support just as they do in the interior; a kink would leave an O(1/h) term.
#[test]
fn bump_is_smooth_across_support_edge() {
    let b = Bump { center: Point2::ORIGIN, radius: 0.4, amplitude: 1.0 };
    let d2 = |x: f64, h: f64| {
        (b.eval(Point2::new(x + h, 0.0)) - 2.0 * b.eval(Point2::new(x, 0.0)) + b.eval(Point2::new(x - h, 0.0))) / (h * h)
    };
    for &x in &[0.2, 0.36, 0.38, 0.395, 0.4, 0.41] {
        let (c, f) = (d2(x, 4e-3), d2(x, 2e-3));
        assert!((c - f).abs() <= 0.1 * f.abs().max(1.0), "x = {x}: {c} vs {f}");
    }
}
