use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridImage;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub rel_l2: f64,
    pub rel_linf: f64,
}

/// Relative L2 and L-infinity errors of `recon` against `reference` over the
/// cells where `mask` is true (all cells when `mask` is `None`).
pub fn error_metrics(recon: &GridImage, reference: &GridImage, mask: Option<&[bool]>) -> Result<ErrorMetrics> {
    recon.check_same_lattice(reference)?;
    if let Some(m) = mask {
        if m.len() != recon.values.len() {
            return Err(Error::LatticeMismatch(format!("mask has {} cells, image {}", m.len(), recon.values.len())));
        }
    }
    let (mut num2, mut den2, mut num_inf, mut den_inf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, (&r, &f)) in recon.values.iter().zip(&reference.values).enumerate() {
        if mask.is_some_and(|m| !m[k]) {
            continue;
        }
        let e = r - f;
        num2 += e * e;
        den2 += f * f;
        num_inf = num_inf.max(e.abs());
        den_inf = den_inf.max(f.abs());
    }
    let ratio = |n: f64, d: f64| if d > 0.0 { n / d } else if n == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(ErrorMetrics { rel_l2: ratio(num2.sqrt(), den2.sqrt()), rel_linf: ratio(num_inf, den_inf) })
}

/// `||a - b||_2 / ||b||_2` over the masked cells.
pub fn rel_l2(a: &GridImage, b: &GridImage, mask: Option<&[bool]>) -> Result<f64> {
    Ok(error_metrics(a, b, mask)?.rel_l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::grid::Lattice;

    fn img(vals: impl Fn(Point2) -> f64) -> GridImage {
        let lat = Lattice::new(8, 8, Point2::ORIGIN, (0.1, 0.1)).unwrap();
        GridImage::from_fn(lat, vals)
    }

    #[test]
    fn identical_images() {
        let a = img(|p| p.x.sin() + p.y);
        let m = error_metrics(&a, &a, None).unwrap();
        assert_eq!((m.rel_l2, m.rel_linf), (0.0, 0.0));
    }

    #[test]
    fn doubled_image() {
        let a = img(|p| p.x.sin() + p.y);
        let b = img(|p| 2.0 * (p.x.sin() + p.y));
        let m = error_metrics(&b, &a, None).unwrap();
        assert!((m.rel_l2 - 1.0).abs() < 1e-15);
        assert!((m.rel_linf - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_mismatch() {
        let a = img(|_| 1.0);
        let lat = Lattice::new(8, 9, Point2::ORIGIN, (0.1, 0.1)).unwrap();
        let b = GridImage::zeros(lat);
        assert!(matches!(error_metrics(&a, &b, None), Err(Error::LatticeMismatch(_))));
    }
}
