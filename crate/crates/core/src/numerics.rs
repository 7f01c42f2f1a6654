//! Small uniform-grid helpers shared by the forward and inverse solvers:
//! four-point Lagrange interpolation, fourth-order difference stencils and
//! the composite trapezoid rule.

/// Weights of the cubic Lagrange interpolant through nodes `k-1, k, k+1, k+2`
/// evaluated at fractional position `p` measured from node `k`.
#[inline]
pub fn cubic_weights(p: f64) -> [f64; 4] {
    let pm1 = p - 1.0;
    let pm2 = p - 2.0;
    let pp1 = p + 1.0;
    [
        -p * pm1 * pm2 / 6.0,
        pp1 * pm1 * pm2 / 2.0,
        -pp1 * p * pm2 / 2.0,
        pp1 * p * pm1 / 6.0,
    ]
}

/// Cubic interpolation of samples `values[k] = g(start + k * step)`.
///
/// Near the ends the four-point stencil is shifted inwards, so points up to
/// one step outside the table are extrapolated; beyond that the result is 0.
pub fn cubic_interp(values: &[f64], start: f64, step: f64, x: f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let pos = (x - start) / step;
    if !(pos > -1.0 && pos < n as f64) {
        return 0.0;
    }
    if n < 4 {
        // linear fallback for tiny tables
        let k = (pos.floor().max(0.0) as usize).min(n.saturating_sub(2));
        if n == 1 {
            return values[0];
        }
        let p = pos - k as f64;
        return values[k] * (1.0 - p) + values[k + 1] * p;
    }
    let k = (pos.floor() as isize).clamp(1, n as isize - 3) as usize;
    let p = pos - k as f64;
    let w = cubic_weights(p);
    w[0] * values[k - 1] + w[1] * values[k] + w[2] * values[k + 1] + w[3] * values[k + 2]
}

/// Cubic interpolation on a table whose node `k` sits at `k * step`, for
/// points known to lie in `[0, (len - 1) step]`. Hot-loop variant of
/// [`cubic_interp`] without the range handling.
#[inline(always)]
pub fn cubic_interp_from_zero(values: &[f64], inv_step: f64, x: f64) -> f64 {
    let pos = x * inv_step;
    let n = values.len();
    let k = (pos as usize).clamp(1, n - 3);
    let p = pos - k as f64;
    let w = cubic_weights(p);
    let s = &values[k - 1..k + 3];
    w[0] * s[0] + w[1] * s[1] + w[2] * s[2] + w[3] * s[3]
}

/// First derivative with fourth-order centered differences in the interior
/// and fourth-order one-sided stencils on the two nodes at each end.
pub fn deriv4(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 5 {
        // second-order fallback
        for i in 0..n {
            out[i] = match (i, n) {
                (_, 1) => 0.0,
                (0, _) => (values[1] - values[0]) / step,
                (i, n) if i == n - 1 => (values[n - 1] - values[n - 2]) / step,
                (i, _) => (values[i + 1] - values[i - 1]) / (2.0 * step),
            };
        }
        return out;
    }
    let f = values;
    let c = 1.0 / (12.0 * step);
    out[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    out[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for i in 2..n - 2 {
        out[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    }
    let m = n - 1;
    out[m] = -c * (-25.0 * f[m] + 48.0 * f[m - 1] - 36.0 * f[m - 2] + 16.0 * f[m - 3] - 3.0 * f[m - 4]);
    out[m - 1] = -c * (-3.0 * f[m] - 10.0 * f[m - 1] + 18.0 * f[m - 2] - 6.0 * f[m - 3] + f[m - 4]);
    out
}

/// Five-point centered second difference at interior node `k` (needs `2 <= k < n-2`).
#[inline]
pub fn second_diff5(values: &[f64], k: usize, step: f64) -> f64 {
    (-values[k + 2] + 16.0 * values[k + 1] - 30.0 * values[k] + 16.0 * values[k - 1]
        - values[k - 2])
        / (12.0 * step * step)
}

/// Composite trapezoid rule for equally spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interp_reproduces_cubics() {
        let h = 0.1;
        let g = |x: f64| 2.0 * x * x * x - x * x + 0.5 * x - 3.0;
        let vals: Vec<f64> = (0..20).map(|k| g(k as f64 * h)).collect();
        for &x in &[0.0, 0.013, 0.55, 1.234, 1.85, 1.9] {
            assert!((cubic_interp(&vals, 0.0, h, x) - g(x)).abs() < 1e-12, "x = {x}");
        }
        assert_eq!(cubic_interp(&vals, 0.0, h, 5.0), 0.0);
    }

    #[test]
    fn deriv4_exact_on_quartics() {
        let h = 0.05;
        let g = |x: f64| x.powi(4) - 2.0 * x.powi(3) + x;
        let dg = |x: f64| 4.0 * x.powi(3) - 6.0 * x * x + 1.0;
        let vals: Vec<f64> = (0..30).map(|k| g(k as f64 * h)).collect();
        let d = deriv4(&vals, h);
        for (k, v) in d.iter().enumerate() {
            assert!((v - dg(k as f64 * h)).abs() < 1e-10, "node {k}");
        }
    }

    #[test]
    fn trapezoid_linear_exact() {
        let vals: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        assert!((trapezoid(&vals, 0.1) - 0.5).abs() < 1e-14);
    }
}
