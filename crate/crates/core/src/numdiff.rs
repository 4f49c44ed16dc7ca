//! Central finite-difference stencils.

// 9-point central weights, 8th order.
const D1_8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2_8: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// First derivative of `f` at `x`, 8th-order central difference.
pub fn d1<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    let mut s = 0.0;
    for (k, w) in D1_8.iter().enumerate() {
        let t = (k + 1) as f64 * h;
        s += w * (f(x + t) - f(x - t));
    }
    s / h
}

/// Second derivative of `f` at `x`, 8th-order central difference.
pub fn d2<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    let mut s = D2_8[0] * f(x);
    for (k, w) in D2_8.iter().enumerate().skip(1) {
        let t = k as f64 * h;
        s += w * (f(x + t) + f(x - t));
    }
    s / (h * h)
}

/// 4th-order first derivative of uniformly spaced samples. The two points at
/// each end are left at zero.
pub fn grid_d1(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    for i in 2..n.saturating_sub(2) {
        out[i] = (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h);
    }
    out
}

/// 4th-order second derivative of uniformly spaced samples. The two points at
/// each end are left at zero.
pub fn grid_d2(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    for i in 2..n.saturating_sub(2) {
        out[i] = (-y[i + 2] + 16.0 * y[i + 1] - 30.0 * y[i] + 16.0 * y[i - 1] - y[i - 2]) / (12.0 * h * h);
    }
    out
}
