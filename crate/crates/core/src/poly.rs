//! Dense real polynomials in one variable, coefficients in ascending order.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn from_roots(scale: f64, roots: &[f64]) -> Self {
        let mut p = Poly::new(vec![scale]);
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, 1.0]));
        }
        p
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::new(Vec::new());
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Interpolates `f` by a polynomial of the given degree at equispaced nodes
    /// on `[lo, hi]`.
    pub fn fit<F: Fn(f64) -> f64>(f: F, degree: usize, lo: f64, hi: f64) -> Poly {
        let n = degree + 1;
        let nodes: Vec<f64> = (0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect();
        let v = DMatrix::from_fn(n, n, |i, j| nodes[i].powi(j as i32));
        let y = DVector::from_iterator(n, nodes.iter().map(|&x| f(x)));
        let c = v.lu().solve(&y).unwrap_or_else(|| DVector::zeros(n));
        Poly::new(c.iter().copied().collect())
    }
}

/// |f - g| scaled by the size of a polynomial of degree `degree` with largest
/// coefficient `cmax` at `x`.
pub fn scaled_gap(f: f64, g: f64, cmax: f64, x: f64, degree: i32) -> f64 {
    let scale = cmax * x.abs().max(1.0).powi(degree);
    if scale == 0.0 {
        (f - g).abs()
    } else {
        (f - g).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roots_and_eval() {
        let p = Poly::from_roots(2.0, &[1.0, -3.0, 0.5]);
        for r in [1.0, -3.0, 0.5] {
            assert_eq!(p.eval(r), 0.0);
        }
        assert_relative_eq!(p.eval(2.0), 2.0 * 1.0 * 5.0 * 1.5);
        assert_eq!(p.coeffs.len(), 4);
    }

    #[test]
    fn fit_recovers_cubic() {
        let q = Poly::new(vec![1.0, -2.0, 0.25, 3.0]);
        let fitted = Poly::fit(|x| q.eval(x), 3, -2.0, 2.0);
        for (a, b) in fitted.coeffs.iter().zip(&q.coeffs) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }
}
