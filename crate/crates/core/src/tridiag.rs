//! Symmetric tridiagonal eigenproblems: Sturm bisection and inverse iteration.

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e[i]` couples rows `i` and `i + 1`).
#[derive(Clone, Debug)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len().max(1));
        SymTridiag { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let e2 = if i == 0 { 0.0 } else { self.e[i - 1] * self.e[i - 1] };
            q = self.d[i] - x - if i == 0 { 0.0 } else { e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The k-th smallest eigenvalue (0-based), bisected to machine precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `count` smallest eigenvalues in ascending order.
    pub fn lowest(&self, count: usize) -> Vec<f64> {
        (0..count.min(self.len())).map(|k| self.eigenvalue(k)).collect()
    }

    /// Unit eigenvector for an accurate eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self.d.iter().chain(&self.e).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let shift = lambda + 1e-14 * scale;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64).collect();
        for _ in 0..3 {
            x = self.solve_shifted(shift, &x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        // Fix the sign so the first sizeable component is positive.
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = x.iter().find(|v| v.abs() > 1e-3 * peak) {
            if *first < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
        }
        x
    }

    // (T - shift I) y = b by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            let p = self.d[0] - shift;
            return vec![b[0] / if p == 0.0 { f64::EPSILON } else { p }];
        }
        // Row i holds entries in columns i, i+1, i+2 after elimination.
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut rhs = b.to_vec();
        let tiny = f64::EPSILON * self.bounds().1.abs().max(1.0);

        let mut cur = [self.d[0] - shift, self.e[0], 0.0];
        let mut cur_rhs = rhs[0];
        for i in 0..n - 1 {
            let below = [self.e[i], self.d[i + 1] - shift, if i + 2 < n { self.e[i + 1] } else { 0.0 }];
            let below_rhs = rhs[i + 1];
            let (piv, piv_rhs, other, other_rhs) = if below[0].abs() > cur[0].abs() {
                (below, below_rhs, [cur[1], cur[2], 0.0], cur_rhs)
            } else {
                (cur, cur_rhs, [below[1], below[2], 0.0], below_rhs)
            };
            let other_first = if below[0].abs() > cur[0].abs() { cur[0] } else { below[0] };
            let p0 = if piv[0] == 0.0 { tiny } else { piv[0] };
            u0[i] = p0;
            u1[i] = piv[1];
            u2[i] = piv[2];
            rhs[i] = piv_rhs;
            let f = other_first / p0;
            cur = [other[0] - f * piv[1], other[1] - f * piv[2], 0.0];
            cur_rhs = other_rhs - f * piv_rhs;
        }
        u0[n - 1] = if cur[0] == 0.0 { tiny } else { cur[0] };
        rhs[n - 1] = cur_rhs;

        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * y[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * y[i + 2];
            }
            y[i] = s / u0[i];
        }
        y
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * x[i];
                if i > 0 {
                    s += self.e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.e[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for (k, lam) in t.lowest(5).iter().enumerate() {
            let want = 2.0 - 2.0 * (PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert_relative_eq!(*lam, want, max_relative = 1e-13);
        }
        assert_eq!(t.count_below(0.0), 0);
        assert_eq!(t.count_below(4.0), n);
    }

    #[test]
    fn eigenvectors_satisfy_equation() {
        let n = 200;
        let d: Vec<f64> = (0..n).map(|i| 2.0 + 0.01 * (i as f64).sin()).collect();
        let t = SymTridiag::new(d, vec![-1.0; n - 1]);
        for k in 0..4 {
            let lam = t.eigenvalue(k);
            let v = t.eigenvector(lam);
            let tv = t.apply(&v);
            let res = tv.iter().zip(&v).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
            assert!(res < 1e-10, "k={k} res={res:e}");
            let norm: f64 = v.iter().map(|x| x * x).sum();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_dense_solver() {
        let n = 30;
        let d: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| ((i * 13) % 7) as f64 * 0.3 - 1.0).collect();
        let t = SymTridiag::new(d.clone(), e.clone());
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        });
        let mut want: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (k, w) in want.iter().enumerate() {
            assert!((t.eigenvalue(k) - w).abs() < 1e-12 * 10.0);
        }
    }
}
