//! Terminating special functions used by bound-state wavefunctions.

use crate::error::{Error, Result};

/// Rising factorial `(a)_k`.
pub fn pochhammer(a: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a + i as f64))
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy, Debug)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `F(-n, b, x)`, the Kummer function with a nonpositive integer first index.
pub fn kummer_terminating(n: u32, b: f64, x: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("lower index b must be positive, got {b}")));
    }
    let mut acc = CompensatedSum::default();
    let mut term = 1.0;
    acc.add(term);
    for k in 0..n {
        let kf = k as f64;
        term *= (kf - n as f64) * x / ((b + kf) * (kf + 1.0));
        acc.add(term);
    }
    Ok(acc.value())
}

/// Jacobi polynomial `P_n^{(a,b)}(x)` by the three-term recurrence in `n`.
pub fn jacobi(n: u32, a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::Domain(format!("Jacobi indices must exceed -1, got a = {a}, b = {b}")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut p_prev = 1.0;
    let mut p = 0.5 * (a - b + (a + b + 2.0) * x);
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + a + b;
        let c1 = 2.0 * k * (k + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
        let next = (c2 * p - c3 * p_prev) / c1;
        p_prev = p;
        p = next;
    }
    Ok(p)
}
