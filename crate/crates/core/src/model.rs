//! Physical parameters, conserved-charge sectors and quantum-number bookkeeping.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exact multiple of one half, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Half(i64);

impl Half {
    pub const ZERO: Half = Half(0);
    pub const ONE: Half = Half(2);

    pub const fn from_twice(twice: i64) -> Self {
        Half(twice)
    }

    pub const fn from_int(value: i64) -> Self {
        Half(2 * value)
    }

    /// Converts a float that is within 1e-9 of a multiple of 1/2.
    pub fn from_f64(value: f64) -> Option<Self> {
        let twice = (2.0 * value).round();
        if value.is_finite() && (2.0 * value - twice).abs() < 1e-9 {
            Some(Half(twice as i64))
        } else {
            None
        }
    }

    pub const fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        Half(self.0.abs())
    }

    pub fn max(self, other: Self) -> Self {
        Half(self.0.max(other.0))
    }

    /// Integer value when `self` is a whole number.
    pub fn to_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.0 / 2)
    }
}

impl Add for Half {
    type Output = Half;
    fn add(self, rhs: Half) -> Half {
        Half(self.0 + rhs.0)
    }
}

impl Sub for Half {
    type Output = Half;
    fn sub(self, rhs: Half) -> Half {
        Half(self.0 - rhs.0)
    }
}

impl Neg for Half {
    type Output = Half;
    fn neg(self) -> Half {
        Half(-self.0)
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}", self.value())
        }
    }
}

impl FromStr for Half {
    type Err = Error;

    /// Accepts `3`, `1.5`, `-0.5` or `3/2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidQuantumNumbers(format!("'{s}' is not a multiple of 1/2"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            return match den.trim() {
                "1" => Ok(Half::from_int(num)),
                "2" => Ok(Half(num)),
                _ => Err(bad()),
            };
        }
        let value: f64 = s.parse().map_err(|_| bad())?;
        Half::from_f64(value).ok_or_else(bad)
    }
}

/// Coupling constants of the Hamiltonian: NUT parameter `mu` and potential
/// strengths `c1..c4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl ModelParams {
    pub fn new(mu: f64, c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self> {
        let params = ModelParams { mu, c1, c2, c3, c4 };
        params.validate()?;
        Ok(params)
    }

    /// The pure Kaluza-Klein monopole (all couplings zero).
    pub fn kaluza_klein(mu: f64) -> Result<Self> {
        Self::new(mu, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu, self.c1, self.c2, self.c3, self.c4];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParams(format!("mu must be positive, got {}", self.mu)));
        }
        if self.c2 < 0.0 || self.c3 < 0.0 {
            return Err(Error::InvalidParams(format!("c2 and c3 must be nonnegative, got c2 = {}, c3 = {}", self.c2, self.c3)));
        }
        Ok(())
    }

    pub fn is_kaluza_klein(&self) -> bool {
        self.c1 == 0.0 && self.c2 == 0.0 && self.c3 == 0.0 && self.c4 == 0.0
    }
}

/// Joint eigenvalues of the charge `Q` and the axial angular momentum `L3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sector {
    pub q: Half,
    pub m: Half,
}

impl Sector {
    pub fn new(q: Half, m: Half) -> Result<Self> {
        let sector = Sector { q, m };
        sector.validate()?;
        Ok(sector)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m - self.q).is_integer() {
            return Err(Error::InvalidSector(format!("m - q must be an integer (q = {}, m = {})", self.q, self.m)));
        }
        Ok(())
    }

    /// max(|m|, |q|), which equals (|m + q| + |m - q|) / 2.
    pub fn m_plus(&self) -> Half {
        let twice = (self.m + self.q).abs().twice() + (self.m - self.q).abs().twice();
        Half::from_twice(twice / 2)
    }

    /// Every admissible sector with |q| <= q_max and |m| <= m_max, ordered by (q, m).
    pub fn grid(q_max: Half, m_max: Half) -> Vec<Sector> {
        let mut out = Vec::new();
        for tq in -q_max.twice()..=q_max.twice() {
            let q = Half::from_twice(tq);
            for tm in -m_max.twice()..=m_max.twice() {
                let m = Half::from_twice(tm);
                if let Ok(s) = Sector::new(q, m) {
                    out.push(s);
                }
            }
        }
        out
    }
}

/// Angular indices of a sector: `m1`, `m2` and their integer-shifted parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaPair {
    pub m1: f64,
    pub m2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub m_plus: Half,
}

impl DeltaPair {
    /// (delta1 + delta2) / 2.
    pub fn delta_mean(&self) -> f64 {
        0.5 * (self.delta1 + self.delta2)
    }

    pub fn m_plus_f64(&self) -> f64 {
        self.m_plus.value()
    }
}

// sqrt(nu^2 + c) - |nu| without cancellation for small c.
fn shift(nu: f64, c: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c / ((nu * nu + c).sqrt() + nu.abs())
    }
}

pub fn deltas(sector: Sector, params: &ModelParams) -> DeltaPair {
    let minus = (sector.m - sector.q).value();
    let plus = (sector.m + sector.q).value();
    let delta1 = shift(minus, params.c2);
    let delta2 = shift(plus, params.c3);
    DeltaPair { m1: minus.abs() + delta1, m2: plus.abs() + delta2, delta1, delta2, m_plus: sector.m_plus() }
}

/// Quantized separation constant of the angular equation.
pub fn separation_constant_a(j: Half, dp: &DeltaPair) -> f64 {
    let s = j.value() + dp.delta_mean();
    s * (s + 1.0)
}

/// Spherical quantum numbers `(n_r, j, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SphericalQN {
    pub n_r: u32,
    pub j: Half,
    pub m: Half,
}

impl SphericalQN {
    pub fn principal(&self) -> Half {
        Half::from_int(self.n_r as i64) + self.j + Half::ONE
    }
}

/// Parabolic quantum numbers `(n1, n2)` within a sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ParabolicQN {
    pub n1: u32,
    pub n2: u32,
    pub m: Half,
    pub q: Half,
}

impl ParabolicQN {
    pub fn sector(&self) -> Sector {
        Sector { q: self.q, m: self.m }
    }

    pub fn principal(&self) -> Half {
        Half::from_int((self.n1 + self.n2) as i64) + self.sector().m_plus() + Half::ONE
    }
}

// n - m_plus - 1 as a nonnegative integer, if admissible.
fn excitation(n: Half, sector: Sector) -> Option<u32> {
    let k = (n - sector.m_plus() - Half::ONE).to_integer()?;
    u32::try_from(k).ok()
}

/// All `(n_r, j)` with `n_r + j + 1 = n` and `j >= m_plus`, ordered by increasing `j`.
pub fn enumerate_spherical(n: Half, sector: Sector, _params: &ModelParams) -> Vec<SphericalQN> {
    let Some(top) = excitation(n, sector) else {
        return Vec::new();
    };
    (0..=top).map(|k| SphericalQN { n_r: top - k, j: sector.m_plus() + Half::from_int(k as i64), m: sector.m }).collect()
}

/// All `(n1, n2)` with `n1 + n2 + m_plus + 1 = n`, ordered by increasing `n1`.
pub fn enumerate_parabolic(n: Half, sector: Sector, _params: &ModelParams) -> Vec<ParabolicQN> {
    let Some(top) = excitation(n, sector) else {
        return Vec::new();
    };
    (0..=top).map(|n1| ParabolicQN { n1, n2: top - n1, m: sector.m, q: sector.q }).collect()
}
