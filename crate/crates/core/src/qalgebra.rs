//! The quadratic symmetry algebra, its deformed-oscillator realizations and
//! the algebraic energy spectrum.
//!
//! Structure constants use neutral names:
//!
//! ```text
//! [A, C] = r_aa A^2 + r_ab {A, B} + r_a A + r_b B + r_1
//! [B, C] = s_aa A^2 - r_ab B^2 - r_aa {A, B} + s_a A - r_a B + s_1
//! ```
//!
//! | neutral | symbol in the usual presentation |
//! |---------|----------------------------------|
//! | `r_aa`  | alpha (also written beta)        |
//! | `r_ab`  | gamma                            |
//! | `r_a`   | delta                            |
//! | `r_b`   | epsilon                          |
//! | `r_1`   | zeta                             |
//! | `s_aa`  | a                                |
//! | `s_a`   | d                                |
//! | `s_1`   | z                                |

use nalgebra::DMatrix;
use serde::Serialize;

use crate::calibration::{Convention, Mode};
use crate::error::{Error, Result};
use crate::model::{deltas, ModelParams, Sector};
use crate::poly::Poly;
use crate::spectra::{EnergySolution, Route};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StructureConstants {
    pub r_aa: f64,
    pub r_ab: f64,
    pub r_a: f64,
    pub r_b: f64,
    pub r_1: f64,
    pub s_aa: f64,
    pub s_a: f64,
    pub s_1: f64,
}

impl StructureConstants {
    pub fn zero() -> Self {
        StructureConstants { r_aa: 0.0, r_ab: 0.0, r_a: 0.0, r_b: 0.0, r_1: 0.0, s_aa: 0.0, s_a: 0.0, s_1: 0.0 }
    }
}

/// `S = q^2 + (c4 - 2E) mu^2`, which vanishes at the continuum threshold.
pub fn gap_of(energy: f64, sector: Sector, params: &ModelParams) -> f64 {
    let q = sector.q.value();
    q * q + (params.c4 - 2.0 * energy) * params.mu * params.mu
}

/// Inverse of [`gap_of`].
pub fn energy_of_gap(gap: f64, sector: Sector, params: &ModelParams) -> f64 {
    let q = sector.q.value();
    let mu2 = params.mu * params.mu;
    (q * q + params.c4 * mu2 - gap) / (2.0 * mu2)
}

// q^2 / mu + c1 / 2 - c4 mu
fn charge_shift(sector: Sector, params: &ModelParams) -> f64 {
    let q = sector.q.value();
    q * q / params.mu + 0.5 * params.c1 - params.c4 * params.mu
}

/// Structure constants of the monopole's algebra with `H -> E`, `Q -> q`, `L3 -> m`.
pub fn structure_constants(energy: f64, sector: Sector, params: &ModelParams) -> StructureConstants {
    structure_constants_gap(gap_of(energy, sector, params), sector, params)
}

/// [`structure_constants`] parametrized by the threshold gap `S`. Near the
/// threshold `E` loses the digits of `S` to cancellation, so representations
/// are built from `S` directly.
pub fn structure_constants_gap(gap: f64, sector: Sector, params: &ModelParams) -> StructureConstants {
    let ModelParams { mu, c1, c2, c3, c4 } = *params;
    let q = sector.q.value();
    let m = sector.m.value();
    let mu2 = mu * mu;
    let g = charge_shift(sector, params);
    StructureConstants {
        r_aa: 0.0,
        r_ab: 2.0,
        r_a: 0.0,
        r_b: c2 + c3,
        r_1: (2.0 * m * q + 0.5 * (c3 - c2)) * (g + gap / mu),
        s_aa: 0.0,
        s_a: -4.0 * gap / mu2,
        s_1: gap * gap / (2.0 * mu2) + gap * (0.5 * c1 / mu - c4 + (2.0 * m * m + 3.0 * q * q - 2.0) / mu2) + 0.5 * g * g,
    }
}

/// Reconciled Casimir value in terms of the threshold gap `S`.
pub fn casimir_gap(gap: f64, sector: Sector, params: &ModelParams) -> f64 {
    let ModelParams { mu, c2, c3, .. } = *params;
    let q = sector.q.value();
    let m = sector.m.value();
    let g = charge_shift(sector, params) + gap / mu;
    let p = 0.25 * (c2 + c3) + m * m + q * q;
    p * g * g + gap / (mu * mu) * (c2 * (1.0 - (m + q).powi(2)) + c3 * (1.0 - (m - q).powi(2)) - c2 * c3 + 4.0 * m * m * q * q)
}

/// Casimir value on a sector at energy `E`. The printed polynomial has three
/// coefficient typos which the reconciled mode corrects: `E^2 m` should read
/// `E^2 m^2`, `c1^4 m^2 / 4` should read `c1^2 m^2 / 4`, and `c1^2` inside the
/// `q^2` coefficient should read `c1^2 / 4`.
pub fn casimir_value(energy: f64, sector: Sector, params: &ModelParams, mode: Mode) -> f64 {
    let ModelParams { mu, c1, c2, c3, c4 } = *params;
    let h = energy;
    let q = sector.q.value();
    let l = sector.m.value();
    let (mu2, q2, l2) = (mu * mu, q * q, l * l);
    let (l_first, c1_l2, c1_q2) = match mode {
        Mode::Printed => (l, c1.powi(4) / 4.0, c1 * c1),
        Mode::Reconciled => (l2, c1 * c1 / 4.0, c1 * c1 / 4.0),
    };
    4.0 * mu2 * h * h * l_first + 4.0 * mu2 * h * h * q2 + mu2 * (c2 + c3) * h * h
        - 8.0 * h * q2 * q2
        - 16.0 * h * q2 * l2
        - 2.0 * c1 * mu * h * q2
        + 2.0 * (c2 + c3 - c1 * mu) * h * l2
        + (-2.0 * c2 - 2.0 * c3 + 2.0 * c2 * c3 - 0.5 * c1 * c2 * mu - 0.5 * c1 * c3 * mu) * h
        + 4.0 * (c2 - c3) * h * q * l
        + 4.0 / mu2 * q2 * q2 * q2
        + 8.0 / mu2 * q2 * q2 * l2
        + 2.0 * c1 / mu * q2 * q2
        + (-c2 - c3 + 2.0 * c1 * mu + 4.0 * c4 * mu2) / mu2 * q2 * l2
        - 2.0 * (c2 - c3) / mu2 * l * q2 * q
        + (4.0 * (c2 + c3 - c2 * c3) + 2.0 * mu * c1 * (c2 + c3) + 4.0 * mu2 * (c1_q2 - c2 * c4 - c3 * c4)) / (4.0 * mu2) * q2
        - 2.0 * c4 * (c2 - c3) * q * l
        + (c1_l2 - c2 * c4 - c3 * c4) * l2
        + (c1 * c1 * (c2 + c3) + 16.0 * c4 * (c2 + c3 - c2 * c3)) / 16.0
}

fn anti(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y + y * x
}

/// Casimir element evaluated on matrices.
pub fn casimir_general(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, k: &StructureConstants) -> Result<DMatrix<f64>> {
    let terms = casimir_terms(a, b, c, k)?;
    let mut sum = DMatrix::zeros(a.nrows(), a.nrows());
    for t in terms {
        sum += t;
    }
    Ok(sum)
}

/// The individual terms of [`casimir_general`], for residual scaling.
pub fn casimir_terms(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, k: &StructureConstants) -> Result<Vec<DMatrix<f64>>> {
    let n = a.nrows();
    for (name, m) in [("A", a), ("B", b), ("C", c)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
        }
    }
    let a2 = a * a;
    let b2 = b * b;
    Ok(vec![
        c * c,
        -anti(&a2, b) * k.r_aa,
        -anti(a, &b2) * k.r_ab,
        anti(a, b) * (k.r_aa * k.r_ab - k.r_a),
        &b2 * (k.r_ab * k.r_ab - k.r_b),
        b * (k.r_ab * k.r_a - 2.0 * k.r_1),
        &a2 * a * (2.0 * k.s_aa / 3.0),
        &a2 * (k.s_a + k.s_aa * k.r_ab / 3.0 + k.r_aa * k.r_aa),
        a * (k.s_aa * k.r_b / 3.0 + k.r_aa * k.r_a + 2.0 * k.s_1),
    ])
}

/// Structure function of the `gamma != 0` realization at `N = x`.
///
/// The printed form carries `(t - 1)^2` in the `48 gamma^6` term (`t = 2(N+u)`);
/// the relations only close with `(t - 1)^4`, which the reconciled mode uses.
pub fn phi_general(x: f64, u: f64, k: &StructureConstants, casimir: f64, mode: Mode) -> Result<f64> {
    if k.r_ab == 0.0 {
        return Err(Error::GammaZero);
    }
    let StructureConstants { r_aa: al, r_ab: ga, r_a: de, r_b: ep, r_1: ze, s_aa: a, s_a: d, s_1: z } = *k;
    let xx = x + u;
    let t = 2.0 * xx;
    let tm1 = t - 1.0;
    let w48 = al * al * ep - al * de * ga + a * ep * ga - d * ga * ga;
    let p48 = match mode {
        Mode::Printed => 2,
        Mode::Reconciled => 4,
    };
    let g2 = ga * ga;
    let g4 = g2 * g2;
    let g6 = g4 * g2;
    let g8 = g4 * g4;
    let v = al * ep * ep - 2.0 * de * ep * ga + 4.0 * g2 * ze;
    Ok(-3072.0 * g6 * casimir * tm1 * tm1 - 48.0 * g6 * w48 * (t - 3.0) * tm1.powi(p48) * (t + 1.0)
        + g8 * (3.0 * al * al + 4.0 * a * ga) * (t - 3.0).powi(2) * tm1.powi(4) * (t + 1.0).powi(2)
        + 768.0 * v * v
        + 32.0
            * g4
            * tm1
            * tm1
            * (-1.0 - 12.0 * xx + 12.0 * xx * xx)
            * (3.0 * al * al * ep * ep - 6.0 * al * de * ep * ga + 2.0 * a * ep * ep * ga + 2.0 * de * de * g2 - 4.0 * d * ep * g2
                + 8.0 * g2 * ga * z
                + 4.0 * al * g2 * ze)
        - 256.0
            * g2
            * tm1
            * tm1
            * (3.0 * al * al * ep * ep * ep - 9.0 * al * de * ep * ep * ga + a * ep * ep * ep * ga + 6.0 * de * de * ep * g2
                - 3.0 * d * ep * ep * g2
                + 2.0 * de * de * g4
                + 2.0 * d * ep * g4
                + 12.0 * ep * g2 * ga * z
                - 4.0 * g4 * ga * z
                + 12.0 * al * ep * g2 * ze
                - 12.0 * de * g2 * ga * ze
                + 4.0 * al * g4 * ze))
}

/// Structure function of the `gamma = 0, epsilon != 0` realization at `N = x`.
pub fn phi_gamma_zero(x: f64, u: f64, k: &StructureConstants, casimir: f64) -> Result<f64> {
    if k.r_ab != 0.0 {
        return Err(Error::Domain("this realization needs gamma = 0".into()));
    }
    if k.r_b == 0.0 {
        return Err(Error::EpsilonZero);
    }
    if k.r_b < 0.0 {
        return Err(Error::Domain("epsilon must be positive for a real realization".into()));
    }
    let StructureConstants { r_aa: al, r_a: de, r_b: ep, r_1: ze, s_aa: a, s_a: d, s_1: z, .. } = *k;
    let se = ep.sqrt();
    let xx = x + u;
    let dse = de / se;
    let zep = ze / ep;
    Ok(0.25 * (-casimir / ep - z / se - dse * zep + zep * zep)
        - (3.0 * d - a * se - 3.0 * al * dse + 3.0 * dse * dse - 6.0 * z / se + 6.0 * al * zep - 6.0 * dse * zep) / 12.0 * xx
        + 0.25 * (al * al + d - a * se - 3.0 * al * dse + dse * dse + 2.0 * al * zep) * xx * xx
        - (3.0 * al * al - a * se - 3.0 * al * dse) / 6.0 * xx.powi(3)
        + 0.25 * al * al * xx.powi(4))
}

/// Expanded structure function of the monopole's algebra at `N = x`.
pub fn phi_specific(x: f64, u: f64, energy: f64, sector: Sector, params: &ModelParams) -> f64 {
    let ModelParams { mu, c1, c2, c3, c4 } = *params;
    let q = sector.q.value();
    let m = sector.m.value();
    let e = energy;
    let xx = x + u;
    let w = 1.0 - 2.0 * xx;
    let angular = c2 * c2 - 2.0 * c2 * (c3 + w * w + 4.0 * m * q)
        + (c3 + (1.0 + 2.0 * m - 2.0 * xx) * (-1.0 + 2.0 * xx + 2.0 * q))
            * (c3 - (-1.0 + 2.0 * m + 2.0 * xx) * (-1.0 + 2.0 * xx - 2.0 * q));
    let radial = -16.0 * q.powi(4) + 4.0 * q * q * (w * w - 2.0 * c1 * mu + 8.0 * e * mu * mu)
        - mu * mu * (4.0 * (-c4 + 2.0 * e) * w * w + (c1 - 4.0 * e * mu).powi(2));
    -12288.0 / (mu * mu) * angular * radial
}

/// Prefactor and six roots (in `N + u`) of the factored structure function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactoredPhi {
    pub prefactor: f64,
    pub roots: [f64; 6],
}

impl FactoredPhi {
    pub fn eval_at(&self, xx: f64) -> f64 {
        self.roots.iter().fold(self.prefactor, |acc, r| acc * (xx - r))
    }

    pub fn poly(&self) -> Poly {
        Poly::from_roots(self.prefactor, &self.roots)
    }
}

/// `(4q^2 + mu (c1 - 4 E mu)) / (4 sqrt(q^2 + (c4 - 2E) mu^2))`, the half-width
/// of the energy-dependent root pair.
pub fn root_offset(energy: f64, sector: Sector, params: &ModelParams) -> Result<f64> {
    root_offset_gap(gap_of(energy, sector, params), sector, params)
}

pub fn root_offset_gap(gap: f64, sector: Sector, params: &ModelParams) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::ThresholdEnergy);
    }
    Ok((params.mu * charge_shift(sector, params) + gap) / (2.0 * gap.sqrt()))
}

pub fn factored_phi(energy: f64, sector: Sector, params: &ModelParams, conv: &Convention) -> Result<FactoredPhi> {
    factored_phi_gap(gap_of(energy, sector, params), sector, params, conv)
}

pub fn factored_phi_gap(gap: f64, sector: Sector, params: &ModelParams, conv: &Convention) -> Result<FactoredPhi> {
    let mu = params.mu;
    let q = sector.q.value();
    let dp = deltas(sector, params);
    let r = root_offset_gap(gap, sector, params)?;
    let charge_term = match conv.mode {
        Mode::Printed => q,
        Mode::Reconciled => conv.cal.phi_prefactor_sign * q * q,
    };
    // charge_term - c4 mu^2 + 2 E mu^2
    let prefactor = 3.0 * 1_048_576.0 / (mu * mu) * ((charge_term + q * q) - gap);
    let (dm, sm) = (dp.m1 - dp.m2, dp.m1 + dp.m2);
    Ok(FactoredPhi { prefactor, roots: [0.5 * (1.0 - dm), 0.5 * (1.0 + dm), 0.5 * (1.0 - sm), 0.5 * (1.0 + sm), 0.5 - r, 0.5 + r] })
}

pub fn phi_factored(x: f64, u: f64, energy: f64, sector: Sector, params: &ModelParams, conv: &Convention) -> Result<f64> {
    Ok(factored_phi(energy, sector, params, conv)?.eval_at(x + u))
}

/// Casimir value that makes the general structure function coincide with the
/// expanded one. Used to check the closed form independently.
pub fn casimir_from_structure_function(energy: f64, sector: Sector, params: &ModelParams) -> Result<f64> {
    let k = structure_constants(energy, sector, params);
    // Phi_general is affine in K with slope -3072 gamma^6 (2X - 1)^2; sample
    // away from X = 1/2 and average over a few points.
    let g6 = k.r_ab.powi(6);
    let xs = [2.0, 3.5, -1.75, 5.0];
    let mut acc = 0.0;
    for &xx in &xs {
        let base = phi_general(xx, 0.0, &k, 0.0, Mode::Reconciled)?;
        let target = phi_specific(xx, 0.0, energy, sector, params);
        acc += (base - target) / (3072.0 * g6 * (2.0 * xx - 1.0).powi(2));
    }
    Ok(acc / xs.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealizationCase {
    GammaNonzero,
    GammaZero,
}

/// `A(N)`, `b(N)`, `rho(N)` and `Phi(N)` of a deformed-oscillator realization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OscillatorRealization {
    pub case: RealizationCase,
    pub u: f64,
    pub consts: StructureConstants,
    pub casimir: f64,
    pub mode: Mode,
}

impl OscillatorRealization {
    pub fn new(consts: StructureConstants, casimir: f64, u: f64, mode: Mode) -> Result<Self> {
        let case = if consts.r_ab != 0.0 {
            RealizationCase::GammaNonzero
        } else if consts.r_b != 0.0 {
            RealizationCase::GammaZero
        } else {
            return Err(Error::EpsilonZero);
        };
        Ok(OscillatorRealization { case, u, consts, casimir, mode })
    }

    /// Eigenvalue of `A` on the `N = n` basis vector.
    pub fn a_of(&self, n: f64) -> f64 {
        let k = &self.consts;
        let xx = n + self.u;
        match self.case {
            RealizationCase::GammaNonzero => {
                let g = k.r_ab;
                let shape = match self.mode {
                    Mode::Printed => xx,
                    Mode::Reconciled => xx * xx,
                };
                0.5 * g * (shape - 0.25 - k.r_b / (g * g))
            }
            RealizationCase::GammaZero => k.r_b.sqrt() * xx,
        }
    }

    /// Diagonal part `b(N)` of `B`.
    pub fn b_of(&self, n: f64) -> f64 {
        let k = &self.consts;
        let xx = n + self.u;
        match self.case {
            RealizationCase::GammaNonzero => {
                let g = k.r_ab;
                let y = xx * xx - 0.25;
                let num = k.r_aa * k.r_b * k.r_b - 2.0 * k.r_a * g * k.r_b + 4.0 * g * g * k.r_1;
                let pole = if num == 0.0 { 0.0 } else { num / (4.0 * g.powi(4) * y) };
                -0.25 * k.r_aa * y + (k.r_aa * k.r_b - k.r_a * g) / (2.0 * g * g) - pole
            }
            RealizationCase::GammaZero => {
                let se = k.r_b.sqrt();
                -k.r_aa * xx * xx - k.r_a / se * xx - k.r_1 / k.r_b
            }
        }
    }

    pub fn rho_of(&self, n: f64) -> f64 {
        let xx = n + self.u;
        match self.case {
            RealizationCase::GammaNonzero => {
                let g = self.consts.r_ab;
                1.0 / (3.0 * 4096.0 * g.powi(8) * xx * (1.0 + xx) * (1.0 + 2.0 * xx).powi(2))
            }
            RealizationCase::GammaZero => 1.0,
        }
    }

    pub fn phi(&self, n: f64) -> Result<f64> {
        match self.case {
            RealizationCase::GammaNonzero => phi_general(n, self.u, &self.consts, self.casimir, self.mode),
            RealizationCase::GammaZero => phi_gamma_zero(n, self.u, &self.consts, self.casimir),
        }
    }
}

/// A finite-dimensional unitary representation: dimension `p + 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepSolution {
    pub u: f64,
    pub energy: f64,
    /// Threshold gap `S` at `energy`, carried at full precision.
    pub gap: f64,
    pub p: u32,
    /// `Phi(1..=p)`.
    pub phi_values: Vec<f64>,
    /// `Phi(0)` and `Phi(p + 1)`, ideally zero.
    pub phi_ends: (f64, f64),
    /// Largest coefficient magnitude of `Phi` as a polynomial in `N + u`.
    pub phi_scale: f64,
    pub residual: f64,
    pub sector: Sector,
}

impl RepSolution {
    /// Boundary values divided by the size of the polynomial at those points.
    pub fn scaled_ends(&self) -> (f64, f64) {
        let s = |v: f64, x: f64| v.abs() / (self.phi_scale * x.abs().max(1.0).powi(6));
        (s(self.phi_ends.0, self.u), s(self.phi_ends.1, self.p as f64 + 1.0 + self.u))
    }

    pub fn dim(&self) -> usize {
        self.p as usize + 1
    }
}

/// Right-hand side of the representation-width condition.
pub fn width_target(p: u32, sector: Sector, params: &ModelParams, conv: &Convention) -> f64 {
    let dp = deltas(sector, params);
    p as f64 + 1.0 + conv.effective().eq51_m_factor * (dp.m1 + dp.m2)
}

/// Energies and `u` for which `Phi(0) = Phi(p + 1) = 0` and `Phi > 0` in between.
pub fn solve_representation(p: u32, sector: Sector, params: &ModelParams, conv: &Convention) -> Result<Vec<RepSolution>> {
    params.validate()?;
    sector.validate()?;
    let cal = conv.effective();
    let mu = params.mu;
    let q = sector.q.value();
    let target = width_target(p, sector, params, conv);
    // sign (q^2 + mu c1 / 4 - mu^2 E) / sqrt(S) = target. With w = sqrt(S) this
    // is w^2 - 2 sign target w + k1 = 0.
    let sign = -cal.alpha_sign;
    let k1 = mu * charge_shift(sector, params);
    let disc = target * target - k1;
    let mut ws = Vec::new();
    if target > 0.0 && disc >= 0.0 {
        let big = sign * (target + disc.sqrt());
        ws.push(big);
        if big != 0.0 {
            ws.push(k1 / big);
        }
    }
    ws.retain(|w| *w > 0.0 && w.is_finite());
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    let tol = 1e-8 * (1.0 + target);
    let mut out = Vec::new();
    for w in ws {
        let gap = w * w;
        let energy = energy_of_gap(gap, sector, params);
        let s_e = gap_of(energy, sector, params);
        let lin = sign * (q * q + 0.25 * mu * params.c1 - mu * mu * energy);
        let residual = if s_e > 0.0 { (lin / s_e.sqrt() - target).abs() } else { f64::INFINITY };
        if !(residual <= tol) {
            continue;
        }
        let r = root_offset_gap(gap, sector, params)?;
        let u = 0.5 + cal.alpha_sign * r;
        let f = factored_phi_gap(gap, sector, params, conv)?;
        let phi_values: Vec<f64> = (1..=p).map(|k| f.eval_at(k as f64 + u)).collect();
        if phi_values.iter().any(|v| !(*v > 0.0)) {
            continue;
        }
        out.push(RepSolution {
            u,
            energy,
            gap,
            p,
            phi_values,
            phi_ends: (f.eval_at(u), f.eval_at(p as f64 + 1.0 + u)),
            phi_scale: f.poly().max_abs_coeff(),
            residual,
            sector,
        });
    }
    if out.is_empty() {
        return Err(Error::NoUnitaryRep { dim: p as usize + 1 });
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

/// Energies from [`solve_representation`] in the common solution format.
pub fn energy_algebraic(p: u32, sector: Sector, params: &ModelParams, conv: &Convention) -> Result<Vec<EnergySolution>> {
    Ok(solve_representation(p, sector, params, conv)?
        .into_iter()
        .map(|rs| EnergySolution { energy: rs.energy, route: Route::Algebraic, mode: conv.mode, residual: rs.residual, window_ok: true })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Half;
    use crate::spectra::energy_parabolic;
    use crate::ParabolicQN;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sec(tq: i64, tm: i64) -> Sector {
        Sector::new(Half::from_twice(tq), Half::from_twice(tm)).unwrap()
    }

    #[test]
    fn structure_constant_examples() {
        let p = ModelParams::kaluza_klein(1.3).unwrap();
        let s = sec(2, 4);
        let k = structure_constants(-0.4, s, &p);
        assert_eq!(k.r_b, 0.0);
        assert_relative_eq!(k.r_1, -4.0 * 1.3 * -0.4 * 1.0 * 2.0 + 4.0 / 1.3 * 2.0, max_relative = 1e-14);
        assert_eq!(k.r_ab, 2.0);

        let k = structure_constants(-0.4, sec(0, 0), &ModelParams::kaluza_klein(1.0).unwrap());
        assert_eq!(k.r_1, 0.0);
        assert_relative_eq!(k.s_a, 8.0 * -0.4);
        assert_relative_eq!(k.s_1, 2.0 * 0.16 + 4.0 * -0.4, max_relative = 1e-14);
    }

    #[test]
    fn casimir_printed_vanishes_without_charges() {
        let p = ModelParams::kaluza_klein(0.7).unwrap();
        assert_eq!(casimir_value(-1.3, sec(0, 0), &p, Mode::Printed), 0.0);
    }

    #[test]
    fn casimir_is_quadratic_in_energy() {
        let p = ModelParams::new(1.4, 0.5, 2.0, 1.0, 0.3).unwrap();
        let s = sec(1, -3);
        for mode in [Mode::Printed, Mode::Reconciled] {
            let fit = Poly::fit(|e| casimir_value(e, s, &p, mode), 4, -3.0, 1.0);
            assert!(fit.coeffs[3].abs() < 1e-9 * fit.max_abs_coeff());
            assert!(fit.coeffs[4].abs() < 1e-9 * fit.max_abs_coeff());
        }
    }

    #[test]
    fn casimir_matches_structure_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = ModelParams::new(
                rng.gen_range(0.3..3.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.0..4.0),
                rng.gen_range(0.0..4.0),
                rng.gen_range(-1.0..2.0),
            )
            .unwrap();
            let tq = rng.gen_range(-4..=4);
            let s = sec(tq, tq + 2 * rng.gen_range(-3..=3));
            let e = rng.gen_range(-4.0..1.0);
            let fitted = casimir_from_structure_function(e, s, &p).unwrap();
            let closed = casimir_value(e, s, &p, Mode::Reconciled);
            assert!((fitted - closed).abs() <= 1e-9 * (1.0 + closed.abs()), "{fitted} vs {closed}");
        }
    }

    #[test]
    fn gap_forms_match_energy_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = ModelParams::new(
                rng.gen_range(0.3..3.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.0..4.0),
                rng.gen_range(0.0..4.0),
                rng.gen_range(-1.0..2.0),
            )
            .unwrap();
            let tq = rng.gen_range(-4..=4);
            let s = sec(tq, tq + 2 * rng.gen_range(-3..=3));
            let e = rng.gen_range(-4.0..1.0);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-11 * (1.0 + a.abs().max(b.abs()));
            let k = structure_constants(e, s, &p);
            let mu = p.mu;
            let (q, m) = (s.q.value(), s.m.value());
            assert!(close(k.s_a, 8.0 * e - 4.0 * q * q / (mu * mu) - 4.0 * p.c4));
            let r1 = -4.0 * mu * e * q * m + 4.0 / mu * q.powi(3) * m + p.c1 * q * m + (p.c2 - p.c3) * mu * e + (p.c3 - p.c2) / mu * q * q
                - 0.25 * p.c1 * (p.c2 - p.c3);
            assert!(close(k.r_1, r1), "{} {r1}", k.r_1);
            let s1 = 2.0 * mu * mu * e * e - 8.0 * e * q * q - 4.0 * e * m * m
                + 4.0 * q.powi(4) / (mu * mu)
                + 2.0 * q * q * m * m / (mu * mu)
                + (4.0 - p.c1 * mu) * e
                + (-2.0 + p.c1 * mu + 2.0 * p.c4 * mu * mu) / (mu * mu) * q * q
                + 2.0 * p.c4 * m * m
                + (p.c1 * p.c1 - 16.0 * p.c4) / 8.0;
            assert!(close(k.s_1, s1), "{} {s1}", k.s_1);
            let g = gap_of(e, s, &p);
            assert!(close(casimir_gap(g, s, &p), casimir_value(e, s, &p, Mode::Reconciled)));
            assert!(close(energy_of_gap(g, s, &p), e));
        }
    }

    #[test]
    fn casimir_general_trivial_cases() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let z = StructureConstants::zero();
        assert_eq!(casimir_general(&one(2.0), &one(3.0), &one(0.0), &z).unwrap()[(0, 0)], 0.0);
        let k = StructureConstants { r_ab: 2.0, s_1: 0.5, ..z };
        // C^2 - 2*2 A B^2 + 4 B^2 + 2 s_1 A
        let want = 1.0 - 2.0 * 2.0 * 2.0 * 9.0 + 4.0 * 9.0 + 2.0 * 0.5 * 2.0;
        assert_relative_eq!(casimir_general(&one(2.0), &one(3.0), &one(1.0), &k).unwrap()[(0, 0)], want);
        assert!(casimir_general(&one(1.0), &DMatrix::zeros(2, 2), &one(1.0), &k).is_err());
    }

    #[test]
    fn gamma_zero_examples() {
        let k = StructureConstants { r_b: 2.5, ..StructureConstants::zero() };
        for x in [0.0, 1.0, 4.0] {
            assert_relative_eq!(phi_gamma_zero(x, 0.3, &k, 1.7).unwrap(), -1.7 / (4.0 * 2.5), max_relative = 1e-14);
        }
        assert!(matches!(phi_gamma_zero(0.0, 0.0, &StructureConstants::zero(), 1.0), Err(Error::EpsilonZero)));
        assert!(phi_gamma_zero(0.0, 0.0, &StructureConstants { r_ab: 2.0, ..k }, 1.0).is_err());
        assert!(matches!(phi_general(0.0, 0.0, &k, 1.0, Mode::Reconciled), Err(Error::GammaZero)));
    }

    #[test]
    fn phi_degrees() {
        let k = StructureConstants { r_aa: 0.3, r_ab: 1.7, r_a: -0.4, r_b: 1.2, r_1: 0.8, s_aa: -0.6, s_a: 0.2, s_1: 0.45 };
        let f = |x| phi_general(x, 0.0, &k, 1.1, Mode::Reconciled).unwrap();
        let fit = Poly::fit(f, 10, -2.0, 2.0);
        let scale = fit.max_abs_coeff();
        assert!(fit.coeffs[9].abs() < 1e-9 * scale && fit.coeffs[10].abs() < 1e-9 * scale);
        assert!(fit.coeffs[8].abs() > 1e-3 * scale);
        let k0 = StructureConstants { r_ab: 0.0, ..k };
        let fit = Poly::fit(|x| phi_gamma_zero(x, 0.0, &k0, 1.1).unwrap(), 6, -2.0, 2.0);
        let scale = fit.max_abs_coeff();
        assert!(fit.coeffs[5].abs() < 1e-9 * scale && fit.coeffs[6].abs() < 1e-9 * scale);
    }

    #[test]
    fn pure_gamma_structure_function() {
        // Only r_ab nonzero: Phi = -3072 g^6 K (t-1)^2 + 768 (4 g^2 r_1)^2 with r_1 = 0.
        let k = StructureConstants { r_ab: 1.5, ..StructureConstants::zero() };
        for xx in [0.0, 0.7, 2.0] {
            let t: f64 = 2.0 * xx;
            let want = -3072.0 * 1.5f64.powi(6) * 0.9 * (t - 1.0).powi(2);
            assert_relative_eq!(phi_general(xx, 0.0, &k, 0.9, Mode::Reconciled).unwrap(), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn factored_vanishes_at_roots() {
        let p = ModelParams::new(1.2, 0.5, 2.0, 1.0, 0.3).unwrap();
        let s = sec(1, 3);
        let f = factored_phi(-1.1, s, &p, &Convention::reconciled()).unwrap();
        for r in f.roots {
            assert_eq!(f.eval_at(r), 0.0);
        }
        let dp = deltas(s, &p);
        let x = 0.5 * (1.0 - (dp.m1 - dp.m2));
        assert_eq!(phi_factored(x, 0.0, -1.1, s, &p, &Convention::reconciled()).unwrap(), 0.0);
        assert!(matches!(factored_phi(10.0, s, &p, &Convention::reconciled()), Err(Error::ThresholdEnergy)));
    }

    #[test]
    fn representation_examples() {
        let p = ModelParams::new(1.0, 1.0, 2.0, 1.0, 0.3).unwrap();
        let s = sec(1, -1);
        let conv = Convention::reconciled();
        let r0 = solve_representation(0, s, &p, &conv).unwrap();
        assert!(r0.iter().all(|r| r.phi_values.is_empty() && r.dim() == 1));
        for pp in 0..6 {
            for rs in solve_representation(pp, s, &p, &conv).unwrap() {
                let (a, b) = rs.scaled_ends();
                assert!(a < 1e-9 && b < 1e-9, "{a:e} {b:e}");
                assert!(rs.phi_values.iter().all(|v| *v > 0.0));
            }
        }
    }

    proptest! {
        #[test]
        fn algebraic_matches_parabolic(mu in 0.3f64..3.0, c1 in 0.0f64..2.0, c2 in 0.0f64..4.0, c3 in 0.0f64..4.0, c4 in 0.0f64..2.0,
                                      tq in -4i64..=4, dm in -3i64..=3, n1 in 0u32..4, n2 in 0u32..4) {
            let p = ModelParams::new(mu, c1, c2, c3, c4).unwrap();
            let s = sec(tq, tq + 2 * dm);
            let conv = Convention::reconciled();
            let qn = ParabolicQN { n1, n2, m: s.m, q: s.q };
            let a = energy_algebraic(n1 + n2, s, &p, &conv);
            let b = energy_parabolic(qn, &p, &conv);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.len(), b.len());
                    for (x, y) in a.iter().zip(&b) {
                        prop_assert!((x.energy - y.energy).abs() <= 1e-10 * y.energy.abs().max(1e-12));
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn factored_equals_specific(mu in 0.3f64..3.0, c1 in -2.0f64..2.0, c2 in 0.0f64..4.0, c3 in 0.0f64..4.0, c4 in -1.0f64..2.0,
                                    tq in -4i64..=4, dm in -3i64..=3, e in -5.0f64..0.0, x in -6.0f64..6.0, u in -3.0f64..3.0) {
            let p = ModelParams::new(mu, c1, c2, c3, c4).unwrap();
            let s = sec(tq, tq + 2 * dm);
            let conv = Convention::reconciled();
            if let Ok(f) = factored_phi(e, s, &p, &conv) {
                let a = f.eval_at(x + u);
                let b = phi_specific(x, u, e, s, &p);
                let gap = crate::poly::scaled_gap(a, b, f.poly().max_abs_coeff(), x + u, 6);
                prop_assert!(gap < 1e-9, "gap {:e}", gap);
            }
        }

        #[test]
        fn general_equals_specific(mu in 0.3f64..3.0, c1 in -2.0f64..2.0, c2 in 0.0f64..4.0, c3 in 0.0f64..4.0, c4 in -1.0f64..2.0,
                                   tq in -4i64..=4, dm in -3i64..=3, e in -5.0f64..1.0, x in -6.0f64..6.0) {
            let p = ModelParams::new(mu, c1, c2, c3, c4).unwrap();
            let s = sec(tq, tq + 2 * dm);
            let k = structure_constants(e, s, &p);
            let cas = casimir_value(e, s, &p, Mode::Reconciled);
            let a = phi_general(x, 0.0, &k, cas, Mode::Reconciled).unwrap();
            let b = phi_specific(x, 0.0, e, s, &p);
            let cmax = Poly::fit(|y| phi_specific(y, 0.0, e, s, &p), 6, -3.0, 3.0).max_abs_coeff();
            prop_assert!(crate::poly::scaled_gap(a, b, cmax, x, 6) < 1e-9);
        }
    }
}
