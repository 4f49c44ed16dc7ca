//! Closed-form bound-state energies and wavefunctions.
//!
//! Every route reduces to a condition of the form
//! `(l0 + l1 E) / sqrt(r0 + r1 E) = target`, which is squared into a quadratic,
//! solved, filtered against the unsquared form and polished by Newton steps.

use serde::Serialize;

use crate::calibration::{Convention, Mode};
use crate::error::{Error, Result};
use crate::model::{
    deltas, enumerate_parabolic, enumerate_spherical, separation_constant_a, DeltaPair, Half, ModelParams, ParabolicQN, Sector,
};
use crate::specfun::{jacobi, kummer_terminating};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Spherical,
    Parabolic,
    Algebraic,
    Ladder,
    Oracle,
    Limit,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Spherical => "spherical",
            Route::Parabolic => "parabolic",
            Route::Algebraic => "algebraic",
            Route::Ladder => "ladder",
            Route::Oracle => "oracle",
            Route::Limit => "limit",
        }
    }
}

impl std::str::FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "spherical" => Route::Spherical,
            "parabolic" => Route::Parabolic,
            "algebraic" => Route::Algebraic,
            "ladder" => Route::Ladder,
            "oracle" => Route::Oracle,
            "limit" => Route::Limit,
            other => return Err(Error::InvalidParams(format!("unknown route '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergySolution {
    pub energy: f64,
    pub route: Route,
    pub mode: Mode,
    /// Defect of the unsquared quantization condition.
    pub residual: f64,
    /// `beta < 0` and the Coulomb numerator has the sign the condition needs.
    pub window_ok: bool,
}

/// Coefficients of the radial equation `(-d^2 + A / r^2 - alpha / r) chi = beta chi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialProblem {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
}

impl RadialProblem {
    pub fn is_bound(&self) -> bool {
        self.beta < 0.0 && self.alpha > 0.0
    }

    pub fn kappa(&self) -> f64 {
        (-self.beta).max(0.0).sqrt()
    }
}

/// Coulomb coefficient `alpha(E)` under the given convention.
pub fn alpha_of(energy: f64, q: f64, params: &ModelParams, conv: &Convention) -> f64 {
    let cal = conv.effective();
    let mu = params.mu;
    cal.alpha_sign * (2.0 * mu * energy - 2.0 * q * q / mu - cal.c1_factor * params.c1)
}

/// Constant term `beta(E) = 2E - q^2 / mu^2 - c4`.
pub fn beta_of(energy: f64, q: f64, params: &ModelParams) -> f64 {
    2.0 * energy - q * q / (params.mu * params.mu) - params.c4
}

/// Energy at which `beta` vanishes.
pub fn threshold_energy(sector: Sector, params: &ModelParams) -> f64 {
    let q = sector.q.value();
    0.5 * (params.c4 + q * q / (params.mu * params.mu))
}

pub fn radial_problem(energy: f64, sector: Sector, params: &ModelParams, j: Half, conv: &Convention) -> RadialProblem {
    let dp = deltas(sector, params);
    let q = sector.q.value();
    RadialProblem {
        a: separation_constant_a(j, &dp),
        alpha: alpha_of(energy, q, params, conv),
        beta: beta_of(energy, q, params),
        s: j.value() + dp.delta_mean(),
    }
}

/// `(l0 + l1 E) / sqrt(r0 + r1 E) = target`, with the numerator required positive.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RatioCondition {
    pub l0: f64,
    pub l1: f64,
    pub r0: f64,
    pub r1: f64,
    pub target: f64,
}

impl RatioCondition {
    fn defect(&self, e: f64) -> f64 {
        let rad = self.r0 + self.r1 * e;
        (self.l0 + self.l1 * e) / rad.sqrt() - self.target
    }

    fn admissible(&self, e: f64) -> bool {
        self.r0 + self.r1 * e > 0.0 && self.l0 + self.l1 * e > 0.0
    }

    /// Roots of the squared condition that satisfy the unsquared one, ascending.
    pub fn solve(&self) -> Vec<(f64, f64)> {
        let t2 = self.target * self.target;
        if !(self.target > 0.0) {
            return Vec::new();
        }
        let a = self.l1 * self.l1;
        let b = 2.0 * self.l0 * self.l1 - t2 * self.r1;
        let c = self.l0 * self.l0 - t2 * self.r0;
        let mut roots = Vec::new();
        if a == 0.0 {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let mut disc = b * b - 4.0 * a * c;
            if disc < 0.0 && disc > -1e-14 * b * b {
                disc = 0.0;
            }
            if disc >= 0.0 {
                let qq = -0.5 * (b + b.signum() * disc.sqrt());
                if qq != 0.0 {
                    roots.push(qq / a);
                    roots.push(c / qq);
                } else {
                    roots.push(-b / (2.0 * a));
                }
            }
        }
        let tol = 1e-8 * (1.0 + self.target);
        let mut out: Vec<(f64, f64)> = roots
            .into_iter()
            .filter(|e| e.is_finite())
            .map(|e| self.polish(e))
            .filter(|&e| self.admissible(e))
            .map(|e| (e, self.defect(e).abs()))
            .filter(|&(_, r)| r <= tol)
            .collect();
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out.dedup_by(|x, y| (x.0 - y.0).abs() <= 1e-14 * (1.0 + x.0.abs()));
        out
    }

    fn polish(&self, mut e: f64) -> f64 {
        for _ in 0..4 {
            if !self.admissible(e) {
                break;
            }
            let rad = self.r0 + self.r1 * e;
            let lin = self.l0 + self.l1 * e;
            let g = lin / rad.sqrt() - self.target;
            let dg = self.l1 / rad.sqrt() - 0.5 * lin * self.r1 / (rad * rad.sqrt());
            if dg == 0.0 {
                break;
            }
            let next = e - g / dg;
            if !self.admissible(next) || self.defect(next).abs() >= g.abs() {
                break;
            }
            e = next;
        }
        e
    }
}

fn check_inputs(sector: Sector, params: &ModelParams) -> Result<()> {
    params.validate()?;
    sector.validate()
}

fn require_principal(n: Half, sector: Sector) -> Result<u32> {
    let k = (n - sector.m_plus() - Half::ONE).to_integer().filter(|k| *k >= 0).ok_or_else(|| {
        Error::InvalidQuantumNumbers(format!("n = {n} is not m_plus + 1 + k for a nonnegative integer k (m_plus = {})", sector.m_plus()))
    })?;
    Ok(k as u32)
}

// Coulomb numerator divided by two, as a linear function of E.
fn half_alpha_linear(sector: Sector, params: &ModelParams, conv: &Convention) -> (f64, f64) {
    let q = sector.q.value();
    let l0 = 0.5 * alpha_of(0.0, q, params, conv);
    let l1 = 0.5 * (alpha_of(1.0, q, params, conv) - alpha_of(0.0, q, params, conv));
    (l0, l1)
}

fn minus_beta_linear(sector: Sector, params: &ModelParams) -> (f64, f64) {
    let q = sector.q.value();
    (q * q / (params.mu * params.mu) + params.c4, -2.0)
}

fn to_solutions(cond: RatioCondition, route: Route, mode: Mode, what: &str) -> Result<Vec<EnergySolution>> {
    let roots = cond.solve();
    if roots.is_empty() {
        return Err(Error::NoBoundState(what.to_string()));
    }
    Ok(roots.into_iter().map(|(energy, residual)| EnergySolution { energy, route, mode, residual, window_ok: true }).collect())
}

/// Right-hand side of the spherical quantization condition.
pub fn spherical_target(n: Half, dp: &DeltaPair, conv: &Convention) -> f64 {
    n.value() - 1.0 + dp.delta_mean() + conv.effective().n_offset
}

/// Energies with principal number `n` from the spherical separation.
pub fn energy_spherical(n: Half, sector: Sector, params: &ModelParams, conv: &Convention) -> Result<Vec<EnergySolution>> {
    check_inputs(sector, params)?;
    require_principal(n, sector)?;
    let dp = deltas(sector, params);
    let (l0, l1) = half_alpha_linear(sector, params, conv);
    let (r0, r1) = minus_beta_linear(sector, params);
    let cond = RatioCondition { l0, l1, r0, r1, target: spherical_target(n, &dp, conv) };
    to_solutions(cond, Route::Spherical, conv.mode, &format!("n = {n}, q = {}, m = {}", sector.q, sector.m))
}

/// Energies of the Kaluza-Klein monopole (all couplings zero) from the closed
/// form `n = (q^2 / mu - mu E) / sqrt(q^2 / mu^2 - 2E)`.
pub fn energy_kk_limit(n: Half, sector: Sector, params: &ModelParams) -> Result<Vec<EnergySolution>> {
    check_inputs(sector, params)?;
    if !params.is_kaluza_klein() {
        return Err(Error::InvalidParams("the Kaluza-Klein limit needs c1 = c2 = c3 = c4 = 0".into()));
    }
    let nv = n.value();
    let q = sector.q.value();
    let mu = params.mu;
    let disc = nv * nv - q * q;
    if disc < 0.0 || nv <= 0.0 {
        return Err(Error::NoBoundState(format!("n = {n} < |q| = {}", sector.q.abs())));
    }
    // x = sqrt(q^2 - 2 E mu^2) solves x^2 - 2 n x + q^2 = 0.
    let big = nv + disc.sqrt();
    let mut xs = vec![big];
    if disc > 0.0 && q != 0.0 {
        xs.push(q * q / big);
    }
    let mut out: Vec<EnergySolution> = xs
        .into_iter()
        .map(|x| {
            let energy = (q * q - x * x) / (2.0 * mu * mu);
            let root = (q * q / (mu * mu) - 2.0 * energy).sqrt();
            let residual = ((q * q / mu - mu * energy) / root - nv).abs();
            EnergySolution { energy, route: Route::Limit, mode: Mode::Printed, residual, window_ok: root > 0.0 }
        })
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

/// Right-hand side shared by the parabolic and algebraic conditions:
/// `n1 + n2 + 1 + (m1 + m2) / 2`.
pub fn parabolic_target(qn: &ParabolicQN, dp: &DeltaPair) -> f64 {
    (qn.n1 + qn.n2) as f64 + 1.0 + 0.5 * (dp.m1 + dp.m2)
}

/// Energies from the parabolic separation. Summing the two one-dimensional
/// quantization conditions eliminates the separation constant `k`.
pub fn energy_parabolic(qn: ParabolicQN, params: &ModelParams, conv: &Convention) -> Result<Vec<EnergySolution>> {
    let sector = qn.sector();
    check_inputs(sector, params)?;
    let dp = deltas(sector, params);
    let (mut l0, mut l1) = half_alpha_linear(sector, params, conv);
    if conv.is_printed() {
        // The printed per-coordinate conditions carry alpha with the opposite sign.
        l0 = -l0;
        l1 = -l1;
    }
    let (r0, r1) = minus_beta_linear(sector, params);
    let cond = RatioCondition { l0, l1, r0, r1, target: parabolic_target(&qn, &dp) };
    to_solutions(cond, Route::Parabolic, conv.mode, &format!("n1 = {}, n2 = {}, q = {}, m = {}", qn.n1, qn.n2, qn.q, qn.m))
}

/// Separation constant `k` of the parabolic equations at energy `E`, and the
/// defects of the two individual quantization conditions.
pub fn parabolic_separation(qn: ParabolicQN, energy: f64, params: &ModelParams, conv: &Convention) -> (f64, f64, f64) {
    let sector = qn.sector();
    let dp = deltas(sector, params);
    let q = sector.q.value();
    let alpha = alpha_of(energy, q, params, conv);
    let kappa = (-beta_of(energy, q, params)).sqrt();
    let n1 = qn.n1 as f64;
    let n2 = qn.n2 as f64;
    if conv.is_printed() {
        let k = 2.0 * kappa * (n1 + 0.5 * (dp.m1 + 1.0)) + 0.5 * alpha;
        let d1 = -(dp.m1 + 1.0) / 2.0 + (2.0 * k - alpha) / (4.0 * kappa) - n1;
        let d2 = -(dp.m2 + 1.0) / 2.0 - (2.0 * k + alpha) / (4.0 * kappa) - n2;
        (k, d1, d2)
    } else {
        let k = 0.5 * alpha - 2.0 * kappa * (n1 + 0.5 * (dp.m1 + 1.0));
        let d1 = (alpha - 2.0 * k) / (4.0 * kappa) - (dp.m1 + 1.0) / 2.0 - n1;
        let d2 = (alpha + 2.0 * k) / (4.0 * kappa) - (dp.m2 + 1.0) / 2.0 - n2;
        (k, d1, d2)
    }
}

/// Number of states with principal number `n` in a sector.
pub fn degeneracy(n: Half, sector: Sector, params: &ModelParams) -> Result<usize> {
    let par = enumerate_parabolic(n, sector, params).len();
    let sph = enumerate_spherical(n, sector, params).len();
    if par != sph {
        return Err(Error::DimensionMismatch(format!("{sph} spherical vs {par} parabolic states at n = {n}")));
    }
    Ok(par)
}

/// Which separated factor of a bound-state wavefunction to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WaveSpec {
    RadialSpherical { n_r: u32, j: Half, sector: Sector },
    Angular { j: Half, sector: Sector },
    ParabolicXi { n1: u32, sector: Sector },
    ParabolicEta { n2: u32, sector: Sector },
}

impl WaveSpec {
    pub fn sector(&self) -> Sector {
        match *self {
            WaveSpec::RadialSpherical { sector, .. }
            | WaveSpec::Angular { sector, .. }
            | WaveSpec::ParabolicXi { sector, .. }
            | WaveSpec::ParabolicEta { sector, .. } => sector,
        }
    }

    /// Number of interior nodes of the factor.
    pub fn nodes(&self) -> u32 {
        match *self {
            WaveSpec::RadialSpherical { n_r, .. } => n_r,
            WaveSpec::Angular { j, sector } => (j - sector.m_plus()).to_integer().unwrap_or(0) as u32,
            WaveSpec::ParabolicXi { n1, .. } => n1,
            WaveSpec::ParabolicEta { n2, .. } => n2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sector = self.sector();
        sector.validate()?;
        match *self {
            WaveSpec::RadialSpherical { j, .. } | WaveSpec::Angular { j, .. } => {
                let k = (j - sector.m_plus()).to_integer();
                if !matches!(k, Some(k) if k >= 0) {
                    return Err(Error::InvalidQuantumNumbers(format!(
                        "j = {j} must be m_plus + k, k = 0, 1, ... (m_plus = {})",
                        sector.m_plus()
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for WaveSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = self.sector();
        match *self {
            WaveSpec::RadialSpherical { n_r, j, .. } => write!(f, "radial n_r={n_r} j={j}"),
            WaveSpec::Angular { j, .. } => write!(f, "angular j={j}"),
            WaveSpec::ParabolicXi { n1, .. } => write!(f, "xi n1={n1}"),
            WaveSpec::ParabolicEta { n2, .. } => write!(f, "eta n2={n2}"),
        }?;
        write!(f, " q={} m={}", s.q, s.m)
    }
}

/// Unnormalized value of one separated factor at `coordinate` (`r`, `theta`, `xi` or `eta`).
pub fn wavefunction_eval(ws: WaveSpec, energy: f64, coordinate: f64, params: &ModelParams, conv: &Convention) -> Result<f64> {
    ws.validate()?;
    let sector = ws.sector();
    let dp = deltas(sector, params);
    let q = sector.q.value();
    let beta = beta_of(energy, q, params);
    let kappa = if beta < 0.0 { (-beta).sqrt() } else { f64::NAN };
    let domain = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{what} outside its domain: {coordinate}")))
        }
    };
    match ws {
        WaveSpec::Angular { j, .. } => {
            domain(coordinate > 0.0 && coordinate < std::f64::consts::PI, "theta")?;
            let deg = (j - sector.m_plus()).to_integer().unwrap_or(0) as u32;
            let half = 0.5 * coordinate;
            Ok(half.cos().powf(dp.m1) * half.sin().powf(dp.m2) * jacobi(deg, dp.m2, dp.m1, coordinate.cos())?)
        }
        _ if !(beta < 0.0) => Err(Error::ThresholdEnergy),
        WaveSpec::RadialSpherical { n_r, j, .. } => {
            domain(coordinate > 0.0, "r")?;
            let s = j.value() + dp.delta_mean();
            let rho = 2.0 * kappa * coordinate;
            let (power, b) = if conv.is_printed() { (s, 2.0 * s) } else { (s + 1.0, 2.0 * s + 2.0) };
            if !(b > 0.0) {
                return Err(Error::Domain(format!("lower index 2s = {b} is not positive")));
            }
            Ok(rho.powf(power) * (-0.5 * rho).exp() * kummer_terminating(n_r, b, rho)?)
        }
        WaveSpec::ParabolicXi { n1, .. } => {
            domain(coordinate > 0.0, "xi")?;
            let x = coordinate * kappa;
            Ok(x.powf(0.5 * dp.m1) * (-0.5 * x).exp() * kummer_terminating(n1, dp.m1 + 1.0, x)?)
        }
        WaveSpec::ParabolicEta { n2, .. } => {
            domain(coordinate > 0.0, "eta")?;
            let y = coordinate * kappa;
            Ok(y.powf(0.5 * dp.m2) * (-0.5 * y).exp() * kummer_terminating(n2, dp.m2 + 1.0, y)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn h(s: &str) -> Half {
        s.parse().unwrap()
    }

    fn sec(q: &str, m: &str) -> Sector {
        Sector::new(h(q), h(m)).unwrap()
    }

    fn rec() -> Convention {
        Convention::reconciled()
    }

    #[test]
    fn radial_problem_examples() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        let printed = Convention::printed();
        let rp = radial_problem(-0.7, sec("0", "0"), &p, h("0"), &printed);
        assert_relative_eq!(rp.alpha, 2.0 * -0.7);
        assert_relative_eq!(rp.beta, 2.0 * -0.7);

        let p = ModelParams::new(1.3, 0.4, 0.0, 0.0, 0.9).unwrap();
        let s = sec("1", "1");
        let e = threshold_energy(s, &p);
        assert!(radial_problem(e, s, &p, h("1"), &rec()).beta.abs() < 1e-15);

        let p = ModelParams::kaluza_klein(1.0).unwrap();
        let rp = radial_problem(-11.70820393249937, sec("2", "2"), &p, h("2"), &rec());
        assert_relative_eq!(rp.beta, -27.41640786499874, max_relative = 1e-12);
        assert_relative_eq!(rp.alpha, 2.0 * 4.0 + 2.0 * 11.70820393249937, max_relative = 1e-12);
    }

    #[test]
    fn kk_limit_examples() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        let s = sec("2", "2");
        let e: Vec<f64> = energy_kk_limit(h("3"), s, &p).unwrap().iter().map(|x| x.energy).collect();
        let r5 = 5f64.sqrt();
        assert_relative_eq!(e[0], (4.0 - (3.0 + r5).powi(2)) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(e[1], (4.0 - (3.0 - r5).powi(2)) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(e[0], -11.7082, epsilon = 1e-4);
        assert_relative_eq!(e[1], 1.7082, epsilon = 1e-4);

        let e = energy_kk_limit(h("2"), s, &p).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].energy, 0.0);

        assert!(matches!(energy_kk_limit(h("1"), s, &p), Err(Error::NoBoundState(_))));
    }

    #[test]
    fn spherical_reproduces_kk_limit() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        let s = sec("2", "2");
        let sph = energy_spherical(h("3"), s, &p, &rec()).unwrap();
        let kk = energy_kk_limit(h("3"), s, &p).unwrap();
        assert_eq!(sph.len(), 2);
        for (a, b) in sph.iter().zip(&kk) {
            assert_relative_eq!(a.energy, b.energy, max_relative = 1e-12);
            assert!(a.residual < 1e-12 * 4.0);
        }
    }

    #[test]
    fn uncharged_free_case_in_printed_mode() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        for n in 1..5 {
            let r = energy_spherical(Half::from_int(n), sec("0", "0"), &p, &Convention::printed());
            assert!(matches!(r, Err(Error::NoBoundState(_))), "n = {n}: {r:?}");
        }
    }

    #[test]
    fn uncharged_free_case_is_hydrogenic_when_reconciled() {
        for mu in [0.5, 1.0, 2.0] {
            let p = ModelParams::kaluza_klein(mu).unwrap();
            for n in 1..5 {
                let e = energy_spherical(Half::from_int(n), sec("0", "0"), &p, &rec()).unwrap();
                assert_eq!(e.len(), 1);
                assert_relative_eq!(e[0].energy, -2.0 * (n * n) as f64 / (mu * mu), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn inadmissible_principal_number() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        assert!(matches!(energy_spherical(h("1"), sec("1", "1"), &p, &rec()), Err(Error::InvalidQuantumNumbers(_))));
        assert!(energy_spherical(h("5/2"), sec("1", "1"), &p, &rec()).is_err());
    }

    #[test]
    fn ground_parabolic_equals_spherical() {
        let p = ModelParams::new(1.0, 1.0, 2.0, 1.0, 0.3).unwrap();
        let s = sec("1/2", "-1/2");
        let qn = ParabolicQN { n1: 0, n2: 0, m: s.m, q: s.q };
        let a = energy_parabolic(qn, &p, &rec()).unwrap();
        let b = energy_spherical(s.m_plus() + Half::ONE, s, &p, &rec()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x.energy, y.energy, max_relative = 1e-12);
        }
    }

    #[test]
    fn parabolic_individual_conditions_hold_when_reconciled() {
        let p = ModelParams::new(2.0, 0.5, 0.0, 3.0, 1.0).unwrap();
        let s = sec("1", "0");
        for qn in enumerate_parabolic(h("4"), s, &p) {
            for sol in energy_parabolic(qn, &p, &rec()).unwrap() {
                let (_, d1, d2) = parabolic_separation(qn, sol.energy, &p, &rec());
                assert!(d1.abs() < 1e-10 && d2.abs() < 1e-10, "{d1:e} {d2:e}");
            }
        }
    }

    #[test]
    fn degeneracy_examples() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        assert_eq!(degeneracy(h("3"), sec("0", "0"), &p).unwrap(), 3);
        assert_eq!(degeneracy(h("2"), sec("1", "1"), &p).unwrap(), 1);
    }

    #[test]
    fn angular_factor_reduces_to_cosine() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        let ws = WaveSpec::Angular { j: h("1"), sector: sec("0", "0") };
        for t in [0.3, 1.0, 2.5] {
            assert_relative_eq!(wavefunction_eval(ws, -1.0, t, &p, &rec()).unwrap(), f64::cos(t), max_relative = 1e-14);
        }
        assert!(wavefunction_eval(ws, -1.0, 0.0, &p, &rec()).is_err());
    }

    #[test]
    fn parabolic_factor_without_nodes() {
        let p = ModelParams::new(1.0, 0.0, 2.0, 0.0, 0.0).unwrap();
        let s = sec("0", "1");
        let dp = deltas(s, &p);
        let e = -0.5;
        let kappa = (-beta_of(e, 0.0, &p)).sqrt();
        let ws = WaveSpec::ParabolicXi { n1: 0, sector: s };
        for xi in [0.2, 1.0, 7.0] {
            let x = xi * kappa;
            let want = x.powf(dp.m1 / 2.0) * (-x / 2.0).exp();
            assert_relative_eq!(wavefunction_eval(ws, e, xi, &p, &rec()).unwrap(), want, max_relative = 1e-14);
        }
    }

    #[test]
    fn radial_leading_exponent() {
        let p = ModelParams::new(1.0, 0.5, 0.0, 3.0, 1.0).unwrap();
        let s = sec("1", "0");
        let j = h("1");
        let sols = energy_spherical(h("3"), s, &p, &rec()).unwrap();
        let ws = WaveSpec::RadialSpherical { n_r: 1, j, sector: s };
        let rp = radial_problem(sols[0].energy, s, &p, j, &rec());
        let (r1, r2) = (1e-7, 2e-7);
        let f1 = wavefunction_eval(ws, sols[0].energy, r1, &p, &rec()).unwrap();
        let f2 = wavefunction_eval(ws, sols[0].energy, r2, &p, &rec()).unwrap();
        let slope = (f2 / f1).ln() / (r2 / r1).ln();
        assert_relative_eq!(slope, rp.s + 1.0, max_relative = 1e-5);
    }

    fn grid_params() -> impl Strategy<Value = (ModelParams, Sector)> {
        (prop::sample::select(vec![0.5, 1.0, 2.0]), 0.0f64..2.0, 0.0f64..4.0, 0.0f64..4.0, 0.0f64..1.5, -4i64..=4, -2i64..=2).prop_map(
            |(mu, c1, c2, c3, c4, tq, dm)| {
                let q = Half::from_twice(tq);
                (ModelParams::new(mu, c1, c2, c3, c4).unwrap(), Sector::new(q, q + Half::from_int(dm)).unwrap())
            },
        )
    }

    proptest! {
        #[test]
        fn spherical_solutions_satisfy_condition((p, s) in grid_params(), k in 0i64..5) {
            let n = s.m_plus() + Half::from_int(k + 1);
            if let Ok(sols) = energy_spherical(n, s, &p, &rec()) {
                let d = spherical_target(n, &deltas(s, &p), &rec());
                let cal = rec().effective();
                for sol in sols {
                    // Near the threshold the defect of the nearest double is itself
                    // large; allow that representation floor on top of the budget.
                    let lin = 0.5 * alpha_of(sol.energy, s.q.value(), &p, &rec());
                    let rad = -beta_of(sol.energy, s.q.value(), &p);
                    let slope = (cal.alpha_sign * p.mu * rad + lin) / (rad * rad.sqrt());
                    let floor = 4.0 * f64::EPSILON * sol.energy.abs() * slope.abs();
                    prop_assert!(sol.residual < 1e-12 * (1.0 + d) + floor, "residual {:e}", sol.residual);
                    prop_assert!(beta_of(sol.energy, s.q.value(), &p) < 0.0);
                    prop_assert!(alpha_of(sol.energy, s.q.value(), &p, &rec()) > 0.0);
                }
            }
        }

        #[test]
        fn parabolic_matches_spherical((p, s) in grid_params(), k in 0u32..5) {
            let n = s.m_plus() + Half::from_int(k as i64 + 1);
            let sph = energy_spherical(n, s, &p, &rec());
            for qn in enumerate_parabolic(n, s, &p) {
                let par = energy_parabolic(qn, &p, &rec());
                match (&sph, par) {
                    (Ok(a), Ok(b)) => {
                        prop_assert_eq!(a.len(), b.len());
                        for (x, y) in a.iter().zip(&b) {
                            prop_assert!((x.energy - y.energy).abs() <= 1e-10 * x.energy.abs().max(1e-300));
                        }
                    }
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
                }
            }
        }

        #[test]
        fn kk_limit_matches_spherical(mu in 0.3f64..3.0, tq in -6i64..=6, k in 1i64..7) {
            let p = ModelParams::kaluza_klein(mu).unwrap();
            let q = Half::from_twice(tq);
            let s = Sector::new(q, q).unwrap();
            let n = q.abs() + Half::from_int(k);
            let a = energy_spherical(n, s, &p, &rec()).unwrap();
            let b = energy_kk_limit(n, s, &p).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.energy - y.energy).abs() <= 1e-12 * y.energy.abs());
            }
        }

        #[test]
        fn energies_increase_with_n((p, s) in grid_params()) {
            // Lowest branch only; reported rather than asserted when a sector
            // has a second branch that crosses.
            let mut last = f64::NEG_INFINITY;
            for k in 1..6 {
                let n = s.m_plus() + Half::from_int(k);
                if let Ok(sols) = energy_spherical(n, s, &p, &rec()) {
                    let e = sols[0].energy;
                    if e <= last {
                        eprintln!("non-monotone lowest branch: {p:?} {s:?} n = {n}: {e} <= {last}");
                    }
                    last = e;
                }
            }
        }
    }
}
