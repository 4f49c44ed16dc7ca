//! su(1,1) spectrum-generating algebra of the radial equation.
//!
//! In the scaled variable `x = sqrt(-beta) r` the radial equation reads
//! `L chi = -A chi` with `L = -x^2 d^2 + x^2 - f x` and `f = alpha / sqrt(-beta)`.
//! The operators
//!
//! ```text
//! B3 = (-x d^2 + x + A / x) / 2,    B+- = -+ x d + x - B3
//! ```
//!
//! close on `[B3, B+-] = +-B+-`, `[B+, B-] = -2 B3`, and their Casimir
//! `B3^2 - B3 - B+ B-` is the constant `A`.

use serde::Serialize;

use crate::calibration::Convention;
use crate::error::{Error, Result};
use crate::model::{deltas, separation_constant_a, Half, ModelParams, Sector};
use crate::numdiff::{grid_d1, grid_d2};
use crate::specfun::kummer_terminating;
use crate::spectra::{alpha_of, beta_of, EnergySolution, RatioCondition, Route};

/// Samples within this many points of either end are excluded from residuals.
/// Products of two 5-point stencils reach four points out.
pub const EDGE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    L,
    B3,
    Bplus,
    Bminus,
    /// `-x d + x - v` with the scalar weight `v`.
    BplusN,
    /// `x d + x - v`.
    BminusN,
}

/// Uniform grid in the scaled variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl ScaledGrid {
    pub fn new(x_min: f64, x_max: f64, points: usize) -> Self {
        ScaledGrid { x_min, x_max, points }
    }

    /// Same interval, half the spacing.
    pub fn refined(&self) -> Self {
        ScaledGrid { points: 2 * self.points - 1, ..*self }
    }
}

impl Default for ScaledGrid {
    /// Closed-form eigenfunctions behave like `x^(s+1)` at the origin, which
    /// the stencils only resolve for integer `s`; the grid starts at `x = 1`.
    fn default() -> Self {
        ScaledGrid { x_min: 1.0, x_max: 60.0, points: 4000 }
    }
}

/// The radial problem in the scaled variable, sampled on `x_i = x_min + i h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledRadial {
    /// `alpha / sqrt(-beta)`.
    pub f: f64,
    pub a: f64,
    pub x2_sign: f64,
    pub weight_factor: f64,
    pub x_min: f64,
    pub h: f64,
    pub chi: Vec<f64>,
}

impl ScaledRadial {
    /// Closed-form eigenfunction `(2x)^(s+1) e^(-x) M(-n_r, 2s + 2, 2x)` with
    /// `f = 2 (n_r + s + 1)`.
    pub fn exact(n_r: u32, s: f64, grid: ScaledGrid, conv: &Convention) -> Result<Self> {
        let cal = conv.effective();
        let ScaledGrid { x_min, x_max, points } = grid;
        if !(points > 2 * EDGE && x_min >= 0.0 && x_max > x_min) {
            return Err(Error::Domain(format!("bad grid {grid:?}")));
        }
        let h = (x_max - x_min) / (points - 1) as f64;
        let chi = (0..points)
            .map(|i| {
                let x = x_min + i as f64 * h;
                Ok((2.0 * x).powf(s + 1.0) * (-x).exp() * kummer_terminating(n_r, 2.0 * s + 2.0, 2.0 * x)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ScaledRadial {
            f: 2.0 * (n_r as f64 + s + 1.0),
            a: s * (s + 1.0),
            x2_sign: cal.ladder_x2_sign,
            weight_factor: cal.ladder_weight_factor,
            x_min,
            h,
            chi,
        })
    }

    /// Operators for the radial problem at energy `E`, with the closed-form
    /// `n_r` eigenfunction evaluated at that energy's `f`.
    pub fn from_problem(
        energy: f64,
        n_r: u32,
        j: Half,
        sector: Sector,
        params: &ModelParams,
        conv: &Convention,
        grid: ScaledGrid,
    ) -> Result<Self> {
        let q = sector.q.value();
        let beta = beta_of(energy, q, params);
        if !(beta < 0.0) {
            return Err(Error::ThresholdEnergy);
        }
        let dp = deltas(sector, params);
        let s = j.value() + dp.delta_mean();
        let mut sr = ScaledRadial::exact(n_r, s, grid, conv)?;
        sr.f = alpha_of(energy, q, params, conv) / (-beta).sqrt();
        sr.a = separation_constant_a(j, &dp);
        Ok(sr)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    /// The `B3` weight assigned to `f`.
    pub fn weight(&self) -> f64 {
        self.weight_factor * self.f
    }

    /// Applies `kind` to `samples`, which must vanish at `x = 0` and decay
    /// before the outer edge.
    pub fn apply(&self, kind: OpKind, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_support(samples)?;
        Ok(sum(&self.terms(kind, samples)))
    }

    fn check_support(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch(format!("{} samples on a {}-point grid", y.len(), self.len())));
        }
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = y[y.len() - EDGE..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let origin_ok = self.x_min > 0.0 || y[0].abs() <= 1e-12 * peak;
        if !origin_ok || !(tail <= 1e-10 * peak) {
            return Err(Error::Domain("samples are not supported away from the grid boundary".into()));
        }
        Ok(())
    }

    // Coefficients of g, g', g'' in each operator.
    fn coefficients(&self, kind: OpKind, x: f64) -> [f64; 3] {
        let (a, v) = (self.a, self.weight());
        match kind {
            OpKind::L => [self.x2_sign * x * x - self.f * x, 0.0, -x * x],
            OpKind::B3 => [0.5 * x + 0.5 * a / x, 0.0, -0.5 * x],
            OpKind::Bplus => [0.5 * x - 0.5 * a / x, -x, 0.5 * x],
            OpKind::Bminus => [0.5 * x - 0.5 * a / x, x, 0.5 * x],
            OpKind::BplusN => [x - v, -x, 0.0],
            OpKind::BminusN => [x - v, x, 0.0],
        }
    }

    /// The operator applied term by term: one array per derivative order.
    fn terms(&self, kind: OpKind, y: &[f64]) -> Vec<Vec<f64>> {
        let n = y.len();
        let derivs = [y.to_vec(), grid_d1(y, self.h), grid_d2(y, self.h)];
        let mut out = vec![vec![0.0; n]; 3];
        for i in 2..n.saturating_sub(2) {
            let c = self.coefficients(kind, self.x(i));
            for k in 0..3 {
                out[k][i] = c[k] * derivs[k][i];
            }
        }
        out
    }

    // outer(inner(y)), expanded into the terms of outer applied to each term of inner.
    fn product(&self, outer: OpKind, inner: OpKind, y: &[f64]) -> Vec<Vec<f64>> {
        self.terms(inner, y).iter().flat_map(|t| self.terms(outer, t)).collect()
    }
}

fn sum(terms: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; terms[0].len()];
    for t in terms {
        for (o, v) in out.iter_mut().zip(t) {
            *o += v;
        }
    }
    out
}

// max |sum of every term| / largest single term, on the interior.
fn relative(parts: &[Vec<Vec<f64>>]) -> f64 {
    let n = parts[0][0].len();
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in EDGE..n.saturating_sub(EDGE) {
        let mut s = 0.0;
        for t in parts.iter().flatten() {
            s += t[i];
            den = den.max(t[i].abs());
        }
        num = num.max(s.abs());
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn scaled(terms: Vec<Vec<f64>>, c: f64) -> Vec<Vec<f64>> {
    terms.into_iter().map(|t| t.into_iter().map(|x| x * c).collect()).collect()
}

fn single(y: &[f64], c: f64) -> Vec<Vec<f64>> {
    vec![y.iter().map(|x| x * c).collect()]
}

/// Residuals of the su(1,1) relations on one test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Su11Residuals {
    /// `[B3, B+] - B+`.
    pub raise: f64,
    /// `[B3, B-] + B-`.
    pub lower: f64,
    /// `[B+, B-] + 2 B3`.
    pub cross: f64,
    /// `<g, C g> / <g, g>` for `C = B3^2 - B3 - B+ B-`.
    pub casimir: f64,
    /// Largest term of `C g` per unit `max |g|`, the natural size of `casimir`.
    pub casimir_scale: f64,
    /// `C g - A g`, relative.
    pub casimir_residual: f64,
}

impl Su11Residuals {
    pub fn max_commutator(&self) -> f64 {
        self.raise.max(self.lower).max(self.cross)
    }
}

pub fn su11_residuals(sr: &ScaledRadial, g: &[f64]) -> Result<Su11Residuals> {
    sr.check_support(g)?;
    use OpKind::*;
    let raise = relative(&[sr.product(B3, Bplus, g), scaled(sr.product(Bplus, B3, g), -1.0), scaled(sr.terms(Bplus, g), -1.0)]);
    let lower = relative(&[sr.product(B3, Bminus, g), scaled(sr.product(Bminus, B3, g), -1.0), sr.terms(Bminus, g)]);
    let cross = relative(&[sr.product(Bplus, Bminus, g), scaled(sr.product(Bminus, Bplus, g), -1.0), scaled(sr.terms(B3, g), 2.0)]);
    let cas_parts = [sr.product(B3, B3, g), scaled(sr.terms(B3, g), -1.0), scaled(sr.product(Bplus, Bminus, g), -1.0)];
    let cg = sum(&cas_parts.concat());
    let (mut num, mut den) = (0.0, 0.0);
    let mut biggest: f64 = 0.0;
    let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in EDGE..g.len().saturating_sub(EDGE) {
        num += g[i] * cg[i];
        den += g[i] * g[i];
        for t in cas_parts.iter().flatten() {
            biggest = biggest.max(t[i].abs());
        }
    }
    let casimir = num / den;
    let casimir_residual = relative(&[cas_parts.concat(), single(g, -sr.a)]);
    Ok(Su11Residuals { raise, lower, cross, casimir, casimir_scale: biggest / peak, casimir_residual })
}

/// Residuals of the eigen-equations on the sampled eigenfunction `sr.chi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenResiduals {
    /// `L chi + A chi`.
    pub radial: f64,
    /// `B3 chi - v chi`.
    pub weight: f64,
    /// `(B-^n - 1) B+^n chi - (v (v + 1) - A) chi`.
    pub factor_plus: f64,
    /// `(B+^n + 1) B-^n chi - (v (v - 1) - A) chi`.
    pub factor_minus: f64,
}

impl EigenResiduals {
    /// Largest residual; NaN counts as infinite.
    pub fn max(&self) -> f64 {
        [self.radial, self.weight, self.factor_plus, self.factor_minus].into_iter().fold(0.0, |m, v| {
            if v.is_nan() {
                f64::INFINITY
            } else {
                m.max(v)
            }
        })
    }
}

pub fn eigen_residuals(sr: &ScaledRadial) -> Result<EigenResiduals> {
    use OpKind::*;
    let chi = &sr.chi;
    sr.check_support(chi)?;
    let v = sr.weight();
    let radial = relative(&[sr.terms(L, chi), single(chi, sr.a)]);
    let weight = relative(&[sr.terms(B3, chi), single(chi, -v)]);
    let factor_plus =
        relative(&[sr.product(BminusN, BplusN, chi), scaled(sr.terms(BplusN, chi), -1.0), single(chi, -(v * (v + 1.0) - sr.a))]);
    let factor_minus = relative(&[sr.product(BplusN, BminusN, chi), sr.terms(BminusN, chi), single(chi, -(v * (v - 1.0) - sr.a))]);
    Ok(EigenResiduals { radial, weight, factor_plus, factor_minus })
}

/// Three Gaussian bumps inside `[0.2, 0.8] x_max`.
pub fn test_bumps(sr: &ScaledRadial) -> Vec<Vec<f64>> {
    let x_max = sr.x(sr.len() - 1);
    assert!(sr.x_min < 0.2 * x_max);
    [(0.40, 0.006), (0.50, 0.005), (0.62, 0.007)]
        .iter()
        .map(|&(c, w)| {
            (0..sr.len())
                .map(|i| {
                    let t = (sr.x(i) - c * x_max) / (w * x_max);
                    (-0.5 * t * t).exp()
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Su11Report {
    pub points: usize,
    pub bumps: Vec<Su11Residuals>,
    pub eigen: Su11Residuals,
    pub eigen_equations: EigenResiduals,
    /// Largest commutator residual over the bumps, and the same at half spacing.
    pub commutator: f64,
    pub commutator_refined: f64,
    /// Largest deviation of the Casimir value from `A` over all test
    /// functions, relative to the size of its terms.
    pub casimir_spread: f64,
}

impl Su11Report {
    pub fn refinement_ratio(&self) -> f64 {
        self.commutator / self.commutator_refined
    }
}

/// Runs every su(1,1) check for the `n_r` eigenfunction with index `s`, plus
/// the commutators on the bumps again at half the spacing.
pub fn verify_su11(n_r: u32, s: f64, grid: ScaledGrid, conv: &Convention) -> Result<Su11Report> {
    let run = |g: ScaledGrid| -> Result<(ScaledRadial, Vec<Su11Residuals>)> {
        let sr = ScaledRadial::exact(n_r, s, g, conv)?;
        let bumps = test_bumps(&sr).iter().map(|g| su11_residuals(&sr, g)).collect::<Result<Vec<_>>>()?;
        Ok((sr, bumps))
    };
    let (sr, bumps) = run(grid)?;
    let (_, fine) = run(grid.refined())?;
    let eigen = su11_residuals(&sr, &sr.chi)?;
    let worst = |b: &[Su11Residuals]| b.iter().map(Su11Residuals::max_commutator).fold(0.0, f64::max);
    let casimir_spread = bumps.iter().chain([&eigen]).map(|r| (r.casimir - sr.a).abs() / r.casimir_scale).fold(0.0, f64::max);
    Ok(Su11Report {
        points: grid.points,
        commutator: worst(&bumps),
        commutator_refined: worst(&fine),
        bumps,
        eigen,
        eigen_equations: eigen_residuals(&sr)?,
        casimir_spread,
    })
}

/// Labels of the discrete series representation carrying a level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Su11Labels {
    /// Casimir label `w = j + (delta1 + delta2) / 2`.
    pub casimir_label: f64,
    /// `B3` weight `v = w + n' + 1`.
    pub weight_label: f64,
    pub level: u32,
}

impl Su11Labels {
    pub fn new(j: Half, sector: Sector, params: &ModelParams, level: u32) -> Result<Self> {
        let w = j.value() + deltas(sector, params).delta_mean();
        if !(w > -1.0) {
            return Err(Error::InvalidQuantumNumbers(format!("casimir label {w} is not above -1")));
        }
        Ok(Su11Labels { casimir_label: w, weight_label: w + level as f64 + 1.0, level })
    }
}

/// Energies at level `n'`: the weight `v` equated with `weight_factor * f(E)`.
pub fn ladder_level(level: u32, j: Half, sector: Sector, params: &ModelParams, conv: &Convention) -> Result<Vec<EnergySolution>> {
    params.validate()?;
    sector.validate()?;
    if j < sector.m_plus() || !(j - sector.m_plus()).is_integer() {
        return Err(Error::InvalidQuantumNumbers(format!("j = {j} is not m_plus + k (m_plus = {})", sector.m_plus())));
    }
    let labels = Su11Labels::new(j, sector, params, level)?;
    let factor = conv.effective().ladder_weight_factor;
    let q = sector.q.value();
    let a0 = alpha_of(0.0, q, params, conv);
    let a1 = alpha_of(1.0, q, params, conv) - a0;
    let b0 = beta_of(0.0, q, params);
    let b1 = beta_of(1.0, q, params) - b0;
    let cond = RatioCondition { l0: factor * a0, l1: factor * a1, r0: -b0, r1: -b1, target: labels.weight_label };
    let roots = cond.solve();
    if roots.is_empty() {
        return Err(Error::NoBoundState(format!("no ladder energy at level {level}, j = {j}")));
    }
    Ok(roots
        .into_iter()
        .map(|(energy, residual)| EnergySolution { energy, route: Route::Ladder, mode: conv.mode, residual, window_ok: true })
        .collect())
}

/// Ladder energies for `n' = 0..=max_level`. Levels without a bound state are
/// skipped; an empty result is an error.
pub fn ladder_spectrum(
    j: Half,
    sector: Sector,
    params: &ModelParams,
    max_level: u32,
    conv: &Convention,
) -> Result<Vec<(Su11Labels, EnergySolution)>> {
    let mut out = Vec::new();
    for level in 0..=max_level {
        match ladder_level(level, j, sector, params, conv) {
            Ok(sols) => {
                let labels = Su11Labels::new(j, sector, params, level)?;
                out.extend(sols.into_iter().map(|s| (labels, s)));
            }
            Err(Error::NoBoundState(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(Error::NoBoundState(format!("no ladder energies for j = {j}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::energy_spherical;
    use proptest::prelude::*;

    fn sec(tq: i64, tm: i64) -> Sector {
        Sector::new(Half::from_twice(tq), Half::from_twice(tm)).unwrap()
    }

    #[test]
    fn exact_eigenfunctions_satisfy_eigen_equations() {
        let conv = Convention::reconciled();
        for s in [0.0, 0.5, 1.3, 2.0] {
            for n_r in 0..3 {
                let sr = ScaledRadial::exact(n_r, s, ScaledGrid::default(), &conv).unwrap();
                let r = eigen_residuals(&sr).unwrap();
                assert!(r.max() < 1e-6, "s={s} n_r={n_r} {r:?}");
            }
        }
    }

    #[test]
    fn su11_on_bumps() {
        let conv = Convention::reconciled();
        for s in [0.0, 0.75, 2.0] {
            let rep = verify_su11(0, s, ScaledGrid::default(), &conv).unwrap();
            println!(
                "s={s} comm {:e} refined {:e} ratio {} spread {:e} eigen {:?}",
                rep.commutator,
                rep.commutator_refined,
                rep.refinement_ratio(),
                rep.casimir_spread,
                rep.eigen
            );
            assert!(rep.commutator < 1e-6);
            assert!(rep.eigen.max_commutator() < 1e-6);
            assert!(rep.casimir_spread < 1e-5);
            let ratio = rep.refinement_ratio();
            assert!(ratio > 10.0 && ratio < 24.0, "ratio {ratio}");
        }
    }

    #[test]
    fn fractional_index_is_unresolved_at_origin() {
        let conv = Convention::reconciled();
        let at = |x0: f64| {
            let sr = ScaledRadial::exact(0, 0.5, ScaledGrid::new(x0, 60.0, 4000), &conv).unwrap();
            eigen_residuals(&sr).unwrap().max()
        };
        assert!(at(0.0) > 1e-5);
        assert!(at(1.0) < 1e-7);
    }

    #[test]
    fn printed_conventions_break_eigen_equations() {
        let sr = ScaledRadial::exact(1, 0.5, ScaledGrid::new(1.0, 60.0, 2000), &Convention::printed()).unwrap();
        let r = eigen_residuals(&sr).unwrap();
        assert!(r.radial > 1e-2 && r.weight > 1e-2 && r.factor_plus > 1e-2, "{r:?}");
    }

    #[test]
    fn support_is_enforced() {
        let sr = ScaledRadial::exact(0, 0.0, ScaledGrid::new(0.0, 60.0, 400), &Convention::reconciled()).unwrap();
        let b3 = sr.apply(OpKind::B3, &sr.chi).unwrap();
        assert!((b3[100] - sr.chi[100]).abs() < 1e-3 * sr.chi[100]);
        let flat = vec![1.0; sr.len()];
        assert!(sr.apply(OpKind::B3, &flat).is_err());
        assert!(sr.apply(OpKind::B3, &sr.chi).is_ok());
        assert!(sr.apply(OpKind::B3, &sr.chi[1..]).is_err());
    }

    #[test]
    fn labels() {
        let p = ModelParams::kaluza_klein(1.0).unwrap();
        let l = Su11Labels::new(Half::from_int(1), sec(0, 0), &p, 2).unwrap();
        assert_eq!(l.casimir_label, 1.0);
        assert_eq!(l.weight_label, 4.0);
    }

    #[test]
    fn ladder_energy_drives_weight() {
        let p = ModelParams::new(1.2, 0.5, 2.0, 1.0, 0.3).unwrap();
        let s = sec(1, 3);
        let conv = Convention::reconciled();
        let j = s.m_plus();
        for (labels, sol) in ladder_spectrum(j, s, &p, 3, &conv).unwrap() {
            let grid = ScaledGrid { x_max: 60.0 + 10.0 * labels.level as f64, ..ScaledGrid::default() };
            let sr = ScaledRadial::from_problem(sol.energy, labels.level, j, s, &p, &conv, grid).unwrap();
            assert!((sr.weight() - labels.weight_label).abs() < 1e-10 * labels.weight_label);
            assert!(eigen_residuals(&sr).unwrap().max() < 1e-6);
        }
    }

    #[test]
    fn lowest_level_is_nodeless_state() {
        let p = ModelParams::new(1.0, 1.0, 2.0, 1.0, 0.3).unwrap();
        let s = sec(1, -1);
        let conv = Convention::reconciled();
        let j = s.m_plus() + Half::from_int(2);
        let lad = ladder_level(0, j, s, &p, &conv).unwrap();
        let sph = energy_spherical(j + Half::ONE, s, &p, &conv).unwrap();
        let e: Vec<f64> = lad.iter().map(|x| x.energy).collect();
        assert!(sph.iter().all(|x| e.iter().any(|y| (x.energy - y).abs() <= 1e-10 * y.abs())));
    }

    proptest! {
        #[test]
        fn ladder_matches_spherical(mu in 0.3f64..3.0, c1 in 0.0f64..2.0, c2 in 0.0f64..4.0, c3 in 0.0f64..4.0, c4 in 0.0f64..2.0,
                                    tq in -4i64..=4, dm in -3i64..=3, dj in 0i64..3, level in 0u32..4) {
            let p = ModelParams::new(mu, c1, c2, c3, c4).unwrap();
            let s = sec(tq, tq + 2 * dm);
            let conv = Convention::reconciled();
            let j = s.m_plus() + Half::from_int(dj);
            let n = j + Half::from_int(level as i64 + 1);
            match (ladder_level(level, j, s, &p, &conv), energy_spherical(n, s, &p, &conv)) {
                (Ok(a), Ok(b)) => {
                    // The spherical condition at n also admits other (j, n_r) pairs
                    // with the same energy only when degenerate; compare sets.
                    for x in &a {
                        prop_assert!(b.iter().any(|y| (x.energy - y.energy).abs() <= 1e-10 * y.energy.abs().max(1e-12)));
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }
}
