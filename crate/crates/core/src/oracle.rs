//! Finite-volume Sturm-Liouville eigensolvers used as ground truth.
//!
//! Both one-dimensional problems are written in divergence form
//! `-(x^a y')' + c x^b y = lambda x^w y` after factoring out the regular
//! power at the origin, so every unknown is smooth and the cell-centered
//! scheme converges at second order. Three grid levels are combined by
//! two rounds of Richardson extrapolation.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::Serialize;

use crate::calibration::Convention;
use crate::error::{Error, Result};
use crate::model::{deltas, separation_constant_a, Half, ModelParams, ParabolicQN, Sector};
use crate::numdiff;
use crate::spectra::{alpha_of, beta_of, parabolic_separation, EnergySolution, Route, WaveSpec};
use crate::tridiag::SymTridiag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScheme {
    Uniform,
    /// Faces geometrically graded towards the origin.
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub r_max: f64,
    pub points: usize,
    pub scheme: GridScheme,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { r_max: 20.0, points: 1000, scheme: GridScheme::Log }
    }
}

const GRADING: f64 = 4.0;
const MAX_DOUBLINGS: usize = 6;
const TAIL_TOL: f64 = 1e-10;

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::InvalidParams(format!("r_max must be positive, got {}", self.r_max)));
        }
        if self.points < 200 {
            return Err(Error::InvalidParams(format!("need at least 200 points, got {}", self.points)));
        }
        Ok(())
    }

    /// Cell faces `0 = f_0 < ... < f_N = r_max`.
    pub fn faces(&self) -> Vec<f64> {
        let n = self.points;
        match self.scheme {
            GridScheme::Uniform => (0..=n).map(|i| self.r_max * i as f64 / n as f64).collect(),
            GridScheme::Log => {
                let scale = self.r_max / GRADING.exp_m1();
                (0..=n).map(|i| scale * (GRADING * i as f64 / n as f64).exp_m1()).collect()
            }
        }
    }

    fn refined(&self, factor: usize) -> GridSpec {
        GridSpec { points: self.points * factor, ..*self }
    }

    fn enlarged(&self) -> GridSpec {
        GridSpec { r_max: 2.0 * self.r_max, ..*self }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigResult {
    /// Richardson-extrapolated eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Difference between the last two extrapolation levels.
    pub errors: Vec<f64>,
    /// Cell centers of the finest grid.
    pub x: Vec<f64>,
    /// Eigenfunctions on `x`, in the original (unfactored) variable.
    pub vectors: Vec<Vec<f64>>,
    /// Domain length actually used.
    pub r_max: f64,
}

// -(x^a y')' + coef x^b y = lambda x^w y on a finite-volume grid.
#[derive(Clone, Copy, Debug)]
struct DivergenceForm {
    a: f64,
    b: f64,
    w: f64,
    coef: f64,
}

// Integral of x^k over [lo, hi], accurate for thin cells far from the origin.
fn power_integral(k: f64, lo: f64, hi: f64) -> f64 {
    let kp = k + 1.0;
    if lo == 0.0 {
        return hi.powf(kp) / kp;
    }
    let u = (hi - lo) / lo;
    lo.powf(kp) * (kp * u.ln_1p()).exp_m1() / kp
}

impl DivergenceForm {
    fn assemble(&self, faces: &[f64]) -> (SymTridiag, Vec<f64>, Vec<f64>) {
        let n = faces.len() - 1;
        let centers: Vec<f64> = (0..n).map(|i| 0.5 * (faces[i] + faces[i + 1])).collect();
        let mass: Vec<f64> = (0..n).map(|i| power_integral(self.w, faces[i], faces[i + 1])).collect();
        let flux = |i: usize| -> f64 {
            // conductance through face i
            if i == 0 {
                0.0
            } else if i == n {
                faces[n].powf(self.a) / (faces[n] - centers[n - 1])
            } else {
                faces[i].powf(self.a) / (centers[i] - centers[i - 1])
            }
        };
        let mut d = Vec::with_capacity(n);
        let mut e = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let pot = self.coef * power_integral(self.b, faces[i], faces[i + 1]);
            d.push((flux(i) + flux(i + 1) + pot) / mass[i]);
            if i + 1 < n {
                e.push(-flux(i + 1) / (mass[i] * mass[i + 1]).sqrt());
            }
        }
        (SymTridiag::new(d, e), mass, centers)
    }

    fn eigenvalues(&self, grid: &GridSpec, count: usize) -> Vec<f64> {
        let (t, _, _) = self.assemble(&grid.faces());
        t.lowest(count)
    }

    // Eigenvectors of y (not of the symmetrized unknown) at the cell centers.
    fn eigenpairs(&self, grid: &GridSpec, count: usize) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let (t, mass, centers) = self.assemble(&grid.faces());
        let values = t.lowest(count);
        let vectors = values.iter().map(|&lam| t.eigenvector(lam).iter().zip(&mass).map(|(v, m)| v / m.sqrt()).collect()).collect();
        (values, centers, vectors)
    }
}

fn richardson(levels: [&[f64]; 3]) -> (Vec<f64>, Vec<f64>) {
    let count = levels[0].len().min(levels[1].len()).min(levels[2].len());
    let mut values = Vec::with_capacity(count);
    let mut errors = Vec::with_capacity(count);
    for ((a, b), c) in levels[0].iter().zip(levels[1]).zip(levels[2]).take(count) {
        let r1a = (4.0 * b - a) / 3.0;
        let r1b = (4.0 * c - b) / 3.0;
        let r2 = (16.0 * r1b - r1a) / 15.0;
        values.push(r2);
        errors.push((r2 - r1b).abs());
    }
    (values, errors)
}

fn tail_ratio(x: &[f64], y: &[f64], r_max: f64) -> f64 {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail = x.iter().zip(y).filter(|(xi, _)| **xi >= 0.9 * r_max).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    if peak == 0.0 {
        1.0
    } else {
        tail / peak
    }
}

// Enlarge the box until the highest requested eigenfunction has decayed, then
// extrapolate over three refinements.
fn solve_decaying<F>(form: DivergenceForm, grid: &GridSpec, count: usize, to_original: F, bound_below: f64) -> Result<EigResult>
where
    F: Fn(f64, f64) -> f64,
{
    grid.validate()?;
    if count == 0 {
        return Err(Error::InvalidParams("count must be positive".into()));
    }
    let mut g = *grid;
    for _ in 0..=MAX_DOUBLINGS {
        let (values, centers, vectors) = form.eigenpairs(&g, count);
        let top = &vectors[count - 1];
        let original: Vec<f64> = centers.iter().zip(top).map(|(&x, &v)| to_original(x, v)).collect();
        if values[count - 1] < bound_below && tail_ratio(&centers, &original, g.r_max) < TAIL_TOL {
            let fine = g.refined(4);
            let l0 = values;
            let l1 = form.eigenvalues(&g.refined(2), count);
            let (l2, x, vecs) = form.eigenpairs(&fine, count);
            let (eigenvalues, errors) = richardson([&l0, &l1, &l2]);
            let vectors = vecs.iter().map(|v| x.iter().zip(v).map(|(&xi, &vi)| to_original(xi, vi)).collect()).collect();
            return Ok(EigResult { eigenvalues, errors, x, vectors, r_max: g.r_max });
        }
        g = g.enlarged();
    }
    Err(Error::NoConvergence(format!("eigenfunction {} not confined after {MAX_DOUBLINGS} doublings of r_max", count - 1)))
}

/// Lowest `count` eigenvalues `beta` of `(-d^2/dr^2 + A / r^2 - alpha / r) chi = beta chi`.
pub fn radial_eigensolve(a: f64, alpha: f64, grid: &GridSpec, count: usize) -> Result<EigResult> {
    if !(a > -0.25) {
        return Err(Error::Domain(format!("centrifugal coefficient A = {a} must exceed -1/4")));
    }
    if !(alpha > 0.0) {
        return Err(Error::NoBoundState(format!("Coulomb coefficient {alpha} is not attractive")));
    }
    let s = -0.5 + (0.25 + a).sqrt();
    // chi = r^(s+1) phi
    let form = DivergenceForm { a: 2.0 * s + 2.0, b: 2.0 * s + 1.0, w: 2.0 * s + 2.0, coef: -alpha };
    let grid = GridSpec { r_max: grid.r_max / alpha, ..*grid };
    solve_decaying(form, &grid, count, |r, phi| r.powf(s + 1.0) * phi, 0.0)
}

/// Eigen-decomposition of one parabolic equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParabolicEig {
    /// `eps_n` in `-(xi f')' + (m^2 / (4 xi) + kappa^2 xi / 4) f = eps f`, ascending.
    pub eig: EigResult,
    /// Separation values `alpha / 4 - eps_n`, in the same order.
    pub lambda: Vec<f64>,
}

/// Lowest `count` separation eigenvalues of
/// `(d/dxi (xi d/dxi) - m^2 / (4 xi) + alpha / 4 + beta xi / 4) f = lambda f`.
pub fn parabolic_eigensolve(m_i: f64, alpha: f64, beta: f64, grid: &GridSpec, count: usize) -> Result<ParabolicEig> {
    if !(beta < 0.0) {
        return Err(Error::ThresholdEnergy);
    }
    let m = m_i.abs();
    let kappa2 = -beta;
    // f = xi^(m/2) g
    let form = DivergenceForm { a: m + 1.0, b: m + 1.0, w: m, coef: 0.25 * kappa2 };
    let grid = GridSpec { r_max: grid.r_max / kappa2.sqrt(), ..*grid };
    let eig = solve_decaying(form, &grid, count, |x, g| x.powf(0.5 * m) * g, f64::INFINITY)?;
    let lambda = eig.eigenvalues.iter().map(|e| 0.25 * alpha - e).collect();
    Ok(ParabolicEig { eig, lambda })
}

// Lowest eigenvalues of the unit-strength radial problem keyed by the bits of A.
type UnitKey = (u64, u32, usize, u64, bool);
static UNIT_COULOMB: Mutex<Option<HashMap<UnitKey, f64>>> = Mutex::new(None);

/// `beta` of the `n_r`-th state at `alpha = 1`; other strengths follow from
/// `beta(alpha) = alpha^2 beta(1)`.
pub fn unit_coulomb_eigenvalue(a: f64, n_r: u32, grid: &GridSpec) -> Result<f64> {
    let key = (a.to_bits(), n_r, grid.points, grid.r_max.to_bits(), grid.scheme == GridScheme::Log);
    if let Some(v) = UNIT_COULOMB.lock().ok().and_then(|c| c.as_ref().and_then(|m| m.get(&key).copied())) {
        return Ok(v);
    }
    let res = radial_eigensolve(a, 1.0, grid, n_r as usize + 1)?;
    let v = res.eigenvalues[n_r as usize];
    if let Ok(mut cache) = UNIT_COULOMB.lock() {
        cache.get_or_insert_with(HashMap::new).insert(key, v);
    }
    Ok(v)
}

/// All roots of `alpha(E)^2 b = beta(E)` on the window `(lower, top)`, for a
/// negative scale factor `b`. Without a lower end the window is searched
/// downward until the concave left-hand side turns negative.
fn selfconsistent_roots<A, B>(alpha: A, beta: B, b: f64, lower: Option<f64>, top: f64) -> Vec<f64>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let g = |e: f64| alpha(e).powi(2) * b - beta(e);
    let lo = match lower {
        Some(l) => l,
        None => {
            let mut span = 1.0 + top.abs();
            for _ in 0..200 {
                if g(top - span) < 0.0 && g(top - span) < g(top - 0.5 * span) {
                    break;
                }
                span *= 2.0;
            }
            top - span
        }
    };
    let (mut a, mut c) = (lo, top);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..300 {
        if c - a <= 1e-15 * (1.0 + a.abs().max(c.abs())) {
            break;
        }
        let x1 = c - phi * (c - a);
        let x2 = a + phi * (c - a);
        if g(x1) < g(x2) {
            a = x1;
        } else {
            c = x2;
        }
    }
    let peak = 0.5 * (a + c);
    if !(g(peak) > 0.0) {
        return Vec::new();
    }
    let bisect = |mut neg: f64, mut pos: f64| {
        for _ in 0..300 {
            let mid = 0.5 * (neg + pos);
            if mid == neg || mid == pos {
                break;
            }
            if g(mid) > 0.0 {
                pos = mid;
            } else {
                neg = mid;
            }
        }
        0.5 * (neg + pos)
    };
    let mut roots = Vec::new();
    if g(lo) < 0.0 {
        roots.push(bisect(lo, peak));
    }
    if g(top) < 0.0 {
        roots.push(bisect(top, peak));
    }
    roots.retain(|&e| e > lo && e < top && alpha(e) > 0.0 && beta(e) < 0.0);
    roots
}

// Upper end of the window where alpha > 0 and beta < 0.
fn window_top(sector: Sector, params: &ModelParams, conv: &Convention) -> Result<f64> {
    let q = sector.q.value();
    let beta_zero = 0.5 * (params.c4 + q * q / (params.mu * params.mu));
    let a0 = alpha_of(0.0, q, params, conv);
    let a1 = alpha_of(1.0, q, params, conv) - a0;
    if a1 > 0.0 {
        // alpha > 0 only above its zero; the window is bounded on both sides.
        let alpha_zero = -a0 / a1;
        if alpha_zero >= beta_zero {
            return Err(Error::NoBoundState("alpha > 0 and beta < 0 never hold together".into()));
        }
        Ok(beta_zero)
    } else if a1 < 0.0 {
        Ok(beta_zero.min(-a0 / a1))
    } else if a0 > 0.0 {
        Ok(beta_zero)
    } else {
        Err(Error::NoBoundState("Coulomb coefficient is never positive".into()))
    }
}

fn oracle_solutions(roots: Vec<f64>, conv: &Convention, err_scale: f64, what: String) -> Result<Vec<EnergySolution>> {
    if roots.is_empty() {
        return Err(Error::NoBoundState(what));
    }
    Ok(roots
        .into_iter()
        .map(|energy| EnergySolution { energy, route: Route::Oracle, mode: conv.mode, residual: err_scale, window_ok: true })
        .collect())
}

// Lower end of the window, present when alpha grows with E.
fn window_lower(sector: Sector, params: &ModelParams, conv: &Convention) -> Option<f64> {
    let q = sector.q.value();
    let a0 = alpha_of(0.0, q, params, conv);
    let a1 = alpha_of(1.0, q, params, conv) - a0;
    (a1 > 0.0).then(|| -a0 / a1)
}

fn solve_window(sector: Sector, params: &ModelParams, conv: &Convention, b: f64) -> Result<Vec<f64>> {
    let q = sector.q.value();
    let top = window_top(sector, params, conv)?;
    let alpha = |e: f64| alpha_of(e, q, params, conv);
    let beta = |e: f64| beta_of(e, q, params);
    Ok(selfconsistent_roots(alpha, beta, b, window_lower(sector, params, conv), top))
}

/// Energies for which the `n_r`-th numerical radial eigenvalue at `alpha(E)`
/// equals `beta(E)`. The residual field carries the extrapolation error.
pub fn energy_selfconsistent(
    n_r: u32,
    j: Half,
    sector: Sector,
    params: &ModelParams,
    conv: &Convention,
    grid: &GridSpec,
) -> Result<Vec<EnergySolution>> {
    params.validate()?;
    sector.validate()?;
    if !matches!((j - sector.m_plus()).to_integer(), Some(k) if k >= 0) {
        return Err(Error::InvalidQuantumNumbers(format!("j = {j} below m_plus = {}", sector.m_plus())));
    }
    let a = separation_constant_a(j, &deltas(sector, params));
    let b = unit_coulomb_eigenvalue(a, n_r, grid)?;
    let roots = solve_window(sector, params, conv, b)?;
    oracle_solutions(roots, conv, 0.0, format!("n_r = {n_r}, j = {j}, q = {}, m = {}", sector.q, sector.m))
}

/// Energies for which the two numerical parabolic spectra at `kappa(E)` add up
/// to `alpha(E) / 2`.
pub fn energy_selfconsistent_parabolic(
    qn: ParabolicQN,
    params: &ModelParams,
    conv: &Convention,
    grid: &GridSpec,
) -> Result<Vec<EnergySolution>> {
    let sector = qn.sector();
    params.validate()?;
    sector.validate()?;
    let dp = deltas(sector, params);
    // At kappa = 1 the eigenvalues scale out: eps_n(kappa) = kappa eps_n(1).
    let e1 = parabolic_eigensolve(dp.m1, 0.0, -1.0, grid, qn.n1 as usize + 1)?.eig.eigenvalues[qn.n1 as usize];
    let e2 = parabolic_eigensolve(dp.m2, 0.0, -1.0, grid, qn.n2 as usize + 1)?.eig.eigenvalues[qn.n2 as usize];
    let sum = e1 + e2;
    let b = -1.0 / (4.0 * sum * sum);
    let roots = solve_window(sector, params, conv, b)?;
    oracle_solutions(roots, conv, 0.0, format!("n1 = {}, n2 = {}, q = {}, m = {}", qn.n1, qn.n2, qn.q, qn.m))
}

/// Strict sign changes, ignoring samples below `1e-10` of the peak.
pub fn node_count(samples: &[f64]) -> usize {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-10 * peak;
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in samples {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Trapezoid approximation of the integral of `weight * y^2`.
pub fn normalize(x: &[f64], y: &[f64], weight: Option<&[f64]>) -> f64 {
    let f = |i: usize| y[i] * y[i] * weight.map_or(1.0, |w| w[i]);
    (1..x.len()).map(|i| 0.5 * (x[i] - x[i - 1]) * (f(i) + f(i - 1))).sum()
}

/// Largest defect of the closed-form factor in its own differential equation,
/// relative to the size of the terms.
pub fn ode_residual(ws: WaveSpec, energy: f64, points: &[f64], params: &ModelParams, conv: &Convention) -> Result<f64> {
    ws.validate()?;
    let sector = ws.sector();
    let dp = deltas(sector, params);
    let q = sector.q.value();
    let alpha = alpha_of(energy, q, params, conv);
    let beta = beta_of(energy, q, params);
    let f = |x: f64| crate::spectra::wavefunction_eval(ws, energy, x, params, conv).unwrap_or(f64::NAN);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &x in points {
        let value = f(x);
        let (defect, size) = match ws {
            WaveSpec::RadialSpherical { j, .. } => {
                let a = separation_constant_a(j, &dp);
                let h = 0.02 * x.min(1.0 / (-beta).sqrt());
                let d2 = numdiff::d2(&f, x, h);
                let lhs = -d2 + (a / (x * x) - alpha / x) * value;
                (lhs - beta * value, (beta * value).abs())
            }
            WaveSpec::Angular { j, .. } => {
                let a = separation_constant_a(j, &dp);
                let h = 0.02 * x.min(std::f64::consts::PI - x).min(0.05);
                let d1 = numdiff::d1(&f, x, h);
                let d2 = numdiff::d2(&f, x, h);
                let c = (0.5 * x).cos().powi(2);
                let s = (0.5 * x).sin().powi(2);
                let pot = (dp.m1 * dp.m1) / (4.0 * c) + (dp.m2 * dp.m2) / (4.0 * s);
                let cot = x.cos() / x.sin();
                let terms = [d2, cot * d1, a * value, pot * value];
                // theta is dimensionless, so |value| itself sets a floor on the scale.
                let size = terms.iter().map(|t| t.abs()).sum::<f64>() + value.abs();
                (terms[0] + terms[1] + terms[2] - terms[3], size)
            }
            WaveSpec::ParabolicXi { .. } | WaveSpec::ParabolicEta { .. } => {
                let (m, side, k) = parabolic_side(ws, energy, params, conv);
                let h = 0.02 * x.min(1.0 / (-beta).sqrt());
                let d1 = numdiff::d1(&f, x, h);
                let d2 = numdiff::d2(&f, x, h);
                let terms =
                    [x * d2 + d1, -m * m / (4.0 * x) * value, 0.25 * alpha * value, 0.25 * beta * x * value, -side * 0.5 * k * value];
                (terms.iter().sum::<f64>(), terms.iter().map(|t| t.abs()).sum::<f64>())
            }
        };
        worst = worst.max(defect.abs());
        scale = scale.max(size);
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}

// Index, sign of the separation term and the value of k implied by the
// factor's own quantization condition.
fn parabolic_side(ws: WaveSpec, energy: f64, params: &ModelParams, conv: &Convention) -> (f64, f64, f64) {
    let sector = ws.sector();
    let dp = deltas(sector, params);
    match ws {
        WaveSpec::ParabolicXi { n1, .. } => {
            let qn = ParabolicQN { n1, n2: 0, m: sector.m, q: sector.q };
            (dp.m1, 1.0, parabolic_separation(qn, energy, params, conv).0)
        }
        WaveSpec::ParabolicEta { n2, .. } => {
            let q = sector.q.value();
            let alpha = alpha_of(energy, q, params, conv);
            let kappa = (-beta_of(energy, q, params)).sqrt();
            let t = n2 as f64 + 0.5 * (dp.m2 + 1.0);
            let k = if conv.is_printed() { -2.0 * kappa * t - 0.5 * alpha } else { 2.0 * kappa * t - 0.5 * alpha };
            (dp.m2, -1.0, k)
        }
        _ => (0.0, 0.0, 0.0),
    }
}
