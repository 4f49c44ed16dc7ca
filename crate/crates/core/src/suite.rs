//! The invariant suite behind `kkmono verify`, and recalibration.
//!
//! Every check reduces to one measured number compared against a fixed
//! tolerance. Work items are evaluated in parallel but collected in input
//! order, so the rendered report depends only on the configuration and seed.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{Calibration, Convention, Mode, KEYS};
use crate::error::Result;
use crate::ladder::{ladder_level, verify_su11, ScaledGrid};
use crate::model::{enumerate_parabolic, enumerate_spherical, Half, ModelParams, ParabolicQN, Sector, SphericalQN};
use crate::oracle::{energy_selfconsistent, node_count, normalize, ode_residual, radial_eigensolve, GridSpec};
use crate::poly::{scaled_gap, Poly};
use crate::qalgebra::{
    casimir_gap, casimir_value, factored_phi, phi_general, phi_specific, solve_representation, structure_constants,
    structure_constants_gap, RepSolution,
};
use crate::repmatrix::{build_rep, r1_sensitivity, verify_relations};
use crate::spectra::{energy_kk_limit, energy_parabolic, energy_spherical, wavefunction_eval, EnergySolution, WaveSpec};

/// What `verify` sweeps over.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub mus: Vec<f64>,
    /// `(c1, c2, c3, c4)`.
    pub couplings: Vec<[f64; 4]>,
    pub q_max: Half,
    pub m_max: Half,
    pub n_max: Half,
    pub degeneracy_n_max: Half,
    pub p_max: u32,
    pub samples: usize,
    pub seed: u64,
    pub oracle_grid: GridSpec,
    pub ladder_grid: ScaledGrid,
    pub ladder_indices: Vec<f64>,
    pub ladder_levels: u32,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            mus: vec![0.5, 1.0, 2.0],
            couplings: vec![[0.0, 0.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.3], [0.5, 0.0, 3.0, 1.0]],
            q_max: Half::from_int(2),
            m_max: Half::from_int(2),
            n_max: Half::from_int(5),
            degeneracy_n_max: Half::from_int(8),
            p_max: 20,
            samples: 1000,
            seed: 0,
            oracle_grid: GridSpec::default(),
            ladder_grid: ScaledGrid::default(),
            ladder_indices: vec![0.0, 0.5, 0.75, 1.3, 2.0],
            ladder_levels: 3,
        }
    }
}

impl SuiteConfig {
    pub fn params(&self) -> Result<Vec<ModelParams>> {
        let mut out = Vec::new();
        for &mu in &self.mus {
            for c in &self.couplings {
                out.push(ModelParams::new(mu, c[0], c[1], c[2], c[3])?);
            }
        }
        Ok(out)
    }

    pub fn sectors(&self) -> Vec<Sector> {
        Sector::grid(self.q_max, self.m_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Below,
    AtLeast,
    Between,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
    /// Upper limit for [`Bound::Between`].
    pub upper: f64,
    pub passed: bool,
    /// Number of cases that went into `value`.
    pub cases: usize,
    pub worst: String,
}

impl Check {
    fn below(name: &'static str, w: Worst, limit: f64) -> Self {
        let passed = w.value < limit;
        Check { name, value: w.value, bound: Bound::Below, limit, upper: f64::NAN, passed, cases: w.cases, worst: w.at }
    }

    fn at_least(name: &'static str, w: Least, limit: f64) -> Self {
        let passed = w.value >= limit;
        Check { name, value: w.value, bound: Bound::AtLeast, limit, upper: f64::NAN, passed, cases: w.cases, worst: w.at }
    }

    fn between(name: &'static str, value: f64, lo: f64, hi: f64, cases: usize, at: String) -> Self {
        let passed = value >= lo && value <= hi;
        Check { name, value, bound: Bound::Between, limit: lo, upper: hi, passed, cases, worst: at }
    }

    fn requirement(&self) -> String {
        match self.bound {
            Bound::Below => format!("< {:.1e}", self.limit),
            Bound::AtLeast => format!(">= {:.1e}", self.limit),
            Bound::Between => format!("in [{}, {}]", self.limit, self.upper),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub mode: Mode,
    pub calibration_hash: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode {}", self.mode);
        let _ = writeln!(out, "calibration {}", self.calibration_hash);
        let _ = writeln!(out, "seed {}", self.seed);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<28} {:>24} {:<14} cases {:<6} worst {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                format!("{:.6e}", c.value),
                c.requirement(),
                c.cases,
                c.worst
            );
        }
        let _ = writeln!(out, "{}", if self.passed() { "all checks passed" } else { "some checks failed" });
        out
    }
}

// Running maximum, with NaN treated as a failure.
#[derive(Clone, Debug, Default)]
struct Worst {
    value: f64,
    at: String,
    cases: usize,
}

impl Worst {
    fn push(&mut self, v: f64, at: impl FnOnce() -> String) {
        self.cases += 1;
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > self.value || (self.at.is_empty() && v >= self.value) {
            self.value = v;
            self.at = at();
        }
    }

    fn merge(mut self, other: Worst) -> Worst {
        let cases = self.cases + other.cases;
        if other.value > self.value || self.at.is_empty() {
            self = other;
        }
        self.cases = cases;
        self
    }
}

#[derive(Clone, Debug)]
struct Least {
    value: f64,
    at: String,
    cases: usize,
}

impl Default for Least {
    fn default() -> Self {
        Least { value: f64::INFINITY, at: String::new(), cases: 0 }
    }
}

impl Least {
    fn push(&mut self, v: f64, at: impl FnOnce() -> String) {
        self.cases += 1;
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if v < self.value {
            self.value = v;
            self.at = at();
        }
    }

    fn merge(mut self, other: Least) -> Least {
        let cases = self.cases + other.cases;
        if other.value < self.value {
            self = other;
        }
        self.cases = cases;
        self
    }
}

/// `max` that lets NaN poison the result instead of skipping it.
fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

fn lesser(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NEG_INFINITY
    } else {
        a.min(b)
    }
}

fn merge_all(items: impl IntoIterator<Item = Worst>) -> Worst {
    items.into_iter().fold(Worst::default(), Worst::merge)
}

/// Largest relative difference between two sorted energy lists; infinite if
/// the lists have different lengths.
pub fn energy_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if x == y {
                0.0
            } else if scale.is_nan() || (x - y).is_nan() {
                f64::INFINITY
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, worse)
}

fn energies(r: Result<Vec<EnergySolution>>) -> Vec<f64> {
    let mut v: Vec<f64> = r.map(|s| s.into_iter().map(|e| e.energy).collect()).unwrap_or_default();
    v.sort_by(f64::total_cmp);
    v
}

fn params_label(p: &ModelParams) -> String {
    format!("mu={} c=({},{},{},{})", p.mu, p.c1, p.c2, p.c3, p.c4)
}

fn sector_label(s: Sector) -> String {
    format!("q={} m={}", s.q, s.m)
}

/// Runs every check and collects the report.
pub fn run_verify(cfg: &SuiteConfig, conv: &Convention) -> Result<Report> {
    let params = cfg.params()?;
    let sectors = cfg.sectors();
    let mut checks = Vec::new();
    checks.extend(kk_limit_checks(cfg, conv));
    checks.extend(route_checks(cfg, conv, &params, &sectors));
    checks.extend(structure_function_checks(cfg, conv));
    checks.extend(representation_checks(cfg, conv, &params, &sectors));
    checks.extend(su11_checks(cfg, conv));
    checks.extend(wavefunction_checks(cfg, conv, &params, &sectors));
    checks.push(degeneracy_check(cfg, &params, &sectors));
    Ok(Report { mode: conv.mode, calibration_hash: conv.cal.hash(), seed: cfg.seed, checks })
}

fn kk_limit_checks(cfg: &SuiteConfig, conv: &Convention) -> Vec<Check> {
    let p = ModelParams::kaluza_klein(1.0).expect("valid");
    let mut items = Vec::new();
    for tq in [1, 2, 4] {
        let q = Half::from_twice(tq);
        for tm in -tq..=tq {
            if (tm - tq) % 2 != 0 {
                continue;
            }
            let sector = Sector::new(q, Half::from_twice(tm)).expect("admissible");
            for k in 0..=5 {
                items.push((sector, q + Half::from_int(k)));
            }
        }
    }
    let results: Vec<(Worst, Worst, Worst)> = items
        .par_iter()
        .map(|&(sector, n)| {
            let at = || format!("{} n={n}", sector_label(sector));
            let (mut oracle, mut closed, mut threshold) = (Worst::default(), Worst::default(), Worst::default());
            let exact = energies(energy_kk_limit(n, sector, &p));
            if n == sector.q.abs() {
                // Eq. roots sit at the continuum threshold: no bound state.
                let bound = exact.iter().filter(|e| **e < 0.0).count() + energies(energy_spherical(n, sector, &p, conv)).len();
                threshold.push(bound as f64, at);
                return (oracle, closed, threshold);
            }
            closed.push(energy_gap(&energies(energy_spherical(n, sector, &p, conv)), &exact), at);
            for qn in enumerate_spherical(n, sector, &p) {
                let o = energies(energy_selfconsistent(qn.n_r, qn.j, sector, &p, conv, &cfg.oracle_grid));
                oracle.push(energy_gap(&o, &exact), || format!("{} n_r={} j={}", at(), qn.n_r, qn.j));
            }
            (oracle, closed, threshold)
        })
        .collect();
    let mut oracle = Worst::default();
    let mut closed = Worst::default();
    let mut threshold = Worst::default();
    for (o, c, t) in results {
        oracle = oracle.merge(o);
        closed = closed.merge(c);
        threshold = threshold.merge(t);
    }
    vec![
        Check::below("kk-limit oracle agreement", oracle, 1e-6),
        Check::below("kk-limit closed form", closed, 1e-12),
        Check::below("kk-limit threshold states", threshold, 0.5),
    ]
}

// One (params, sector, n) cell of the spectrum grid.
#[derive(Clone, Copy, Debug)]
struct Cell {
    params: ModelParams,
    sector: Sector,
    n: Half,
}

fn cells(cfg: &SuiteConfig, params: &[ModelParams], sectors: &[Sector]) -> Vec<Cell> {
    let mut out = Vec::new();
    for p in params {
        for &sector in sectors {
            let mut n = sector.m_plus() + Half::ONE;
            while n <= cfg.n_max {
                out.push(Cell { params: *p, sector, n });
                n = n + Half::ONE;
            }
        }
    }
    out
}

/// Energies of one grid cell from every closed-form route.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteEnergies {
    pub spherical: Vec<f64>,
    pub parabolic: Vec<Vec<f64>>,
    pub algebraic: Vec<f64>,
    pub ladder: Vec<Vec<f64>>,
}

pub fn route_energies(n: Half, sector: Sector, params: &ModelParams, conv: &Convention) -> RouteEnergies {
    let par = enumerate_parabolic(n, sector, params);
    let sph = enumerate_spherical(n, sector, params);
    let p = (n - sector.m_plus() - Half::ONE).to_integer().unwrap_or(-1);
    RouteEnergies {
        spherical: energies(energy_spherical(n, sector, params, conv)),
        parabolic: par.iter().map(|&qn| energies(energy_parabolic(qn, params, conv))).collect(),
        algebraic: if p >= 0 { energies(crate::qalgebra::energy_algebraic(p as u32, sector, params, conv)) } else { Vec::new() },
        ladder: sph.iter().map(|qn| energies(ladder_level(qn.n_r, qn.j, sector, params, conv))).collect(),
    }
}

fn route_checks(cfg: &SuiteConfig, conv: &Convention, params: &[ModelParams], sectors: &[Sector]) -> Vec<Check> {
    let grid = cells(cfg, params, sectors);
    let results: Vec<(Worst, Worst, Worst)> = grid
        .par_iter()
        .map(|cell| {
            let Cell { params: p, sector, n } = *cell;
            let at = || format!("{} {} n={n}", params_label(&p), sector_label(sector));
            let r = route_energies(n, sector, &p, conv);
            let mut lists: Vec<(&str, &Vec<f64>)> = vec![("spherical", &r.spherical), ("algebraic", &r.algebraic)];
            lists.extend(r.parabolic.iter().map(|v| ("parabolic", v)));
            lists.extend(r.ladder.iter().map(|v| ("ladder", v)));
            let mut pair = Worst::default();
            for i in 0..lists.len() {
                for j in i + 1..lists.len() {
                    pair.push(energy_gap(lists[i].1, lists[j].1), || format!("{} {}/{}", at(), lists[i].0, lists[j].0));
                }
            }
            let mut oracle = Worst::default();
            let mut bound = Worst::default();
            for qn in enumerate_spherical(n, sector, &p) {
                let o = energies(energy_selfconsistent(qn.n_r, qn.j, sector, &p, conv, &cfg.oracle_grid));
                oracle.push(energy_gap(&o, &r.spherical), || format!("{} n_r={} j={}", at(), qn.n_r, qn.j));
            }
            bound.push(if r.spherical.is_empty() { 0.0 } else { 1.0 }, at);
            (pair, oracle, bound)
        })
        .collect();
    let mut pair = Worst::default();
    let mut oracle = Worst::default();
    let mut bound_cells = 0usize;
    for (p, o, b) in results {
        pair = pair.merge(p);
        oracle = oracle.merge(o);
        bound_cells += b.value as usize;
    }
    pair.at = format!("{} ({} cells with bound states)", pair.at, bound_cells);
    vec![Check::below("routes pairwise", pair, 1e-10), Check::below("routes vs oracle", oracle, 1e-6)]
}

// Random model, sector and energy below the threshold.
fn sample_point(rng: &mut ChaCha8Rng) -> (ModelParams, Sector, f64, f64, f64) {
    loop {
        let p = ModelParams::new(
            rng.gen_range(0.3..3.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.0..4.0),
            rng.gen_range(-1.0..2.0),
        )
        .expect("valid ranges");
        let tq = rng.gen_range(-4i64..=4);
        let dm = rng.gen_range(-3i64..=3);
        let sector = Sector::new(Half::from_twice(tq), Half::from_twice(tq + 2 * dm)).expect("admissible");
        let e = rng.gen_range(-5.0..1.0);
        let x = rng.gen_range(-6.0..6.0);
        let u = rng.gen_range(-3.0..3.0);
        if crate::qalgebra::gap_of(e, sector, &p) > 1e-3 {
            return (p, sector, e, x, u);
        }
    }
}

fn structure_function_checks(cfg: &SuiteConfig, conv: &Convention) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<_> = (0..cfg.samples).map(|_| sample_point(&mut rng)).collect();
    let mode = conv.mode;
    let results: Vec<(Worst, Worst)> = draws
        .par_iter()
        .enumerate()
        .map(|(i, &(p, sector, e, x, u))| {
            let at = || format!("sample {i}: {} {} E={e:.6} x={x:.4}", params_label(&p), sector_label(sector));
            let (mut fac, mut gen) = (Worst::default(), Worst::default());
            let cmax = Poly::fit(|y| phi_specific(y, 0.0, e, sector, &p), 6, -3.0, 3.0).max_abs_coeff();
            let specific = phi_specific(x, u, e, sector, &p);
            match factored_phi(e, sector, &p, conv) {
                Ok(f) => fac.push(scaled_gap(f.eval_at(x + u), specific, cmax, x + u, 6), at),
                Err(_) => fac.push(f64::INFINITY, at),
            }
            let k = structure_constants(e, sector, &p);
            let general = phi_general(x, u, &k, casimir_value(e, sector, &p, mode), mode);
            gen.push(general.map_or(f64::INFINITY, |g| scaled_gap(g, specific, cmax, x + u, 6)), at);
            (fac, gen)
        })
        .collect();
    let fac = merge_all(results.iter().map(|r| r.0.clone()));
    let gen = merge_all(results.into_iter().map(|r| r.1));
    vec![Check::below("phi factored vs specific", fac, 1e-9), Check::below("phi general vs specific", gen, 1e-9)]
}

fn representation_checks(cfg: &SuiteConfig, conv: &Convention, params: &[ModelParams], sectors: &[Sector]) -> Vec<Check> {
    let mut items = Vec::new();
    for p in params {
        for &s in sectors {
            for dim in 0..=cfg.p_max {
                items.push((*p, s, dim));
            }
        }
    }
    let mode = conv.mode;
    let results: Vec<(Worst, Least, Worst, Least)> = items
        .par_iter()
        .map(|&(p, sector, dim)| {
            let mut ends = Worst::default();
            let mut positive = Least::default();
            let mut relations = Worst::default();
            let mut sensitivity = Least::default();
            let Ok(reps) = solve_representation(dim, sector, &p, conv) else {
                return (ends, positive, relations, sensitivity);
            };
            for rs in reps {
                let at = || format!("{} {} p={dim} E={:.12}", params_label(&p), sector_label(sector), rs.energy);
                let (a, b) = rs.scaled_ends();
                ends.push(worse(a, b), at);
                let (k0, cas0) = algebra_data(&rs, &p, mode);
                let min_phi = rs.phi_values.iter().copied().fold(f64::INFINITY, lesser) / rs.phi_scale;
                if dim > 0 {
                    positive.push(min_phi, at);
                    // A one-dimensional representation has no Phi entries to perturb.
                    sensitivity.push(r1_sensitivity(&rs, &k0, cas0, mode, 1e-3).unwrap_or(f64::NEG_INFINITY), at);
                }
                match build_rep(&rs, &k0, cas0, mode) {
                    Ok(rep) => relations.push(verify_relations(&rep, &k0, cas0).max(), at),
                    Err(_) => relations.push(f64::INFINITY, at),
                }
            }
            (ends, positive, relations, sensitivity)
        })
        .collect();
    let mut ends = Worst::default();
    let mut positive = Least::default();
    let mut relations = Worst::default();
    let mut sensitivity = Least::default();
    for (e, p, r, s) in results {
        ends = ends.merge(e);
        positive = positive.merge(p);
        relations = relations.merge(r);
        sensitivity = sensitivity.merge(s);
    }
    vec![
        Check::below("rep boundary zeros", ends, 1e-9),
        Check::at_least("rep positivity", positive, f64::MIN_POSITIVE),
        Check::below("algebra relations", relations, 1e-9),
        Check::at_least("r1 perturbation detected", sensitivity, 1e-4),
    ]
}

// Structure constants and Casimir a representation is verified against.
fn algebra_data(rs: &RepSolution, p: &ModelParams, mode: Mode) -> (crate::qalgebra::StructureConstants, f64) {
    match mode {
        Mode::Reconciled => (structure_constants_gap(rs.gap, rs.sector, p), casimir_gap(rs.gap, rs.sector, p)),
        Mode::Printed => (structure_constants(rs.energy, rs.sector, p), casimir_value(rs.energy, rs.sector, p, mode)),
    }
}

fn su11_checks(cfg: &SuiteConfig, conv: &Convention) -> Vec<Check> {
    let mut items = Vec::new();
    for &s in &cfg.ladder_indices {
        for n_r in 0..cfg.ladder_levels {
            items.push((n_r, s));
        }
    }
    let results: Vec<_> = items.par_iter().map(|&(n_r, s)| (n_r, s, verify_su11(n_r, s, cfg.ladder_grid, conv))).collect();
    let mut comm = Worst::default();
    let mut fact = Worst::default();
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_at = String::new();
    for (n_r, s, r) in results {
        let at = || format!("n_r={n_r} s={s}");
        match r {
            Ok(rep) => {
                comm.push(worse(rep.commutator, rep.eigen.max_commutator()), at);
                let casimir = rep.bumps.iter().chain([&rep.eigen]).map(|b| b.casimir_residual).fold(rep.casimir_spread, worse);
                fact.push(worse(rep.eigen_equations.max(), casimir), at);
                let ratio = rep.refinement_ratio();
                if !(ratio >= ratio_lo) {
                    ratio_lo = ratio;
                    ratio_at = at();
                }
            }
            Err(_) => {
                comm.push(f64::INFINITY, at);
                fact.push(f64::INFINITY, at);
                ratio_lo = f64::NAN;
                ratio_at = at();
            }
        }
    }
    let cases = comm.cases;
    vec![
        Check::below("su11 commutators", comm, 1e-6),
        Check::below("su11 factorization", fact, 1e-6),
        Check::between("su11 refinement ratio", ratio_lo, 12.0, 20.0, cases, ratio_at),
    ]
}

/// Sample points of a separated factor spanning its support.
pub fn wave_samples(ws: WaveSpec, energy: f64, params: &ModelParams, conv: &Convention, count: usize) -> Vec<f64> {
    let sector = ws.sector();
    let dp = crate::model::deltas(sector, params);
    let kappa = (-crate::spectra::beta_of(energy, sector.q.value(), params)).sqrt();
    let span = match ws {
        WaveSpec::Angular { .. } => {
            return (1..=count).map(|i| std::f64::consts::PI * i as f64 / (count + 1) as f64).collect();
        }
        WaveSpec::RadialSpherical { n_r, j, .. } => {
            let s = j.value() + dp.delta_mean();
            (4.0 * (n_r as f64 + s + 1.0) + 40.0) / (2.0 * kappa)
        }
        WaveSpec::ParabolicXi { n1, .. } => (4.0 * (n1 as f64 + dp.m1 + 1.0) + 40.0) / kappa,
        WaveSpec::ParabolicEta { n2, .. } => (4.0 * (n2 as f64 + dp.m2 + 1.0) + 40.0) / kappa,
    };
    let _ = conv;
    (1..=count).map(|i| span * i as f64 / count as f64).collect()
}

fn wave_states(cell: &Cell, conv: &Convention) -> Vec<(WaveSpec, f64)> {
    let Cell { params: p, sector, n } = *cell;
    let mut out = Vec::new();
    for e in energies(energy_spherical(n, sector, &p, conv)) {
        for SphericalQN { n_r, j, .. } in enumerate_spherical(n, sector, &p) {
            out.push((WaveSpec::RadialSpherical { n_r, j, sector }, e));
            out.push((WaveSpec::Angular { j, sector }, e));
        }
    }
    for ParabolicQN { n1, n2, .. } in enumerate_parabolic(n, sector, &p) {
        let qn = ParabolicQN { n1, n2, m: sector.m, q: sector.q };
        for e in energies(energy_parabolic(qn, &p, conv)) {
            out.push((WaveSpec::ParabolicXi { n1, sector }, e));
            out.push((WaveSpec::ParabolicEta { n2, sector }, e));
        }
    }
    out
}

fn wavefunction_checks(cfg: &SuiteConfig, conv: &Convention, params: &[ModelParams], sectors: &[Sector]) -> Vec<Check> {
    let grid = cells(cfg, params, sectors);
    let results: Vec<(Worst, Worst, Worst)> = grid
        .par_iter()
        .map(|cell| {
            let (mut ode, mut nodes, mut norm) = (Worst::default(), Worst::default(), Worst::default());
            for (ws, e) in wave_states(cell, conv) {
                let at = || format!("{} {ws} E={e:.12}", params_label(&cell.params));
                let probe = wave_samples(ws, e, &cell.params, conv, 40);
                ode.push(ode_residual(ws, e, &probe, &cell.params, conv).unwrap_or(f64::INFINITY), at);
                let x = wave_samples(ws, e, &cell.params, conv, 2000);
                let y: Vec<f64> = x.iter().map(|&t| wavefunction_eval(ws, e, t, &cell.params, conv).unwrap_or(f64::NAN)).collect();
                let count = node_count(&y);
                nodes.push((count as f64 - ws.nodes() as f64).abs(), at);
                let total = normalize(&x, &y, None);
                norm.push(if total.is_finite() && total > 0.0 { 0.0 } else { 1.0 }, at);
            }
            (ode, nodes, norm)
        })
        .collect();
    let mut ode = Worst::default();
    let mut nodes = Worst::default();
    let mut norm = Worst::default();
    for (o, n, m) in results {
        ode = ode.merge(o);
        nodes = nodes.merge(n);
        norm = norm.merge(m);
    }
    vec![
        Check::below("wavefunction ode residual", ode, 1e-8),
        Check::below("wavefunction node count", nodes, 0.5),
        Check::below("wavefunction normalization", norm, 0.5),
    ]
}

fn degeneracy_check(cfg: &SuiteConfig, params: &[ModelParams], sectors: &[Sector]) -> Check {
    let mut w = Worst::default();
    for p in params {
        for &sector in sectors {
            let mut n = Half::from_twice(1);
            while n <= cfg.degeneracy_n_max {
                let a = enumerate_spherical(n, sector, p).len() as f64;
                let b = enumerate_parabolic(n, sector, p).len() as f64;
                w.push((a - b).abs(), || format!("{} {} n={n}", params_label(p), sector_label(sector)));
                n = n + Half::from_twice(1);
            }
        }
    }
    Check::below("degeneracy counts", w, 0.5)
}

/// How well one candidate value of a key reproduces its reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyScore {
    pub key: &'static str,
    pub candidate: f64,
    pub discrepancy: f64,
}

/// Chooses every calibration key by agreement with the oracle or with a
/// calibration-free closed form, in dependency order. Ties keep the earlier
/// candidate.
pub fn recalibrate(grid: &GridSpec) -> Result<(Calibration, Vec<KeyScore>)> {
    let mut cal = Calibration::printed();
    let mut scores = Vec::new();
    for key in KEYS {
        let mut best: Option<(f64, f64)> = None;
        for &candidate in Calibration::candidates(key) {
            let mut trial = cal;
            trial.set(key, candidate)?;
            let d = key_discrepancy(key, &Convention::new(Mode::Reconciled, trial), grid);
            let d = if d.is_nan() { f64::INFINITY } else { d };
            scores.push(KeyScore { key, candidate, discrepancy: d });
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((candidate, d));
            }
        }
        if let Some((v, _)) = best {
            cal.set(key, v)?;
        }
    }
    Ok((cal, scores))
}

/// One calibration key evaluated at its printed value, all other keys kept at
/// the values in `cal`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyDefect {
    pub key: &'static str,
    pub printed: f64,
    pub calibrated: f64,
    pub printed_discrepancy: f64,
    pub calibrated_discrepancy: f64,
}

pub fn key_defects(cal: &Calibration, grid: &GridSpec) -> Vec<KeyDefect> {
    let printed = Calibration::printed();
    KEYS.par_iter()
        .map(|&key| {
            let mut trial = *cal;
            let pv = printed.get(key).unwrap_or(f64::NAN);
            let _ = trial.set(key, pv);
            let d = |c: Calibration| key_discrepancy(key, &Convention::new(Mode::Reconciled, c), grid);
            KeyDefect {
                key,
                printed: pv,
                calibrated: cal.get(key).unwrap_or(f64::NAN),
                printed_discrepancy: d(trial),
                calibrated_discrepancy: d(*cal),
            }
        })
        .collect()
}

pub fn render_defects(defects: &[KeyDefect]) -> String {
    let mut out = String::from("printed conventions, one key at a time:\n");
    for d in defects {
        let _ = writeln!(
            out,
            "{} {:<22} printed {:<4} -> {:.6e}   calibrated {:<4} -> {:.6e}",
            if d.printed == d.calibrated { "same  " } else { "DEFECT" },
            d.key,
            d.printed,
            d.printed_discrepancy,
            d.calibrated,
            d.calibrated_discrepancy
        );
    }
    out
}

fn sec(tq: i64, tm: i64) -> Sector {
    Sector::new(Half::from_twice(tq), Half::from_twice(tm)).expect("admissible")
}

fn oracle_vs<F>(cases: &[(ModelParams, Sector, Half)], conv: &Convention, grid: &GridSpec, route: F) -> f64
where
    F: Fn(Half, Sector, &ModelParams) -> Vec<f64>,
{
    let mut worst = 0.0f64;
    for &(p, sector, n) in cases {
        let want = route(n, sector, &p);
        for qn in enumerate_spherical(n, sector, &p) {
            let o = energies(energy_selfconsistent(qn.n_r, qn.j, sector, &p, conv, grid));
            let d = if want.is_empty() || o.is_empty() { f64::INFINITY } else { energy_gap(&o, &want) };
            worst = worse(worst, d);
        }
    }
    worst
}

fn key_discrepancy(key: &str, conv: &Convention, grid: &GridSpec) -> f64 {
    let generic = ModelParams { mu: 1.3, c1: 0.7, c2: 2.0, c3: 0.5, c4: 0.4 };
    let probes = [(generic, sec(1, 3), Half::from_twice(5)), (generic, sec(2, -2), Half::from_int(3))];
    match key {
        "alpha_sign" => {
            let p = ModelParams { mu: 1.0, c1: 0.0, c2: 0.0, c3: 0.0, c4: 0.0 };
            let cases = [(p, sec(2, 0), Half::from_int(2)), (p, sec(1, 1), Half::from_twice(5))];
            oracle_vs(&cases, conv, grid, |n, s, p| energies(energy_kk_limit(n, s, p)))
        }
        "c1_factor" => {
            // q = m = 0 and c2 = c3 = 0: the width condition does not involve m1 + m2.
            let p = ModelParams { mu: 1.1, c1: 1.0, c2: 0.0, c3: 0.0, c4: 0.2 };
            let cases = [(p, sec(0, 0), Half::from_int(1)), (p, sec(0, 0), Half::from_int(3))];
            oracle_vs(&cases, conv, grid, |n, s, p| {
                let dim = (n - s.m_plus() - Half::ONE).to_integer().unwrap_or(0) as u32;
                energies(crate::qalgebra::energy_algebraic(dim, s, p, conv))
            })
        }
        "n_offset" => oracle_vs(&probes, conv, grid, |n, s, p| energies(energy_spherical(n, s, p, conv))),
        "phi_prefactor_sign" => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let (p, sector, e, x, u) = sample_point(&mut rng);
                let cmax = Poly::fit(|y| phi_specific(y, 0.0, e, sector, &p), 6, -3.0, 3.0).max_abs_coeff();
                let d = factored_phi(e, sector, &p, conv)
                    .map_or(f64::INFINITY, |f| scaled_gap(f.eval_at(x + u), phi_specific(x, u, e, sector, &p), cmax, x + u, 6));
                worst = worse(worst, d);
            }
            worst
        }
        "eq51_m_factor" => oracle_vs(&probes, conv, grid, |n, s, p| {
            let dim = (n - s.m_plus() - Half::ONE).to_integer().unwrap_or(0) as u32;
            energies(crate::qalgebra::energy_algebraic(dim, s, p, conv))
        }),
        "ladder_weight_factor" => {
            let mut worst = 0.0f64;
            for &(p, sector, n) in &probes {
                for qn in enumerate_spherical(n, sector, &p) {
                    let o = energies(energy_selfconsistent(qn.n_r, qn.j, sector, &p, conv, grid));
                    let l = energies(ladder_level(qn.n_r, qn.j, sector, &p, conv));
                    let d = if l.is_empty() || o.is_empty() { f64::INFINITY } else { energy_gap(&o, &l) };
                    worst = worse(worst, d);
                }
            }
            worst
        }
        "ladder_x2_sign" => {
            // chi'' = (A / x^2 - f / x + sign) chi must hold with f = 2(n_r + s + 1),
            // so the oracle's n_r-th eigenvalue at Coulomb strength f is -sign.
            let sign = conv.effective().ladder_x2_sign;
            let mut worst = 0.0f64;
            for (n_r, s) in [(0u32, 0.5f64), (1, 1.3), (2, 0.0)] {
                let f = 2.0 * (n_r as f64 + s + 1.0);
                let beta = radial_eigensolve(s * (s + 1.0), f, grid, n_r as usize + 1).map_or(f64::NAN, |r| r.eigenvalues[n_r as usize]);
                let d = (beta + sign).abs();
                worst = worse(worst, d);
            }
            worst
        }
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_gap_cases() {
        assert_eq!(energy_gap(&[], &[]), 0.0);
        assert_eq!(energy_gap(&[1.0], &[]), f64::INFINITY);
        assert!((energy_gap(&[-2.0, -1.0], &[-2.0, -1.000001]) - 1e-6 / 1.000001).abs() < 1e-15);
        assert_eq!(energy_gap(&[-1.0, f64::NAN], &[-1.0, -2.0]), f64::INFINITY);
    }

    #[test]
    fn worst_keeps_first_label_on_ties() {
        let mut w = Worst::default();
        w.push(0.0, || "a".into());
        w.push(0.0, || "b".into());
        w.push(f64::NAN, || "c".into());
        assert_eq!((w.value, w.at.as_str(), w.cases), (f64::INFINITY, "c", 3));
    }

    #[test]
    fn degeneracy_counts_match() {
        let cfg = SuiteConfig::default();
        let c = degeneracy_check(&cfg, &cfg.params().unwrap(), &cfg.sectors());
        assert!(c.passed, "{c:?}");
    }
}
