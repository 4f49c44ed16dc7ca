mod output;
mod settings;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use kkmono::qalgebra::{casimir_gap, casimir_value, solve_representation, structure_constants, structure_constants_gap};
use kkmono::repmatrix::{build_rep, dump, verify_relations};
use kkmono::spectra::{energy_parabolic, energy_spherical, wavefunction_eval, WaveSpec};
use kkmono::suite::{key_defects, recalibrate, render_defects, run_verify, Report, SuiteConfig};
use kkmono::sweep::{route_pairs, spectrum_rows, states_for, SpectrumRequest};
use kkmono::{Calibration, Convention, Error, Half, Mode, ParabolicQN, Sector};

use output::{Cell, Format, Meta, Table};
use settings::{invalid, parse_config, parse_routes, Cli, Command, Global};

/// Everything that ends a run early, with its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit 2.
    Invalid(String),
    /// No requested state is bound: exit 3.
    NoBound(String),
    /// A check or computation failed: exit 1.
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::InvalidSector(_)
            | Error::InvalidQuantumNumbers(_)
            | Error::Domain(_)
            | Error::Calibration(_) => Failure::Invalid(e.to_string()),
            Error::NoBoundState(_) | Error::ThresholdEnergy => Failure::NoBound(e.to_string()),
            other => Failure::Failed(other.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::NoBound(_) => 3,
            Failure::Failed(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::NoBound(m) | Failure::Failed(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = run(cli, &mut out);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kkmono: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli, out: &mut String) -> Result<(), Failure> {
    let mut g = cli.global;
    if let Some(path) = g.config.clone() {
        let text = std::fs::read_to_string(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        g.merge_file(&parse_config(&text)?)?;
    }
    let conv = g.convention()?;
    match cli.command {
        Command::Spectrum { routes } => spectrum(&g, &conv, routes.as_deref(), out),
        Command::Verify { recalibrate, paper_as_printed, samples } => verify(&g, &conv, recalibrate, paper_as_printed, samples, out),
        Command::Wavefunction { kind, n_r, j, n1, n2, branch, samples } => {
            wavefunction(&g, &conv, &WaveArgs { kind, n_r, j, n1, n2, branch, samples }, out)
        }
        Command::Algebra { p, matrices } => algebra(&g, &conv, &p, matrices, out),
    }
}

fn meta(conv: &Convention) -> Meta {
    Meta { version: env!("CARGO_PKG_VERSION"), mode: conv.mode.to_string(), calibration: conv.effective().hash() }
}

fn spectrum(g: &Global, conv: &Convention, routes: Option<&str>, out: &mut String) -> Result<(), Failure> {
    let routes = parse_routes(routes.unwrap_or("spherical,parabolic,algebraic,ladder"))?;
    let params = g.params()?;
    let axial = g.axial()?;
    let principal = g.principal()?;
    let mut states = Vec::new();
    for q in g.charges()? {
        let ns = match &principal {
            Some(ns) => ns.clone(),
            None => (1..=5).map(|k| q.abs() + Half::from_int(k)).collect(),
        };
        for &n in &ns {
            match &axial {
                Some(ms) => {
                    for &m in ms {
                        states.push((Sector::new(q, m)?, n));
                    }
                }
                None => {
                    let found = states_for(q, n);
                    if found.is_empty() {
                        return Err(invalid(format!("no sector with q = {q} admits n = {n}")));
                    }
                    states.extend(found);
                }
            }
        }
    }
    let req = SpectrumRequest { params, states, routes: routes.clone(), grid: g.grid()? };
    let rows = spectrum_rows(&req, conv)?;
    if rows.is_empty() {
        return Err(Failure::NoBound("no bound states for any requested state".into()));
    }
    let mut columns = vec!["q".to_string(), "m".into(), "n".into(), "branch".into()];
    for r in &routes {
        columns.push(format!("energy_{}", r.name()));
        columns.push(format!("residual_{}", r.name()));
        columns.push(format!("window_{}", r.name()));
    }
    for (a, b) in route_pairs(&routes) {
        columns.push(format!("gap_{}_{}", a.name(), b.name()));
    }
    let mut t = Table::new(columns);
    for row in rows {
        let mut cells: Vec<Cell> =
            vec![Cell::Short(row.q.value()), Cell::Short(row.m.value()), Cell::Short(row.n.value()), Cell::Int(row.branch as i64)];
        for s in &row.solutions {
            cells.push(s.map(|s| s.energy).into());
            cells.push(s.map(|s| s.residual).into());
            cells.push(s.map_or(Cell::Missing, |s| Cell::Flag(s.window_ok)));
        }
        cells.extend(row.gaps.iter().map(|&v| if v.is_nan() { Cell::Missing } else { Cell::Num(v) }));
        t.push(cells);
    }
    out.push_str(&t.render(g.format(), &meta(conv)));
    Ok(())
}

fn report_table(report: &Report) -> Table {
    let mut t = Table::new(["check", "status", "value", "bound", "limit", "upper", "cases", "worst"]);
    for c in &report.checks {
        t.push(vec![
            c.name.into(),
            (if c.passed { "pass" } else { "fail" }).into(),
            Cell::Num(c.value),
            format!("{:?}", c.bound).to_lowercase().into(),
            Cell::Num(c.limit),
            if c.upper.is_nan() { Cell::Missing } else { Cell::Num(c.upper) },
            Cell::Int(c.cases as i64),
            c.worst.clone().into(),
        ]);
    }
    t
}

fn verify(g: &Global, conv: &Convention, recal: bool, as_printed: bool, samples: Option<usize>, out: &mut String) -> Result<(), Failure> {
    let grid = g.grid()?;
    if recal {
        let (fresh, _) = recalibrate(&grid)?;
        let text = fresh.render();
        out.push_str(&text);
        let current = g.calibration_text()?;
        if text != current {
            let old = Calibration::parse(&current).ok();
            let changed: Vec<&str> =
                kkmono::calibration::KEYS.iter().copied().filter(|k| old.is_none_or(|o| o.get(k) != fresh.get(k))).collect();
            return Err(Failure::Failed(if changed.is_empty() {
                "recalibrated file differs from the one in force (formatting)".into()
            } else {
                format!("calibration drift in {}", changed.join(", "))
            }));
        }
        return Ok(());
    }
    let mut cfg = SuiteConfig { seed: g.seed.unwrap_or(0), oracle_grid: grid, ..SuiteConfig::default() };
    if let Some(s) = samples {
        cfg.samples = s;
    }
    let conv = if as_printed { Convention::new(Mode::Printed, conv.cal) } else { *conv };
    let report = run_verify(&cfg, &conv)?;
    match g.format() {
        Format::Table => {
            out.push_str(&report.render());
            if as_printed {
                out.push_str(&render_defects(&key_defects(&conv.cal, &grid)));
            }
        }
        f => out.push_str(&report_table(&report).render(f, &meta(&conv))),
    }
    if as_printed {
        return Ok(());
    }
    match report.first_failure() {
        None => Ok(()),
        Some(c) => Err(Failure::Failed(format!("verify failed: '{}' measured {:e} (first failing check)", c.name, c.value))),
    }
}

struct WaveArgs {
    kind: String,
    n_r: u32,
    j: Option<String>,
    n1: u32,
    n2: u32,
    branch: usize,
    samples: usize,
}

fn single<T: Copy + std::fmt::Display>(v: &[T], what: &str) -> Result<T, Failure> {
    match v {
        [x] => Ok(*x),
        _ => Err(invalid(format!("{what} needs exactly one value"))),
    }
}

fn one_sector(g: &Global) -> Result<Sector, Failure> {
    let q = single(&g.charges()?, "--q")?;
    let m = match g.axial()? {
        Some(ms) => single(&ms, "--m")?,
        None => q,
    };
    Ok(Sector::new(q, m)?)
}

fn wavefunction(g: &Global, conv: &Convention, a: &WaveArgs, out: &mut String) -> Result<(), Failure> {
    let params = g.params()?;
    let sector = one_sector(g)?;
    if a.samples < 2 {
        return Err(invalid("--samples must be at least 2"));
    }
    let j = match &a.j {
        Some(s) => s.parse::<Half>()?,
        None => sector.m_plus(),
    };
    let (ws, sols) = match a.kind.as_str() {
        "radial" | "angular" => {
            let ws = if a.kind == "radial" { WaveSpec::RadialSpherical { n_r: a.n_r, j, sector } } else { WaveSpec::Angular { j, sector } };
            ws.validate()?;
            let n = Half::from_int(a.n_r as i64) + j + Half::ONE;
            (ws, energy_spherical(n, sector, &params, conv)?)
        }
        _ => {
            let qn = ParabolicQN { n1: a.n1, n2: a.n2, m: sector.m, q: sector.q };
            let ws = if a.kind == "xi" { WaveSpec::ParabolicXi { n1: a.n1, sector } } else { WaveSpec::ParabolicEta { n2: a.n2, sector } };
            (ws, energy_parabolic(qn, &params, conv)?)
        }
    };
    let energy =
        sols.get(a.branch).ok_or_else(|| invalid(format!("branch {} not available ({} bound solutions)", a.branch, sols.len())))?.energy;
    let x = kkmono::suite::wave_samples(ws, energy, &params, conv, a.samples);
    let y = x.iter().map(|&t| wavefunction_eval(ws, energy, t, &params, conv)).collect::<Result<Vec<f64>, Error>>()?;
    let total = kkmono::oracle::normalize(&x, &y, None);
    if !(total.is_finite() && total > 0.0) {
        return Err(Failure::Failed(format!("normalization integral is {total}")));
    }
    let scale = total.sqrt().recip();
    let mut t = Table::new(["coordinate", "value"]);
    for (xi, yi) in x.iter().zip(&y) {
        t.push(vec![Cell::Num(*xi), Cell::Num(yi * scale)]);
    }
    let format = g.format.unwrap_or(Format::Csv);
    out.push_str(&t.render(format, &meta(conv)));
    Ok(())
}

fn algebra(g: &Global, conv: &Convention, p_list: &str, matrices: bool, out: &mut String) -> Result<(), Failure> {
    let params = g.params()?;
    let sector = one_sector(g)?;
    let ps: Vec<u32> = settings::list(p_list, |s| s.parse::<u32>().map_err(|_| invalid(format!("bad width '{s}'"))))?;
    let mode = conv.mode;
    let mut t = Table::new(["p", "branch", "energy", "u", "quantity", "index", "value"]);
    let mut any = false;
    for &p in &ps {
        let reps = match solve_representation(p, sector, &params, conv) {
            Ok(r) => r,
            Err(Error::NoUnitaryRep { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        for (b, rs) in reps.iter().enumerate() {
            any = true;
            let (k, cas) = match mode {
                Mode::Reconciled => (structure_constants_gap(rs.gap, sector, &params), casimir_gap(rs.gap, sector, &params)),
                Mode::Printed => (structure_constants(rs.energy, sector, &params), casimir_value(rs.energy, sector, &params, mode)),
            };
            let rep = build_rep(rs, &k, cas, mode)?;
            if matrices {
                out.push_str(&dump(&rep));
                continue;
            }
            let res = verify_relations(&rep, &k, cas);
            let mut row = |name: &str, index: Option<i64>, value: f64| {
                t.push(vec![
                    Cell::Int(p as i64),
                    Cell::Int(b as i64),
                    Cell::Num(rs.energy),
                    Cell::Num(rs.u),
                    name.into(),
                    index.map_or(Cell::Missing, Cell::Int),
                    Cell::Num(value),
                ])
            };
            for (name, v) in [
                ("r_aa", k.r_aa),
                ("r_ab", k.r_ab),
                ("r_a", k.r_a),
                ("r_b", k.r_b),
                ("r_1", k.r_1),
                ("s_aa", k.s_aa),
                ("s_a", k.s_a),
                ("s_1", k.s_1),
                ("casimir", cas),
            ] {
                row(name, None, v);
            }
            row("phi", Some(0), rs.phi_ends.0);
            for (i, v) in rs.phi_values.iter().enumerate() {
                row("phi", Some(i as i64 + 1), *v);
            }
            row("phi", Some(p as i64 + 1), rs.phi_ends.1);
            row("residual_ab_c", None, res.ab_c);
            row("residual_ac", None, res.ac);
            row("residual_bc", None, res.bc);
            row("residual_casimir", None, res.casimir);
        }
    }
    if !any {
        return Err(Failure::NoBound(format!("no unitary representation for p in {{{p_list}}}")));
    }
    if !matrices {
        out.push_str(&t.render(g.format(), &meta(conv)));
    }
    Ok(())
}
