//! Explicit finite matrix realizations of the quadratic algebra.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::calibration::Mode;
use crate::error::{Error, Result};
use crate::qalgebra::{casimir_terms, OscillatorRealization, RepSolution, StructureConstants};

/// How `B` is assembled from `b(N)`, `rho(N)` and the ladder operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assembly {
    /// `b(N) + b† rho(N) + rho(N) b`.
    Literal,
    /// Off-diagonal entries `sqrt(rho(k) Phi(k + 1))`, which is what the
    /// commutation relations actually require.
    Symmetric,
}

impl Assembly {
    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Printed => Assembly::Literal,
            Mode::Reconciled => Assembly::Symmetric,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraRep {
    pub dim: usize,
    pub p: u32,
    pub u: f64,
    pub energy: f64,
    pub n: DMatrix<f64>,
    /// `b†`: carries `sqrt(Phi(k))` from basis vector `k - 1` to `k`.
    pub raise: DMatrix<f64>,
    pub lower: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// `Phi(1..=p)` as used in the build.
    pub phi: Vec<f64>,
    pub assembly: Assembly,
}

/// Builds the matrices for `rs`. `Phi` comes from `rs`; `A(N)`, `b(N)` and
/// `rho(N)` come from the realization picked by `consts`.
pub fn build_rep(rs: &RepSolution, consts: &StructureConstants, casimir: f64, mode: Mode) -> Result<AlgebraRep> {
    build_rep_with(rs, consts, casimir, mode, Assembly::for_mode(mode))
}

pub fn build_rep_with(rs: &RepSolution, consts: &StructureConstants, casimir: f64, mode: Mode, assembly: Assembly) -> Result<AlgebraRep> {
    let real = OscillatorRealization::new(*consts, casimir, rs.u, mode)?;
    let dim = rs.dim();
    let phi = rs.phi_values.clone();
    if let Some((i, v)) = phi.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativePhi { index: i + 1, value: *v });
    }
    let n = DMatrix::from_fn(dim, dim, |i, j| if i == j { i as f64 } else { 0.0 });
    let raise = DMatrix::from_fn(dim, dim, |i, j| if i == j + 1 { phi[j].sqrt() } else { 0.0 });
    let lower = raise.transpose();
    let a = DMatrix::from_fn(dim, dim, |i, j| if i == j { real.a_of(i as f64) } else { 0.0 });
    let b = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            real.b_of(i as f64)
        } else if i.abs_diff(j) == 1 {
            let k = i.min(j);
            match assembly {
                Assembly::Literal => real.rho_of(k as f64) * phi[k].sqrt(),
                Assembly::Symmetric => (real.rho_of(k as f64) * phi[k]).sqrt(),
            }
        } else {
            0.0
        }
    });
    let c = &a * &b - &b * &a;
    Ok(AlgebraRep { dim, p: rs.p, u: rs.u, energy: rs.energy, n, raise, lower, a, b, c, phi, assembly })
}

/// Largest singular value by power iteration on `M^T M`.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let mtm = m.transpose() * m;
    let n = mtm.nrows();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 31) % 7) as f64);
    v /= v.norm();
    let mut lam = 0.0;
    for _ in 0..50 {
        let w = &mtm * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / nw;
        if (next - lam).abs() <= 1e-12 * next.abs() {
            lam = next;
            break;
        }
        lam = next;
    }
    lam.max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelationResiduals {
    pub ab_c: f64,
    pub ac: f64,
    pub bc: f64,
    pub casimir: f64,
}

impl RelationResiduals {
    /// Largest residual; NaN counts as infinite.
    pub fn max(&self) -> f64 {
        [self.ab_c, self.ac, self.bc, self.casimir].into_iter().fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
    }
}

fn anti(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y + y * x
}

// ||lhs - sum(rhs)|| / max norm over lhs and every rhs term.
fn relative(lhs: DMatrix<f64>, rhs: Vec<DMatrix<f64>>) -> f64 {
    let mut scale = op_norm(&lhs);
    let mut diff = lhs;
    for t in &rhs {
        scale = scale.max(op_norm(t));
        diff -= t;
    }
    let r = op_norm(&diff);
    if !r.is_finite() || !scale.is_finite() {
        f64::INFINITY
    } else if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

// Both sides of [A, C] = r_aa A^2 + r_ab {A, B} + r_a A + r_b B + r_1.
fn ac_relation(rep: &AlgebraRep, k: &StructureConstants) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let (a, b, c) = (&rep.a, &rep.b, &rep.c);
    let id = DMatrix::<f64>::identity(rep.dim, rep.dim);
    (a * c - c * a, vec![a * a * k.r_aa, anti(a, b) * k.r_ab, a * k.r_a, b * k.r_b, &id * k.r_1])
}

pub fn verify_relations(rep: &AlgebraRep, k: &StructureConstants, casimir: f64) -> RelationResiduals {
    let (a, b, c) = (&rep.a, &rep.b, &rep.c);
    let id = DMatrix::<f64>::identity(rep.dim, rep.dim);
    let a2 = a * a;
    let ab_c = relative(a * b - b * a, vec![c.clone()]);
    let (lhs, rhs) = ac_relation(rep, k);
    let ac = relative(lhs, rhs);
    let bc = relative(b * c - c * b, vec![&a2 * k.s_aa, -(b * b) * k.r_ab, -anti(a, b) * k.r_aa, a * k.s_a, -b * k.r_a, &id * k.s_1]);
    let terms = casimir_terms(a, b, c, k).expect("square matrices of one size");
    let cas = relative(&id * casimir, terms);
    RelationResiduals { ab_c, ac, bc, casimir: cas }
}

/// Largest residual after building the realization with `r_1` shifted by
/// `shift` times the scale of the `[A, C]` relation, checked against the true
/// constants. A working check reports something of order `shift`.
pub fn r1_sensitivity(rs: &RepSolution, k: &StructureConstants, casimir: f64, mode: Mode, shift: f64) -> Result<f64> {
    let rep = build_rep(rs, k, casimir, mode)?;
    let (lhs, rhs) = ac_relation(&rep, k);
    let scale = rhs.iter().map(op_norm).fold(op_norm(&lhs), f64::max).max(f64::MIN_POSITIVE);
    let bad = StructureConstants { r_1: k.r_1 + shift * scale, ..*k };
    let rep = build_rep(rs, &bad, casimir, mode)?;
    Ok(verify_relations(&rep, k, casimir).max())
}

/// Diagonal of `b b† - b† b` minus `Phi(k + 1) - Phi(k)`, and the worst entry of
/// `[N, b†] - b†`, `[N, b] + b`.
pub fn oscillator_defects(rep: &AlgebraRep) -> (f64, f64) {
    let comm = &rep.lower * &rep.raise - &rep.raise * &rep.lower;
    let phi = |k: usize| {
        if k == 0 || k > rep.phi.len() {
            0.0
        } else {
            rep.phi[k - 1]
        }
    };
    let mut deformed: f64 = 0.0;
    for i in 0..rep.dim {
        for j in 0..rep.dim {
            let want = if i == j { phi(i + 1) - phi(i) } else { 0.0 };
            deformed = deformed.max((comm[(i, j)] - want).abs());
        }
    }
    let nr = &rep.n * &rep.raise - &rep.raise * &rep.n - &rep.raise;
    let nl = &rep.n * &rep.lower - &rep.lower * &rep.n + &rep.lower;
    let ladder = nr.amax().max(nl.amax());
    (deformed, ladder)
}

/// Plain-text dump: a `dim p u E` header line, then each matrix as a name line
/// followed by whitespace-separated rows.
pub fn dump(rep: &AlgebraRep) -> String {
    let mut out = String::from("dim p u E\n");
    out += &format!("{} {} {:.16e} {:.16e}\n", rep.dim, rep.p, rep.u, rep.energy);
    for (name, m) in [("N", &rep.n), ("raise", &rep.raise), ("lower", &rep.lower), ("A", &rep.a), ("B", &rep.b), ("C", &rep.c)] {
        out += name;
        out.push('\n');
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
            out += &row.join(" ");
            out.push('\n');
        }
    }
    out
}
