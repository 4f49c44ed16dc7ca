//! Sign and factor conventions that are fixed against the numerical oracle.
//!
//! The file format is one `key = value` pair per line; anything after `#` is a
//! comment. Every key must appear exactly once.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The calibration shipped with the crate.
pub const SHIPPED: &str = include_str!("../../../calibration/reconciled.cal");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every closed form evaluated exactly as printed; defects are reported.
    Printed,
    /// Closed forms with the calibrated conventions and corrected typos.
    Reconciled,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" | "paper-as-printed" => Ok(Mode::Printed),
            "reconciled" | "oracle-reconciled" => Ok(Mode::Reconciled),
            _ => Err(Error::Calibration(format!("unknown mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Printed => "printed",
            Mode::Reconciled => "reconciled",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// Overall sign of the Coulomb coefficient relative to `2 mu E - 2 q^2 / mu`.
    pub alpha_sign: f64,
    /// Weight of `c1` in the Coulomb coefficient.
    pub c1_factor: f64,
    /// Offset added to `n - 1` in the spherical quantization condition.
    pub n_offset: f64,
    /// Sign of the `q^2` term in the structure-function prefactor.
    pub phi_prefactor_sign: f64,
    /// Weight of `m1 + m2` in the representation-width condition.
    pub eq51_m_factor: f64,
    /// Ratio between the su(1,1) weight and `alpha / sqrt(-beta)`.
    pub ladder_weight_factor: f64,
    /// Sign of the `x^2` term of the scaled radial operator.
    pub ladder_x2_sign: f64,
}

pub const KEYS: [&str; 7] =
    ["alpha_sign", "c1_factor", "n_offset", "phi_prefactor_sign", "eq51_m_factor", "ladder_weight_factor", "ladder_x2_sign"];

impl Calibration {
    /// Conventions read off the closed forms literally.
    pub fn printed() -> Self {
        Calibration {
            alpha_sign: 1.0,
            c1_factor: 0.5,
            n_offset: 0.0,
            phi_prefactor_sign: 1.0,
            eq51_m_factor: 1.0,
            ladder_weight_factor: 1.0,
            ladder_x2_sign: -1.0,
        }
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED).expect("shipped calibration file is valid")
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "alpha_sign" => self.alpha_sign,
            "c1_factor" => self.c1_factor,
            "n_offset" => self.n_offset,
            "phi_prefactor_sign" => self.phi_prefactor_sign,
            "eq51_m_factor" => self.eq51_m_factor,
            "ladder_weight_factor" => self.ladder_weight_factor,
            "ladder_x2_sign" => self.ladder_x2_sign,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "alpha_sign" => &mut self.alpha_sign,
            "c1_factor" => &mut self.c1_factor,
            "n_offset" => &mut self.n_offset,
            "phi_prefactor_sign" => &mut self.phi_prefactor_sign,
            "eq51_m_factor" => &mut self.eq51_m_factor,
            "ladder_weight_factor" => &mut self.ladder_weight_factor,
            "ladder_x2_sign" => &mut self.ladder_x2_sign,
            _ => return Err(Error::Calibration(format!("unknown key '{key}'"))),
        };
        *slot = value;
        Ok(())
    }

    /// Candidate values tried by recalibration, in order of preference.
    pub fn candidates(key: &str) -> &'static [f64] {
        match key {
            "alpha_sign" | "phi_prefactor_sign" | "ladder_x2_sign" => &[1.0, -1.0],
            "c1_factor" => &[0.5, 1.0],
            "n_offset" => &[0.0, 1.0],
            "eq51_m_factor" | "ladder_weight_factor" => &[1.0, 0.5, 2.0],
            _ => &[],
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cal = Calibration::printed();
        let mut seen = [false; KEYS.len()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Calibration(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            let value: f64 =
                value.trim().parse().map_err(|_| Error::Calibration(format!("line {}: bad number '{}'", lineno + 1, value.trim())))?;
            let idx = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Calibration(format!("line {}: unknown key '{key}'", lineno + 1)))?;
            if seen[idx] {
                return Err(Error::Calibration(format!("duplicate key '{key}'")));
            }
            if !value.is_finite() {
                return Err(Error::Calibration(format!("key '{key}' is not finite")));
            }
            seen[idx] = true;
            cal.set(key, value)?;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Calibration(format!("missing key '{}'", KEYS[i])));
        }
        Ok(cal)
    }

    /// Canonical text form. `recalibrate` regenerates the shipped file byte for byte.
    pub fn render(&self) -> String {
        let mut out = String::from(
            "# Conventions fixed against the finite-difference oracle.\n\
             # Regenerate with `kkmono verify --recalibrate`.\n",
        );
        for key in KEYS {
            let v = self.get(key).unwrap_or(f64::NAN);
            let _ = writeln!(out, "{key} = {}  # {}", format_value(v), note(key));
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn note(key: &str) -> &'static str {
    match key {
        "alpha_sign" => "oracle energy at c = 0 vs the Kaluza-Klein closed form",
        "c1_factor" => "oracle energies with c1 != 0 vs the algebraic threshold root",
        "n_offset" => "spherical quantization vs oracle energies",
        "phi_prefactor_sign" => "factored vs expanded structure function",
        "eq51_m_factor" => "algebraic spectrum vs oracle energies",
        "ladder_weight_factor" => "su(1,1) weight spectrum vs oracle energies",
        "ladder_x2_sign" => "oracle eigenvalue of the scaled radial operator",
        _ => "",
    }
}

/// Everything a route needs to know about conventions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Convention {
    pub mode: Mode,
    pub cal: Calibration,
}

impl Convention {
    pub fn new(mode: Mode, cal: Calibration) -> Self {
        Convention { mode, cal }
    }

    pub fn printed() -> Self {
        Convention::new(Mode::Printed, Calibration::printed())
    }

    pub fn reconciled() -> Self {
        Convention::new(Mode::Reconciled, Calibration::shipped())
    }

    /// The calibration in force: printed values in printed mode.
    pub fn effective(&self) -> Calibration {
        match self.mode {
            Mode::Printed => Calibration::printed(),
            Mode::Reconciled => self.cal,
        }
    }

    pub fn is_printed(&self) -> bool {
        self.mode == Mode::Printed
    }
}

impl Default for Convention {
    fn default() -> Self {
        Convention::reconciled()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_round_trips() {
        let cal = Calibration::shipped();
        assert_eq!(cal.render(), SHIPPED);
        assert_eq!(Calibration::parse(&cal.render()).unwrap(), cal);
    }

    #[test]
    fn shipped_values() {
        let cal = Calibration::shipped();
        assert_eq!(cal.alpha_sign, -1.0);
        assert_eq!(cal.c1_factor, 0.5);
        assert_eq!(cal.n_offset, 1.0);
        assert_eq!(cal.phi_prefactor_sign, -1.0);
        assert_eq!(cal.eq51_m_factor, 0.5);
        assert_eq!(cal.ladder_weight_factor, 0.5);
        assert_eq!(cal.ladder_x2_sign, 1.0);
    }

    #[test]
    fn parse_errors() {
        let good = Calibration::printed().render();
        assert!(Calibration::parse(&good).is_ok());
        assert!(Calibration::parse(&good.replace("alpha_sign = 1", "alpha_sign = x")).is_err());
        assert!(Calibration::parse(&format!("{good}alpha_sign = 1\n")).is_err());
        assert!(Calibration::parse(&format!("{good}bogus = 1\n")).is_err());
        let missing: String = good.lines().filter(|l| !l.starts_with("n_offset")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(Calibration::parse(&missing), Err(Error::Calibration(m)) if m.contains("n_offset")));
    }

    #[test]
    fn printed_mode_ignores_file() {
        let conv = Convention::new(Mode::Printed, Calibration::shipped());
        assert_eq!(conv.effective(), Calibration::printed());
    }
}
