//! Command-line flags, the optional config file, and their merge.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kkmono::oracle::{GridScheme, GridSpec};
use kkmono::spectra::Route;
use kkmono::{Calibration, Convention, Half, Mode, ModelParams};

use crate::output::Format;
use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "kkmono", version, about = "Bound states and symmetry algebra of the generalized Kaluza-Klein monopole")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand. Each one may also come from the
/// config file under the same name (dashes or underscores).
#[derive(Debug, Default, Args)]
pub struct Global {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["printed", "reconciled"])]
    pub mode: Option<String>,
    #[arg(long, global = true)]
    pub calibration: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for the random samples drawn by `verify`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// `c1,c2,c3,c4`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Charges, comma separated (`1/2`, `0.5`, `-1`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Axial numbers; every admissible `m` when omitted.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m: Option<String>,
    /// Principal numbers; `|q| + 1 ..= |q| + 5` when omitted.
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// Oracle box size in units of the Coulomb length.
    #[arg(long = "r-max", global = true)]
    pub r_max: Option<f64>,
    /// Oracle cells on the coarsest grid.
    #[arg(long, global = true)]
    pub points: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energies from the requested routes, one row per bound state.
    Spectrum {
        /// Any of spherical, parabolic, algebraic, ladder, oracle, limit.
        #[arg(long)]
        routes: Option<String>,
    },
    /// Run the invariant suite.
    Verify {
        /// Rebuild the calibration from the oracle and compare it to the one in force.
        #[arg(long)]
        recalibrate: bool,
        /// Run with the printed conventions and report their defects without failing.
        #[arg(long = "paper-as-printed")]
        paper_as_printed: bool,
        /// Random structure-function samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Samples of one separated wavefunction factor.
    Wavefunction {
        #[arg(long, value_parser = ["radial", "angular", "xi", "eta"], default_value = "radial")]
        kind: String,
        #[arg(long = "n-r", default_value_t = 0)]
        n_r: u32,
        /// Angular index; the sector's lowest when omitted.
        #[arg(long)]
        j: Option<String>,
        #[arg(long, default_value_t = 0)]
        n1: u32,
        #[arg(long, default_value_t = 0)]
        n2: u32,
        /// Which root of the quantization condition, lowest first.
        #[arg(long, default_value_t = 0)]
        branch: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Structure constants, Casimir, structure function and relation residuals
    /// of the finite-dimensional representations.
    Algebra {
        /// Representation widths `p` (dimension `p + 1`), comma separated.
        #[arg(long, default_value = "0,1,2,3")]
        p: String,
        /// Print the matrices instead of the table.
        #[arg(long)]
        matrices: bool,
    },
}

pub fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

const FILE_KEYS: [&str; 11] = ["mode", "calibration", "format", "seed", "mu", "c", "q", "m", "n", "r_max", "points"];

/// Reads a flat `key = value` file with `#` comments.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| invalid(format!("config line {}: expected 'key = value'", i + 1)))?;
        let k = k.trim().replace('-', "_");
        if !FILE_KEYS.contains(&k.as_str()) {
            return Err(invalid(format!("config line {}: unknown key '{k}'", i + 1)));
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(invalid(format!("config: duplicate key '{k}'")));
        }
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Failure> {
    v.parse().map_err(|_| invalid(format!("config: bad value '{v}' for '{key}'")))
}

impl Global {
    /// Fills every unset flag from the config file.
    pub fn merge_file(&mut self, file: &BTreeMap<String, String>) -> Result<(), Failure> {
        for (k, v) in file {
            match k.as_str() {
                "mode" => {
                    parse_value::<Mode>(k, v)?;
                    self.mode.get_or_insert_with(|| v.clone());
                }
                "calibration" => {
                    self.calibration.get_or_insert_with(|| PathBuf::from(v));
                }
                "format" => {
                    let f = v.parse::<Format>().map_err(invalid)?;
                    self.format.get_or_insert(f);
                }
                "seed" => {
                    let s = parse_value(k, v)?;
                    self.seed.get_or_insert(s);
                }
                "mu" => {
                    let x = parse_value(k, v)?;
                    self.mu.get_or_insert(x);
                }
                "r_max" => {
                    let x = parse_value(k, v)?;
                    self.r_max.get_or_insert(x);
                }
                "points" => {
                    let x = parse_value(k, v)?;
                    self.points.get_or_insert(x);
                }
                "c" => {
                    self.c.get_or_insert_with(|| v.clone());
                }
                "q" => {
                    self.q.get_or_insert_with(|| v.clone());
                }
                "m" => {
                    self.m.get_or_insert_with(|| v.clone());
                }
                "n" => {
                    self.n.get_or_insert_with(|| v.clone());
                }
                _ => unreachable!("keys are checked while parsing"),
            }
        }
        Ok(())
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Table)
    }

    pub fn convention(&self) -> Result<Convention, Failure> {
        let mode: Mode = self.mode.as_deref().unwrap_or("reconciled").parse().map_err(Failure::from)?;
        let cal = match &self.calibration {
            None => Calibration::shipped(),
            Some(p) => Calibration::parse(&read(p)?)?,
        };
        Ok(Convention::new(mode, cal))
    }

    /// Text of the calibration in force, as stored on disk.
    pub fn calibration_text(&self) -> Result<String, Failure> {
        match &self.calibration {
            None => Ok(kkmono::calibration::SHIPPED.to_string()),
            Some(p) => read(p),
        }
    }

    pub fn params(&self) -> Result<ModelParams, Failure> {
        let c = match &self.c {
            None => [0.0; 4],
            Some(s) => {
                let v: Vec<f64> = list(s, |x| x.parse::<f64>().map_err(|_| invalid(format!("bad coupling '{x}'"))))?;
                <[f64; 4]>::try_from(v).map_err(|_| invalid("--c needs four values c1,c2,c3,c4"))?
            }
        };
        Ok(ModelParams::new(self.mu.unwrap_or(1.0), c[0], c[1], c[2], c[3])?)
    }

    pub fn charges(&self) -> Result<Vec<Half>, Failure> {
        list(self.q.as_deref().unwrap_or("1"), |x| Ok(x.parse::<Half>()?))
    }

    pub fn axial(&self) -> Result<Option<Vec<Half>>, Failure> {
        self.m.as_deref().map(|s| list(s, |x| Ok(x.parse::<Half>()?))).transpose()
    }

    pub fn principal(&self) -> Result<Option<Vec<Half>>, Failure> {
        self.n.as_deref().map(|s| list(s, |x| Ok(x.parse::<Half>()?))).transpose()
    }

    pub fn grid(&self) -> Result<GridSpec, Failure> {
        let d = GridSpec::default();
        let g = GridSpec { r_max: self.r_max.unwrap_or(d.r_max), points: self.points.unwrap_or(d.points), scheme: GridScheme::Log };
        g.validate()?;
        Ok(g)
    }
}

pub fn parse_routes(s: &str) -> Result<Vec<Route>, Failure> {
    let routes: Vec<Route> = list(s, |x| Ok(x.parse::<Route>()?))?;
    for (i, r) in routes.iter().enumerate() {
        if routes[..i].contains(r) {
            return Err(invalid(format!("route '{}' listed twice", r.name())));
        }
    }
    Ok(routes)
}

pub fn list<T>(s: &str, f: impl Fn(&str) -> Result<T, Failure>) -> Result<Vec<T>, Failure> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err(invalid(format!("empty list '{s}'")));
    }
    items.into_iter().map(f).collect()
}

fn read(p: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_fills_unset_flags() {
        let file = parse_config("# run\nmu = 2\nq = 1/2, 1\nformat = csv\nr-max = 30\n").unwrap();
        let mut g = Global { mu: Some(0.5), ..Global::default() };
        g.merge_file(&file).unwrap();
        assert_eq!(g.mu, Some(0.5));
        assert_eq!(g.format(), Format::Csv);
        assert_eq!(g.charges().unwrap(), vec![Half::from_twice(1), Half::from_int(1)]);
        assert_eq!(g.r_max, Some(30.0));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("mu 2").is_err());
        assert!(parse_config("mu = 1\nmu = 2").is_err());
    }

    #[test]
    fn couplings_need_four_values() {
        let g = Global { c: Some("1,2,3".into()), ..Global::default() };
        assert!(g.params().is_err());
        let g = Global { c: Some("1,2,3,-0.5".into()), mu: Some(2.0), ..Global::default() };
        assert_eq!(g.params().unwrap().c4, -0.5);
    }

    #[test]
    fn duplicate_routes_rejected() {
        assert!(parse_routes("spherical,oracle,spherical").is_err());
        assert_eq!(parse_routes("ladder, limit").unwrap(), vec![Route::Ladder, Route::Limit]);
    }
}
