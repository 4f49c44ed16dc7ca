//! Spectrum tables across sectors and principal numbers.

use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::Convention;
use crate::error::{Error, Result};
use crate::ladder::ladder_level;
use crate::model::{enumerate_parabolic, Half, ModelParams, Sector};
use crate::oracle::{energy_selfconsistent, GridSpec};
use crate::qalgebra::energy_algebraic;
use crate::spectra::{energy_kk_limit, energy_parabolic, energy_spherical, EnergySolution, Route};
use crate::suite::energy_gap;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRequest {
    pub params: ModelParams,
    pub states: Vec<(Sector, Half)>,
    pub routes: Vec<Route>,
    pub grid: GridSpec,
}

/// One bound state seen by several routes. `branch` counts the admissible
/// roots of the quantization condition from the lowest energy up.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub q: Half,
    pub m: Half,
    pub n: Half,
    pub branch: usize,
    /// Aligned with the requested routes.
    pub solutions: Vec<Option<EnergySolution>>,
    /// Relative energy gap for every pair of routes, in request order.
    pub gaps: Vec<f64>,
}

/// Route pairs in the order used by [`SpectrumRow::gaps`].
pub fn route_pairs(routes: &[Route]) -> Vec<(Route, Route)> {
    let mut out = Vec::new();
    for i in 0..routes.len() {
        for j in i + 1..routes.len() {
            out.push((routes[i], routes[j]));
        }
    }
    out
}

fn soft(r: Result<Vec<EnergySolution>>) -> Result<Vec<EnergySolution>> {
    match r {
        Ok(mut v) => {
            v.sort_by(|a, b| a.energy.total_cmp(&b.energy));
            Ok(v)
        }
        Err(Error::NoBoundState(_) | Error::NoUnitaryRep { .. } | Error::ThresholdEnergy) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// Energies of the state `(sector, n)` from one route. Routes that need a
/// single label use `j = m_plus` and `n1 = 0`; the others are degenerate.
pub fn route_solutions(route: Route, n: Half, sector: Sector, req: &SpectrumRequest, conv: &Convention) -> Result<Vec<EnergySolution>> {
    let p = &req.params;
    let top = (n - sector.m_plus() - Half::ONE)
        .to_integer()
        .filter(|k| *k >= 0)
        .ok_or_else(|| Error::InvalidQuantumNumbers(format!("n = {n} below m_plus + 1 = {}", sector.m_plus() + Half::ONE)))?
        as u32;
    soft(match route {
        Route::Spherical => energy_spherical(n, sector, p, conv),
        Route::Parabolic => energy_parabolic(enumerate_parabolic(n, sector, p)[0], p, conv),
        Route::Algebraic => energy_algebraic(top, sector, p, conv),
        Route::Ladder => ladder_level(top, sector.m_plus(), sector, p, conv),
        Route::Oracle => energy_selfconsistent(top, sector.m_plus(), sector, p, conv, &req.grid),
        Route::Limit => energy_kk_limit(n, sector, p).map(|v| v.into_iter().filter(|s| s.window_ok).collect()),
    })
}

/// Rows ordered by sector, then `n`, then branch. Fails on the first invalid
/// state; states without any bound solution produce no rows.
pub fn spectrum_rows(req: &SpectrumRequest, conv: &Convention) -> Result<Vec<SpectrumRow>> {
    if req.routes.is_empty() {
        return Err(Error::InvalidParams("no routes requested".into()));
    }
    req.params.validate()?;
    req.grid.validate()?;
    let mut states = req.states.clone();
    states.sort();
    states.dedup();
    let per_state: Vec<Result<Vec<SpectrumRow>>> = states
        .par_iter()
        .map(|&(sector, n)| {
            sector.validate()?;
            let lists = req.routes.iter().map(|&r| route_solutions(r, n, sector, req, conv)).collect::<Result<Vec<_>>>()?;
            let branches = lists.iter().map(Vec::len).max().unwrap_or(0);
            Ok((0..branches)
                .map(|b| {
                    let solutions: Vec<Option<EnergySolution>> = lists.iter().map(|l| l.get(b).copied()).collect();
                    let mut gaps = Vec::new();
                    for i in 0..solutions.len() {
                        for j in i + 1..solutions.len() {
                            gaps.push(match (solutions[i], solutions[j]) {
                                (Some(x), Some(y)) => energy_gap(&[x.energy], &[y.energy]),
                                _ => f64::NAN,
                            });
                        }
                    }
                    SpectrumRow { q: sector.q, m: sector.m, n, branch: b, solutions, gaps }
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_state {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Every admissible `(sector, n)` with charge `q` and principal number `n`.
pub fn states_for(q: Half, n: Half) -> Vec<(Sector, Half)> {
    let reach = n - Half::ONE;
    let mut out = Vec::new();
    let mut m = -reach;
    while m <= reach {
        if let Ok(s) = Sector::new(q, m) {
            if matches!((n - s.m_plus() - Half::ONE).to_integer(), Some(k) if k >= 0) {
                out.push((s, n));
            }
        }
        m = m + Half::from_twice(1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(routes: Vec<Route>) -> SpectrumRequest {
        SpectrumRequest {
            params: ModelParams::kaluza_klein(1.0).unwrap(),
            states: states_for(Half::from_int(2), Half::from_int(3)),
            routes,
            grid: GridSpec::default(),
        }
    }

    #[test]
    fn states_for_charge() {
        let s = states_for(Half::from_int(2), Half::from_int(3));
        let ms: Vec<String> = s.iter().map(|s| s.0.m.to_string()).collect();
        assert_eq!(ms, ["-2", "-1", "0", "1", "2"]);
        assert!(states_for(Half::from_int(2), Half::from_int(2)).is_empty());
        assert!(states_for(Half::from_int(2), Half::from_twice(7)).is_empty());
        assert_eq!(states_for(Half::from_twice(1), Half::from_twice(5)).len(), 4);
    }

    #[test]
    fn spherical_and_oracle_rows_agree() {
        let rows = spectrum_rows(&req(vec![Route::Spherical, Route::Oracle]), &Convention::reconciled()).unwrap();
        assert_eq!(rows.len(), 10);
        for r in &rows {
            assert!(r.gaps[0] < 1e-6, "{r:?}");
        }
        let keys: Vec<(Half, usize)> = rows.iter().map(|r| (r.m, r.branch)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn invalid_state_is_an_error() {
        let mut r = req(vec![Route::Spherical]);
        r.states = vec![(Sector::new(Half::from_int(2), Half::ONE).unwrap(), Half::from_int(2))];
        assert!(matches!(spectrum_rows(&r, &Convention::reconciled()), Err(Error::InvalidQuantumNumbers(_))));
    }

    #[test]
    fn printed_mode_has_no_kaluza_klein_states() {
        let rows = spectrum_rows(&req(vec![Route::Spherical]), &Convention::printed()).unwrap();
        assert!(rows.is_empty());
    }
}
