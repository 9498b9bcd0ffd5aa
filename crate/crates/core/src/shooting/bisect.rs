//! Bracketing and bisection on the shooting parameter D.

use rayon::prelude::*;
use thiserror::Error;

use crate::params::{Mode, Problem};
use crate::profile::{interface_extrapolate, InterfaceEstimate};

use super::{shoot, ShootError, ShotConfig, ShotKind, ShotOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub shot: ShotConfig,
    /// Stop once the bracket width is at most `bisect_tol · D`.
    pub bisect_tol: f64,
    /// Centre of the decade scan.
    pub d_ref: f64,
    /// Decades scanned on each side of `d_ref`.
    pub scan_decades: u32,
    /// Explicit scan grid; replaces the decade scan when set.
    pub grid: Option<Vec<f64>>,
    pub max_iter: usize,
    /// Relative floors at which ξ₀ and C are extracted from the lower shot;
    /// the second one serves as a consistency check.
    pub extract_floors: [f64; 2],
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            shot: ShotConfig::default(),
            bisect_tol: 1e-10,
            d_ref: 1.0,
            scan_decades: 12,
            grid: None,
            max_iter: 200,
            extract_floors: [1e-6, 1e-8],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub d: f64,
    pub kind: ShotKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    /// Largest scanned D classified SignChange below the transition.
    pub lo: f64,
    /// Smallest scanned D classified GrowUp above it.
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error("no bracket: the scan did not produce both SignChange and GrowUp ({} shots)", scan.len())]
    NoBracket { scan: Vec<ScanEntry> },
    #[error("classification is not monotone in D: GrowUp at D = {grow_up:e} but SignChange at D = {sign_change:e}")]
    NonMonotoneClassification { grow_up: f64, sign_change: f64 },
    #[error("invalid search configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    pub d_star: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    pub bracket_width: f64,
    pub iterations: usize,
    pub xi0_star: f64,
    pub c_star: f64,
    /// ξ₀ extracted at the second, lower floor.
    pub xi0_check: f64,
    pub ratio_residual: f64,
    pub uniqueness_guaranteed: bool,
    pub linear_reaction: bool,
    /// Set when bisection stopped because midpoints and quarter points all
    /// landed in the interface ambiguity window; holds the final bracket.
    pub ambiguity_window: Option<(f64, f64)>,
    pub brackets: Vec<Bracket>,
    pub scan: Vec<ScanEntry>,
    /// The final SignChange-side shot at the default floor.
    pub lower_shot: ShotOutcome,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        self.shot.validate()?;
        if !(self.bisect_tol > 0.0 && self.bisect_tol < 1.0) {
            return Err(SearchError::Config("bisect_tol must lie in (0, 1)"));
        }
        if !(self.d_ref > 0.0 && self.d_ref.is_finite()) {
            return Err(SearchError::Config("d_ref must be positive"));
        }
        if let Some(g) = &self.grid {
            if g.len() < 2 || g.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(SearchError::Config("scan grid needs at least two positive values"));
            }
        }
        if self.max_iter == 0 {
            return Err(SearchError::Config("max_iter must be at least 1"));
        }
        if self.extract_floors.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(SearchError::Config("extraction floors must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Shoot every D of `grid` concurrently; results are returned sorted by D.
pub fn scan(grid: &[f64], problem: &Problem, cfg: &ShotConfig) -> Result<Vec<ScanEntry>, ShootError> {
    let mut ds = grid.to_vec();
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    ds.par_iter()
        .map(|&d| shoot(d, problem, cfg).map(|o| ScanEntry { d, kind: o.kind }))
        .collect()
}

/// Transitions from SignChange to GrowUp in a sorted scan, ignoring shots
/// that are neither.
pub fn brackets_of(scan: &[ScanEntry]) -> Vec<Bracket> {
    let decided: Vec<&ScanEntry> = scan
        .iter()
        .filter(|e| e.kind.is_sign_change() || e.kind.is_grow_up())
        .collect();
    decided
        .windows(2)
        .filter(|w| w[0].kind.is_sign_change() && w[1].kind.is_grow_up())
        .map(|w| Bracket {
            lo: w[0].d,
            hi: w[1].d,
        })
        .collect()
}

/// The lowest GrowUp and the highest SignChange above it, if the scan interleaves.
pub fn first_violation(scan: &[ScanEntry]) -> Option<(f64, f64)> {
    let grow = scan.iter().find(|e| e.kind.is_grow_up())?;
    scan.iter()
        .rev()
        .find(|e| e.kind.is_sign_change() && e.d > grow.d)
        .map(|s| (grow.d, s.d))
}

fn run_scan(problem: &Problem, cfg: &SearchConfig) -> Result<Vec<ScanEntry>, SearchError> {
    if let Some(g) = &cfg.grid {
        return Ok(scan(g, problem, &cfg.shot)?);
    }
    let at = |k: i32| cfg.d_ref * 10f64.powi(k);
    let n = cfg.scan_decades as i32;
    if problem.params.mode == Mode::Exploratory {
        let grid: Vec<f64> = (-n..=n).map(at).collect();
        return Ok(scan(&grid, problem, &cfg.shot)?);
    }
    // Strict mode: widen ring by ring until both outcomes have been seen.
    let mut entries = scan(&[at(0)], problem, &cfg.shot)?;
    for k in 1..=n {
        let has = |f: fn(&ShotKind) -> bool| entries.iter().any(|e| f(&e.kind));
        if has(ShotKind::is_sign_change) && has(ShotKind::is_grow_up) {
            break;
        }
        entries.extend(scan(&[at(-k), at(k)], problem, &cfg.shot)?);
        entries.sort_by(|a, b| a.d.total_cmp(&b.d));
    }
    Ok(entries)
}

/// Locate every SignChange/GrowUp transition and bisect each one.
///
/// In strict mode an interleaved scan is an error and exactly one result is
/// returned; exploratory mode bisects every bracket it finds.
pub fn find_interfaces(problem: &Problem, cfg: &SearchConfig) -> Result<Vec<BisectionResult>, SearchError> {
    cfg.validate()?;
    let entries = run_scan(problem, cfg)?;
    let strict = problem.params.mode == Mode::Strict;
    if strict {
        if let Some((grow_up, sign_change)) = first_violation(&entries) {
            return Err(SearchError::NonMonotoneClassification { grow_up, sign_change });
        }
    }
    let brackets = brackets_of(&entries);
    if brackets.is_empty() {
        return Err(SearchError::NoBracket { scan: entries });
    }
    let targets = if strict { &brackets[..1] } else { &brackets[..] };
    targets
        .iter()
        .map(|b| bisect(problem, cfg, *b, &brackets, &entries))
        .collect()
}

/// The interface parameter D* nearest the bottom of the scan.
pub fn find_interface(problem: &Problem, cfg: &SearchConfig) -> Result<BisectionResult, SearchError> {
    Ok(find_interfaces(problem, cfg)?.remove(0))
}

fn bisect(
    problem: &Problem,
    cfg: &SearchConfig,
    bracket: Bracket,
    brackets: &[Bracket],
    entries: &[ScanEntry],
) -> Result<BisectionResult, SearchError> {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let mut iterations = 0;
    let mut ambiguity = None;
    let strict = problem.params.mode == Mode::Strict;
    while hi - lo > cfg.bisect_tol * 0.5 * (lo + hi) && iterations < cfg.max_iter {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let kind = shoot(mid, problem, &cfg.shot)?.kind;
        match kind {
            ShotKind::SignChange { .. } => lo = mid,
            ShotKind::GrowUp { .. } => hi = mid,
            _ => {
                // Never use an undecided shot as an endpoint; try to shrink
                // the bracket from the quarter points instead.
                let w = hi - lo;
                let q = [lo + 0.25 * w, lo + 0.75 * w];
                let kinds = [
                    shoot(q[0], problem, &cfg.shot)?.kind,
                    shoot(q[1], problem, &cfg.shot)?.kind,
                ];
                let (old_lo, old_hi) = (lo, hi);
                if kinds[1].is_sign_change() {
                    lo = q[1];
                } else if kinds[0].is_sign_change() {
                    lo = q[0];
                }
                if kinds[0].is_grow_up() {
                    hi = q[0];
                } else if kinds[1].is_grow_up() {
                    hi = q[1];
                }
                if strict && lo >= hi {
                    return Err(SearchError::NonMonotoneClassification {
                        grow_up: hi,
                        sign_change: lo,
                    });
                }
                if lo == old_lo && hi == old_hi {
                    ambiguity = Some((lo, hi));
                    break;
                }
            }
        }
    }
    let d_star = 0.5 * (lo + hi);
    let lower_shot = shoot(lo, problem, &cfg.shot)?;
    let primary = extract(lo, problem, cfg, cfg.extract_floors[0])?;
    let check = extract(lo, problem, cfg, cfg.extract_floors[1])?;
    Ok(BisectionResult {
        d_star,
        d_lo: lo,
        d_hi: hi,
        bracket_width: hi - lo,
        iterations,
        xi0_star: primary.xi0,
        c_star: primary.c,
        xi0_check: check.xi0,
        ratio_residual: primary.ratio_residual,
        uniqueness_guaranteed: problem.params.uniqueness_guaranteed(),
        linear_reaction: problem.params.is_linear_reaction(),
        ambiguity_window: ambiguity,
        brackets: brackets.to_vec(),
        scan: entries.to_vec(),
        lower_shot,
    })
}

/// Re-shoot D with the given floor and read (ξ₀, C) off the floor state.
fn extract(d: f64, problem: &Problem, cfg: &SearchConfig, floor: f64) -> Result<InterfaceEstimate, SearchError> {
    let shot_cfg = ShotConfig {
        f_floor: floor,
        ..cfg.shot
    };
    let out = shoot(d, problem, &shot_cfg)?;
    if out.stop != super::Stop::Floor {
        return Err(ShootError::Profile(crate::profile::ProfileError::NotNearInterface(format!(
            "the shot at D = {d:e} did not reach the floor {floor:e}"
        )))
        .into());
    }
    // The extraction floor is far above the level where the shot leaves the
    // interface solution, so the ratio test is only a sanity bound here.
    Ok(interface_extrapolate(&out.stop_point(), problem, 1.0).map_err(ShootError::from)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(d: f64, sign: bool) -> ScanEntry {
        ScanEntry {
            d,
            kind: if sign {
                ShotKind::SignChange {
                    xi0: 1.0,
                    v_at_xi0: -1.0,
                    y_at_floor: -100.0,
                }
            } else {
                ShotKind::GrowUp {
                    xi_min: 1.0,
                    f_min: 1.0,
                    z_at_min: 0.5,
                    tail_exponent_fit: 0.7,
                    decades: 3,
                }
            },
        }
    }

    #[test]
    fn brackets_skip_undecided_entries() {
        let mut scan = vec![entry(1.0, true), entry(2.0, true), entry(4.0, false)];
        scan.insert(
            2,
            ScanEntry {
                d: 3.0,
                kind: ShotKind::Undetermined { reason: "x".into() },
            },
        );
        assert_eq!(brackets_of(&scan), vec![Bracket { lo: 2.0, hi: 4.0 }]);
        assert!(first_violation(&scan).is_none());
    }

    #[test]
    fn interleaving_is_detected() {
        let scan = vec![entry(1.0, true), entry(2.0, false), entry(3.0, true), entry(4.0, false)];
        assert_eq!(brackets_of(&scan).len(), 2);
        assert_eq!(first_violation(&scan), Some((2.0, 3.0)));
    }

    #[test]
    fn bad_configuration_is_rejected() {
        let cfg = SearchConfig {
            bisect_tol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SearchConfig {
            grid: Some(vec![1.0]),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
