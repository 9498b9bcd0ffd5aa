//! Serialised records. Floats are written with 17 significant digits and
//! fields in declaration order, so identical runs give identical bytes.

use std::io::{self, Write};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::params::Problem;
use crate::phase::{CriticalPointEntry, PhasePoint};
use crate::shooting::{
    BisectionResult, FitCheck, FlowReport, ShotKind, ShotOutcome, SupersolutionReport,
};

/// A float written as `d.dddddddddddddddde±x`; NaN and infinities become null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

fn opt(x: Option<f64>) -> Option<F17> {
    x.map(F17)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialise");
    s.push('\n');
    s
}

#[derive(Serialize)]
pub struct ParamsRecord {
    pub m: F17,
    pub p: F17,
    pub sigma: F17,
    #[serde(rename = "N")]
    pub n: u32,
    pub mode: &'static str,
}

impl ParamsRecord {
    pub fn new(problem: &Problem) -> Self {
        let ps = problem.params;
        Self {
            m: F17(ps.m),
            p: F17(ps.p),
            sigma: F17(ps.sigma),
            n: ps.n,
            mode: ps.mode.as_str(),
        }
    }
}

#[derive(Serialize)]
pub struct ExponentsRecord {
    pub params: ParamsRecord,
    pub alpha: F17,
    pub beta: F17,
    #[serde(rename = "L")]
    pub l: F17,
    pub p_c: F17,
    #[serde(rename = "K_series")]
    pub k_series: F17,
}

impl ExponentsRecord {
    pub fn new(problem: &Problem) -> Self {
        let c = problem.consts;
        Self {
            params: ParamsRecord::new(problem),
            alpha: F17(c.alpha),
            beta: F17(c.beta),
            l: F17(c.l),
            p_c: F17(c.p_c),
            k_series: F17(c.k_series),
        }
    }

    pub fn text(&self) -> String {
        let rows = [
            ("alpha", self.alpha.0),
            ("beta", self.beta.0),
            ("L", self.l.0),
            ("p_c", self.p_c.0),
            ("K_series", self.k_series.0),
        ];
        rows.iter().map(|(k, v)| format!("{k:<9}{}\n", fmt17(*v))).collect()
    }
}

/// One classified shot. Every field is always present; those that do not
/// apply to the outcome are null.
#[derive(Serialize)]
pub struct ShotRecord {
    #[serde(rename = "D")]
    pub d: F17,
    pub kind: &'static str,
    pub f0: F17,
    pub xi_init: F17,
    pub v_init: F17,
    /// f′ ~ ξ^(σ+1) is unbounded at the origin when σ < −1.
    pub origin_slope_unbounded: bool,
    pub xi0: Option<F17>,
    pub v_at_xi0: Option<F17>,
    pub y_at_floor: Option<F17>,
    #[serde(rename = "C")]
    pub c: Option<F17>,
    pub ratio_residual: Option<F17>,
    pub xi_min: Option<F17>,
    pub f_min: Option<F17>,
    pub z_at_min: Option<F17>,
    pub tail_exponent_fit: Option<F17>,
    pub v_thresh: F17,
    pub y_crossings: usize,
    pub steps: usize,
    pub trace_points: usize,
    pub reason: Option<String>,
    pub trace_file: Option<String>,
}

impl ShotRecord {
    pub fn new(shot: &ShotOutcome, problem: &Problem, trace_file: Option<String>) -> Self {
        let mut r = Self {
            d: F17(shot.d),
            kind: shot.kind.label(),
            f0: F17(shot.f0),
            xi_init: F17(shot.series.xi_init),
            v_init: F17(shot.series.v_init),
            origin_slope_unbounded: problem.params.sigma < -1.0,
            xi0: None,
            v_at_xi0: None,
            y_at_floor: None,
            c: None,
            ratio_residual: None,
            xi_min: None,
            f_min: None,
            z_at_min: None,
            tail_exponent_fit: None,
            v_thresh: F17(shot.v_thresh),
            y_crossings: shot.y_crossings.len(),
            steps: shot.steps,
            trace_points: shot.trace.len(),
            reason: None,
            trace_file,
        };
        match &shot.kind {
            ShotKind::SignChange {
                xi0,
                v_at_xi0,
                y_at_floor,
            } => {
                r.xi0 = Some(F17(*xi0));
                r.v_at_xi0 = Some(F17(*v_at_xi0));
                r.y_at_floor = Some(F17(*y_at_floor));
            }
            ShotKind::GrowUp {
                xi_min,
                f_min,
                z_at_min,
                tail_exponent_fit,
                ..
            } => {
                r.xi_min = Some(F17(*xi_min));
                r.f_min = Some(F17(*f_min));
                r.z_at_min = Some(F17(*z_at_min));
                r.tail_exponent_fit = Some(F17(*tail_exponent_fit));
            }
            ShotKind::Interface {
                xi0,
                c,
                ratio_residual,
                v_at_stop,
            } => {
                r.xi0 = Some(F17(*xi0));
                r.c = Some(F17(*c));
                r.ratio_residual = Some(F17(*ratio_residual));
                r.v_at_xi0 = Some(F17(*v_at_stop));
            }
            ShotKind::Undetermined { reason } => r.reason = Some(reason.clone()),
        }
        r
    }
}

#[derive(Serialize)]
pub struct BracketRecord {
    pub lo: F17,
    pub hi: F17,
}

#[derive(Serialize)]
pub struct SweepSummary {
    pub params: ParamsRecord,
    pub shots: Vec<ShotRecord>,
    pub brackets: Vec<BracketRecord>,
    /// SignChange shots all lie below GrowUp shots.
    pub monotone: bool,
    pub uniqueness_guaranteed: bool,
}

#[derive(Serialize)]
pub struct FitRecord {
    pub slope: F17,
    pub expected: F17,
    pub rel_err: F17,
    pub tolerance: F17,
    pub samples: usize,
    pub passed: bool,
}

impl From<&FitCheck> for FitRecord {
    fn from(c: &FitCheck) -> Self {
        Self {
            slope: F17(c.slope),
            expected: F17(c.expected),
            rel_err: F17(c.rel_err),
            tolerance: F17(c.tolerance),
            samples: c.samples,
            passed: c.passed,
        }
    }
}

/// A check that could not be evaluated still gets a record.
#[derive(Serialize)]
pub struct FailedCheck {
    pub passed: bool,
    pub error: String,
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum CheckRecord<T> {
    Done(T),
    Failed(FailedCheck),
}

impl<T> CheckRecord<T> {
    pub fn from_result<E: std::fmt::Display>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => CheckRecord::Done(v),
            Err(e) => CheckRecord::Failed(FailedCheck {
                passed: false,
                error: e.to_string(),
            }),
        }
    }
}

#[derive(Serialize)]
pub struct FlowRecord {
    pub shot_d: F17,
    pub samples: usize,
    pub x_violations: usize,
    pub z_violations: usize,
    pub max_x_increase: F17,
    pub max_z_increase: F17,
    pub y_crossings: usize,
    pub crossing_violations: usize,
    pub slack: F17,
    pub passed: bool,
}

impl FlowRecord {
    pub fn new(d: f64, r: &FlowReport) -> Self {
        Self {
            shot_d: F17(d),
            samples: r.samples,
            x_violations: r.x_violations,
            z_violations: r.z_violations,
            max_x_increase: F17(r.max_x_increase),
            max_z_increase: F17(r.max_z_increase),
            y_crossings: r.y_crossings,
            crossing_violations: r.crossing_violations,
            slack: F17(r.slack),
            passed: r.passed,
        }
    }
}

#[derive(Serialize)]
pub struct MonotoneXzRecord {
    pub shots: Vec<FlowRecord>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct SupersolutionRecord {
    pub k: F17,
    pub factor: F17,
    pub samples: usize,
    pub max_rel_err: F17,
    pub min_residual: F17,
    pub all_positive: bool,
    pub tolerance: F17,
    pub passed: bool,
}

impl From<&SupersolutionReport> for SupersolutionRecord {
    fn from(r: &SupersolutionReport) -> Self {
        Self {
            k: F17(r.k),
            factor: F17(r.factor),
            samples: r.samples.len(),
            max_rel_err: F17(r.max_rel_err),
            min_residual: F17(r.min_residual),
            all_positive: r.all_positive,
            tolerance: F17(r.tolerance),
            passed: r.passed,
        }
    }
}

#[derive(Serialize)]
pub struct SupersolutionChecks {
    pub runs: Vec<CheckRecord<SupersolutionRecord>>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct Checks {
    pub origin_fit: CheckRecord<FitRecord>,
    pub interface_fit: CheckRecord<FitRecord>,
    #[serde(rename = "monotone_XZ")]
    pub monotone_xz: MonotoneXzRecord,
    pub supersolution: SupersolutionChecks,
}

#[derive(Serialize)]
pub struct OtherInterface {
    #[serde(rename = "D_star")]
    pub d_star: F17,
    pub xi0: F17,
    #[serde(rename = "C")]
    pub c: F17,
    pub bracket_width: F17,
}

#[derive(Serialize)]
pub struct InterfaceRecord {
    pub params: ParamsRecord,
    #[serde(rename = "D_star")]
    pub d_star: F17,
    pub xi0: F17,
    #[serde(rename = "C")]
    pub c: F17,
    pub bracket_width: F17,
    pub iterations: usize,
    #[serde(rename = "D_lo")]
    pub d_lo: F17,
    #[serde(rename = "D_hi")]
    pub d_hi: F17,
    pub xi0_check: F17,
    pub ambiguity_window: Option<[F17; 2]>,
    pub uniqueness_guaranteed: bool,
    pub linear_reaction: bool,
    pub note: Option<&'static str>,
    pub scan: Vec<ScanRecord>,
    pub other_interfaces: Vec<OtherInterface>,
    pub checks: Checks,
}

#[derive(Serialize)]
pub struct ScanRecord {
    #[serde(rename = "D")]
    pub d: F17,
    pub kind: &'static str,
}

pub const NON_UNIQUE_NOTE: &str = "uniqueness not guaranteed; multiple D* possible";

impl InterfaceRecord {
    pub fn new(problem: &Problem, main: &BisectionResult, others: &[BisectionResult], checks: Checks) -> Self {
        Self {
            params: ParamsRecord::new(problem),
            d_star: F17(main.d_star),
            xi0: F17(main.xi0_star),
            c: F17(main.c_star),
            bracket_width: F17(main.bracket_width),
            iterations: main.iterations,
            d_lo: F17(main.d_lo),
            d_hi: F17(main.d_hi),
            xi0_check: F17(main.xi0_check),
            ambiguity_window: main.ambiguity_window.map(|(a, b)| [F17(a), F17(b)]),
            uniqueness_guaranteed: main.uniqueness_guaranteed,
            linear_reaction: main.linear_reaction,
            note: (!main.uniqueness_guaranteed).then_some(NON_UNIQUE_NOTE),
            scan: main
                .scan
                .iter()
                .map(|e| ScanRecord {
                    d: F17(e.d),
                    kind: e.kind.label(),
                })
                .collect(),
            other_interfaces: others
                .iter()
                .map(|r| OtherInterface {
                    d_star: F17(r.d_star),
                    xi0: F17(r.xi0_star),
                    c: F17(r.c_star),
                    bracket_width: F17(r.bracket_width),
                })
                .collect(),
            checks,
        }
    }
}

#[derive(Serialize)]
pub struct BehaviorRecord {
    pub id: &'static str,
    pub formula: &'static str,
}

#[derive(Serialize)]
pub struct CatalogEntryRecord {
    pub tag: &'static str,
    pub gamma: Option<F17>,
    pub chart: &'static str,
    pub location: [F17; 3],
    pub sphere: Option<[F17; 4]>,
    pub jacobian: Option<[[F17; 3]; 3]>,
    /// [re, im] pairs.
    pub eigenvalues: [[F17; 2]; 3],
    pub eigenvectors: [Option<[F17; 3]>; 3],
    pub expected_eigenvalues: Option<[F17; 3]>,
    pub spectrum_error: Option<F17>,
    pub root_residual: F17,
    pub saddle_node: bool,
    pub behaviors: Vec<BehaviorRecord>,
    pub note: &'static str,
}

fn arr3(a: [f64; 3]) -> [F17; 3] {
    a.map(F17)
}

impl From<&CriticalPointEntry> for CatalogEntryRecord {
    fn from(e: &CriticalPointEntry) -> Self {
        Self {
            tag: e.tag.label(),
            gamma: opt(e.tag.gamma()),
            chart: e.chart.as_str(),
            location: arr3(e.location),
            sphere: e.sphere.map(|s| s.map(F17)),
            jacobian: e.jacobian.map(|j| j.map(arr3)),
            eigenvalues: e.eigenvalues.map(|l| [F17(l.re), F17(l.im)]),
            eigenvectors: e.eigenvectors.map(|v| v.map(arr3)),
            expected_eigenvalues: e.expected_eigenvalues.map(arr3),
            spectrum_error: opt(e.spectrum_error()),
            root_residual: F17(e.root_residual()),
            saddle_node: e.saddle_node,
            behaviors: e
                .behaviors
                .iter()
                .map(|b| BehaviorRecord {
                    id: b.id(),
                    formula: b.formula(),
                })
                .collect(),
            note: e.note,
        }
    }
}

#[derive(Serialize)]
pub struct CatalogRecord {
    pub params: ParamsRecord,
    pub entries: Vec<CatalogEntryRecord>,
}

/// Trace as CSV with header `xi,f,v,X,Y,Z`; phase columns are empty where f
/// is at or below the floor.
pub fn write_trace_csv<W: Write>(mut w: W, shot: &ShotOutcome) -> io::Result<()> {
    writeln!(w, "xi,f,v,X,Y,Z")?;
    for (pt, ph) in shot.trace.iter().zip(&shot.phase_trace) {
        let phase = match ph {
            Some(PhasePoint { x, y, z }) => format!("{},{},{}", fmt17(*x), fmt17(*y), fmt17(*z)),
            None => ",,".to_string(),
        };
        writeln!(w, "{},{},{},{}", fmt17(pt.xi), fmt17(pt.f), fmt17(pt.v), phase)?;
    }
    Ok(())
}
