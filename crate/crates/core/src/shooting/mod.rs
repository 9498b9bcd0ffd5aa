//! Single shots from the origin and their classification.
//!
//! A shot is integrated in the normalised state φ = f/f₀, ψ = v/f₀^m with the
//! independent variable τ defined by d/dτ = ξ φ^(m−1) d/dξ. Near the origin
//! τ ≈ ln ξ, so the geometric approach from ξ_init is cheap, and near an
//! interface f decays exponentially in τ, so the floor f = f_floor·f₀ is
//! reached in a bounded number of steps.
//!
//! Shots that reach a positive minimum are continued in the phase variables
//! until the log-log slope of the tail settles (see [`tail`]).

pub mod bisect;
pub mod tail;
pub mod verify;

use thiserror::Error;

use crate::integrator::{Direction, Event, Integrator, IntegratorConfig, SingularState, Termination};
use crate::phase::{profile_to_phase, PhasePoint};
use crate::params::Problem;
use crate::profile::{interface_extrapolate, series_eval, series_init, ProfileError, ProfilePoint, SeriesInit};

pub use bisect::{find_interface, find_interfaces, scan, BisectionResult, Bracket, ScanEntry, SearchConfig, SearchError};
pub use tail::TailConfig;
pub use verify::{
    check_flow_lemma, interface_fit, origin_fit, supersolution_factor, tail_fit, verify_local_behaviors,
    verify_monotonicity, verify_supersolution, FitCheck, FlowReport, LocalBehaviorReport, MonotonicityReport,
    SupersolutionGrid, SupersolutionReport, VerifyError,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Truncation tolerance of the origin expansion; fixes ξ_init.
    pub series_tol: f64,
    /// Multiplies the ξ_init chosen from `series_tol`.
    pub xi_init_scale: f64,
    /// Stop when f/f(0) falls to this level.
    pub f_floor: f64,
    /// A floor hit with Y < −ratio·β/α counts as a transversal sign change.
    pub sign_change_ratio: f64,
    /// Allowed deviation of v/(−βξf) from 1 for an interface estimate.
    pub interface_ratio_tol: f64,
    pub max_steps: usize,
    pub dense_samples: usize,
    pub tail: TailConfig,
}

impl Default for ShotConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            series_tol: 1e-6,
            xi_init_scale: 1.0,
            f_floor: 1e-10,
            sign_change_ratio: 10.0,
            interface_ratio_tol: 0.05,
            max_steps: 200_000,
            dense_samples: 4,
            tail: TailConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("invalid shot configuration: {0}")]
    Config(&'static str),
}

impl ShotConfig {
    pub fn validate(&self) -> Result<(), ShootError> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(ShootError::Config("tolerances must be positive"));
        }
        if !(pos(self.f_floor) && self.f_floor < 1.0) {
            return Err(ShootError::Config("f_floor must lie in (0, 1)"));
        }
        if !pos(self.xi_init_scale) {
            return Err(ShootError::Config("xi_init_scale must be positive"));
        }
        if !pos(self.sign_change_ratio) || !pos(self.interface_ratio_tol) {
            return Err(ShootError::Config("classification thresholds must be positive"));
        }
        if self.max_steps == 0 || self.tail.max_steps == 0 {
            return Err(ShootError::Config("step budgets must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShotKind {
    /// f vanishes at ξ₀ with negative flux.
    SignChange {
        xi0: f64,
        v_at_xi0: f64,
        /// Y = v/(αξf) at the floor; strongly negative for a transversal zero.
        y_at_floor: f64,
    },
    /// f reaches a positive minimum and then grows like ξ^((σ+2)/(m−p)).
    GrowUp {
        xi_min: f64,
        f_min: f64,
        z_at_min: f64,
        tail_exponent_fit: f64,
        decades: usize,
    },
    /// f reaches the floor with the interface law v ≈ −βξf.
    Interface {
        xi0: f64,
        c: f64,
        ratio_residual: f64,
        v_at_stop: f64,
    },
    Undetermined {
        reason: String,
    },
}

impl ShotKind {
    pub fn label(&self) -> &'static str {
        match self {
            ShotKind::SignChange { .. } => "SignChange",
            ShotKind::GrowUp { .. } => "GrowUp",
            ShotKind::Interface { .. } => "Interface",
            ShotKind::Undetermined { .. } => "Undetermined",
        }
    }

    pub fn is_sign_change(&self) -> bool {
        matches!(self, ShotKind::SignChange { .. })
    }

    pub fn is_grow_up(&self) -> bool {
        matches!(self, ShotKind::GrowUp { .. })
    }
}

/// A sign change of Y between consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YCrossing {
    pub index: usize,
    pub xi: f64,
    pub z: f64,
    pub rising: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Floor,
    Minimum,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotOutcome {
    pub d: f64,
    pub f0: f64,
    pub series: SeriesInit,
    pub kind: ShotKind,
    pub trace: Vec<ProfilePoint>,
    /// Phase image of `trace`; `None` where f is at or below the floor.
    pub phase_trace: Vec<Option<PhasePoint>>,
    /// Number of leading trace points produced by the profile integration,
    /// before any tail continuation.
    pub profile_len: usize,
    pub stop: Stop,
    pub max_abs_v: f64,
    /// 10⁻⁶ · max |v| over the profile segment.
    pub v_thresh: f64,
    pub y_crossings: Vec<YCrossing>,
    pub steps: usize,
}

impl ShotOutcome {
    /// Last point of the profile integration (floor hit, minimum or failure point).
    pub fn stop_point(&self) -> ProfilePoint {
        self.trace[self.profile_len - 1]
    }

    pub fn profile_segment(&self) -> &[ProfilePoint] {
        &self.trace[..self.profile_len]
    }
}

/// The scaled first-order system in τ, state [ξ, φ, ψ].
pub(crate) fn scaled_rhs(
    problem: &Problem,
    d: f64,
) -> impl Fn(f64, &[f64; 3]) -> Result<[f64; 3], SingularState> + Sync + Send {
    let ps = problem.params;
    let c = problem.consts;
    let (m, p, sigma) = (ps.m, ps.p, ps.sigma);
    let n = ps.n_f64();
    let f0 = d.powf(1.0 / (m - p));
    let a1 = c.alpha * f0.powf(1.0 - m);
    let b1 = c.beta * f0.powf(1.0 - m);
    let inv_d = 1.0 / d;
    move |_t: f64, s: &[f64; 3]| {
        let [xi, phi, psi] = *s;
        if !(xi > 0.0) {
            return Err(SingularState::new("xi <= 0"));
        }
        if !(phi > 0.0) {
            return Err(SingularState::new("f <= 0"));
        }
        let pm1 = phi.powf(m - 1.0);
        Ok([
            xi * pm1,
            xi * psi / m,
            -(n - 1.0) * pm1 * psi + a1 * xi * pm1 * phi
                - xi.powf(sigma + 1.0) * inv_d * pm1 * phi.powf(p)
                - b1 * xi * xi * psi / m,
        ])
    }
}

fn start(d: f64, problem: &Problem, cfg: &ShotConfig) -> Result<SeriesInit, ShootError> {
    let mut s = series_init(d, problem, cfg.series_tol)?;
    if cfg.xi_init_scale != 1.0 {
        s.xi_init *= cfg.xi_init_scale;
        let (f, v) = series_eval(d, s.xi_init, problem);
        if !(f > 0.0) {
            return Err(ShootError::Config("xi_init_scale pushes the start past the series range"));
        }
        s.f_init = f;
        s.v_init = v;
    }
    Ok(s)
}

/// Shoot from the origin with f(0)^(m−p) = D and classify the outcome.
pub fn shoot(d: f64, problem: &Problem, cfg: &ShotConfig) -> Result<ShotOutcome, ShootError> {
    cfg.validate()?;
    let series = start(d, problem, cfg)?;
    let ps = problem.params;
    let c = problem.consts;
    let m = ps.m;
    let f0 = d.powf(1.0 / (m - ps.p));
    let fm = f0.powf(m);

    let icfg = IntegratorConfig {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_steps: cfg.max_steps,
        dense_samples: cfg.dense_samples,
        ..Default::default()
    };
    let floor = cfg.f_floor;
    let y0 = [series.xi_init, series.f_init / f0, series.v_init / fm];
    let result = Integrator::new(icfg)
        .weights([series.xi_init, floor, floor])
        .event(Event::new("floor", Direction::Falling, true, move |_, s| s[1] - floor))
        .event(Event::new("minimum", Direction::Rising, true, |_, s| s[2]))
        .integrate(scaled_rhs(problem, d), 0.0, y0, f64::INFINITY);

    let to_point = |s: &[f64; 3]| ProfilePoint::new(s[0], s[1] * f0, s[2] * fm);
    let mut outcome = ShotOutcome {
        d,
        f0,
        series,
        kind: ShotKind::Undetermined {
            reason: String::new(),
        },
        trace: vec![series.point()],
        phase_trace: Vec::new(),
        profile_len: 1,
        stop: Stop::Failed,
        max_abs_v: series.v_init.abs(),
        v_thresh: 0.0,
        y_crossings: Vec::new(),
        steps: 0,
    };

    let traj = match result {
        Ok(t) => t,
        Err(e) => {
            outcome.kind = ShotKind::Undetermined {
                reason: format!("profile integration failed: {e}"),
            };
            finish(&mut outcome, problem, cfg);
            return Ok(outcome);
        }
    };
    outcome.steps = traj.accepted;
    // Close to a transversal zero f keeps falling while ξ no longer changes in
    // double precision; keep only the last state of each such run.
    outcome.trace = Vec::with_capacity(traj.y.len());
    for s in &traj.y {
        let pt = to_point(s);
        match outcome.trace.last_mut() {
            Some(prev) if pt.xi <= prev.xi => *prev = pt,
            _ => outcome.trace.push(pt),
        }
    }
    outcome.profile_len = outcome.trace.len();
    outcome.max_abs_v = outcome.trace.iter().fold(0.0, |a, p| a.max(p.v.abs()));
    let last = *outcome.trace.last().unwrap();

    match traj.termination {
        Termination::Event(0) => {
            outcome.stop = Stop::Floor;
            let y = last.v / (c.alpha * last.xi * last.f);
            outcome.kind = if y < -cfg.sign_change_ratio * c.beta_over_alpha() {
                ShotKind::SignChange {
                    xi0: last.xi + last.f.powf(m) / last.v.abs(),
                    v_at_xi0: last.v,
                    y_at_floor: y,
                }
            } else {
                match interface_extrapolate(&last, problem, cfg.interface_ratio_tol) {
                    Ok(est) => ShotKind::Interface {
                        xi0: est.xi0,
                        c: est.c,
                        ratio_residual: est.ratio_residual,
                        v_at_stop: last.v,
                    },
                    Err(e) => ShotKind::Undetermined {
                        reason: format!("floor reached without a clear outcome: {e}"),
                    },
                }
            };
        }
        Termination::Event(_) => {
            outcome.stop = Stop::Minimum;
            let z_at_min = last.xi.powf(ps.sigma) * last.f.powf(ps.p - 1.0) / c.alpha;
            match tail::grow_up_tail(problem, &last, cfg) {
                Ok(t) => {
                    outcome.steps += t.steps;
                    for (pt, ph) in &t.points {
                        outcome.trace.push(*pt);
                        outcome.phase_trace.push(Some(*ph));
                    }
                    outcome.kind = ShotKind::GrowUp {
                        xi_min: last.xi,
                        f_min: last.f,
                        z_at_min,
                        tail_exponent_fit: t.slope,
                        decades: t.decades,
                    };
                }
                Err(reason) => {
                    outcome.kind = ShotKind::Undetermined {
                        reason: format!("grow-up tail not confirmed: {reason}"),
                    };
                }
            }
        }
        _ => {
            outcome.kind = ShotKind::Undetermined {
                reason: "integration ended without an event".into(),
            };
        }
    }
    finish(&mut outcome, problem, cfg);
    Ok(outcome)
}

fn finish(outcome: &mut ShotOutcome, problem: &Problem, cfg: &ShotConfig) {
    outcome.v_thresh = 1e-6 * outcome.max_abs_v;
    // The tail segment (if any) was appended to phase_trace already; put the
    // profile segment in front of it.
    let floor = cfg.f_floor * outcome.f0;
    let mut phase: Vec<Option<PhasePoint>> = outcome.trace[..outcome.profile_len]
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let at_floor = outcome.stop == Stop::Floor && i + 1 == outcome.profile_len;
            if at_floor || pt.f <= floor {
                None
            } else {
                profile_to_phase(pt, problem).ok()
            }
        })
        .collect();
    phase.append(&mut outcome.phase_trace);
    outcome.phase_trace = phase;
    outcome.y_crossings = y_crossings(&outcome.trace, &outcome.phase_trace);
}

fn y_crossings(trace: &[ProfilePoint], phase: &[Option<PhasePoint>]) -> Vec<YCrossing> {
    let mut out = Vec::new();
    for i in 1..phase.len() {
        let (Some(a), Some(b)) = (phase[i - 1], phase[i]) else {
            continue;
        };
        let rising = a.y < 0.0 && b.y >= 0.0;
        let falling = a.y > 0.0 && b.y <= 0.0;
        if rising || falling {
            let w = if b.y == a.y { 1.0 } else { a.y / (a.y - b.y) };
            out.push(YCrossing {
                index: i,
                xi: trace[i - 1].xi + w * (trace[i].xi - trace[i - 1].xi),
                z: a.z + w * (b.z - a.z),
                rising,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mode;

    fn params_a() -> Problem {
        Problem::from_raw(3.0, 1.2, -0.7, 3.0, Mode::Strict).unwrap()
    }

    #[test]
    fn scaled_system_matches_the_flux_system() {
        let pb = params_a();
        let d: f64 = 0.3;
        let f0 = d.powf(1.0 / 1.8);
        let pt = ProfilePoint::new(0.4, 0.5 * f0, -0.1 * f0.powi(3));
        let (fp, dv) = crate::profile::rhs(&pt, &pb).unwrap();
        let s = [pt.xi, pt.f / f0, pt.v / f0.powi(3)];
        let r = scaled_rhs(&pb, d)(0.0, &s).unwrap();
        let dxi_dtau = r[0];
        assert!((r[1] / dxi_dtau * f0 - fp).abs() < 1e-12 * fp.abs());
        assert!((r[2] / dxi_dtau * f0.powi(3) - dv).abs() < 1e-12 * dv.abs().max(1.0));
        assert!(scaled_rhs(&pb, d)(0.0, &[0.4, 0.0, -1.0]).is_err());
    }

    #[test]
    fn small_d_changes_sign_and_large_d_grows_up() {
        let pb = params_a();
        let cfg = ShotConfig::default();
        let low = shoot(1e-4, &pb, &cfg).unwrap();
        assert!(low.kind.is_sign_change(), "{:?}", low.kind);
        if let ShotKind::SignChange { v_at_xi0, .. } = low.kind {
            assert!(v_at_xi0 < -low.v_thresh);
        }
        let high = shoot(1.0, &pb, &cfg).unwrap();
        match high.kind {
            ShotKind::GrowUp {
                tail_exponent_fit,
                z_at_min,
                ..
            } => {
                assert!((tail_exponent_fit - 1.3 / 1.8).abs() < 0.01 * 1.3 / 1.8);
                assert!(z_at_min < 1.0);
            }
            ref k => panic!("expected grow-up, got {k:?}"),
        }
        assert_eq!(high.y_crossings.len(), 1);
        assert!(high.y_crossings[0].rising && high.y_crossings[0].z < 1.0);
        assert_eq!(high.trace.len(), high.phase_trace.len());
        assert!(high.trace.windows(2).all(|w| w[1].xi > w[0].xi));
    }

    #[test]
    fn floor_point_has_no_phase_image() {
        let pb = params_a();
        let low = shoot(1e-4, &pb, &ShotConfig::default()).unwrap();
        assert_eq!(low.stop, Stop::Floor);
        assert!(low.phase_trace.last().unwrap().is_none());
        assert!(low.phase_trace[..low.profile_len - 1].iter().all(|p| p.is_some()));
    }

    #[test]
    fn shots_are_deterministic() {
        let pb = params_a();
        let cfg = ShotConfig::default();
        let a = shoot(0.01, &pb, &cfg).unwrap();
        let b = shoot(0.01, &pb, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_input_is_rejected() {
        let pb = params_a();
        assert!(shoot(-1.0, &pb, &ShotConfig::default()).is_err());
        let cfg = ShotConfig {
            f_floor: 0.0,
            ..Default::default()
        };
        assert!(shoot(1.0, &pb, &cfg).is_err());
    }

    #[test]
    fn tiny_budget_gives_undetermined() {
        let pb = params_a();
        let cfg = ShotConfig {
            max_steps: 5,
            ..Default::default()
        };
        let out = shoot(1.0, &pb, &cfg).unwrap();
        assert!(matches!(out.kind, ShotKind::Undetermined { .. }));
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(24))]
        #[test]
        fn traces_advance_in_xi(log_d in -5.0f64..2.0) {
            let out = shoot(10f64.powf(log_d), &params_a(), &ShotConfig::default()).unwrap();
            proptest::prop_assert!(out.trace.windows(2).all(|w| w[1].xi > w[0].xi));
            proptest::prop_assert!(out.trace.iter().all(|p| p.f > 0.0));
            proptest::prop_assert_eq!(out.trace.len(), out.phase_trace.len());
        }
    }
}
