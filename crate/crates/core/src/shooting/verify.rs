//! Checks run on computed shots: ordering in D, the rescaled supersolution
//! identity, local behaviours and the monotonicity of X and Z.

use thiserror::Error;

use crate::fit::fit_line;
use crate::integrator::fixed_steps;
use crate::params::Problem;
use crate::profile::{self, ProfilePoint};

use super::{shoot, ShootError, ShotConfig, ShotKind, ShotOutcome, Stop};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error("fit window for {which} holds {samples} samples, at least {needed} are required")]
    FitWindowTooSmall {
        which: &'static str,
        samples: usize,
        needed: usize,
    },
    #[error("invalid verification input: {0}")]
    Input(String),
}

pub const MIN_FIT_SAMPLES: usize = 20;

/// Cubic Hermite interpolation of f on a profile trace, using
/// f′ = v/(m f^(m−1)) at the nodes. `xi` must lie inside the trace.
fn hermite(trace: &[ProfilePoint], m: f64, xi: f64) -> f64 {
    let i = trace.partition_point(|p| p.xi < xi).clamp(1, trace.len() - 1);
    let (a, b) = (&trace[i - 1], &trace[i]);
    let h = b.xi - a.xi;
    let s = (xi - a.xi) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * a.f
        + (s3 - 2.0 * s2 + s) * h * a.f_prime(m)
        + (-2.0 * s3 + 3.0 * s2) * b.f
        + (s3 - s2) * h * b.f_prime(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub d1: f64,
    pub d2: f64,
    pub kind1: &'static str,
    pub kind2: &'static str,
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub samples: usize,
    pub violations: usize,
    /// Largest (f₁ − f₂)/f₂ over the grid; negative when ordered.
    pub max_violation: f64,
    pub degenerate_equal: bool,
    pub passed: bool,
}

const MONOTONE_GRID: usize = 400;

/// Shoot D1 ≤ D2 with a shared configuration and check f₁ < f₂ on a common
/// log grid up to the earlier of the two minima (or floor hits).
pub fn verify_monotonicity(
    d1: f64,
    d2: f64,
    problem: &Problem,
    cfg: &ShotConfig,
) -> Result<MonotonicityReport, VerifyError> {
    if !(d1 <= d2) {
        return Err(VerifyError::Input(format!("need D1 <= D2, got {d1:e} and {d2:e}")));
    }
    let a = shoot(d1, problem, cfg)?;
    let b = if d1 == d2 { a.clone() } else { shoot(d2, problem, cfg)? };
    let m = problem.params.m;
    let (sa, sb) = (a.profile_segment(), b.profile_segment());
    let xi_lo = sa[0].xi.max(sb[0].xi);
    let xi_hi = sa[sa.len() - 1].xi.min(sb[sb.len() - 1].xi);
    let mut report = MonotonicityReport {
        d1,
        d2,
        kind1: a.kind.label(),
        kind2: b.kind.label(),
        xi_lo,
        xi_hi,
        samples: 0,
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        degenerate_equal: d1 == d2,
        passed: false,
    };
    if report.degenerate_equal {
        report.passed = a.trace == b.trace;
        report.max_violation = 0.0;
        return Ok(report);
    }
    if !(xi_hi > xi_lo) {
        return Err(VerifyError::Input("the two shots share no interval".into()));
    }
    let (l0, l1) = (xi_lo.ln(), xi_hi.ln());
    for j in 1..=MONOTONE_GRID {
        let xi = (l0 + (l1 - l0) * j as f64 / (MONOTONE_GRID + 1) as f64).exp();
        let (f1, f2) = (hermite(sa, m, xi), hermite(sb, m, xi));
        let rel = (f1 - f2) / f2;
        report.max_violation = report.max_violation.max(rel);
        if f1 >= f2 {
            report.violations += 1;
        }
        report.samples += 1;
    }
    report.passed = report.violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupersolutionSample {
    pub xi: f64,
    pub t: f64,
    pub finite_difference: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionReport {
    pub k: f64,
    /// k^(L/(m−1)) − 1, the sign-carrying factor of the residual.
    pub factor: f64,
    pub xi0: f64,
    pub samples: Vec<SupersolutionSample>,
    pub max_rel_err: f64,
    pub min_residual: f64,
    pub all_positive: bool,
    pub tolerance: f64,
    pub passed: bool,
}

/// Sample grid for the supersolution check.
#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionGrid {
    /// Fractions of the rescaled support ξ₀/k.
    pub xi_fractions: Vec<f64>,
    pub times: Vec<f64>,
    /// Relative finite-difference step in r and in t.
    pub h: f64,
    pub tolerance: f64,
}

impl Default for SupersolutionGrid {
    fn default() -> Self {
        Self {
            xi_fractions: (0..7).map(|i| 0.2 + 0.1 * i as f64).collect(),
            times: vec![0.5, 1.0, 2.0],
            h: 1e-3,
            tolerance: 1e-6,
        }
    }
}

/// The residual factor k^(L/(m−1)) − 1.
pub fn supersolution_factor(k: f64, problem: &Problem) -> f64 {
    k.powf(problem.consts.l / (problem.params.m - 1.0)) - 1.0
}

/// Check that U_k(x, t) = t^α f_k(|x| t^(−β)), f_k(ξ) = k^(−2/(m−1)) f(kξ),
/// leaves the residual U_t − Δ(U^m) − |x|^σ U^p equal to
/// t^(α−1) ξ^σ f_k^p (k^(L/(m−1)) − 1) and positive.
///
/// f is evaluated by a fixed number of Runge–Kutta steps of the flux system
/// from the nearest trace point, so it is a smooth function of ξ and the
/// residual can be recomputed by central differences in r and t.
pub fn verify_supersolution(
    k: f64,
    shot: &ShotOutcome,
    xi0: f64,
    problem: &Problem,
    grid: &SupersolutionGrid,
) -> Result<SupersolutionReport, VerifyError> {
    if !(k > 0.0 && k < 1.0) {
        return Err(VerifyError::Input(format!("k must lie in (0, 1), got {k}")));
    }
    if !(xi0 > 0.0) {
        return Err(VerifyError::Input(format!("interface position must be positive, got {xi0}")));
    }
    let ps = problem.params;
    let c = problem.consts;
    let (m, p, sigma) = (ps.m, ps.p, ps.sigma);
    let n = ps.n_f64();
    let trace = shot.profile_segment();
    let scale = k.powf(-2.0 / (m - 1.0));
    let factor = supersolution_factor(k, problem);

    let flux = |s: f64, y: &[f64; 2]| {
        profile::rhs(&ProfilePoint::new(s, y[0], y[1]), problem).map(|(a, b)| [a, b])
    };
    // f(s) integrated from a fixed anchor, smooth in s.
    let f_from = |anchor: &ProfilePoint, s: f64| -> Result<f64, VerifyError> {
        fixed_steps(flux, anchor.xi, [anchor.f, anchor.v], s, 8)
            .map(|y| y[0])
            .map_err(|e| VerifyError::Input(format!("profile evaluation failed: {e}")))
    };

    let mut report = SupersolutionReport {
        k,
        factor,
        xi0,
        samples: Vec::new(),
        max_rel_err: 0.0,
        min_residual: f64::INFINITY,
        all_positive: true,
        tolerance: grid.tolerance,
        passed: false,
    };
    for &frac in &grid.xi_fractions {
        let xi = frac * xi0 / k;
        let i = trace.partition_point(|q| q.xi < k * xi).min(trace.len() - 1);
        let anchor = if i > 0 && (k * xi - trace[i - 1].xi) < (trace[i].xi - k * xi) {
            trace[i - 1]
        } else {
            trace[i]
        };
        if !(k * xi < trace[trace.len() - 1].xi) {
            return Err(VerifyError::Input(format!(
                "rescaled sample ξ = {xi} lies beyond the computed profile"
            )));
        }
        let fk = |s: f64| f_from(&anchor, k * s).map(|f| scale * f);
        for &t in &grid.times {
            let u = |r: f64, t: f64| fk(r * t.powf(-c.beta)).map(|f| t.powf(c.alpha) * f);
            let r = xi * t.powf(c.beta);
            let (hr, ht) = (grid.h * r, grid.h * t);
            let d1 = |g: [f64; 4], h: f64| (g[0] - 8.0 * g[1] + 8.0 * g[2] - g[3]) / (12.0 * h);
            let ut = d1(
                [u(r, t - 2.0 * ht)?, u(r, t - ht)?, u(r, t + ht)?, u(r, t + 2.0 * ht)?],
                ht,
            );
            let w = |r: f64| u(r, t).map(|v| v.powf(m));
            let wv = [w(r - 2.0 * hr)?, w(r - hr)?, w(r)?, w(r + hr)?, w(r + 2.0 * hr)?];
            let wr = d1([wv[0], wv[1], wv[3], wv[4]], hr);
            let wrr = (-wv[0] + 16.0 * wv[1] - 30.0 * wv[2] + 16.0 * wv[3] - wv[4]) / (12.0 * hr * hr);
            let u0 = u(r, t)?;
            let fd = ut - (wrr + (n - 1.0) / r * wr) - r.powf(sigma) * u0.powf(p);
            let fkv = fk(xi)?;
            let closed = t.powf(c.alpha - 1.0) * xi.powf(sigma) * fkv.powf(p) * factor;
            let rel_err = ((fd - closed) / closed).abs();
            report.max_rel_err = report.max_rel_err.max(rel_err);
            report.min_residual = report.min_residual.min(fd);
            report.all_positive &= fd > 0.0 && closed > 0.0;
            report.samples.push(SupersolutionSample {
                xi,
                t,
                finite_difference: fd,
                closed_form: closed,
                rel_err,
            });
        }
    }
    report.passed = report.all_positive && report.max_rel_err <= grid.tolerance && !report.samples.is_empty();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCheck {
    pub slope: f64,
    pub expected: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl FitCheck {
    fn new(xs: &[f64], ys: &[f64], expected: f64, tolerance: f64, which: &'static str) -> Result<Self, VerifyError> {
        if xs.len() < MIN_FIT_SAMPLES {
            return Err(VerifyError::FitWindowTooSmall {
                which,
                samples: xs.len(),
                needed: MIN_FIT_SAMPLES,
            });
        }
        let fit = fit_line(xs, ys).ok_or(VerifyError::FitWindowTooSmall {
            which,
            samples: xs.len(),
            needed: MIN_FIT_SAMPLES,
        })?;
        let rel_err = ((fit.slope - expected) / expected).abs();
        Ok(Self {
            slope: fit.slope,
            expected,
            rel_err,
            tolerance,
            samples: xs.len(),
            passed: rel_err <= tolerance,
        })
    }
}

/// f^(m−p) against ξ^(σ+2) while the first correction of the origin
/// expansion stays below 10⁻⁵ of D (or ten times its size at the start).
/// The next correction is smaller by a factor ξ^(−σ), which is why the
/// window is kept this close to the origin.
pub fn origin_fit(shot: &ShotOutcome, problem: &Problem) -> Result<FitCheck, VerifyError> {
    let ps = problem.params;
    let kk = problem.consts.k_series;
    let start = kk.abs() * shot.series.xi_init.powf(ps.sigma + 2.0) / shot.d;
    let limit = 1e-5f64.max(10.0 * start) * shot.d;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for pt in shot.profile_segment() {
        let s = pt.xi.powf(ps.sigma + 2.0);
        if kk.abs() * s > limit {
            break;
        }
        xs.push(s);
        ys.push(pt.f.powf(ps.m - ps.p));
    }
    FitCheck::new(&xs, &ys, -kk, 0.02, "origin")
}

/// f^(m−1) against ξ² for 10⁻⁵ ≤ f/f(0) ≤ 10⁻² on the decreasing part;
/// slope −β(m−1)/(2m).
pub fn interface_fit(shot: &ShotOutcome, problem: &Problem) -> Result<FitCheck, VerifyError> {
    let m = problem.params.m;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for pt in shot.profile_segment() {
        let r = pt.f / shot.f0;
        if (1e-5..=1e-2).contains(&r) && pt.v < 0.0 {
            xs.push(pt.xi * pt.xi);
            ys.push(pt.f.powf(m - 1.0));
        }
    }
    let expected = -problem.consts.beta * (m - 1.0) / (2.0 * m);
    FitCheck::new(&xs, &ys, expected, 0.02, "interface")
}

/// Log-log slope of f over the last decade of ξ; expected (σ+2)/(m−p).
pub fn tail_fit(shot: &ShotOutcome, problem: &Problem) -> Result<FitCheck, VerifyError> {
    let ps = problem.params;
    let end = shot.trace[shot.trace.len() - 1].xi;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for pt in &shot.trace[shot.profile_len..] {
        if pt.xi >= end / 10.0 {
            xs.push(pt.xi.ln());
            ys.push(pt.f.ln());
        }
    }
    FitCheck::new(&xs, &ys, (ps.sigma + 2.0) / (ps.m - ps.p), 0.01, "tail")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBehaviorReport {
    pub origin: FitCheck,
    /// Present for shots that stopped at the floor. A sign change far from
    /// D* does not vanish with the interface law and fails this fit.
    pub interface: Option<FitCheck>,
    /// Present for grow-up shots.
    pub tail: Option<FitCheck>,
    pub passed: bool,
}

pub fn verify_local_behaviors(shot: &ShotOutcome, problem: &Problem) -> Result<LocalBehaviorReport, VerifyError> {
    let origin = origin_fit(shot, problem)?;
    let interface = if shot.stop == Stop::Floor {
        Some(interface_fit(shot, problem)?)
    } else {
        None
    };
    let tail = if matches!(shot.kind, ShotKind::GrowUp { .. }) {
        Some(tail_fit(shot, problem)?)
    } else {
        None
    };
    let passed = origin.passed && interface.is_none_or(|c| c.passed) && tail.is_none_or(|c| c.passed);
    Ok(LocalBehaviorReport {
        origin,
        interface,
        tail,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowReport {
    pub samples: usize,
    pub x_violations: usize,
    pub z_violations: usize,
    /// Largest relative step increase of X and of Z.
    pub max_x_increase: f64,
    pub max_z_increase: f64,
    pub y_crossings: usize,
    /// Number of − to + crossings of Y with Z ≥ 1.
    pub crossing_violations: usize,
    pub slack: f64,
    pub passed: bool,
}

/// X and Z must not increase along a shot beyond a relative slack per step,
/// and Y may only turn positive where Z < 1.
pub fn check_flow_lemma(shot: &ShotOutcome, slack: f64) -> FlowReport {
    let pts: Vec<_> = shot.phase_trace.iter().flatten().collect();
    let mut r = FlowReport {
        samples: pts.len(),
        x_violations: 0,
        z_violations: 0,
        max_x_increase: f64::NEG_INFINITY,
        max_z_increase: f64::NEG_INFINITY,
        y_crossings: shot.y_crossings.len(),
        crossing_violations: 0,
        slack,
        passed: false,
    };
    for w in pts.windows(2) {
        let dx = (w[1].x - w[0].x) / w[0].x;
        let dz = (w[1].z - w[0].z) / w[0].z;
        r.max_x_increase = r.max_x_increase.max(dx);
        r.max_z_increase = r.max_z_increase.max(dz);
        r.x_violations += (dx > slack) as usize;
        r.z_violations += (dz > slack) as usize;
    }
    r.crossing_violations = shot.y_crossings.iter().filter(|c| c.rising && c.z >= 1.0).count();
    r.passed = r.x_violations == 0 && r.z_violations == 0 && r.crossing_violations == 0;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mode;

    fn params_a() -> Problem {
        Problem::from_raw(3.0, 1.2, -0.7, 3.0, Mode::Strict).unwrap()
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // f = 1 + ξ + ξ² + ξ³ with m = 1 so that v = f′.
        let f = |x: f64| 1.0 + x + x * x + x * x * x;
        let fp = |x: f64| 1.0 + 2.0 * x + 3.0 * x * x;
        let trace: Vec<_> = [0.1, 0.5, 0.9].iter().map(|&x| ProfilePoint::new(x, f(x), fp(x))).collect();
        for x in [0.2, 0.37, 0.8] {
            assert!((hermite(&trace, 1.0, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn supersolution_factor_values() {
        let a = params_a();
        assert!((supersolution_factor(0.5, &a) - (0.5f64.powf(-0.5) - 1.0)).abs() < 1e-15);
        assert!((supersolution_factor(0.5, &a) - 0.41421356).abs() < 1e-8);
        let b = Problem::from_raw(3.0, 1.5, -1.5, 3.0, Mode::Strict).unwrap();
        assert!((supersolution_factor(0.9, &b) - 0.11111111).abs() < 1e-8);
        assert!(supersolution_factor(1.0 - 1e-12, &a).abs() < 1e-11);
    }

    #[test]
    fn equal_parameters_are_degenerate() {
        let r = verify_monotonicity(0.01, 0.01, &params_a(), &ShotConfig::default()).unwrap();
        assert!(r.degenerate_equal && r.passed);
        assert!(verify_monotonicity(0.02, 0.01, &params_a(), &ShotConfig::default()).is_err());
    }

    #[test]
    fn ordered_shots_do_not_cross() {
        let r = verify_monotonicity(1e-3, 1e-2, &params_a(), &ShotConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.samples, MONOTONE_GRID);
    }

    #[test]
    fn flow_lemma_holds_on_both_kinds() {
        let pb = params_a();
        for d in [1e-4, 1.0] {
            let shot = shoot(d, &pb, &ShotConfig::default()).unwrap();
            let r = check_flow_lemma(&shot, 1e-12);
            assert!(r.passed, "D = {d}: {r:?}");
        }
    }

    #[test]
    fn origin_and_tail_fits_on_a_grow_up_shot() {
        let pb = params_a();
        let shot = shoot(1.0, &pb, &ShotConfig::default()).unwrap();
        let r = verify_local_behaviors(&shot, &pb).unwrap();
        assert!(r.origin.passed, "{:?}", r.origin);
        assert!(r.tail.unwrap().passed, "{:?}", r.tail);
        assert!(r.interface.is_none());
    }

    #[test]
    fn supersolution_rejects_bad_k() {
        let pb = params_a();
        let shot = shoot(1e-3, &pb, &ShotConfig::default()).unwrap();
        let g = SupersolutionGrid::default();
        assert!(verify_supersolution(1.0, &shot, 1.0, &pb, &g).is_err());
        assert!(verify_supersolution(0.0, &shot, 1.0, &pb, &g).is_err());
    }
}
