//! Continuation of a shot past its minimum.
//!
//! After the minimum the profile grows and the flux equation becomes stiff
//! in ξ: Y relaxes towards a slow manifold on an η-scale while ξ itself moves
//! on a scale of order 1/X. The continuation therefore runs in two stages.
//!
//! 1. The phase system in η with ℓ = ln ξ carried along (dℓ/dη = X), until X
//!    is small and Y has relaxed onto the manifold Y = X·u(X, Z).
//! 2. The reduced flow on that manifold with ℓ as independent variable:
//!    d ln X/dℓ = (m−1)u − 2 and d ln Z/dℓ = (p−1)u + σ.
//!
//! The log-log slope of f is measured one decade of ξ at a time and the
//! continuation stops once two consecutive decades agree.

use crate::integrator::{Integrator, IntegratorConfig, SingularState};
use crate::params::Problem;
use crate::phase::{phase_rhs, phase_to_profile, profile_to_phase, PhasePoint};
use crate::profile::ProfilePoint;

use super::ShotConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConfig {
    /// Switch to the reduced flow once X drops below this.
    pub x_switch: f64,
    /// Required relative distance of Y/X from the slow manifold at the switch.
    pub relax_tol: f64,
    /// Stop when consecutive decade slopes agree to this relative tolerance.
    pub slope_tol: f64,
    pub max_decades: usize,
    pub max_steps: usize,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            x_switch: 1e-4,
            relax_tol: 1e-3,
            slope_tol: 1e-3,
            max_decades: 20,
            max_steps: 400_000,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TailResult {
    pub points: Vec<(ProfilePoint, PhasePoint)>,
    pub slope: f64,
    pub decades: usize,
    pub steps: usize,
}

/// Y/X on the slow manifold: the positive root of X u² + b u − (1 − Z) = 0
/// with b = β/α + N X, written in a cancellation-free form.
pub(crate) fn slow_ratio(x: f64, z: f64, problem: &Problem) -> f64 {
    let b = problem.consts.beta_over_alpha() + problem.params.n_f64() * x;
    let c = 1.0 - z;
    2.0 * c / (b + (b * b + 4.0 * x * c).sqrt())
}

pub(crate) fn grow_up_tail(
    problem: &Problem,
    min_point: &ProfilePoint,
    cfg: &ShotConfig,
) -> Result<TailResult, String> {
    let tc = cfg.tail;
    let m = problem.params.m;
    let p = problem.params.p;
    let sigma = problem.params.sigma;
    let alpha = problem.consts.alpha;
    let ln10 = std::f64::consts::LN_10;
    let start = profile_to_phase(min_point, problem).map_err(|e| e.to_string())?;
    let l_min = min_point.xi.ln();
    let ln_f = |x: f64, l: f64| (x.ln() - (m / alpha).ln() + 2.0 * l) / (m - 1.0);
    let boundary = |k: usize| l_min + k as f64 * ln10;

    let icfg = IntegratorConfig {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_steps: tc.max_steps,
        dense_samples: cfg.dense_samples,
        ..Default::default()
    };
    let pb = *problem;
    let eta_rhs = move |_t: f64, s: &[f64; 4]| -> Result<[f64; 4], SingularState> {
        if !(s[0] > 0.0 && s[2] > 0.0) {
            return Err(SingularState::new("X or Z left the positive octant"));
        }
        let r = phase_rhs(&PhasePoint { x: s[0], y: s[1], z: s[2] }, &pb);
        Ok([r[0], r[1], r[2], s[0]])
    };
    let (x_switch, relax) = (tc.x_switch, tc.relax_tol);
    let eta = Integrator::new(icfg)
        // Y is of the size of X on the growing branch.
        .weights([start.x, start.x, start.z, 1.0])
        .stop_when(move |_, s| {
            if s[0] >= x_switch || s[2] >= 1.0 {
                return false;
            }
            let u = slow_ratio(s[0], s[2], &pb);
            (s[1] / s[0] - u).abs() <= relax * u
        })
        .integrate(eta_rhs, 0.0, [start.x, start.y, start.z, l_min], f64::INFINITY)
        .map_err(|e| format!("phase continuation failed: {e}"))?;
    let mut steps = eta.accepted;

    let mut points: Vec<(ProfilePoint, PhasePoint)> = Vec::new();
    let mut ells = vec![l_min];
    let mut lnfs = vec![min_point.f.ln()];
    for s in eta.y.iter().skip(1) {
        let ph = PhasePoint { x: s[0], y: s[1], z: s[2] };
        points.push((phase_to_profile(&ph, s[3].exp(), problem), ph));
        ells.push(s[3]);
        lnfs.push(ln_f(s[0], s[3]));
    }
    let (_, last) = eta.last();
    if last[1] <= 0.0 || last[2] >= 1.0 {
        return Err("trajectory did not settle onto the growing branch".into());
    }

    let mut at_decade = vec![min_point.f.ln()];
    let slope_of = |v: &[f64], k: usize| (v[k] - v[k - 1]) / ln10;
    let converged = |v: &[f64]| {
        let k = v.len() - 1;
        k >= 2 && {
            let (a, b) = (slope_of(v, k), slope_of(v, k - 1));
            (a - b).abs() <= tc.slope_tol * a.abs()
        }
    };

    // Decades already covered by the phase stage.
    let l_switch = last[3];
    let mut k = 1;
    while k <= tc.max_decades && boundary(k) <= l_switch {
        let target = boundary(k);
        let i = ells.partition_point(|&l| l < target).max(1);
        let w = (target - ells[i - 1]) / (ells[i] - ells[i - 1]);
        at_decade.push(lnfs[i - 1] + w * (lnfs[i] - lnfs[i - 1]));
        if converged(&at_decade) {
            points.retain(|(pt, _)| pt.xi.ln() <= target);
            let slope = slope_of(&at_decade, k);
            return Ok(TailResult {
                points,
                slope,
                decades: k,
                steps,
            });
        }
        k += 1;
    }

    let reduced_rhs = move |_l: f64, s: &[f64; 2]| -> Result<[f64; 2], SingularState> {
        let u = slow_ratio(s[0].exp(), s[1].exp(), &pb);
        if !u.is_finite() {
            return Err(SingularState::new("slow manifold undefined"));
        }
        Ok([(m - 1.0) * u - 2.0, (p - 1.0) * u + sigma])
    };
    let rcfg = IntegratorConfig {
        max_step: ln10 / 25.0,
        ..icfg
    };
    let mut l = l_switch;
    let mut state = [last[0].ln(), last[2].ln()];
    while k <= tc.max_decades {
        let target = boundary(k);
        let seg = Integrator::new(rcfg)
            .weights([1.0, 1.0])
            .integrate(reduced_rhs, l, state, target)
            .map_err(|e| format!("reduced flow failed: {e}"))?;
        steps += seg.accepted;
        for (t, s) in seg.t.iter().zip(&seg.y).skip(1) {
            let (x, z) = (s[0].exp(), s[1].exp());
            let ph = PhasePoint {
                x,
                y: x * slow_ratio(x, z, problem),
                z,
            };
            points.push((phase_to_profile(&ph, t.exp(), problem), ph));
        }
        let (_, end) = seg.last();
        state = end;
        l = target;
        at_decade.push(ln_f(state[0].exp(), l));
        if converged(&at_decade) {
            return Ok(TailResult {
                points,
                slope: slope_of(&at_decade, k),
                decades: k,
                steps,
            });
        }
        k += 1;
    }
    Err(format!(
        "log-log slope did not settle within {} decades",
        tc.max_decades
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mode;

    #[test]
    fn slow_ratio_solves_the_quadratic() {
        let pb = Problem::from_raw(3.0, 1.2, -0.7, 3.0, Mode::Strict).unwrap();
        for (x, z) in [(1e-3, 0.2), (0.5, 0.9), (1e-9, 1e-6)] {
            let u = slow_ratio(x, z, &pb);
            let b = pb.consts.beta_over_alpha() + 3.0 * x;
            assert!((x * u * u + b * u - (1.0 - z)).abs() < 1e-13);
        }
        // X, Z → 0 recovers the tail exponent (σ+2)/(m−p).
        assert!((slow_ratio(0.0, 0.0, &pb) - 1.3 / 1.8).abs() < 1e-15);
    }

    #[test]
    fn reduced_flow_keeps_the_manifold_invariant_to_leading_order() {
        // On the manifold, Ẏ computed from the full field vanishes.
        let pb = Problem::from_raw(3.0, 1.5, -1.5, 3.0, Mode::Strict).unwrap();
        let (x, z) = (1e-3, 0.3);
        let y = x * slow_ratio(x, z, &pb);
        let r = phase_rhs(&PhasePoint { x, y, z }, &pb);
        assert!(r[1].abs() < 1e-15);
    }
}
