//! The profile ODE in flux form, the series start at the origin, interface
//! extrapolation and the explicit stationary profile.
//!
//! With v = (f^m)′ the profile equation becomes the first-order system
//!
//! ```text
//! f′ = v / (m f^(m−1))
//! v′ = −(N−1) v / ξ + α f − β ξ f′ − ξ^σ f^p
//! ```

use thiserror::Error;

use crate::integrator::SingularState;
use crate::params::Problem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("series expansion at the origin degenerates: N + sigma = {n_plus_sigma}")]
    DegenerateExpansion { n_plus_sigma: f64 },
    #[error("shooting parameter D must be positive and finite, got {0}")]
    InvalidD(f64),
    #[error("series tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("state is not near an interface: {0}")]
    NotNearInterface(String),
    #[error("explicit stationary profile needs N = 1 and m(sigma+1)+p < 0 in exploratory mode")]
    WrongRegime,
    #[error(transparent)]
    Singular(#[from] SingularState),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub xi: f64,
    pub f: f64,
    pub v: f64,
}

impl ProfilePoint {
    pub fn new(xi: f64, f: f64, v: f64) -> Self {
        Self { xi, f, v }
    }

    /// Build from (ξ, f, f′) by forming the flux v = m f^(m−1) f′.
    pub fn from_slope(xi: f64, f: f64, f_prime: f64, m: f64) -> Self {
        Self {
            xi,
            f,
            v: m * f.powf(m - 1.0) * f_prime,
        }
    }

    /// f′ recovered from the flux; only meaningful for f > 0.
    pub fn f_prime(&self, m: f64) -> f64 {
        self.v / (m * self.f.powf(m - 1.0))
    }
}

/// Right-hand side (df/dξ, dv/dξ) of the flux system.
pub fn rhs(pt: &ProfilePoint, problem: &Problem) -> Result<(f64, f64), SingularState> {
    if !(pt.xi > 0.0) {
        return Err(SingularState::new("xi <= 0"));
    }
    if !(pt.f > 0.0) {
        return Err(SingularState::new("f <= 0"));
    }
    let ps = &problem.params;
    let c = &problem.consts;
    let fp = pt.v / (ps.m * pt.f.powf(ps.m - 1.0));
    let dv = -(ps.n_f64() - 1.0) / pt.xi * pt.v + c.alpha * pt.f
        - c.beta * pt.xi * fp
        - pt.xi.powf(ps.sigma) * pt.f.powf(ps.p);
    Ok((fp, dv))
}

/// Residual of the second-order profile equation for a profile given in
/// closed form through f, f′ and (f^m)″ at ξ.
pub fn ode_residual(problem: &Problem, xi: f64, f: f64, fp: f64, fm_pp: f64) -> f64 {
    let ps = &problem.params;
    let c = &problem.consts;
    let v = ps.m * f.powf(ps.m - 1.0) * fp;
    fm_pp + (ps.n_f64() - 1.0) / xi * v - c.alpha * f + c.beta * xi * fp + xi.powf(ps.sigma) * f.powf(ps.p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesInit {
    pub d: f64,
    pub xi_init: f64,
    pub f_init: f64,
    pub v_init: f64,
}

impl SeriesInit {
    pub fn point(&self) -> ProfilePoint {
        ProfilePoint::new(self.xi_init, self.f_init, self.v_init)
    }
}

/// Closed-form expansion at the origin evaluated at ξ.
pub fn series_eval(d: f64, xi: f64, problem: &Problem) -> (f64, f64) {
    let ps = &problem.params;
    let k = problem.consts.k_series;
    let base = d - k * xi.powf(ps.sigma + 2.0);
    let f = base.powf(1.0 / (ps.m - ps.p));
    let v = -base.powf(ps.p / (ps.m - ps.p)) * xi.powf(ps.sigma + 1.0) / (ps.n_f64() + ps.sigma);
    (f, v)
}

/// Start the shot at the largest ξ where the neglected terms of the origin
/// expansion stay below `rel_tol` relative to D.
///
/// N + σ < 0 (one-dimensional, σ < −1) is accepted: the coefficient changes
/// sign and the profile starts out increasing.
pub fn series_init(d: f64, problem: &Problem, rel_tol: f64) -> Result<SeriesInit, ProfileError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(ProfileError::InvalidD(d));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(ProfileError::InvalidTolerance(rel_tol));
    }
    let ps = &problem.params;
    let n_plus_sigma = ps.n_f64() + ps.sigma;
    if n_plus_sigma.abs() < 1e-12 {
        return Err(ProfileError::DegenerateExpansion { n_plus_sigma });
    }
    let k = problem.consts.k_series.abs();
    let xi_init = (rel_tol * d / k).powf(1.0 / (ps.sigma + 2.0));
    let (f_init, v_init) = series_eval(d, xi_init, problem);
    Ok(SeriesInit {
        d,
        xi_init,
        f_init,
        v_init,
    })
}

/// Estimate (ξ₀, C) of f^(m−1) ≈ C − β(m−1)/(2m) ξ² from a state close to the
/// interface.
///
/// On the exact local profile the ratio v / (−β ξ f) is identically 1; its
/// deviation is returned with the estimate and anything beyond
/// `ratio_tol` is rejected.
pub fn interface_extrapolate(
    last: &ProfilePoint,
    problem: &Problem,
    ratio_tol: f64,
) -> Result<InterfaceEstimate, ProfileError> {
    let m = problem.params.m;
    let beta = problem.consts.beta;
    if !(last.f > 0.0 && last.xi > 0.0) {
        return Err(ProfileError::NotNearInterface(format!(
            "need f > 0 and xi > 0, got f = {}, xi = {}",
            last.f, last.xi
        )));
    }
    if !(last.v < 0.0) {
        return Err(ProfileError::NotNearInterface(format!(
            "flux v = {} is not negative",
            last.v
        )));
    }
    let a = beta * (m - 1.0) / (2.0 * m);
    let c = last.f.powf(m - 1.0) + a * last.xi * last.xi;
    let xi0 = (c / a).sqrt();
    let ratio_residual = last.v / (-beta * last.xi * last.f) - 1.0;
    if !(ratio_residual.abs() <= ratio_tol) {
        return Err(ProfileError::NotNearInterface(format!(
            "flux ratio deviates from the interface law by {ratio_residual:e}"
        )));
    }
    Ok(InterfaceEstimate {
        xi0,
        c,
        ratio_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceEstimate {
    pub xi0: f64,
    pub c: f64,
    pub ratio_residual: f64,
}

/// Coefficient and exponent of the explicit stationary profile K₀ ξ^((σ+2)/(m−p)).
pub fn stationary_constants(problem: &Problem) -> Result<(f64, f64), ProfileError> {
    let ps = &problem.params;
    if ps.n != 1 || ps.q6_discriminant() >= 0.0 || ps.mode != crate::params::Mode::Exploratory {
        return Err(ProfileError::WrongRegime);
    }
    let (m, p, s) = (ps.m, ps.p, ps.sigma);
    let k0 = (-(m - p).powi(2) / (m * (s + 2.0) * ps.q6_discriminant())).powf(1.0 / (m - p));
    Ok((k0, (s + 2.0) / (m - p)))
}

pub fn stationary_profile(problem: &Problem, xi: f64) -> Result<f64, ProfileError> {
    let (k0, e) = stationary_constants(problem)?;
    Ok(k0 * xi.powf(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mode;
    use proptest::prelude::*;

    fn params_a() -> Problem {
        Problem::from_raw(3.0, 1.2, -0.7, 3.0, Mode::Strict).unwrap()
    }

    fn stationary_problem() -> Problem {
        Problem::from_raw(3.0, 1.2, -1.8, 1.0, Mode::Exploratory).unwrap()
    }

    #[test]
    fn stationary_constants_match_hand_values() {
        let (k0, e) = stationary_constants(&stationary_problem()).unwrap();
        // [−1.8² / (3 · 0.2 · (3 · (−0.8) + 1.2))]^(1/1.8) = 4.5^(1/1.8)
        assert!((k0 - 4.5f64.powf(1.0 / 1.8)).abs() < 1e-12);
        assert!((k0 - 2.30619).abs() < 1e-5);
        assert!((e - 0.2 / 1.8).abs() < 1e-15);
    }

    #[test]
    fn stationary_profile_solves_the_flux_system() {
        let pb = stationary_problem();
        let (k0, e) = stationary_constants(&pb).unwrap();
        let m = pb.params.m;
        for xi in [0.5f64, 1.0, 2.0] {
            let f = k0 * xi.powf(e);
            let fp = e * f / xi;
            let pt = ProfilePoint::from_slope(xi, f, fp, m);
            let (dfdxi, dv) = rhs(&pt, &pb).unwrap();
            assert!((dfdxi - fp).abs() < 1e-12);
            // (f^m)' = m K0^m e ξ^(me−1) so (f^m)'' = m K0^m e (me−1) ξ^(me−2)
            let fm_pp = m * k0.powf(m) * e * (m * e - 1.0) * xi.powf(m * e - 2.0);
            assert!((dv - fm_pp).abs() < 1e-8, "xi={xi}: {dv} vs {fm_pp}");
        }
    }

    #[test]
    fn stationary_profile_wrong_regime() {
        let pb = Problem::from_raw(3.0, 1.2, -0.5, 1.0, Mode::Exploratory).unwrap();
        assert_eq!(stationary_profile(&pb, 1.0), Err(ProfileError::WrongRegime));
        assert_eq!(stationary_profile(&params_a(), 1.0), Err(ProfileError::WrongRegime));
    }

    #[test]
    fn flat_state_balances_where_z_is_one() {
        let pb = params_a();
        let c = pb.consts;
        let xi: f64 = 0.8;
        // ξ^σ f^(p−1) = α
        let f = (c.alpha / xi.powf(pb.params.sigma)).powf(1.0 / (pb.params.p - 1.0));
        let (_, dv) = rhs(&ProfilePoint::new(xi, f, 0.0), &pb).unwrap();
        assert!(dv.abs() < 1e-12 * f);
        let (_, dv_low) = rhs(&ProfilePoint::new(xi, 0.5 * f, 0.0), &pb).unwrap();
        let (_, dv_high) = rhs(&ProfilePoint::new(xi, 2.0 * f, 0.0), &pb).unwrap();
        assert!(dv_low > 0.0 && dv_high < 0.0);
    }

    #[test]
    fn rhs_refuses_singular_states() {
        let pb = params_a();
        assert!(rhs(&ProfilePoint::new(0.0, 1.0, 0.0), &pb).is_err());
        assert!(rhs(&ProfilePoint::new(1.0, 0.0, 0.0), &pb).is_err());
        assert!(rhs(&ProfilePoint::new(1.0, -1e-3, 0.0), &pb).is_err());
    }

    #[test]
    fn series_start_radius() {
        let pb = params_a();
        let s = series_init(1.0, &pb, 1e-6).unwrap();
        let expected = (1e-6 / pb.consts.k_series).powf(1.0 / 1.3);
        assert!((s.xi_init - expected).abs() < 1e-15 * expected.max(1.0));
        assert!((s.xi_init - 8.340e-5).abs() < 0.001e-5);
        let fmp = s.f_init.powf(1.8);
        assert!((1.0 - 1e-6 * (1.0 + 1e-12)..=1.0).contains(&fmp));
    }

    #[test]
    fn series_start_is_consistent_with_the_ode() {
        // Differentiate the closed-form expansion by hand:
        // f^(m−p) = D − K ξ^(σ+2)  ⇒  f′ = −K(σ+2) ξ^(σ+1) f^(1−m+p) / (m−p)
        for pb in [
            params_a(),
            Problem::from_raw(3.0, 1.5, -1.5, 3.0, Mode::Strict).unwrap(),
        ] {
            let ps = pb.params;
            let k = pb.consts.k_series;
            for d in [1e-3, 1.0, 10.0] {
                let s = series_init(d, &pb, 1e-6).unwrap();
                let fp_series = -k * (ps.sigma + 2.0) * s.xi_init.powf(ps.sigma + 1.0)
                    * s.f_init.powf(1.0 - ps.m + ps.p)
                    / (ps.m - ps.p);
                let (fp, _) = rhs(&s.point(), &pb).unwrap();
                assert!(((fp - fp_series) / fp_series).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn series_rejects_bad_input() {
        let pb = params_a();
        assert!(matches!(series_init(0.0, &pb, 1e-6), Err(ProfileError::InvalidD(_))));
        assert!(matches!(series_init(1.0, &pb, 0.0), Err(ProfileError::InvalidTolerance(_))));
        let pb = Problem::from_raw(3.0, 1.2, -1.0, 1.0, Mode::Exploratory).unwrap();
        assert!(matches!(
            series_init(1.0, &pb, 1e-6),
            Err(ProfileError::DegenerateExpansion { .. })
        ));
    }

    #[test]
    fn singular_potential_start_has_a_peak() {
        // N = 1, σ < −1: N + σ < 0 so the flux starts positive and grows as ξ_init → 0.
        let pb = Problem::from_raw(3.0, 1.2, -1.5, 1.0, Mode::Exploratory).unwrap();
        let a = series_init(1.0, &pb, 1e-6).unwrap();
        let b = series_init(1.0, &pb, 1e-8).unwrap();
        assert!(a.v_init > 0.0);
        assert!(b.xi_init < a.xi_init && b.v_init > a.v_init);
    }

    #[test]
    fn extrapolation_inverts_the_exact_interface_law() {
        let pb = params_a();
        let (m, beta) = (pb.params.m, pb.consts.beta);
        let a = beta * (m - 1.0) / (2.0 * m);
        let c = 0.37;
        let xi0 = (c / a).sqrt();
        for frac in [0.1, 0.5, 0.9, 0.999] {
            let xi = frac * xi0;
            let f = (c - a * xi * xi).powf(1.0 / (m - 1.0));
            let fp = -2.0 * a * xi / (m - 1.0) * f.powf(2.0 - m);
            let est = interface_extrapolate(&ProfilePoint::from_slope(xi, f, fp, m), &pb, 1e-9).unwrap();
            assert!((est.c - c).abs() < 1e-13);
            assert!((est.xi0 - xi0).abs() < 1e-13 * xi0);
        }
    }

    #[test]
    fn extrapolation_rejects_increasing_states() {
        let pb = params_a();
        let e = interface_extrapolate(&ProfilePoint::new(1.0, 1e-3, 1e-9), &pb, 0.1);
        assert!(matches!(e, Err(ProfileError::NotNearInterface(_))));
    }

    proptest! {
        #[test]
        fn flux_round_trip(f in 1e-6f64..1e3, fp in -1e3f64..1e3, m in 1.05f64..5.0) {
            let pt = ProfilePoint::from_slope(1.0, f, fp, m);
            let back = ProfilePoint::from_slope(1.0, f, pt.f_prime(m), m);
            prop_assert!((back.v - pt.v).abs() <= 4.0 * f64::EPSILON * pt.v.abs());
            prop_assert!((pt.f_prime(m) - fp).abs() <= 4.0 * f64::EPSILON * fp.abs());
        }

        #[test]
        fn series_truncation_bound(d in 1e-6f64..1e6, tol_exp in 4.0f64..10.0) {
            let pb = params_a();
            let tol = 10f64.powf(-tol_exp);
            let s = series_init(d, &pb, tol).unwrap();
            let fmp = s.f_init.powf(pb.params.m - pb.params.p);
            prop_assert!(fmp <= d * (1.0 + 1e-12));
            prop_assert!(fmp >= d * (1.0 - tol) * (1.0 - 1e-12));
        }
    }
}
