//! Autonomous phase-space form of the profile equation, its chart at infinity,
//! and the catalog of critical points.
//!
//! With
//!
//! ```text
//! X = (m/α) ξ^(−2) f^(m−1),  Y = (m/α) ξ^(−1) f^(m−2) f′,  Z = ξ^σ f^(p−1) / α
//! ```
//!
//! and the new independent variable dη/dξ = (α/m) ξ f^(1−m), the profile
//! equation becomes a quadratic system in (X, Y, Z). Along it d(ln ξ)/dη = X
//! and Y/X = ξ f′/f is the local log-log slope of the profile.

use num_complex::Complex64;

use crate::eigen::{self, Mat3};
use crate::integrator::SingularState;
use crate::params::Problem;
use crate::profile::ProfilePoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Coordinates y = Y/X, z = Z/X, w = 1/X of the chart at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfinityPoint {
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

pub fn phase_rhs(pt: &PhasePoint, problem: &Problem) -> [f64; 3] {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let n = ps.n_f64();
    let PhasePoint { x, y, z } = *pt;
    [
        x * ((ps.m - 1.0) * y - 2.0 * x),
        -y * y - ba * y + x - n * x * y - x * z,
        z * ((ps.p - 1.0) * y + ps.sigma * x),
    ]
}

pub fn phase_jacobian(pt: &PhasePoint, problem: &Problem) -> Mat3 {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let n = ps.n_f64();
    let PhasePoint { x, y, z } = *pt;
    [
        [(ps.m - 1.0) * y - 4.0 * x, (ps.m - 1.0) * x, 0.0],
        [1.0 - n * y - z, -2.0 * y - ba - n * x, -x],
        [ps.sigma * z, (ps.p - 1.0) * z, (ps.p - 1.0) * y + ps.sigma * x],
    ]
}

pub fn infinity_rhs(pt: &InfinityPoint, problem: &Problem) -> [f64; 3] {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let n = ps.n_f64();
    let InfinityPoint { y, z, w } = *pt;
    [
        -(n - 2.0) * y - z + w - ps.m * y * y - ba * y * w,
        (ps.sigma + 2.0) * z + (ps.p - ps.m) * y * z,
        2.0 * w - (ps.m - 1.0) * y * w,
    ]
}

pub fn infinity_jacobian(pt: &InfinityPoint, problem: &Problem) -> Mat3 {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let n = ps.n_f64();
    let InfinityPoint { y, z, w } = *pt;
    [
        [-(n - 2.0) - 2.0 * ps.m * y - ba * w, -1.0, 1.0 - ba * y],
        [(ps.p - ps.m) * z, ps.sigma + 2.0 + (ps.p - ps.m) * y, 0.0],
        [-(ps.m - 1.0) * w, 0.0, 2.0 - (ps.m - 1.0) * y],
    ]
}

/// Chart at infinity covering the points Y → ±∞, in coordinates
/// x = X/Y, z = Z/Y, w = 1/Y, with time orientation `sign`.
///
/// `sign = −1` is the orientation in which the origin is the source Q₂,
/// `sign = +1` the one in which it is the sink Q₃.
pub fn vertical_chart_rhs(pt: &[f64; 3], sign: f64, problem: &Problem) -> [f64; 3] {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let n = ps.n_f64();
    let [x, z, w] = *pt;
    [
        sign * (-ps.m * x - (n - 2.0) * x * x - ba * x * w + x * x * w - x * x * z),
        sign * (-ps.p * z - ba * z * w - (n + ps.sigma) * x * z - x * z * z + x * z * w),
        sign * (-w - ba * w * w + x * w * w - n * x * w - x * z * w),
    ]
}

pub fn vertical_chart_jacobian_at_origin(sign: f64, problem: &Problem) -> Mat3 {
    let ps = &problem.params;
    [
        [-sign * ps.m, 0.0, 0.0],
        [0.0, -sign * ps.p, 0.0],
        [0.0, 0.0, -sign],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    /// The invariant plane {z = 0} of the chart at infinity, variables (y, w).
    Z0,
    /// The invariant plane {w = 0} of the chart at infinity, variables (y, z).
    W0,
}

pub fn reduced_plane_rhs(plane: Plane, pt: [f64; 2], problem: &Problem) -> [f64; 2] {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let n = ps.n_f64();
    match plane {
        Plane::Z0 => {
            let [y, w] = pt;
            [
                -(n - 2.0) * y + w - ps.m * y * y - ba * y * w,
                2.0 * w - (ps.m - 1.0) * y * w,
            ]
        }
        Plane::W0 => {
            let [y, z] = pt;
            [
                -(n - 2.0) * y - z - ps.m * y * y,
                (ps.sigma + 2.0) * z + (ps.p - ps.m) * y * z,
            ]
        }
    }
}

/// The isocline ẏ = 0 of a reduced plane, returned as the second variable
/// (w or z) as a function of y.
pub fn isocline(plane: Plane, y: f64, problem: &Problem) -> f64 {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let n = ps.n_f64();
    match plane {
        Plane::Z0 => ((n - 2.0) * y + ps.m * y * y) / (1.0 - ba * y),
        Plane::W0 => -(n - 2.0) * y - ps.m * y * y,
    }
}

pub fn profile_to_phase(pt: &ProfilePoint, problem: &Problem) -> Result<PhasePoint, SingularState> {
    if !(pt.xi > 0.0) {
        return Err(SingularState::new("xi <= 0"));
    }
    if !(pt.f > 0.0) {
        return Err(SingularState::new("f <= 0"));
    }
    let ps = &problem.params;
    let alpha = problem.consts.alpha;
    // Y = (m/α) ξ^(−1) f^(m−2) f′ = v / (α ξ f)
    Ok(PhasePoint {
        x: ps.m / alpha * pt.f.powf(ps.m - 1.0) / (pt.xi * pt.xi),
        y: pt.v / (alpha * pt.xi * pt.f),
        z: pt.xi.powf(ps.sigma) * pt.f.powf(ps.p - 1.0) / alpha,
    })
}

/// Recover the profile state from a phase point and the current ξ.
pub fn phase_to_profile(pt: &PhasePoint, xi: f64, problem: &Problem) -> ProfilePoint {
    let m = problem.params.m;
    let alpha = problem.consts.alpha;
    let f = (alpha * pt.x * xi * xi / m).powf(1.0 / (m - 1.0));
    ProfilePoint::new(xi, f, alpha * xi * pt.y * f)
}

/// dη/dξ = (α/m) ξ f^(1−m).
pub fn eta_rate(pt: &ProfilePoint, problem: &Problem) -> f64 {
    problem.consts.alpha / problem.params.m * pt.xi * pt.f.powf(1.0 - problem.params.m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tag {
    P0,
    P1,
    PGamma(f64),
    P1Gamma(f64),
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
}

impl Tag {
    pub fn label(&self) -> &'static str {
        match self {
            Tag::P0 => "P0",
            Tag::P1 => "P1",
            Tag::PGamma(_) => "Pgamma",
            Tag::P1Gamma(_) => "P1gamma",
            Tag::Q1 => "Q1",
            Tag::Q2 => "Q2",
            Tag::Q3 => "Q3",
            Tag::Q4 => "Q4",
            Tag::Q5 => "Q5",
            Tag::Q6 => "Q6",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Tag::PGamma(g) | Tag::P1Gamma(g) => Some(*g),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// (X, Y, Z)
    Finite,
    /// (y, z, w) = (Y/X, Z/X, 1/X)
    Infinity,
    /// (x, z, w) = (X/Y, Z/Y, 1/Y)
    Vertical,
    /// Only the position on the Poincaré sphere is recorded.
    Sphere,
}

impl Chart {
    pub fn as_str(self) -> &'static str {
        match self {
            Chart::Finite => "finite",
            Chart::Infinity => "infinity",
            Chart::Vertical => "infinity_vertical",
            Chart::Sphere => "sphere",
        }
    }
}

/// Local behaviours of profiles on orbits leaving or entering a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    /// f^(m−p) = D − K ξ^(σ+2) as ξ → 0
    OriginSeries,
    /// f^(m−1) ≈ C − β(m−1)/(2m) ξ² near a finite interface
    Interface,
    /// f ~ K ξ^((σ+2)/(m−p)) as ξ → ∞
    GrowUpTail,
    /// f ~ C ξ^(−(N−2)/m) as ξ → 0
    PowerAsymptote,
    /// f ~ K (−ln ξ)^(1/m) as ξ → 0
    LogAsymptote,
    /// f ~ K ξ^(1/m) as ξ → 0
    OneDimRoot,
    /// f ~ K ξ^((σ+2)/(m−p)) as ξ → 0
    OriginPower,
    /// f vanishes with (f^m)′ > 0
    SignChangeRising,
    /// f vanishes with (f^m)′ < 0
    SignChangeFalling,
    /// Interface at ξ₀ = (αγ)^(1/σ) for linear reaction
    InterfaceGamma,
    NoConnections,
}

impl Behavior {
    pub fn id(self) -> &'static str {
        match self {
            Behavior::OriginSeries => "origin_series",
            Behavior::Interface => "interface",
            Behavior::GrowUpTail => "growup_tail",
            Behavior::PowerAsymptote => "vertical_asymptote_power",
            Behavior::LogAsymptote => "vertical_asymptote_log",
            Behavior::OneDimRoot => "origin_root_1_over_m",
            Behavior::OriginPower => "origin_power",
            Behavior::SignChangeRising => "sign_change_rising",
            Behavior::SignChangeFalling => "sign_change_falling",
            Behavior::InterfaceGamma => "interface_gamma",
            Behavior::NoConnections => "no_connecting_orbits",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Behavior::OriginSeries => "f^(m-p) = D - K xi^(sigma+2), xi -> 0",
            Behavior::Interface => "f^(m-1) ~ C - beta(m-1)/(2m) xi^2, xi -> xi0",
            Behavior::GrowUpTail => "f ~ K xi^((sigma+2)/(m-p)), xi -> inf",
            Behavior::PowerAsymptote => "f ~ C xi^(-(N-2)/m), xi -> 0",
            Behavior::LogAsymptote => "f ~ K (-ln xi)^(1/m), xi -> 0",
            Behavior::OneDimRoot => "f ~ K xi^(1/m), xi -> 0",
            Behavior::OriginPower => "f ~ K xi^((sigma+2)/(m-p)), xi -> 0",
            Behavior::SignChangeRising => "f(xi0) = 0, (f^m)'(xi0) > 0",
            Behavior::SignChangeFalling => "f(xi0) = 0, (f^m)'(xi0) < 0",
            Behavior::InterfaceGamma => "interface at xi0 = (alpha gamma)^(1/sigma)",
            Behavior::NoConnections => "no profiles on connecting orbits",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointEntry {
    pub tag: Tag,
    pub chart: Chart,
    pub location: [f64; 3],
    /// Position on the Poincaré sphere (X̄, Ȳ, Z̄, W) for points at infinity.
    pub sphere: Option<[f64; 4]>,
    pub jacobian: Option<Mat3>,
    pub eigenvalues: [Complex64; 3],
    pub eigenvectors: [Option<[f64; 3]>; 3],
    /// Closed-form spectrum, in the same order as `eigenvalues`, where known.
    pub expected_eigenvalues: Option<[f64; 3]>,
    pub saddle_node: bool,
    pub behaviors: Vec<Behavior>,
    pub note: &'static str,
}

impl CriticalPointEntry {
    /// Largest |det(J − λI)| over the computed spectrum.
    pub fn root_residual(&self) -> f64 {
        match &self.jacobian {
            Some(j) => self
                .eigenvalues
                .iter()
                .map(|&l| eigen::det_shifted(j, l))
                .fold(0.0, f64::max),
            None => 0.0,
        }
    }

    /// Largest deviation from the closed-form spectrum, if there is one.
    pub fn spectrum_error(&self) -> Option<f64> {
        let mut expected = self.expected_eigenvalues?;
        expected.sort_by(f64::total_cmp);
        Some(
            self.eigenvalues
                .iter()
                .zip(expected)
                .map(|(c, e)| (*c - Complex64::new(e, 0.0)).norm())
                .fold(0.0, f64::max),
        )
    }
}

pub const DEFAULT_GAMMA_SAMPLES: [f64; 3] = [0.5, 1.0, 2.0];
const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

#[allow(clippy::too_many_arguments)]
fn entry(
    tag: Tag,
    chart: Chart,
    location: [f64; 3],
    sphere: Option<[f64; 4]>,
    jacobian: Mat3,
    expected: Option<[f64; 3]>,
    behaviors: Vec<Behavior>,
    note: &'static str,
) -> CriticalPointEntry {
    let eigenvalues = eigen::eigenvalues(&jacobian);
    let eigenvectors = eigen::eigenvectors(&jacobian, &eigenvalues);
    let saddle_node = eigenvalues.iter().any(|l| l.norm() < ZERO_EIGENVALUE_TOL)
        && eigenvalues.iter().any(|l| l.re > ZERO_EIGENVALUE_TOL)
        && matches!(tag, Tag::Q1);
    CriticalPointEntry {
        tag,
        chart,
        location,
        sphere,
        jacobian: Some(jacobian),
        eigenvalues,
        eigenvectors,
        expected_eigenvalues: expected,
        saddle_node,
        behaviors,
        note,
    }
}

/// All critical points relevant to the parameter set, finite ones first.
pub fn critical_catalog(problem: &Problem) -> Vec<CriticalPointEntry> {
    critical_catalog_with(problem, &DEFAULT_GAMMA_SAMPLES)
}

pub fn critical_catalog_with(problem: &Problem, gammas: &[f64]) -> Vec<CriticalPointEntry> {
    let ps = &problem.params;
    let ba = problem.consts.beta_over_alpha();
    let (m, p, s, n) = (ps.m, ps.p, ps.sigma, ps.n_f64());
    let mut out = Vec::new();

    let p0 = PhasePoint { x: 0.0, y: 0.0, z: 0.0 };
    out.push(entry(
        Tag::P0,
        Chart::Finite,
        [0.0; 3],
        None,
        phase_jacobian(&p0, problem),
        Some([0.0, -ba, 0.0]),
        vec![Behavior::GrowUpTail],
        "two-dimensional center manifold; orbits on it enter P0",
    ));

    if ps.is_linear_reaction() {
        for &g in gammas {
            let pt = PhasePoint { x: 0.0, y: -ba, z: g };
            out.push(entry(
                Tag::P1Gamma(g),
                Chart::Finite,
                [0.0, -ba, g],
                None,
                phase_jacobian(&pt, problem),
                Some([-(m - 1.0) * ba, ba, 0.0]),
                vec![Behavior::InterfaceGamma],
                "critical line for linear reaction; one stable, one unstable, one center direction",
            ));
        }
    } else {
        let pt = PhasePoint { x: 0.0, y: -ba, z: 0.0 };
        out.push(entry(
            Tag::P1,
            Chart::Finite,
            [0.0, -ba, 0.0],
            None,
            phase_jacobian(&pt, problem),
            Some([-(m - 1.0) * ba, ba, -(p - 1.0) * ba]),
            vec![Behavior::Interface],
            "two-dimensional stable manifold carries the interface profiles",
        ));
    }

    for &g in gammas {
        let pt = PhasePoint { x: 0.0, y: 0.0, z: g };
        out.push(entry(
            Tag::PGamma(g),
            Chart::Finite,
            [0.0, 0.0, g],
            None,
            phase_jacobian(&pt, problem),
            Some([0.0, 0.0, -ba]),
            vec![Behavior::NoConnections],
            "no connecting orbits expected; center manifold not computed",
        ));
    }

    let q1 = InfinityPoint { y: 0.0, z: 0.0, w: 0.0 };
    if ps.n == 2 {
        out.push(entry(
            Tag::Q1,
            Chart::Infinity,
            [0.0; 3],
            Some([1.0, 0.0, 0.0, 0.0]),
            infinity_jacobian(&q1, problem),
            Some([0.0, s + 2.0, 2.0]),
            vec![Behavior::OriginSeries, Behavior::LogAsymptote],
            "Q1 and Q5 merge at N = 2; saddle-node",
        ));
    } else {
        out.push(entry(
            Tag::Q1,
            Chart::Infinity,
            [0.0; 3],
            Some([1.0, 0.0, 0.0, 0.0]),
            infinity_jacobian(&q1, problem),
            Some([-(n - 2.0), s + 2.0, 2.0]),
            vec![Behavior::OriginSeries],
            if ps.n == 1 {
                "unstable node for N = 1"
            } else {
                "two-dimensional unstable manifold carries the profiles with f(0) > 0"
            },
        ));
    }

    out.push(entry(
        Tag::Q2,
        Chart::Vertical,
        [0.0; 3],
        Some([0.0, 1.0, 0.0, 0.0]),
        vertical_chart_jacobian_at_origin(-1.0, problem),
        Some([m, p, 1.0]),
        vec![Behavior::SignChangeRising],
        "unstable node",
    ));
    out.push(entry(
        Tag::Q3,
        Chart::Vertical,
        [0.0; 3],
        Some([0.0, -1.0, 0.0, 0.0]),
        vertical_chart_jacobian_at_origin(1.0, problem),
        Some([-m, -p, -1.0]),
        vec![Behavior::SignChangeFalling],
        "stable node",
    ));
    out.push(CriticalPointEntry {
        tag: Tag::Q4,
        chart: Chart::Sphere,
        location: [0.0, 0.0, 1.0],
        sphere: Some([0.0, 0.0, 1.0, 0.0]),
        jacobian: None,
        eigenvalues: [Complex64::new(0.0, 0.0); 3],
        eigenvectors: [None; 3],
        expected_eigenvalues: Some([0.0; 3]),
        saddle_node: false,
        behaviors: vec![Behavior::NoConnections],
        note: "linearization has three zero eigenvalues; no profiles enter or leave",
    });

    if ps.n != 2 {
        let y5 = -(n - 2.0) / m;
        let q5 = InfinityPoint { y: y5, z: 0.0, w: 0.0 };
        let r = ((n - 2.0).powi(2) + m * m).sqrt();
        let (behaviors, note) = if ps.n == 1 {
            (
                vec![Behavior::OneDimRoot],
                if ps.q6_discriminant() > 0.0 {
                    "two unstable directions for N = 1"
                } else {
                    "stable manifold lies in {w = 0}, unstable one in {z = 0}"
                },
            )
        } else {
            (vec![Behavior::PowerAsymptote], "unstable node")
        };
        out.push(entry(
            Tag::Q5,
            Chart::Infinity,
            [y5, 0.0, 0.0],
            Some([m / r, -(n - 2.0) / r, 0.0, 0.0]),
            infinity_jacobian(&q5, problem),
            Some([
                n - 2.0,
                s + 2.0 + (m - p) * (n - 2.0) / m,
                2.0 + (m - 1.0) * (n - 2.0) / m,
            ]),
            behaviors,
            note,
        ));
    }

    if ps.n == 1 && ps.q6_discriminant() < 0.0 {
        let k = ps.q6_discriminant();
        let y6 = (s + 2.0) / (m - p);
        let z6 = -(s + 2.0) * k / (m - p).powi(2);
        let q6 = InfinityPoint { y: y6, z: z6, w: 0.0 };
        // Closed-form spectrum: the upper-left block [[a, −1], [b, 0]] and −L/(m−p).
        let a = 1.0 - 2.0 * m * (s + 2.0) / (m - p);
        let b = (s + 2.0) * k / (m - p);
        let disc = a * a - 4.0 * b;
        let expected = if disc >= 0.0 {
            let sq = disc.sqrt();
            Some([(a - sq) / 2.0, (a + sq) / 2.0, -problem.consts.l / (m - p)])
        } else {
            None
        };
        let r = (1.0 + y6 * y6 + z6 * z6).sqrt();
        out.push(entry(
            Tag::Q6,
            Chart::Infinity,
            [y6, z6, 0.0],
            Some([1.0 / r, y6 / r, z6 / r, 0.0]),
            infinity_jacobian(&q6, problem),
            expected,
            vec![Behavior::OriginPower],
            "two-dimensional unstable manifold; exists only when m(sigma+1)+p < 0",
        ));
    }

    out
}
