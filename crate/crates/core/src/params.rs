//! Exponent validation and the derived self-similarity constants.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Only regimes where the interface profile is known to be unique.
    #[default]
    Strict,
    /// Also admits one-dimensional regimes with σ ≤ −1, where uniqueness fails.
    Exploratory,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Strict => "strict",
            Mode::Exploratory => "exploratory",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Mode::Strict),
            "exploratory" => Ok(Mode::Exploratory),
            other => Err(format!("unknown mode '{other}' (expected strict or exploratory)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("{field} = {value} violates {bound}")]
    Range {
        field: &'static str,
        bound: String,
        value: f64,
    },
    #[error(
        "N = 1 with sigma = {sigma} <= -1 admits several interface profiles; \
         rerun with --mode exploratory"
    )]
    AmbiguousRegime { sigma: f64 },
}

/// A validated exponent quadruple (m, p, σ, N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSet {
    pub m: f64,
    pub p: f64,
    pub sigma: f64,
    pub n: u32,
    pub mode: Mode,
}

/// Constants that every other module derives from a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub p_c: f64,
    /// Coefficient of ξ^(σ+2) in the expansion of f^(m−p) at the origin.
    /// Infinite when N + σ = 0, negative when N + σ < 0.
    pub k_series: f64,
}

pub fn critical_exponent(m: f64, sigma: f64) -> f64 {
    1.0 - sigma * (m - 1.0) / 2.0
}

fn range(field: &'static str, value: f64, bound: impl Into<String>) -> ParamError {
    ParamError::Range {
        field,
        bound: bound.into(),
        value,
    }
}

/// Check a raw quadruple against the admissible ranges.
///
/// `n` is taken as a float so that non-integer input can be rejected with a
/// diagnostic rather than silently truncated.
pub fn validate(m: f64, p: f64, sigma: f64, n: f64, mode: Mode) -> Result<ParamSet, ParamError> {
    for (field, value) in [("m", m), ("p", p), ("sigma", sigma), ("N", n)] {
        if !value.is_finite() {
            return Err(ParamError::NotFinite { field, value });
        }
    }
    if m <= 1.0 {
        return Err(range("m", m, "m > 1"));
    }
    if n < 1.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
        return Err(range("N", n, "N a positive integer"));
    }
    let n_int = n as u32;
    if !(sigma > -2.0 && sigma < 0.0) {
        return Err(range("sigma", sigma, "-2 < sigma < 0"));
    }
    if n_int == 1 && mode == Mode::Strict && sigma <= -1.0 {
        return Err(ParamError::AmbiguousRegime { sigma });
    }
    if p < 1.0 {
        return Err(range("p", p, "p >= 1"));
    }
    let p_c = critical_exponent(m, sigma);
    if p >= p_c {
        return Err(range("p", p, format!("p < p_c = {p_c}")));
    }
    Ok(ParamSet {
        m,
        p,
        sigma,
        n: n_int,
        mode,
    })
}

impl ParamSet {
    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn derive(&self) -> DerivedConstants {
        let ParamSet { m, p, sigma, .. } = *self;
        let n = self.n_f64();
        let l = sigma * (m - 1.0) + 2.0 * (p - 1.0);
        assert!(l < 0.0, "L = {l} must be negative on the admissible set");
        DerivedConstants {
            alpha: -(sigma + 2.0) / l,
            beta: -(m - p) / l,
            l,
            p_c: critical_exponent(m, sigma),
            k_series: (m - p) / (m * (n + sigma) * (sigma + 2.0)),
        }
    }

    /// True where the interface profile is proven unique: N ≥ 2, or N = 1 with σ > −1.
    pub fn uniqueness_guaranteed(&self) -> bool {
        self.n >= 2 || self.sigma > -1.0
    }

    pub fn is_linear_reaction(&self) -> bool {
        self.p == 1.0
    }

    /// Sign-determining quantity m(σ+1)+p of the one-dimensional analysis.
    pub fn q6_discriminant(&self) -> f64 {
        self.m * (self.sigma + 1.0) + self.p
    }
}

impl DerivedConstants {
    pub fn beta_over_alpha(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// A validated parameter set bundled with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub params: ParamSet,
    pub consts: DerivedConstants,
}

impl Problem {
    pub fn new(params: ParamSet) -> Self {
        Self {
            consts: params.derive(),
            params,
        }
    }

    pub fn from_raw(m: f64, p: f64, sigma: f64, n: f64, mode: Mode) -> Result<Self, ParamError> {
        Ok(Self::new(validate(m, p, sigma, n, mode)?))
    }
}
