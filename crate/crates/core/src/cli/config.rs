//! Run settings from presets, flat `key = value` files and flags, in
//! increasing order of precedence.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};

use crate::params::{Mode, Problem};
use crate::shooting::{SearchConfig, ShotConfig};

use super::CliError;

pub const PRESETS: [(&str, &str); 2] = [
    ("fig1a", include_str!("../../presets/fig1a.conf")),
    ("fig1b", include_str!("../../presets/fig1b.conf")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Flags shared by every subcommand. Keys of config files are the flag
/// names without the leading dashes.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Diffusion exponent, m > 1.
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// Reaction exponent, 1 <= p < p_c.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Potential exponent, -2 < sigma < 0.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    /// Space dimension.
    #[arg(long = "N", allow_hyphen_values = true)]
    pub n: Option<f64>,
    /// strict (default) or exploratory; the latter admits N = 1 with sigma <= -1.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Shooting parameter D = f(0)^(m-p).
    #[arg(long = "D", allow_hyphen_values = true)]
    pub d: Option<f64>,
    /// Lower end of a log-spaced D sweep; also the scan grid of find-interface.
    #[arg(long = "D-min", allow_hyphen_values = true)]
    pub d_min: Option<f64>,
    /// Upper end of the sweep.
    #[arg(long = "D-max", allow_hyphen_values = true)]
    pub d_max: Option<f64>,
    /// Number of sweep points [default: 9].
    #[arg(long = "D-count")]
    pub d_count: Option<usize>,
    /// Integrator relative tolerance [default: 1e-10].
    #[arg(long = "rel-tol", allow_hyphen_values = true)]
    pub rel_tol: Option<f64>,
    /// Integrator absolute tolerance [default: 1e-12].
    #[arg(long = "abs-tol", allow_hyphen_values = true)]
    pub abs_tol: Option<f64>,
    /// Relative bracket width that ends bisection [default: 1e-10].
    #[arg(long = "bisect-tol", allow_hyphen_values = true)]
    pub bisect_tol: Option<f64>,
    /// Output file (find-interface, catalog, exponents) or directory (shoot).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; defaults to text for exponents and shoot, json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Built-in parameter set: fig1a or fig1b.
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat key = value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, value: &str, origin: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Validation(format!("{origin}: bad value {value:?} for {key}: {e}")))
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("{origin}:{}: expected key = value", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl Settings {
    pub fn from_kv(map: &BTreeMap<String, String>, origin: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (k, v) in map {
            match k.as_str() {
                "m" => s.m = Some(parse(k, v, origin)?),
                "p" => s.p = Some(parse(k, v, origin)?),
                "sigma" => s.sigma = Some(parse(k, v, origin)?),
                "N" => s.n = Some(parse(k, v, origin)?),
                "mode" => s.mode = Some(parse(k, v, origin)?),
                "D" => s.d = Some(parse(k, v, origin)?),
                "D-min" => s.d_min = Some(parse(k, v, origin)?),
                "D-max" => s.d_max = Some(parse(k, v, origin)?),
                "D-count" => s.d_count = Some(parse(k, v, origin)?),
                "rel-tol" => s.rel_tol = Some(parse(k, v, origin)?),
                "abs-tol" => s.abs_tol = Some(parse(k, v, origin)?),
                "bisect-tol" => s.bisect_tol = Some(parse(k, v, origin)?),
                "out" => s.out = Some(PathBuf::from(v)),
                "format" => {
                    s.format = Some(
                        Format::from_str(v, true)
                            .map_err(|e| CliError::Validation(format!("{origin}: bad format {v:?}: {e}")))?,
                    )
                }
                _ => return Err(CliError::Validation(format!("{origin}: unknown key {k:?}"))),
            }
        }
        Ok(s)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            m: over.m.or(self.m),
            p: over.p.or(self.p),
            sigma: over.sigma.or(self.sigma),
            n: over.n.or(self.n),
            mode: over.mode.or(self.mode),
            d: over.d.or(self.d),
            d_min: over.d_min.or(self.d_min),
            d_max: over.d_max.or(self.d_max),
            d_count: over.d_count.or(self.d_count),
            rel_tol: over.rel_tol.or(self.rel_tol),
            abs_tol: over.abs_tol.or(self.abs_tol),
            bisect_tol: over.bisect_tol.or(self.bisect_tol),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
            preset: over.preset.or(self.preset),
            config: over.config.or(self.config),
        }
    }

    /// Merge preset, config file and these flags.
    pub fn layered(self) -> Result<Settings, CliError> {
        let mut base = Settings::default();
        if let Some(name) = &self.preset {
            let text = PRESETS
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| *t)
                .ok_or_else(|| {
                    CliError::Validation(format!("unknown preset {name:?} (available: fig1a, fig1b)"))
                })?;
            base = Settings::from_kv(&parse_kv(text, name)?, name)?;
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            let origin = path.display().to_string();
            base = base.overlay(Settings::from_kv(&parse_kv(&text, &origin)?, &origin)?);
        }
        Ok(base.overlay(self))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub d: Option<f64>,
    pub sweep: Option<Vec<f64>>,
    pub search: SearchConfig,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn shot(&self) -> &ShotConfig {
        &self.search.shot
    }
}

fn require(v: Option<f64>, name: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("missing --{name}")))
}

fn positive(v: Option<f64>, name: &str) -> Result<Option<f64>, CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(CliError::Validation(format!("--{name} must be positive, got {x}")))
        }
        other => Ok(other),
    }
}

/// `count` values log-spaced from `lo` to `hi` inclusive.
pub fn log_sweep(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

impl TryFrom<Settings> for RunConfig {
    type Error = CliError;

    fn try_from(s: Settings) -> Result<Self, CliError> {
        let problem = Problem::from_raw(
            require(s.m, "m")?,
            require(s.p, "p")?,
            require(s.sigma, "sigma")?,
            require(s.n, "N")?,
            s.mode.unwrap_or_default(),
        )
        .map_err(|e| CliError::Validation(e.to_string()))?;
        let d = positive(s.d, "D")?;
        let sweep = match (positive(s.d_min, "D-min")?, positive(s.d_max, "D-max")?) {
            (Some(lo), Some(hi)) => {
                if !(lo <= hi) {
                    return Err(CliError::Validation(format!("--D-min {lo} exceeds --D-max {hi}")));
                }
                let count = s.d_count.unwrap_or(9);
                if count == 0 {
                    return Err(CliError::Validation("--D-count must be at least 1".into()));
                }
                Some(log_sweep(lo, hi, count))
            }
            (None, None) => None,
            _ => return Err(CliError::Validation("--D-min and --D-max go together".into())),
        };
        let mut search = SearchConfig::default();
        if let Some(t) = positive(s.rel_tol, "rel-tol")? {
            search.shot.rel_tol = t;
        }
        if let Some(t) = positive(s.abs_tol, "abs-tol")? {
            search.shot.abs_tol = t;
        }
        if let Some(t) = positive(s.bisect_tol, "bisect-tol")? {
            search.bisect_tol = t;
        }
        search.grid = sweep.clone().filter(|g| g.len() >= 2);
        search.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(RunConfig {
            problem,
            d,
            sweep,
            search,
            out: s.out,
            format: s.format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_parsing_skips_comments_and_trims() {
        let map = parse_kv("# c\n m = 3 \n\nsigma=-0.7 # trailing\n", "t").unwrap();
        assert_eq!(map["m"], "3");
        assert_eq!(map["sigma"], "-0.7");
        assert!(parse_kv("m 3", "t").is_err());
        assert!(Settings::from_kv(&parse_kv("q = 1", "t").unwrap(), "t").is_err());
    }

    #[test]
    fn flags_override_preset() {
        let flags = Settings {
            preset: Some("fig1a".into()),
            p: Some(1.1),
            ..Default::default()
        };
        let s = flags.layered().unwrap();
        assert_eq!(s.p, Some(1.1));
        assert_eq!(s.m, Some(3.0));
        assert_eq!(s.d_count, Some(9));
    }

    #[test]
    fn presets_resolve() {
        for (name, _) in PRESETS {
            let s = Settings {
                preset: Some(name.into()),
                ..Default::default()
            };
            let rc = RunConfig::try_from(s.layered().unwrap()).unwrap();
            assert_eq!(rc.sweep.unwrap().len(), 9);
        }
    }

    #[test]
    fn sweep_is_log_spaced_with_exact_endpoints() {
        let g = log_sweep(3e-4, 3e-2, 9);
        assert_eq!(g[0], 3e-4);
        assert_eq!(g[8], 3e-2);
        assert!((g[4] - 3e-3).abs() < 1e-15);
        assert!(g.windows(2).all(|w| (w[1] / w[0] - 10f64.powf(0.25)).abs() < 1e-12));
    }

    #[test]
    fn invalid_settings_are_validation_errors() {
        let s = Settings {
            m: Some(3.0),
            p: Some(1.9),
            sigma: Some(-0.7),
            n: Some(3.0),
            ..Default::default()
        };
        match RunConfig::try_from(s) {
            Err(CliError::Validation(msg)) => assert!(msg.contains("p_c")),
            other => panic!("{other:?}"),
        }
        let s = Settings {
            rel_tol: Some(-1.0),
            preset: Some("fig1a".into()),
            ..Default::default()
        };
        assert!(matches!(RunConfig::try_from(s.layered().unwrap()), Err(CliError::Validation(_))));
    }
}
