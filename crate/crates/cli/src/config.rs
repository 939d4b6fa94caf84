//! Flat `key = value` run configuration. The accepted keys are listed in
//! `CONFIG.md` next to this crate's manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use ergopath::levy::{TemperedStableMeasure, TruncationPolicy};
use ergopath::models::{BnsParams, HestonParams};
use ergopath::pricing::OptionKind;
use ergopath::Schedule;

/// A configuration problem, reported with the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    fn new(key: &str, reason: impl Into<String>) -> Self {
        ConfigError {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.reason)
    }
}

impl std::error::Error for ConfigError {}

impl From<ergopath::Error> for ConfigError {
    fn from(e: ergopath::Error) -> Self {
        match e {
            ergopath::Error::Domain { name, reason } => ConfigError::new(name, reason),
            other => ConfigError::new("model", other.to_string()),
        }
    }
}

pub const KEYS: &[&str] = &[
    "model",
    "s0",
    "r",
    "rho",
    "k",
    "theta",
    "sigma_v",
    "v_init",
    "y_init",
    "x_init",
    "mu",
    "c",
    "lambda",
    "alpha",
    "truncation",
    "truncation_exponent",
    "truncation_scale",
    "c1",
    "rho1",
    "c2",
    "rho2",
    "strikes",
    "maturities",
    "kind",
    "iters",
    "seed",
    "parity",
    "replications",
    "histogram_bins",
    "histogram_min",
    "histogram_max",
    "histogram_out",
    "out",
    "oracle_paths",
    "fine_step",
    "ou_sigma",
    "levy_u",
    "levy_order",
    "scan_to",
    "eps",
    "series_s",
];

/// Raw key/value pairs, later entries overriding earlier ones.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(&format!("line {}", i + 1), "expected `key = value`"))?;
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        RawConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::new(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::new(pair, "expected `key=value`"))?;
        self.set(k.trim(), v.trim())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .replace('_', "")
                .parse::<f64>()
                .ok()
                .filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x < 1e18)
                .map(|x| x as usize)
                .ok_or_else(|| ConfigError::new(key, format!("expected a non-negative integer, got `{v}`"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "1" | "yes" | "on") => Ok(true),
            Some("false" | "0" | "no" | "off") => Ok(false),
            Some(v) => Err(ConfigError::new(key, format!("expected true or false, got `{v}`"))),
        }
    }

    fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(key, v),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::new(key, format!("expected a finite number, got `{v}`")))
}

/// Comma-separated numbers, or an inclusive range `a:b:step`.
fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let out = if parts.len() == 3 {
        let (a, b, h) = (parse_f64(key, parts[0])?, parse_f64(key, parts[1])?, parse_f64(key, parts[2])?);
        if !(h > 0.0 && b >= a) {
            return Err(ConfigError::new(key, "range needs a ≤ b and a positive step"));
        }
        let count = ((b - a) / h + 1e-9).floor() as usize + 1;
        (0..count).map(|i| a + i as f64 * h).collect()
    } else {
        v.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_f64(key, s.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if out.is_empty() {
        return Err(ConfigError::new(key, "empty list"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelConfig {
    Heston(HestonParams),
    Bns(BnsParams),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Heston(_) => "heston",
            ModelConfig::Bns(_) => "bns",
        }
    }

    pub fn rate(&self) -> f64 {
        match self {
            ModelConfig::Heston(p) => p.r,
            ModelConfig::Bns(p) => p.r,
        }
    }

    pub fn s0(&self) -> f64 {
        match self {
            ModelConfig::Heston(p) => p.s0,
            ModelConfig::Bns(p) => p.s0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub c1: f64,
    pub rho1: f64,
    pub c2: f64,
    pub rho2: f64,
}

impl ScheduleConfig {
    pub fn build(&self) -> Schedule {
        Schedule::polynomial(self.c1, self.rho1, self.c2, self.rho2).expect("validated when the config was read")
    }
}

/// Every setting of a run, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    pub strikes: Vec<f64>,
    pub maturities: Vec<f64>,
    pub kind: OptionKind,
    pub iters: usize,
    pub seed: u64,
    pub parity: bool,
    pub replications: usize,
    pub histogram: Option<(usize, f64, f64)>,
    pub histogram_out: Option<String>,
    /// Output CSV path; standard output when absent.
    pub out: Option<String>,
    pub oracle_paths: u64,
    pub fine_step: f64,
    pub ou_sigma: f64,
    pub levy_u: f64,
    pub levy_order: u32,
    pub scan_to: usize,
    pub eps: f64,
    pub series_s: f64,
}

fn heston(raw: &RawConfig) -> Result<HestonParams, ConfigError> {
    let d = HestonParams::reference();
    let mut p = HestonParams::new(
        raw.f64_or("s0", d.s0)?,
        raw.f64_or("r", d.r)?,
        raw.f64_or("rho", d.rho)?,
        raw.f64_or("k", d.k)?,
        raw.f64_or("theta", d.theta)?,
        raw.f64_or("sigma_v", d.sigma_v)?,
    )?;
    p.v_init = raw.f64_or("v_init", p.theta)?;
    p.y_init = raw.f64_or("y_init", 0.0)?;
    p.validate()?;
    Ok(p)
}

fn bns(raw: &RawConfig) -> Result<BnsParams, ConfigError> {
    let d = BnsParams::reference();
    let jump = TemperedStableMeasure::new(
        raw.f64_or("c", d.jump.c)?,
        raw.f64_or("lambda", d.jump.lambda)?,
        raw.f64_or("alpha", d.jump.alpha)?,
    )?;
    let mut p = BnsParams::new(
        raw.f64_or("s0", d.s0)?,
        raw.f64_or("r", d.r)?,
        raw.f64_or("rho", d.rho)?,
        raw.f64_or("mu", d.mu)?,
        jump,
    )?;
    p.x_init = raw.f64_or("x_init", 0.0)?;
    p.v_init = raw.f64_or("v_init", p.v_init)?;
    p.truncation = match raw.get("truncation").unwrap_or("step-power") {
        "step" => TruncationPolicy::MatchStep,
        "step-power" => match raw.get("truncation_exponent") {
            None => TruncationPolicy::bias_matched(jump.alpha),
            Some(v) => TruncationPolicy::StepPower {
                exponent: parse_f64("truncation_exponent", v)?,
            },
        },
        "power" => TruncationPolicy::Power {
            scale: raw.f64_or("truncation_scale", 1.0)?,
            exponent: raw.f64_or("truncation_exponent", 2.0 / 3.0)?,
        },
        other => return Err(ConfigError::new("truncation", format!("expected step, step-power or power, got `{other}`"))),
    };
    p.validate()?;
    Ok(p)
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let model = match raw.get("model").unwrap_or("heston") {
            "heston" => ModelConfig::Heston(heston(raw)?),
            "bns" => ModelConfig::Bns(bns(raw)?),
            other => return Err(ConfigError::new("model", format!("expected heston or bns, got `{other}`"))),
        };
        let schedule = ScheduleConfig {
            c1: raw.f64_or("c1", 1.0)?,
            rho1: raw.f64_or("rho1", 1.0 / 3.0)?,
            c2: raw.f64_or("c2", 1.0)?,
            rho2: raw.f64_or("rho2", 1.0 / 3.0)?,
        };
        Schedule::polynomial(schedule.c1, schedule.rho1, schedule.c2, schedule.rho2)?;

        let strikes = raw.list_or("strikes", &[44.0, 45.0, 46.0, 47.0, 48.0, 49.0, 50.0, 51.0, 52.0, 53.0, 54.0, 55.0, 56.0])?;
        if let Some(k) = strikes.iter().find(|k| **k <= 0.0) {
            return Err(ConfigError::new("strikes", format!("must be positive, got {k}")));
        }
        let maturities = raw.list_or("maturities", &[1.0])?;
        if let Some(t) = maturities.iter().find(|t| **t <= 0.0) {
            return Err(ConfigError::new("maturities", format!("must be positive, got {t}")));
        }
        let kind = match raw.get("kind").unwrap_or("call") {
            "call" => OptionKind::Call,
            "put" => OptionKind::Put,
            other => return Err(ConfigError::new("kind", format!("expected call or put, got `{other}`"))),
        };
        let iters = raw.usize_or("iters", 500_000)?;
        if iters == 0 {
            return Err(ConfigError::new("iters", "must be at least 1"));
        }
        let seed = match raw.get("seed") {
            None => 1,
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| ConfigError::new("seed", format!("expected a 64-bit unsigned integer, got `{v}`")))?,
        };
        let replications = raw.usize_or("replications", 1)?;
        if replications == 0 {
            return Err(ConfigError::new("replications", "must be at least 1"));
        }
        let bins = raw.usize_or("histogram_bins", 0)?;
        let histogram = if bins > 0 {
            let lo = raw.f64_or("histogram_min", 0.0)?;
            let hi = raw.f64_or("histogram_max", 0.05)?;
            if !(hi > lo) {
                return Err(ConfigError::new("histogram_max", "must exceed histogram_min"));
            }
            Some((bins, lo, hi))
        } else {
            None
        };
        let fine_step = raw.f64_or("fine_step", 1e-3)?;
        if !(fine_step > 0.0) {
            return Err(ConfigError::new("fine_step", "must be positive"));
        }
        let ou_sigma = raw.f64_or("ou_sigma", 1.0)?;
        if ou_sigma < 0.0 {
            return Err(ConfigError::new("ou_sigma", "must be non-negative"));
        }
        let levy_u = raw.f64_or("levy_u", 0.1)?;
        if !(levy_u > 0.0) {
            return Err(ConfigError::new("levy_u", "must be positive"));
        }
        let levy_order = raw.usize_or("levy_order", 2)?;
        if !(levy_order == 1 || levy_order == 2) {
            return Err(ConfigError::new("levy_order", "must be 1 or 2"));
        }
        Ok(RunConfig {
            model,
            schedule,
            strikes,
            maturities,
            kind,
            iters,
            seed,
            parity: raw.bool_or("parity", true)?,
            replications,
            histogram,
            histogram_out: raw.get("histogram_out").map(str::to_string),
            out: raw.get("out").map(str::to_string),
            oracle_paths: raw.usize_or("oracle_paths", 100_000)? as u64,
            fine_step,
            ou_sigma,
            levy_u,
            levy_order: levy_order as u32,
            scan_to: raw.usize_or("scan_to", ergopath::schedule::DEFAULT_SCAN)?,
            eps: raw.f64_or("eps", 0.5)?,
            series_s: raw.f64_or("series_s", 2.0)?,
        })
    }
}
