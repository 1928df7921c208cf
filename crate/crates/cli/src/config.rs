//! Run configuration: defaults, `key = value` files and flag overrides.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::GeneratorKind;
use crate::stream::Format;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("config file line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    OneshotL2,
    OneshotL1,
    Continual,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Median,
    MeanAbs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum L2Noise {
    Algorithm,
    Unscaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum L1Noise {
    Sensitivity,
    Algorithm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinualNoise {
    Derived,
    Algorithm,
    SqrtAlphaW,
}

/// Everything a run needs. Serialized into every output document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub window: u64,
    pub universe: u32,
    /// Stream length bound `m`; defaults to the actual stream length.
    pub length: Option<u64>,
    pub kappa: f64,
    pub kappa_w: f64,
    pub noise: bool,
    pub seed: u64,
    /// Stream file, or `-` for standard input.
    pub input: Option<String>,
    /// Synthetic stream instead of a file.
    pub generator: Option<GeneratorKind>,
    #[serde(with = "format_serde")]
    pub format: Format,
    pub output: Option<String>,
    pub trials: u32,
    pub ams_rows: Option<usize>,
    pub ams_reps: Option<usize>,
    pub cs_rows: Option<usize>,
    pub cs_buckets: Option<usize>,
    pub estimator: Estimator,
    pub l2_noise: L2Noise,
    pub l1_noise: L1Noise,
    pub continual_noise: ContinualNoise,
    pub batch: u64,
    /// `c` in the `1 - 1/m^c` success target.
    pub failure_exponent: f64,
    /// Include wall-clock time in documents (breaks byte-identical reruns).
    pub emit_timing: bool,
}

mod format_serde {
    use super::Format;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &Format, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match f {
            Format::Auto => "auto",
            Format::Text => "text",
            Format::Binary => "binary",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Format, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::OneshotL2,
            alpha: 0.1,
            epsilon: 1.0,
            delta: 1e-6,
            window: 1000,
            universe: 1000,
            length: None,
            kappa: 1.0,
            kappa_w: 1.0,
            noise: true,
            seed: 0,
            input: None,
            generator: None,
            format: Format::Auto,
            output: None,
            trials: 1,
            ams_rows: None,
            ams_reps: None,
            cs_rows: None,
            cs_buckets: None,
            estimator: Estimator::Median,
            l2_noise: L2Noise::Algorithm,
            l1_noise: L1Noise::Sensitivity,
            continual_noise: ContinualNoise::Derived,
            batch: 1,
            failure_exponent: 1.0,
            emit_timing: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_enum<T: for<'de> Deserialize<'de>>(key: &str, value: &str) -> Result<T, ConfigError> {
    serde_json::from_value(serde_json::Value::String(value.to_string())).map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: "not one of the accepted values".into(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

impl RunConfig {
    /// Sets one field from its flag name (`kebab-case`; underscores are
    /// accepted too).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().replace('_', "-");
        let k = key.as_str();
        let v = value.trim();
        match k {
            "mode" => self.mode = parse_enum(k, v)?,
            "alpha" => self.alpha = parse(k, v)?,
            "epsilon" => self.epsilon = parse(k, v)?,
            "delta" => self.delta = parse(k, v)?,
            "window" => self.window = parse(k, v)?,
            "universe" => self.universe = parse(k, v)?,
            "length" => self.length = Some(parse(k, v)?),
            "kappa" => self.kappa = parse(k, v)?,
            "kappa-w" => self.kappa_w = parse(k, v)?,
            "noise" => self.noise = parse_bool(k, v)?,
            "seed" => self.seed = parse(k, v)?,
            "input" => self.input = Some(v.to_string()),
            "generator" => self.generator = Some(parse(k, v)?),
            "format" => self.format = parse(k, v)?,
            "output" => self.output = Some(v.to_string()),
            "trials" => self.trials = parse(k, v)?,
            "ams-rows" => self.ams_rows = Some(parse(k, v)?),
            "ams-reps" => self.ams_reps = Some(parse(k, v)?),
            "cs-rows" => self.cs_rows = Some(parse(k, v)?),
            "cs-buckets" => self.cs_buckets = Some(parse(k, v)?),
            "estimator" => self.estimator = parse_enum(k, v)?,
            "l2-noise" => self.l2_noise = parse_enum(k, v)?,
            "l1-noise" => self.l1_noise = parse_enum(k, v)?,
            "continual-noise" => self.continual_noise = parse_enum(k, v)?,
            "batch" => self.batch = parse(k, v)?,
            "failure-exponent" => self.failure_exponent = parse(k, v)?,
            "emit-timing" => self.emit_timing = parse_bool(k, v)?,
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                reason: format!("expected key = value, found {raw:?}"),
            })?;
            self.set(k, v).map_err(|e| ConfigError::Syntax { line: i + 1, reason: e.to_string() })?;
        }
        Ok(())
    }

    /// Checks every range that can be checked before the stream is read.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let unit = |x: f64| x.is_finite() && x > 0.0 && x < 1.0;
        if !unit(self.alpha) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !unit(self.delta) {
            return bad("delta must lie in (0, 1)");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.universe == 0 {
            return bad("universe must be at least 1");
        }
        if let Some(m) = self.length {
            if m == 0 {
                return bad("length must be at least 1");
            }
            if self.window > m && self.mode != Mode::Continual {
                return bad("window must not exceed the stream length");
            }
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return bad("kappa must be positive");
        }
        if !(self.kappa_w.is_finite() && self.kappa_w >= 0.0) {
            return bad("kappa-w must be non-negative");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if !(self.failure_exponent.is_finite() && self.failure_exponent > 0.0) {
            return bad("failure-exponent must be positive");
        }
        for (name, v) in [
            ("ams-rows", self.ams_rows),
            ("ams-reps", self.ams_reps),
            ("cs-rows", self.cs_rows),
            ("cs-buckets", self.cs_buckets),
        ] {
            if v == Some(0) {
                return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
            }
        }
        if self.ams_rows.is_some() != self.ams_reps.is_some() {
            return bad("ams-rows and ams-reps must be given together");
        }
        if self.cs_rows.is_some() != self.cs_buckets.is_some() {
            return bad("cs-rows and cs-buckets must be given together");
        }
        match (&self.input, &self.generator) {
            (Some(_), Some(_)) => bad("give either input or generator, not both"),
            (None, None) => bad("no stream: give input or generator"),
            (None, Some(_)) if self.length.is_none() => bad("a generator needs a length"),
            (None, Some(g)) => {
                let spec = crate::generate::GeneratorSpec::new(g.clone(), 0, self.universe, 0);
                spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            _ => Ok(()),
        }
    }
}
