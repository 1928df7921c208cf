//! Run drivers: one-shot, continual, oracle and multi-trial experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::Instant;

use dphh_core::continual::{ContinualConfig, ContinualNoiseRule, ContinualRelease};
use dphh_core::hash::derive_seed;
use dphh_core::hh::{
    HeavyHitterReport, L1HeavyHitters, L1NoiseRule, L1Options, L2HeavyHitters, L2NoiseRule, L2Options,
    PrivacyConfig, SpaceStats,
};
use dphh_core::oracle::{exact_heavy_hitters, exact_lp, exact_window_freqs, Frequencies};
use dphh_core::sketch::{AmsShape, CsEstimator, CsShape};

use crate::config::{ContinualNoise, Estimator, L1Noise, L2Noise, Mode, RunConfig};
use crate::generate::GeneratorSpec;
use crate::output::{
    Classification, ContinualLine, Entry, ExactEntry, ExperimentDocument, OneshotDocument, OracleDocument,
    Quantiles, TrialMetrics,
};
use crate::stream::{read_stream, InputError};
use crate::HarnessError;

// Sub-streams of the master seed.
const SEED_ALGORITHM: u64 = 0x616c;
const SEED_GENERATOR: u64 = 0x6765;

/// Seeds of trial `i`: `(algorithm, generator)`. A single run is trial 0
/// with the master seed used directly for the algorithm.
pub fn trial_seeds(master: u64, trial: u32, experiment: bool) -> (u64, u64) {
    let algorithm = if experiment { derive_seed(master, SEED_ALGORITHM, trial as u64) } else { master };
    (algorithm, derive_seed(master, SEED_GENERATOR, trial as u64))
}

/// Reads or generates the stream of one trial and checks it against the
/// length bound and window.
pub fn load_stream(cfg: &RunConfig, generator_seed: u64) -> Result<Vec<u32>, HarnessError> {
    let stream = match (&cfg.generator, cfg.input.as_deref()) {
        (Some(kind), _) => {
            let length =
                cfg.length.ok_or_else(|| HarnessError::Config("a generator needs a length".into()))?;
            GeneratorSpec::new(kind.clone(), length as usize, cfg.universe, generator_seed)
                .generate()
                .map_err(|e| HarnessError::Config(e.to_string()))?
        }
        (None, Some("-")) => read_stream(io::stdin().lock(), cfg.format, cfg.universe)?,
        (None, Some(path)) => {
            let file = File::open(path).map_err(InputError::Io)?;
            read_stream(io::BufReader::new(file), cfg.format, cfg.universe)?
        }
        (None, None) => return Err(HarnessError::Config("no stream: give input or generator".into())),
    };
    if let Some(bound) = cfg.length {
        if stream.len() as u64 > bound {
            return Err(InputError::TooLong { found: stream.len(), bound }.into());
        }
    }
    Ok(stream)
}

fn stream_bound(cfg: &RunConfig, stream: &[u32]) -> Result<u64, HarnessError> {
    let m = cfg.length.unwrap_or(stream.len() as u64);
    if stream.is_empty() {
        return Err(InputError::Empty.into());
    }
    if cfg.mode != Mode::Continual && cfg.window > m {
        return Err(HarnessError::Config(format!("window {} exceeds the stream length {m}", cfg.window)));
    }
    Ok(m)
}

pub fn privacy_config(cfg: &RunConfig, stream_bound: u64, seed: u64) -> PrivacyConfig {
    PrivacyConfig {
        alpha: cfg.alpha,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        window: cfg.window,
        universe: cfg.universe,
        stream_bound,
        kappa: cfg.kappa,
        kappa_w: cfg.kappa_w,
        noise: cfg.noise,
        seed,
    }
}

pub fn l2_options(cfg: &RunConfig) -> Result<L2Options, HarnessError> {
    let shape_err = |e: dphh_core::Error| HarnessError::Config(e.to_string());
    let ams_shape = match (cfg.ams_rows, cfg.ams_reps) {
        (Some(r), Some(k)) => Some(AmsShape::new(r, k).map_err(shape_err)?),
        _ => None,
    };
    let cs_shape = match (cfg.cs_rows, cfg.cs_buckets) {
        (Some(r), Some(b)) => Some(CsShape::new(r, b).map_err(shape_err)?),
        _ => None,
    };
    Ok(L2Options {
        ams_shape,
        cs_shape,
        cs_estimator: match cfg.estimator {
            Estimator::Median => CsEstimator::Median,
            Estimator::MeanAbs => CsEstimator::MeanAbs,
        },
        noise_rule: match cfg.l2_noise {
            L2Noise::Algorithm => L2NoiseRule::Algorithm,
            L2Noise::Unscaled => L2NoiseRule::Unscaled,
        },
        batch: cfg.batch,
    })
}

pub fn l1_options(cfg: &RunConfig) -> L1Options {
    L1Options {
        noise_rule: match cfg.l1_noise {
            L1Noise::Sensitivity => L1NoiseRule::Sensitivity,
            L1Noise::Algorithm => L1NoiseRule::Algorithm,
        },
    }
}

pub fn continual_config(cfg: &RunConfig, seed: u64) -> ContinualConfig {
    ContinualConfig {
        alpha: cfg.alpha,
        epsilon: cfg.epsilon,
        window: cfg.window,
        universe: cfg.universe,
        noise: cfg.noise,
        seed,
        noise_rule: match cfg.continual_noise {
            ContinualNoise::Derived => ContinualNoiseRule::Derived,
            ContinualNoise::Algorithm => ContinualNoiseRule::Algorithm,
            ContinualNoise::SqrtAlphaW => ContinualNoiseRule::SqrtAlphaW,
        },
    }
}

/// Outcome of feeding one stream through a one-shot algorithm.
pub struct Oneshot {
    pub report: HeavyHitterReport,
    pub space: SpaceStats,
    pub warnings: Vec<String>,
}

/// Feeds the stream once and queries at the final position.
pub fn oneshot(cfg: &RunConfig, stream: &[u32], seed: u64) -> Result<Oneshot, HarnessError> {
    let m = stream_bound(cfg, stream)?;
    let pc = privacy_config(cfg, m, seed);
    match cfg.mode {
        Mode::OneshotL2 => {
            let mut hh = L2HeavyHitters::with_options(pc, l2_options(cfg)?)
                .map_err(HarnessError::algo("setting up L2"))?;
            for &x in stream {
                hh.update(x).map_err(HarnessError::algo("L2 update"))?;
            }
            let report = hh.query(cfg.window).map_err(HarnessError::algo("L2 query"))?;
            let warnings = hh.warnings().iter().map(|w| w.to_string()).collect();
            Ok(Oneshot { report, space: hh.space(), warnings })
        }
        Mode::OneshotL1 => {
            let mut hh = L1HeavyHitters::with_options(pc, l1_options(cfg))
                .map_err(HarnessError::algo("setting up L1"))?;
            for &x in stream {
                hh.update(x).map_err(HarnessError::algo("L1 update"))?;
            }
            let report = hh.query(cfg.window).map_err(HarnessError::algo("L1 query"))?;
            Ok(Oneshot { report, space: hh.space(), warnings: Vec::new() })
        }
        _ => Err(HarnessError::Config("one-shot runs need mode oneshot-l2 or oneshot-l1".into())),
    }
}

fn elapsed_ms(start: Instant, cfg: &RunConfig) -> Option<f64> {
    cfg.emit_timing.then(|| start.elapsed().as_secs_f64() * 1e3)
}

pub fn run_oneshot(cfg: &RunConfig) -> Result<OneshotDocument, HarnessError> {
    cfg.validate()?;
    let (seed, gen_seed) = trial_seeds(cfg.seed, 0, false);
    let stream = load_stream(cfg, gen_seed)?;
    let start = Instant::now();
    let out = oneshot(cfg, &stream, seed)?;
    Ok(OneshotDocument {
        config: cfg.clone(),
        processed: stream.len() as u64,
        window: cfg.window,
        entries: Entry::from_pairs(&out.report.entries),
        released_norm: out.report.released_norm,
        space: out.space.into(),
        warnings: out.warnings,
        wall_time_ms: elapsed_ms(start, cfg),
    })
}

/// Writes one JSON line per update. The first line also embeds the config.
pub fn run_continual<W: Write>(cfg: &RunConfig, out: W) -> Result<u64, HarnessError> {
    cfg.validate()?;
    let (seed, gen_seed) = trial_seeds(cfg.seed, 0, false);
    let stream = load_stream(cfg, gen_seed)?;
    stream_bound(cfg, &stream)?;
    let mut release = ContinualRelease::new(continual_config(cfg, seed))
        .map_err(HarnessError::algo("setting up continual release"))?;
    let mut out = BufWriter::new(out);
    for (i, &x) in stream.iter().enumerate() {
        let report = release.update(x).map_err(HarnessError::algo("continual update"))?;
        let line = ContinualLine {
            t: i as u64 + 1,
            entries: Entry::from_pairs(&report.entries),
            config: (i == 0).then_some(cfg),
        };
        serde_json::to_writer(&mut out, &line).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(stream.len() as u64)
}

fn exact_entries(freqs: &Frequencies, keep: impl Fn(u64) -> bool) -> Vec<ExactEntry> {
    let mut v: Vec<ExactEntry> =
        freqs.iter().filter(|&(_, &f)| keep(f)).map(|(&item, &freq)| ExactEntry { item, freq }).collect();
    v.sort_by(|a, b| b.freq.cmp(&a.freq).then(a.item.cmp(&b.item)));
    v
}

fn classify(freqs: &Frequencies, alpha: f64, p: u32) -> Classification {
    let c = exact_heavy_hitters(freqs, alpha, p);
    Classification {
        norm: c.norm,
        must_report: exact_entries(freqs, |f| f as f64 >= c.high),
        gray_zone: exact_entries(freqs, |f| (f as f64) < c.high && f as f64 > c.low),
    }
}

pub fn run_oracle(cfg: &RunConfig) -> Result<OracleDocument, HarnessError> {
    cfg.validate()?;
    let (_, gen_seed) = trial_seeds(cfg.seed, 0, false);
    let stream = load_stream(cfg, gen_seed)?;
    stream_bound(cfg, &stream)?;
    let freqs =
        exact_window_freqs(&stream, stream.len(), cfg.window).map_err(HarnessError::algo("oracle"))?;
    Ok(OracleDocument {
        config: cfg.clone(),
        processed: stream.len() as u64,
        window: cfg.window,
        distinct: freqs.len(),
        l1: exact_lp(&freqs, 1),
        l2: exact_lp(&freqs, 2),
        l2_heavy: classify(&freqs, cfg.alpha, 2),
        l1_heavy: classify(&freqs, cfg.alpha, 1),
    })
}

/// Scores one report against the exact window. Errors are divided by the
/// oracle L2 norm (L2 mode) or by the window length (L1 mode).
pub fn score(cfg: &RunConfig, report: &HeavyHitterReport, freqs: &Frequencies) -> TrialMetrics {
    let p = if cfg.mode == Mode::OneshotL1 { 1 } else { 2 };
    let classes = exact_heavy_hitters(freqs, cfg.alpha, p);
    let normalizer = if p == 1 { cfg.window as f64 } else { classes.norm.max(f64::MIN_POSITIVE) };
    let mut violations = 0;
    let mut max_error: f64 = 0.0;
    let mut total_error = 0.0;
    for &(item, est) in &report.entries {
        let f = freqs.get(&item).copied().unwrap_or(0);
        if classes.forbids(f) {
            violations += 1;
        }
        let e = (est - f as f64).abs() / normalizer;
        max_error = max_error.max(e);
        total_error += e;
    }
    let missed = classes.must_report.iter().filter(|&&i| report.get(i).is_none()).count();
    let reported = report.entries.len();
    let failed = missed > 0 || violations > 0 || max_error > cfg.alpha / 4.0;
    TrialMetrics {
        trial: 0,
        seed: 0,
        reported,
        must_report: classes.must_report.len(),
        missed,
        violations,
        max_error,
        mean_error: if reported == 0 { 0.0 } else { total_error / reported as f64 },
        instances: 0,
        failed,
    }
}

pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentDocument, HarnessError> {
    cfg.validate()?;
    if !matches!(cfg.mode, Mode::OneshotL2 | Mode::OneshotL1) {
        return Err(HarnessError::Config("experiments need mode oneshot-l2 or oneshot-l1".into()));
    }
    let start = Instant::now();
    // A file is read once and shared by all trials.
    let shared = if cfg.generator.is_none() { Some(load_stream(cfg, 0)?) } else { None };
    let mut per_trial = Vec::with_capacity(cfg.trials as usize);
    let mut m = 0;
    for trial in 0..cfg.trials {
        let (seed, gen_seed) = trial_seeds(cfg.seed, trial, true);
        let generated;
        let stream = match &shared {
            Some(s) => s,
            None => {
                generated = load_stream(cfg, gen_seed)?;
                &generated
            }
        };
        m = stream_bound(cfg, stream)?;
        let out = oneshot(cfg, stream, seed)?;
        let freqs =
            exact_window_freqs(stream, stream.len(), cfg.window).map_err(HarnessError::algo("oracle"))?;
        let mut t = score(cfg, &out.report, &freqs);
        t.trial = trial;
        t.seed = seed;
        t.instances = out.space.instances;
        per_trial.push(t);
    }
    let sum = |f: fn(&TrialMetrics) -> usize| per_trial.iter().map(f).sum::<usize>();
    let (reported, violations) = (sum(|t| t.reported), sum(|t| t.violations));
    let (must, missed) = (sum(|t| t.must_report), sum(|t| t.missed));
    let failures = per_trial.iter().filter(|t| t.failed).count() as u32;
    let instances: Vec<f64> = per_trial.iter().map(|t| t.instances as f64).collect();
    let total_reported_error: f64 = per_trial.iter().map(|t| t.mean_error * t.reported as f64).sum();
    Ok(ExperimentDocument {
        config: cfg.clone(),
        trials: cfg.trials,
        precision: if reported == 0 { 1.0 } else { (reported - violations) as f64 / reported as f64 },
        recall: if must == 0 { 1.0 } else { (must - missed) as f64 / must as f64 },
        error_normalizer: if cfg.mode == Mode::OneshotL1 { "window" } else { "l2" },
        max_error: per_trial.iter().map(|t| t.max_error).fold(0.0, f64::max),
        mean_error: if reported == 0 { 0.0 } else { total_reported_error / reported as f64 },
        failures,
        failure_rate: failures as f64 / cfg.trials as f64,
        failure_target: (m as f64).powf(-cfg.failure_exponent),
        instances: Quantiles::of(&instances),
        per_trial,
        wall_time_ms: elapsed_ms(start, cfg),
    })
}

/// Serializes a document followed by a newline.
pub fn write_document<T: serde::Serialize, W: Write>(doc: &T, mut out: W) -> Result<(), HarnessError> {
    serde_json::to_writer(&mut out, doc).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
