//! Private L2 heavy hitters over a sliding window.
//!
//! A smooth histogram of AMS norm estimators picks the suffix that
//! sandwiches the window. Each timestamp also runs a CountSketch; items it
//! reports get a window counter, and a query releases the counters of the
//! selected timestamp through a noisy threshold.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{CounterPool, HeavyHitterReport, PreRelease, PrivacyConfig, SpaceStats};
use crate::dp::LaplaceSampler;
use crate::error::{check_item, param, Error, Result};
use crate::hash::derive_seed;
use crate::sketch::{
    sort_report, AmsFamily, AmsShape, AmsSketch, CountSketch, CsEstimator, CsFamily, CsShape, CsTouch,
};
use crate::window::{InstanceFactory, SmoothHistogram, SuffixEstimator};
use crate::Warning;

const SEED_AMS: u64 = 1;
const SEED_CS: u64 = 2;
const SEED_NOISE: u64 = 3;
const LARGE_SKETCH: u64 = 10_000_000;
// Derived shapes past this many counters per instance are refused outright;
// a single instance would not fit in memory.
const MAX_DERIVED_SKETCH: u64 = 1 << 27;

fn check_derived(
    name: &'static str,
    what: &'static str,
    rows: usize,
    cols: usize,
    warnings: &mut Vec<Warning>,
) -> Result<()> {
    let counters = (rows as u64).saturating_mul(cols as u64);
    if counters > MAX_DERIVED_SKETCH {
        return Err(param(name, "derived shape is too large; give an explicit shape or raise kappa"));
    }
    if counters > LARGE_SKETCH {
        warnings.push(Warning::LargeSketch { what, counters });
    }
    Ok(())
}

/// Which scale the norm noise `X` uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum L2NoiseRule {
    /// `X ~ Lap(L2 / (40 log m))`.
    #[default]
    Algorithm,
    /// `X ~ Lap(L2 / 40)`.
    Unscaled,
}

/// Tuning knobs beyond the privacy parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct L2Options {
    /// Shape of every AMS instance; derived from the norm accuracy if unset.
    pub ams_shape: Option<AmsShape>,
    /// Shape of every CountSketch; derived from the report threshold if
    /// unset.
    pub cs_shape: Option<CsShape>,
    pub cs_estimator: CsEstimator,
    pub noise_rule: L2NoiseRule,
    /// Start a timestamp every `batch` updates.
    pub batch: u64,
}

impl Default for L2Options {
    fn default() -> Self {
        Self {
            ams_shape: None,
            cs_shape: None,
            cs_estimator: CsEstimator::Median,
            noise_rule: L2NoiseRule::Algorithm,
            batch: 1,
        }
    }
}

/// Parameters derived from a [`PrivacyConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct L2Params {
    pub log_m: f64,
    /// Histogram gap `(kappa eps / (1000 log m))^2`.
    pub gap: f64,
    /// Norm accuracy `kappa eps / (500 log m)`.
    pub norm_accuracy: f64,
    /// CountSketch threshold `min(alpha/16, kappa alpha^3 eps / (500 log m))`.
    pub cs_threshold: f64,
    /// Counter budget per unit of norm, `kappa alpha^3 eps / (1000 log m)`.
    pub counter_coef: f64,
    /// Windows up to this length are answered from an exact buffer.
    pub fallback_capacity: u64,
    /// Sketch shapes; `None` when every window is served exactly.
    pub ams_shape: Option<AmsShape>,
    pub cs_shape: Option<CsShape>,
    pub warnings: Vec<Warning>,
}

impl L2Params {
    pub fn derive(cfg: &PrivacyConfig, opts: &L2Options) -> Result<Self> {
        cfg.validate()?;
        if opts.batch == 0 {
            return Err(param("batch", "must be at least 1"));
        }
        let log_m = cfg.log_m();
        let (a, e, k) = (cfg.alpha, cfg.epsilon, cfg.kappa);
        let a3 = a * a * a;
        let root = k * e / (1000.0 * log_m);
        let gap = root * root;
        let norm_accuracy = 2.0 * root;
        let cs_threshold = (a / 16.0).min(k * a3 * e / (500.0 * log_m));
        let counter_coef = k * a3 * e / (1000.0 * log_m);
        let cutoff = cfg.kappa_w * libm::pow(log_m, 5.0) / (a * a * e * e);
        let fallback_capacity =
            if cutoff >= cfg.stream_bound as f64 { cfg.stream_bound } else { cutoff as u64 };

        let mut warnings = Vec::new();
        let floor = k * 1000.0 * log_m / (a3 * libm::sqrt(cfg.window as f64));
        if cfg.epsilon <= floor {
            warnings.push(Warning::EpsilonBelowFloor { epsilon: cfg.epsilon, floor });
        }
        if k != 1.0 {
            warnings.push(Warning::RelaxedConstants { kappa: k });
        }

        let (ams_shape, cs_shape) = if fallback_capacity >= cfg.stream_bound {
            (None, None)
        } else {
            if !(gap > 0.0 && gap < 1.0) {
                return Err(param("kappa", "histogram gap must lie in (0, 1)"));
            }
            let m = cfg.stream_bound as f64;
            let fail = cfg.delta / (2.0 * m * m);
            let ams = match opts.ams_shape {
                Some(s) => s,
                None => {
                    if norm_accuracy >= 1.0 {
                        return Err(param(
                            "ams_shape",
                            "norm accuracy is at least 1; give an explicit AMS shape",
                        ));
                    }
                    let s = AmsShape::for_accuracy(norm_accuracy, fail)?;
                    check_derived("ams_shape", "AMS", s.rows, s.reps, &mut warnings)?;
                    s
                }
            };
            let cs = match opts.cs_shape {
                Some(s) => s,
                None => {
                    let s = CsShape::for_accuracy(cs_threshold, fail, cfg.universe)?;
                    check_derived("cs_shape", "CountSketch", s.rows, s.buckets, &mut warnings)?;
                    s
                }
            };
            (Some(ams), Some(cs))
        };
        Ok(Self {
            log_m,
            gap,
            norm_accuracy,
            cs_threshold,
            counter_coef,
            fallback_capacity,
            ams_shape,
            cs_shape,
            warnings,
        })
    }
}

/// Per-arrival data shared by every timestamp.
#[derive(Clone, Debug, Default)]
pub struct L2Arrival {
    item: u32,
    signs: Vec<i64>,
    touch: CsTouch,
}

/// The sketches started at one timestamp.
#[derive(Clone, Debug)]
pub struct L2Slot {
    ams: AmsSketch,
    cs: CountSketch,
    counters: CounterPool,
    coef: f64,
    l2: f64,
}

impl L2Slot {
    pub fn ams(&self) -> &AmsSketch {
        &self.ams
    }

    pub fn count_sketch(&self) -> &CountSketch {
        &self.cs
    }

    /// Items with a window counter, in item order.
    pub fn tracked(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.counters.iter().map(|c| c.item()).collect();
        v.sort_unstable();
        v
    }

    pub fn counter(&self, item: u32) -> Option<&crate::window::WindowCounter> {
        self.counters.get(item)
    }

    /// Budget currently applied to this timestamp's counters.
    pub fn budget(&self) -> f64 {
        self.coef * self.l2
    }
}

impl SuffixEstimator for L2Slot {
    type Update = L2Arrival;

    fn apply(&mut self, u: &L2Arrival, now: u64) {
        self.ams.apply_signs(&u.signs);
        self.l2 = self.ams.estimate_l2();
        self.cs.apply(&u.touch);
        let budget = self.coef * self.l2;
        let cs = &self.cs;
        let l2 = self.l2;
        self.counters.observe(u.item, now, budget, || {
            let est = cs.estimate_touch(&u.touch);
            est > 0.0 && est >= cs.report_cut(l2)
        });
    }

    fn estimate(&self) -> f64 {
        self.l2
    }
}

/// Builds [`L2Slot`]s sharing one AMS family and one CountSketch family.
#[derive(Clone, Debug)]
pub struct L2Factory {
    ams: Arc<AmsFamily>,
    cs: Arc<CsFamily>,
    coef: f64,
    arrival: L2Arrival,
}

impl InstanceFactory for L2Factory {
    type Instance = L2Slot;

    fn prepare(&mut self, item: u32, _now: u64) -> Result<()> {
        self.ams.signs_into(item, &mut self.arrival.signs)?;
        self.cs.touch_into(item, &mut self.arrival.touch)?;
        self.arrival.item = item;
        Ok(())
    }

    fn prepared(&self) -> &L2Arrival {
        &self.arrival
    }

    fn spawn(&mut self, _start: u64) -> L2Slot {
        L2Slot {
            ams: AmsSketch::from_family(self.ams.clone()),
            cs: CountSketch::from_family(self.cs.clone()),
            counters: CounterPool::new(),
            coef: self.coef,
            l2: 0.0,
        }
    }
}

/// One-shot private L2 heavy hitters.
#[derive(Clone, Debug)]
pub struct L2HeavyHitters {
    config: PrivacyConfig,
    options: L2Options,
    params: L2Params,
    hist: Option<SmoothHistogram<L2Factory>>,
    recent: VecDeque<u32>,
    now: u64,
    sampler: LaplaceSampler,
}

impl L2HeavyHitters {
    pub fn new(config: PrivacyConfig) -> Result<Self> {
        Self::with_options(config, L2Options::default())
    }

    pub fn with_options(config: PrivacyConfig, options: L2Options) -> Result<Self> {
        let params = L2Params::derive(&config, &options)?;
        let hist = match (params.ams_shape, params.cs_shape) {
            (Some(ams), Some(cs)) => {
                let ams = AmsFamily::new(ams, config.universe, derive_seed(config.seed, SEED_AMS, 0))?;
                let cs = CsFamily::new(
                    cs,
                    params.cs_threshold,
                    config.universe,
                    derive_seed(config.seed, SEED_CS, 0),
                    options.cs_estimator,
                )?;
                let factory = L2Factory {
                    ams: Arc::new(ams),
                    cs: Arc::new(cs),
                    coef: params.counter_coef,
                    arrival: L2Arrival::default(),
                };
                Some(SmoothHistogram::new(params.gap, factory)?.with_batch(options.batch)?)
            }
            _ => None,
        };
        let sampler = LaplaceSampler::new(derive_seed(config.seed, SEED_NOISE, 0));
        Ok(Self { config, options, params, hist, recent: VecDeque::new(), now: 0, sampler })
    }

    pub fn config(&self) -> &PrivacyConfig {
        &self.config
    }

    /// Turns release noise on or off without touching the sketch state.
    pub fn set_noise(&mut self, noise: bool) {
        self.config.noise = noise;
    }

    pub fn options(&self) -> &L2Options {
        &self.options
    }

    pub fn params(&self) -> &L2Params {
        &self.params
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.params.warnings
    }

    pub fn processed(&self) -> u64 {
        self.now
    }

    pub fn histogram(&self) -> Option<&SmoothHistogram<L2Factory>> {
        self.hist.as_ref()
    }

    pub fn update(&mut self, item: u32) -> Result<()> {
        check_item(item, self.config.universe)?;
        if self.now >= self.config.stream_bound {
            return Err(param("stream", "longer than the configured length bound"));
        }
        if let Some(h) = &mut self.hist {
            h.update(item)?;
        }
        self.now += 1;
        let cap = self.params.fallback_capacity;
        if cap > 0 {
            if self.recent.len() as u64 == cap {
                self.recent.pop_front();
            }
            self.recent.push_back(item);
        }
        Ok(())
    }

    fn check_window(&self, window: u64) -> Result<()> {
        if self.now == 0 {
            return Err(Error::Empty);
        }
        if window == 0 || window > self.now {
            return Err(Error::InvalidWindow { window, processed: self.now });
        }
        Ok(())
    }

    /// The values a query over the last `window` updates would release,
    /// before noise.
    pub fn pre_release(&self, window: u64) -> Result<PreRelease> {
        self.check_window(window)?;
        if window <= self.params.fallback_capacity {
            let skip = self.recent.len() - window as usize;
            let freqs = crate::oracle::counts(&self.recent.iter().skip(skip).copied().collect::<Vec<_>>());
            let norm = crate::oracle::exact_lp(&freqs, 2);
            let candidates = freqs.into_iter().map(|(i, c)| (i, c as f64)).collect();
            return Ok(PreRelease { window, norm, candidates, exact: true, index: None });
        }
        let hist = self.hist.as_ref().ok_or(Error::Empty)?;
        let sel = hist.query(window)?;
        let slot = hist.instance(sel.index);
        let cut = slot.cs.report_cut(sel.estimate);
        let family = slot.cs.family().clone();
        let mut touch = CsTouch::default();
        let mut candidates = Vec::new();
        for item in slot.tracked() {
            family.touch_into(item, &mut touch)?;
            let est = slot.cs.estimate_touch(&touch);
            if est > 0.0 && est >= cut {
                let c = slot.counters.get(item).expect("tracked item has a counter");
                candidates.push((item, c.query_at(self.now, window) as f64));
            }
        }
        Ok(PreRelease { window, norm: sel.estimate, candidates, exact: false, index: Some(sel.index) })
    }

    /// Noisy threshold release of pre-noise values.
    pub fn release(&self, pre: &PreRelease, sampler: &mut LaplaceSampler) -> HeavyHitterReport {
        let a = self.config.alpha;
        let log_m = self.params.log_m;
        let norm = pre.norm;
        let noise = self.config.noise;
        let mut draw = |scale: f64| if noise { sampler.draw(scale) } else { 0.0 };
        let x_scale = match self.options.noise_rule {
            L2NoiseRule::Algorithm => norm / (40.0 * log_m),
            L2NoiseRule::Unscaled => norm / 40.0,
        };
        let yz_scale = a * norm / (75.0 * log_m);
        let x = draw(x_scale);
        let mut entries = Vec::new();
        for &(item, f) in &pre.candidates {
            let y = draw(yz_scale);
            let z = draw(yz_scale);
            let noisy = f + z;
            if noisy >= 0.75 * a * (norm + x) + y {
                entries.push((item, noisy));
            }
        }
        sort_report(&mut entries);
        HeavyHitterReport { entries, window: pre.window, released_norm: Some(norm + x) }
    }

    /// Query with an external sampler.
    pub fn query_with(&self, window: u64, sampler: &mut LaplaceSampler) -> Result<HeavyHitterReport> {
        let pre = self.pre_release(window)?;
        Ok(self.release(&pre, sampler))
    }

    /// Query using the sampler seeded from the configuration.
    pub fn query(&mut self, window: u64) -> Result<HeavyHitterReport> {
        let pre = self.pre_release(window)?;
        let mut sampler = core::mem::replace(&mut self.sampler, LaplaceSampler::new(0));
        let report = self.release(&pre, &mut sampler);
        self.sampler = sampler;
        Ok(report)
    }

    pub fn space(&self) -> SpaceStats {
        let mut s = SpaceStats::default();
        if let Some(h) = &self.hist {
            s.instances = h.len();
            for (_, slot) in h.instances() {
                for c in slot.counters.iter() {
                    s.counters += 1;
                    s.counter_timestamps += c.len();
                    s.max_counter_timestamps = s.max_counter_timestamps.max(c.len());
                }
            }
        }
        s
    }
}
