//! Pure-DP L1 heavy hitters over a sliding window.
//!
//! Timestamps are kept deterministically so that consecutive suffix lengths
//! two apart differ by more than 1%. Each timestamp runs Misra-Gries; items
//! it reports get a window counter with budget `alpha/32` times the suffix
//! length.

use alloc::vec::Vec;

use super::{CounterPool, HeavyHitterReport, PreRelease, PrivacyConfig, SpaceStats};
use crate::dp::LaplaceSampler;
use crate::error::{check_item, param, Error, Result};
use crate::hash::derive_seed;
use crate::sketch::{sort_report, MisraGries};
use crate::window::{InstanceFactory, LengthRatioRule, SmoothHistogram, SuffixEstimator};

const SEED_NOISE: u64 = 4;

/// Which Laplace scale the released frequencies use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum L1NoiseRule {
    /// `Lap(2 / eps)`: a neighbouring stream moves each counter by at most 2.
    #[default]
    Sensitivity,
    /// `Lap(1 / (eps alpha log m))`.
    Algorithm,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct L1Options {
    pub noise_rule: L1NoiseRule,
}

/// Parameters derived from a [`PrivacyConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct L1Params {
    pub log_m: f64,
    /// Misra-Gries threshold `alpha / 16`.
    pub mg_threshold: f64,
    /// Counter budget per unit of suffix length, `alpha / 32`.
    pub counter_coef: f64,
    pub noise_scale: f64,
}

impl L1Params {
    pub fn derive(cfg: &PrivacyConfig, opts: &L1Options) -> Result<Self> {
        cfg.validate()?;
        let log_m = cfg.log_m();
        let noise_scale = match opts.noise_rule {
            L1NoiseRule::Sensitivity => 2.0 / cfg.epsilon,
            L1NoiseRule::Algorithm => 1.0 / (cfg.epsilon * cfg.alpha * log_m),
        };
        Ok(Self { log_m, mg_threshold: cfg.alpha / 16.0, counter_coef: cfg.alpha / 32.0, noise_scale })
    }
}

/// Misra-Gries and counters started at one timestamp.
#[derive(Clone, Debug)]
pub struct L1Slot {
    len: u64,
    mg: MisraGries,
    counters: CounterPool,
    coef: f64,
}

impl L1Slot {
    pub fn misra_gries(&self) -> &MisraGries {
        &self.mg
    }

    pub fn suffix_len(&self) -> u64 {
        self.len
    }

    pub fn tracked(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.counters.iter().map(|c| c.item()).collect();
        v.sort_unstable();
        v
    }

    pub fn counter(&self, item: u32) -> Option<&crate::window::WindowCounter> {
        self.counters.get(item)
    }

    fn reports(&self, item: u32) -> bool {
        let est = self.mg.estimate(item);
        est > 0 && est as f64 >= self.mg.report_cut(self.len as f64)
    }
}

impl SuffixEstimator for L1Slot {
    type Update = u32;

    fn apply(&mut self, &item: &u32, now: u64) {
        self.len += 1;
        let est = self.mg.update(item).expect("item validated by the factory");
        let budget = self.coef * self.len as f64;
        let cut = self.mg.report_cut(self.len as f64);
        self.counters.observe(item, now, budget, || est > 0 && est as f64 >= cut);
    }

    fn estimate(&self) -> f64 {
        self.len as f64
    }
}

#[derive(Clone, Debug)]
pub struct L1Factory {
    universe: u32,
    mg_threshold: f64,
    coef: f64,
    item: u32,
}

impl InstanceFactory for L1Factory {
    type Instance = L1Slot;

    fn prepare(&mut self, item: u32, _now: u64) -> Result<()> {
        check_item(item, self.universe)?;
        self.item = item;
        Ok(())
    }

    fn prepared(&self) -> &u32 {
        &self.item
    }

    fn spawn(&mut self, _start: u64) -> L1Slot {
        L1Slot {
            len: 0,
            mg: MisraGries::new(self.mg_threshold, self.universe).expect("threshold in (0, 1)"),
            counters: CounterPool::new(),
            coef: self.coef,
        }
    }
}

/// One-shot pure-DP L1 heavy hitters. Everything except the final noise is
/// deterministic.
#[derive(Clone, Debug)]
pub struct L1HeavyHitters {
    config: PrivacyConfig,
    params: L1Params,
    hist: SmoothHistogram<L1Factory, LengthRatioRule>,
    sampler: LaplaceSampler,
}

impl L1HeavyHitters {
    pub fn new(config: PrivacyConfig) -> Result<Self> {
        Self::with_options(config, L1Options::default())
    }

    pub fn with_options(config: PrivacyConfig, options: L1Options) -> Result<Self> {
        let params = L1Params::derive(&config, &options)?;
        let factory = L1Factory {
            universe: config.universe,
            mg_threshold: params.mg_threshold,
            coef: params.counter_coef,
            item: 0,
        };
        let hist = SmoothHistogram::with_rule(LengthRatioRule::default(), factory);
        let sampler = LaplaceSampler::new(derive_seed(config.seed, SEED_NOISE, 0));
        Ok(Self { config, params, hist, sampler })
    }

    pub fn config(&self) -> &PrivacyConfig {
        &self.config
    }

    /// Turns release noise on or off without touching the sketch state.
    pub fn set_noise(&mut self, noise: bool) {
        self.config.noise = noise;
    }

    pub fn params(&self) -> &L1Params {
        &self.params
    }

    pub fn processed(&self) -> u64 {
        self.hist.now()
    }

    pub fn histogram(&self) -> &SmoothHistogram<L1Factory, LengthRatioRule> {
        &self.hist
    }

    pub fn update(&mut self, item: u32) -> Result<()> {
        if self.hist.now() >= self.config.stream_bound {
            return Err(param("stream", "longer than the configured length bound"));
        }
        self.hist.update(item)
    }

    pub fn pre_release(&self, window: u64) -> Result<PreRelease> {
        let now = self.hist.now();
        if now == 0 {
            return Err(Error::Empty);
        }
        let sel = self.hist.query(window)?;
        let slot = self.hist.instance(sel.index);
        let candidates = slot
            .tracked()
            .into_iter()
            .filter(|&i| slot.reports(i))
            .map(|i| {
                let c = slot.counters.get(i).expect("tracked item has a counter");
                (i, c.query_at(now, window) as f64)
            })
            .collect();
        Ok(PreRelease { window, norm: window as f64, candidates, exact: false, index: Some(sel.index) })
    }

    pub fn release(&self, pre: &PreRelease, sampler: &mut LaplaceSampler) -> HeavyHitterReport {
        let cut = 0.75 * self.config.alpha * pre.window as f64;
        let mut entries = Vec::new();
        for &(item, f) in &pre.candidates {
            let z = if self.config.noise { sampler.draw(self.params.noise_scale) } else { 0.0 };
            if f + z >= cut {
                entries.push((item, f + z));
            }
        }
        sort_report(&mut entries);
        HeavyHitterReport { entries, window: pre.window, released_norm: None }
    }

    pub fn query_with(&self, window: u64, sampler: &mut LaplaceSampler) -> Result<HeavyHitterReport> {
        let pre = self.pre_release(window)?;
        Ok(self.release(&pre, sampler))
    }

    pub fn query(&mut self, window: u64) -> Result<HeavyHitterReport> {
        let pre = self.pre_release(window)?;
        let mut sampler = core::mem::replace(&mut self.sampler, LaplaceSampler::new(0));
        let report = self.release(&pre, &mut sampler);
        self.sampler = sampler;
        Ok(report)
    }

    pub fn space(&self) -> SpaceStats {
        let mut s = SpaceStats { instances: self.hist.len(), ..SpaceStats::default() };
        for (_, slot) in self.hist.instances() {
            for c in slot.counters.iter() {
                s.counters += 1;
                s.counter_timestamps += c.len();
                s.max_counter_timestamps = s.max_counter_timestamps.max(c.len());
            }
        }
        s
    }
}
