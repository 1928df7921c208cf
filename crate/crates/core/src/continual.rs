//! Continual release of window heavy hitters with a binary-tree mechanism.
//!
//! Level `l` cuts the stream into blocks of `S_l = S_1 2^(l-1)` updates and
//! summarizes each with Misra-Gries. A sealed block releases a noisy
//! frequency for every item once. After each update the window is covered
//! by at most two sealed blocks per level plus, when `S_1 > 1`, the current
//! partial level-1 block, and the noisy counts of the pieces are summed.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::dp::LaplaceSampler;
use crate::error::{check_item, check_positive, check_unit_open, param, Result};
use crate::hash::derive_seed;
use crate::hh::HeavyHitterReport;
use crate::math::{ceil_u64, log2_at_least_one};
use crate::sketch::{sort_report, MisraGries};

const SEED_NOISE: u64 = 5;

/// Laplace scale for released block summaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ContinualNoiseRule {
    /// `2 log W * sensitivity / eps`, with per-block sensitivity
    /// `phi alpha sqrt(W) / (16 log^3 W)`.
    #[default]
    Derived,
    /// `alpha sqrt(W) / (16 log^2 W)`.
    Algorithm,
    /// `sqrt(alpha W) / (8 log^2 W)`.
    SqrtAlphaW,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinualConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub window: u64,
    pub universe: u32,
    pub noise: bool,
    pub seed: u64,
    pub noise_rule: ContinualNoiseRule,
}

/// Parameters derived from a [`ContinualConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct ContinualParams {
    /// `log2 W`, floored at 1.
    pub log_w: f64,
    /// `ceil(log2(100 eps sqrt(W) / alpha) + log2 log2 W) + 2`.
    pub nominal_levels: u32,
    /// Levels actually used: capped so the longest block fits in the window.
    pub levels: u32,
    /// Level-1 block length `max(1, round(alpha sqrt(W) / (200 log W)))`.
    pub base_block: u64,
    /// `min(eps, 1)`.
    pub phi: f64,
    pub noise_scale: f64,
    /// Report items whose estimate reaches `alpha sqrt(W) / 2`.
    pub report_threshold: f64,
}

impl ContinualParams {
    pub fn derive(cfg: &ContinualConfig) -> Result<Self> {
        check_unit_open("alpha", cfg.alpha)?;
        check_positive("epsilon", cfg.epsilon)?;
        if cfg.window == 0 {
            return Err(param("window", "must be at least 1"));
        }
        if cfg.universe == 0 {
            return Err(param("universe", "must be at least 1"));
        }
        let w = cfg.window as f64;
        let root_w = libm::sqrt(w);
        let log_w = log2_at_least_one(w);
        let nominal = ceil_u64(libm::log2(100.0 * cfg.epsilon * root_w / cfg.alpha) + libm::log2(log_w)) + 2;
        let nominal_levels = nominal.clamp(1, 63) as u32;
        let base_block = (libm::round(cfg.alpha * root_w / (200.0 * log_w)) as u64).max(1);
        let mut fit = 0u32;
        while fit < 63 && base_block.checked_shl(fit).is_some_and(|s| s <= cfg.window) {
            fit += 1;
        }
        let levels = nominal_levels.min(fit).max(1);
        let phi = cfg.epsilon.min(1.0);
        let sensitivity = phi * cfg.alpha * root_w / (16.0 * log_w * log_w * log_w);
        let noise_scale = match cfg.noise_rule {
            ContinualNoiseRule::Derived => 2.0 * log_w * sensitivity / cfg.epsilon,
            ContinualNoiseRule::Algorithm => cfg.alpha * root_w / (16.0 * log_w * log_w),
            ContinualNoiseRule::SqrtAlphaW => libm::sqrt(cfg.alpha * w) / (8.0 * log_w * log_w),
        };
        Ok(Self {
            log_w,
            nominal_levels,
            levels,
            base_block,
            phi,
            noise_scale,
            report_threshold: cfg.alpha * root_w / 2.0,
        })
    }

    /// Block length at zero-based level `level`.
    pub fn block_len(&self, level: usize) -> u64 {
        self.base_block << level
    }

    /// Misra-Gries threshold at zero-based level `level`:
    /// `phi alpha sqrt(W) / (16 S_l log^3 W)`.
    pub fn mg_threshold(&self, cfg: &ContinualConfig, level: usize) -> f64 {
        let l = self.log_w;
        self.phi * cfg.alpha * libm::sqrt(cfg.window as f64)
            / (16.0 * self.block_len(level) as f64 * l * l * l)
    }
}

#[derive(Clone, Debug)]
struct Sealed {
    start: u64,
    estimates: Vec<(u32, u64)>,
    released: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Level {
    len: u64,
    capacity: usize,
    active_start: u64,
    active: MisraGries,
    sealed: VecDeque<Sealed>,
}

/// One block of a window cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoverPiece {
    /// Zero-based level.
    pub level: usize,
    pub start: u64,
    /// Last position covered (for the partial block, the current time).
    pub end: u64,
    pub sealed: bool,
}

/// Continual-release state.
#[derive(Clone, Debug)]
pub struct ContinualRelease {
    config: ContinualConfig,
    params: ContinualParams,
    levels: Vec<Level>,
    now: u64,
    sampler: LaplaceSampler,
    acc: Vec<f64>,
}

impl ContinualRelease {
    pub fn new(config: ContinualConfig) -> Result<Self> {
        let params = ContinualParams::derive(&config)?;
        let mut levels = Vec::with_capacity(params.levels as usize);
        for l in 0..params.levels as usize {
            let len = params.block_len(l);
            // A block never holds more than `len` distinct items, so a larger
            // capacity would change nothing.
            let k = ceil_u64(1.0 / params.mg_threshold(&config, l)).clamp(1, len);
            let capacity = usize::try_from(k).unwrap_or(usize::MAX);
            levels.push(Level {
                len,
                capacity,
                active_start: 1,
                active: MisraGries::with_capacity(capacity, config.universe)?,
                sealed: VecDeque::new(),
            });
        }
        let sampler = LaplaceSampler::new(derive_seed(config.seed, SEED_NOISE, 0));
        let acc = vec![0.0; config.universe as usize];
        Ok(Self { config, params, levels, now: 0, sampler, acc })
    }

    pub fn config(&self) -> &ContinualConfig {
        &self.config
    }

    pub fn params(&self) -> &ContinualParams {
        &self.params
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Misra-Gries capacity at each level.
    pub fn capacities(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.capacity).collect()
    }

    /// Number of sealed blocks currently retained.
    pub fn sealed_blocks(&self) -> usize {
        self.levels.iter().map(|l| l.sealed.len()).sum()
    }

    /// Released noisy map of a retained sealed block.
    pub fn sealed_release(&self, level: usize, start: u64) -> Option<&[f64]> {
        self.find_sealed(level, start).map(|s| s.released.as_slice())
    }

    fn find_sealed(&self, level: usize, start: u64) -> Option<&Sealed> {
        let lv = self.levels.get(level)?;
        let first = lv.sealed.front()?.start;
        if start < first || (start - first) % lv.len != 0 {
            return None;
        }
        lv.sealed.get(((start - first) / lv.len) as usize).filter(|s| s.start == start)
    }

    /// Processes one update and returns the report for the current window.
    pub fn update(&mut self, item: u32) -> Result<HeavyHitterReport> {
        check_item(item, self.config.universe)?;
        self.now += 1;
        let now = self.now;
        let n = self.config.universe as usize;
        let window = self.config.window;
        for lv in &mut self.levels {
            lv.active.update(item)?;
            if now % lv.len == 0 {
                let estimates = lv.active.counters();
                let mut released = vec![0.0; n];
                if self.config.noise {
                    for r in released.iter_mut() {
                        *r = self.sampler.draw(self.params.noise_scale);
                    }
                }
                for &(i, c) in &estimates {
                    released[i as usize - 1] += c as f64;
                }
                lv.sealed.push_back(Sealed { start: lv.active_start, estimates, released });
                lv.active = MisraGries::with_capacity(lv.capacity, self.config.universe)?;
                lv.active_start = now + 1;
            }
            let oldest_needed = (now + 1).saturating_sub(window);
            while lv.sealed.front().is_some_and(|s| s.start < oldest_needed) {
                lv.sealed.pop_front();
            }
        }
        Ok(self.release())
    }

    /// Start of the covered range: the first level-1 boundary at or after
    /// the window start.
    pub fn cover_start(&self) -> u64 {
        let w0 = (self.now + 1).saturating_sub(self.config.window).max(1);
        let s1 = self.params.base_block;
        (w0 - 1).div_ceil(s1) * s1 + 1
    }

    /// Greedy dyadic cover of `[cover_start, now]`: the largest aligned
    /// sealed block that fits, then the partial level-1 block for a tail
    /// shorter than `S_1`.
    pub fn cover(&self) -> Vec<CoverPiece> {
        let mut pieces = Vec::new();
        let now = self.now;
        let mut pos = self.cover_start();
        while pos <= now {
            let fit = (0..self.levels.len()).rev().find(|&l| {
                let len = self.levels[l].len;
                (pos - 1) % len == 0 && pos + len - 1 <= now
            });
            match fit {
                Some(l) => {
                    let end = pos + self.levels[l].len - 1;
                    pieces.push(CoverPiece { level: l, start: pos, end, sealed: true });
                    pos = end + 1;
                }
                None => {
                    debug_assert_eq!(self.levels[0].active_start, pos);
                    pieces.push(CoverPiece { level: 0, start: pos, end: now, sealed: false });
                    break;
                }
            }
        }
        pieces
    }

    /// Pre-noise estimate per item summed over the current cover.
    pub fn pre_noise(&self) -> Vec<(u32, u64)> {
        let mut total = alloc::collections::BTreeMap::new();
        for p in self.cover() {
            let est = if p.sealed {
                self.find_sealed(p.level, p.start).expect("cover uses retained blocks").estimates.clone()
            } else {
                self.levels[p.level].active.counters()
            };
            for (i, c) in est {
                *total.entry(i).or_insert(0u64) += c;
            }
        }
        total.into_iter().collect()
    }

    fn release(&mut self) -> HeavyHitterReport {
        let cover = self.cover();
        let mut acc = core::mem::take(&mut self.acc);
        acc.iter_mut().for_each(|x| *x = 0.0);
        for p in &cover {
            if p.sealed {
                let s = self.find_sealed(p.level, p.start).expect("cover uses retained blocks");
                for (a, r) in acc.iter_mut().zip(&s.released) {
                    *a += r;
                }
            } else {
                if self.config.noise {
                    for a in acc.iter_mut() {
                        *a += self.sampler.draw(self.params.noise_scale);
                    }
                }
                for (i, c) in self.levels[p.level].active.counters() {
                    acc[i as usize - 1] += c as f64;
                }
            }
        }
        let cut = self.params.report_threshold;
        let mut entries: Vec<(u32, f64)> =
            acc.iter().enumerate().filter(|&(_, &v)| v >= cut).map(|(i, &v)| (i as u32 + 1, v)).collect();
        sort_report(&mut entries);
        self.acc = acc;
        HeavyHitterReport { entries, window: self.config.window, released_norm: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alpha: f64, eps: f64, window: u64, universe: u32) -> ContinualConfig {
        ContinualConfig {
            alpha,
            epsilon: eps,
            window,
            universe,
            noise: false,
            seed: 1,
            noise_rule: ContinualNoiseRule::Derived,
        }
    }

    #[test]
    fn level_count_formula() {
        let p = ContinualParams::derive(&cfg(0.5, 1.0, 1024, 4)).unwrap();
        assert_eq!(p.nominal_levels, 18);
        assert_eq!(p.base_block, 1);
        assert_eq!(p.levels, 11);
        assert_eq!(p.block_len(10), 1024);
    }

    #[test]
    fn unit_window() {
        let p = ContinualParams::derive(&cfg(0.5, 1.0, 1, 4)).unwrap();
        assert_eq!(p.levels, 1);
        assert_eq!(p.block_len(0), 1);
        let mut c = ContinualRelease::new(cfg(0.5, 1.0, 1, 4)).unwrap();
        for i in [1, 2, 2, 3] {
            let r = c.update(i).unwrap();
            // threshold 0.25, so the last item is always reported
            assert_eq!(r.entries, vec![(i, 1.0)]);
        }
    }

    #[test]
    fn validation() {
        assert!(ContinualParams::derive(&cfg(1.0, 1.0, 16, 4)).is_err());
        assert!(ContinualParams::derive(&cfg(0.5, 0.0, 16, 4)).is_err());
        assert!(ContinualParams::derive(&cfg(0.5, 1.0, 0, 4)).is_err());
        let mut c = ContinualRelease::new(cfg(0.5, 1.0, 16, 4)).unwrap();
        assert!(c.update(5).is_err());
    }

    #[test]
    fn noise_formulas() {
        let mut c = cfg(0.5, 1.0, 4096, 4);
        let d = ContinualParams::derive(&c).unwrap();
        assert!((d.noise_scale - 32.0 / (8.0 * 144.0)).abs() < 1e-12);
        c.noise_rule = ContinualNoiseRule::Algorithm;
        assert!((ContinualParams::derive(&c).unwrap().noise_scale - 32.0 / (16.0 * 144.0)).abs() < 1e-12);
        c.noise_rule = ContinualNoiseRule::SqrtAlphaW;
        let t = (0.5f64 * 4096.0).sqrt() / (8.0 * 144.0);
        assert!((ContinualParams::derive(&c).unwrap().noise_scale - t).abs() < 1e-12);
    }

    #[test]
    fn cover_with_large_base_block() {
        // 0.9 * 2^15 / (200 * 30) rounds to 5
        let p = ContinualParams::derive(&cfg(0.9, 1.0, 1 << 30, 8)).unwrap();
        assert_eq!(p.base_block, 5);
    }
}
