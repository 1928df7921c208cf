mod common;

use common::{planted, uniform};
use dphh_core::continual::{ContinualConfig, ContinualNoiseRule, ContinualRelease};
use dphh_core::oracle::{counts, exact_window_freqs};
use proptest::prelude::*;

fn config(alpha: f64, window: u64, universe: u32, noise: bool, seed: u64) -> ContinualConfig {
    ContinualConfig {
        alpha,
        epsilon: 1.0,
        window,
        universe,
        noise,
        seed,
        noise_rule: ContinualNoiseRule::Derived,
    }
}

fn check_cover(c: &ContinualRelease) {
    let now = c.now();
    let s1 = c.params().block_len(0);
    let w0 = (now + 1).saturating_sub(c.config().window).max(1);
    let start = c.cover_start();
    assert!(start >= w0 && start - w0 < s1);
    let cover = c.cover();
    let mut pos = start;
    let mut per_level = vec![0usize; c.params().levels as usize];
    for p in &cover {
        assert_eq!(p.start, pos, "pieces are contiguous and disjoint");
        let len = c.params().block_len(p.level);
        if p.sealed {
            assert_eq!(p.end - p.start + 1, len);
            assert_eq!((p.start - 1) % len, 0);
            assert!(c.sealed_release(p.level, p.start).is_some());
            per_level[p.level] += 1;
        } else {
            assert_eq!(p.level, 0);
            assert!(p.end - p.start + 1 < s1);
        }
        pos = p.end + 1;
    }
    assert!(pos == now + 1 || (cover.is_empty() && start > now));
    assert!(per_level.iter().all(|&k| k <= 2), "{per_level:?}");
}

#[test]
fn cover_structure_across_windows() {
    for window in [1u64, 2, 3, 7, 16, 100, 255, 1024] {
        let stream = uniform(3 * window as usize + 50, 10, window);
        let mut c = ContinualRelease::new(config(0.5, window, 10, false, 0)).unwrap();
        for &x in &stream {
            c.update(x).unwrap();
            check_cover(&c);
        }
    }
}

#[test]
fn stitched_pre_noise_error() {
    for (alpha, window, universe) in [(0.5, 256u64, 50u32), (0.3, 1000, 400), (0.9, 64, 8)] {
        let stream = planted(3000, universe, 0.2, 0.05, window);
        let mut c = ContinualRelease::new(config(alpha, window, universe, false, 0)).unwrap();
        let slack = alpha * (window as f64).sqrt() / 16.0;
        for (t, &x) in stream.iter().enumerate() {
            c.update(x).unwrap();
            let covered = counts(&stream[c.cover_start() as usize - 1..=t]);
            let est: std::collections::BTreeMap<u32, u64> = c.pre_noise().into_iter().collect();
            for (&i, &f) in &covered {
                let e = est.get(&i).copied().unwrap_or(0);
                assert!(e <= f && (f - e) as f64 <= slack, "t={t} item {i}: {f} vs {e}");
            }
        }
    }
}

#[test]
fn sealed_noise_is_drawn_once() {
    let mut c = ContinualRelease::new(config(0.5, 64, 6, true, 7)).unwrap();
    let stream = uniform(400, 6, 1);
    let mut seen: Vec<((usize, u64), Vec<f64>)> = Vec::new();
    for &x in &stream {
        c.update(x).unwrap();
        for p in c.cover().into_iter().filter(|p| p.sealed) {
            let now = c.sealed_release(p.level, p.start).unwrap().to_vec();
            match seen.iter().find(|(k, _)| *k == (p.level, p.start)) {
                Some((_, first)) => assert_eq!(first, &now),
                None => seen.push(((p.level, p.start), now)),
            }
        }
    }
    assert!(seen.len() > 50);
}

fn check_noise_off(stream: &[u32], window: u64, universe: u32, alpha: f64) {
    let mut c = ContinualRelease::new(config(alpha, window, universe, false, 0)).unwrap();
    let a = alpha * (window as f64).sqrt();
    for t in 1..=stream.len() {
        let r = c.update(stream[t - 1]).unwrap();
        let freqs = exact_window_freqs(stream, t, window).unwrap();
        for (&i, &f) in &freqs {
            let reported = r.get(i);
            if f as f64 >= a / 2.0 + a / 8.0 {
                assert!(reported.is_some(), "{stream:?} t={t} missing {i}");
            }
            if let Some(est) = reported {
                assert!(f as f64 >= a / 2.0 - a / 8.0, "{stream:?} t={t} reported {i}");
                assert!((est - f as f64).abs() <= a / 2.0);
            }
        }
        assert!(r.items().all(|i| freqs.contains_key(&i)));
    }
}

#[test]
fn noise_off_exhaustive_short_streams() {
    for len in 1..=8u32 {
        for code in 0..4u32.pow(len) {
            let stream: Vec<u32> = (0..len).map(|d| 1 + code / 4u32.pow(d) % 4).collect();
            check_noise_off(&stream, 16, 4, 0.5);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn noise_off_random_streams(stream in prop::collection::vec(1u32..=4, 1..=64)) {
        check_noise_off(&stream, 16, 4, 0.5);
    }
}

#[test]
fn constant_stream_reported_near_window() {
    let window = 256u64;
    let a = 0.5 * (window as f64).sqrt();
    let (mut good, mut steps) = (0, 0);
    for seed in 0..20 {
        let mut c = ContinualRelease::new(config(0.5, window, 5, true, seed)).unwrap();
        for t in 1..=2 * window {
            let r = c.update(3).unwrap();
            if t >= window {
                steps += 1;
                good += r.get(3).is_some_and(|f| (f - window as f64).abs() <= a / 2.0) as u32;
            }
        }
    }
    assert!(good * 100 >= steps * 95, "{good} of {steps}");
}

#[test]
fn all_distinct_stream_mostly_empty() {
    let window = 1024u64;
    let mut c = ContinualRelease::new(config(0.5, window, 4096, true, 2)).unwrap();
    let mut empty = 0;
    for i in 1..=4096u32 {
        empty += c.update(i).unwrap().entries.is_empty() as u32;
    }
    assert!(empty * 100 >= 4096 * 95, "{empty}");
}
