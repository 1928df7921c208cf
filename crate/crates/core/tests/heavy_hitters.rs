mod common;

use common::{planted, uniform, zipf};
use dphh_core::dp::{freq_smooth_bound, l2_smooth_bound, LaplaceSampler, SmoothBoundParams};
use dphh_core::hash::rng_from_seed;
use dphh_core::hh::{L1HeavyHitters, L2HeavyHitters, L2Options, PrivacyConfig};
use dphh_core::oracle::{exact_heavy_hitters, exact_lp, exact_window_freqs, neighbor_pairs};
use dphh_core::sketch::{AmsShape, CsShape};

const M: u64 = 4000;
const W: u64 = 2000;
const N: u32 = 200;
const KAPPA: f64 = 6000.0;

fn l2_config(alpha: f64, noise: bool, seed: u64) -> PrivacyConfig {
    PrivacyConfig {
        alpha,
        window: W,
        universe: N,
        stream_bound: M,
        kappa: KAPPA,
        kappa_w: 0.0,
        noise,
        seed,
        ..PrivacyConfig::default()
    }
}

fn shapes() -> L2Options {
    L2Options {
        ams_shape: Some(AmsShape::new(16, 5).unwrap()),
        cs_shape: Some(CsShape::new(5, 64).unwrap()),
        ..L2Options::default()
    }
}

fn l2_run(stream: &[u32], cfg: PrivacyConfig) -> L2HeavyHitters {
    let mut hh = L2HeavyHitters::with_options(cfg, shapes()).unwrap();
    for &x in stream {
        hh.update(x).unwrap();
    }
    hh
}

#[test]
fn l2_noise_off_planted() {
    let alpha = 0.2;
    let (mut complete, mut sound, mut accurate) = (0, 0, 0);
    let runs = 20;
    for seed in 0..runs {
        let stream = planted(M as usize, N, 0.3, 0.1, seed);
        let mut hh = l2_run(&stream, l2_config(alpha, false, seed));
        let report = hh.query(W).unwrap();
        let freqs = exact_window_freqs(&stream, M as usize, W).unwrap();
        let classes = exact_heavy_hitters(&freqs, alpha, 2);
        assert!(classes.must_report.contains(&1) && classes.must_report.contains(&2));
        complete += classes.must_report.iter().all(|&i| report.get(i).is_some()) as u32;
        sound += report.items().all(|i| !classes.forbids(freqs[&i])) as u32;
        accurate +=
            report.entries.iter().all(|&(i, f)| (f - freqs[&i] as f64).abs() <= alpha / 4.0 * classes.norm)
                as u32;
    }
    assert_eq!((complete, sound, accurate), (runs as u32, runs as u32, runs as u32));
}

#[test]
fn l2_uniform_noise_off_is_empty() {
    let mut empty = 0;
    for seed in 0..50 {
        let stream = uniform(M as usize, 100, seed);
        let freqs = exact_window_freqs(&stream, M as usize, W).unwrap();
        let classes = exact_heavy_hitters(&freqs, 0.5, 2);
        assert_eq!(classes.must_not_report.len(), freqs.len());
        let cfg = PrivacyConfig { universe: 100, ..l2_config(0.5, false, seed) };
        let mut hh = l2_run(&stream, cfg);
        empty += hh.query(W).unwrap().entries.is_empty() as u32;
    }
    assert!(empty >= 50 * 99 / 100, "{empty}");
}

#[test]
fn l2_planted_noise_on() {
    // One state per stream seed; several independent noise draws on each.
    let alpha = 0.2;
    let mut present = 0;
    let mut total = 0;
    for seed in 0..10 {
        let stream = planted(M as usize, N, 0.4, 0.0, 100 + seed);
        let hh = l2_run(&stream, l2_config(alpha, true, seed));
        let pre = hh.pre_release(W).unwrap();
        for noise in 0..20 {
            let r = hh.release(&pre, &mut LaplaceSampler::new(noise * 31 + seed));
            present += r.get(1).is_some() as u32;
            total += 1;
        }
    }
    assert!(present * 100 >= total * 95, "{present} of {total}");
}

#[test]
fn l2_tracked_counters_per_timestamp() {
    let hh = l2_run(&zipf(M as usize, N, 1.1, 5), l2_config(0.2, false, 5));
    let threshold = hh.params().cs_threshold;
    let bound = (2.0 / (threshold * threshold)).ceil() as usize;
    let most = hh.histogram().unwrap().instances().map(|(_, s)| s.tracked().len()).max().unwrap();
    assert!(most <= bound && most <= N as usize, "{most} vs {bound}");
}

#[test]
fn l2_repeated_item_tracks_one() {
    let hh = l2_run(&vec![9; M as usize], l2_config(0.2, false, 1));
    for (_, slot) in hh.histogram().unwrap().instances() {
        assert_eq!(slot.tracked(), [9]);
    }
}

#[test]
fn l2_neighbours_within_smooth_bounds() {
    let alpha = 0.2;
    let p = SmoothBoundParams::new(1.0, alpha, M, KAPPA).unwrap();
    let base = planted(M as usize, N, 0.3, 0.1, 77);
    let pairs = neighbor_pairs(&base, N, 12, &mut rng_from_seed(3)).unwrap();
    let mut checked = 0;
    for (a, b) in pairs {
        let (ha, hb) = (l2_run(&a, l2_config(alpha, false, 4)), l2_run(&b, l2_config(alpha, false, 4)));
        let (pa, pb) = (ha.pre_release(W).unwrap(), hb.pre_release(W).unwrap());
        let truth = exact_lp(&exact_window_freqs(&a, M as usize, W).unwrap(), 2);
        // Success event: both norm estimates within a quarter of the truth.
        if (pa.norm - truth).abs() > truth / 4.0 || (pb.norm - truth).abs() > truth / 4.0 {
            continue;
        }
        checked += 1;
        assert!((pa.norm - pb.norm).abs() <= l2_smooth_bound(pa.norm.max(pb.norm), &p));
        // Noise is off, so the release is the threshold test alone.
        let ra = ha.release(&pa, &mut LaplaceSampler::new(0));
        let rb = hb.release(&pb, &mut LaplaceSampler::new(0));
        assert!(ra.get(1).is_some() && rb.get(1).is_some());
        for &(i, fa) in &ra.entries {
            if let Some(fb) = rb.get(i) {
                assert!((fa - fb).abs() <= freq_smooth_bound(fa.max(fb), &p), "item {i}");
            }
        }
    }
    assert!(checked >= 10);
}

#[test]
fn l1_reports_are_reproducible() {
    let stream = zipf(6000, 500, 1.2, 8);
    let cfg = PrivacyConfig {
        alpha: 0.1,
        window: 3000,
        universe: 500,
        stream_bound: 6000,
        seed: 21,
        ..PrivacyConfig::default()
    };
    let run = || {
        let mut hh = L1HeavyHitters::new(cfg.clone()).unwrap();
        for &x in &stream {
            hh.update(x).unwrap();
        }
        format!("{:?}", hh.query(3000).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn l1_noise_on_guarantees() {
    let w = 4000u64;
    let alpha = 0.1;
    let stream = planted(8000, 300, 0.15, 0.07, 12);
    let cfg =
        PrivacyConfig { alpha, window: w, universe: 300, stream_bound: 8000, ..PrivacyConfig::default() };
    let mut hh = L1HeavyHitters::new(cfg).unwrap();
    for &x in &stream {
        hh.update(x).unwrap();
    }
    let freqs = exact_window_freqs(&stream, 8000, w).unwrap();
    let classes = exact_heavy_hitters(&freqs, alpha, 1);
    assert!(classes.must_report.contains(&1));
    let pre = hh.pre_release(w).unwrap();
    let mut good = 0;
    for seed in 0..200 {
        let r = hh.release(&pre, &mut LaplaceSampler::new(seed));
        let ok = classes.must_report.iter().all(|&i| r.get(i).is_some())
            && r.entries.iter().all(|&(i, f)| {
                !classes.forbids(freqs[&i]) && (f - freqs[&i] as f64).abs() <= alpha * w as f64 / 4.0
            });
        good += ok as u32;
    }
    assert!(good >= 198, "{good}");
}
