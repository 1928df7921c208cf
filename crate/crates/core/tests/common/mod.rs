#![allow(dead_code)]

use dphh_core::hash::rng_from_seed;
use rand_core::RngCore;

fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Item 1 with probability `p1`, item 2 with probability `p2`, otherwise
/// uniform over `3..=universe`.
pub fn planted(len: usize, universe: u32, p1: f64, p2: f64, seed: u64) -> Vec<u32> {
    let mut rng = rng_from_seed(seed);
    (0..len)
        .map(|_| {
            let u = unit(&mut rng);
            if u < p1 {
                1
            } else if u < p1 + p2 {
                2
            } else {
                3 + (rng.next_u64() % (universe as u64 - 2)) as u32
            }
        })
        .collect()
}

pub fn uniform(len: usize, universe: u32, seed: u64) -> Vec<u32> {
    let mut rng = rng_from_seed(seed);
    (0..len).map(|_| 1 + (rng.next_u64() % universe as u64) as u32).collect()
}

/// Zipf by inversion of the cumulative weights `i^-s`.
pub fn zipf(len: usize, universe: u32, s: f64, seed: u64) -> Vec<u32> {
    let mut cdf = Vec::with_capacity(universe as usize);
    let mut acc = 0.0;
    for i in 1..=universe {
        acc += (i as f64).powf(-s);
        cdf.push(acc);
    }
    let mut rng = rng_from_seed(seed);
    (0..len)
        .map(|_| {
            let u = unit(&mut rng) * acc;
            cdf.partition_point(|&c| c < u).min(universe as usize - 1) as u32 + 1
        })
        .collect()
}
