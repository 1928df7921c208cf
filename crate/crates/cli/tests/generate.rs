use dphh::generate::{GeneratorKind, GeneratorSpec};

// Least-squares slope of log frequency against log rank over the top ranks.
fn rank_slope(stream: &[u32], universe: u32, ranks: usize) -> f64 {
    let mut freq = vec![0u64; universe as usize + 1];
    for &x in stream {
        freq[x as usize] += 1;
    }
    freq.sort_unstable_by(|a, b| b.cmp(a));
    let pts: Vec<(f64, f64)> = freq
        .iter()
        .take(ranks)
        .enumerate()
        .filter(|&(_, &f)| f > 0)
        .map(|(r, &f)| (((r + 1) as f64).ln(), (f as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    cov / var
}

#[test]
fn zipf_rank_frequency_slope() {
    for s in [0.8, 1.0, 1.5] {
        let stream = GeneratorSpec::new(GeneratorKind::Zipf { s }, 100_000, 1000, 9).generate().unwrap();
        let slope = rank_slope(&stream, 1000, 100);
        assert!((slope + s).abs() <= 0.2, "s = {s}: slope {slope}");
    }
}

#[test]
fn uniform_and_distinct_shapes() {
    let u = GeneratorSpec::new(GeneratorKind::Uniform, 50_000, 10, 1).generate().unwrap();
    assert!(u.iter().all(|&x| (1..=10).contains(&x)));
    let mut c = [0usize; 11];
    u.iter().for_each(|&x| c[x as usize] += 1);
    assert!(c[1..].iter().all(|&k| (4500..5500).contains(&k)));
    let d = GeneratorSpec::new(GeneratorKind::Distinct, 25, 10, 0).generate().unwrap();
    assert_eq!(&d[..12], &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 1, 2]);
}
