use ergopath::levy::{sample_jump_above, JumpSampler, JumpScheme, TemperedStableMeasure};
use ergopath::oracles::{levy_moment_oracle, levy_tail_oracle};
use ergopath::rng::stream_rng;
use statrs::function::erf::erfc;

fn measure(c: f64, lambda: f64) -> TemperedStableMeasure {
    TemperedStableMeasure::new(c, lambda, 0.5).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `Λ(y)` for `α = 1/2`: `c(2e^{−λy}/√y − 2√(πλ) erfc(√(λy)))`.
fn half_stable_tail(m: &TemperedStableMeasure, y: f64) -> f64 {
    let l = m.lambda;
    m.c * (2.0 * (-l * y).exp() / y.sqrt() - 2.0 * (std::f64::consts::PI * l).sqrt() * erfc((l * y).sqrt()))
}

/// Kolmogorov–Smirnov distance of `samples` to the law of a jump above `u`,
/// `F(y) = 1 − Λ(y)/Λ(u)`.
fn ks_distance(m: &TemperedStableMeasure, u: f64, samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let total = half_stable_tail(m, u);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = 1.0 - half_stable_tail(m, y) / total;
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

// Asymptotic critical value at level 0.01.
const KS_001: f64 = 1.628;

#[test]
fn half_stable_tail_matches_oracle() {
    // Beyond y ≈ 2 the two terms cancel and the closed form loses digits.
    let m = measure(0.01, 1.0);
    for &y in &[1e-4, 0.01, 0.3, 2.0] {
        let (a, b) = (half_stable_tail(&m, y), levy_tail_oracle(&m, y, 0).unwrap());
        assert!(rel(a, b) < 1e-9, "y={y}: {a} vs {b}");
    }
}

#[test]
fn rejection_sampler_passes_ks() {
    let m = measure(0.01, 1.0);
    for (stream, u) in [(0, 0.01), (1, 0.3), (2, 2.0)] {
        let mut rng = stream_rng(5, stream);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_jump_above(&m, u, &mut rng)).collect();
        let d = ks_distance(&m, u, &mut xs);
        assert!(d < KS_001 / (n as f64).sqrt(), "u={u}: D={d}");
    }
}

#[test]
fn untempered_sampler_is_exact_pareto() {
    let m = measure(1.0, 0.0);
    let mut rng = stream_rng(6, 0);
    let u = 0.2;
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n).map(|_| sample_jump_above(&m, u, &mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = 1.0 - (u / y).sqrt();
            (f - i as f64 / n as f64).abs().max((i as f64 + 1.0) / n as f64 - f)
        })
        .fold(0.0, f64::max);
    assert!(d < KS_001 / (n as f64).sqrt(), "D={d}");
}

#[test]
fn untempered_closed_forms() {
    let m = measure(0.3, 0.0);
    for &u in &[1e-4, 0.01, 0.5, 3.0] {
        let a = 0.5;
        assert!(rel(m.tail_intensity(u).unwrap(), 0.3 * u.powf(-a) / a) < 1e-9);
        assert!(rel(m.small_jump_variance(u).unwrap(), 0.3 * u.powf(2.0 - a) / (2.0 - a)) < 1e-9);
        assert!(rel(m.head_moment(u, 1).unwrap(), 0.3 * u.powf(1.0 - a) / (1.0 - a)) < 1e-9);
        let (_, head) = levy_moment_oracle(&m, u, 2).unwrap();
        assert!(rel(head, 0.3 * u.powf(2.0 - a) / (2.0 - a)) < 1e-9);
    }
}

#[test]
fn quadrature_agrees_with_oracle() {
    for m in [measure(0.01, 1.0), measure(2.0, 0.1), TemperedStableMeasure::new(0.5, 3.0, 0.8).unwrap()] {
        for &u in &[1e-6, 1e-3, 0.1, 1.0, 5.0] {
            for p in 0..=2 {
                let a = m.tail_moment(u, p).unwrap();
                let b = levy_tail_oracle(&m, u, p).unwrap();
                assert!(rel(a, b) < 1e-9, "tail p={p} u={u}: {a} vs {b}");
            }
            for p in 1..=2 {
                let (_, head) = levy_moment_oracle(&m, u, p).unwrap();
                assert!(rel(m.head_moment(u, p).unwrap(), head) < 1e-9, "head p={p} u={u}");
            }
        }
    }
}

struct Sample {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn summarize(xs: &[f64]) -> Sample {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Sample {
        mean,
        var: m2,
        se_mean: (m2 / n).sqrt(),
        se_var: ((m4 - m2 * m2) / n).sqrt(),
    }
}

/// Increments from the cached sampler used by the simulations.
fn draws(m: &TemperedStableMeasure, scheme: JumpScheme, compensate: bool, u: f64, gamma: f64, n: usize, stream: u64) -> Vec<f64> {
    let mut sampler = JumpSampler::new(*m, scheme, compensate);
    let mut rng = stream_rng(7, stream);
    (0..n).map(|_| sampler.increment(u, gamma, &mut rng).unwrap()).collect()
}

#[test]
fn compensated_increments_are_centred() {
    let m = measure(1.0, 1.0);
    let (u, gamma) = (0.05, 0.5);
    let xs = draws(&m, JumpScheme::Truncated, true, u, gamma, 1_000_000, 0);
    let s = summarize(&xs);
    assert!(s.mean.abs() < 3.0 * s.se_mean, "mean {} se {}", s.mean, s.se_mean);
    let target = gamma * levy_tail_oracle(&m, u, 2).unwrap();
    assert!((s.var - target).abs() < 3.0 * s.se_var, "var {} vs {target}", s.var);
}

#[test]
fn uncompensated_mean_matches_tail_moment() {
    let m = measure(1.0, 1.0);
    let (u, gamma) = (0.05, 0.5);
    let xs = draws(&m, JumpScheme::Truncated, false, u, gamma, 1_000_000, 1);
    let s = summarize(&xs);
    let target = gamma * levy_tail_oracle(&m, u, 1).unwrap();
    assert!((s.mean - target).abs() < 3.0 * s.se_mean, "mean {} vs {target}", s.mean);
}

#[test]
fn wienerized_variance_adds_small_jumps() {
    let m = measure(1.0, 1.0);
    let (u, gamma) = (0.05, 0.5);
    let xs = draws(&m, JumpScheme::Wienerized, true, u, gamma, 1_000_000, 2);
    let s = summarize(&xs);
    let (tail, head) = levy_moment_oracle(&m, u, 2).unwrap();
    let target = gamma * (tail + head);
    assert!(s.mean.abs() < 3.0 * s.se_mean);
    assert!((s.var - target).abs() < 3.0 * s.se_var, "var {} vs {target}", s.var);
}

#[test]
fn oracle_catches_a_faulty_sampler() {
    // A sampler built with the wrong tempering rate stands in for a bug in
    // the main jump path. The correct one must agree with the oracle and the
    // faulty one must not.
    let truth = measure(1.0, 1.0);
    let faulty = measure(1.0, 1.3);
    let (u, gamma) = (0.05, 0.5);
    let target = gamma * levy_tail_oracle(&truth, u, 1).unwrap();
    let z = |m: &TemperedStableMeasure, stream: u64| {
        let xs = draws(m, JumpScheme::Truncated, false, u, gamma, 200_000, 10 + stream);
        let s = summarize(&xs);
        (s.mean - target).abs() / s.se_mean
    };
    assert!(z(&truth, 0) < 3.0);
    assert!(z(&faulty, 1) > 5.0);

    let mut rng = stream_rng(8, 2);
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n).map(|_| sample_jump_above(&faulty, 0.3, &mut rng)).collect();
    assert!(ks_distance(&truth, 0.3, &mut xs) > KS_001 / (n as f64).sqrt());
}
