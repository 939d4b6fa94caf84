use ergopath::engine::FunctionalAverage;
use ergopath::Schedule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HORIZONS: [f64; 5] = [0.1, 0.5, 1.0, 2.5, 10.0];

fn cube_root_schedule() -> Schedule {
    Schedule::polynomial(1.0, 1.0 / 3.0, 1.0, 1.0 / 3.0).unwrap()
}

#[test]
fn horizon_index_brackets_the_horizon() {
    let mut s = cube_root_schedule();
    for &t in &HORIZONS {
        let mut prev = 0;
        for n in 1..=10_000usize {
            let end = s.horizon_index(n, t);
            assert!(end >= n);
            assert!(s.time(end) - s.time(n) <= t, "n={n} T={t}");
            assert!(s.time_at(end + 1) - s.time(n) > t, "n={n} T={t}");
            assert!(end >= prev, "N(n,T) must be non-decreasing");
            prev = end;
        }
    }
}

#[test]
fn window_start_is_dual_to_horizon_index() {
    let mut s = cube_root_schedule();
    for &t in &HORIZONS {
        for n in 1..=10_000usize {
            let tau = s.window_start(n, t);
            assert!(s.horizon_index(tau, t) >= n, "n={n} T={t}");
            if tau > 0 {
                assert!(s.horizon_index(tau - 1, t) < n, "n={n} T={t}");
            }
        }
    }
}

#[test]
fn preimage_counts_of_window_start() {
    // #{n : τ(n,T) = k} = N(k,T) − N(k−1,T), and N(0,T) + 1 for k = 0.
    let mut s = cube_root_schedule();
    for &t in &[0.5, 2.5] {
        let limit = 10_000usize;
        let mut counts = vec![0usize; limit + 1];
        for n in 0..=limit {
            counts[s.window_start(n, t)] += 1;
        }
        // Only k whose whole preimage lies below `limit` are complete.
        let complete = (0..=limit).take_while(|&k| s.horizon_index(k, t) < limit).last().unwrap();
        assert_eq!(counts[0], s.horizon_index(0, t) + 1);
        for (k, &count) in counts.iter().enumerate().take(complete + 1).skip(1) {
            assert_eq!(count, s.horizon_index(k, t) - s.horizon_index(k - 1, t), "k={k} T={t}");
        }
    }
}

#[test]
fn steps_decrease_and_weight_sums_increase() {
    let mut s = Schedule::polynomial(0.7, 0.4, 1.3, 0.25).unwrap();
    s.extend_to(10_000);
    for n in 1..10_000usize {
        assert!(s.step(n + 1) <= s.step(n));
        assert!(s.weight_sum(n + 1) > s.weight_sum(n));
    }
}

#[test]
fn prefix_sums_match_direct_summation() {
    let mut s = cube_root_schedule();
    let n = 1_000_000usize;
    let gamma = s.time_at(n);
    // Neumaier summation, written out independently of the schedule's own.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 1..=n {
        let x = (k as f64).powf(-1.0 / 3.0);
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    let direct = sum + comp;
    assert!((gamma - direct).abs() / direct < 1e-12, "{gamma} vs {direct}");
}

#[test]
fn recurrence_matches_direct_weighted_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut avg = FunctionalAverage::default();
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for n in 1..=10_000usize {
        let eta: f64 = rng.random_range(1e-3..2.0);
        let f: f64 = rng.random_range(-50.0..50.0);
        avg.update(eta, f);
        num += eta * f;
        den += eta;
        let direct = num / den;
        assert!((avg.value - direct).abs() <= 1e-10 * direct.abs().max(1.0), "n={n}");
    }
    assert_eq!(avg.n, 10_000);
}
