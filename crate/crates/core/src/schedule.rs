//! Step and weight sequences and the window index arithmetic built on them.
//!
//! A [`Schedule`] holds the polynomial families `γ_n = c2·n^(−ρ2)` (time steps)
//! and `η_n = c1·n^(−ρ1)` (averaging weights) together with their prefix sums
//! `Γ_n` and `H_n`. The prefix sums are cached and extended on demand; reads
//! through `&self` require the cache to already cover the index, so a schedule
//! can be extended once by a single owner and then shared read-only.

use crate::error::{Error, Result};

/// Default upper index of the numerical scans run by the diagnostics.
pub const DEFAULT_SCAN: usize = 1_000_000;

const MIN_BLOCK: usize = 4096;
const EXPONENT_TOL: f64 = 1e-12;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone)]
pub struct Schedule {
    weight_scale: f64,
    weight_exponent: f64,
    step_scale: f64,
    step_exponent: f64,
    /// `times[k] = Γ_k`, `times[0] = 0`.
    times: Vec<f64>,
    /// `weight_sums[k] = H_k`, `weight_sums[0] = 0`.
    weight_sums: Vec<f64>,
    time_acc: CompensatedSum,
    weight_acc: CompensatedSum,
}

impl Schedule {
    /// `η_n = c1·n^(−ρ1)`, `γ_n = c2·n^(−ρ2)` with `ρ1 ∈ [0,1]`, `ρ2 ∈ (0,1]`.
    pub fn polynomial(c1: f64, rho1: f64, c2: f64, rho2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::domain("c1", format!("must be positive, got {c1}")));
        }
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(Error::domain("c2", format!("must be positive, got {c2}")));
        }
        if !(0.0..=1.0).contains(&rho1) {
            return Err(Error::domain("rho1", format!("must lie in [0,1], got {rho1}")));
        }
        if !(rho2 > 0.0 && rho2 <= 1.0) {
            return Err(Error::domain("rho2", format!("must lie in (0,1], got {rho2}")));
        }
        Ok(Self::raw(c1, rho1, c2, rho2))
    }

    /// Constant step and weight. The step does not vanish, so this schedule is
    /// only meant for exercising index bookkeeping.
    pub fn constant(step: f64, weight: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::domain("step", format!("must be positive, got {step}")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::domain("weight", format!("must be positive, got {weight}")));
        }
        Ok(Self::raw(weight, 0.0, step, 0.0))
    }

    fn raw(c1: f64, rho1: f64, c2: f64, rho2: f64) -> Self {
        Schedule {
            weight_scale: c1,
            weight_exponent: rho1,
            step_scale: c2,
            step_exponent: rho2,
            times: vec![0.0],
            weight_sums: vec![0.0],
            time_acc: CompensatedSum::default(),
            weight_acc: CompensatedSum::default(),
        }
    }

    pub fn weight_exponent(&self) -> f64 {
        self.weight_exponent
    }

    pub fn step_exponent(&self) -> f64 {
        self.step_exponent
    }

    pub fn weight_scale(&self) -> f64 {
        self.weight_scale
    }

    pub fn step_scale(&self) -> f64 {
        self.step_scale
    }

    /// `γ_n`, for `n ≥ 1`.
    pub fn step(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        power_term(self.step_scale, self.step_exponent, n)
    }

    /// `η_n`, for `n ≥ 1`.
    pub fn weight(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        power_term(self.weight_scale, self.weight_exponent, n)
    }

    /// Largest index currently covered by the prefix-sum cache.
    pub fn cached_len(&self) -> usize {
        self.times.len() - 1
    }

    /// Extend the prefix sums so that indices up to `n` are cached.
    pub fn extend_to(&mut self, n: usize) {
        let have = self.cached_len();
        if n <= have {
            return;
        }
        let target = n.max(2 * have).max(MIN_BLOCK);
        self.times.reserve(target - have);
        self.weight_sums.reserve(target - have);
        for k in have + 1..=target {
            self.time_acc.add(self.step(k));
            self.weight_acc.add(self.weight(k));
            self.times.push(self.time_acc.value());
            self.weight_sums.push(self.weight_acc.value());
        }
    }

    /// `Γ_n`. Panics if `n` is beyond the cached range.
    pub fn time(&self, n: usize) -> f64 {
        self.times[n]
    }

    /// `H_n`. Panics if `n` is beyond the cached range.
    pub fn weight_sum(&self, n: usize) -> f64 {
        self.weight_sums[n]
    }

    /// `Γ_n`, extending the cache if needed.
    pub fn time_at(&mut self, n: usize) -> f64 {
        self.extend_to(n);
        self.times[n]
    }

    /// `H_n`, extending the cache if needed.
    pub fn weight_sum_at(&mut self, n: usize) -> f64 {
        self.extend_to(n);
        self.weight_sums[n]
    }

    /// `Γ_b − Γ_a`. All window comparisons go through this one expression so
    /// that `N` and `τ` agree bit-for-bit on boundary cases.
    fn span(&self, a: usize, b: usize) -> f64 {
        self.times[b] - self.times[a]
    }

    /// Largest `k ≥ from` with `Γ_k − Γ_base ≤ horizon`, given that `from`
    /// itself qualifies. Galloping search.
    fn last_within(&mut self, base: usize, from: usize, horizon: f64) -> usize {
        let mut lo = from;
        let mut stride = 1;
        loop {
            let hi = lo + stride;
            self.extend_to(hi);
            if self.span(base, hi) <= horizon {
                lo = hi;
                stride *= 2;
                continue;
            }
            let mut ok = lo;
            let mut bad = hi;
            while bad - ok > 1 {
                let mid = ok + (bad - ok) / 2;
                if self.span(base, mid) <= horizon {
                    ok = mid;
                } else {
                    bad = mid;
                }
            }
            return ok;
        }
    }

    /// `N(n,T) = max{k ≥ 0 : Γ_k − Γ_n ≤ T}`.
    pub fn horizon_index(&mut self, n: usize, horizon: f64) -> usize {
        assert!(horizon > 0.0, "horizon must be positive");
        self.extend_to(n);
        self.last_within(n, n, horizon)
    }

    /// `τ(n,T) = min{k ≥ 0 : N(k,T) ≥ n} = min{k ≤ n : Γ_n − Γ_k ≤ T}`.
    pub fn window_start(&mut self, n: usize, horizon: f64) -> usize {
        assert!(horizon > 0.0, "horizon must be positive");
        self.extend_to(n);
        let mut ok = n;
        let mut stride = 1;
        loop {
            if ok == 0 {
                return 0;
            }
            let lo = ok.saturating_sub(stride);
            if self.span(lo, n) <= horizon {
                ok = lo;
                stride *= 2;
                continue;
            }
            let mut bad = lo;
            while ok - bad > 1 {
                let mid = bad + (ok - bad) / 2;
                if self.span(mid, n) <= horizon {
                    ok = mid;
                } else {
                    bad = mid;
                }
            }
            return ok;
        }
    }

    /// `sup_{n ≤ scan_to} η_n / (γ_n H_n^ε)` together with the closed-form
    /// verdict for the polynomial family.
    pub fn check_weight_step_condition(&mut self, eps: f64, scan_to: usize) -> Result<WeightStepDiagnostic> {
        if !(eps < 1.0) {
            return Err(Error::domain("eps", format!("must be < 1, got {eps}")));
        }
        let scan_to = scan_to.max(1);
        self.extend_to(scan_to);
        let ratio = |s: &Self, n: usize| s.weight(n) / (s.step(n) * s.weight_sum(n).powf(eps));
        let mut sup = 0.0_f64;
        let mut sup_first_half = 0.0_f64;
        for n in 1..=scan_to {
            let q = ratio(self, n);
            sup = sup.max(q);
            if n <= scan_to / 2 {
                sup_first_half = sup_first_half.max(q);
            }
        }

        let (rho1, rho2) = (self.weight_exponent, self.step_exponent);
        let growth = rho2 - rho1;
        let passes = if rho1 < 1.0 {
            growth <= eps * (1.0 - rho1) + EXPONENT_TOL
        } else if growth < -EXPONENT_TOL {
            true
        } else {
            eps >= 0.0
        };
        Ok(WeightStepDiagnostic {
            eps,
            passes,
            sup_constant: sup,
            sup_first_half,
            final_ratio: ratio(self, scan_to),
            scanned_to: scan_to,
        })
    }

    /// Sufficient condition for invariance of the limit:
    /// `ρ1 = 0` or `ρ1 ∈ (max(0, 2ρ2 − 1), 1)`, plus the Cesàro average
    /// `(1/H_n) Σ_{k≤n} max_{l>k} |Δη_l|/γ_l` evaluated at `n = scan_to`.
    pub fn check_invariance_condition(&mut self, scan_to: usize) -> InvarianceDiagnostic {
        let (rho1, rho2) = (self.weight_exponent, self.step_exponent);
        let passes = rho1 == 0.0 || (rho1 > (2.0 * rho2 - 1.0).max(0.0) && rho1 < 1.0);

        let scan_to = scan_to.max(1);
        // The tail sup is taken over l ≤ 2·scan_to; |Δη_l|/γ_l is eventually
        // decreasing for the polynomial family, so the truncation is harmless.
        let tail = 2 * scan_to;
        self.extend_to(tail);
        let mut suffix_max = vec![0.0_f64; tail + 2];
        for l in (2..=tail).rev() {
            let q = (self.weight(l) - self.weight(l - 1)).abs() / self.step(l);
            suffix_max[l] = suffix_max[l + 1].max(q);
        }
        let mut sum = CompensatedSum::default();
        for k in 1..=scan_to {
            sum.add(suffix_max[k + 1]);
        }
        InvarianceDiagnostic {
            passes,
            cesaro_average: sum.value() / self.weight_sum(scan_to),
            scanned_to: scan_to,
        }
    }

    /// Summability of `ΔN(k,T)/H_k^{s(1−ε)}`; for the polynomial family this
    /// holds iff `s(1−ε) > 1/(1−ρ1)`.
    pub fn check_series_condition(&mut self, s: f64, eps: f64, horizon: f64, scan_to: usize) -> Result<SeriesDiagnostic> {
        let rho1 = self.weight_exponent;
        if rho1 >= 1.0 {
            return Err(Error::domain("rho1", "the series criterion requires rho1 < 1"));
        }
        if !(s > 1.0) {
            return Err(Error::domain("s", format!("must exceed 1, got {s}")));
        }
        if !(eps < 1.0) {
            return Err(Error::domain("eps", format!("must be < 1, got {eps}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::domain("horizon", format!("must be positive, got {horizon}")));
        }
        let power = s * (1.0 - eps);
        let threshold = 1.0 / (1.0 - rho1);
        let passes = power > threshold;

        let scan_to = scan_to.max(2);
        let mut cursor = HorizonCursor::new(horizon);
        let mut prev = cursor.advance(self, 0);
        let mut sum = CompensatedSum::default();
        let mut half_sum = 0.0;
        for k in 1..=scan_to {
            let next = cursor.advance(self, k);
            sum.add((next - prev) as f64 / self.weight_sum(k).powf(power));
            prev = next;
            if k == scan_to / 2 {
                half_sum = sum.value();
            }
        }
        Ok(SeriesDiagnostic {
            s,
            eps,
            passes,
            threshold,
            within_hypothesis: self.step_exponent > 0.0 && self.step_exponent <= rho1,
            partial_sum: sum.value(),
            second_half_increment: sum.value() - half_sum,
            scanned_to: scan_to,
        })
    }
}

fn power_term(scale: f64, exponent: f64, n: usize) -> f64 {
    if exponent == 0.0 {
        scale
    } else {
        scale * (n as f64).powf(-exponent)
    }
}

/// Monotone evaluation of `n ↦ N(n,T)` for a fixed horizon, resuming each
/// search from the previous answer.
#[derive(Debug, Clone)]
pub struct HorizonCursor {
    horizon: f64,
    last: Option<(usize, usize)>,
}

impl HorizonCursor {
    pub fn new(horizon: f64) -> Self {
        assert!(horizon > 0.0, "horizon must be positive");
        HorizonCursor { horizon, last: None }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `N(n,T)`. Calls must use non-decreasing `n`.
    pub fn advance(&mut self, schedule: &mut Schedule, n: usize) -> usize {
        schedule.extend_to(n);
        let from = match self.last {
            Some((prev_n, prev_end)) => {
                assert!(n >= prev_n, "cursor indices must be non-decreasing");
                prev_end.max(n)
            }
            None => n,
        };
        let end = schedule.last_within(n, from, self.horizon);
        self.last = Some((n, end));
        end
    }
}

/// Indices of one shifted window: `[n, N(n,T)]` and `τ(n,T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowIndices {
    pub n: usize,
    pub horizon: f64,
    pub end: usize,
    pub start_of_covering: usize,
}

impl WindowIndices {
    pub fn compute(schedule: &mut Schedule, n: usize, horizon: f64) -> Self {
        WindowIndices {
            n,
            horizon,
            end: schedule.horizon_index(n, horizon),
            start_of_covering: schedule.window_start(n, horizon),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightStepDiagnostic {
    pub eps: f64,
    /// Closed-form verdict; authoritative for the polynomial family.
    pub passes: bool,
    /// Smallest admissible constant `C` over the scanned range.
    pub sup_constant: f64,
    pub sup_first_half: f64,
    pub final_ratio: f64,
    pub scanned_to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceDiagnostic {
    pub passes: bool,
    pub cesaro_average: f64,
    pub scanned_to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDiagnostic {
    pub s: f64,
    pub eps: f64,
    pub passes: bool,
    /// `1/(1−ρ1)`.
    pub threshold: f64,
    /// Whether `0 < ρ2 ≤ ρ1` holds, the setting the closed form is stated for.
    pub within_hypothesis: bool,
    pub partial_sum: f64,
    pub second_half_increment: f64,
    pub scanned_to: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_root_schedule() -> Schedule {
        Schedule::polynomial(1.0, 1.0 / 3.0, 1.0, 1.0 / 3.0).unwrap()
    }

    #[test]
    fn polynomial_first_terms() {
        let mut s = cube_root_schedule();
        assert_eq!(s.step(1), 1.0);
        assert_eq!(s.weight(1), 1.0);
        // 1 + 2^(-1/3) + 3^(-1/3)
        let h3 = s.weight_sum_at(3);
        assert!((h3 - 2.487_061_800_334_734_4).abs() < 1e-14);
    }

    #[test]
    fn exponent_zero_weights() {
        let s = Schedule::polynomial(1.0, 0.0, 1.0, 1.0).unwrap();
        for n in 1..50 {
            assert_eq!(s.weight(n), 1.0);
            assert!((s.step(n) - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(Schedule::polynomial(1.0, 1.5, 1.0, 0.5).is_err());
        assert!(Schedule::polynomial(1.0, -0.1, 1.0, 0.5).is_err());
        assert!(Schedule::polynomial(1.0, 0.5, 1.0, 0.0).is_err());
        assert!(Schedule::polynomial(1.0, 0.5, 1.0, 1.2).is_err());
        assert!(Schedule::polynomial(0.0, 0.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn prefix_sums_match_high_precision_reference() {
        // Σ_{k≤10⁶} k^(-1/3) = ζ(1/3) − ζ(1/3, 10⁶+1), evaluated with 40 digits.
        let mut s = cube_root_schedule();
        let gamma = s.time_at(1_000_000);
        assert!((gamma - 14_999.031_639_751_37).abs() / gamma < 1e-12);
        let mut h = Schedule::polynomial(1.0, 1.0, 1.0, 1.0).unwrap();
        let harmonic = h.weight_sum_at(1_000_000);
        assert!((harmonic - 14.392_726_722_865_724).abs() / harmonic < 1e-12);
    }

    #[test]
    fn constant_step_horizon_index() {
        let mut s = Schedule::constant(1.0, 1.0).unwrap();
        assert_eq!(s.horizon_index(0, 2.5), 2);
        assert_eq!(s.horizon_index(7, 2.5), 9);
        assert_eq!(s.window_start(5, 2.5), 3);
        assert_eq!(s.window_start(0, 2.5), 0);
    }

    #[test]
    fn short_horizon_returns_n() {
        let mut s = cube_root_schedule();
        for n in [0usize, 1, 10, 1000] {
            let next_step = s.step(n + 1);
            assert_eq!(s.horizon_index(n, 0.5 * next_step), n);
        }
    }

    #[test]
    fn horizon_index_matches_linear_scan() {
        let mut s = cube_root_schedule();
        s.extend_to(100);
        let mut expected = 0;
        while s.time(expected + 1) <= 1.0 {
            expected += 1;
        }
        assert_eq!(s.horizon_index(0, 1.0), expected);
        assert_eq!(expected, 1);
    }

    #[test]
    fn cursor_agrees_with_direct_search() {
        let mut s = cube_root_schedule();
        let mut cursor = HorizonCursor::new(1.7);
        for n in 0..5000 {
            let a = cursor.advance(&mut s, n);
            assert_eq!(a, s.horizon_index(n, 1.7));
        }
    }

    #[test]
    fn weight_step_condition_examples() {
        let mut equal = cube_root_schedule();
        let d = equal.check_weight_step_condition(0.0, 10_000).unwrap();
        assert!(d.passes);
        assert_eq!(d.sup_constant, 1.0);

        let mut fast_weights = Schedule::polynomial(1.0, 1.0, 1.0, 1.0 / 3.0).unwrap();
        let d = fast_weights.check_weight_step_condition(0.0, 10_000).unwrap();
        assert!(d.passes);
        assert_eq!(d.sup_constant, 1.0);

        let mut slow_weights = Schedule::polynomial(1.0, 1.0 / 3.0, 1.0, 1.0).unwrap();
        let d = slow_weights.check_weight_step_condition(0.0, DEFAULT_SCAN).unwrap();
        assert!(!d.passes);
        // n^(2/3) at 10⁶ is 10⁴, and still growing over the second half.
        assert!((d.sup_constant - 1e4).abs() < 1e-6);
        assert!(d.sup_constant > d.sup_first_half);
    }

    #[test]
    fn invariance_condition_examples() {
        assert!(cube_root_schedule().check_invariance_condition(10_000).passes);
        let mut flat = Schedule::polynomial(1.0, 0.0, 1.0, 0.5).unwrap();
        let d = flat.check_invariance_condition(10_000);
        assert!(d.passes);
        assert_eq!(d.cesaro_average, 0.0);
        assert!(!Schedule::polynomial(1.0, 1.0, 1.0, 1.0).unwrap().check_invariance_condition(1000).passes);
        // 2ρ2 − 1 = 0.8 excludes ρ1 = 0.5.
        assert!(!Schedule::polynomial(1.0, 0.5, 1.0, 0.9).unwrap().check_invariance_condition(1000).passes);
    }

    #[test]
    fn invariance_cesaro_average_decreases() {
        let mut s = cube_root_schedule();
        let a = s.check_invariance_condition(1_000).cesaro_average;
        let b = s.check_invariance_condition(100_000).cesaro_average;
        assert!(b < a);
    }

    #[test]
    fn series_condition_examples() {
        let mut s = cube_root_schedule();
        assert!(s.check_series_condition(2.0, 0.0, 1.0, 10_000).unwrap().passes);
        assert!(!s.check_series_condition(1.4, 0.0, 1.0, 10_000).unwrap().passes);
        let mut half = Schedule::polynomial(1.0, 0.5, 1.0, 0.5).unwrap();
        assert!(!half.check_series_condition(2.0, 0.0, 1.0, 10_000).unwrap().passes);
        let mut one = Schedule::polynomial(1.0, 1.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            one.check_series_condition(2.0, 0.0, 1.0, 100),
            Err(Error::Domain { name: "rho1", .. })
        ));
    }
}
