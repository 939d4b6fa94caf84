//! Brute-force references for the estimators.
//!
//! Nothing here goes through the ergodic windows, the Lévy sampler or the
//! price-path reconstruction: the CIR oracle simulates fresh paths from the
//! known invariant law on a fixed fine grid and evolves `log S` directly, and
//! the Lévy moments use their own double-exponential quadrature.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::engine::{ErgodicEngine, FnDriver, MarginalStats, NoFunctional, RunOptions};
use crate::error::{Error, Result};
use crate::levy::TemperedStableMeasure;
use crate::models::HestonParams;
use crate::pricing::{AsianSpec, OptionKind};
use crate::schedule::Schedule;
use crate::schemes::ou_companion_step;

/// Plain Monte Carlo mean with its standard error. Partial results from
/// separate streams combine with [`OracleEstimate::merge`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleEstimate {
    pub n_paths: u64,
    sum: f64,
    sum_sq: f64,
}

impl OracleEstimate {
    pub fn add(&mut self, x: f64) {
        self.n_paths += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &OracleEstimate) {
        self.n_paths += other.n_paths;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn value(&self) -> f64 {
        self.sum / self.n_paths as f64
    }

    pub fn std_error(&self) -> f64 {
        let n = self.n_paths as f64;
        let m = self.value();
        ((self.sum_sq / n - m * m).max(0.0) / (n - 1.0)).sqrt()
    }
}

/// Asian prices for several strikes from `n_paths` independent stationary
/// Heston paths.
///
/// `v_0` is drawn from the Gamma invariant law; `v` then follows a
/// full-truncation Euler scheme with step `fine_step`, and `log S` the
/// matching log-Euler scheme driven by `ρ dW² + √(1−ρ²) dW¹`. The time
/// average uses the trapezoidal rule on the same grid.
pub fn cir_direct_stationary_price<R: Rng + ?Sized>(
    params: &HestonParams,
    spec: &AsianSpec,
    strikes: &[f64],
    n_paths: u64,
    fine_step: f64,
    rng: &mut R,
) -> Result<Vec<OracleEstimate>> {
    params.validate()?;
    let maturity = spec.maturity;
    if !(fine_step > 0.0 && fine_step <= 1e-3 * maturity) {
        return Err(Error::domain("fine_step", format!("must lie in (0, 1e-3·T], got {fine_step}")));
    }
    let steps = (maturity / fine_step).round().max(1.0) as usize;
    let h = maturity / steps as f64;
    let sqrt_h = h.sqrt();
    let (shape, rate) = params.invariant_gamma();
    let invariant = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain("invariant law", e.to_string()))?;
    let rho_bar = (1.0 - params.rho * params.rho).sqrt();
    let discount = (-params.r * maturity).exp();

    let mut out = vec![OracleEstimate::default(); strikes.len()];
    for _ in 0..n_paths {
        let mut v: f64 = invariant.sample(rng);
        let mut log_s = params.s0.ln();
        let mut s_prev = params.s0;
        let mut integral = 0.0;
        for _ in 0..steps {
            let z2: f64 = StandardNormal.sample(rng);
            let z1: f64 = StandardNormal.sample(rng);
            let vp = v.max(0.0);
            let sv = vp.sqrt();
            log_s += (params.r - 0.5 * vp) * h + sv * sqrt_h * (params.rho * z2 + rho_bar * z1);
            v += params.k * (params.theta - vp) * h + params.sigma_v * sv * sqrt_h * z2;
            let s = log_s.exp();
            integral += 0.5 * (s_prev + s) * h;
            s_prev = s;
        }
        let average = integral / maturity;
        for (acc, &k) in out.iter_mut().zip(strikes) {
            let payoff = match spec.kind {
                OptionKind::Call => (average - k).max(0.0),
                OptionKind::Put => (k - average).max(0.0),
            };
            acc.add(discount * payoff);
        }
    }
    Ok(out)
}

/// Sample moments of `n` draws from the Gamma invariant law of `v`.
pub fn invariant_variance_sample<R: Rng + ?Sized>(params: &HestonParams, n: u64, rng: &mut R) -> Result<OracleEstimate> {
    let (shape, rate) = params.invariant_gamma();
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain("invariant law", e.to_string()))?;
    let mut acc = OracleEstimate::default();
    for _ in 0..n {
        acc.add(g.sample(rng));
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct OuReport {
    pub sigma: f64,
    pub target_mean: f64,
    pub target_variance: f64,
    pub stats: MarginalStats<1>,
}

/// Engine marginals for `dy = −y dt + σ dW`, whose invariant law is
/// `N(0, σ²/2)`.
pub fn ou_stationary_check<R: Rng>(sigma: f64, schedule: Schedule, n_iters: usize, rng: &mut R) -> Result<OuReport> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain("sigma", format!("must be non-negative, got {sigma}")));
    }
    let variance = sigma * sigma;
    let mut driver = FnDriver(|y: &[f64; 1], _k: usize, gamma: f64| {
        let z: f64 = StandardNormal.sample(rng);
        [ou_companion_step(y[0], gamma, variance, gamma.sqrt() * z)]
    });
    // The horizon only sizes the retained buffer; marginals need none.
    let mut engine = ErgodicEngine::new(schedule, [0.0], 1e-12)?;
    let options = RunOptions {
        marginals: true,
        ..RunOptions::default()
    };
    let summary = engine.run(&mut driver, &mut NoFunctional, n_iters, options)?;
    let stats = summary.marginal.ok_or(Error::EmptyAccumulator)?.stats()?;
    Ok(OuReport {
        sigma,
        target_mean: 0.0,
        target_variance: 0.5 * variance,
        stats,
    })
}

const DE_TOL: f64 = 1e-13;
const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// Double-exponential rule on `[a, b]`, robust to integrable endpoint
/// singularities. Nodes are placed by their distance to the nearer endpoint
/// so that nothing is evaluated exactly on it.
fn tanh_sinh(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let term = |t: f64| {
        let u = HALF_PI * t.sinh();
        let dist = half * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let x = if u < 0.0 { a + dist } else { b - dist };
        let w = half * HALF_PI * t.cosh() / (u.cosh() * u.cosh());
        if dist <= 0.0 || !w.is_finite() || w == 0.0 {
            0.0
        } else {
            w * f(x)
        }
    };
    refine(&term, 4.5)
}

/// `∫_a^∞ f` via `y = a + exp(π/2·sinh t)`.
fn exp_sinh(f: &dyn Fn(f64) -> f64, a: f64) -> f64 {
    let term = |t: f64| {
        let e = (HALF_PI * t.sinh()).exp();
        let w = HALF_PI * t.cosh() * e;
        if !w.is_finite() || w == 0.0 {
            0.0
        } else {
            let v = w * f(a + e);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        }
    };
    refine(&term, 6.0)
}

/// Trapezoidal sums of `term` on `[−t_max, t_max]`, halving the spacing
/// until two levels agree.
fn refine(term: &dyn Fn(f64) -> f64, t_max: f64) -> f64 {
    let mut h = 0.5;
    let n = (t_max / h) as i64;
    let mut sum: f64 = (-n..=n).map(|i| term(i as f64 * h)).sum();
    let mut estimate = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        let n = (t_max / h) as i64;
        // Only the odd multiples are new.
        sum += (-n..=n).filter(|i| i % 2 != 0).map(|i| term(i as f64 * h)).sum::<f64>();
        let next = sum * h;
        if (next - estimate).abs() <= DE_TOL * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `∫_u^∞ y^p π(dy)` for `p ∈ {0, 1, 2}`, computed independently of the
/// Lévy module.
pub fn levy_tail_oracle(m: &TemperedStableMeasure, u: f64, order: u32) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::domain("u", format!("must be positive, got {u}")));
    }
    if order > 2 {
        return Err(Error::domain("order", format!("must be 0, 1 or 2, got {order}")));
    }
    if m.lambda == 0.0 && order >= 1 {
        return Err(Error::domain("lambda", "tail moments of order ≥ 1 diverge when lambda = 0"));
    }
    let (c, l, a) = (m.c, m.lambda, m.alpha);
    let p = order as f64;
    Ok(exp_sinh(&|y: f64| c * (-l * y).exp() * y.powf(p - 1.0 - a), u))
}

/// `(∫_u^∞ y^p π(dy), ∫_0^u y^p π(dy))` for `p ∈ {1, 2}`.
pub fn levy_moment_oracle(m: &TemperedStableMeasure, u: f64, order: u32) -> Result<(f64, f64)> {
    if !(order == 1 || order == 2) {
        return Err(Error::domain("order", format!("must be 1 or 2, got {order}")));
    }
    let tail = if m.lambda == 0.0 { f64::INFINITY } else { levy_tail_oracle(m, u, order)? };
    let (c, l, a) = (m.c, m.lambda, m.alpha);
    let p = order as f64;
    let head = tanh_sinh(&|y: f64| c * (-l * y).exp() * y.powf(p - 1.0 - a), 0.0, u);
    Ok((tail, head))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn reference_measure() -> TemperedStableMeasure {
        TemperedStableMeasure::new(0.01, 1.0, 0.5).unwrap()
    }

    #[test]
    fn quadrature_rules() {
        assert!((tanh_sinh(&|x| x.sqrt(), 0.0, 1.0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((tanh_sinh(&|x| 1.0 / x.sqrt(), 0.0, 4.0) - 4.0).abs() < 1e-12);
        assert!((exp_sinh(&|x| (-x).exp(), 0.0) - 1.0).abs() < 1e-13);
        assert!((exp_sinh(&|x| x.powf(-1.5), 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stable_closed_forms() {
        let m = TemperedStableMeasure::new(0.01, 0.0, 0.5).unwrap();
        assert!((levy_tail_oracle(&m, 0.01, 0).unwrap() - 0.2).abs() < 1e-12);
        let (_, head) = levy_moment_oracle(&m, 1.0, 2).unwrap();
        assert!((head - 0.01 / 1.5).abs() < 1e-14);
        let (_, head1) = levy_moment_oracle(&m, 0.25, 1).unwrap();
        assert!((head1 - 0.01 * 0.5 / 0.5).abs() < 1e-14);
    }

    #[test]
    fn reference_values() {
        let m = reference_measure();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(levy_tail_oracle(&m, 0.01, 0).unwrap(), 0.166_547_596_303_336_74) < 1e-12);
        let (t1, _) = levy_moment_oracle(&m, 0.1, 1).unwrap();
        assert!(rel(t1, 0.011_604_624_847_937_442) < 1e-12);
        let (t2, h2) = levy_moment_oracle(&m, 0.1, 2).unwrap();
        assert!(rel(t2, 0.008_663_659_577_108_273) < 1e-12);
        assert!(rel(h2, 0.000_198_609_677_419_306_95) < 1e-12);
    }

    #[test]
    fn split_point_does_not_matter() {
        let m = reference_measure();
        let total = |u: f64| {
            let (t, h) = levy_moment_oracle(&m, u, 2).unwrap();
            t + h
        };
        assert!((total(0.05) - total(3.0)).abs() < 1e-13);
        let (t, h) = levy_moment_oracle(&m, 0.4, 1).unwrap();
        assert!((t + h - 0.017_724_538_509_055_16).abs() < 1e-13);
    }

    #[test]
    fn bad_orders() {
        let m = reference_measure();
        assert!(levy_moment_oracle(&m, 0.1, 0).is_err());
        assert!(levy_moment_oracle(&m, 0.1, 3).is_err());
        assert!(levy_tail_oracle(&m, 0.0, 1).is_err());
    }

    #[test]
    fn zero_strike_put_is_worthless() {
        let p = HestonParams::reference();
        let spec = AsianSpec {
            strike: 1.0,
            maturity: 1.0,
            kind: OptionKind::Put,
            rate: p.r,
        };
        let mut rng = stream_rng(1, 0);
        let est = cir_direct_stationary_price(&p, &spec, &[0.0], 50, 1e-3, &mut rng).unwrap();
        assert_eq!(est[0].value(), 0.0);
    }

    #[test]
    fn invariant_draws_have_gamma_moments() {
        let p = HestonParams::reference();
        let mut rng = stream_rng(2, 0);
        let acc = invariant_variance_sample(&p, 200_000, &mut rng).unwrap();
        let (mean, var) = p.invariant_moments();
        assert!((acc.value() - mean).abs() < 4.0 * acc.std_error());
        let sample_var = acc.std_error().powi(2) * (acc.n_paths as f64 - 1.0);
        assert!((sample_var / var - 1.0).abs() < 0.02);
    }

    #[test]
    fn degenerate_ou() {
        let sched = Schedule::polynomial(1.0, 1.0 / 3.0, 1.0, 1.0 / 3.0).unwrap();
        let mut rng = stream_rng(3, 0);
        let r = ou_stationary_check(0.0, sched, 1000, &mut rng).unwrap();
        assert_eq!(r.stats.mean[0], 0.0);
        assert_eq!(r.stats.variance[0], 0.0);
    }

    #[test]
    fn fine_step_must_be_fine() {
        let p = HestonParams::reference();
        let spec = AsianSpec {
            strike: 50.0,
            maturity: 1.0,
            kind: OptionKind::Call,
            rate: p.r,
        };
        let mut rng = stream_rng(1, 0);
        assert!(cir_direct_stationary_price(&p, &spec, &[50.0], 1, 0.01, &mut rng).is_err());
    }
}
