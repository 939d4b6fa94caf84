//! Asian and European prices from the ergodic engine, call–put parity, and
//! Black–Scholes inversion.

use statrs::function::erf::erfc;

use crate::engine::{ErgodicEngine, RunOptions, Window, WindowFunctional};
use crate::error::{Error, Result};
use crate::models::{expm1_ratio, PriceModel, PricePathView};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn other(self) -> Self {
        match self {
            OptionKind::Call => OptionKind::Put,
            OptionKind::Put => OptionKind::Call,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsianSpec {
    pub strike: f64,
    pub maturity: f64,
    pub kind: OptionKind,
    pub rate: f64,
}

impl AsianSpec {
    pub fn new(strike: f64, maturity: f64, kind: OptionKind, rate: f64) -> Result<Self> {
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::domain("strike", format!("must be positive, got {strike}")));
        }
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::domain("maturity", format!("must be positive, got {maturity}")));
        }
        if !rate.is_finite() {
            return Err(Error::domain("rate", "must be finite"));
        }
        Ok(AsianSpec { strike, maturity, kind, rate })
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }
}

fn vanilla(kind: OptionKind, discount: f64, underlying: f64, strike: f64) -> f64 {
    match kind {
        OptionKind::Call => discount * (underlying - strike).max(0.0),
        OptionKind::Put => discount * (strike - underlying).max(0.0),
    }
}

/// `e^{−rT}(A − K)₊` or `e^{−rT}(K − A)₊` with `A` the time average of `S`
/// over `[0, T]`.
pub fn asian_payoff(path: &PricePathView, spec: &AsianSpec) -> f64 {
    vanilla(spec.kind, spec.discount(), path.time_average(), spec.strike)
}

/// `e^{−rT}(S_T − K)₊` or the put analogue.
pub fn european_payoff(path: &PricePathView, spec: &AsianSpec) -> f64 {
    vanilla(spec.kind, spec.discount(), path.terminal(), spec.strike)
}

/// `C − P = (s0/(rT))(1 − e^{−rT}) − K e^{−rT}`, with the `r → 0` limit
/// `s0 − K`.
pub fn parity_rhs(s0: f64, r: f64, maturity: f64, strike: f64) -> f64 {
    parity_rhs_with_growth(s0, r, r, maturity, strike)
}

/// `C − P = e^{−rT}(E[A] − K)` when the forward grows at `g`, i.e.
/// `E[A] = s0(e^{gT} − 1)/(gT)`.
pub fn parity_rhs_with_growth(s0: f64, r: f64, growth: f64, maturity: f64, strike: f64) -> f64 {
    (-r * maturity).exp() * (forward_average(s0, growth, maturity) - strike)
}

/// `s0(e^{gT} − 1)/(gT)`.
pub fn forward_average(s0: f64, growth: f64, maturity: f64) -> f64 {
    s0 * expm1_ratio(growth * maturity)
}

/// Which leg the parity-reduced estimator simulates: the put when the
/// strike is at or below the forward average, the call otherwise.
pub fn parity_leg(s0: f64, growth: f64, maturity: f64, strike: f64) -> OptionKind {
    if strike <= forward_average(s0, growth, maturity) {
        OptionKind::Put
    } else {
        OptionKind::Call
    }
}

/// One priced strike.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceEstimate {
    pub strike: f64,
    pub kind: OptionKind,
    /// Reported price: the direct estimate, or the simulated leg shifted by
    /// the parity relation.
    pub value: f64,
    /// Batch-means standard error of the simulated leg.
    pub std_error: f64,
    pub n: usize,
    pub checkpoints: Vec<(usize, f64)>,
    /// The simulated leg when parity was used.
    pub companion: Option<f64>,
    /// Direct call and put estimates on the same windows.
    pub call: f64,
    pub put: f64,
}

/// Result of pricing a strike grid on one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEstimate {
    pub maturity: f64,
    pub prices: Vec<PriceEstimate>,
    /// Weighted average of `A` (or `S_T`) over the same windows.
    pub mean_underlying: f64,
}

impl GridEstimate {
    /// Largest relative gap between `C − P` and `e^{−rT}(mean underlying − K)`
    /// over the grid. Exact up to rounding because every strike sees the
    /// same windows.
    pub fn parity_gap(&self, rate: f64) -> f64 {
        let df = (-rate * self.maturity).exp();
        self.prices
            .iter()
            .map(|p| {
                let lhs = p.call - p.put;
                let rhs = df * (self.mean_underlying - p.strike);
                (lhs - rhs).abs() / rhs.abs().max(p.call.abs()).max(p.put.abs()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payoff {
    Asian,
    European,
}

/// Outputs `[U, call(K_1), put(K_1), …]` with `U` the time average or the
/// terminal value.
struct GridFunctional<'a, M: PriceModel> {
    model: &'a M,
    payoff: Payoff,
    strikes: &'a [f64],
    discount: f64,
    path: PricePathView,
    error: Option<Error>,
}

impl<M: PriceModel> WindowFunctional<2> for GridFunctional<'_, M> {
    fn arity(&self) -> usize {
        1 + 2 * self.strikes.len()
    }

    fn evaluate(&mut self, window: &Window<'_, 2>, out: &mut [f64]) {
        if let Err(e) = self.model.price_path(window, &mut self.path) {
            self.error.get_or_insert(e);
            out.fill(f64::NAN);
            return;
        }
        let u = match self.payoff {
            Payoff::Asian => self.path.time_average(),
            Payoff::European => self.path.terminal(),
        };
        out[0] = u;
        for (j, &k) in self.strikes.iter().enumerate() {
            out[1 + 2 * j] = vanilla(OptionKind::Call, self.discount, u, k);
            out[2 + 2 * j] = vanilla(OptionKind::Put, self.discount, u, k);
        }
    }
}

/// How the grid pricer reports each strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRequest<'a> {
    pub strikes: &'a [f64],
    pub maturity: f64,
    pub kind: OptionKind,
    pub payoff: Payoff,
    pub use_parity: bool,
}

/// Price every strike of `request` on a single ergodic trajectory of
/// `model` driven by `driver`.
pub fn price_grid<M: PriceModel>(model: &M, driver: &mut M::Driver, schedule: Schedule, request: &GridRequest<'_>, n_iters: usize) -> Result<GridEstimate> {
    let maturity = request.maturity;
    if !(maturity > 0.0 && maturity.is_finite()) {
        return Err(Error::domain("maturity", format!("must be positive, got {maturity}")));
    }
    if let Some(&k) = request.strikes.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::domain("strike", format!("must be positive, got {k}")));
    }
    if n_iters == 0 {
        return Err(Error::domain("n_iters", "must be at least 1"));
    }
    let rate = model.rate();
    let discount = (-rate * maturity).exp();
    let mut functional = GridFunctional {
        model,
        payoff: request.payoff,
        strikes: request.strikes,
        discount,
        path: PricePathView::new(maturity),
        error: None,
    };
    let mut engine = ErgodicEngine::new(schedule, model.initial_state(), maturity)?;
    let summary = engine.run(driver, &mut functional, n_iters, RunOptions::default())?;
    if let Some(e) = functional.error {
        return Err(e);
    }

    // Parity shifts use the model's forward, which is exact for the Asian
    // payoff and for the terminal value alike.
    let growth = model.forward_growth();
    let s0 = model.s0();
    let prices = request
        .strikes
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let col = |kind: OptionKind| match kind {
                OptionKind::Call => 1 + 2 * j,
                OptionKind::Put => 2 + 2 * j,
            };
            let (leg, shift) = if request.use_parity {
                let rhs = match request.payoff {
                    Payoff::Asian => parity_rhs_with_growth(s0, rate, growth, maturity, k),
                    Payoff::European => discount * (s0 * (growth * maturity).exp() - k),
                };
                let leg = match request.payoff {
                    Payoff::Asian => parity_leg(s0, growth, maturity, k),
                    Payoff::European => {
                        if k <= s0 * (growth * maturity).exp() {
                            OptionKind::Put
                        } else {
                            OptionKind::Call
                        }
                    }
                };
                // C = P + rhs, P = C − rhs.
                let shift = match (leg, request.kind) {
                    (OptionKind::Put, OptionKind::Call) => rhs,
                    (OptionKind::Call, OptionKind::Put) => -rhs,
                    _ => 0.0,
                };
                (leg, shift)
            } else {
                (request.kind, 0.0)
            };
            let c = col(leg);
            PriceEstimate {
                strike: k,
                kind: request.kind,
                value: summary.estimates[c].value + shift,
                std_error: summary.std_errors[c],
                n: summary.n,
                checkpoints: summary.checkpoints.iter().map(|cp| (cp.n, cp.values[c] + shift)).collect(),
                companion: request.use_parity.then_some(summary.estimates[c].value),
                call: summary.estimates[col(OptionKind::Call)].value,
                put: summary.estimates[col(OptionKind::Put)].value,
            }
        })
        .collect();
    Ok(GridEstimate {
        maturity,
        prices,
        mean_underlying: summary.estimates[0].value,
    })
}

/// Single-strike Asian price.
pub fn price_asian<M: PriceModel>(
    model: &M,
    driver: &mut M::Driver,
    schedule: Schedule,
    spec: &AsianSpec,
    n_iters: usize,
    use_parity: bool,
) -> Result<PriceEstimate> {
    check_rate(model, spec)?;
    let strikes = [spec.strike];
    let request = GridRequest {
        strikes: &strikes,
        maturity: spec.maturity,
        kind: spec.kind,
        payoff: Payoff::Asian,
        use_parity,
    };
    Ok(price_grid(model, driver, schedule, &request, n_iters)?.prices.remove(0))
}

/// Single-strike European price, estimated directly.
pub fn price_european<M: PriceModel>(model: &M, driver: &mut M::Driver, schedule: Schedule, spec: &AsianSpec, n_iters: usize) -> Result<PriceEstimate> {
    check_rate(model, spec)?;
    let strikes = [spec.strike];
    let request = GridRequest {
        strikes: &strikes,
        maturity: spec.maturity,
        kind: spec.kind,
        payoff: Payoff::European,
        use_parity: false,
    };
    Ok(price_grid(model, driver, schedule, &request, n_iters)?.prices.remove(0))
}

fn check_rate<M: PriceModel>(model: &M, spec: &AsianSpec) -> Result<()> {
    if spec.rate != model.rate() {
        return Err(Error::domain(
            "rate",
            format!("spec rate {} differs from model rate {}", spec.rate, model.rate()),
        ));
    }
    Ok(())
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Black–Scholes call; `σ = 0` gives the discounted intrinsic value.
pub fn bs_call(s0: f64, strike: f64, maturity: f64, r: f64, sigma: f64) -> f64 {
    let df = (-r * maturity).exp();
    let sd = sigma * maturity.sqrt();
    if sd <= 0.0 {
        return (s0 - strike * df).max(0.0);
    }
    let d1 = ((s0 / strike).ln() + r * maturity) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    s0 * norm_cdf(d1) - strike * df * norm_cdf(d2)
}

fn bs_vega(s0: f64, strike: f64, maturity: f64, r: f64, sigma: f64) -> f64 {
    let sd = sigma * maturity.sqrt();
    let d1 = ((s0 / strike).ln() + r * maturity) / sd + 0.5 * sd;
    s0 * maturity.sqrt() * (-0.5 * d1 * d1).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Black–Scholes volatility reproducing a call `price`.
///
/// Newton from `σ = 0.2`; if that fails to converge within 50 iterations or
/// leaves the admissible range, bisection on `[1e−6, 5]`, with the upper end
/// doubled while it still prices below the target.
pub fn implied_vol(price: f64, s0: f64, strike: f64, maturity: f64, r: f64) -> Result<f64> {
    let lower = (s0 - strike * (-r * maturity).exp()).max(0.0);
    let upper = s0;
    if !(price > lower && price < upper) {
        return Err(Error::BandViolation { price, lower, upper });
    }
    let f = |sigma: f64| bs_call(s0, strike, maturity, r, sigma) - price;

    // Both stages stop on the change in σ rather than on the price residual,
    // which is too flat to pin σ down when vega is small.
    let mut sigma = 0.2;
    for _ in 0..50 {
        let diff = f(sigma);
        if diff == 0.0 {
            return Ok(sigma);
        }
        let next = sigma - diff / bs_vega(s0, strike, maturity, r, sigma);
        if !(next.is_finite() && next > 0.0) {
            break;
        }
        if (next - sigma).abs() <= 1e-14 * next {
            return Ok(next);
        }
        sigma = next;
    }

    let mut lo = 1e-6;
    let mut hi = 5.0;
    while f(lo) > 0.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::BandViolation { price, lower, upper });
        }
    }
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        let diff = f(mid);
        if diff == 0.0 {
            return Ok(mid);
        }
        if diff < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
