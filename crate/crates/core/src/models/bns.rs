//! Barndorff-Nielsen–Shephard model driven by a tempered-stable subordinator.
//!
//! `dX = (r − v/2)dt + √v dW + ρ dZ`, `dv = −μv dt + dZ`, `S = s0·e^X`. The
//! log-price is not stationary but its increments are, so every window is
//! re-based to start at `S = s0`.

use rand_distr::{Distribution, StandardNormal};

use super::path::{PricePathView, PriceSegment};
use crate::engine::{Driver, Window};
use crate::error::{Error, Result};
use crate::levy::{JumpSampler, JumpScheme, TemperedStableMeasure, TruncationPolicy};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnsParams {
    pub s0: f64,
    pub r: f64,
    /// Leverage, `ρ ≤ 0`.
    pub rho: f64,
    pub mu: f64,
    pub jump: TemperedStableMeasure,
    pub x_init: f64,
    pub v_init: f64,
    pub truncation: TruncationPolicy,
    /// Subtract the mean of the retained jumps. Off by default so that `Z`
    /// stays a driftless subordinator and `v` stays non-negative.
    pub compensate: bool,
}

impl BnsParams {
    /// Starts at `x = 0` and `v` at its stationary mean, truncating jumps
    /// below `u_n = γ_n^{1/(1−α)}`.
    pub fn new(s0: f64, r: f64, rho: f64, mu: f64, jump: TemperedStableMeasure) -> Result<Self> {
        let mut p = BnsParams {
            s0,
            r,
            rho,
            mu,
            jump,
            x_init: 0.0,
            v_init: 0.0,
            truncation: TruncationPolicy::bias_matched(jump.alpha),
            compensate: false,
        };
        p.validate()?;
        p.v_init = p.stationary_mean_v();
        Ok(p)
    }

    /// `s0=50, r=0.05, ρ=−1, μ=1` with `c=0.01, λ=1, α=1/2`.
    pub fn reference() -> Self {
        let jump = TemperedStableMeasure::new(0.01, 1.0, 0.5).expect("valid measure");
        BnsParams::new(50.0, 0.05, -1.0, 1.0, jump).expect("valid parameters")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::domain("s0", format!("must be positive, got {}", self.s0)));
        }
        if !self.r.is_finite() {
            return Err(Error::domain("r", "must be finite"));
        }
        if !(self.rho <= 0.0 && self.rho.is_finite()) {
            return Err(Error::domain("rho", format!("must be non-positive, got {}", self.rho)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::domain("mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.jump.lambda > 0.0) {
            return Err(Error::domain("lambda", "the subordinator needs a positive tempering rate"));
        }
        if !(self.v_init >= 0.0 && self.v_init.is_finite()) {
            return Err(Error::domain("v_init", format!("must be non-negative, got {}", self.v_init)));
        }
        if !self.x_init.is_finite() {
            return Err(Error::domain("x_init", "must be finite"));
        }
        self.truncation.validate()
    }

    /// `E[v] = E[Z_1]/μ = c Γ(1−α) λ^{α−1}/μ` under the stationary law.
    pub fn stationary_mean_v(&self) -> f64 {
        let m = &self.jump;
        m.c * statrs::function::gamma::gamma(1.0 - m.alpha) * m.lambda.powf(m.alpha - 1.0) / self.mu
    }
}

/// One step from explicit innovations: `dw ~ N(0, γ)` and a subordinator
/// increment `dz` shared by both equations.
pub fn bns_step_with_increments(state: &[f64; 2], gamma: f64, params: &BnsParams, dw: f64, dz: f64) -> [f64; 2] {
    let [x, v] = *state;
    [
        x + gamma * (params.r - 0.5 * v) + v.max(0.0).sqrt() * dw + params.rho * dz,
        v - gamma * params.mu * v + dz,
    ]
}

/// One step with a fresh Gaussian (drawn first) and one truncated jump
/// increment at threshold `u_n` for step `index`.
pub fn bns_joint_step(state: &[f64; 2], index: usize, gamma: f64, params: &BnsParams, sampler: &mut JumpSampler, rng: &mut SimRng) -> Result<[f64; 2]> {
    let z: f64 = StandardNormal.sample(rng);
    let u = params.truncation.threshold(index, gamma);
    let dz = sampler.increment(u, gamma, rng)?;
    Ok(bns_step_with_increments(state, gamma, params, gamma.sqrt() * z, dz))
}

pub struct BnsDriver {
    params: BnsParams,
    sampler: JumpSampler,
    rng: SimRng,
}

impl BnsDriver {
    pub fn new(params: BnsParams, rng: SimRng) -> Result<Self> {
        params.validate()?;
        Ok(BnsDriver {
            params,
            sampler: JumpSampler::new(params.jump, JumpScheme::Truncated, params.compensate),
            rng,
        })
    }
}

impl Driver<2> for BnsDriver {
    fn step(&mut self, state: &[f64; 2], index: usize, step: f64) -> Result<[f64; 2]> {
        bns_joint_step(state, index, step, &self.params, &mut self.sampler, &mut self.rng)
    }
}

/// Stepwise price path `S = s0·exp(X − X_0)` of a window of `(x, v)`.
pub fn bns_price_path(window: &Window<'_, 2>, params: &BnsParams, out: &mut PricePathView) -> Result<()> {
    window.check_covers()?;
    out.reset(window.horizon());
    let x0 = window.start_state()[0];
    let log_s0 = params.s0.ln();
    for seg in window.segments() {
        out.push(PriceSegment {
            offset: seg.offset,
            length: seg.length,
            log_start: log_s0 + (seg.state[0] - x0),
            slope: 0.0,
        });
    }
    Ok(())
}
