//! Heston model in its stationary form.
//!
//! The price is never simulated directly. The scheme runs the pair `(v, y)`
//! where `v` is the CIR variance and `y` solves `dy = −y dt + √v dW¹`; the
//! price on a window is then
//! `S_t = s0·exp(rt − ½∫v + ρΛ_t + √(1−ρ²) M_t)` with
//! `Λ_t = (v_t − v_0 − kθt + k∫v)/ς` and `M_t = y_t − y_0 + ∫y`.

use rand_distr::{Distribution, StandardNormal};

use super::path::{PricePathView, PriceSegment};
use crate::engine::{Driver, Window};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::schemes::{cir_reflected_step, ou_companion_step};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    pub s0: f64,
    pub r: f64,
    pub rho: f64,
    pub k: f64,
    pub theta: f64,
    pub sigma_v: f64,
    pub v_init: f64,
    pub y_init: f64,
}

impl HestonParams {
    /// Starts the scheme at `v = θ`, `y = 0`.
    pub fn new(s0: f64, r: f64, rho: f64, k: f64, theta: f64, sigma_v: f64) -> Result<Self> {
        let p = HestonParams {
            s0,
            r,
            rho,
            k,
            theta,
            sigma_v,
            v_init: theta,
            y_init: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// `s0=50, r=0.05, ρ=0.5, k=2, θ=0.01, ς=0.1`.
    pub fn reference() -> Self {
        HestonParams::new(50.0, 0.05, 0.5, 2.0, 0.01, 0.1).expect("valid parameters")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::domain("s0", format!("must be positive, got {}", self.s0)));
        }
        if !self.r.is_finite() {
            return Err(Error::domain("r", "must be finite"));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::domain("rho", format!("must lie in [-1, 1], got {}", self.rho)));
        }
        for (name, v) in [("k", self.k), ("theta", self.theta), ("sigma_v", self.sigma_v)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(name, format!("must be positive, got {v}")));
            }
        }
        if 2.0 * self.k * self.theta <= self.sigma_v * self.sigma_v {
            return Err(Error::domain(
                "sigma_v",
                format!("2kθ = {} must exceed ς² = {}", 2.0 * self.k * self.theta, self.sigma_v * self.sigma_v),
            ));
        }
        if !(self.v_init >= 0.0 && self.v_init.is_finite()) {
            return Err(Error::domain("v_init", format!("must be non-negative, got {}", self.v_init)));
        }
        if !self.y_init.is_finite() {
            return Err(Error::domain("y_init", "must be finite"));
        }
        Ok(())
    }

    /// Whether `2kθ/ς² > 1 + 2√6/ς`, the sufficient condition for the
    /// scheme's convergence. The reference parameters fail it.
    pub fn sufficient_condition_holds(&self) -> bool {
        let s2 = self.sigma_v * self.sigma_v;
        2.0 * self.k * self.theta / s2 > 1.0 + 2.0 * 6f64.sqrt() / self.sigma_v
    }

    /// Gamma invariant law of `v` as `(shape, rate)`: `2kθ/ς²` and `2k/ς²`.
    pub fn invariant_gamma(&self) -> (f64, f64) {
        let s2 = self.sigma_v * self.sigma_v;
        (2.0 * self.k * self.theta / s2, 2.0 * self.k / s2)
    }

    /// Mean and variance of the invariant law of `v`.
    pub fn invariant_moments(&self) -> (f64, f64) {
        (self.theta, self.theta * self.sigma_v * self.sigma_v / (2.0 * self.k))
    }
}

/// One step of `(v, y)` from explicit increments `dW¹` (for `y`) and `dW²`
/// (for `v`), both of variance `γ`.
pub fn heston_step_with_increments(state: &[f64; 2], gamma: f64, params: &HestonParams, dw1: f64, dw2: f64) -> [f64; 2] {
    let [v, y] = *state;
    [
        cir_reflected_step(v, gamma, params.k, params.theta, params.sigma_v, dw2),
        ou_companion_step(y, gamma, v, dw1),
    ]
}

/// One step of `(v, y)` with fresh independent increments; `dW²` is drawn
/// first.
pub fn heston_joint_step(state: &[f64; 2], gamma: f64, params: &HestonParams, rng: &mut SimRng) -> [f64; 2] {
    let sd = gamma.sqrt();
    let z2: f64 = StandardNormal.sample(rng);
    let z1: f64 = StandardNormal.sample(rng);
    heston_step_with_increments(state, gamma, params, sd * z1, sd * z2)
}

pub struct HestonDriver {
    params: HestonParams,
    rng: SimRng,
}

impl HestonDriver {
    pub fn new(params: HestonParams, rng: SimRng) -> Result<Self> {
        params.validate()?;
        Ok(HestonDriver { params, rng })
    }
}

impl Driver<2> for HestonDriver {
    fn step(&mut self, state: &[f64; 2], _index: usize, step: f64) -> Result<[f64; 2]> {
        Ok(heston_joint_step(state, step, &self.params, &mut self.rng))
    }
}

/// Price path of a window of `(v, y)`.
///
/// On each constant piece of the scheme, `log S` is affine in time, so the
/// pieces are stored exactly and the time average needs no further
/// discretization.
pub fn heston_price_path(window: &Window<'_, 2>, params: &HestonParams, out: &mut PricePathView) -> Result<()> {
    window.check_covers()?;
    let horizon = window.horizon();
    out.reset(horizon);
    let HestonParams {
        s0, r, rho, k, theta, sigma_v, ..
    } = *params;
    let rho_bar = (1.0 - rho * rho).max(0.0).sqrt();
    let [v0, y0] = *window.start_state();
    let log_s0 = s0.ln();
    let (mut int_v, mut int_y) = (0.0, 0.0);
    for seg in window.segments() {
        let [v, y] = *seg.state;
        let t = seg.offset;
        let lambda = (v - v0 - k * theta * t + k * int_v) / sigma_v;
        let m = y - y0 + int_y;
        out.push(PriceSegment {
            offset: t,
            length: seg.length,
            log_start: log_s0 + r * t - 0.5 * int_v + rho * lambda + rho_bar * m,
            slope: r - 0.5 * v + rho * k * (v - theta) / sigma_v + rho_bar * y,
        });
        int_v += v * seg.length;
        int_y += y * seg.length;
    }
    Ok(())
}
