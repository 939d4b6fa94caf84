//! Tempered-stable subordinator: Lévy measure moments and the truncated
//! (compound Poisson) and Wienerized increment samplers.
//!
//! The Lévy measure is `π(dy) = 1_{y>0} c e^{−λy} y^{−1−α} dy` with
//! `α ∈ (0,1)`. Increments of the subordinator cannot be drawn exactly, so
//! a step of length `γ` keeps only jumps above a threshold `u` (a compound
//! Poisson sum with rate `γ Λ(u)`) and optionally replaces the discarded small
//! jumps by a Gaussian of matching variance.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate};

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperedStableMeasure {
    pub c: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl TemperedStableMeasure {
    /// `λ = 0` is accepted; it turns the measure into a pure stable one,
    /// whose first and second tail moments diverge.
    pub fn new(c: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain("c", format!("must be positive, got {c}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain("lambda", format!("must be non-negative, got {lambda}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain("alpha", format!("must lie in (0,1), got {alpha}")));
        }
        Ok(TemperedStableMeasure { c, lambda, alpha })
    }

    /// Lévy density at `y > 0`.
    pub fn density(&self, y: f64) -> f64 {
        self.c * (-self.lambda * y).exp() * y.powf(-1.0 - self.alpha)
    }

    /// `∫_u^∞ y^p π(dy)` for `p ∈ {0, 1, 2}`.
    ///
    /// With `y = u w^{−1/α}` the integral becomes
    /// `(c u^{p−α}/α) ∫_0^1 w^{−p/α} e^{−λ u w^{−1/α}} dw`, whose integrand
    /// is bounded and vanishes at `w = 0` when `λ > 0`.
    pub fn tail_moment(&self, u: f64, p: u32) -> Result<f64> {
        check_threshold(u)?;
        if p > 2 {
            return Err(Error::domain("order", format!("must be 0, 1 or 2, got {p}")));
        }
        let (c, lambda, alpha) = (self.c, self.lambda, self.alpha);
        let scale = c * u.powf(p as f64 - alpha) / alpha;
        if lambda == 0.0 {
            return if p == 0 {
                Ok(scale)
            } else {
                Err(Error::domain("lambda", "tail moments of order ≥ 1 diverge when lambda = 0"))
            };
        }
        let lu = lambda * u;
        let inv_alpha = 1.0 / alpha;
        let pa = p as f64 * inv_alpha;
        let integral = integrate(
            |w| {
                if w <= 0.0 {
                    return 0.0;
                }
                let y_over_u = w.powf(-inv_alpha);
                (-lu * y_over_u).exp() * w.powf(-pa)
            },
            0.0,
            1.0,
            QUAD_TOL,
        );
        Ok(scale * integral)
    }

    /// `∫_0^u y^p π(dy)` for `p ∈ {1, 2}`.
    ///
    /// With `y = u s^{1/(p−α)}` the integral becomes
    /// `(c u^{p−α}/(p−α)) ∫_0^1 e^{−λ u s^{1/(p−α)}} ds`.
    pub fn head_moment(&self, u: f64, p: u32) -> Result<f64> {
        check_threshold(u)?;
        if !(p == 1 || p == 2) {
            return Err(Error::domain("order", format!("must be 1 or 2, got {p}")));
        }
        let q = p as f64 - self.alpha;
        let scale = self.c * u.powf(q) / q;
        if self.lambda == 0.0 {
            return Ok(scale);
        }
        let lu = self.lambda * u;
        let inv_q = 1.0 / q;
        Ok(scale * integrate(|s| (-lu * s.powf(inv_q)).exp(), 0.0, 1.0, QUAD_TOL))
    }

    /// `Λ(u) = π((u, ∞))`, the arrival rate of jumps above `u`.
    pub fn tail_intensity(&self, u: f64) -> Result<f64> {
        self.tail_moment(u, 0)
    }

    /// `∫_0^u y² π(dy)`, the variance rate of the jumps below `u`.
    pub fn small_jump_variance(&self, u: f64) -> Result<f64> {
        self.head_moment(u, 2)
    }

    /// `∫_0^∞ (e^{ρy} − 1) π(dy)` for `ρ ≤ 0`, i.e. `log E[e^{ρ Z_1}]`.
    pub fn log_laplace(&self, rho: f64) -> f64 {
        assert!(rho <= 0.0, "log_laplace needs rho ≤ 0");
        let (c, l, a) = (self.c, self.lambda, self.alpha);
        // c Γ(−α) ((λ−ρ)^α − λ^α), with Γ(−α) = −Γ(1−α)/α.
        let gamma_neg = -statrs::function::gamma::gamma(1.0 - a) / a;
        c * gamma_neg * ((l - rho).powf(a) - l.powf(a))
    }
}

fn check_threshold(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("u", format!("threshold must be positive, got {u}")))
    }
}

/// Draw from `π` restricted to `(u, ∞)`: Pareto proposals
/// `α u^α y^{−1−α}` accepted with probability `e^{−λ(y−u)}`.
pub fn sample_jump_above<R: Rng + ?Sized>(m: &TemperedStableMeasure, u: f64, rng: &mut R) -> f64 {
    let inv_alpha = 1.0 / m.alpha;
    loop {
        // 1 − U lies in (0, 1], keeping the proposal finite.
        let uniform: f64 = 1.0 - rng.random::<f64>();
        let y = u * uniform.powf(-inv_alpha);
        if m.lambda == 0.0 || rng.random::<f64>() < (-m.lambda * (y - u)).exp() {
            return y;
        }
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}

fn sum_of_jumps<R: Rng + ?Sized>(m: &TemperedStableMeasure, u: f64, count: u64, rng: &mut R) -> f64 {
    (0..count).map(|_| sample_jump_above(m, u, rng)).sum()
}

/// Increment over a step `γ` of the jumps above `u`, minus `γ ∫_{y>u} y π(dy)`
/// when `compensate` is set.
pub fn compound_poisson_increment<R: Rng + ?Sized>(m: &TemperedStableMeasure, u: f64, gamma: f64, compensate: bool, rng: &mut R) -> Result<f64> {
    let rate = m.tail_intensity(u)?;
    let count = poisson_count(gamma * rate, rng);
    let mut z = sum_of_jumps(m, u, count, rng);
    if compensate {
        z -= gamma * m.tail_moment(u, 1)?;
    }
    Ok(z)
}

/// [`compound_poisson_increment`] plus `√γ · (∫_0^u y² π(dy))^{1/2} · N(0,1)`.
pub fn wienerized_increment<R: Rng + ?Sized>(m: &TemperedStableMeasure, u: f64, gamma: f64, compensate: bool, rng: &mut R) -> Result<f64> {
    let z = compound_poisson_increment(m, u, gamma, compensate, rng)?;
    let sd = (gamma * m.small_jump_variance(u)?).sqrt();
    let g: f64 = StandardNormal.sample(rng);
    Ok(z + sd * g)
}

/// Rule for the jump threshold `u_n` used at step `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    /// `u_n = γ_n`.
    MatchStep,
    /// `u_n = γ_n^exponent`.
    StepPower { exponent: f64 },
    /// `u_n = scale · n^{−exponent}`.
    Power { scale: f64, exponent: f64 },
}

impl TruncationPolicy {
    /// `u_n = γ_n^{1/(1−α)}`. The mean of the discarded jumps per unit time
    /// is of order `u^{1−α}`, so this keeps the truncation bias at the
    /// order `γ_n` of the Euler step itself, while the expected number of
    /// retained jumps per step stays bounded when `α ≤ 1/2`.
    pub fn bias_matched(alpha: f64) -> Self {
        TruncationPolicy::StepPower { exponent: 1.0 / (1.0 - alpha) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TruncationPolicy::MatchStep => Ok(()),
            TruncationPolicy::StepPower { exponent } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::domain("truncation_exponent", format!("must be positive, got {exponent}")));
                }
                Ok(())
            }
            TruncationPolicy::Power { scale, exponent } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::domain("truncation_scale", format!("must be positive, got {scale}")));
                }
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::domain("truncation_exponent", format!("must be positive, got {exponent}")));
                }
                Ok(())
            }
        }
    }

    pub fn threshold(&self, n: usize, step: f64) -> f64 {
        match *self {
            TruncationPolicy::MatchStep => step,
            TruncationPolicy::StepPower { exponent } => step.powf(exponent),
            TruncationPolicy::Power { scale, exponent } => scale * (n.max(1) as f64).powf(-exponent),
        }
    }
}

/// Which approximate increment to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpScheme {
    /// Jumps above the threshold only.
    Truncated,
    /// Truncated jumps plus a Gaussian for the small ones.
    Wienerized,
}

/// Measure moments at the current threshold, kept up to date as the
/// threshold moves slowly downwards.
#[derive(Debug, Clone, Copy)]
struct ThresholdMoments {
    u: f64,
    rate: f64,
    tail_mean: f64,
    head_variance: f64,
    updates: u32,
}

/// Step-by-step sampler of approximate subordinator increments.
///
/// Thresholds normally shrink by a factor close to one between steps, so the
/// rate and moments are updated by integrating the density over the thin
/// slice between the old and new threshold. Large moves, and every few
/// thousand updates, fall back to the full quadrature.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    measure: TemperedStableMeasure,
    scheme: JumpScheme,
    compensate: bool,
    moments: Option<ThresholdMoments>,
}

impl JumpSampler {
    pub fn new(measure: TemperedStableMeasure, scheme: JumpScheme, compensate: bool) -> Self {
        JumpSampler {
            measure,
            scheme,
            compensate,
            moments: None,
        }
    }

    pub fn measure(&self) -> &TemperedStableMeasure {
        &self.measure
    }

    fn full(&self, u: f64) -> Result<ThresholdMoments> {
        let m = &self.measure;
        Ok(ThresholdMoments {
            u,
            rate: m.tail_intensity(u)?,
            tail_mean: if self.compensate { m.tail_moment(u, 1)? } else { 0.0 },
            head_variance: if self.scheme == JumpScheme::Wienerized {
                m.small_jump_variance(u)?
            } else {
                0.0
            },
            updates: 0,
        })
    }

    fn moments_at(&mut self, u: f64) -> Result<ThresholdMoments> {
        const REFRESH_EVERY: u32 = 4096;
        let next = match self.moments {
            Some(cur) if cur.u == u => cur,
            Some(cur) if cur.updates < REFRESH_EVERY && u < cur.u && u > 0.8 * cur.u => {
                let m = self.measure;
                let slice = |p: i32| gauss_legendre(|y| y.powi(p) * m.density(y), u, cur.u);
                ThresholdMoments {
                    u,
                    rate: cur.rate + slice(0),
                    tail_mean: if self.compensate { cur.tail_mean + slice(1) } else { 0.0 },
                    head_variance: if self.scheme == JumpScheme::Wienerized {
                        cur.head_variance - slice(2)
                    } else {
                        0.0
                    },
                    updates: cur.updates + 1,
                }
            }
            _ => {
                check_threshold(u)?;
                self.full(u)?
            }
        };
        self.moments = Some(next);
        Ok(next)
    }

    /// Approximate increment over a step `γ` with threshold `u`.
    pub fn increment<R: Rng + ?Sized>(&mut self, u: f64, gamma: f64, rng: &mut R) -> Result<f64> {
        let mom = self.moments_at(u)?;
        let count = poisson_count(gamma * mom.rate, rng);
        let mut z = sum_of_jumps(&self.measure, u, count, rng);
        if self.compensate {
            z -= gamma * mom.tail_mean;
        }
        if self.scheme == JumpScheme::Wienerized {
            let g: f64 = StandardNormal.sample(rng);
            z += (gamma * mom.head_variance.max(0.0)).sqrt() * g;
        }
        Ok(z)
    }

    /// Current threshold moments `(Λ(u), ∫_{y>u} y π, ∫_{y≤u} y² π)`; the last
    /// two read zero when the sampler does not need them.
    pub fn cached_moments(&self) -> Option<(f64, f64, f64, f64)> {
        self.moments.map(|m| (m.u, m.rate, m.tail_mean, m.head_variance))
    }
}
