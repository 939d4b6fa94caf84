//! One-step kernels of the decreasing-step Euler discretizations.

use crate::error::{Error, Result};

/// Coefficients of `dX = b(X)dt + σ(X)dW + κ(X)dZ` with `X ∈ ℝ^D` and
/// `L`-dimensional drivers.
pub struct EulerCoefficients<'a, const D: usize, const L: usize> {
    pub drift: &'a dyn Fn(&[f64; D]) -> [f64; D],
    pub diffusion: &'a dyn Fn(&[f64; D]) -> [[f64; L]; D],
    pub jump: &'a dyn Fn(&[f64; D]) -> [[f64; L]; D],
}

/// Innovations of one step: `U ~ N(0, I_L)` and an independent jump
/// increment `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDraw<const L: usize> {
    pub gaussian: [f64; L],
    pub jump: [f64; L],
}

fn check_finite<const D: usize, const L: usize>(m: &[[f64; L]; D], coefficient: &'static str) -> Result<()> {
    if m.iter().flatten().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteCoefficient { coefficient })
    }
}

/// `x + γ b(x) + √γ σ(x) U + κ(x) ξ`.
pub fn levy_euler_step<const D: usize, const L: usize>(
    x: &[f64; D],
    gamma: f64,
    coeffs: &EulerCoefficients<'_, D, L>,
    noise: &NoiseDraw<L>,
) -> Result<[f64; D]> {
    let b = (coeffs.drift)(x);
    check_finite(&[b], "drift")?;
    let sigma = (coeffs.diffusion)(x);
    check_finite(&sigma, "diffusion")?;
    let kappa = (coeffs.jump)(x);
    check_finite(&kappa, "jump")?;

    let sqrt_gamma = gamma.sqrt();
    let mut next = *x;
    for i in 0..D {
        let brownian: f64 = sigma[i].iter().zip(&noise.gaussian).map(|(s, u)| s * u).sum();
        let jump: f64 = kappa[i].iter().zip(&noise.jump).map(|(k, z)| k * z).sum();
        next[i] += gamma * b[i] + sqrt_gamma * brownian + jump;
    }
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteCoefficient { coefficient: "state" })
    }
}

/// Reflected Euler step for the CIR variance:
/// `|v + kγ(θ − v) + σ_v √v ΔW|`, with `ΔW ~ N(0, γ)`.
pub fn cir_reflected_step(v: f64, gamma: f64, k: f64, theta: f64, sigma_v: f64, dw: f64) -> f64 {
    (v + k * gamma * (theta - v) + sigma_v * v.max(0.0).sqrt() * dw).abs()
}

/// Euler step for the companion process `dy = −y dt + √v dW¹`.
pub fn ou_companion_step(y: f64, gamma: f64, v: f64, dw1: f64) -> f64 {
    y - gamma * y + v.max(0.0).sqrt() * dw1
}
