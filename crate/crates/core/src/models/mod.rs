//! Stationary stochastic volatility models: engine drivers for the
//! volatility state and maps from a window of that state to a price path.

mod bns;
mod heston;
mod path;

pub use bns::{bns_joint_step, bns_price_path, BnsDriver, BnsParams};
pub use heston::{heston_joint_step, heston_price_path, heston_step_with_increments, HestonDriver, HestonParams};
pub(crate) use path::expm1_ratio;
pub use path::{PricePathView, PriceSegment};

use crate::engine::{Driver, Window};
use crate::error::Result;
use crate::rng::SimRng;

/// A model whose price path on `[0, T]` is a functional of a window of its
/// two-dimensional stationary state.
pub trait PriceModel {
    type Driver: Driver<2>;

    fn s0(&self) -> f64;
    fn rate(&self) -> f64;
    /// `g` such that `E[S_t] = s0·e^{g t}` in the stationary regime.
    fn forward_growth(&self) -> f64;
    fn initial_state(&self) -> [f64; 2];
    fn driver(&self, rng: SimRng) -> Result<Self::Driver>;
    /// Rebuild the price path of `window` into `out`.
    fn price_path(&self, window: &Window<'_, 2>, out: &mut PricePathView) -> Result<()>;
}

impl PriceModel for HestonParams {
    type Driver = HestonDriver;

    fn s0(&self) -> f64 {
        self.s0
    }

    fn rate(&self) -> f64 {
        self.r
    }

    fn forward_growth(&self) -> f64 {
        self.r
    }

    fn initial_state(&self) -> [f64; 2] {
        [self.v_init, self.y_init]
    }

    fn driver(&self, rng: SimRng) -> Result<HestonDriver> {
        HestonDriver::new(*self, rng)
    }

    fn price_path(&self, window: &Window<'_, 2>, out: &mut PricePathView) -> Result<()> {
        heston_price_path(window, self, out)
    }
}

impl PriceModel for BnsParams {
    type Driver = BnsDriver;

    fn s0(&self) -> f64 {
        self.s0
    }

    fn rate(&self) -> f64 {
        self.r
    }

    fn forward_growth(&self) -> f64 {
        self.r + self.jump.log_laplace(self.rho)
    }

    fn initial_state(&self) -> [f64; 2] {
        [self.x_init, self.v_init]
    }

    fn driver(&self, rng: SimRng) -> Result<BnsDriver> {
        BnsDriver::new(*self, rng)
    }

    fn price_path(&self, window: &Window<'_, 2>, out: &mut PricePathView) -> Result<()> {
        bns_price_path(window, self, out)
    }
}
