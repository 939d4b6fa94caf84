use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },

    /// A scheme step produced a non-finite state.
    #[error("non-finite state at step {step} ({detail})")]
    NonFinite { step: usize, detail: String },

    /// A scheme coefficient evaluated to a non-finite value.
    #[error("non-finite {coefficient} coefficient")]
    NonFiniteCoefficient { coefficient: &'static str },

    /// A window does not cover the requested horizon.
    #[error("window covers {covered} time units but {required} are required")]
    WindowTooShort { covered: f64, required: f64 },

    /// A call price lies outside the no-arbitrage band.
    #[error("price {price} outside the no-arbitrage band ({lower}, {upper})")]
    BandViolation { price: f64, lower: f64, upper: f64 },

    #[error("accumulator is empty")]
    EmptyAccumulator,
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
