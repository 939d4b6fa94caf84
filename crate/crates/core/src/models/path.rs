/// Piece of a price path on which `log S` is affine:
/// `log S(offset + s) = log_start + slope·s` for `s ∈ [0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceSegment {
    pub offset: f64,
    pub length: f64,
    pub log_start: f64,
    pub slope: f64,
}

/// A positive price path on `[0, T]`, stored as exponential-affine pieces.
#[derive(Debug, Clone, Default)]
pub struct PricePathView {
    horizon: f64,
    segments: Vec<PriceSegment>,
}

/// `(e^x − 1)/x`, equal to 1 at 0.
pub(crate) fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

impl PricePathView {
    pub fn new(horizon: f64) -> Self {
        PricePathView { horizon, segments: Vec::new() }
    }

    pub fn reset(&mut self, horizon: f64) {
        self.horizon = horizon;
        self.segments.clear();
    }

    pub fn push(&mut self, segment: PriceSegment) {
        self.segments.push(segment);
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[PriceSegment] {
        &self.segments
    }

    /// `S_t` for `t ∈ [0, T]`, right-continuous.
    pub fn value_at(&self, t: f64) -> f64 {
        let j = self.segments.partition_point(|s| s.offset <= t).max(1) - 1;
        let s = &self.segments[j];
        (s.log_start + s.slope * (t - s.offset)).exp()
    }

    /// `∫_0^T S_t dt`, exact for the affine-in-log pieces.
    pub fn integral(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.log_start.exp() * s.length * expm1_ratio(s.slope * s.length))
            .sum()
    }

    /// `(1/T) ∫_0^T S_t dt`.
    pub fn time_average(&self) -> f64 {
        self.integral() / self.horizon
    }

    /// `S_T`, the left limit at `T` unless a piece starts exactly there.
    pub fn terminal(&self) -> f64 {
        let s = self.segments.last().expect("price path has at least one piece");
        (s.log_start + s.slope * s.length).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_affine_integral() {
        let mut p = PricePathView::new(1.0);
        p.push(PriceSegment {
            offset: 0.0,
            length: 1.0,
            log_start: 50f64.ln(),
            slope: 0.05,
        });
        let exact = 50.0 * (0.05f64.exp() - 1.0) / 0.05;
        assert!((p.time_average() - exact).abs() < 1e-12);
        assert!((p.terminal() - 50.0 * 0.05f64.exp()).abs() < 1e-12);
        assert!((p.value_at(0.0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn stepwise_pieces() {
        let mut p = PricePathView::new(2.0);
        for (j, s) in [1.0f64, 3.0].into_iter().enumerate() {
            p.push(PriceSegment {
                offset: j as f64,
                length: 1.0,
                log_start: s.ln(),
                slope: 0.0,
            });
        }
        assert!((p.time_average() - 2.0).abs() < 1e-15);
        assert!((p.value_at(1.0) - 3.0).abs() < 1e-15);
        assert!((p.value_at(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_near_zero() {
        assert_eq!(expm1_ratio(0.0), 1.0);
        assert!((expm1_ratio(1e-9) - 1.0).abs() < 1e-9);
        assert!((expm1_ratio(1.0) - (1f64.exp() - 1.0)).abs() < 1e-15);
    }
}
