use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 200;

/// Fixed-bin histogram layout for one state coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub coordinate: usize,
    pub bins: usize,
    pub min: f64,
    pub max: f64,
}

impl HistogramSpec {
    pub fn new(coordinate: usize, min: f64, max: f64) -> Result<Self> {
        Self::with_bins(coordinate, DEFAULT_BINS, min, max)
    }

    pub fn with_bins(coordinate: usize, bins: usize, min: f64, max: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::domain("bins", "must be positive"));
        }
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::domain("histogram range", format!("need finite min < max, got [{min}, {max}]")));
        }
        Ok(HistogramSpec { coordinate, bins, min, max })
    }

    pub fn bin_width(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }
}

/// Weighted histogram with underflow and overflow mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub mass: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
}

impl Histogram {
    fn new(spec: HistogramSpec) -> Self {
        Histogram {
            spec,
            mass: vec![0.0; spec.bins],
            underflow: 0.0,
            overflow: 0.0,
        }
    }

    fn add(&mut self, x: f64, w: f64) {
        if x < self.spec.min {
            self.underflow += w;
        } else if x >= self.spec.max {
            self.overflow += w;
        } else {
            let i = ((x - self.spec.min) / self.spec.bin_width()) as usize;
            self.mass[i.min(self.spec.bins - 1)] += w;
        }
    }

    fn normalized(&self, total: f64) -> Histogram {
        Histogram {
            spec: self.spec,
            mass: self.mass.iter().map(|m| m / total).collect(),
            underflow: self.underflow / total,
            overflow: self.overflow / total,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.underflow + self.overflow + self.mass.iter().sum::<f64>()
    }
}

/// Weighted marginal statistics of `X̄_{Γ_{k−1}}` with weights `η_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalAccumulator<const D: usize> {
    total_weight: f64,
    mean: [f64; D],
    m2: [f64; D],
    m3: [f64; D],
    histogram: Option<Histogram>,
}

impl<const D: usize> MarginalAccumulator<D> {
    pub fn new(histogram: Option<HistogramSpec>) -> Result<Self> {
        if let Some(spec) = histogram {
            if spec.coordinate >= D {
                return Err(Error::domain(
                    "histogram coordinate",
                    format!("{} out of range for dimension {D}", spec.coordinate),
                ));
            }
        }
        Ok(MarginalAccumulator {
            total_weight: 0.0,
            mean: [0.0; D],
            m2: [0.0; D],
            m3: [0.0; D],
            histogram: histogram.map(Histogram::new),
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    #[allow(clippy::needless_range_loop)]
    pub fn add(&mut self, x: &[f64; D], w: f64) {
        let prev = self.total_weight;
        let total = prev + w;
        for i in 0..D {
            let delta = x[i] - self.mean[i];
            let r = delta * w / total;
            self.m3[i] += delta * delta * delta * prev * w * (prev - w) / (total * total) - 3.0 * r * self.m2[i];
            self.m2[i] += prev * w * delta * delta / total;
            self.mean[i] += r;
        }
        self.total_weight = total;
        if let Some(h) = &mut self.histogram {
            h.add(x[h.spec.coordinate], w);
        }
    }

    pub fn stats(&self) -> Result<MarginalStats<D>> {
        if self.total_weight <= 0.0 {
            return Err(Error::EmptyAccumulator);
        }
        let w = self.total_weight;
        let mut variance = [0.0; D];
        let mut skewness = [0.0; D];
        for i in 0..D {
            variance[i] = self.m2[i] / w;
            skewness[i] = if variance[i] > 0.0 { (self.m3[i] / w) / variance[i].powf(1.5) } else { 0.0 };
        }
        Ok(MarginalStats {
            total_weight: w,
            mean: self.mean,
            variance,
            skewness,
            histogram: self.histogram.as_ref().map(|h| h.normalized(w)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalStats<const D: usize> {
    pub total_weight: f64,
    pub mean: [f64; D],
    pub variance: [f64; D],
    pub skewness: [f64; D],
    /// Normalized to unit total mass.
    pub histogram: Option<Histogram>,
}

pub fn marginal_stats<const D: usize>(acc: &MarginalAccumulator<D>) -> Result<MarginalStats<D>> {
    acc.stats()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let mut acc = MarginalAccumulator::<2>::new(None).unwrap();
        acc.add(&[1.5, -2.0], 1.0);
        let s = acc.stats().unwrap();
        assert_eq!(s.mean, [1.5, -2.0]);
        assert_eq!(s.variance, [0.0, 0.0]);
    }

    #[test]
    fn two_points() {
        let mut acc = MarginalAccumulator::<1>::new(None).unwrap();
        acc.add(&[0.0], 1.0);
        acc.add(&[2.0], 1.0);
        let s = acc.stats().unwrap();
        assert_eq!(s.mean[0], 1.0);
        assert_eq!(s.variance[0], 1.0);
        assert_eq!(s.skewness[0], 0.0);
    }

    #[test]
    fn empty_is_an_error() {
        let acc = MarginalAccumulator::<1>::new(None).unwrap();
        assert_eq!(acc.stats(), Err(Error::EmptyAccumulator));
    }

    #[test]
    fn weighted_moments_match_direct_sums() {
        let xs = [0.3, -1.2, 4.0, 2.2, 0.0, 7.5, -3.3];
        let ws = [0.5, 1.0, 0.25, 2.0, 1.5, 0.1, 0.8];
        let mut acc = MarginalAccumulator::<1>::new(Some(HistogramSpec::with_bins(0, 10, -2.0, 5.0).unwrap())).unwrap();
        for (x, w) in xs.iter().zip(ws) {
            acc.add(&[*x], w);
        }
        let total: f64 = ws.iter().sum();
        let mean = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / total;
        let var = xs.iter().zip(ws).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
        let m3 = xs.iter().zip(ws).map(|(x, w)| w * (x - mean).powi(3)).sum::<f64>() / total;
        let s = acc.stats().unwrap();
        assert!((s.total_weight - total).abs() < 1e-15);
        assert!((s.mean[0] - mean).abs() < 1e-13);
        assert!((s.variance[0] - var).abs() < 1e-12);
        assert!((s.skewness[0] - m3 / var.powf(1.5)).abs() < 1e-12);
        let h = s.histogram.unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
        assert!((h.underflow - 0.8 / total).abs() < 1e-15);
        assert!((h.overflow - 0.1 / total).abs() < 1e-15);
    }
}
