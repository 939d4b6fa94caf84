/// Running weighted mean `ν^{(n)}(F) = (1/H_n) Σ_{k≤n} η_k F(X̄^{(k−1)})`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FunctionalAverage {
    pub n: usize,
    pub value: f64,
    pub weight_sum: f64,
}

impl FunctionalAverage {
    /// One step of the recurrence
    /// `ν^{(n+1)} = ν^{(n)} + (η_{n+1}/H_{n+1})(F − ν^{(n)})`.
    pub fn update(&mut self, eta: f64, f_value: f64) {
        debug_assert!(eta > 0.0);
        self.weight_sum += eta;
        self.value += (eta / self.weight_sum) * (f_value - self.value);
        self.n += 1;
    }
}

pub fn update_average(mut avg: FunctionalAverage, eta: f64, f_value: f64) -> FunctionalAverage {
    avg.update(eta, f_value);
    avg
}

/// Weighted batch means over consecutive blocks of simulated time.
///
/// Successive windows overlap, so the naive weighted variance badly
/// understates the error; blocks much longer than the window horizon are
/// close to independent.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    block_time: f64,
    arity: usize,
    current: Option<i64>,
    weights: Vec<f64>,
    sums: Vec<f64>,
}

impl BatchMeans {
    pub fn new(block_time: f64, arity: usize) -> Self {
        assert!(block_time > 0.0);
        BatchMeans {
            block_time,
            arity,
            current: None,
            weights: Vec::new(),
            sums: Vec::new(),
        }
    }

    pub fn add(&mut self, time: f64, eta: f64, values: &[f64]) {
        let block = (time / self.block_time).floor() as i64;
        if self.current != Some(block) {
            self.current = Some(block);
            self.weights.push(0.0);
            self.sums.extend(std::iter::repeat_n(0.0, self.arity));
        }
        *self.weights.last_mut().unwrap() += eta;
        let base = self.sums.len() - self.arity;
        for (s, v) in self.sums[base..].iter_mut().zip(values) {
            *s += eta * v;
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.weights.len()
    }

    /// Standard error of the weighted mean of each component; NaN with fewer
    /// than two blocks.
    pub fn std_errors(&self) -> Vec<f64> {
        let b = self.weights.len();
        if b < 2 {
            return vec![f64::NAN; self.arity];
        }
        let total: f64 = self.weights.iter().sum();
        (0..self.arity)
            .map(|i| {
                let mean = self.sums.iter().skip(i).step_by(self.arity).sum::<f64>() / total;
                let ss: f64 = self
                    .weights
                    .iter()
                    .zip(self.sums.iter().skip(i).step_by(self.arity))
                    .map(|(&w, &s)| {
                        let d = s - w * mean;
                        d * d
                    })
                    .sum();
                (ss * b as f64 / (b as f64 - 1.0)).sqrt() / total
            })
            .collect()
    }
}
