//! Weighted occupation measures over shifted windows of one long trajectory.
//!
//! The engine owns a single decreasing-step trajectory `X̄_{Γ_k}` and, at
//! iteration `n`, evaluates a window functional on the shifted path
//! `X̄^{(n−1)}` restricted to `[0, T]`, folding the result into
//! `ν^{(n)}(F)` with weight `η_n`. Only indices `[n, N(n,T)]` are retained
//! between iterations.

mod average;
mod buffer;
mod marginal;

pub use average::{update_average, BatchMeans, FunctionalAverage};
pub use buffer::{window_integral, PathBuffer, Segment, Window};
pub use marginal::{marginal_stats, Histogram, HistogramSpec, MarginalAccumulator, MarginalStats, DEFAULT_BINS};

use crate::error::{Error, Result};
use crate::schedule::{HorizonCursor, Schedule};

/// One-step transition of a stepwise-constant scheme.
pub trait Driver<const D: usize> {
    /// `X̄_{Γ_index}` from `X̄_{Γ_{index−1}}`, where `step = γ_index`.
    fn step(&mut self, state: &[f64; D], index: usize, step: f64) -> Result<[f64; D]>;
}

/// Adapter turning a closure into a [`Driver`].
pub struct FnDriver<F>(pub F);

impl<const D: usize, F> Driver<D> for FnDriver<F>
where
    F: FnMut(&[f64; D], usize, f64) -> [f64; D],
{
    fn step(&mut self, state: &[f64; D], index: usize, step: f64) -> Result<[f64; D]> {
        Ok((self.0)(state, index, step))
    }
}

/// A vector of path functionals reading only the window on `[0, T]`.
pub trait WindowFunctional<const D: usize> {
    fn arity(&self) -> usize;
    fn evaluate(&mut self, window: &Window<'_, D>, out: &mut [f64]);
}

/// Adapter turning a scalar closure into a [`WindowFunctional`].
pub struct FnFunctional<F>(pub F);

impl<const D: usize, F> WindowFunctional<D> for FnFunctional<F>
where
    F: FnMut(&Window<'_, D>) -> f64,
{
    fn arity(&self) -> usize {
        1
    }

    fn evaluate(&mut self, window: &Window<'_, D>, out: &mut [f64]) {
        out[0] = (self.0)(window);
    }
}

/// Functional with no outputs, for runs that only collect marginals.
pub struct NoFunctional;

impl<const D: usize> WindowFunctional<D> for NoFunctional {
    fn arity(&self) -> usize {
        0
    }

    fn evaluate(&mut self, _window: &Window<'_, D>, _out: &mut [f64]) {}
}

/// Weight `φ` of a window by its start state.
pub type StartWeight<'a, const D: usize> = &'a dyn Fn(&[f64; D]) -> f64;

pub struct RunOptions<'a, const D: usize> {
    /// Initial-state weight `φ`; the engine folds `F(α)·φ(α(0))`.
    pub phi: Option<StartWeight<'a, D>>,
    /// Collect weighted marginals of `X̄_{Γ_{k−1}}`.
    pub marginals: bool,
    pub histogram: Option<HistogramSpec>,
    /// Block length, in simulated time, for batch-means errors. Defaults to
    /// `10·max(T, 1)`.
    pub batch_time: Option<f64>,
}

impl<const D: usize> Default for RunOptions<'_, D> {
    fn default() -> Self {
        RunOptions {
            phi: None,
            marginals: false,
            histogram: None,
            batch_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<const D: usize> {
    pub n: usize,
    pub values: Vec<f64>,
    pub marginal: Option<MarginalStats<D>>,
}

#[derive(Debug, Clone)]
pub struct RunSummary<const D: usize> {
    pub n: usize,
    pub weight_sum: f64,
    pub estimates: Vec<FunctionalAverage>,
    pub std_errors: Vec<f64>,
    pub checkpoints: Vec<Checkpoint<D>>,
    pub marginal: Option<MarginalAccumulator<D>>,
}

impl<const D: usize> RunSummary<D> {
    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|a| a.value).collect()
    }
}

/// `n = 10, 100, …` up to `n_iters`, plus `n_iters` itself.
pub fn checkpoint_grid(n_iters: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut c = 10usize;
    while c < n_iters {
        grid.push(c);
        c = match c.checked_mul(10) {
            Some(v) => v,
            None => break,
        };
    }
    if n_iters > 0 {
        grid.push(n_iters);
    }
    grid
}

/// What one iteration produced.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord<const D: usize> {
    /// Iteration number `n ≥ 1`; the window was `X̄^{(n−1)}`.
    pub n: usize,
    pub weight: f64,
    /// `Γ_{n−1}`, the absolute start time of the window.
    pub window_time: f64,
    /// `X̄_{Γ_{n−1}}`.
    pub start_state: [f64; D],
}

pub struct ErgodicEngine<const D: usize> {
    schedule: Schedule,
    horizon: f64,
    buffer: PathBuffer<D>,
    cursor: HorizonCursor,
    completed: usize,
}

impl<const D: usize> ErgodicEngine<D> {
    pub fn new(schedule: Schedule, x0: [f64; D], horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain("horizon", format!("must be positive and finite, got {horizon}")));
        }
        if x0.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("x0", "initial state must be finite"));
        }
        Ok(ErgodicEngine {
            schedule,
            horizon,
            buffer: PathBuffer::new(x0),
            cursor: HorizonCursor::new(horizon),
            completed: 0,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn buffer(&self) -> &PathBuffer<D> {
        &self.buffer
    }

    /// Number of iterations folded so far.
    pub fn iterations(&self) -> usize {
        self.completed
    }

    fn simulate_through<Dr: Driver<D>>(&mut self, driver: &mut Dr, last: usize) -> Result<()> {
        self.schedule.extend_to(last + 1);
        while self.buffer.end() < last {
            let k = self.buffer.end() + 1;
            let next = driver.step(self.buffer.last_state(), k, self.schedule.step(k))?;
            if let Some(i) = next.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    step: k,
                    detail: format!("coordinate {i} = {}", next[i]),
                });
            }
            self.buffer.push(self.schedule.time(k), next);
        }
        Ok(())
    }

    /// Evaluate the functional on `X̄^{(n−1)}` for the next iteration `n`
    /// and write its (φ-weighted) values into `out`. Afterwards the buffer
    /// holds exactly `[n, N(n,T)]`.
    pub fn advance<Dr, F>(&mut self, driver: &mut Dr, functional: &mut F, phi: Option<StartWeight<'_, D>>, out: &mut [f64]) -> Result<IterationRecord<D>>
    where
        Dr: Driver<D>,
        F: WindowFunctional<D> + ?Sized,
    {
        let k = self.completed;
        let n = k + 1;
        let end = self.cursor.advance(&mut self.schedule, k);
        self.simulate_through(driver, end)?;

        let next_time = self.schedule.time(end + 1);
        let window = self.buffer.window(k, end, next_time, self.horizon);
        functional.evaluate(&window, out);
        let start_state = *window.start_state();
        if let Some(phi) = phi {
            let w = phi(&start_state);
            out.iter_mut().for_each(|v| *v *= w);
        }
        let record = IterationRecord {
            n,
            weight: self.schedule.weight(n),
            window_time: self.schedule.time(k),
            start_state,
        };

        self.completed = n;
        let next_end = self.cursor.advance(&mut self.schedule, n);
        self.simulate_through(driver, next_end)?;
        self.buffer.evict_below(n);
        Ok(record)
    }

    /// Run `n_iters` further iterations, folding every output into its own
    /// weighted average.
    pub fn run<Dr, F>(&mut self, driver: &mut Dr, functional: &mut F, n_iters: usize, options: RunOptions<'_, D>) -> Result<RunSummary<D>>
    where
        Dr: Driver<D>,
        F: WindowFunctional<D> + ?Sized,
    {
        let arity = functional.arity();
        let mut estimates = vec![FunctionalAverage::default(); arity];
        let mut batches = BatchMeans::new(options.batch_time.unwrap_or(10.0 * self.horizon.max(1.0)), arity);
        let mut marginal = if options.marginals || options.histogram.is_some() {
            Some(MarginalAccumulator::new(options.histogram)?)
        } else {
            None
        };
        let grid = checkpoint_grid(self.completed + n_iters);
        let already = self.completed;
        let mut next_checkpoint = grid.iter().copied().filter(move |&c| c > already).peekable();
        let mut checkpoints = Vec::new();
        let mut out = vec![0.0; arity];

        for _ in 0..n_iters {
            let rec = self.advance(driver, functional, options.phi, &mut out)?;
            for (avg, &v) in estimates.iter_mut().zip(&out) {
                avg.update(rec.weight, v);
            }
            batches.add(rec.window_time, rec.weight, &out);
            if let Some(m) = &mut marginal {
                m.add(&rec.start_state, rec.weight);
            }
            if next_checkpoint.peek() == Some(&rec.n) {
                next_checkpoint.next();
                checkpoints.push(Checkpoint {
                    n: rec.n,
                    values: estimates.iter().map(|a| a.value).collect(),
                    marginal: marginal.as_ref().map(|m| m.stats()).transpose()?,
                });
            }
        }

        Ok(RunSummary {
            n: self.completed,
            weight_sum: self.schedule.weight_sum_at(self.completed),
            estimates,
            std_errors: batches.std_errors(),
            checkpoints,
            marginal,
        })
    }
}
