use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// The retained segment `X̄_{Γ_k}, …, X̄_{Γ_end}` of a single trajectory.
///
/// Storage is a contiguous vector with a moving head so that windows can be
/// handed out as plain slices.
#[derive(Debug, Clone)]
pub struct PathBuffer<const D: usize> {
    start: usize,
    head: usize,
    times: Vec<f64>,
    states: Vec<[f64; D]>,
}

impl<const D: usize> PathBuffer<D> {
    /// Buffer holding only `X̄_{Γ_0} = x0` at time 0.
    pub fn new(x0: [f64; D]) -> Self {
        PathBuffer {
            start: 0,
            head: 0,
            times: vec![0.0],
            states: vec![x0],
        }
    }

    /// Smallest retained index.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Largest retained index.
    pub fn end(&self) -> usize {
        self.start + self.len() - 1
    }

    pub fn len(&self) -> usize {
        self.times.len() - self.head
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn retained(&self) -> RangeInclusive<usize> {
        self.start..=self.end()
    }

    pub fn last_state(&self) -> &[f64; D] {
        self.states.last().expect("buffer is never empty")
    }

    /// Append `X̄_{Γ_{end+1}}`.
    pub fn push(&mut self, time: f64, state: [f64; D]) {
        self.times.push(time);
        self.states.push(state);
    }

    /// `(Γ_k, X̄_{Γ_k})`, or `None` if `k` is not retained.
    pub fn get(&self, k: usize) -> Option<(f64, &[f64; D])> {
        if k < self.start || k > self.end() {
            return None;
        }
        let i = self.head + k - self.start;
        Some((self.times[i], &self.states[i]))
    }

    /// Drop every index below `k`; at least the last entry is always kept.
    pub fn evict_below(&mut self, k: usize) {
        let k = k.min(self.end());
        if k <= self.start {
            return;
        }
        self.head += k - self.start;
        self.start = k;
        if self.head > 1024 && self.head * 2 > self.times.len() {
            self.times.drain(..self.head);
            self.states.drain(..self.head);
            self.head = 0;
        }
    }

    /// View of the shifted path `X̄^{(first)}` over `[0, horizon]`, made of
    /// indices `first..=last`. `next_time` is `Γ_{last+1}`.
    ///
    /// Panics if any index in `first..=last` has been evicted or not yet
    /// simulated.
    pub fn window(&self, first: usize, last: usize, next_time: f64, horizon: f64) -> Window<'_, D> {
        assert!(
            first >= self.start && last <= self.end() && first <= last,
            "window [{first}, {last}] outside retained range [{}, {}]",
            self.start,
            self.end()
        );
        let a = self.head + first - self.start;
        let b = self.head + last - self.start;
        Window {
            first,
            horizon,
            times: &self.times[a..=b],
            states: &self.states[a..=b],
            next_time,
        }
    }
}

/// One constant piece of a stepwise path, in window-relative time.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a, const D: usize> {
    pub offset: f64,
    pub length: f64,
    pub state: &'a [f64; D],
}

/// A shifted, stepwise-constant path restricted to `[0, horizon]`.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a, const D: usize> {
    first: usize,
    horizon: f64,
    times: &'a [f64],
    states: &'a [[f64; D]],
    next_time: f64,
}

impl<'a, const D: usize> Window<'a, D> {
    /// Build a window from absolute grid times, the states held on them, and
    /// the time at which the last state stops being held.
    pub fn from_parts(times: &'a [f64], states: &'a [[f64; D]], next_time: f64, horizon: f64) -> Self {
        assert_eq!(times.len(), states.len());
        assert!(!times.is_empty());
        Window {
            first: 0,
            horizon,
            times,
            states,
            next_time,
        }
    }

    /// Trajectory index of the window origin.
    pub fn first_index(&self) -> usize {
        self.first
    }

    pub fn last_index(&self) -> usize {
        self.first + self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn num_segments(&self) -> usize {
        self.times.len()
    }

    pub fn start_state(&self) -> &'a [f64; D] {
        &self.states[0]
    }

    pub fn states(&self) -> &'a [[f64; D]] {
        self.states
    }

    /// Length of path available from the window origin.
    pub fn covered(&self) -> f64 {
        self.next_time - self.times[0]
    }

    pub fn check_covers(&self) -> Result<()> {
        if self.covered() < self.horizon {
            return Err(Error::WindowTooShort {
                covered: self.covered(),
                required: self.horizon,
            });
        }
        Ok(())
    }

    /// Pieces of the path on `[0, horizon]`; the last one is clipped.
    pub fn segments(&self) -> impl Iterator<Item = Segment<'a, D>> + 'a {
        let origin = self.times[0];
        let horizon = self.horizon;
        let times = self.times;
        let states = self.states;
        let next_time = self.next_time;
        (0..times.len()).filter_map(move |j| {
            let offset = times[j] - origin;
            if offset > horizon {
                return None;
            }
            let right = if j + 1 < times.len() { times[j + 1] } else { next_time } - origin;
            let length = (right.min(horizon) - offset).max(0.0);
            Some(Segment {
                offset,
                length,
                state: &states[j],
            })
        })
    }

    /// `∫_0^T g(X̄_s) ds`, exact for the stepwise path.
    pub fn integral(&self, mut g: impl FnMut(&[f64; D]) -> f64) -> Result<f64> {
        self.check_covers()?;
        Ok(self.segments().map(|s| s.length * g(s.state)).sum())
    }
}

/// Free-function form of [`Window::integral`].
pub fn window_integral<const D: usize>(window: &Window<'_, D>, g: impl FnMut(&[f64; D]) -> f64) -> Result<f64> {
    window.integral(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_of_one_is_horizon() {
        let times = [0.0, 0.4, 0.9, 1.3];
        let states = [[1.0], [2.0], [3.0], [4.0]];
        let w = Window::from_parts(&times, &states, 1.8, 1.5);
        assert!((w.integral(|_| 1.0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn constant_path_integral() {
        let times = [5.0, 5.5, 6.0];
        let states = [[0.3]; 3];
        let w = Window::from_parts(&times, &states, 6.5, 1.2);
        assert!((w.integral(|x| x[0]).unwrap() - 0.36).abs() < 1e-15);
    }

    #[test]
    fn two_segment_integral() {
        let times = [0.0, 1.0];
        let states = [[1.0], [3.0]];
        let w = Window::from_parts(&times, &states, 2.0, 1.5);
        assert_eq!(w.integral(|x| x[0]).unwrap(), 2.5);
    }

    #[test]
    fn short_window_is_rejected() {
        let times = [0.0, 1.0];
        let states = [[1.0], [3.0]];
        let w = Window::from_parts(&times, &states, 1.2, 1.5);
        assert!(matches!(w.integral(|_| 1.0), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn eviction_keeps_contiguous_tail() {
        let mut b = PathBuffer::new([0.0]);
        for k in 1..5000usize {
            b.push(k as f64, [k as f64]);
            if k % 3 == 0 {
                b.evict_below(k.saturating_sub(10));
            }
        }
        assert_eq!(b.retained(), 4988..=4999);
        assert_eq!(b.get(4988).unwrap().1[0], 4988.0);
        assert!(b.get(4987).is_none());
        let w = b.window(4990, 4995, 4996.0, 5.0);
        assert_eq!(w.first_index(), 4990);
        assert_eq!(w.states()[0][0], 4990.0);
    }

    #[test]
    #[should_panic(expected = "outside retained range")]
    fn evicted_window_panics() {
        let mut b = PathBuffer::new([0.0]);
        for k in 1..10 {
            b.push(k as f64, [0.0]);
        }
        b.evict_below(5);
        let _ = b.window(4, 6, 7.0, 2.0);
    }
}
