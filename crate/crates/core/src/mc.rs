//! Seeded Monte Carlo plumbing.
//!
//! Every trial draws from its own ChaCha8 stream keyed by `(seed, trial)`,
//! so results do not depend on how trials are scheduled across threads.
//! Reductions happen sequentially over the ordered per-trial outputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// RNG for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `trials` independent trials in parallel and returns their outputs in
/// trial order.
pub fn run_trials<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let var = if n > 1 {
            compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    /// Sample variance (unbiased).
    pub fn variance(&self) -> f64 {
        self.std_error * self.std_error * self.samples as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn trials_are_reproducible_and_ordered() {
        let a = run_trials(64, 7, |rng, _| rng.random::<u64>());
        let b = run_trials(64, 7, |rng, _| rng.random::<u64>());
        assert_eq!(a, b);
        let c = run_trials(64, 8, |rng, _| rng.random::<u64>());
        assert_ne!(a, c);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_trials(64, 7, |rng, _| rng.random::<u64>()));
        assert_eq!(a, single);
    }

    #[test]
    fn streams_differ_between_trials() {
        let x: u64 = trial_rng(1, 0).random();
        let y: u64 = trial_rng(1, 1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn estimate_of_constant() {
        let e = Estimate::from_samples(&[3.0; 10]);
        assert_eq!(e.mean, 3.0);
        assert_eq!(e.std_error, 0.0);
        let e = Estimate::from_samples(&[1.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.variance() - 2.0).abs() < 1e-15);
    }
}
