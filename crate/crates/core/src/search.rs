//! Uniform random search over a box: the brute-force reference that swarm
//! allocation results are checked against.
//!
//! Samples are drawn in fixed-size chunks, chunk `c` from its own ChaCha
//! stream, so the result is identical for sequential and parallel execution.

use nalgebra::SVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par::Execution;
use crate::{Error, Result};

/// Samples per RNG stream.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult<const D: usize> {
    pub best_position: SVector<f64, D>,
    pub best_value: f64,
    /// Global sample index of the best point; ties go to the lowest index.
    pub best_index: usize,
}

impl<const D: usize> SearchResult<D> {
    fn better(self, other: Self) -> Self {
        match other.best_value.total_cmp(&self.best_value) {
            std::cmp::Ordering::Less => other,
            std::cmp::Ordering::Equal if other.best_index < self.best_index => other,
            _ => self,
        }
    }
}

/// Minimum of `objective` over `samples` points drawn uniformly from `[lower, upper]^D`.
pub fn random_search<const D: usize, F>(
    objective: &F,
    samples: usize,
    lower: f64,
    upper: f64,
    seed: u64,
    exec: Execution,
) -> Result<SearchResult<D>>
where
    F: Fn(&SVector<f64, D>) -> f64 + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidParameter("random search needs at least one sample".into()));
    }
    if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::InvalidParameter(format!("invalid search box [{lower}, {upper}]")));
    }
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk = exec.map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let start = c * CHUNK;
        (start..samples.min(start + CHUNK))
            .map(|i| {
                let x = SVector::<f64, D>::from_fn(|_, _| rng.random_range(lower..=upper));
                SearchResult { best_value: objective(&x), best_position: x, best_index: i }
            })
            .reduce(SearchResult::better)
            .expect("chunk is non-empty")
    });
    Ok(per_chunk.into_iter().reduce(SearchResult::better).expect("at least one chunk"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |x: &Vector2<f64>| (x[0] - 0.3).powi(2) + (x[1] + 0.6).powi(2);
        let seq = random_search(&f, 3 * CHUNK + 17, -1.0, 1.0, 9, Execution::Sequential).unwrap();
        let par = random_search(&f, 3 * CHUNK + 17, -1.0, 1.0, 9, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        assert!(seq.best_value < 1e-3);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let r = random_search(&|_: &Vector2<f64>| 1.0, 2 * CHUNK, -1.0, 1.0, 0, Execution::Parallel).unwrap();
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn more_samples_never_worse() {
        let f = |x: &Vector2<f64>| x.norm();
        let few = random_search(&f, 100, -1.0, 1.0, 4, Execution::Sequential).unwrap();
        let many = random_search(&f, 10 * CHUNK, -1.0, 1.0, 4, Execution::Sequential).unwrap();
        assert!(many.best_value <= few.best_value);
    }

    #[test]
    fn rejects_bad_input() {
        let f = |_: &Vector2<f64>| 0.0;
        assert!(random_search(&f, 0, -1.0, 1.0, 0, Execution::Sequential).is_err());
        assert!(random_search(&f, 10, 1.0, 1.0, 0, Execution::Sequential).is_err());
    }
}
