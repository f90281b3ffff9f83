//! Random draws used by the trail samplers.
//!
//! Samplers only ever need "pick an index below `len`", so they are written
//! against [`Draw`]. Any [`rand::Rng`] works; corpora use [`stream_rng`], a
//! ChaCha stream keyed by `(seed, graph id)` so each graph's draws are
//! independent of how graphs are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait Draw {
    /// Uniform index in `0..len`; `len` is never zero.
    fn draw(&mut self, len: usize) -> usize;
}

impl<R: Rng + ?Sized> Draw for R {
    #[inline]
    fn draw(&mut self, len: usize) -> usize {
        self.gen_range(0..len)
    }
}

/// Counter-based generator for one graph: keyed by the global seed, with the
/// graph id selecting the ChaCha stream. Successive draws advance the counter.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<usize> = (0..16).map(|_| stream_rng(7, 3).draw(1000)).collect();
        let mut r = stream_rng(7, 3);
        let b: Vec<usize> = (0..16).map(|_| r.draw(1000)).collect();
        let mut r = stream_rng(7, 4);
        let c: Vec<usize> = (0..16).map(|_| r.draw(1000)).collect();
        assert!(a.iter().all(|&x| x == a[0]));
        assert_ne!(b, c);
        let mut r2 = stream_rng(7, 3);
        let b2: Vec<usize> = (0..16).map(|_| r2.draw(1000)).collect();
        assert_eq!(b, b2);
    }
}
