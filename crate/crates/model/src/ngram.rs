//! Interpolated n-gram model with an additive prior.
//!
//! For a context `h` of length `k`, with `c(h, t)` the count of `t` after `h`
//! and `c(h)` the total,
//!
//! `P_k(t | h) = (c(h, t) + δ · P_{k-1}(t | h')) / (c(h) + δ)`
//!
//! where `h'` drops the oldest token and `P_{-1}` is uniform. Unseen contexts
//! fall through to shorter ones, so an untrained model is uniform, and as
//! `δ → 0` seen contexts reproduce empirical frequencies.

use std::collections::BTreeMap;

use sentgraph_core::vocab::PAD;
use sentgraph_core::TokenSeq;

use crate::lm::{window, LanguageModel};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub total: u64,
    pub next: BTreeMap<u32, u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NGramModel {
    pub order: usize,
    pub vocab_size: usize,
    pub delta: f64,
    /// Context (oldest token first) to the counts of what followed it.
    pub table: BTreeMap<Vec<u32>, Counts>,
}

impl NGramModel {
    pub fn new(order: usize, vocab_size: usize, delta: f64) -> Self {
        NGramModel { order: order.max(1), vocab_size, delta, table: BTreeMap::new() }
    }

    /// Adds every (context, next-token) event of `seqs` for all context
    /// lengths below the order.
    pub fn fit(&mut self, seqs: &[TokenSeq]) {
        for s in seqs {
            let t = &s.tokens;
            for i in 1..t.len() {
                if t[i] == PAD {
                    continue;
                }
                for k in 0..self.order.min(i + 1) {
                    let counts = self.table.entry(t[i - k..i].to_vec()).or_default();
                    counts.total += 1;
                    *counts.next.entry(t[i]).or_insert(0) += 1;
                }
            }
        }
    }

    /// Count tables along the backoff chain, shortest context first.
    fn levels(&self, context: &[u32]) -> Vec<&Counts> {
        let ctx = window(context, self.order - 1);
        (0..=ctx.len()).filter_map(|k| self.table.get(&ctx[ctx.len() - k..])).collect()
    }

    fn prob_at(&self, levels: &[&Counts], token: u32) -> f64 {
        let mut p = 1.0 / self.vocab_size as f64;
        for c in levels {
            let hits = c.next.get(&token).copied().unwrap_or(0) as f64;
            p = (hits + self.delta * p) / (c.total as f64 + self.delta);
        }
        p
    }

    pub fn prob(&self, context: &[u32], token: u32) -> f64 {
        self.prob_at(&self.levels(context), token)
    }
}

impl LanguageModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn context_limit(&self) -> usize {
        self.order - 1
    }

    fn logits(&self, context: &[u32]) -> Vec<f64> {
        let levels = self.levels(context);
        (0..self.vocab_size as u32).map(|t| self.prob_at(&levels, t).ln()).collect()
    }

    fn as_dyn(&self) -> &dyn LanguageModel {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sentgraph_core::vocab::{BOS, CLOSE, EOS, OPEN};

    #[test]
    fn untrained_is_uniform() {
        let m = NGramModel::new(4, 10, 0.1);
        let p = m.next_dist(&[BOS, 6]);
        assert!(p.iter().all(|&x| (x - 0.1).abs() < 1e-12));
    }

    #[test]
    fn single_sequence_dominates() {
        let mut m = NGramModel::new(4, 10, 0.1);
        m.fit(&[TokenSeq::new(vec![BOS, 6, OPEN, CLOSE, EOS])]);
        assert!(m.next_dist(&[BOS])[6] >= 0.9);
        let p = m.next_dist(&[BOS, 6, OPEN]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p[CLOSE as usize] > 0.9);
    }

    #[test]
    fn tiny_delta_gives_empirical_frequencies() {
        let mut m = NGramModel::new(3, 8, 1e-12);
        m.fit(&[TokenSeq::new(vec![1, 6, 7, 2]), TokenSeq::new(vec![1, 6, 6, 2]), TokenSeq::new(vec![1, 6, 7, 2])]);
        assert!((m.prob(&[1, 6], 7) - 2.0 / 3.0).abs() < 1e-9);
        assert!((m.prob(&[1, 6], 6) - 1.0 / 3.0).abs() < 1e-9);
        assert!((m.prob(&[1], 6) - 1.0).abs() < 1e-9);
    }
}
