//! The next-token model interface and the uniform baseline.

/// A model of `p(token | context)` over a fixed vocabulary.
pub trait LanguageModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// Longest context the model conditions on; longer contexts are cut to
    /// their last `context_limit` tokens.
    fn context_limit(&self) -> usize;

    /// Unnormalized log-probabilities of the next token.
    fn logits(&self, context: &[u32]) -> Vec<f64>;

    fn next_dist(&self, context: &[u32]) -> Vec<f64> {
        softmax(&self.logits(context))
    }

    /// Incremental decoding state. The default recomputes from scratch on
    /// every query; models with caches override it.
    fn session(&self) -> Box<dyn DecodeSession + '_> {
        Box::new(RecomputeSession { model: self.as_dyn(), tokens: Vec::new() })
    }

    fn as_dyn(&self) -> &dyn LanguageModel;
}

pub trait DecodeSession {
    fn push(&mut self, token: u32);

    /// Logits for the token after everything pushed so far.
    fn logits(&mut self) -> Vec<f64>;
}

struct RecomputeSession<'a> {
    model: &'a dyn LanguageModel,
    tokens: Vec<u32>,
}

impl DecodeSession for RecomputeSession<'_> {
    fn push(&mut self, token: u32) {
        self.tokens.push(token);
    }

    fn logits(&mut self) -> Vec<f64> {
        self.model.logits(&self.tokens)
    }
}

/// Last `limit` tokens of `context`.
pub fn window(context: &[u32], limit: usize) -> &[u32] {
    &context[context.len().saturating_sub(limit)..]
}

/// Max-shifted softmax; entries at `-inf` get probability zero.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; logits.len()];
    }
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

/// Assigns equal probability to every token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformModel {
    pub vocab_size: usize,
    pub context: usize,
}

impl UniformModel {
    pub fn new(vocab_size: usize) -> Self {
        UniformModel { vocab_size, context: usize::MAX }
    }
}

impl LanguageModel for UniformModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn context_limit(&self) -> usize {
        self.context
    }

    fn logits(&self, _context: &[u32]) -> Vec<f64> {
        vec![0.0; self.vocab_size]
    }

    fn as_dyn(&self) -> &dyn LanguageModel {
        self
    }
}

/// Mean negative log-likelihood per predicted token over `seqs`. BOS is only
/// conditioned on and PAD targets are skipped.
pub fn mean_nll(model: &dyn LanguageModel, seqs: &[sentgraph_core::TokenSeq]) -> f64 {
    let (mut total, mut count) = (0.0, 0usize);
    for s in seqs {
        let mut session = model.session();
        for (i, &t) in s.tokens.iter().enumerate() {
            if i > 0 && t != sentgraph_core::vocab::PAD {
                let p = softmax(&session.logits());
                total -= p[t as usize].max(f64::MIN_POSITIVE).ln();
                count += 1;
            }
            session.push(t);
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_normalized_and_masks() {
        let p = softmax(&[1.0, f64::NEG_INFINITY, 3.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
        let u = UniformModel::new(10).next_dist(&[1, 2, 3]);
        assert!(u.iter().all(|&x| (x - 0.1).abs() < 1e-12));
    }
}
