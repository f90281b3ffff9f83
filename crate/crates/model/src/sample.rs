//! Top-k / temperature sampling, optionally masked by a token grammar.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sentgraph_core::vocab::{BOS, EOS};
use sentgraph_core::{replay, stream_rng, TokenGrammar, TokenSeq, Violation};

use crate::error::{ModelError, Result};
use crate::lm::{softmax, LanguageModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    pub top_k: usize,
    pub temperature: f64,
    /// Maximum sequence length including BOS.
    pub max_len: usize,
    pub constrained: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { top_k: 10, temperature: 1.0, max_len: 2048, constrained: true }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 || !(self.temperature > 0.0) || self.max_len < 2 {
            return Err(ModelError::Config("sampling needs top_k >= 1, temperature > 0 and max_len >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub tokens: TokenSeq,
    /// `max_len` was reached before EOS.
    pub truncated: bool,
    /// First grammar violation (position, rule); only possible unconstrained.
    pub violation: Option<(usize, Violation)>,
}

impl Sampled {
    pub fn parses(&self) -> bool {
        self.violation.is_none() && !self.truncated
    }
}

/// Sampling distribution from raw logits: divide by `temperature`, keep the
/// `top_k` largest finite entries (lower index wins ties), renormalize.
pub fn top_k_dist(logits: &[f64], top_k: usize, temperature: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..logits.len()).filter(|&i| logits[i] > f64::NEG_INFINITY).collect();
    idx.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    let mut scaled = vec![f64::NEG_INFINITY; logits.len()];
    for &i in idx.iter().take(top_k) {
        scaled[i] = logits[i] / temperature;
    }
    softmax(&scaled)
}

/// Inverse-CDF draw; `None` when the distribution is all zero.
fn draw(dist: &[f64], rng: &mut impl Rng) -> Option<u32> {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = Some(i as u32);
            if u < acc {
                return last;
            }
        }
    }
    last
}

/// Samples one sequence continuing `prefix` (which must start with BOS, or
/// be empty for a bare BOS). `grammar` is the fresh acceptor; the prefix is
/// replayed through it first and must be accepted. In constrained mode
/// every step is masked to the legal set, so the result always parses.
pub fn sample_tokens<G: TokenGrammar>(
    model: &dyn LanguageModel,
    grammar: G,
    prefix: &[u32],
    cfg: &SampleConfig,
    rng: &mut impl Rng,
) -> Result<Sampled> {
    cfg.validate()?;
    let prefix = if prefix.is_empty() { &[BOS][..] } else { prefix };
    let state = replay(grammar, prefix).map_err(|(position, v)| ModelError::Prefix { position, code: v.code() })?;
    if state.is_done() {
        return Ok(Sampled { tokens: TokenSeq::new(prefix.to_vec()), truncated: false, violation: None });
    }
    let mut state = Some(state);
    let mut violation = None;
    let mut tokens = prefix.to_vec();
    let mut session = model.session();
    for &t in prefix {
        session.push(t);
    }
    while tokens.len() < cfg.max_len {
        let mut logits = session.logits();
        if cfg.constrained {
            state.as_ref().expect("constrained state survives").mask_logits(&mut logits);
        }
        let dist = top_k_dist(&logits, cfg.top_k, cfg.temperature);
        let tok = draw(&dist, rng).ok_or_else(|| {
            ModelError::Core(sentgraph_core::Error::Contract("no legal continuation under the grammar".into()))
        })?;
        if let Some(st) = state.as_mut() {
            if let Err(v) = st.step(tok) {
                violation = Some((tokens.len(), v));
                state = None;
            }
        }
        tokens.push(tok);
        session.push(tok);
        if tok == EOS {
            return Ok(Sampled { tokens: TokenSeq::new(tokens), truncated: false, violation });
        }
    }
    Ok(Sampled { tokens: TokenSeq::new(tokens), truncated: true, violation })
}

/// `count` independent samples; sample `i` uses RNG stream `i` of `seed`,
/// so the output does not depend on the thread count.
pub fn sample_many<G: TokenGrammar + Send + Sync>(
    model: &dyn LanguageModel,
    grammar: &G,
    prefix: &[u32],
    cfg: &SampleConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<Sampled>> {
    (0..count)
        .into_par_iter()
        .map(|i| sample_tokens(model, grammar.clone(), prefix, cfg, &mut stream_rng(seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_keeps_largest_and_normalizes() {
        let d = top_k_dist(&[0.0, 2.0, f64::NEG_INFINITY, 1.0, 2.0], 2, 0.5);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[2], 0.0);
        assert_eq!(d[3], 0.0);
        assert!((d[1] - 0.5).abs() < 1e-12 && (d[4] - 0.5).abs() < 1e-12);
        let d = top_k_dist(&[0.0, 1.0, 2.0], 10, 1.0);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let z: f64 = [0.0f64, 1.0, 2.0].iter().map(|x| x.exp()).sum();
        assert!((d[2] - 2f64.exp() / z).abs() < 1e-12);
    }
}
