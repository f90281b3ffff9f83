//! Pipeline steps shared by the subcommands and usable as a library.

use rayon::prelude::*;
use serde::Serialize;
use sentgraph_core::vocab::{Token, BOS, EOS, SEP};
use sentgraph_core::{
    decode_graph, encode_graph, prefix_graph, stream_rng, Decoded, DecoderState, Encoding, Error, Graph,
    SetDecoderState, TokenSeq, Vocab,
};
use sentgraph_model::{
    sample_many, train_ngram, train_transformer, AnyModel, LanguageModel, LossPoint, NGramModel, SampleConfig,
    Sampled, TinyTransformer, TrainConfig, TransformerConfig,
};

use crate::error::{CliError, Result};

/// Seed of the trail that flattens a conditioning motif.
pub const MOTIF_SEED: u64 = 0x6d6f_7469_66;

/// Stream of the training seed reserved for weight initialization; batches
/// and dropout use the low streams.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    NGram { order: usize, delta: f64 },
    /// `config.vocab_size` is replaced by the corpus vocabulary size, and a
    /// zero `config.context` by the longest training sequence.
    Transformer { config: TransformerConfig, train: TrainConfig },
}

/// Longest sequence in `seqs`, in tokens.
pub fn longest(seqs: &[TokenSeq]) -> usize {
    seqs.iter().map(TokenSeq::len).max().unwrap_or(0)
}

pub fn train_model(
    spec: &ModelSpec,
    vocab: &Vocab,
    train: &[TokenSeq],
    val: &[TokenSeq],
    on_point: impl FnMut(&LossPoint),
) -> Result<(AnyModel, Vec<LossPoint>)> {
    match spec {
        ModelSpec::NGram { order, delta } => {
            let mut m = NGramModel::new(*order, vocab.size(), *delta);
            let curve = train_ngram(&mut m, train, val)?;
            Ok((AnyModel::NGram(m), curve))
        }
        ModelSpec::Transformer { config, train: cfg } => {
            let context = if config.context == 0 { longest(train).saturating_sub(1).max(1) } else { config.context };
            let config = TransformerConfig { vocab_size: vocab.size(), context, ..*config };
            let mut rng = stream_rng(cfg.seed, INIT_STREAM);
            let mut m = TinyTransformer::<f32>::init(config, &mut rng).map_err(CliError::Config)?;
            let curve = train_transformer(&mut m, train, val, cfg, on_point)?;
            Ok((AnyModel::Transformer(m), curve))
        }
    }
}

/// How a sampled sequence was turned into a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// The whole sequence parsed.
    Strict,
    /// Only the longest valid prefix was kept.
    Lenient,
    /// Nothing parsed; the graph is empty.
    Empty,
}

#[derive(Clone, Debug)]
pub struct GeneratedGraph {
    pub sampled: Sampled,
    pub graph: Graph,
    pub parse: ParseMode,
    pub decoded: Option<Decoded>,
}

/// Draws `count` sequences and decodes each one; sample `i` uses stream `i`
/// of `seed`.
pub fn sample_graphs(
    model: &dyn LanguageModel,
    vocab: &Vocab,
    encoding: Encoding,
    prefix: &[u32],
    cfg: &SampleConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<GeneratedGraph>> {
    if model.vocab_size() != vocab.size() {
        return Err(CliError::config(format!(
            "model vocabulary has {} tokens but the corpus vocabulary has {}",
            model.vocab_size(),
            vocab.size()
        )));
    }
    let sampled = match encoding {
        Encoding::Sent => sample_many(model, &DecoderState::new(*vocab), prefix, cfg, count, seed)?,
        Encoding::Set => sample_many(model, &SetDecoderState::new(*vocab), prefix, cfg, count, seed)?,
    };
    Ok(sampled.into_par_iter().map(|s| to_graph(s, vocab, encoding)).collect())
}

fn to_graph(sampled: Sampled, vocab: &Vocab, encoding: Encoding) -> GeneratedGraph {
    let strict = sampled.parses();
    match decode_graph(&sampled.tokens, vocab, encoding, !strict) {
        Ok((graph, decoded)) => {
            let parse = if strict && !decoded.truncated { ParseMode::Strict } else { ParseMode::Lenient };
            GeneratedGraph { sampled, graph, parse, decoded: Some(decoded) }
        }
        Err(_) => GeneratedGraph { sampled, graph: Graph::new(0), parse: ParseMode::Empty, decoded: None },
    }
}

/// Conditioning prefix for `copies` disjoint copies of `motif`: one trail of
/// the motif drawn with [`MOTIF_SEED`], repeated as successive segments with
/// the node ids of copy `j` shifted by `j * n`. Starts with BOS, no EOS.
pub fn motif_prefix(motif: &Graph, copies: usize, vocab: &Vocab, encoding: Encoding) -> Result<Vec<u32>> {
    if motif.n() == 0 || copies == 0 {
        return Err(CliError::config("a motif needs at least one node and one copy"));
    }
    if motif.n() * copies > vocab.max_nodes {
        return Err(Error::Capacity(format!(
            "{copies} copies of a {}-node motif exceed the vocabulary cap of {} nodes",
            motif.n(),
            vocab.max_nodes
        ))
        .into());
    }
    let seq = encode_graph(motif, vocab, encoding, &mut stream_rng(MOTIF_SEED, 0))?;
    let mut out = vec![BOS];
    for copy in 0..copies {
        if copy > 0 {
            out.push(SEP);
        }
        for &t in seq.content() {
            out.push(match vocab.classify(t) {
                Some(Token::Node(i)) => vocab.node_token(i + copy * motif.n())?,
                _ => t,
            });
        }
    }
    Ok(out)
}

/// Graph spelled by a BOS-first token prefix that ends on a unit boundary.
pub fn prefix_tokens_graph(prefix: &[u32], vocab: &Vocab, encoding: Encoding) -> Result<Graph> {
    let mut tokens = prefix.to_vec();
    if tokens.last() != Some(&EOS) {
        tokens.push(EOS);
    }
    Ok(decode_graph(&TokenSeq::new(tokens), vocab, encoding, false)?.0)
}

/// True when every tuple-boundary prefix of the decoded trail generates an
/// induced subgraph of the final graph.
pub fn prefixes_induced(decoded: &Decoded, graph: &Graph) -> bool {
    let total = decoded.sent.tuple_count();
    (1..=total).all(|t| prefix_graph(&decoded.sent, t).map_or(false, |p| graph.has_induced_prefix(&p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sentgraph_model::UniformModel;

    #[test]
    fn motif_copies_are_induced_in_prefix() {
        let vocab = Vocab::new(20);
        let c6 = Graph::cycle(6);
        for enc in [Encoding::Sent, Encoding::Set] {
            let prefix = motif_prefix(&c6, 2, &vocab, enc).unwrap();
            assert_eq!(prefix.iter().filter(|&&t| t == SEP).count(), 1);
            let g = prefix_tokens_graph(&prefix, &vocab, enc).unwrap();
            assert_eq!(g.n(), 12);
            assert_eq!(g.m(), 12);
            assert_eq!(g.components(), 2);
        }
        assert!(motif_prefix(&c6, 4, &vocab, Encoding::Sent).is_err());
    }

    #[test]
    fn uniform_samples_decode_strictly() {
        let vocab = Vocab::new(8);
        let model = UniformModel::new(vocab.size());
        let cfg = SampleConfig::default();
        let out = sample_graphs(&model, &vocab, Encoding::Sent, &[], &cfg, 20, 1).unwrap();
        for g in &out {
            assert_eq!(g.parse, ParseMode::Strict);
            assert!(prefixes_induced(g.decoded.as_ref().unwrap(), &g.graph));
        }
    }
}
