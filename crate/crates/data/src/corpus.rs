//! Token corpora: several random trail encodings per graph.

use rayon::prelude::*;
use sentgraph_core::{encode_graph, stream_rng, Encoding, Graph, Result, TokenSeq, Vocab};

/// Which graph and which of its samples a sequence came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lineage {
    pub graph: usize,
    pub sample: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub seqs: Vec<TokenSeq>,
    pub lineage: Vec<Lineage>,
    /// Graphs left out because they exceed the vocabulary's node cap.
    pub skipped: Vec<usize>,
}

/// Encodes every graph `samples_per_graph` times. Graph `i` uses stream `i`
/// of `seed`, with its samples drawn one after another from that stream.
pub fn build_corpus(
    graphs: &[Graph],
    samples_per_graph: usize,
    vocab: &Vocab,
    encoding: Encoding,
    seed: u64,
) -> Result<Corpus> {
    if samples_per_graph == 0 {
        return Err(sentgraph_core::Error::Input("samples_per_graph must be at least 1".into()));
    }
    let per_graph: Vec<Option<Vec<TokenSeq>>> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            if g.n() > vocab.max_nodes {
                return Ok(None);
            }
            let mut rng = stream_rng(seed, i as u64);
            (0..samples_per_graph)
                .map(|_| encode_graph(g, vocab, encoding, &mut rng))
                .collect::<Result<Vec<_>>>()
                .map(Some)
        })
        .collect::<Result<_>>()?;

    let mut corpus = Corpus::default();
    for (i, seqs) in per_graph.into_iter().enumerate() {
        match seqs {
            None => {
                log::warn!(
                    "skipping graph {i}: {} nodes exceed the vocabulary cap of {}",
                    graphs[i].n(),
                    vocab.max_nodes
                );
                corpus.skipped.push(i);
            }
            Some(seqs) => {
                for (sample, s) in seqs.into_iter().enumerate() {
                    corpus.seqs.push(s);
                    corpus.lineage.push(Lineage { graph: i, sample });
                }
            }
        }
    }
    Ok(corpus)
}

/// Seed for re-encoding a corpus at a given epoch when trails are resampled
/// during training (splitmix64 finalizer over seed and epoch).
pub fn epoch_seed(seed: u64, epoch: u64) -> u64 {
    let mut z = seed ^ epoch.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sentgraph_core::{replay, DecoderState, TokenGrammar};

    #[test]
    fn one_sample_per_graph() {
        let graphs: Vec<Graph> = (3..10).map(Graph::cycle).collect();
        let v = Vocab::new(8);
        let c = build_corpus(&graphs, 1, &v, Encoding::Sent, 1).unwrap();
        assert_eq!(c.seqs.len(), 6);
        assert_eq!(c.skipped, vec![6]);
        for s in &c.seqs {
            assert!(replay(DecoderState::new(v), &s.tokens).unwrap().is_done());
        }
        assert_eq!(c, build_corpus(&graphs, 1, &v, Encoding::Sent, 1).unwrap());
    }

    #[test]
    fn seeds_change_samples() {
        let g = vec![Graph::path(12)];
        let v = Vocab::new(12);
        let a = build_corpus(&g, 4, &v, Encoding::Sent, 1).unwrap();
        let b = build_corpus(&g, 4, &v, Encoding::Sent, 2).unwrap();
        assert_ne!(a.seqs, b.seqs);
        assert_ne!(epoch_seed(1, 0), epoch_seed(1, 1));
    }
}
