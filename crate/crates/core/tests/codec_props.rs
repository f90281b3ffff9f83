use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use sentgraph_core::{
    are_isomorphic, decode_graph, detokenize, encode_graph, prefix_graph, reconstruct, reindex,
    reindex_with_map, sample_sent, stream_rng, tokenize, validate_sent, Draw, Encoding, Graph,
    LabelMaps, NbTuple, Sent, Vocab,
};

fn random_graph<R: Rng>(rng: &mut R, max_n: usize) -> Graph {
    let n = rng.gen_range(1..=max_n);
    let p: f64 = rng.gen_range(0.0..0.6);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

fn random_perm<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = Graph::new(n);
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits[k] {
                        g.add_edge(u, v).unwrap();
                    }
                    k += 1;
                }
            }
            g
        })
    })
}

proptest! {
    #[test]
    fn round_trip_and_length_law(g in arb_graph(14), seed in any::<u64>()) {
        let vocab = Vocab::new(16);
        let t = encode_graph(&g, &vocab, Encoding::Sent, &mut stream_rng(seed, 0)).unwrap();
        let (h, decoded) = decode_graph(&t, &vocab, Encoding::Sent, false).unwrap();
        prop_assert!(are_isomorphic(&g, &h));
        let k = decoded.sent.segments.len();
        prop_assert_eq!(t.content().len(), 2 * g.n() + g.m() + 2 * k - 1);
        prop_assert_eq!(tokenize(&decoded.sent, &vocab, None).unwrap(), t);
    }

    #[test]
    fn sampled_sents_satisfy_the_theorem(g in arb_graph(12), seed in any::<u64>()) {
        let s = sample_sent(&g, &mut stream_rng(seed, 1)).unwrap();
        let report = validate_sent(&s, Some(&g));
        prop_assert!(report.all_ok(), "{:?}", report);
        prop_assert_eq!(s.trail_steps() + s.nbset_total(), g.m());
        let (r, map) = reindex_with_map(&s).unwrap();
        let full = reconstruct(&r).unwrap();
        for c in 1..=r.tuple_count() {
            let prefix = prefix_graph(&r, c).unwrap();
            prop_assert!(full.has_induced_prefix(&prefix));
            // Same check against the original graph through the relabeling.
            let nodes: Vec<usize> = map.order[..prefix.n()].to_vec();
            prop_assert_eq!(g.induced_subgraph(&nodes).unwrap(), prefix);
        }
    }

    #[test]
    fn reindex_ignores_original_ids(g in arb_graph(10), seed in any::<u64>(), pseed in any::<u64>()) {
        let s = sample_sent(&g, &mut stream_rng(seed, 2)).unwrap();
        let perm = random_perm(&mut stream_rng(pseed, 0), g.n());
        let renamed = Sent::new(
            s.segments
                .iter()
                .map(|seg| seg.iter().map(|t| NbTuple::new(perm[t.node] + 100, t.nbset.iter().map(|&u| perm[u] + 100).collect())).collect())
                .collect(),
        );
        prop_assert_eq!(reindex(&renamed).unwrap(), reindex(&s).unwrap());
    }
}

#[test]
fn thousand_graph_round_trip_and_validation() {
    let mut rng = stream_rng(11, 0);
    let vocab = Vocab::new(40);
    for _ in 0..1000 {
        let g = random_graph(&mut rng, 40);
        let s = sample_sent(&g, &mut rng).unwrap();
        assert!(validate_sent(&s, Some(&g)).all_ok());
        let r = reindex(&s).unwrap();
        let t = tokenize(&r, &vocab, None).unwrap();
        let d = detokenize(&t, &vocab).unwrap();
        assert_eq!(d.sent, r);
        assert!(are_isomorphic(&reconstruct(&d.sent).unwrap(), &g));
    }
}

#[test]
fn attributed_round_trip_and_length_law() {
    let mut rng = stream_rng(12, 0);
    let vocab = Vocab::attributed(30, 3, 4);
    for _ in 0..300 {
        let mut g = random_graph(&mut rng, 30);
        let labels: Vec<u32> = (0..g.n()).map(|_| rng.gen_range(0..3)).collect();
        let edge_labels = g.edges().map(|e| (e, rng.gen_range(0..4))).collect();
        g.set_node_labels(labels).unwrap();
        g.set_edge_labels(edge_labels).unwrap();
        let t = encode_graph(&g, &vocab, Encoding::Sent, &mut rng).unwrap();
        let (h, d) = decode_graph(&t, &vocab, Encoding::Sent, false).unwrap();
        assert!(are_isomorphic(&g, &h));
        let k = d.sent.segments.len();
        assert_eq!(t.content().len(), 3 * g.n() + 2 * g.m() + 2 * k - 1);
        let labels: &LabelMaps = d.labels.as_ref().unwrap();
        assert_eq!(tokenize(&d.sent, &vocab, Some(labels)).unwrap(), t);
    }
}

/// Replays a fixed prefix of choices, then always picks 0, recording the
/// arity of every draw. Walking the tree of prefixes visits every possible
/// run of a sampler.
struct Scripted {
    script: Vec<usize>,
    arities: Vec<usize>,
}

impl Draw for Scripted {
    fn draw(&mut self, len: usize) -> usize {
        let i = self.arities.len();
        self.arities.push(len);
        self.script.get(i).copied().unwrap_or(0)
    }
}

fn all_token_sequences(g: &Graph, vocab: &Vocab) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    let mut stack = vec![Vec::new()];
    while let Some(script) = stack.pop() {
        let mut d = Scripted { script: script.clone(), arities: Vec::new() };
        let s = reindex(&sample_sent(g, &mut d).unwrap()).unwrap();
        out.insert(tokenize(&s, vocab, None).unwrap().tokens);
        for i in script.len()..d.arities.len() {
            let mut base: Vec<usize> = script.clone();
            base.extend(std::iter::repeat(0).take(i - script.len()));
            for choice in 1..d.arities[i] {
                let mut next = base.clone();
                next.push(choice);
                stack.push(next);
            }
        }
    }
    out
}

#[test]
fn token_support_is_permutation_invariant() {
    let mut rng = stream_rng(13, 0);
    let vocab = Vocab::new(6);
    for _ in 0..40 {
        let g = random_graph(&mut rng, 6);
        let perm = random_perm(&mut rng, g.n());
        let h = g.permute(&perm).unwrap();
        let a = all_token_sequences(&g, &vocab);
        let b = all_token_sequences(&h, &vocab);
        assert_eq!(a, b);
        for t in &a {
            let (back, _) = decode_graph(&sentgraph_core::TokenSeq::new(t.clone()), &vocab, Encoding::Sent, false).unwrap();
            assert!(are_isomorphic(&back, &g));
        }
    }
}

#[test]
fn literal_counterexample_prefix() {
    let s = Sent::new(vec![[1, 2, 3, 4, 1, 3].iter().map(|&v| NbTuple::bare(v)).collect()]);
    let full = reconstruct(&s).unwrap();
    let prefix = prefix_graph(&s, 5).unwrap();
    assert!(!full.has_induced_prefix(&prefix));
    let report = validate_sent(&s, None);
    assert!(!report.semi_hamiltonian || !report.hamiltonian);
}
