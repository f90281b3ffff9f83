use sentgraph_core::{replay, DecoderState, Encoding, TokenGrammar, Vocab};
use sentgraph_data::dataset::assign_splits;
use sentgraph_data::{build_corpus, generate, DatasetSpec, Family};

#[test]
fn sbm_intra_density_is_near_construction() {
    let spec = DatasetSpec::new(Family::Sbm, 100, 5);
    let (mut intra_edges, mut intra_pairs) = (0usize, 0usize);
    for gen in generate(&spec).unwrap() {
        let blocks = gen.blocks.unwrap();
        let n = gen.graph.n();
        assert!((40..=200).contains(&n));
        for u in 0..n {
            for v in u + 1..n {
                if blocks[u] == blocks[v] {
                    intra_pairs += 1;
                    intra_edges += usize::from(gen.graph.has_edge(u, v));
                }
            }
        }
    }
    let density = intra_edges as f64 / intra_pairs as f64;
    assert!((density - 0.3).abs() < 0.02, "{density}");
}

#[test]
fn er_mean_edge_count() {
    let mut spec = DatasetSpec::new(Family::Er, 200, 6);
    spec.nodes = 50;
    spec.edge_prob = 0.2;
    let graphs = generate(&spec).unwrap();
    let mean = graphs.iter().map(|g| g.graph.m() as f64).sum::<f64>() / 200.0;
    assert!((mean - 245.0).abs() < 10.0, "{mean}");
}

#[test]
fn simple_families_have_expected_shapes() {
    let graphs = generate(&DatasetSpec::new(Family::Cycle, 5, 1)).unwrap();
    assert!(graphs.iter().all(|g| (0..g.graph.n()).all(|v| g.graph.degree(v) == 2)));
    let mut spec = DatasetSpec::new(Family::Tree, 20, 1);
    spec.nodes_max = Some(40);
    for g in generate(&spec).unwrap() {
        assert!(g.graph.is_connected() && g.graph.m() + 1 == g.graph.n());
        assert!((32..=40).contains(&g.graph.n()));
    }
}

#[test]
fn planar_dataset_splits_and_corpus() {
    let mut spec = DatasetSpec::new(Family::Planar, 200, 7);
    spec.nodes = 16;
    let generated = generate(&spec).unwrap();
    assert!(generated.iter().all(|g| g.graph.is_connected() && g.graph.m() <= 3 * 16 - 6));
    let splits = assign_splits(&spec, generated);
    let sizes: Vec<usize> = splits.iter().map(|s| s.records.len()).collect();
    assert_eq!(sizes, vec![128, 32, 40]);

    let train: Vec<_> = splits[0].records.iter().map(|r| r.graph.clone()).collect();
    let vocab = Vocab::new(16);
    let corpus = build_corpus(&train, 1, &vocab, Encoding::Sent, 3).unwrap();
    assert_eq!(corpus.seqs.len(), 128);
    for s in &corpus.seqs {
        assert!(replay(DecoderState::new(vocab), &s.tokens).unwrap().is_done());
    }
    let corpus = build_corpus(&train, 32, &vocab, Encoding::Sent, 3).unwrap();
    assert_eq!(corpus.seqs.len(), 128 * 32);
}
