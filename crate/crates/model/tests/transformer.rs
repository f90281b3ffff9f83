use proptest::prelude::*;
use rand::Rng;
use sentgraph_core::vocab::{BOS, CLOSE, EOS, OPEN};
use sentgraph_core::{detokenize, encode_graph, stream_rng, DecoderState, Encoding, Graph, TokenSeq, Vocab};
use sentgraph_model::checkpoint::{AnyModel, Checkpoint};
use sentgraph_model::{
    grad_check, loss_csv, sample_many, sample_tokens, top_k_dist, train_ngram, train_transformer, transformer_nll,
    LanguageModel, NGramModel, SampleConfig, TinyTransformer, TrainConfig, TransformerConfig, UniformModel,
};

fn tiny_config(vocab_size: usize) -> TransformerConfig {
    TransformerConfig { vocab_size, context: 8, width: 8, layers: 2, heads: 2, mlp_ratio: 4, tied: false }
}

fn random_tokens(len: usize, vocab: usize, seed: u64) -> Vec<u32> {
    let mut rng = stream_rng(seed, 0);
    let mut t = vec![BOS];
    t.extend((1..len).map(|_| rng.gen_range(2..vocab as u32)));
    t
}

#[test]
fn gradient_matches_finite_differences() {
    for tied in [false, true] {
        let mut cfg = tiny_config(12);
        cfg.tied = tied;
        let model = TinyTransformer::<f64>::init(cfg, &mut stream_rng(5, 0)).unwrap();
        // Perturb norms and biases away from their init so every path carries gradient.
        let mut model = model;
        let mut rng = stream_rng(5, 1);
        model.params.iter_mut().for_each(|p| *p += rng.gen_range(-0.3..0.3));
        let mut batch: Vec<TokenSeq> = (0..3).map(|i| TokenSeq::new(random_tokens(9, 12, 10 + i))).collect();
        batch[2].tokens[6] = 0; // a PAD target is skipped
        let report = grad_check(&model, &batch, 1e-4, 1e-4);
        for t in &report.tensors {
            assert!(t.rel_error <= 1e-4 && t.worst_excess <= 0.0, "tied={tied} {t:?}");
        }
        assert!(report.passed());
    }
}

#[test]
fn attention_is_causal_bitwise() {
    let model = TinyTransformer::<f32>::init(TransformerConfig { context: 16, ..tiny_config(12) }, &mut stream_rng(1, 0))
        .unwrap();
    let base = random_tokens(16, 12, 3);
    let full = model.forward_logits(&base);
    for cut in 1..16 {
        let mut other = base.clone();
        other[cut..].reverse();
        for t in other[cut..].iter_mut() {
            *t = (*t + 3) % 12;
        }
        let alt = model.forward_logits(&other);
        assert_eq!(full[..cut * 12], alt[..cut * 12], "prefix {cut}");
    }
}

#[test]
fn cached_session_matches_full_forward() {
    let model = TinyTransformer::<f32>::init(tiny_config(12), &mut stream_rng(2, 0)).unwrap();
    let tokens = random_tokens(12, 12, 4);
    let mut session = model.session();
    for i in 0..tokens.len() {
        session.push(tokens[i]);
        assert_eq!(session.logits(), model.logits(&tokens[..=i]), "position {i}");
    }
}

fn repeated_corpus() -> (Vocab, TokenSeq) {
    let vocab = Vocab::new(6);
    let g = Graph::cycle(5);
    let seq = encode_graph(&g, &vocab, Encoding::Sent, &mut stream_rng(1, 0)).unwrap();
    (vocab, seq)
}

#[test]
fn memorizes_one_sequence_and_replays_it_greedily() {
    let (vocab, seq) = repeated_corpus();
    let cfg = TransformerConfig { context: 32, width: 32, heads: 2, ..tiny_config(vocab.size()) };
    let mut model = TinyTransformer::<f32>::init(cfg, &mut stream_rng(3, 0)).unwrap();
    let train = vec![seq.clone(); 4];
    let tc = TrainConfig { steps: 150, batch_size: 4, dropout: 0.0, eval_every: 50, seed: 9, ..TrainConfig::default() };
    let curve = train_transformer(&mut model, &train, &train, &tc, |_| {}).unwrap();
    let first = curve[0].train_nll;
    let last = curve.last().unwrap().train_nll;
    assert!(last < 0.05 && last < first / 20.0, "{first} -> {last}");
    let greedy = SampleConfig { top_k: 1, temperature: 1.0, max_len: 64, constrained: false };
    for i in 0..3 {
        let s = sample_tokens(&model, DecoderState::new(vocab), &[], &greedy, &mut stream_rng(i, 0)).unwrap();
        assert_eq!(s.tokens, seq);
        assert!(s.parses());
    }
    assert!(loss_csv(&curve).starts_with("step,train_nll,val_nll\n0,"));
}

#[test]
fn training_is_deterministic_and_learns() {
    let vocab = Vocab::new(8);
    let corpus: Vec<TokenSeq> = (0..20)
        .map(|i| encode_graph(&Graph::path(4 + i % 5), &vocab, Encoding::Sent, &mut stream_rng(i as u64, 0)).unwrap())
        .collect();
    let cfg = TransformerConfig { context: 32, width: 16, ..tiny_config(vocab.size()) };
    let tc = TrainConfig { steps: 40, batch_size: 8, eval_every: 20, seed: 1, ..TrainConfig::default() };
    let run = || {
        let mut m = TinyTransformer::<f32>::init(cfg, &mut stream_rng(7, 0)).unwrap();
        let before = transformer_nll(&m, &corpus);
        let curve = train_transformer(&mut m, &corpus, &corpus[..5], &tc, |_| {}).unwrap();
        (before, curve, m)
    };
    let (before, a, ma) = run();
    let (_, b, mb) = run();
    assert_eq!(a, b);
    assert_eq!(ma.params, mb.params);
    assert!(transformer_nll(&ma, &corpus) < before);
}

#[test]
fn divergence_is_reported() {
    let (vocab, seq) = repeated_corpus();
    let mut model = TinyTransformer::<f32>::init(tiny_config(vocab.size()), &mut stream_rng(0, 0)).unwrap();
    model.params.iter_mut().for_each(|p| *p = f32::NAN);
    let tc = TrainConfig { steps: 3, batch_size: 1, ..TrainConfig::default() };
    let err = train_transformer(&mut model, &[seq], &[], &tc, |_| {}).unwrap_err();
    assert!(err.to_string().contains("learning rate"), "{err}");
}

#[test]
fn out_of_vocab_corpus_is_rejected() {
    let mut model = TinyTransformer::<f32>::init(tiny_config(8), &mut stream_rng(0, 0)).unwrap();
    let bad = TokenSeq::new(vec![BOS, 40, EOS]);
    assert!(train_transformer(&mut model, &[bad], &[], &TrainConfig::default(), |_| {}).is_err());
}

#[test]
fn ngram_closed_form_and_memorization() {
    // One sequence, vocab 10, order 4, δ = 0.1.
    let mut m = NGramModel::new(4, 10, 0.1);
    let seq = TokenSeq::new(vec![BOS, 6, OPEN, CLOSE, EOS]);
    let curve = train_ngram(&mut m, &[seq.clone()], &[]).unwrap();
    let unigram = (1.0 + 0.1 * 0.1) / (4.0 + 0.1);
    let expected = (1.0 + 0.1 * unigram) / (1.0 + 0.1);
    assert!((m.next_dist(&[BOS])[6] - expected).abs() < 1e-12);
    assert!(expected >= 0.9);
    assert!(curve[1].train_nll < curve[0].train_nll);

    let greedy = SampleConfig { top_k: 1, temperature: 1.0, max_len: 16, constrained: true };
    let out = sample_tokens(&m, DecoderState::new(Vocab::new(4)), &[], &greedy, &mut stream_rng(0, 0)).unwrap();
    assert_eq!(out.tokens, seq);
}

#[test]
fn checkpoints_round_trip_and_detect_corruption() {
    let (vocab, seq) = repeated_corpus();
    let t = TinyTransformer::<f32>::init(tiny_config(vocab.size()), &mut stream_rng(4, 0)).unwrap();
    let mut n = NGramModel::new(3, vocab.size(), 0.1);
    n.fit(&[seq]);
    for model in [AnyModel::Transformer(t), AnyModel::NGram(n)] {
        let ck = Checkpoint { vocab, encoding: Encoding::Sent, seed: 11, model };
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..4], b"SGCK");
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
        let mut broken = bytes.clone();
        let mid = broken.len() / 2;
        broken[mid] ^= 1;
        assert!(Checkpoint::from_bytes(&broken).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 5]).is_err());
    }
}

#[test]
fn constrained_uniform_samples_always_parse() {
    let vocab = Vocab::new(10);
    let model = UniformModel::new(vocab.size());
    let cfg = SampleConfig { top_k: vocab.size(), temperature: 1.0, max_len: 512, constrained: true };
    let samples = sample_many(&model, &DecoderState::new(vocab), &[], &cfg, 500, 3).unwrap();
    for s in &samples {
        assert!(s.parses());
        detokenize(&s.tokens, &vocab).unwrap();
    }
    let free = SampleConfig { constrained: false, ..cfg };
    let samples = sample_many(&model, &DecoderState::new(vocab), &[], &free, 200, 3).unwrap();
    assert!(samples.iter().any(|s| !s.parses()));
}

#[test]
fn bad_prefix_is_rejected_with_rule_code() {
    let vocab = Vocab::new(6);
    let model = UniformModel::new(vocab.size());
    let err = sample_tokens(&model, DecoderState::new(vocab), &[BOS, 7], &SampleConfig::default(), &mut stream_rng(0, 0))
        .unwrap_err();
    assert!(err.to_string().contains("E_GAP_INDEX"), "{err}");
    let ok = sample_tokens(&model, DecoderState::new(vocab), &[BOS, 6, OPEN, CLOSE], &SampleConfig::default(), &mut stream_rng(0, 0));
    assert!(ok.is_ok());
}

proptest! {
    #[test]
    fn sampling_distribution_is_normalized(
        logits in prop::collection::vec(prop_oneof![Just(f64::NEG_INFINITY), -30.0f64..30.0], 1..40),
        k in 1usize..50,
        temp in 0.05f64..5.0,
    ) {
        prop_assume!(logits.iter().any(|x| x.is_finite()));
        let d = top_k_dist(&logits, k, temp);
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(d.iter().filter(|&&p| p > 0.0).count() <= k);
        for (p, l) in d.iter().zip(&logits) {
            prop_assert!(*p >= 0.0);
            if *l == f64::NEG_INFINITY { prop_assert_eq!(*p, 0.0); }
        }
    }

    #[test]
    fn model_distributions_are_normalized(ctx in prop::collection::vec(0u32..12, 1..20), seed in 0u64..50) {
        let model = TinyTransformer::<f32>::init(tiny_config(12), &mut stream_rng(seed, 0)).unwrap();
        let p = model.next_dist(&ctx);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut n = NGramModel::new(4, 12, 0.1);
        n.fit(&[TokenSeq::new(ctx.clone())]);
        prop_assert!((n.next_dist(&ctx).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
