//! `train` and `sample`.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sentgraph_core::io::{read_graphs, write_graphs, GraphRecord};
use sentgraph_core::vocab::{read_corpus, write_corpus, EOS};
use sentgraph_core::{Encoding, Graph, TokenSeq, Vocab};
use sentgraph_data::dataset::{read_tokens, read_vocab, tokens_path, vocab_path, Split};
use sentgraph_model::{loss_csv, AnyModel, Checkpoint, SampleConfig, TrainConfig, TransformerConfig};

use crate::config::{read_bytes, read_file, required, settings, write_file, write_snapshot};
use crate::error::{CliError, Result};
use crate::pipeline::{motif_prefix, prefix_tokens_graph, sample_graphs, train_model, GeneratedGraph, ModelSpec};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "generation.jsonl";

settings! {
    Train / TrainFlags {
        /// Dataset or corpus directory with tokens/train.tok and tokens/vocab.
        data: PathBuf = PathBuf::new(),
        /// transformer or ngram.
        model: String = "transformer".into(),
        /// n-gram order.
        order: usize = 4,
        /// n-gram additive smoothing mass.
        delta: f64 = 0.1,
        width: usize = 64,
        layers: usize = 2,
        heads: usize = 4,
        /// Context length; 0 fits the longest training sequence.
        context: usize = 0,
        mlp_ratio: usize = 4,
        /// Share the output projection with the token embedding.
        tied: bool = false,
        steps: usize = 300,
        batch_size: usize = 32,
        lr: f64 = 3e-3,
        min_lr_ratio: f64 = 0.1,
        warmup_frac: f64 = 0.05,
        weight_decay: f64 = 0.1,
        grad_clip: f64 = 1.0,
        dropout: f64 = 0.1,
        eval_every: usize = 50,
        seed: u64 = 0,
        out: PathBuf = PathBuf::new(),
    }
}

settings! {
    Sample / SampleFlags {
        checkpoint: PathBuf = PathBuf::new(),
        count: usize = 64,
        top_k: usize = 10,
        temperature: f64 = 1.0,
        /// Maximum sequence length including BOS.
        max_len: usize = 2048,
        /// Mask every step to the grammar's legal tokens.
        constrained: bool = true,
        /// Token file whose first line is the conditioning prefix.
        prefix: PathBuf = PathBuf::new(),
        /// Graph file whose first graph is flattened into the conditioning prefix.
        motif: PathBuf = PathBuf::new(),
        /// Disjoint motif copies, one segment each.
        copies: usize = 1,
        seed: u64 = 0,
        out: PathBuf = PathBuf::new(),
    }
}

/// Model and optimizer settings of a `train` run.
pub fn model_spec(s: &Train) -> Result<ModelSpec> {
    Ok(match s.model.as_str() {
        "ngram" => ModelSpec::NGram { order: s.order, delta: s.delta },
        "transformer" => ModelSpec::Transformer {
            config: TransformerConfig {
                vocab_size: 0,
                context: s.context,
                width: s.width,
                layers: s.layers,
                heads: s.heads,
                mlp_ratio: s.mlp_ratio,
                tied: s.tied,
            },
            train: TrainConfig {
                steps: s.steps,
                batch_size: s.batch_size,
                peak_lr: s.lr,
                min_lr_ratio: s.min_lr_ratio,
                warmup_frac: s.warmup_frac,
                weight_decay: s.weight_decay,
                grad_clip: s.grad_clip,
                dropout: s.dropout,
                eval_every: s.eval_every,
                seed: s.seed,
                ..TrainConfig::default()
            },
        },
        other => return Err(CliError::config(format!("unknown model type `{other}`"))),
    })
}

pub struct Corpus {
    pub vocab: Vocab,
    pub encoding: Encoding,
    pub train: Vec<TokenSeq>,
    pub val: Vec<TokenSeq>,
}

pub fn read_corpus_dir(dir: &Path) -> Result<Corpus> {
    let (vocab, encoding) = read_vocab(&vocab_path(dir))?;
    let train = read_tokens(&tokens_path(dir, Split::Train))?;
    let val_path = tokens_path(dir, Split::Val);
    let val = if val_path.exists() { read_tokens(&val_path)? } else { Vec::new() };
    Ok(Corpus { vocab, encoding, train, val })
}

/// Trains, then writes the checkpoint and loss curve into `out`.
pub fn train_into(out: &Path, spec: &ModelSpec, corpus: &Corpus, seed: u64) -> Result<Checkpoint> {
    let (model, curve) = train_model(spec, &corpus.vocab, &corpus.train, &corpus.val, |p| {
        if let Some(v) = p.val_nll {
            log::info!("step {}: train {:.4}, val {:.4}", p.step, p.train_nll, v);
        }
    })?;
    let ckpt = Checkpoint { vocab: corpus.vocab, encoding: corpus.encoding, seed, model };
    write_file(&out.join(CHECKPOINT_FILE), &ckpt.to_bytes())?;
    write_file(&out.join("loss.csv"), loss_csv(&curve).as_bytes())?;
    Ok(ckpt)
}

pub fn train(s: &Train) -> Result<()> {
    let data = required(&s.data, "data")?;
    let out = required(&s.out, "out")?;
    let corpus = read_corpus_dir(data)?;
    train_into(out, &model_spec(s)?, &corpus, s.seed)?;
    write_snapshot(out, "train", s)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Ok(Checkpoint::from_bytes(&read_bytes(path)?)?)
}

fn first_graph(path: &Path) -> Result<Graph> {
    read_graphs(&read_file(path)?)?
        .into_iter()
        .next()
        .map(|r| r.graph)
        .ok_or_else(|| CliError::config(format!("{} holds no graph", path.display())))
}

/// Conditioning prefix from the `prefix` or `motif` setting; empty when
/// neither is set.
fn conditioning(s: &Sample, ckpt: &Checkpoint) -> Result<Vec<u32>> {
    match (s.prefix.as_os_str().is_empty(), s.motif.as_os_str().is_empty()) {
        (true, true) => Ok(Vec::new()),
        (false, false) => Err(CliError::config("set at most one of `prefix` and `motif`")),
        (false, true) => {
            let seqs = read_corpus(&read_file(&s.prefix)?)?;
            let mut tokens = seqs.into_iter().next().map(|t| t.tokens).unwrap_or_default();
            if tokens.last() == Some(&EOS) {
                tokens.pop();
            }
            Ok(tokens)
        }
        (true, false) => motif_prefix(&first_graph(&s.motif)?, s.copies, &ckpt.vocab, ckpt.encoding),
    }
}

fn log_line(i: usize, g: &GeneratedGraph, seed: u64, motif_induced: Option<bool>) -> String {
    let (violation, violation_at) = match &g.sampled.violation {
        Some((at, v)) => (Some(v.code()), Some(*at)),
        None => (None, None),
    };
    let record = serde_json::json!({
        "index": i,
        "seed": seed,
        "length": g.sampled.tokens.len(),
        "truncated": g.sampled.truncated,
        "parse": g.parse,
        "violation": violation,
        "violation_at": violation_at,
        "nodes": g.graph.n(),
        "edges": g.graph.m(),
        "motif_induced": motif_induced,
    });
    record.to_string()
}

/// Appends one record per sample to the generation log.
fn append_log(path: &Path, lines: &[String]) -> Result<()> {
    let io = |source| CliError::File { path: path.into(), source };
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let mut text = lines.join("\n");
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(io)
}

pub fn sample(s: &Sample) -> Result<()> {
    let out = required(&s.out, "out")?;
    let ckpt = load_checkpoint(required(&s.checkpoint, "checkpoint")?)?;
    let prefix = conditioning(s, &ckpt)?;
    let motif = if s.motif.as_os_str().is_empty() {
        None
    } else {
        Some(prefix_tokens_graph(&prefix, &ckpt.vocab, ckpt.encoding)?)
    };
    let cfg = SampleConfig { top_k: s.top_k, temperature: s.temperature, max_len: s.max_len, constrained: s.constrained };
    let model: &AnyModel = &ckpt.model;
    let generated = sample_graphs(model.as_lm(), &ckpt.vocab, ckpt.encoding, &prefix, &cfg, s.count, s.seed)?;

    let records: Vec<GraphRecord> =
        generated.iter().enumerate().map(|(i, g)| GraphRecord::new(i.to_string(), g.graph.clone())).collect();
    let seqs: Vec<TokenSeq> = generated.iter().map(|g| g.sampled.tokens.clone()).collect();
    let lines: Vec<String> = generated
        .iter()
        .enumerate()
        .map(|(i, g)| log_line(i, g, s.seed, motif.as_ref().map(|m| g.graph.has_induced_prefix(m))))
        .collect();
    write_file(&out.join("samples.glist"), write_graphs(&records).as_bytes())?;
    write_file(&out.join("samples.tok"), write_corpus(&seqs).as_bytes())?;
    append_log(&out.join(LOG_FILE), &lines)?;
    write_snapshot(out, "sample", s)?;
    let parsed = generated.iter().filter(|g| g.sampled.parses()).count();
    println!("sampled {} graphs, {parsed} parsed in full", generated.len());
    Ok(())
}
