//! `gen-data`, `encode`, `decode` and `calibrate-sbm`.

use std::path::{Path, PathBuf};

use sentgraph_core::io::{read_graphs, write_graphs, GraphRecord};
use sentgraph_core::vocab::read_corpus;
use sentgraph_core::{decode_graph, Encoding, Graph, Vocab};
use sentgraph_data::dataset::{
    assign_splits, read_split, read_vocab, write_split, write_tokens, write_vocab, Manifest, Split, SplitGraphs,
};
use sentgraph_data::{build_corpus, generate, DatasetSpec, Family};
use sentgraph_eval::{calibrate, SbmValidity};

use crate::config::{read_file, required, settings, write_file, write_snapshot};
use crate::error::{CliError, Result};

settings! {
    GenData / GenDataFlags {
        /// Graph family: planar, sbm, tree, cycle, grid, lobster or er.
        family: String = "planar".into(),
        count: usize = 200,
        /// Nodes per graph (grid: side length); 0 picks the family default.
        nodes: usize = 0,
        /// Upper end of a uniform node-count range; 0 keeps sizes fixed.
        nodes_max: usize = 0,
        /// Erdős–Rényi edge probability.
        edge_prob: f64 = 0.2,
        /// Comma-separated train,val,test fractions; empty picks the family default.
        split: String = String::new(),
        samples_per_graph: usize = 32,
        /// Trail encoding of the token corpus: sent or set.
        encoding: String = "sent".into(),
        /// Node cap of the vocabulary; 0 uses the largest graph.
        max_nodes: usize = 0,
        seed: u64 = 0,
        out: PathBuf = PathBuf::new(),
    }
}

settings! {
    Encode / EncodeFlags {
        /// Dataset directory (encodes its train and val splits) or a graph file.
        input: PathBuf = PathBuf::new(),
        /// sent or set.
        mode: String = "sent".into(),
        samples_per_graph: usize = 1,
        /// Node cap of the vocabulary; 0 uses the largest graph.
        max_nodes: usize = 0,
        seed: u64 = 0,
        out: PathBuf = PathBuf::new(),
    }
}

settings! {
    Decode / DecodeFlags {
        /// Token corpus, one sequence per line.
        tokens: PathBuf = PathBuf::new(),
        /// Vocabulary header; defaults to `vocab` next to the tokens.
        vocab: PathBuf = PathBuf::new(),
        /// Keep the longest valid prefix of malformed sequences instead of failing.
        lenient: bool = false,
        out: PathBuf = PathBuf::new(),
    }
}

settings! {
    CalibrateSbm / CalibrateSbmFlags {
        /// Fresh SBM draws to check.
        count: usize = 100,
        /// Acceptance rate the suggested tolerances should reach.
        target: f64 = 0.95,
        tol_in: f64 = 0.1,
        tol_out: f64 = 0.04,
        seed: u64 = 0,
        out: PathBuf = PathBuf::new(),
    }
}

fn parse_split(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|w| w.trim().parse::<f64>().map_err(|_| CliError::config(format!("bad split fraction `{w}`"))))
        .collect::<Result<_>>()?;
    parts.try_into().map_err(|_| CliError::config("split needs three fractions: train,val,test"))
}

pub fn dataset_spec(s: &GenData) -> Result<DatasetSpec> {
    let family: Family = s.family.parse()?;
    let mut spec = DatasetSpec::new(family, s.count, s.seed);
    if s.nodes > 0 {
        spec.nodes = s.nodes;
    }
    if s.nodes_max > 0 {
        spec.nodes_max = Some(s.nodes_max);
    }
    spec.edge_prob = s.edge_prob;
    if !s.split.is_empty() {
        spec.split = parse_split(&s.split)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn vocab_for(max_nodes: usize, graphs: &[&Graph]) -> Vocab {
    let cap = if max_nodes > 0 { max_nodes } else { graphs.iter().map(|g| g.n()).max().unwrap_or(1).max(1) };
    Vocab::new(cap)
}

/// Encodes each split and writes `tokens/` plus lineage into `manifest`.
fn write_corpus(
    dir: &Path,
    splits: &[(Split, &SplitGraphs)],
    vocab: &Vocab,
    encoding: Encoding,
    samples_per_graph: usize,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<()> {
    for &(split, graphs) in splits {
        let plain: Vec<Graph> = graphs.records.iter().map(|r| r.graph.clone()).collect();
        let corpus = build_corpus(&plain, samples_per_graph, vocab, encoding, seed)?;
        let ids: Vec<String> = graphs.records.iter().map(|r| r.id.clone()).collect();
        write_tokens(dir, split, &corpus.seqs)?;
        manifest.add_lineage(split, &corpus, &ids);
        manifest.set(&format!("{}_sequences", split.name()), corpus.seqs.len());
        if !corpus.skipped.is_empty() {
            manifest.set(&format!("{}_skipped", split.name()), corpus.skipped.len());
        }
    }
    write_vocab(dir, vocab, encoding)?;
    Ok(())
}

pub fn gen_data(s: &GenData) -> Result<()> {
    let out = required(&s.out, "out")?;
    let spec = dataset_spec(s)?;
    let encoding: Encoding = s.encoding.parse()?;
    let splits = assign_splits(&spec, generate(&spec)?);
    for (split, graphs) in Split::ALL.iter().zip(&splits) {
        write_split(out, *split, graphs)?;
    }
    let all: Vec<&Graph> = splits.iter().flat_map(|s| s.records.iter().map(|r| &r.graph)).collect();
    let vocab = vocab_for(s.max_nodes, &all);
    let mut manifest = Manifest::default();
    manifest.set("family", spec.family);
    manifest.set("count", spec.count);
    manifest.set("seed", spec.seed);
    for (split, graphs) in Split::ALL.iter().zip(&splits) {
        manifest.set(&format!("{}_graphs", split.name()), graphs.records.len());
    }
    manifest.set("encoding", encoding);
    manifest.set("samples_per_graph", s.samples_per_graph);
    manifest.set("max_nodes", vocab.max_nodes);
    let corpus_splits = [(Split::Train, &splits[0]), (Split::Val, &splits[1])];
    write_corpus(out, &corpus_splits, &vocab, encoding, s.samples_per_graph, s.seed, &mut manifest)?;
    manifest.write(out)?;
    write_snapshot(out, "gen-data", s)?;
    log::info!("wrote {} graphs to {}", spec.count, out.display());
    Ok(())
}

pub fn encode(s: &Encode) -> Result<()> {
    let input = required(&s.input, "input")?;
    let out = required(&s.out, "out")?;
    let encoding: Encoding = s.mode.parse()?;
    let splits: Vec<(Split, SplitGraphs)> = if input.is_dir() {
        vec![(Split::Train, read_split(input, Split::Train)?), (Split::Val, read_split(input, Split::Val)?)]
    } else {
        let records = read_graphs(&read_file(input)?)?;
        vec![(Split::Train, SplitGraphs { records, ..Default::default() })]
    };
    let all: Vec<&Graph> = splits.iter().flat_map(|(_, s)| s.records.iter().map(|r| &r.graph)).collect();
    let vocab = vocab_for(s.max_nodes, &all);
    let mut manifest = Manifest::default();
    manifest.set("source", input.display());
    manifest.set("encoding", encoding);
    manifest.set("samples_per_graph", s.samples_per_graph);
    manifest.set("max_nodes", vocab.max_nodes);
    manifest.set("seed", s.seed);
    let refs: Vec<(Split, &SplitGraphs)> = splits.iter().map(|(k, g)| (*k, g)).collect();
    write_corpus(out, &refs, &vocab, encoding, s.samples_per_graph, s.seed, &mut manifest)?;
    manifest.write(out)?;
    write_snapshot(out, "encode", s)
}

pub fn decode(s: &Decode) -> Result<()> {
    let tokens = required(&s.tokens, "tokens")?;
    let out = required(&s.out, "out")?;
    let vocab_path = if s.vocab.as_os_str().is_empty() {
        tokens.parent().unwrap_or(Path::new(".")).join("vocab")
    } else {
        s.vocab.clone()
    };
    let (vocab, encoding) = read_vocab(&vocab_path)?;
    let seqs = read_corpus(&read_file(tokens)?)?;
    let mut records = Vec::with_capacity(seqs.len());
    for (i, seq) in seqs.iter().enumerate() {
        let (graph, _) = decode_graph(seq, &vocab, encoding, s.lenient)
            .inspect_err(|_| log::error!("sequence {i} does not parse"))?;
        records.push(GraphRecord::new(i.to_string(), graph));
    }
    write_file(&out.join("graphs.glist"), write_graphs(&records).as_bytes())?;
    write_snapshot(out, "decode", s)
}

pub fn calibrate_sbm(s: &CalibrateSbm) -> Result<()> {
    let out = required(&s.out, "out")?;
    let spec = DatasetSpec::new(Family::Sbm, s.count, s.seed);
    let graphs: Vec<Graph> = generate(&spec)?.into_iter().map(|g| g.graph).collect();
    let params = SbmValidity { tol_in: s.tol_in, tol_out: s.tol_out, ..Default::default() };
    let cal = calibrate(&graphs, &params, s.target);
    println!(
        "accepted {:.3} of {} draws (structure {:.3}); tolerances for {:.2}: tol-in {:.4}, tol-out {:.4}",
        cal.accept_rate, cal.graphs, cal.structure_rate, s.target, cal.suggested_tol_in, cal.suggested_tol_out
    );
    let json = serde_json::to_string_pretty(&cal).expect("calibration serializes");
    write_file(&out.join("calibration.json"), json.as_bytes())?;
    write_snapshot(out, "calibrate-sbm", s)
}
