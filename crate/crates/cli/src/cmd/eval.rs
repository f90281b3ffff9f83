//! `eval` and `ablate`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sentgraph_core::io::{read_graphs, write_graphs, GraphRecord};
use sentgraph_core::{Encoding, Graph, Vocab};
use sentgraph_data::build_corpus;
use sentgraph_data::dataset::{read_split, Split};
use sentgraph_eval::{full_report, MmdConfig, ReportConfig, SampleReport, SbmValidity, Validity};
use sentgraph_model::{Checkpoint, LossPoint, SampleConfig};

use crate::cmd::model::{model_spec, Corpus, Train, CHECKPOINT_FILE};
use crate::config::{read_file, required, settings, write_file, write_snapshot};
use crate::error::{CliError, Result};
use crate::pipeline::{prefixes_induced, sample_graphs, train_model, GeneratedGraph};

settings! {
    Eval / EvalFlags {
        /// Graph file of generated samples.
        generated: PathBuf = PathBuf::new(),
        train: PathBuf = PathBuf::new(),
        test: PathBuf = PathBuf::new(),
        /// any, planar, tree or sbm.
        validity: String = "planar".into(),
        /// Gaussian kernel bandwidth.
        sigma: f64 = 1.0,
        unbiased: bool = false,
        out: PathBuf = PathBuf::new(),
    }
}

settings! {
    Ablate / AblateFlags {
        /// Dataset directory with graphs/{train,val,test}.glist.
        data: PathBuf = PathBuf::new(),
        samples_per_graph: usize = 32,
        /// Node cap of the vocabulary; 0 uses the largest graph.
        max_nodes: usize = 0,
        /// transformer or ngram.
        model: String = "transformer".into(),
        order: usize = 4,
        delta: f64 = 0.1,
        width: usize = 64,
        layers: usize = 2,
        heads: usize = 4,
        context: usize = 0,
        mlp_ratio: usize = 4,
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
        /// Graphs sampled per encoding.
        count: usize = 128,
        top_k: usize = 10,
        temperature: f64 = 1.0,
        validity: String = "planar".into(),
        seed: u64 = 0,
        out: PathBuf = PathBuf::new(),
    }
}

pub fn parse_validity(name: &str) -> Result<Validity> {
    Ok(match name {
        "any" => Validity::Any,
        "planar" => Validity::Planar,
        "tree" => Validity::Tree,
        "sbm" => Validity::Sbm(SbmValidity::default()),
        other => return Err(CliError::config(format!("unknown validity `{other}`"))),
    })
}

fn read_graph_file(path: &Path) -> Result<Vec<Graph>> {
    Ok(read_graphs(&read_file(path)?)?.into_iter().map(|r| r.graph).collect())
}

fn report_config(sigma: f64, unbiased: bool) -> ReportConfig {
    ReportConfig { mmd: MmdConfig { sigma, unbiased }, ..Default::default() }
}

pub fn eval(s: &Eval) -> Result<()> {
    let out = required(&s.out, "out")?;
    let generated = read_graph_file(required(&s.generated, "generated")?)?;
    let train = read_graph_file(required(&s.train, "train")?)?;
    let test = read_graph_file(required(&s.test, "test")?)?;
    let validity = parse_validity(&s.validity)?;
    let report = full_report(&generated, &train, &test, &validity, &report_config(s.sigma, s.unbiased))?;
    write_file(&out.join("report.json"), report.to_json().as_bytes())?;
    let csv = format!("{}\n{}\n", SampleReport::CSV_HEADER, report.csv_row());
    write_file(&out.join("report.csv"), csv.as_bytes())?;
    println!("{}\n{}", SampleReport::table_header(), report.table_row("generated"));
    write_snapshot(out, "eval", s)
}

/// One encoding's half of the ablation.
pub struct Branch {
    pub encoding: Encoding,
    pub checkpoint: Checkpoint,
    pub curve: Vec<LossPoint>,
    pub samples: Vec<GeneratedGraph>,
    pub report: SampleReport,
    /// Samples whose every tuple-boundary prefix is an induced subgraph.
    pub prefix_induced_frac: f64,
}

#[derive(Serialize)]
struct BranchSummary<'a> {
    encoding: Encoding,
    final_val_nll: Option<f64>,
    prefix_induced_frac: f64,
    report: &'a SampleReport,
}

impl Ablate {
    fn train_settings(&self) -> Train {
        Train {
            model: self.model.clone(),
            order: self.order,
            delta: self.delta,
            width: self.width,
            layers: self.layers,
            heads: self.heads,
            context: self.context,
            mlp_ratio: self.mlp_ratio,
            tied: self.tied,
            steps: self.steps,
            batch_size: self.batch_size,
            lr: self.lr,
            min_lr_ratio: self.min_lr_ratio,
            warmup_frac: self.warmup_frac,
            weight_decay: self.weight_decay,
            grad_clip: self.grad_clip,
            dropout: self.dropout,
            eval_every: self.eval_every,
            seed: self.seed,
            ..Train::default()
        }
    }
}

/// Trains and samples one branch with the given encoding.
pub fn ablation_branch(
    encoding: Encoding,
    train: &[Graph],
    val: &[Graph],
    test: &[Graph],
    s: &Ablate,
) -> Result<Branch> {
    let largest = train.iter().chain(val).chain(test).map(Graph::n).max().unwrap_or(1);
    let vocab = Vocab::new(if s.max_nodes > 0 { s.max_nodes } else { largest });
    let corpus = Corpus {
        vocab,
        encoding,
        train: build_corpus(train, s.samples_per_graph, &vocab, encoding, s.seed)?.seqs,
        val: build_corpus(val, s.samples_per_graph, &vocab, encoding, s.seed)?.seqs,
    };
    let spec = model_spec(&s.train_settings())?;
    let (model, curve) = train_model(&spec, &vocab, &corpus.train, &corpus.val, |p| {
        if let Some(v) = p.val_nll {
            log::info!("{encoding} step {}: train {:.4}, val {:.4}", p.step, p.train_nll, v);
        }
    })?;
    let cfg = SampleConfig { top_k: s.top_k, temperature: s.temperature, ..SampleConfig::default() };
    let samples = sample_graphs(model.as_lm(), &vocab, encoding, &[], &cfg, s.count, s.seed)?;
    let graphs: Vec<Graph> = samples.iter().map(|g| g.graph.clone()).collect();
    let report = full_report(&graphs, train, test, &parse_validity(&s.validity)?, &ReportConfig::default())?;
    let induced = samples
        .iter()
        .filter(|g| g.decoded.as_ref().is_some_and(|d| prefixes_induced(d, &g.graph)))
        .count();
    let prefix_induced_frac = induced as f64 / samples.len().max(1) as f64;
    let checkpoint = Checkpoint { vocab, encoding, seed: s.seed, model };
    Ok(Branch { encoding, checkpoint, curve, samples, report, prefix_induced_frac })
}

pub fn ablate(s: &Ablate) -> Result<()> {
    let data = required(&s.data, "data")?;
    let out = required(&s.out, "out")?;
    let split = |k| -> Result<Vec<Graph>> { Ok(read_split(data, k)?.records.into_iter().map(|r| r.graph).collect()) };
    let (train, val, test) = (split(Split::Train)?, split(Split::Val)?, split(Split::Test)?);
    let mut table = SampleReport::table_header();
    let mut summaries = serde_json::Map::new();
    for encoding in [Encoding::Sent, Encoding::Set] {
        let b = ablation_branch(encoding, &train, &val, &test, s)?;
        let dir = out.join(encoding.to_string());
        write_file(&dir.join(CHECKPOINT_FILE), &b.checkpoint.to_bytes())?;
        write_file(&dir.join("loss.csv"), sentgraph_model::loss_csv(&b.curve).as_bytes())?;
        let records: Vec<GraphRecord> =
            b.samples.iter().enumerate().map(|(i, g)| GraphRecord::new(i.to_string(), g.graph.clone())).collect();
        write_file(&dir.join("samples.glist"), write_graphs(&records).as_bytes())?;
        write_file(&dir.join("report.json"), b.report.to_json().as_bytes())?;
        table.push('\n');
        table.push_str(&b.report.table_row(&encoding.to_string()));
        let summary = BranchSummary {
            encoding,
            final_val_nll: b.curve.last().and_then(|p| p.val_nll),
            prefix_induced_frac: b.prefix_induced_frac,
            report: &b.report,
        };
        summaries.insert(encoding.to_string(), serde_json::to_value(summary).expect("summary serializes"));
    }
    table.push('\n');
    let json = serde_json::to_string_pretty(&summaries).expect("summary serializes");
    write_file(&out.join("ablation.json"), json.as_bytes())?;
    write_file(&out.join("ablation.txt"), table.as_bytes())?;
    print!("{table}");
    write_snapshot(out, "ablate", s)
}
