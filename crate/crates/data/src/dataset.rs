//! On-disk dataset layout:
//!
//! ```text
//! <dir>/graphs/{train,val,test}.glist   graph containers
//! <dir>/graphs/{split}.blocks           SBM block assignment, one line per graph
//! <dir>/tokens/{train,val}.tok          token corpora
//! <dir>/tokens/vocab                    vocabulary header
//! <dir>/manifest                        key=value lines, then lineage lines
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sentgraph_core::io::{read_graphs, write_graphs, GraphRecord};
use sentgraph_core::vocab::{read_corpus, write_corpus};
use sentgraph_core::{Encoding, Error, Result, TokenSeq, Vocab};

use crate::corpus::Corpus;
use crate::spec::{DatasetSpec, Generated};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Graphs of one split, with SBM blocks keyed by graph id when present.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitGraphs {
    pub records: Vec<GraphRecord>,
    pub blocks: BTreeMap<String, Vec<usize>>,
}

/// Splits generated graphs in generation order; graph ids are generation
/// indices, which are also the RNG stream ids that produced them.
pub fn assign_splits(spec: &DatasetSpec, generated: Vec<Generated>) -> [SplitGraphs; 3] {
    let counts = spec.split_counts();
    let mut out: [SplitGraphs; 3] = Default::default();
    let mut split = 0;
    for (i, gen) in generated.into_iter().enumerate() {
        while split < 2 && out[split].records.len() == counts[split] {
            split += 1;
        }
        let id = i.to_string();
        if let Some(blocks) = gen.blocks {
            out[split].blocks.insert(id.clone(), blocks);
        }
        out[split].records.push(GraphRecord::new(id, gen.graph));
    }
    out
}

pub fn graphs_path(dir: &Path, split: Split) -> PathBuf {
    dir.join("graphs").join(format!("{}.glist", split.name()))
}

fn blocks_path(dir: &Path, split: Split) -> PathBuf {
    dir.join("graphs").join(format!("{}.blocks", split.name()))
}

pub fn tokens_path(dir: &Path, split: Split) -> PathBuf {
    dir.join("tokens").join(format!("{}.tok", split.name()))
}

pub fn vocab_path(dir: &Path) -> PathBuf {
    dir.join("tokens").join("vocab")
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn write_split(dir: &Path, split: Split, graphs: &SplitGraphs) -> Result<()> {
    write_file(&graphs_path(dir, split), &write_graphs(&graphs.records))?;
    if !graphs.blocks.is_empty() {
        let mut text = String::new();
        for (id, blocks) in &graphs.blocks {
            let _ = write!(text, "{id}");
            for b in blocks {
                let _ = write!(text, " {b}");
            }
            text.push('\n');
        }
        write_file(&blocks_path(dir, split), &text)?;
    }
    Ok(())
}

pub fn read_split(dir: &Path, split: Split) -> Result<SplitGraphs> {
    let records = read_graphs(&read_file(&graphs_path(dir, split))?)?;
    let mut blocks = BTreeMap::new();
    let bp = blocks_path(dir, split);
    if bp.exists() {
        for line in read_file(&bp)?.lines().filter(|l| !l.trim().is_empty()) {
            let mut words = line.split_whitespace();
            let id = words.next().unwrap().to_string();
            let ids = words
                .map(|w| w.parse().map_err(|_| Error::Input(format!("bad block id `{w}` in {}", bp.display()))))
                .collect::<Result<Vec<usize>>>()?;
            blocks.insert(id, ids);
        }
    }
    Ok(SplitGraphs { records, blocks })
}

pub fn write_tokens(dir: &Path, split: Split, seqs: &[TokenSeq]) -> Result<()> {
    write_file(&tokens_path(dir, split), &write_corpus(seqs))
}

pub fn read_tokens(path: &Path) -> Result<Vec<TokenSeq>> {
    read_corpus(&read_file(path)?)
}

pub fn write_vocab(dir: &Path, vocab: &Vocab, encoding: Encoding) -> Result<()> {
    write_file(&vocab_path(dir), &vocab.to_header(encoding))
}

pub fn read_vocab(path: &Path) -> Result<(Vocab, Encoding)> {
    Vocab::from_header(&read_file(path)?)
}

/// Plain-text manifest: ordered `key=value` pairs followed by one
/// `seq <split> <index> <graph-id> <sample>` line per token sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
    pub lineage: Vec<String>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Records lineage for a split's corpus; `ids` are the split's graph ids.
    pub fn add_lineage(&mut self, split: Split, corpus: &Corpus, ids: &[String]) {
        self.lineage.retain(|l| l.split_whitespace().nth(1) != Some(split.name()));
        for (i, l) in corpus.lineage.iter().enumerate() {
            self.lineage.push(format!("seq {} {i} {} {}", split.name(), ids[l.graph], l.sample));
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        for l in &self.lineage {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut m = Manifest::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            if line.starts_with("seq ") {
                m.lineage.push(line.to_string());
            } else if let Some((k, v)) = line.split_once('=') {
                m.entries.push((k.to_string(), v.to_string()));
            } else {
                return Err(Error::Input(format!("malformed manifest line `{line}`")));
            }
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&manifest_path(dir), &self.render())
    }

    pub fn read(dir: &Path) -> Result<Manifest> {
        Manifest::parse(&read_file(&manifest_path(dir))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sentgraph_core::Graph;

    #[test]
    fn split_round_trip() {
        let dir = std::env::temp_dir().join(format!("sentgraph-data-test-{}", std::process::id()));
        let mut graphs = SplitGraphs::default();
        graphs.records.push(GraphRecord::new("0", Graph::cycle(5)));
        graphs.blocks.insert("0".into(), vec![0, 0, 1, 1, 1]);
        write_split(&dir, Split::Val, &graphs).unwrap();
        assert_eq!(read_split(&dir, Split::Val).unwrap(), graphs);
        let mut m = Manifest::default();
        m.set("family", "sbm");
        m.set("family", "planar");
        m.lineage.push("seq train 0 0 0".into());
        m.write(&dir).unwrap();
        assert_eq!(Manifest::read(&dir).unwrap(), m);
        assert_eq!(m.get("family"), Some("planar"));
        fs::remove_dir_all(&dir).unwrap();
    }
}
