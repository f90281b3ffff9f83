//! Graph container files.
//!
//! Line format, graphs concatenated:
//!
//! ```text
//! # graph <id>
//! n <count>
//! v <node> <label>
//! e <u> <v> [label]
//! ```
//!
//! Node ids in `v`/`e` lines may be arbitrary words. When every id is an
//! integer below `n` they are used as is; otherwise ids are numbered by first
//! appearance. The alternative format has one JSON document per line with
//! fields `n`, `edges`, and optional `node_labels`, `edge_labels`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphRecord {
    pub id: String,
    pub graph: Graph,
}

impl GraphRecord {
    pub fn new(id: impl Into<String>, graph: Graph) -> Self {
        GraphRecord { id: id.into(), graph }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_labels: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_labels: Option<Vec<u32>>,
}

/// Parses either container format, detected from the first non-blank line.
pub fn read_graphs(text: &str) -> Result<Vec<GraphRecord>> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    match first {
        Some(l) if l.starts_with('{') => read_json_lines(text),
        _ => read_text(text),
    }
}

fn read_json_lines(text: &str) -> Result<Vec<GraphRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let doc: JsonGraph = serde_json::from_str(line)
            .map_err(|e| Error::input(format!("line {}: {e}", i + 1)))?;
        let mut g = Graph::new(doc.n);
        match &doc.edge_labels {
            Some(labels) => {
                if labels.len() != doc.edges.len() {
                    return Err(Error::input(format!("line {}: edge label count mismatch", i + 1)));
                }
                for (&[u, v], &l) in doc.edges.iter().zip(labels) {
                    g.add_labeled_edge(u, v, l)?;
                }
            }
            None => {
                for &[u, v] in &doc.edges {
                    g.add_edge(u, v)?;
                }
            }
        }
        if let Some(labels) = doc.node_labels {
            g.set_node_labels(labels)?;
        }
        out.push(GraphRecord::new(doc.id.unwrap_or_else(|| out.len().to_string()), g));
    }
    Ok(out)
}

#[derive(Default)]
struct Pending {
    id: String,
    n: Option<usize>,
    nodes: Vec<(String, u32)>,
    edges: Vec<(String, String, Option<u32>)>,
    line: usize,
}

impl Pending {
    fn finish(self) -> Result<Graph> {
        let at = |msg: String| Error::input(format!("graph `{}` (line {}): {msg}", self.id, self.line));
        let mentioned = self
            .nodes
            .iter()
            .map(|(v, _)| v)
            .chain(self.edges.iter().flat_map(|(u, v, _)| [u, v]));
        let all_numeric = self.n.is_some_and(|n| {
            mentioned.clone().all(|w| w.parse::<usize>().is_ok_and(|x| x < n))
        });
        let mut index: HashMap<&str, usize> = HashMap::new();
        if !all_numeric {
            for w in mentioned {
                let next = index.len();
                index.entry(w.as_str()).or_insert(next);
            }
        }
        let id_of = |w: &str| -> usize {
            if all_numeric {
                w.parse().unwrap()
            } else {
                index[w]
            }
        };
        let n = match self.n {
            Some(n) if !all_numeric && index.len() > n => {
                return Err(at(format!("{} distinct node ids for n = {n}", index.len())))
            }
            Some(n) => n,
            None => index.len(),
        };
        let mut g = Graph::new(n);
        let labeled_edges = self.edges.iter().any(|e| e.2.is_some());
        if labeled_edges && self.edges.iter().any(|e| e.2.is_none()) {
            return Err(at("either all edges carry labels or none".into()));
        }
        for (u, v, l) in &self.edges {
            let (a, b) = (id_of(u), id_of(v));
            match l {
                Some(l) => g.add_labeled_edge(a, b, *l),
                None => g.add_edge(a, b),
            }
            .map_err(|e| at(e.to_string()))?;
        }
        if !self.nodes.is_empty() {
            let mut labels = vec![None; n];
            for (v, l) in &self.nodes {
                labels[id_of(v)] = Some(*l);
            }
            let labels: Option<Vec<u32>> = labels.into_iter().collect();
            let labels = labels.ok_or_else(|| at("node labels must cover every node".into()))?;
            g.set_node_labels(labels)?;
        }
        Ok(g)
    }
}

fn read_text(text: &str) -> Result<Vec<GraphRecord>> {
    let mut out = Vec::new();
    let mut cur: Option<Pending> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::input(format!("line {}: cannot parse `{line}`", i + 1));
        let num = |w: Option<&str>| -> Result<u32> { w.and_then(|w| w.parse().ok()).ok_or_else(bad) };
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        if head == "#" || head.starts_with('#') {
            let rest: Vec<&str> = line.trim_start_matches('#').split_whitespace().collect();
            if rest.first() == Some(&"graph") {
                if let Some(p) = cur.take() {
                    out.push(GraphRecord::new(p.id.clone(), p.finish()?));
                }
                let id = rest.get(1).map_or_else(|| out.len().to_string(), |s| s.to_string());
                cur = Some(Pending { id, line: i + 1, ..Default::default() });
            }
            continue;
        }
        let p = cur.get_or_insert_with(|| Pending { id: out.len().to_string(), line: i + 1, ..Default::default() });
        match head {
            "n" => p.n = Some(num(words.next())? as usize),
            "v" => {
                let v = words.next().ok_or_else(bad)?.to_string();
                p.nodes.push((v, num(words.next())?));
            }
            "e" => {
                let u = words.next().ok_or_else(bad)?.to_string();
                let v = words.next().ok_or_else(bad)?.to_string();
                let l = match words.next() {
                    Some(w) => Some(w.parse().map_err(|_| bad())?),
                    None => None,
                };
                p.edges.push((u, v, l));
            }
            _ => return Err(bad()),
        }
        if words.next().is_some() {
            return Err(bad());
        }
    }
    if let Some(p) = cur.take() {
        out.push(GraphRecord::new(p.id.clone(), p.finish()?));
    }
    Ok(out)
}

pub fn write_graphs(records: &[GraphRecord]) -> String {
    let mut out = String::new();
    for r in records {
        write_graph(&mut out, &r.id, &r.graph);
    }
    out
}

pub fn write_graph(out: &mut String, id: &str, g: &Graph) {
    let _ = writeln!(out, "# graph {id}");
    let _ = writeln!(out, "n {}", g.n());
    if let Some(labels) = g.node_labels() {
        for (v, l) in labels.iter().enumerate() {
            let _ = writeln!(out, "v {v} {l}");
        }
    }
    for (u, v) in g.edges() {
        match g.edge_label(u, v) {
            Some(l) => {
                let _ = writeln!(out, "e {u} {v} {l}");
            }
            None => {
                let _ = writeln!(out, "e {u} {v}");
            }
        }
    }
}

/// One JSON document per graph.
pub fn write_json_lines(records: &[GraphRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let g = &r.graph;
        let edges: Vec<[usize; 2]> = g.edges().map(|(u, v)| [u, v]).collect();
        let doc = JsonGraph {
            id: Some(r.id.clone()),
            n: g.n(),
            edge_labels: g
                .edge_labels()
                .map(|l: &BTreeMap<(usize, usize), u32>| edges.iter().map(|&[u, v]| l[&(u, v)]).collect()),
            edges,
            node_labels: g.node_labels().map(<[u32]>::to_vec),
        };
        out.push_str(&serde_json::to_string(&doc).expect("graph documents serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_with_labels() {
        let mut g = Graph::new(3);
        g.add_labeled_edge(0, 1, 2).unwrap();
        g.add_labeled_edge(1, 2, 0).unwrap();
        g.set_node_labels(vec![1, 1, 0]).unwrap();
        let recs = vec![GraphRecord::new("a", g), GraphRecord::new("b", Graph::cycle(4))];
        let text = write_graphs(&recs);
        assert_eq!(read_graphs(&text).unwrap(), recs);
        let json = write_json_lines(&recs);
        assert_eq!(read_graphs(&json).unwrap(), recs);
    }

    #[test]
    fn arbitrary_ids_are_remapped() {
        let text = "# graph x\ne alice bob\ne bob carol\n";
        let recs = read_graphs(text).unwrap();
        assert_eq!(recs[0].graph, Graph::path(3));
        assert_eq!(recs[0].id, "x");
        let text = "# graph y\nn 4\ne 10 20\n";
        let g = &read_graphs(text).unwrap()[0].graph;
        assert_eq!((g.n(), g.m()), (4, 1));
    }

    #[test]
    fn malformed_lines_fail() {
        assert!(read_graphs("# graph a\nq 1 2\n").is_err());
        assert!(read_graphs("# graph a\nn 2\ne 0 0\n").is_err());
        assert!(read_graphs("# graph a\nn 1\ne a b\n").is_err());
    }
}
