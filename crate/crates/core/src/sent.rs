//! Segmented Eulerian neighborhood trails.
//!
//! A [`Sent`] is a list of segments, each a list of `(node, nbset)` tuples.
//! Consecutive tuples of a segment contribute a trail edge, and every member
//! `u` of a tuple's nbset contributes the edge `(node, u)`. All generated
//! edges must be distinct.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::{edge_key, Graph};
use crate::rng::Draw;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NbTuple {
    pub node: usize,
    pub nbset: Vec<usize>,
}

impl NbTuple {
    pub fn new(node: usize, nbset: Vec<usize>) -> Self {
        NbTuple { node, nbset }
    }

    pub fn bare(node: usize) -> Self {
        NbTuple { node, nbset: Vec::new() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sent {
    pub segments: Vec<Vec<NbTuple>>,
}

impl Sent {
    pub fn new(segments: Vec<Vec<NbTuple>>) -> Self {
        Sent { segments }
    }

    /// The flattening: all tuples in order, segment boundaries dropped.
    pub fn flat(&self) -> impl Iterator<Item = &NbTuple> + '_ {
        self.segments.iter().flatten()
    }

    /// Tuples paired with their trail predecessor (`None` at segment starts).
    pub fn flat_with_pred(&self) -> impl Iterator<Item = (&NbTuple, Option<usize>)> + '_ {
        self.segments.iter().flat_map(|seg| {
            seg.iter()
                .enumerate()
                .map(move |(i, t)| (t, i.checked_sub(1).map(|p| seg[p].node)))
        })
    }

    pub fn tuple_count(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn nbset_total(&self) -> usize {
        self.flat().map(|t| t.nbset.len()).sum()
    }

    pub fn trail_steps(&self) -> usize {
        self.segments.iter().map(|s| s.len().saturating_sub(1)).sum()
    }

    /// First `count` tuples of the flattening, keeping segment boundaries.
    pub fn truncated(&self, count: usize) -> Sent {
        let mut left = count;
        let mut segments = Vec::new();
        for seg in &self.segments {
            if left == 0 {
                break;
            }
            let take = seg.len().min(left);
            segments.push(seg[..take].to_vec());
            left -= take;
        }
        Sent { segments }
    }
}

/// Samples a causal, Hamiltonian SENT of `g` by random path extension with
/// breaks: extend the trail to a random unvisited neighbor, or start a new
/// segment at a random unvisited node when the current node has none. Each
/// tuple's nbset is the set of previously visited neighbors, minus the trail
/// predecessor. Runs in `O(n + m)`.
pub fn sample_sent<R: Draw + ?Sized>(g: &Graph, rng: &mut R) -> Result<Sent> {
    let n = g.n();
    if n == 0 {
        return Err(Error::input("cannot sample a SENT from an empty graph"));
    }
    let mut unvisited: Vec<usize> = (0..n).collect();
    let mut slot: Vec<usize> = (0..n).collect();
    let mut visited = vec![false; n];
    let mut take = |v: usize, unvisited: &mut Vec<usize>, visited: &mut Vec<bool>| {
        let i = slot[v];
        let last = *unvisited.last().expect("node is unvisited");
        unvisited.swap_remove(i);
        if last != v {
            slot[last] = i;
        }
        visited[v] = true;
    };

    let mut v = unvisited[rng.draw(unvisited.len())];
    take(v, &mut unvisited, &mut visited);
    let mut segments = Vec::new();
    let mut trail = vec![NbTuple::bare(v)];
    let mut candidates = Vec::new();
    while !unvisited.is_empty() {
        candidates.clear();
        candidates.extend(g.adj(v).iter().copied().filter(|&u| !visited[u]));
        if candidates.is_empty() {
            segments.push(std::mem::take(&mut trail));
            v = unvisited[rng.draw(unvisited.len())];
            take(v, &mut unvisited, &mut visited);
            let nbset = g.adj(v).iter().copied().filter(|&u| visited[u]).collect();
            trail.push(NbTuple::new(v, nbset));
        } else {
            let u = candidates[rng.draw(candidates.len())];
            take(u, &mut unvisited, &mut visited);
            let nbset = g.adj(u).iter().copied().filter(|&x| x != v && visited[x]).collect();
            trail.push(NbTuple::new(u, nbset));
            v = u;
        }
    }
    segments.push(trail);
    Ok(Sent { segments })
}

/// Mapping produced by [`reindex_with_map`]: `order[i]` is the original id
/// of new node `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabeling {
    pub order: Vec<usize>,
    pub new_id: HashMap<usize, usize>,
}

pub fn reindex(s: &Sent) -> Result<Sent> {
    reindex_with_map(s).map(|(sent, _)| sent)
}

/// Renames nodes to `1..=|V_s|` by first occurrence as a tuple head and sorts
/// every nbset. The input must be causal.
pub fn reindex_with_map(s: &Sent) -> Result<(Sent, Relabeling)> {
    let mut new_id: HashMap<usize, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut segments = Vec::with_capacity(s.segments.len());
    for seg in &s.segments {
        let mut out = Vec::with_capacity(seg.len());
        for t in seg {
            let mut nbset = Vec::with_capacity(t.nbset.len());
            for u in &t.nbset {
                match new_id.get(u) {
                    Some(&id) => nbset.push(id),
                    None => {
                        return Err(Error::Contract(format!(
                            "reindex requires a causal SENT: nbset member {u} of node {} not visited earlier",
                            t.node
                        )))
                    }
                }
            }
            nbset.sort_unstable();
            let id = *new_id.entry(t.node).or_insert_with(|| {
                order.push(t.node);
                order.len()
            });
            out.push(NbTuple::new(id, nbset));
        }
        segments.push(out);
    }
    Ok((Sent { segments }, Relabeling { order, new_id }))
}

/// Dense node index for every id in `s`, by first occurrence over tuple heads
/// and nbset members in flattening order.
pub(crate) fn first_occurrence(s: &Sent) -> (Vec<usize>, HashMap<usize, usize>) {
    let mut index = HashMap::new();
    let mut order = Vec::new();
    for t in s.flat() {
        for &x in t.nbset.iter().chain(std::iter::once(&t.node)) {
            index.entry(x).or_insert_with(|| {
                order.push(x);
                order.len() - 1
            });
        }
    }
    (order, index)
}

/// Generated edges of `s` as `(node, other)` in emission order.
pub(crate) fn generated_edges(s: &Sent) -> impl Iterator<Item = (usize, usize)> + '_ {
    s.flat_with_pred().flat_map(|(t, pred)| {
        pred.map(|p| (p, t.node))
            .into_iter()
            .chain(t.nbset.iter().map(move |&u| (t.node, u)))
    })
}

/// Builds the generated graph `G_s`. Node ids are compacted by first
/// occurrence, so a reindexed SENT maps node `i` to index `i - 1`.
pub fn reconstruct(s: &Sent) -> Result<Graph> {
    let (order, index) = first_occurrence(s);
    let mut g = Graph::new(order.len());
    for (a, b) in generated_edges(s) {
        let (u, v) = (index[&a], index[&b]);
        if u == v {
            return Err(Error::input(format!("self-loop at node {a}")));
        }
        if g.has_edge(u, v) {
            return Err(Error::Disjointness(a.min(b), a.max(b)));
        }
        g.add_edge(u, v)?;
    }
    Ok(g)
}

/// Graph generated by the first `tuple_count` tuples of the flattening.
pub fn prefix_graph(s: &Sent, tuple_count: usize) -> Result<Graph> {
    let total = s.tuple_count();
    if tuple_count == 0 || tuple_count > total {
        return Err(Error::Contract(format!(
            "prefix length {tuple_count} outside 1..={total}"
        )));
    }
    reconstruct(&s.truncated(tuple_count))
}

/// Outcome of [`validate_sent`]; every predicate is evaluated independently.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SentReport {
    pub disjoint: bool,
    pub causal: bool,
    pub hamiltonian: bool,
    pub semi_hamiltonian: bool,
    /// `A_v = N_G(v) ∩ V_s(w)` for every tuple; only checked against a graph.
    pub neighborhood_condition: Option<bool>,
    /// The generated graph equals the given graph under the identity map.
    pub generates_graph: Option<bool>,
    pub problems: Vec<String>,
}

impl SentReport {
    pub fn all_ok(&self) -> bool {
        self.disjoint
            && self.causal
            && self.hamiltonian
            && self.semi_hamiltonian
            && self.neighborhood_condition != Some(false)
            && self.generates_graph != Some(false)
    }
}

/// Diagnoses `s`, optionally against the graph it claims to encode (node ids
/// must then be `g`'s ids). Never fails.
pub fn validate_sent(s: &Sent, g: Option<&Graph>) -> SentReport {
    let mut report = SentReport {
        disjoint: true,
        causal: true,
        hamiltonian: true,
        semi_hamiltonian: true,
        ..Default::default()
    };

    let mut seen_edges = HashSet::new();
    for (a, b) in generated_edges(s) {
        if a == b {
            report.disjoint = false;
            report.problems.push(format!("self-loop at node {a}"));
        } else if !seen_edges.insert(edge_key(a, b)) {
            report.disjoint = false;
            report.problems.push(format!("edge ({a}, {b}) generated twice"));
        }
    }

    let mut heads: HashSet<usize> = HashSet::new();
    for seg in &s.segments {
        for (i, t) in seg.iter().enumerate() {
            for u in &t.nbset {
                if !heads.contains(u) {
                    report.causal = false;
                    report.problems.push(format!("nbset member {u} of node {} not yet visited", t.node));
                }
            }
            if !heads.insert(t.node) {
                report.hamiltonian = false;
                if i != 0 || !t.nbset.is_empty() {
                    report.semi_hamiltonian = false;
                    report.problems.push(format!(
                        "node {} revisited outside a bare segment start",
                        t.node
                    ));
                }
            }
        }
    }

    if let Some(g) = g {
        let mut ok = true;
        let mut before: HashSet<usize> = HashSet::new();
        for (t, pred) in s.flat_with_pred() {
            if t.node >= g.n() {
                ok = false;
                report.problems.push(format!("node {} not in graph", t.node));
                break;
            }
            let expected: HashSet<usize> = g
                .adj(t.node)
                .iter()
                .copied()
                .filter(|u| before.contains(u) && Some(*u) != pred)
                .collect();
            let actual: HashSet<usize> = t.nbset.iter().copied().collect();
            if expected != actual || actual.len() != t.nbset.len() {
                ok = false;
                report.problems.push(format!("nbset of node {} differs from its visited neighbors", t.node));
            }
            before.insert(t.node);
        }
        report.neighborhood_condition = Some(ok);

        let covers = report.disjoint
            && seen_edges.len() == g.m()
            && seen_edges.iter().all(|&(u, v)| g.has_edge(u, v))
            && {
                let mut nodes = heads.clone();
                nodes.extend(s.flat().flat_map(|t| t.nbset.iter().copied()));
                nodes.len() == g.n() && nodes.iter().all(|&v| v < g.n())
            };
        report.generates_graph = Some(covers);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::are_isomorphic;
    use crate::rng::stream_rng;

    /// Graph of the overview figure: v1..v5 as 0..4.
    pub(crate) fn figure_graph() -> Graph {
        Graph::from_edges(5, &[(0, 1), (1, 2), (1, 4), (3, 4)]).unwrap()
    }

    pub(crate) fn figure_sent() -> Sent {
        Sent::new(vec![
            vec![NbTuple::bare(0), NbTuple::bare(1), NbTuple::bare(2)],
            vec![NbTuple::new(4, vec![1]), NbTuple::bare(3)],
        ])
    }

    #[test]
    fn some_seed_reproduces_the_figure() {
        let g = figure_graph();
        let hit = (0..10_000u64).find(|&seed| sample_sent(&g, &mut stream_rng(seed, 0)).unwrap() == figure_sent());
        assert!(hit.is_some());
    }

    #[test]
    fn single_node() {
        let s = sample_sent(&Graph::new(1), &mut stream_rng(0, 0)).unwrap();
        assert_eq!(s, Sent::new(vec![vec![NbTuple::bare(0)]]));
        assert!(sample_sent(&Graph::new(0), &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn reindex_figure() {
        let r = reindex(&figure_sent()).unwrap();
        let expected = Sent::new(vec![
            vec![NbTuple::bare(1), NbTuple::bare(2), NbTuple::bare(3)],
            vec![NbTuple::new(4, vec![2]), NbTuple::bare(5)],
        ]);
        assert_eq!(r, expected);
        assert_eq!(reindex(&r).unwrap(), r);
    }

    #[test]
    fn reindex_rejects_non_causal() {
        let s = Sent::new(vec![vec![NbTuple::new(0, vec![3])]]);
        assert!(matches!(reindex(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn reconstruct_figure() {
        let g = reconstruct(&reindex(&figure_sent()).unwrap()).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (1, 2), (1, 3), (3, 4)]);
        assert!(are_isomorphic(&g, &figure_graph()));
    }

    #[test]
    fn reconstruct_single_and_duplicate() {
        let g = reconstruct(&Sent::new(vec![vec![NbTuple::bare(0)]])).unwrap();
        assert_eq!((g.n(), g.m()), (1, 0));
        let dup = Sent::new(vec![
            vec![NbTuple::bare(1), NbTuple::bare(2)],
            vec![NbTuple::new(3, vec![]), NbTuple::new(2, vec![1])],
        ]);
        assert!(matches!(reconstruct(&dup), Err(Error::Disjointness(1, 2))));
    }

    #[test]
    fn set_counterexample_prefix_is_not_induced() {
        let walk = |nodes: &[usize]| Sent::new(vec![nodes.iter().map(|&v| NbTuple::bare(v)).collect()]);
        let full = walk(&[1, 2, 3, 4, 1, 3]);
        let g = reconstruct(&full).unwrap();
        assert_eq!(g.m(), 5);
        let prefix = prefix_graph(&full, 5).unwrap();
        let cycle_edges: Vec<_> = prefix.edges().collect();
        assert_eq!(cycle_edges, vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!(!g.has_induced_prefix(&prefix));
        assert_eq!(prefix_graph(&full, 6).unwrap(), g);
        assert!(prefix_graph(&full, 0).is_err());
        assert!(prefix_graph(&full, 7).is_err());
    }

    #[test]
    fn validate_figure_and_semi_hamiltonian_violation() {
        let r = validate_sent(&figure_sent(), Some(&figure_graph()));
        assert!(r.all_ok(), "{r:?}");
        assert_eq!(r.neighborhood_condition, Some(true));

        let bad = Sent::new(vec![
            vec![NbTuple::bare(0), NbTuple::bare(1)],
            vec![NbTuple::bare(2), NbTuple::new(0, vec![2])],
        ]);
        let r = validate_sent(&bad, None);
        assert!(!r.hamiltonian);
        assert!(!r.semi_hamiltonian);

        let semi = Sent::new(vec![
            vec![NbTuple::bare(0), NbTuple::bare(1)],
            vec![NbTuple::bare(0), NbTuple::bare(2)],
        ]);
        let r = validate_sent(&semi, None);
        assert!(!r.hamiltonian);
        assert!(r.semi_hamiltonian);
        assert!(r.causal && r.disjoint);
    }

    #[test]
    fn validate_catches_missing_neighbor() {
        // Node 4's nbset omits the visited neighbor 1.
        let s = Sent::new(vec![
            vec![NbTuple::bare(0), NbTuple::bare(1), NbTuple::bare(2)],
            vec![NbTuple::bare(4), NbTuple::bare(3)],
        ]);
        let r = validate_sent(&s, Some(&figure_graph()));
        assert_eq!(r.neighborhood_condition, Some(false));
        assert_eq!(r.generates_graph, Some(false));
        assert!(r.causal && r.hamiltonian);
    }
}
