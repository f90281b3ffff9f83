//! Undirected simple graphs with optional categorical node and edge labels.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Undirected simple graph over dense node ids `0..n`.
///
/// Adjacency lists are kept sorted, so `has_edge` is a binary search and
/// iteration order is deterministic. Edge labels are keyed by `(min, max)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
    node_labels: Option<Vec<u32>>,
    edge_labels: Option<BTreeMap<(usize, usize), u32>>,
}

#[inline]
pub(crate) fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    /// Edgeless graph on `n` nodes.
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            ..Default::default()
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::input(format!("edge ({u}, {v}) out of range for {n} nodes")));
        }
        if u == v {
            return Err(Error::input(format!("self-loop at node {u}")));
        }
        match self.adj[u].binary_search(&v) {
            Ok(_) => return Err(Error::input(format!("parallel edge ({u}, {v})"))),
            Err(pos) => self.adj[u].insert(pos, v),
        }
        let pos = self.adj[v].binary_search(&u).unwrap_err();
        self.adj[v].insert(pos, u);
        self.edge_count += 1;
        Ok(())
    }

    /// Adds an edge carrying a label. The graph must either be unlabeled so
    /// far (no edges) or already carry edge labels.
    pub fn add_labeled_edge(&mut self, u: usize, v: usize, label: u32) -> Result<()> {
        if self.edge_labels.is_none() && self.edge_count > 0 {
            return Err(Error::input("cannot mix labeled and unlabeled edges"));
        }
        self.add_edge(u, v)?;
        self.edge_labels.get_or_insert_with(BTreeMap::new).insert(edge_key(u, v), label);
        Ok(())
    }

    pub fn set_node_labels(&mut self, labels: Vec<u32>) -> Result<()> {
        if labels.len() != self.n() {
            return Err(Error::input(format!(
                "{} node labels for {} nodes",
                labels.len(),
                self.n()
            )));
        }
        self.node_labels = Some(labels);
        Ok(())
    }

    pub fn set_edge_labels(&mut self, labels: BTreeMap<(usize, usize), u32>) -> Result<()> {
        let labels: BTreeMap<_, _> = labels.into_iter().map(|((u, v), l)| (edge_key(u, v), l)).collect();
        if labels.len() != self.edge_count || labels.keys().any(|&(u, v)| !self.has_edge(u, v)) {
            return Err(Error::input("edge labels must cover exactly the edge set"));
        }
        self.edge_labels = Some(labels);
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.edge_count
    }

    /// Checked neighbor lookup.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        self.adj
            .get(v)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::input(format!("node {v} out of range for {} nodes", self.n())))
    }

    /// Sorted neighbors of `v`; panics when `v` is out of range.
    #[inline]
    pub fn adj(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn node_labels(&self) -> Option<&[u32]> {
        self.node_labels.as_deref()
    }

    pub fn edge_labels(&self) -> Option<&BTreeMap<(usize, usize), u32>> {
        self.edge_labels.as_ref()
    }

    pub fn node_label(&self, v: usize) -> Option<u32> {
        self.node_labels.as_ref().map(|l| l[v])
    }

    pub fn edge_label(&self, u: usize, v: usize) -> Option<u32> {
        self.edge_labels.as_ref().and_then(|l| l.get(&edge_key(u, v)).copied())
    }

    pub fn is_attributed(&self) -> bool {
        self.node_labels.is_some() && (self.edge_labels.is_some() || self.edge_count == 0)
    }

    /// Relabels nodes so that old node `v` becomes `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::input("permutation is not a bijection on the node set"));
        }
        let mut out = Graph::new(n);
        for (u, v) in self.edges() {
            out.add_edge(perm[u], perm[v])?;
        }
        if let Some(labels) = &self.node_labels {
            let mut nl = vec![0; n];
            for (v, &l) in labels.iter().enumerate() {
                nl[perm[v]] = l;
            }
            out.node_labels = Some(nl);
        }
        if let Some(labels) = &self.edge_labels {
            out.edge_labels = Some(
                labels
                    .iter()
                    .map(|(&(u, v), &l)| (edge_key(perm[u], perm[v]), l))
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Subgraph induced by `nodes`; node `nodes[i]` becomes node `i`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in nodes.iter().enumerate() {
            if v >= self.n() || index[v] != usize::MAX {
                return Err(Error::input(format!("invalid or repeated node {v} in subset")));
            }
            index[v] = i;
        }
        let mut out = Graph::new(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            for &u in &self.adj[v] {
                let j = index[u];
                if j != usize::MAX && j > i {
                    out.add_edge(i, j)?;
                }
            }
        }
        if let Some(labels) = &self.node_labels {
            out.node_labels = Some(nodes.iter().map(|&v| labels[v]).collect());
        }
        if let Some(labels) = &self.edge_labels {
            let sub = out
                .edges()
                .map(|(i, j)| ((i, j), labels[&edge_key(nodes[i], nodes[j])]))
                .collect();
            out.edge_labels = Some(sub);
        }
        Ok(out)
    }

    /// True when `sub` equals the subgraph of `self` induced by nodes
    /// `0..sub.n()`, i.e. node ids are shared between the two graphs.
    pub fn has_induced_prefix(&self, sub: &Graph) -> bool {
        if sub.n() > self.n() {
            return false;
        }
        (0..sub.n()).all(|v| {
            let full = self.adj[v].iter().copied().filter(|&u| u < sub.n());
            full.eq(sub.adj[v].iter().copied())
        })
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        self.components() == 1
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &u in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            g.adj[u] = (0..n).filter(|&v| v != u).collect();
        }
        g.edge_count = n * n.saturating_sub(1) / 2;
        g
    }

    pub fn cycle(n: usize) -> Graph {
        let mut g = Graph::new(n);
        if n >= 3 {
            for v in 0..n {
                g.add_edge(v, (v + 1) % n).expect("cycle edges are simple");
            }
        } else if n == 2 {
            g.add_edge(0, 1).expect("single edge");
        }
        g
    }

    pub fn path(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for v in 1..n {
            g.add_edge(v - 1, v).expect("path edges are simple");
        }
        g
    }

    pub fn star(leaves: usize) -> Graph {
        let mut g = Graph::new(leaves + 1);
        for v in 1..=leaves {
            g.add_edge(0, v).expect("star edges are simple");
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_of_small_graphs() {
        let k3 = Graph::complete(3);
        assert_eq!(k3.neighbors(0).unwrap(), &[1, 2]);
        let p = Graph::path(3);
        assert_eq!(p.neighbors(1).unwrap(), &[0, 2]);
        let single = Graph::new(1);
        assert!(single.neighbors(0).unwrap().is_empty());
        assert!(matches!(single.neighbors(1), Err(Error::Input(_))));
    }

    #[test]
    fn rejects_loops_and_parallel_edges() {
        let mut g = Graph::new(3);
        assert!(g.add_edge(1, 1).is_err());
        g.add_edge(0, 1).unwrap();
        assert!(g.add_edge(1, 0).is_err());
        assert!(g.add_edge(0, 3).is_err());
        assert_eq!(g.m(), 1);
    }

    #[test]
    fn permute_preserves_labels() {
        let mut g = Graph::new(3);
        g.add_labeled_edge(0, 1, 7).unwrap();
        g.add_labeled_edge(1, 2, 8).unwrap();
        g.set_node_labels(vec![1, 2, 3]).unwrap();
        let h = g.permute(&[2, 0, 1]).unwrap();
        assert_eq!(h.node_labels().unwrap(), &[2, 3, 1]);
        assert_eq!(h.edge_label(2, 0), Some(7));
        assert_eq!(h.edge_label(0, 1), Some(8));
        assert!(g.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn induced_prefix_check() {
        let c4 = Graph::cycle(4);
        let p3 = Graph::path(3);
        assert!(c4.has_induced_prefix(&p3));
        let mut tri = Graph::path(3);
        tri.add_edge(0, 2).unwrap();
        assert!(!c4.has_induced_prefix(&tri));
        let sub = c4.induced_subgraph(&[3, 0, 1]).unwrap();
        assert_eq!(sub, Graph::path(3));
    }
}
