//! Canonical labeling by color refinement with individualization-refinement
//! search.
//!
//! Refinement splits color classes by the multiset of (neighbor color, edge
//! label) pairs until stable. When a class is still ambiguous, every member of
//! the largest such class is individualized in turn and the search recurses;
//! each discrete coloring is a candidate labeling and the smallest resulting
//! encoding wins. Automorphisms found along the way prune equivalent branches.

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_NODE_CAP: usize = 512;

/// Canonical encoding of `g`: equal byte strings exactly for isomorphic
/// (label-preserving) graphs. Fails with a capacity error above 512 nodes.
pub fn canonical_form(g: &Graph) -> Result<Vec<u8>> {
    canonical_form_with_cap(g, DEFAULT_NODE_CAP)
}

pub fn canonical_form_with_cap(g: &Graph, cap: usize) -> Result<Vec<u8>> {
    if g.n() > cap {
        return Err(Error::Capacity(format!(
            "canonical form limited to {cap} nodes, graph has {}",
            g.n()
        )));
    }
    let words = Search::new(g).run();
    Ok(words.iter().flat_map(|w| w.to_le_bytes()).collect())
}

/// Label-preserving isomorphism test.
pub fn are_isomorphic(g: &Graph, h: &Graph) -> bool {
    if g.n() != h.n()
        || g.m() != h.m()
        || g.node_labels().is_some() != h.node_labels().is_some()
        || g.edge_labels().is_some() != h.edge_labels().is_some()
    {
        return false;
    }
    let degrees = |x: &Graph| {
        let mut d: Vec<usize> = (0..x.n()).map(|v| x.degree(v)).collect();
        d.sort_unstable();
        d
    };
    if degrees(g) != degrees(h) {
        return false;
    }
    Search::new(g).run() == Search::new(h).run()
}

struct Leaf {
    encoding: Vec<u32>,
    /// `position[v]` is `v`'s canonical index.
    position: Vec<usize>,
    path: Vec<usize>,
}

struct Search<'a> {
    g: &'a Graph,
    /// Neighbors with edge labels (0 when unlabeled).
    nbrs: Vec<Vec<(usize, u32)>>,
    first: Option<Leaf>,
    best: Option<Leaf>,
    generators: Vec<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn new(g: &'a Graph) -> Self {
        let nbrs = (0..g.n())
            .map(|v| g.adj(v).iter().map(|&u| (u, g.edge_label(v, u).unwrap_or(0))).collect())
            .collect();
        Search { g, nbrs, first: None, best: None, generators: Vec::new() }
    }

    fn run(mut self) -> Vec<u32> {
        let n = self.g.n();
        let initial: Vec<u32> = match self.g.node_labels() {
            Some(labels) => rank(&labels.to_vec()),
            None => vec![0; n],
        };
        let colors = self.refine(initial);
        self.descend(colors, &mut Vec::new());
        match self.best {
            Some(leaf) => leaf.encoding,
            None => self.encode(&[]),
        }
    }

    /// Refines `colors` until the partition is equitable. Colors are ranks of
    /// isomorphism-invariant signatures, so they never depend on node ids.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let n = colors.len();
        let mut classes = count_classes(&colors);
        loop {
            if classes == n {
                return colors;
            }
            let sigs: Vec<(u32, Vec<(u32, u32)>)> = (0..n)
                .map(|v| {
                    let mut s: Vec<(u32, u32)> = self.nbrs[v].iter().map(|&(u, l)| (colors[u], l)).collect();
                    s.sort_unstable();
                    (colors[v], s)
                })
                .collect();
            let next = rank(&sigs);
            let next_classes = count_classes(&next);
            if next_classes == classes {
                return next;
            }
            colors = next;
            classes = next_classes;
        }
    }

    fn individualize(&self, colors: &[u32], v: usize) -> Vec<u32> {
        let keyed: Vec<(u32, bool)> = colors.iter().enumerate().map(|(x, &c)| (c, x != v)).collect();
        self.refine(rank(&keyed))
    }

    /// Canonical word for a discrete coloring.
    fn encode(&self, position: &[usize]) -> Vec<u32> {
        let g = self.g;
        let n = g.n();
        let flags = u32::from(g.node_labels().is_some()) | (u32::from(g.edge_labels().is_some()) << 1);
        let mut out = Vec::with_capacity(3 + n + 3 * g.m());
        out.push(n as u32);
        out.push(flags);
        if let Some(labels) = g.node_labels() {
            let mut by_pos = vec![0; n];
            for v in 0..n {
                by_pos[position[v]] = labels[v];
            }
            out.extend(by_pos);
        }
        out.push(g.m() as u32);
        let mut edges: Vec<(u32, u32, u32)> = g
            .edges()
            .map(|(u, v)| {
                let (a, b) = (position[u] as u32, position[v] as u32);
                (a.min(b), a.max(b), g.edge_label(u, v).unwrap_or(0))
            })
            .collect();
        edges.sort_unstable();
        for (a, b, l) in edges {
            out.extend([a, b, l]);
        }
        out
    }

    /// Explores the subtree below `colors`. `Some(level)` asks every node
    /// deeper than `level` to unwind.
    fn descend(&mut self, colors: Vec<u32>, path: &mut Vec<usize>) -> Option<usize> {
        let n = colors.len();
        let Some(cell) = target_cell(&colors) else {
            return self.leaf(colors, path);
        };
        let depth = path.len();
        let mut explored: Vec<usize> = Vec::new();
        for v in cell {
            if !explored.is_empty() && self.equivalent_to_explored(v, &explored, path, n) {
                continue;
            }
            explored.push(v);
            let child = self.individualize(&colors, v);
            path.push(v);
            let jump = self.descend(child, path);
            path.pop();
            if let Some(level) = jump {
                if level < depth {
                    return Some(level);
                }
            }
        }
        None
    }

    fn equivalent_to_explored(&self, v: usize, explored: &[usize], path: &[usize], n: usize) -> bool {
        let mut uf = UnionFind::new(n);
        for gamma in &self.generators {
            if path.iter().all(|&p| gamma[p] == p) {
                for (x, &y) in gamma.iter().enumerate() {
                    uf.union(x, y);
                }
            }
        }
        let root = uf.find(v);
        explored.iter().any(|&e| uf.find(e) == root)
    }

    fn leaf(&mut self, colors: Vec<u32>, path: &[usize]) -> Option<usize> {
        let position: Vec<usize> = colors.iter().map(|&c| c as usize).collect();
        let encoding = self.encode(&position);
        let leaf = Leaf { encoding, position, path: path.to_vec() };
        let Some(first) = &self.first else {
            self.best = Some(Leaf { encoding: leaf.encoding.clone(), position: leaf.position.clone(), path: leaf.path.clone() });
            self.first = Some(leaf);
            return None;
        };
        if first.encoding == leaf.encoding {
            self.generators.push(automorphism(&first.position, &leaf.position));
            let common = first.path.iter().zip(&leaf.path).take_while(|(a, b)| a == b).count();
            return Some(common);
        }
        let best = self.best.as_ref().expect("set with the first leaf");
        match leaf.encoding.cmp(&best.encoding) {
            std::cmp::Ordering::Less => self.best = Some(leaf),
            std::cmp::Ordering::Equal => {
                let gamma = automorphism(&best.position, &leaf.position);
                self.generators.push(gamma);
            }
            std::cmp::Ordering::Greater => {}
        }
        None
    }
}

/// Maps each node of the second labeling to the node holding the same
/// canonical position in the first.
fn automorphism(first: &[usize], second: &[usize]) -> Vec<usize> {
    let mut at = vec![0; first.len()];
    for (v, &p) in first.iter().enumerate() {
        at[p] = v;
    }
    second.iter().map(|&p| at[p]).collect()
}

/// Members of the largest non-singleton class (smallest color on ties), in
/// index order; `None` for a discrete coloring.
fn target_cell(colors: &[u32]) -> Option<Vec<usize>> {
    let mut sizes = vec![0usize; colors.len()];
    for &c in colors {
        sizes[c as usize] += 1;
    }
    let (color, &size) = sizes.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
    if size < 2 {
        return None;
    }
    Some((0..colors.len()).filter(|&v| colors[v] as usize == color).collect())
}

fn rank<T: Ord + Clone>(keys: &[T]) -> Vec<u32> {
    let mut sorted: Vec<&T> = keys.iter().collect();
    sorted.sort_unstable();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(&k).expect("key present") as u32)
        .collect()
}

fn count_classes(colors: &[u32]) -> usize {
    colors.iter().copied().max().map_or(0, |c| c as usize + 1)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relabeled_path() {
        let p = Graph::path(3);
        let q = Graph::from_edges(3, &[(2, 0), (0, 1)]).unwrap();
        assert!(are_isomorphic(&p, &q));
        assert!(!are_isomorphic(&Graph::complete(3), &p));
    }

    #[test]
    fn k4_and_c4_differ() {
        assert_ne!(canonical_form(&Graph::complete(4)).unwrap(), canonical_form(&Graph::cycle(4)).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(canonical_form_with_cap(&Graph::new(10), 9), Err(Error::Capacity(_))));
        assert!(canonical_form(&Graph::new(0)).is_ok());
    }

    #[test]
    fn regular_graphs_are_told_apart() {
        // Two cubic graphs on 6 nodes: the prism and K3,3.
        let prism = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)]).unwrap();
        let k33 = Graph::from_edges(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]).unwrap();
        assert!(!are_isomorphic(&prism, &k33));
        let shuffled = prism.permute(&[4, 2, 0, 5, 1, 3]).unwrap();
        assert!(are_isomorphic(&prism, &shuffled));
    }

    #[test]
    fn labels_matter() {
        let mut a = Graph::path(3);
        a.set_node_labels(vec![0, 1, 0]).unwrap();
        let mut b = Graph::path(3);
        b.set_node_labels(vec![1, 0, 0]).unwrap();
        assert!(!are_isomorphic(&a, &b));
        let c = a.permute(&[2, 1, 0]).unwrap();
        assert!(are_isomorphic(&a, &c));
    }
}
