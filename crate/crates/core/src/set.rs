//! Segmented Eulerian trails: the neighborhood-free ablation encoding.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Draw;
use crate::sent::{NbTuple, Sent};

/// A sequence of trails whose edge sets partition the graph's edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SegmentedTrail {
    pub segments: Vec<Vec<usize>>,
}

impl SegmentedTrail {
    pub fn new(segments: Vec<Vec<usize>>) -> Self {
        SegmentedTrail { segments }
    }

    /// Same trails as a SENT with empty neighborhood sets.
    pub fn to_sent(&self) -> Sent {
        Sent::new(
            self.segments
                .iter()
                .map(|seg| seg.iter().map(|&v| NbTuple::bare(v)).collect())
                .collect(),
        )
    }

    pub fn trail_edges(&self) -> usize {
        self.segments.iter().map(|s| s.len().saturating_sub(1)).sum()
    }

    /// Renames nodes to `1..` by first occurrence.
    pub fn reindexed(&self) -> SegmentedTrail {
        let mut ids = std::collections::HashMap::new();
        let segments = self
            .segments
            .iter()
            .map(|seg| {
                seg.iter()
                    .map(|v| {
                        let next = ids.len() + 1;
                        *ids.entry(*v).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        SegmentedTrail { segments }
    }
}

/// Swap-remove set over `0..n` with O(1) insert, remove and uniform pick.
struct IndexSet {
    items: Vec<usize>,
    slot: Vec<usize>,
}

impl IndexSet {
    fn new(n: usize) -> Self {
        IndexSet { items: Vec::new(), slot: vec![usize::MAX; n] }
    }

    fn insert(&mut self, x: usize) {
        if self.slot[x] == usize::MAX {
            self.slot[x] = self.items.len();
            self.items.push(x);
        }
    }

    fn remove(&mut self, x: usize) {
        let i = self.slot[x];
        if i == usize::MAX {
            return;
        }
        let last = *self.items.last().unwrap();
        self.items.swap_remove(i);
        if last != x {
            self.slot[last] = i;
        }
        self.slot[x] = usize::MAX;
    }

    fn pick<R: Draw + ?Sized>(&self, rng: &mut R) -> usize {
        self.items[rng.draw(self.items.len())]
    }

    fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Random segmented Eulerian trail: extend the current trail along a random
/// unused incident edge; when stuck, restart at a random node that still has
/// unused edges. Isolated nodes are emitted last as single-node segments.
pub fn sample_set<R: Draw + ?Sized>(g: &Graph, rng: &mut R) -> Result<SegmentedTrail> {
    let n = g.n();
    if n == 0 {
        return Err(Error::input("cannot sample a SET from an empty graph"));
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    // Unused incident edge ids per node, with each edge's slot at both ends.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut where_at: Vec<[usize; 2]> = vec![[0; 2]; edges.len()];
    for (e, &(u, v)) in edges.iter().enumerate() {
        where_at[e] = [incident[u].len(), incident[v].len()];
        incident[u].push(e);
        incident[v].push(e);
    }
    let end_of = |e: usize, x: usize| usize::from(edges[e].0 != x);

    let mut active = IndexSet::new(n);
    let mut untouched = IndexSet::new(n);
    for v in 0..n {
        untouched.insert(v);
        if !incident[v].is_empty() {
            active.insert(v);
        }
    }

    let mut remove_at = |x: usize, e: usize, incident: &mut Vec<Vec<usize>>| {
        let i = where_at[e][end_of(e, x)];
        let list = &mut incident[x];
        let last = *list.last().unwrap();
        list.swap_remove(i);
        if last != e {
            where_at[last][end_of(last, x)] = i;
        }
    };

    let mut segments = Vec::new();
    while !active.is_empty() {
        let mut v = active.pick(rng);
        untouched.remove(v);
        let mut trail = vec![v];
        while !incident[v].is_empty() {
            let e = incident[v][rng.draw(incident[v].len())];
            let (a, b) = edges[e];
            let u = if a == v { b } else { a };
            remove_at(v, e, &mut incident);
            remove_at(u, e, &mut incident);
            for x in [v, u] {
                if incident[x].is_empty() {
                    active.remove(x);
                }
            }
            untouched.remove(u);
            trail.push(u);
            v = u;
        }
        segments.push(trail);
    }
    while !untouched.is_empty() {
        let v = untouched.pick(rng);
        untouched.remove(v);
        segments.push(vec![v]);
    }
    Ok(SegmentedTrail { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::are_isomorphic;
    use crate::rng::stream_rng;
    use crate::sent::reconstruct;

    #[test]
    fn triangle_is_one_closed_trail() {
        let s = sample_set(&Graph::complete(3), &mut stream_rng(1, 0)).unwrap();
        assert_eq!(s.segments.len(), 1);
        let seg = &s.segments[0];
        assert_eq!(seg.len(), 4);
        assert_eq!(seg[0], seg[3]);
    }

    #[test]
    fn edgeless_graph_gives_singletons() {
        let s = sample_set(&Graph::new(3), &mut stream_rng(1, 0)).unwrap();
        let mut nodes: Vec<_> = s.segments.iter().map(|seg| {
            assert_eq!(seg.len(), 1);
            seg[0]
        }).collect();
        nodes.sort();
        assert_eq!(nodes, vec![0, 1, 2]);
    }

    #[test]
    fn partitions_edges_of_random_graphs() {
        use rand::Rng;
        let mut rng = stream_rng(5, 5);
        for _ in 0..200 {
            let n = rng.gen_range(1..30);
            let mut g = Graph::new(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.2) {
                        g.add_edge(u, v).unwrap();
                    }
                }
            }
            let s = sample_set(&g, &mut rng).unwrap();
            assert_eq!(s.trail_edges(), g.m());
            let h = reconstruct(&s.to_sent()).unwrap();
            assert!(are_isomorphic(&g, &h));
        }
    }
}
