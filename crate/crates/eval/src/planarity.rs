//! Left-right planarity test (Brandes' formulation of de Fraysseix and
//! Rosenstiehl's criterion), testing phase only.
//!
//! The DFS is recursive, so stack depth grows with the longest DFS path.

use sentgraph_core::Graph;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Interval {
    low: usize,
    high: usize,
}

impl Interval {
    const EMPTY: Interval = Interval { low: NONE, high: NONE };

    fn is_empty(&self) -> bool {
        self.low == NONE && self.high == NONE
    }
}

#[derive(Clone, Copy, Debug)]
struct ConflictPair {
    id: usize,
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LrState<'a> {
    g: &'a Graph,
    height: Vec<usize>,
    parent_edge: Vec<usize>,
    /// Oriented edges, indexed by edge id.
    src: Vec<usize>,
    dst: Vec<usize>,
    /// Oriented edge id of the undirected pair, keyed by `(min, max)` slot.
    oriented: std::collections::HashMap<(usize, usize), usize>,
    lowpt: Vec<usize>,
    lowpt2: Vec<usize>,
    nesting: Vec<usize>,
    out: Vec<Vec<usize>>,
    ref_: Vec<usize>,
    lowpt_edge: Vec<usize>,
    stack_bottom: Vec<usize>,
    stack: Vec<ConflictPair>,
    next_id: usize,
}

/// Exact planarity in `O(n + m)`.
pub fn is_planar(g: &Graph) -> bool {
    let n = g.n();
    if n >= 3 && g.m() > 3 * n - 6 {
        return false;
    }
    let mut st = LrState {
        g,
        height: vec![NONE; n],
        parent_edge: vec![NONE; n],
        src: Vec::with_capacity(g.m()),
        dst: Vec::with_capacity(g.m()),
        oriented: Default::default(),
        lowpt: Vec::new(),
        lowpt2: Vec::new(),
        nesting: Vec::new(),
        out: vec![Vec::new(); n],
        ref_: Vec::new(),
        lowpt_edge: Vec::new(),
        stack_bottom: Vec::new(),
        stack: Vec::new(),
        next_id: 0,
    };
    let mut roots = Vec::new();
    for v in 0..n {
        if st.height[v] == NONE {
            st.height[v] = 0;
            roots.push(v);
            st.orient(v);
        }
    }
    let m = st.src.len();
    st.ref_ = vec![NONE; m];
    st.lowpt_edge = vec![NONE; m];
    st.stack_bottom = vec![NONE; m];
    for v in 0..n {
        let mut adj = std::mem::take(&mut st.out[v]);
        adj.sort_by_key(|&e| st.nesting[e]);
        st.out[v] = adj;
    }
    roots.into_iter().all(|r| st.test(r))
}

impl LrState<'_> {
    fn orient(&mut self, v: usize) {
        let e = self.parent_edge[v];
        for &w in self.g.adj(v) {
            let key = (v.min(w), v.max(w));
            if self.oriented.contains_key(&key) {
                continue;
            }
            let vw = self.src.len();
            self.src.push(v);
            self.dst.push(w);
            self.oriented.insert(key, vw);
            self.out[v].push(vw);
            self.lowpt.push(self.height[v]);
            self.lowpt2.push(self.height[v]);
            self.nesting.push(0);
            if self.height[w] == NONE {
                self.parent_edge[w] = vw;
                self.height[w] = self.height[v] + 1;
                self.orient(w);
            } else {
                self.lowpt[vw] = self.height[w];
            }
            self.nesting[vw] = 2 * self.lowpt[vw] + usize::from(self.lowpt2[vw] < self.height[v]);
            if e != NONE {
                if self.lowpt[vw] < self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt[e].min(self.lowpt2[vw]);
                    self.lowpt[e] = self.lowpt[vw];
                } else if self.lowpt[vw] > self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt[vw]);
                } else {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt2[vw]);
                }
            }
        }
    }

    /// Writes through a possibly missing edge are dropped.
    fn set_ref(&mut self, edge: usize, target: usize) {
        if edge != NONE {
            self.ref_[edge] = target;
        }
    }

    fn top_id(&self) -> usize {
        self.stack.last().map_or(NONE, |p| p.id)
    }

    fn push(&mut self, left: Interval, right: Interval) {
        let id = self.next_id;
        self.next_id += 1;
        self.stack.push(ConflictPair { id, left, right });
    }

    fn conflicting(&self, i: &Interval, b: usize) -> bool {
        !i.is_empty() && self.lowpt[i.high] > self.lowpt[b]
    }

    fn lowest(&self, p: &ConflictPair) -> usize {
        if p.left.is_empty() {
            self.lowpt[p.right.low]
        } else if p.right.is_empty() {
            self.lowpt[p.left.low]
        } else {
            self.lowpt[p.left.low].min(self.lowpt[p.right.low])
        }
    }

    fn test(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        let edges = self.out[v].clone();
        for (i, &ei) in edges.iter().enumerate() {
            let w = self.dst[ei];
            self.stack_bottom[ei] = self.top_id();
            if ei == self.parent_edge[w] {
                if !self.test(w) {
                    return false;
                }
            } else {
                self.lowpt_edge[ei] = ei;
                self.push(Interval::EMPTY, Interval { low: ei, high: ei });
            }
            if self.lowpt[ei] < self.height[v] {
                if i == 0 {
                    if e != NONE {
                        self.lowpt_edge[e] = self.lowpt_edge[ei];
                    }
                } else if !self.add_constraints(ei, e) {
                    return false;
                }
            }
        }
        if e != NONE {
            let u = self.src[e];
            self.remove_back_edges(u);
            if self.lowpt[e] < self.height[u] {
                let top = self.stack.last().expect("return edges leave a pair");
                let (hl, hr) = (top.left.high, top.right.high);
                self.set_ref(e, if hl != NONE && (hr == NONE || self.lowpt[hl] > self.lowpt[hr]) { hl } else { hr });
            }
        }
        true
    }

    fn add_constraints(&mut self, ei: usize, e: usize) -> bool {
        let mut p = ConflictPair { id: NONE, left: Interval::EMPTY, right: Interval::EMPTY };
        loop {
            let mut q = self.stack.pop().expect("constraint stack underflow");
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            if self.lowpt[q.right.low] > self.lowpt[e] {
                if p.right.is_empty() {
                    p.right = q.right;
                } else {
                    self.set_ref(p.right.low, q.right.high);
                }
                p.right.low = q.right.low;
            } else {
                self.set_ref(q.right.low, self.lowpt_edge[e]);
            }
            if self.top_id() == self.stack_bottom[ei] {
                break;
            }
        }
        while let Some(top) = self.stack.last() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().unwrap();
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            self.set_ref(p.right.low, q.right.high);
            if q.right.low != NONE {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else {
                self.set_ref(p.left.low, q.left.high);
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.push(p.left, p.right);
        }
        true
    }

    fn remove_back_edges(&mut self, u: usize) {
        while let Some(top) = self.stack.last() {
            if self.lowest(top) != self.height[u] {
                break;
            }
            self.stack.pop();
        }
        if let Some(mut p) = self.stack.pop() {
            while p.left.high != NONE && self.dst[p.left.high] == u {
                p.left.high = self.ref_[p.left.high];
            }
            if p.left.high == NONE && p.left.low != NONE {
                self.set_ref(p.left.low, p.right.low);
                p.left.low = NONE;
            }
            while p.right.high != NONE && self.dst[p.right.high] == u {
                p.right.high = self.ref_[p.right.high];
            }
            if p.right.high == NONE && p.right.low != NONE {
                self.set_ref(p.right.low, p.left.low);
                p.right.low = NONE;
            }
            self.stack.push(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuratowski_graphs_are_not_planar() {
        assert!(!is_planar(&Graph::complete(5)));
        let k33 = Graph::from_edges(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]).unwrap();
        assert!(!is_planar(&k33));
        assert!(is_planar(&Graph::complete(4)));
        assert!(is_planar(&Graph::cycle(10)));
        assert!(is_planar(&Graph::new(0)));
        // Petersen graph: 15 edges on 10 nodes passes the edge bound but is not planar.
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        assert!(!is_planar(&Graph::from_edges(10, &edges).unwrap()));
    }
}
