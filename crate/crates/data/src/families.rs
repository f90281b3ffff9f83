//! Random graph families.

use rand::seq::SliceRandom;
use rand::Rng;
use sentgraph_core::{Error, Graph, Result};
use spade::{DelaunayTriangulation, Point2, Triangulation};

/// Delaunay triangulation of `n` uniform points in the unit square.
/// Degenerate draws (coincident or all-collinear points) are redrawn.
pub fn delaunay<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Graph> {
    if n < 3 {
        return Err(Error::Input(format!("Delaunay graphs need at least 3 nodes, got {n}")));
    }
    loop {
        let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
        let mut ok = true;
        for _ in 0..n {
            let p = Point2::new(rng.gen::<f64>(), rng.gen::<f64>());
            if tri.insert(p).is_err() {
                ok = false;
            }
        }
        if !ok || tri.num_vertices() != n {
            continue;
        }
        let mut g = Graph::new(n);
        for e in tri.undirected_edges() {
            let [a, b] = e.vertices();
            g.add_edge(a.fix().index(), b.fix().index())?;
        }
        if g.is_connected() && g.m() >= n - 1 {
            return Ok(g);
        }
    }
}

/// A stochastic block model draw with its block assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmGraph {
    pub graph: Graph,
    pub blocks: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbmParams {
    pub min_blocks: usize,
    pub max_blocks: usize,
    pub min_block_size: usize,
    pub max_block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        SbmParams { min_blocks: 2, max_blocks: 5, min_block_size: 20, max_block_size: 40, p_in: 0.3, p_out: 0.05 }
    }
}

pub fn sbm<R: Rng + ?Sized>(params: &SbmParams, rng: &mut R) -> SbmGraph {
    let k = rng.gen_range(params.min_blocks..=params.max_blocks);
    let mut blocks = Vec::new();
    for b in 0..k {
        let size = rng.gen_range(params.min_block_size..=params.max_block_size);
        blocks.extend(std::iter::repeat(b).take(size));
    }
    let n = blocks.len();
    let mut graph = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            let p = if blocks[u] == blocks[v] { params.p_in } else { params.p_out };
            if rng.gen_bool(p) {
                graph.add_edge(u, v).expect("fresh pair");
            }
        }
    }
    SbmGraph { graph, blocks }
}

/// Tree encoded by a Prüfer sequence over `0..n`.
pub fn tree_from_pruefer(seq: &[usize]) -> Result<Graph> {
    let n = seq.len() + 2;
    if seq.iter().any(|&x| x >= n) {
        return Err(Error::Input("Prüfer entries must be below the node count".into()));
    }
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut g = Graph::new(n);
    let mut leaves: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..n).filter(|&v| degree[v] == 1).map(std::cmp::Reverse).collect();
    for &x in seq {
        let std::cmp::Reverse(leaf) = leaves.pop().expect("a leaf always exists");
        g.add_edge(leaf, x)?;
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.push(std::cmp::Reverse(x));
        }
    }
    let std::cmp::Reverse(a) = leaves.pop().unwrap();
    let std::cmp::Reverse(b) = leaves.pop().unwrap();
    g.add_edge(a, b)?;
    Ok(g)
}

/// Uniform random labeled tree.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Graph> {
    match n {
        0 => Err(Error::Input("a tree needs at least one node".into())),
        1 => Ok(Graph::new(1)),
        2 => Ok(Graph::path(2)),
        _ => {
            let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            tree_from_pruefer(&seq)
        }
    }
}

pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut g = Graph::new(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                g.add_edge(v, v + 1).expect("grid edge");
            }
            if r + 1 < rows {
                g.add_edge(v, v + cols).expect("grid edge");
            }
        }
    }
    g
}

/// Random lobster: a backbone path of expected length `mean_backbone`, each
/// backbone node sprouting leaves with probability `p1` (repeatedly) and each
/// such leaf sprouting its own leaves with probability `p2`.
pub fn lobster<R: Rng + ?Sized>(mean_backbone: f64, p1: f64, p2: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..1.0).contains(&p1) || !(0.0..1.0).contains(&p2) {
        return Err(Error::Input("lobster probabilities must lie in [0, 1)".into()));
    }
    loop {
        let backbone = (2.0 * rng.gen::<f64>() * mean_backbone + 0.5) as usize;
        if backbone == 0 {
            continue;
        }
        let mut edges = Vec::new();
        for v in 1..backbone {
            edges.push((v - 1, v));
        }
        let mut last = backbone - 1;
        for v in 0..backbone {
            while rng.gen::<f64>() < p1 {
                last += 1;
                edges.push((v, last));
                let cat = last;
                while rng.gen::<f64>() < p2 {
                    last += 1;
                    edges.push((cat, last));
                }
            }
        }
        return Graph::from_edges(last + 1, &edges);
    }
}

pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v).expect("fresh pair");
            }
        }
    }
    g
}

/// Relabels nodes uniformly at random, so generator ordering never leaks into
/// node ids.
pub fn shuffle_nodes<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Graph {
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.shuffle(rng);
    g.permute(&perm).expect("shuffle is a bijection")
}

#[cfg(test)]
mod tests {
    use super::*;
    use sentgraph_core::stream_rng;

    #[test]
    fn pruefer_decodes_to_tree() {
        let g = tree_from_pruefer(&[3, 3, 3, 4]).unwrap();
        assert_eq!((g.n(), g.m()), (6, 5));
        assert!(g.is_connected());
        assert_eq!(g.degree(3), 4);
        let mut rng = stream_rng(1, 0);
        for n in 1..30 {
            let t = random_tree(n, &mut rng).unwrap();
            assert_eq!((t.n(), t.m()), (n, n - 1));
            assert!(t.is_connected());
        }
    }

    #[test]
    fn delaunay_is_a_connected_triangulation() {
        let mut rng = stream_rng(2, 0);
        for _ in 0..20 {
            let g = delaunay(64, &mut rng).unwrap();
            assert_eq!(g.n(), 64);
            assert!(g.is_connected());
            assert!(g.m() <= 3 * 64 - 6);
            assert!(g.m() >= 2 * 64 - 3);
        }
        assert!(delaunay(2, &mut rng).is_err());
    }

    #[test]
    fn sbm_sizes() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..20 {
            let s = sbm(&SbmParams::default(), &mut rng);
            let n = s.graph.n();
            assert!((40..=200).contains(&n));
            let k = s.blocks.iter().max().unwrap() + 1;
            assert!((2..=5).contains(&k));
        }
    }

    #[test]
    fn grid_and_lobster_shapes() {
        let g = grid(3, 4);
        assert_eq!((g.n(), g.m()), (12, 17));
        let mut rng = stream_rng(4, 0);
        for _ in 0..20 {
            let l = lobster(20.0, 0.7, 0.7, &mut rng).unwrap();
            assert_eq!(l.m(), l.n() - 1);
            assert!(l.is_connected());
        }
    }
}
