//! SBM validity: recover blocks by greedy community detection and accept
//! when the recovered block structure and densities match the generator.

use serde::{Deserialize, Serialize};
use sentgraph_core::descriptors::jacobi_eigen;
use sentgraph_core::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbmValidity {
    pub min_blocks: usize,
    pub max_blocks: usize,
    pub min_block_size: usize,
    pub max_block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub tol_in: f64,
    pub tol_out: f64,
}

impl Default for SbmValidity {
    fn default() -> Self {
        SbmValidity {
            min_blocks: 2,
            max_blocks: 5,
            min_block_size: 20,
            max_block_size: 40,
            p_in: 0.3,
            p_out: 0.05,
            tol_in: 0.1,
            tol_out: 0.04,
        }
    }
}

/// What the checker measured on one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmFit {
    pub blocks: Vec<usize>,
    pub block_sizes: Vec<usize>,
    pub intra_density: f64,
    pub inter_density: f64,
}

impl SbmValidity {
    /// Block count and sizes are in range.
    pub fn structure_ok(&self, fit: &SbmFit) -> bool {
        let k = fit.block_sizes.len();
        (self.min_blocks..=self.max_blocks).contains(&k)
            && fit.block_sizes.iter().all(|s| (self.min_block_size..=self.max_block_size).contains(s))
    }

    pub fn accepts(&self, fit: &SbmFit) -> bool {
        self.structure_ok(fit)
            && (fit.intra_density - self.p_in).abs() <= self.tol_in
            && (fit.inter_density - self.p_out).abs() <= self.tol_out
    }

    pub fn is_valid(&self, g: &Graph) -> bool {
        self.accepts(&fit_blocks(g, self))
    }
}

/// Edge density above which two groups are better explained as one block:
/// the planted-partition log-likelihood gains `ln(p_in / p_out)` per edge
/// and loses `ln((1 - p_out) / (1 - p_in))` per non-edge inside a block.
pub fn merge_threshold(p_in: f64, p_out: f64) -> f64 {
    let non_edge = ((1.0 - p_out) / (1.0 - p_in)).ln();
    let edge = (p_in / p_out).ln();
    non_edge / (edge + non_edge)
}

/// Multi-level greedy maximization (Louvain scheme) of
/// `sum over blocks of (internal edges - resolution * internal pairs)`:
/// move single nodes while the score rises, collapse blocks into weighted
/// nodes, repeat until nothing moves.
pub fn communities(g: &Graph, resolution: f64) -> Vec<usize> {
    let n = g.n();
    if n == 0 {
        return Vec::new();
    }
    let mut w = vec![vec![0.0; n]; n];
    for (u, v) in g.edges() {
        w[u][v] += 1.0;
        w[v][u] += 1.0;
    }
    let mut sizes = vec![1.0; n];
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let level = compact(&local_moves(&w, &sizes, resolution));
        let k = level.iter().max().map_or(0, |&c| c + 1);
        if k == w.len() {
            break;
        }
        label.iter_mut().for_each(|l| *l = level[*l]);
        let mut agg = vec![vec![0.0; k]; k];
        let mut agg_sizes = vec![0.0; k];
        for (i, row) in w.iter().enumerate() {
            agg_sizes[level[i]] += sizes[i];
            for (j, &x) in row.iter().enumerate() {
                agg[level[i]][level[j]] += x;
            }
        }
        w = agg;
        sizes = agg_sizes;
    }
    compact(&label)
}

/// One phase of single-node moves. Moving node `v` (weight `s_v`) into
/// block `c` scores `links(v, c) - resolution * s_v * size(c)`.
fn local_moves(w: &[Vec<f64>], sizes: &[f64], resolution: f64) -> Vec<usize> {
    let n = w.len();
    let mut label: Vec<usize> = (0..n).collect();
    let mut block_size = sizes.to_vec();
    for _ in 0..100 {
        let mut moved = false;
        for v in 0..n {
            let own = label[v];
            let mut links = std::collections::BTreeMap::new();
            for (u, &x) in w[v].iter().enumerate() {
                if u != v && x > 0.0 {
                    *links.entry(label[u]).or_insert(0.0) += x;
                }
            }
            block_size[own] -= sizes[v];
            let score = |c: usize, k: f64| k - resolution * sizes[v] * block_size[c];
            let mut best = (score(own, links.get(&own).copied().unwrap_or(0.0)), own);
            for (&c, &k) in &links {
                let sc = score(c, k);
                if sc > best.0 + 1e-12 {
                    best = (sc, c);
                }
            }
            block_size[best.1] += sizes[v];
            if best.1 != own {
                label[v] = best.1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    label
}

/// Merges blocks smaller than `min_size`, smallest first, into the block
/// where the score of [`communities`] drops least, until none is left or
/// one block remains.
pub fn absorb_small(g: &Graph, label: &mut [usize], min_size: usize, resolution: f64) {
    loop {
        let k = label.iter().max().map_or(0, |&c| c + 1);
        let mut size = vec![0usize; k];
        label.iter().for_each(|&c| size[c] += 1);
        if k < 2 {
            break;
        }
        let Some(small) = (0..k).filter(|&c| size[c] < min_size).min_by_key(|&c| (size[c], c)) else {
            break;
        };
        let mut links = vec![0.0; k];
        for (u, v) in g.edges() {
            if label[u] == small && label[v] != small {
                links[label[v]] += 1.0;
            } else if label[v] == small && label[u] != small {
                links[label[u]] += 1.0;
            }
        }
        let score = |c: usize| links[c] - resolution * (size[small] * size[c]) as f64;
        let target = (0..k)
            .filter(|&c| c != small)
            .max_by(|&a, &b| score(a).total_cmp(&score(b)).then(b.cmp(&a)))
            .expect("another block exists");
        label.iter_mut().filter(|l| **l == small).for_each(|l| *l = target);
        let compacted = compact(label);
        label.copy_from_slice(&compacted);
    }
}

/// Renumbers labels by first appearance.
fn compact(label: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    label
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// `sum over blocks of (internal edges - resolution * internal pairs)`,
/// the planted-partition log-likelihood up to an affine transformation
/// when `resolution` is [`merge_threshold`].
pub fn partition_score(g: &Graph, label: &[usize], resolution: f64) -> f64 {
    let k = label.iter().max().map_or(0, |&c| c + 1);
    let mut size = vec![0usize; k];
    label.iter().for_each(|&c| size[c] += 1);
    let internal = g.edges().filter(|&(u, v)| label[u] == label[v]).count() as f64;
    let pairs: usize = size.iter().map(|&s| s * s.saturating_sub(1) / 2).sum();
    internal - resolution * pairs as f64
}

/// Single-node moves between existing blocks (no new blocks are opened)
/// while the score rises.
fn polish(g: &Graph, label: &mut [usize], resolution: f64) {
    let k = label.iter().max().map_or(0, |&c| c + 1);
    let mut size = vec![0.0; k];
    label.iter().for_each(|&c| size[c] += 1.0);
    for _ in 0..50 {
        let mut moved = false;
        for v in 0..g.n() {
            let own = label[v];
            let mut links = vec![0.0; k];
            g.adj(v).iter().for_each(|&u| links[label[u]] += 1.0);
            size[own] -= 1.0;
            let score = |c: usize| links[c] - resolution * size[c];
            let mut best = own;
            for c in 0..k {
                if score(c) > score(best) + 1e-12 {
                    best = c;
                }
            }
            size[best] += 1.0;
            if best != own {
                label[v] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let compacted = compact(label);
    label.copy_from_slice(&compacted);
}

/// Lloyd's k-means on the rows of `points` (`n x dim`), seeded by
/// farthest-first traversal from node `start`.
fn kmeans(points: &[Vec<f64>], k: usize, start: usize) -> Vec<usize> {
    let n = points.len();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut centers = vec![points[start].clone()];
    while centers.len() < k {
        let far = (0..n)
            .max_by(|&a, &b| {
                let da = centers.iter().map(|c| dist(&points[a], c)).fold(f64::INFINITY, f64::min);
                let db = centers.iter().map(|c| dist(&points[b], c)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("nonempty");
        centers.push(points[far].clone());
    }
    let mut label = vec![0; n];
    for _ in 0..100 {
        let next: Vec<usize> = points
            .iter()
            .map(|p| (0..k).min_by(|&a, &b| dist(p, &centers[a]).total_cmp(&dist(p, &centers[b]))).unwrap())
            .collect();
        let changed = next != label;
        label = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&label).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                for (j, x) in center.iter_mut().enumerate() {
                    *x = members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    label
}

/// Candidate partitions: the multi-level greedy one, and spectral k-means
/// (top-k adjacency eigenvectors) for every allowed block count from a few
/// deterministic seeds. Each is polished by node moves and undersized
/// blocks are folded in; the highest [`partition_score`] wins.
pub fn recover_blocks(g: &Graph, params: &SbmValidity) -> Vec<usize> {
    let n = g.n();
    let resolution = merge_threshold(params.p_in, params.p_out);
    let finish = |mut label: Vec<usize>| {
        polish(g, &mut label, resolution);
        absorb_small(g, &mut label, params.min_block_size, resolution);
        polish(g, &mut label, resolution);
        label
    };
    let mut best = finish(communities(g, resolution));
    let mut best_score = partition_score(g, &best, resolution);
    let max_k = params.max_blocks.min(n);
    if n >= 2 && g.m() > 0 && max_k >= params.min_blocks.max(2) {
        let mut a = vec![0.0; n * n];
        for (u, v) in g.edges() {
            a[u * n + v] = 1.0;
            a[v * n + u] = 1.0;
        }
        let (values, vectors) = jacobi_eigen(a, n, 1e-9, 100);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
        for k in params.min_blocks.max(2)..=max_k {
            let points: Vec<Vec<f64>> = (0..n).map(|i| order[..k].iter().map(|&c| vectors[i * n + c]).collect()).collect();
            for start in (0..4).map(|s| s * n / 4) {
                let label = finish(kmeans(&points, k, start));
                let score = partition_score(g, &label, resolution);
                if score > best_score + 1e-9 {
                    best = label;
                    best_score = score;
                }
            }
        }
    }
    best
}

/// Recovers blocks and measures densities within and between them.
pub fn fit_blocks(g: &Graph, params: &SbmValidity) -> SbmFit {
    let blocks = recover_blocks(g, params);
    let k = blocks.iter().copied().max().map_or(0, |b| b + 1);
    let mut block_sizes = vec![0usize; k];
    blocks.iter().for_each(|&b| block_sizes[b] += 1);
    let intra_pairs: usize = block_sizes.iter().map(|&s| s * s.saturating_sub(1) / 2).sum();
    let n = g.n();
    let inter_pairs = n * n.saturating_sub(1) / 2 - intra_pairs;
    let intra_edges = g.edges().filter(|&(u, v)| blocks[u] == blocks[v]).count();
    let inter_edges = g.m() - intra_edges;
    let ratio = |e: usize, p: usize| if p == 0 { 0.0 } else { e as f64 / p as f64 };
    SbmFit {
        intra_density: ratio(intra_edges, intra_pairs),
        inter_density: ratio(inter_edges, inter_pairs),
        blocks,
        block_sizes,
    }
}

/// Outcome of running the checker on reference SBM draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub graphs: usize,
    pub accept_rate: f64,
    pub structure_rate: f64,
    /// Smallest tolerances that accept `target` of the structurally valid draws.
    pub suggested_tol_in: f64,
    pub suggested_tol_out: f64,
}

/// Measures the acceptance rate of `params` on `graphs` and the density
/// tolerances needed to reach `target` acceptance.
pub fn calibrate(graphs: &[Graph], params: &SbmValidity, target: f64) -> Calibration {
    use rayon::prelude::*;
    let fits: Vec<SbmFit> = graphs.par_iter().map(|g| fit_blocks(g, params)).collect();
    let structured: Vec<&SbmFit> = fits.iter().filter(|f| params.structure_ok(f)).collect();
    let quantile = |mut xs: Vec<f64>| {
        if xs.is_empty() {
            return f64::NAN;
        }
        xs.sort_by(f64::total_cmp);
        let idx = ((target * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1;
        xs[idx]
    };
    let total = graphs.len().max(1) as f64;
    Calibration {
        graphs: graphs.len(),
        accept_rate: fits.iter().filter(|f| params.accepts(f)).count() as f64 / total,
        structure_rate: structured.len() as f64 / total,
        suggested_tol_in: quantile(structured.iter().map(|f| (f.intra_density - params.p_in).abs()).collect()),
        suggested_tol_out: quantile(structured.iter().map(|f| (f.inter_density - params.p_out).abs()).collect()),
    }
}
