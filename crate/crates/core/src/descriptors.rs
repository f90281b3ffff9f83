//! Per-graph structural statistics compared by MMD: degree histogram,
//! clustering-coefficient histogram, mean 4-node graphlet orbit counts and
//! normalized-Laplacian spectrum histogram.

use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// Orbits 4..=14 of the connected 4-node graphlets.
pub const ORBIT_COUNT: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorConfig {
    /// Degrees above this land in the last bin.
    pub max_degree: usize,
    pub clustering_bins: usize,
    pub spectrum_bins: usize,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig { max_degree: 511, clustering_bins: 100, spectrum_bins: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDescriptors {
    pub degree: Vec<f64>,
    pub clustering: Vec<f64>,
    pub orbit: Vec<f64>,
    pub spectrum: Vec<f64>,
}

pub fn descriptors(g: &Graph) -> GraphDescriptors {
    descriptors_with(g, &DescriptorConfig::default())
}

pub fn descriptors_with(g: &Graph, cfg: &DescriptorConfig) -> GraphDescriptors {
    GraphDescriptors {
        degree: degree_histogram(g, cfg.max_degree),
        clustering: clustering_histogram(g, cfg.clustering_bins),
        orbit: mean_orbit_counts(g),
        spectrum: spectrum_histogram(g, cfg.spectrum_bins),
    }
}

fn normalize(mut hist: Vec<f64>) -> Vec<f64> {
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        hist.iter_mut().for_each(|x| *x /= total);
    }
    hist
}

pub fn degree_histogram(g: &Graph, max_degree: usize) -> Vec<f64> {
    let mut hist = vec![0.0; max_degree + 1];
    for v in 0..g.n() {
        hist[g.degree(v).min(max_degree)] += 1.0;
    }
    normalize(hist)
}

/// Local clustering coefficient of every node (0 below degree 2).
pub fn clustering_coefficients(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|v| {
            let nb = g.adj(v);
            let d = nb.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                links += sorted_intersection(&nb[i + 1..], g.adj(a));
            }
            2.0 * links as f64 / (d * (d - 1)) as f64
        })
        .collect()
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn bin_index(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = ((x - lo) / (hi - lo) * bins as f64).floor();
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

pub fn clustering_histogram(g: &Graph, bins: usize) -> Vec<f64> {
    let mut hist = vec![0.0; bins];
    for c in clustering_coefficients(g) {
        hist[bin_index(c, 0.0, 1.0, bins)] += 1.0;
    }
    normalize(hist)
}

/// Per-node counts of orbits 4..=14 (index 0 is orbit 4), from an
/// enumeration of every connected induced 4-node subgraph.
pub fn orbit_counts(g: &Graph) -> Vec<[u64; ORBIT_COUNT]> {
    let mut counts = vec![[0u64; ORBIT_COUNT]; g.n()];
    for_each_connected_quad(g, |quad| {
        let mut deg = [0usize; 4];
        let mut edges = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                if g.has_edge(quad[i], quad[j]) {
                    deg[i] += 1;
                    deg[j] += 1;
                    edges += 1;
                }
            }
        }
        let max_deg = *deg.iter().max().unwrap();
        for i in 0..4 {
            let orbit = match (edges, max_deg, deg[i]) {
                (3, 2, 1) => 4,
                (3, 2, _) => 5,
                (3, _, 1) => 6,
                (3, _, _) => 7,
                (4, 2, _) => 8,
                (4, _, 1) => 9,
                (4, _, 2) => 10,
                (4, _, _) => 11,
                (5, _, 2) => 12,
                (5, _, _) => 13,
                _ => 14,
            };
            counts[quad[i]][orbit - 4] += 1;
        }
    });
    counts
}

pub fn mean_orbit_counts(g: &Graph) -> Vec<f64> {
    let mut mean = vec![0.0; ORBIT_COUNT];
    if g.n() == 0 {
        return mean;
    }
    for row in orbit_counts(g) {
        for (m, c) in mean.iter_mut().zip(row) {
            *m += c as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= g.n() as f64);
    mean
}

/// Visits each connected induced 4-node subgraph once (ESU enumeration).
fn for_each_connected_quad<F: FnMut([usize; 4])>(g: &Graph, mut visit: F) {
    fn extend<F: FnMut([usize; 4])>(g: &Graph, sub: &mut Vec<usize>, mut ext: Vec<usize>, root: usize, visit: &mut F) {
        if sub.len() == 4 {
            visit([sub[0], sub[1], sub[2], sub[3]]);
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in g.adj(w) {
                if u > root && !sub.contains(&u) && u != w && !next.contains(&u) && !sub.iter().any(|&s| g.has_edge(s, u)) {
                    next.push(u);
                }
            }
            sub.push(w);
            extend(g, sub, next, root, visit);
            sub.pop();
        }
    }
    let mut sub = Vec::with_capacity(4);
    for v in 0..g.n() {
        let ext: Vec<usize> = g.adj(v).iter().copied().filter(|&u| u > v).collect();
        sub.push(v);
        extend(g, &mut sub, ext, v, &mut visit);
        sub.pop();
    }
}

/// Eigenvalues of the symmetric normalized Laplacian, ascending. Isolated
/// nodes contribute a zero row and column.
pub fn eigen_spectrum(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| match g.degree(v) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    let mut a = vec![0.0; n * n];
    for v in 0..n {
        if g.degree(v) > 0 {
            a[v * n + v] = 1.0;
        }
        for &u in g.adj(v) {
            a[v * n + u] = -inv_sqrt[v] * inv_sqrt[u];
        }
    }
    let mut eig = jacobi_eigenvalues(a, n, 1e-10, 100);
    eig.sort_by(f64::total_cmp);
    eig
}

/// Cyclic Jacobi rotations on a dense symmetric row-major matrix.
pub fn jacobi_eigenvalues(a: Vec<f64>, n: usize, tol: f64, max_sweeps: usize) -> Vec<f64> {
    jacobi(a, n, tol, max_sweeps, None)
}

/// Eigenvalues (unsorted) and the matching unit eigenvectors, stored as the
/// columns of a row-major `n x n` matrix.
pub fn jacobi_eigen(a: Vec<f64>, n: usize, tol: f64, max_sweeps: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    (0..n).for_each(|i| v[i * n + i] = 1.0);
    let values = jacobi(a, n, tol, max_sweeps, Some(&mut v));
    (values, v)
}

fn jacobi(mut a: Vec<f64>, n: usize, tol: f64, max_sweeps: usize, mut vectors: Option<&mut Vec<f64>>) -> Vec<f64> {
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                if let Some(v) = vectors.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Eigenvalues sitting on a bin edge (0.5, 1, ... are common) come out of
/// the solver a few ulps to either side depending on node order; shifting by
/// more than the solver error puts them in the upper bin consistently.
const EDGE_SNAP: f64 = 1e-8;

pub fn spectrum_histogram(g: &Graph, bins: usize) -> Vec<f64> {
    let mut hist = vec![0.0; bins];
    for x in eigen_spectrum(g) {
        hist[bin_index(x + EDGE_SNAP, 0.0, 2.0, bins)] += 1.0;
    }
    normalize(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_and_star_clustering() {
        let d = descriptors(&Graph::complete(4));
        assert_eq!(d.clustering[99], 1.0);
        let d = descriptors(&Graph::star(5));
        assert_eq!(d.clustering[0], 1.0);
        assert!((d.degree.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_spectra() {
        let k2 = eigen_spectrum(&Graph::path(2));
        assert!((k2[0]).abs() < 1e-9 && (k2[1] - 2.0).abs() < 1e-9);
        let c4 = eigen_spectrum(&Graph::cycle(4));
        for (x, e) in c4.iter().zip([0.0, 1.0, 1.0, 2.0]) {
            assert!((x - e).abs() < 1e-9, "{c4:?}");
        }
    }

    #[test]
    fn c4_orbits() {
        for row in orbit_counts(&Graph::cycle(4)) {
            let mut expected = [0; ORBIT_COUNT];
            expected[8 - 4] = 1;
            assert_eq!(row, expected);
        }
        let k4 = orbit_counts(&Graph::complete(4));
        assert!(k4.iter().all(|r| r[10] == 1 && r.iter().sum::<u64>() == 1));
    }
}
