//! Exponential planarity reference for graphs with at most ~10 nodes.

use sentgraph_core::Graph;

/// Searches for internally disjoint paths realizing `pairs` between branch
/// vertices, with interior nodes drawn from unused non-branch vertices.
fn route(g: &Graph, pairs: &[(usize, usize)], used: &mut Vec<bool>) -> bool {
    let Some((&(a, b), rest)) = pairs.split_first() else {
        return true;
    };
    fn walk(g: &Graph, at: usize, goal: usize, rest: &[(usize, usize)], used: &mut Vec<bool>) -> bool {
        for &w in g.adj(at) {
            if w == goal && route(g, rest, used) {
                return true;
            }
            if !used[w] {
                used[w] = true;
                let found = walk(g, w, goal, rest, used);
                used[w] = false;
                if found {
                    return true;
                }
            }
        }
        false
    }
    walk(g, a, b, rest, used)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

/// Brute-force Kuratowski check: a graph is planar iff it contains no
/// subdivision of K5 or K3,3.
pub fn oracle_planar(g: &Graph) -> bool {
    let n = g.n();
    if n >= 3 && g.m() > 3 * n - 6 {
        return false;
    }
    let fresh = |branch: &[usize]| {
        let mut used = vec![false; n];
        branch.iter().for_each(|&b| used[b] = true);
        used
    };
    for set in subsets(n, 5) {
        if set.iter().any(|&v| g.degree(v) < 4) {
            continue;
        }
        let pairs: Vec<_> = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).map(|(i, j)| (set[i], set[j])).collect();
        if route(g, &pairs, &mut fresh(&set)) {
            return false;
        }
    }
    for set in subsets(n, 6) {
        if set.iter().any(|&v| g.degree(v) < 3) {
            continue;
        }
        for side in subsets(6, 3).into_iter().filter(|s| s[0] == 0) {
            let left: Vec<usize> = side.iter().map(|&i| set[i]).collect();
            let right: Vec<usize> = (0..6).filter(|i| !side.contains(i)).map(|i| set[i]).collect();
            let pairs: Vec<_> = left.iter().flat_map(|&a| right.iter().map(move |&b| (a, b))).collect();
            if route(g, &pairs, &mut fresh(&set)) {
                return false;
            }
        }
    }
    true
}
