//! Dataset specifications and deterministic, parallel generation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use sentgraph_core::{stream_rng, Error, Graph, Result};

use crate::families::{self, SbmParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Planar,
    Sbm,
    Tree,
    Cycle,
    Grid,
    Lobster,
    Er,
}

impl Family {
    pub const ALL: [Family; 7] =
        [Family::Planar, Family::Sbm, Family::Tree, Family::Cycle, Family::Grid, Family::Lobster, Family::Er];

    pub fn name(self) -> &'static str {
        match self {
            Family::Planar => "planar",
            Family::Sbm => "sbm",
            Family::Tree => "tree",
            Family::Cycle => "cycle",
            Family::Grid => "grid",
            Family::Lobster => "lobster",
            Family::Er => "er",
        }
    }

    /// Default node count; for grids, the side length.
    pub fn default_nodes(self) -> usize {
        match self {
            Family::Planar => 64,
            Family::Sbm => 0,
            Family::Tree | Family::Cycle => 32,
            Family::Grid => 6,
            Family::Lobster => 20,
            Family::Er => 50,
        }
    }

    /// Train/val/test fractions.
    pub fn default_split(self) -> [f64; 3] {
        match self {
            Family::Planar | Family::Sbm => [0.64, 0.16, 0.20],
            _ => [0.8, 0.1, 0.1],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s || (s == "planar-delaunay" && *f == Family::Planar))
            .ok_or_else(|| Error::Input(format!("unknown graph family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub family: Family,
    pub count: usize,
    /// Node count, or the lower end of a uniform range when `nodes_max` is
    /// set. Grids use it as the side length; lobsters as the mean backbone.
    pub nodes: usize,
    pub nodes_max: Option<usize>,
    /// Edge probability for Erdős–Rényi graphs.
    pub edge_prob: f64,
    pub lobster_p1: f64,
    pub lobster_p2: f64,
    pub sbm: SbmParams,
    pub split: [f64; 3],
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(family: Family, count: usize, seed: u64) -> Self {
        DatasetSpec {
            family,
            count,
            nodes: family.default_nodes(),
            nodes_max: None,
            edge_prob: 0.2,
            lobster_p1: 0.7,
            lobster_p2: 0.7,
            sbm: SbmParams::default(),
            split: family.default_split(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Input(m.to_string()));
        if self.count == 0 {
            return bad("dataset count must be at least 1");
        }
        if self.split.iter().any(|&f| !(0.0..=1.0).contains(&f)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("split fractions must be in [0, 1] and sum to 1");
        }
        if let Some(max) = self.nodes_max {
            if max < self.nodes {
                return bad("nodes_max must be at least nodes");
            }
        }
        if self.family != Family::Sbm && self.nodes == 0 {
            return bad("node count must be positive");
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return bad("edge probability must lie in [0, 1]");
        }
        Ok(())
    }

    /// Train/val/test sizes; the test split takes the rounding remainder.
    pub fn split_counts(&self) -> [usize; 3] {
        let train = (self.count as f64 * self.split[0]).round() as usize;
        let val = ((self.count as f64 * self.split[1]).round() as usize).min(self.count - train.min(self.count));
        let train = train.min(self.count);
        [train, val, self.count - train - val]
    }
}

/// One generated graph plus its block assignment for SBM draws.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub graph: Graph,
    pub blocks: Option<Vec<usize>>,
}

/// Generates `spec.count` graphs; graph `i` draws only from stream `i` of
/// the seed, so the output is identical for any thread count.
pub fn generate(spec: &DatasetSpec) -> Result<Vec<Generated>> {
    spec.validate()?;
    (0..spec.count)
        .into_par_iter()
        .map(|i| generate_one(spec, &mut stream_rng(spec.seed, i as u64)))
        .collect()
}

fn generate_one<R: Rng>(spec: &DatasetSpec, rng: &mut R) -> Result<Generated> {
    let size = match spec.nodes_max {
        Some(max) => rng.gen_range(spec.nodes..=max),
        None => spec.nodes,
    };
    let plain = |graph| Ok(Generated { graph, blocks: None });
    match spec.family {
        Family::Planar => plain(families::delaunay(size, rng)?),
        Family::Sbm => {
            let s = families::sbm(&spec.sbm, rng);
            Ok(Generated { graph: s.graph, blocks: Some(s.blocks) })
        }
        Family::Tree => plain(families::random_tree(size, rng)?),
        Family::Cycle => plain(Graph::cycle(size)),
        Family::Grid => {
            let cols = match spec.nodes_max {
                Some(max) => rng.gen_range(spec.nodes..=max),
                None => spec.nodes,
            };
            plain(families::grid(size, cols))
        }
        Family::Lobster => plain(families::lobster(size as f64, spec.lobster_p1, spec.lobster_p2, rng)?),
        Family::Er => plain(families::erdos_renyi(size, spec.edge_prob, rng)),
    }
}
