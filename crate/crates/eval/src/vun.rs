//! Validity, uniqueness and novelty of generated graphs.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sentgraph_core::{canonical_form, Graph};

use crate::error::Result;
use crate::planarity::is_planar;
use crate::sbm::SbmValidity;

/// Dataset-specific validity test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Validity {
    /// Every graph is valid.
    Any,
    /// Connected and planar.
    Planar,
    /// Connected and acyclic.
    Tree,
    Sbm(SbmValidity),
}

impl Validity {
    pub fn check(&self, g: &Graph) -> bool {
        match self {
            Validity::Any => true,
            Validity::Planar => g.n() > 0 && g.is_connected() && is_planar(g),
            Validity::Tree => g.n() > 0 && g.is_connected() && g.m() + 1 == g.n(),
            Validity::Sbm(p) => p.is_valid(g),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Validity::Any => "any",
            Validity::Planar => "planar",
            Validity::Tree => "tree",
            Validity::Sbm(_) => "sbm",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VunReport {
    pub valid_frac: f64,
    pub unique_frac: f64,
    pub novel_frac: f64,
    pub vun: f64,
}

/// Per-graph flags in generation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VunFlags {
    pub valid: Vec<bool>,
    pub unique: Vec<bool>,
    pub novel: Vec<bool>,
}

pub fn vun_flags(generated: &[Graph], train: &[Graph], validity: &Validity) -> Result<VunFlags> {
    let forms = |gs: &[Graph]| gs.par_iter().map(canonical_form).collect::<Result<Vec<_>, _>>();
    let gen_forms = forms(generated)?;
    let train_forms: HashSet<Vec<u8>> = forms(train)?.into_iter().collect();
    let valid = generated.par_iter().map(|g| validity.check(g)).collect();
    let mut seen = HashSet::new();
    let unique = gen_forms.iter().map(|f| seen.insert(f.clone())).collect();
    let novel = gen_forms.iter().map(|f| !train_forms.contains(f)).collect();
    Ok(VunFlags { valid, unique, novel })
}

pub fn vun(generated: &[Graph], train: &[Graph], validity: &Validity) -> Result<VunReport> {
    let flags = vun_flags(generated, train, validity)?;
    let n = generated.len().max(1) as f64;
    let frac = |xs: &[bool]| xs.iter().filter(|&&x| x).count() as f64 / n;
    let all: Vec<bool> = (0..generated.len()).map(|i| flags.valid[i] && flags.unique[i] && flags.novel[i]).collect();
    Ok(VunReport {
        valid_frac: frac(&flags.valid),
        unique_frac: frac(&flags.unique),
        novel_frac: frac(&flags.novel),
        vun: frac(&all),
    })
}
