//! The combined sample report: four descriptor MMDs against the test set,
//! their ratio to the train-vs-test MMDs, and VUN.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sentgraph_core::descriptors::descriptors_with;
use sentgraph_core::{DescriptorConfig, Graph, GraphDescriptors};

use crate::error::{EvalError, Result};
use crate::mmd::{mmd, Distance, MmdConfig};
use crate::vun::{vun, Validity};

/// Ratio denominators below this are skipped.
pub const RATIO_FLOOR: f64 = 1e-12;

pub const DESCRIPTOR_NAMES: [&str; 4] = ["degree", "clustering", "orbit", "spectrum"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub mmd: MmdConfig,
    pub descriptors: DescriptorConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub count: usize,
    pub mmd_deg: f64,
    pub mmd_clus: f64,
    pub mmd_orbit: f64,
    pub mmd_spec: f64,
    /// Mean of generated-vs-test over train-vs-test MMD; `None` when every
    /// descriptor was skipped.
    pub ratio: Option<f64>,
    /// Descriptors left out of the ratio because their denominator vanished.
    pub ratio_skipped: Vec<String>,
    pub valid_frac: f64,
    pub unique_frac: f64,
    pub novel_frac: f64,
    pub vun: f64,
}

struct Columns {
    degree: Vec<Vec<f64>>,
    clustering: Vec<Vec<f64>>,
    orbit: Vec<Vec<f64>>,
    spectrum: Vec<Vec<f64>>,
}

fn columns(graphs: &[Graph], cfg: &DescriptorConfig) -> Columns {
    let ds: Vec<GraphDescriptors> = graphs.par_iter().map(|g| descriptors_with(g, cfg)).collect();
    let mut c = Columns { degree: Vec::new(), clustering: Vec::new(), orbit: Vec::new(), spectrum: Vec::new() };
    for d in ds {
        c.degree.push(d.degree);
        c.clustering.push(d.clustering);
        c.orbit.push(d.orbit);
        c.spectrum.push(d.spectrum);
    }
    c
}

/// The four squared MMDs between two graph sets, in [`DESCRIPTOR_NAMES`] order.
pub fn descriptor_mmds(a: &[Graph], b: &[Graph], cfg: &ReportConfig) -> Result<[f64; 4]> {
    let (ca, cb) = (columns(a, &cfg.descriptors), columns(b, &cfg.descriptors));
    mmds(&ca, &cb, &cfg.mmd)
}

fn mmds(a: &Columns, b: &Columns, cfg: &MmdConfig) -> Result<[f64; 4]> {
    Ok([
        mmd(&a.degree, &b.degree, Distance::TotalVariation, cfg)?,
        mmd(&a.clustering, &b.clustering, Distance::TotalVariation, cfg)?,
        mmd(&a.orbit, &b.orbit, Distance::Euclidean, cfg)?,
        mmd(&a.spectrum, &b.spectrum, Distance::TotalVariation, cfg)?,
    ])
}

pub fn full_report(
    generated: &[Graph],
    train: &[Graph],
    test: &[Graph],
    validity: &Validity,
    cfg: &ReportConfig,
) -> Result<SampleReport> {
    if generated.is_empty() || train.is_empty() || test.is_empty() {
        return Err(EvalError::Input("generated, train and test sets must be nonempty".into()));
    }
    let (cg, ctr, cte) =
        (columns(generated, &cfg.descriptors), columns(train, &cfg.descriptors), columns(test, &cfg.descriptors));
    let gen = mmds(&cg, &cte, &cfg.mmd)?;
    let base = mmds(&ctr, &cte, &cfg.mmd)?;
    let mut ratios = Vec::new();
    let mut ratio_skipped = Vec::new();
    for i in 0..4 {
        if base[i] < RATIO_FLOOR {
            ratio_skipped.push(DESCRIPTOR_NAMES[i].to_string());
        } else {
            ratios.push(gen[i] / base[i]);
        }
    }
    let ratio = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    let v = vun(generated, train, validity)?;
    Ok(SampleReport {
        count: generated.len(),
        mmd_deg: gen[0],
        mmd_clus: gen[1],
        mmd_orbit: gen[2],
        mmd_spec: gen[3],
        ratio,
        ratio_skipped,
        valid_frac: v.valid_frac,
        unique_frac: v.unique_frac,
        novel_frac: v.novel_frac,
        vun: v.vun,
    })
}

impl SampleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str =
        "count,mmd_deg,mmd_clus,mmd_orbit,mmd_spec,ratio,valid_frac,unique_frac,novel_frac,vun";

    pub fn csv_row(&self) -> String {
        let ratio = self.ratio.map(|r| format!("{r:.6}")).unwrap_or_default();
        format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{},{:.4},{:.4},{:.4},{:.4}",
            self.count,
            self.mmd_deg,
            self.mmd_clus,
            self.mmd_orbit,
            self.mmd_spec,
            ratio,
            self.valid_frac,
            self.unique_frac,
            self.novel_frac,
            self.vun
        )
    }

    pub fn table_header() -> String {
        format!("{:<10} {:>10} {:>10} {:>10} {:>10} {:>8} {:>7}", "", "Deg.", "Clus.", "Orbit", "Spec.", "Ratio", "VUN")
    }

    /// One fixed-width table row; VUN in percent.
    pub fn table_row(&self, label: &str) -> String {
        let ratio = self.ratio.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into());
        format!(
            "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8} {:>7.1}",
            label,
            self.mmd_deg,
            self.mmd_clus,
            self.mmd_orbit,
            self.mmd_spec,
            ratio,
            100.0 * self.vun
        )
    }
}
