//! Synthetic graph datasets and the token corpora built from them.

pub mod corpus;
pub mod dataset;
pub mod families;
pub mod spec;

pub use corpus::{build_corpus, epoch_seed, Corpus, Lineage};
pub use dataset::{Manifest, Split, SplitGraphs};
pub use families::{SbmGraph, SbmParams};
pub use spec::{generate, DatasetSpec, Family, Generated};
