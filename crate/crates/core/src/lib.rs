//! Core data model and codec for turning graphs into token sequences and back.
//!
//! A graph is flattened into a *segmented Eulerian neighborhood trail* (SENT):
//! a list of trails whose tuples carry the already-visited neighbors of each
//! node. Reindexing by first occurrence and adding a handful of special tokens
//! gives a sequence that a language model can learn, and [`grammar`] decides
//! which tokens may legally follow any prefix.

pub mod canon;
pub mod codec;
pub mod descriptors;
pub mod error;
pub mod grammar;
pub mod graph;
pub mod io;
pub mod rng;
pub mod sent;
pub mod set;
pub mod vocab;

pub use canon::{are_isomorphic, canonical_form, canonical_form_with_cap};
pub use codec::{
    decode_graph, detokenize, detokenize_lenient, detokenize_set, encode_graph, tokenize, tokenize_set,
    Decoded, LabelMaps,
};
pub use descriptors::{descriptors, eigen_spectrum, DescriptorConfig, GraphDescriptors};
pub use error::{Error, ErrorKind, Result};
pub use grammar::{replay, DecoderState, Mode, SetDecoderState, TokenGrammar, Violation};
pub use graph::Graph;
pub use io::{read_graphs, write_graphs, GraphRecord};
pub use rng::{stream_rng, Draw};
pub use sent::{
    prefix_graph, reconstruct, reindex, reindex_with_map, sample_sent, validate_sent, NbTuple,
    Relabeling, Sent, SentReport,
};
pub use set::{sample_set, SegmentedTrail};
pub use vocab::{Encoding, TokenSeq, Vocab};
