//! Next-token models over graph token sequences, their training loop,
//! grammar-aware sampling and checkpoints.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod lm;
pub mod ngram;
pub mod sample;
pub mod train;
pub mod transformer;

pub use checkpoint::{AnyModel, Checkpoint};
pub use error::{ModelError, Result};
pub use gradcheck::{grad_check, GradCheckReport};
pub use lm::{mean_nll, softmax, DecodeSession, LanguageModel, UniformModel};
pub use ngram::NGramModel;
pub use sample::{sample_many, sample_tokens, top_k_dist, SampleConfig, Sampled};
pub use train::{loss_csv, train_ngram, train_transformer, transformer_nll, LossPoint, TrainConfig};
pub use transformer::{Dropout, Real, TinyTransformer, TransformerConfig};
