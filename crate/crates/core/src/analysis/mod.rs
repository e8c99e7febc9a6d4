//! Interpretability tools: mean-jacobian heat maps between layers, word
//! vectors for visualisation, and embedding transfer into new agents.

mod embeddings;
mod heatmap;
mod jacobian;
mod transfer;

pub use embeddings::{embeddings_csv, export_word_embeddings, word_vectors, EMBEDDING_HEADER_PREFIX};
pub use heatmap::{heatmap_mean_abs_diff, to_heatmap, HeatMap};
pub use jacobian::{mean_jacobian, sample_states, Layer, LayerPair};
pub use transfer::{transfer_initialize, EmbeddingSource, TransferMode, TransferPlan, TransferReport};

/// Heat-map states sampled per game.
pub const HEATMAP_STATES: usize = 100;
/// Exploration rate used when sampling heat-map states.
pub const HEATMAP_EPSILON: f64 = 0.05;
