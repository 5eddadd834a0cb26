//! Re-identification: embeddings, per-instance galleries, the batch-hard
//! triplet loss and a small projection trainer.

mod embedding;
mod gallery;
mod train;
mod triplet;

pub use embedding::{distance, read_embeddings, write_embeddings, Embedding, EMBED_DIM};
pub use gallery::{gallery_match, Gallery, DEFAULT_GALLERY_CAPACITY, DEFAULT_QUORUM, DEFAULT_RHO_REID};
pub use train::{dataset_loss, train_projection, Projection, TrainConfig, TrainOutput};
pub use triplet::{triplet_loss, triplet_loss_grad, MinedTriplet, TripletBatch, DEFAULT_MARGIN};
