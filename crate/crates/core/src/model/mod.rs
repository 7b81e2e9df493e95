//! Token tagger: encoder, softmax head, optimizer and checkpoints.

pub mod checkpoint;
pub mod encoder;
pub mod optim;
pub mod tagger;
pub mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use encoder::{BiRnnEncoder, Encoder, Gradient};
pub use optim::Adam;
pub use tagger::{argmax_rows, ForwardPass, Head, ModelConfig, PredictionBatch, TaggerGrad, TaggerParams};
pub use vocab::Vocab;
