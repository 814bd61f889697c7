//! Contrastive similarity losses over per-frame identity embeddings, an
//! online multi-object tracker (Kalman prediction with two-stage
//! embedding/IoU association), a deterministic synthetic scenario generator,
//! MOT-format I/O and CLEAR/identity metrics.

pub mod assignment;
pub mod bbox;
pub mod config;
pub mod embedding;
pub mod error;
pub mod kalman;
pub mod losses;
pub mod metrics;
pub mod mot_io;
pub mod optimizer;
pub mod synth;
pub mod tracker;
pub mod workflows;

pub use error::{Error, Result};
