//! Gaussian embeddings for nodes of attributed graphs.
//!
//! Each node's attribute vector is encoded into a diagonal Gaussian
//! `N(mu, sigma)`. Encoders are trained with negative-sampled first- or
//! second-order proximity objectives over KL dissimilarities, and the
//! resulting embeddings are evaluated on link prediction, node
//! classification and inductive link prediction for unseen nodes.

pub mod checkpoint;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod exec;
pub mod gauss;
pub mod graph;
pub mod sampler;
pub mod seed;
pub mod trainer;

pub use encoder::{EncoderParams, HiddenActivation, Kind, Mode, ModelParams};
pub use error::{Error, Result};
pub use exec::Executor;
pub use gauss::GaussianEmbedding;
pub use graph::{AttributedGraph, Edge, EdgeSplit, InductiveSplit, NodeId, Pair};
pub use trainer::{train, TrainConfig, TrainReport};
