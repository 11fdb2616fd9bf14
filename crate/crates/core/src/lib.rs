//! Low-complexity multi-class attack detection for edge gateways.
//!
//! Pipeline: min-max encode tabular flow records, reduce them with PCA, and
//! classify with a one-hidden-layer ReLU/softmax network. The network is
//! trained either centrally (Adam over all data) or in a simulated federated
//! setting (per-gateway SGD plus sample-weighted averaging).

pub mod complexity;
pub mod dataset;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod mlp;
pub mod pca;
pub mod seed;
pub mod training;

pub use complexity::{CostEstimate, MacCounter, MacSnapshot, Phase};
pub use dataset::{ClientShard, Dataset, EncodingParams, FeatureSchema};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::{ClassReport, ConfusionMatrix, RocResult};
pub use mlp::{AdamConfig, AdamState, Gradients, MlpModel};
pub use pca::PcaModel;
pub use training::{FederatedConfig, Optimizer, TrainConfig, TrainHistory};
