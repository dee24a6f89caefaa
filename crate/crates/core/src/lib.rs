pub mod audit;
pub mod blackbox;
pub mod bundled;
pub mod error;
pub mod ingest;
pub mod lasso;
pub mod lime;
pub mod linalg;
pub mod rng;
pub mod synthdata;

pub use blackbox::{BlackBoxModel, Predictor};
pub use error::{Error, Result};
pub use linalg::{Matrix, SparseVector};
