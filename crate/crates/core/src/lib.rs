//! Self-supervised pansharpening pretraining on synthetic multispectral data.

pub mod augmentation;
pub mod config;
pub mod degradation;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod scenes;
pub mod synthesis;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::ImageTensor;
