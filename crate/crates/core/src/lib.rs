pub mod checkpoint;
pub mod cli;
pub mod chem;
pub mod data;
pub mod error;
pub mod featurize;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod synth;
pub mod tensor;
pub mod train;
