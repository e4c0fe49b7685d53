//! Fruit image classification: preprocessing, record shards, a small
//! convolutional network trained with Adam, and evaluation.

pub mod augmentation;
pub mod error;
pub mod evaluation;
pub mod imaging;
pub mod network;
pub mod records;
pub mod rng;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
