//! Synthesis and analysis of weakly supervised datasets.
//!
//! A weak label is drawn from column `y` of a column-stochastic mixing matrix
//! `T` (rows are weak outcomes, columns clean classes), or computed for a
//! whole bag of instances by an aggregation function.

pub mod aggregation;
pub mod analysis;
pub mod dataset_io;
pub mod error;
pub mod framework;
pub mod label_space;
pub mod mixing;
pub mod rng;
pub mod weakening;

pub use error::{Error, Result};
pub use label_space::{ClassSet, CleanLabel, MultiCleanLabel, WeakLabel, WeakLabelSpace};
pub use mixing::{AnnotatorPool, MixingMatrix, NoiseClass, Setting};
