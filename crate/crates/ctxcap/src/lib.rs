//! Contextual video captioning.
//!
//! An end-to-end sequence-to-sequence captioner: a stacked LSTM encoder-decoder
//! with temporal attention over video features, combined with a pointer-generator
//! network that copies out-of-vocabulary words from a contextual text. Includes
//! the screenplay/subtitle corpus pipeline, caption evaluation metrics, and an
//! experiment harness with a synthetic copy task.

pub mod corpus;
pub mod decoding;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod tensor;
