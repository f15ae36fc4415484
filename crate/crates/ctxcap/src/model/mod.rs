//! The captioning network: a stacked LSTM encoder-decoder with temporal
//! attention over video features (`s2vt`) and a pointer-generator branch
//! with coverage attention over a contextual text (`pointer`), glued
//! together by [`ContextCaptionModel`].

pub mod config;
pub mod lstm;
pub mod network;
pub mod pointer;
pub mod s2vt;

pub use config::{ModelConfig, PointerConfig, S2VTConfig};
pub use lstm::{lstm_step, LstmNodes, LstmState};
pub use network::{
    ContextCaptionModel, InferenceCache, InferenceState, PreparedSample, StepResult, Variant,
};
pub use pointer::{ExtendedVocab, StepTrace, PROB_FLOOR};

use thiserror::Error;

use crate::tensor::{NodeId, Result as TensorResult, Scalar, Tape, TensorError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("empty video: at least one frame is required")]
    EmptyVideo,
    #[error("video of {got} frames exceeds encoder unroll {max}")]
    TooManyFrames { got: usize, max: usize },
    #[error("empty context: at least one token is required")]
    EmptyContext,
    #[error("context of {got} tokens exceeds max context length {max}")]
    ContextTooLong { got: usize, max: usize },
    #[error("feature dim {got} does not match configured video_feature_dim {want}")]
    FeatureDim { got: usize, want: usize },
    #[error("invalid token id {id} for extended vocabulary of size {size}")]
    BadTokenId { id: usize, size: usize },
    #[error("invalid model config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Dropout context threaded through forward builders during training.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut dyn rand::RngCore,
}

/// Apply dropout when a training context is present, otherwise identity.
pub(crate) fn maybe_dropout<F: Scalar>(
    tape: &mut Tape<F>,
    x: NodeId,
    drop: &mut Option<&mut Dropout<'_>>,
) -> TensorResult<NodeId> {
    match drop {
        Some(d) if d.rate > 0.0 => tape.dropout(x, d.rate, true, &mut d.rng),
        _ => Ok(x),
    }
}
