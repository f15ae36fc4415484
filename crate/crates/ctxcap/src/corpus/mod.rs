//! Corpus construction: screenplay and subtitle parsing, dialogue-based
//! coarse time alignment, caption/context overlap filtering, tokenization,
//! vocabulary construction and the dataset manifest formats.

mod align;
mod crop;
mod manifest;
mod overlap;
mod script;
mod srt;
mod tokenize;
mod vocab;

pub use align::{align_script_to_time, AlignConfig, AlignmentMap, SceneAlignment};
pub use crop::{crop_context, CropMode};
pub use manifest::{
    assign_splits, read_features, write_features, DatasetManifest, SampleRecord, Split,
};
pub use overlap::{compute_overlap, filter_movies, MovieOverlap, OverlapReport};
pub use script::{parse_script, Dialogue, IntExt, Scene, SceneHeading, ScriptDocument};
pub use srt::{parse_srt, serialize_srt, Cue, SubtitleTrack};
pub use tokenize::{
    is_punctuation, is_special_token, is_stopword, join_tokens, split_sentences, tokenize,
    TokenizeMode, BOS, DATE, EOS, NUM, PAD, SPECIAL_TOKENS, TIME, UNK,
};
pub use vocab::{Vocabulary, BOS_ID, EOS_ID, PAD_ID, UNK_ID};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("not a screenplay: no scene headings found")]
    NotAScreenplay,
    #[error("srt parse error at line {line}: {message}")]
    SrtParse { line: usize, message: String },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("feature file `{path}`: {message}")]
    FeatureFormat { path: String, message: String },
    #[error("manifest record {index}: {message}")]
    ManifestRecord { index: usize, message: String },
    #[error("missing referenced file: {0}")]
    MissingFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;
