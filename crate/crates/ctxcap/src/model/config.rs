use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

/// Encoder-decoder dimensions and unroll lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2VTConfig {
    /// Video encoding timesteps.
    pub t_enc: usize,
    /// Caption decoding timesteps.
    pub t_dec: usize,
    pub video_feature_dim: usize,
    pub video_embed_dim: usize,
    pub word_embed_dim: usize,
    /// Stack hidden size; the bidirectional top layer uses two halves.
    pub hidden_dim: usize,
    /// Additive-attention projection size for the temporal attention.
    pub attn_dim: usize,
}

impl Default for S2VTConfig {
    fn default() -> Self {
        S2VTConfig {
            t_enc: 10,
            t_dec: 30,
            video_feature_dim: 2048,
            video_embed_dim: 500,
            word_embed_dim: 300,
            hidden_dim: 512,
            attn_dim: 512,
        }
    }
}

impl S2VTConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.t_enc,
            self.t_dec,
            self.video_feature_dim,
            self.video_embed_dim,
            self.word_embed_dim,
            self.hidden_dim,
            self.attn_dim,
        ];
        if all.iter().any(|&v| v == 0) {
            return Err(ModelError::Config("all dimensions must be positive".into()));
        }
        if self.hidden_dim % 2 != 0 {
            return Err(ModelError::Config(format!(
                "hidden_dim {} must be even (bidirectional halves concatenate)",
                self.hidden_dim
            )));
        }
        Ok(())
    }
}

/// Pointer-generator dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerConfig {
    /// Context encoder hidden size per direction; positions carry twice this.
    pub context_hidden_dim: usize,
    /// Additive-attention projection size for the context attention.
    pub ctx_attn_dim: usize,
    /// Inner width of the two-layer vocabulary head.
    pub vocab_mlp_dim: usize,
    pub max_context_len: usize,
}

impl Default for PointerConfig {
    fn default() -> Self {
        PointerConfig {
            context_hidden_dim: 256,
            ctx_attn_dim: 256,
            vocab_mlp_dim: 512,
            max_context_len: 400,
        }
    }
}

impl PointerConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.context_hidden_dim,
            self.ctx_attn_dim,
            self.vocab_mlp_dim,
            self.max_context_len,
        ];
        if all.iter().any(|&v| v == 0) {
            return Err(ModelError::Config(
                "all pointer dimensions must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub s2vt: S2VTConfig,
    pub pointer: PointerConfig,
    pub vocab_size: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.s2vt.validate()?;
        self.pointer.validate()?;
        if self.vocab_size == 0 {
            return Err(ModelError::Config("vocab_size must be positive".into()));
        }
        Ok(())
    }
}
