//! Pointer-generator branch: context encoding, coverage attention, the
//! vocabulary head, the generation probability and the mixed final
//! distribution over the extended vocabulary, plus the per-step loss.
//!
//! Contexts are encoded at their natural length (never padded), so every
//! softmax position is a real token; padding positions that would need to be
//! masked out of the attention simply do not exist.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::tensor::{NodeId, Result as TensorResult, Scalar, Tape, TapeParams};

use super::lstm::{lstm_step, LstmNodes};
use super::{maybe_dropout, Dropout, ModelError, Result};

/// Probability floor applied before the log in the loss; keeps the loss
/// finite when the target receives zero mass.
pub const PROB_FLOOR: f64 = 1e-12;

pub mod names {
    pub const WORD_EMBED: &str = "embed.word";
    pub const CTX_FW_W: &str = "ptr.ctx.fw.w";
    pub const CTX_FW_B: &str = "ptr.ctx.fw.b";
    pub const CTX_BW_W: &str = "ptr.ctx.bw.w";
    pub const CTX_BW_B: &str = "ptr.ctx.bw.b";
    pub const ATTN_H_W: &str = "ptr.attn.h_w";
    pub const ATTN_S_W: &str = "ptr.attn.s_w";
    pub const ATTN_COV_W: &str = "ptr.attn.cov_w";
    pub const ATTN_B: &str = "ptr.attn.b";
    pub const ATTN_U: &str = "ptr.attn.u";
    pub const VOCAB_W1: &str = "ptr.vocab.w1";
    pub const VOCAB_B1: &str = "ptr.vocab.b1";
    pub const VOCAB_W2: &str = "ptr.vocab.w2";
    pub const VOCAB_B2: &str = "ptr.vocab.b2";
    pub const PGEN_CTX_W: &str = "ptr.pgen.ctx_w";
    pub const PGEN_STATE_W: &str = "ptr.pgen.state_w";
    pub const PGEN_INPUT_W: &str = "ptr.pgen.input_w";
    pub const PGEN_B: &str = "ptr.pgen.b";
}

#[derive(Debug, Clone, Copy)]
pub struct PointerNodes {
    pub ctx_fw_w: NodeId,
    pub ctx_fw_b: NodeId,
    pub ctx_bw_w: NodeId,
    pub ctx_bw_b: NodeId,
    pub attn_h_w: NodeId,
    pub attn_s_w: NodeId,
    pub attn_cov_w: NodeId,
    pub attn_b: NodeId,
    pub attn_u: NodeId,
    pub vocab_w1: NodeId,
    pub vocab_b1: NodeId,
    pub vocab_w2: NodeId,
    pub vocab_b2: NodeId,
    pub pgen_ctx_w: NodeId,
    pub pgen_state_w: NodeId,
    pub pgen_input_w: NodeId,
    pub pgen_b: NodeId,
}

impl PointerNodes {
    pub fn resolve(tp: &TapeParams) -> TensorResult<Self> {
        Ok(PointerNodes {
            ctx_fw_w: tp.node(names::CTX_FW_W)?,
            ctx_fw_b: tp.node(names::CTX_FW_B)?,
            ctx_bw_w: tp.node(names::CTX_BW_W)?,
            ctx_bw_b: tp.node(names::CTX_BW_B)?,
            attn_h_w: tp.node(names::ATTN_H_W)?,
            attn_s_w: tp.node(names::ATTN_S_W)?,
            attn_cov_w: tp.node(names::ATTN_COV_W)?,
            attn_b: tp.node(names::ATTN_B)?,
            attn_u: tp.node(names::ATTN_U)?,
            vocab_w1: tp.node(names::VOCAB_W1)?,
            vocab_b1: tp.node(names::VOCAB_B1)?,
            vocab_w2: tp.node(names::VOCAB_W2)?,
            vocab_b2: tp.node(names::VOCAB_B2)?,
            pgen_ctx_w: tp.node(names::PGEN_CTX_W)?,
            pgen_state_w: tp.node(names::PGEN_STATE_W)?,
            pgen_input_w: tp.node(names::PGEN_INPUT_W)?,
            pgen_b: tp.node(names::PGEN_B)?,
        })
    }
}

/// Per-sample extended vocabulary: the global map plus the sample's context
/// out-of-vocabulary words at indices `|V| .. |V|+K-1`, ordered by first
/// occurrence. Repeated OOV tokens share one extended index.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedVocab {
    base_size: usize,
    oov: Vec<String>,
    oov_index: HashMap<String, usize>,
}

impl ExtendedVocab {
    pub fn build(vocab: &Vocabulary, context: &[String]) -> Self {
        let mut oov = Vec::new();
        let mut oov_index = HashMap::new();
        for tok in context {
            if vocab.id(tok).is_none() && !oov_index.contains_key(tok) {
                oov_index.insert(tok.clone(), vocab.len() + oov.len());
                oov.push(tok.clone());
            }
        }
        ExtendedVocab {
            base_size: vocab.len(),
            oov,
            oov_index,
        }
    }

    /// Extended vocabulary with no sample OOV words (video-only decoding).
    pub fn global_only(vocab: &Vocabulary) -> Self {
        ExtendedVocab {
            base_size: vocab.len(),
            oov: Vec::new(),
            oov_index: HashMap::new(),
        }
    }

    /// Copy of this vocabulary with the OOV extension dropped.
    pub fn without_oov(&self) -> Self {
        ExtendedVocab {
            base_size: self.base_size,
            oov: Vec::new(),
            oov_index: HashMap::new(),
        }
    }

    pub fn total_size(&self) -> usize {
        self.base_size + self.oov.len()
    }

    pub fn oov_count(&self) -> usize {
        self.oov.len()
    }

    pub fn oov_words(&self) -> &[String] {
        &self.oov
    }

    /// Extended index of `token`: its global index when in vocabulary,
    /// otherwise its context-OOV index if the context contains it.
    pub fn extended_id(&self, vocab: &Vocabulary, token: &str) -> Option<usize> {
        vocab.id(token).or_else(|| self.oov_index.get(token).copied())
    }

    /// Extended index for a loss target; tokens absent from both the global
    /// vocabulary and the context map to UNK.
    pub fn target_id(&self, vocab: &Vocabulary, token: &str) -> usize {
        self.extended_id(vocab, token)
            .unwrap_or_else(|| vocab.encode(token))
    }

    /// Extended index of every context position.
    pub fn context_extended_ids(&self, vocab: &Vocabulary, context: &[String]) -> Vec<usize> {
        context
            .iter()
            .map(|t| self.extended_id(vocab, t).expect("context token always maps"))
            .collect()
    }

    /// Surface form of an extended id (global word or copied context word).
    pub fn resolve(&self, vocab: &Vocabulary, id: usize) -> Result<String> {
        if id < self.base_size {
            vocab
                .token(id)
                .map(str::to_string)
                .ok_or(ModelError::BadTokenId {
                    id,
                    size: self.total_size(),
                })
        } else {
            self.oov
                .get(id - self.base_size)
                .cloned()
                .ok_or(ModelError::BadTokenId {
                    id,
                    size: self.total_size(),
                })
        }
    }
}

/// Bidirectional context encoding: per-position hidden states as one
/// `[M, 2*context_hidden]` matrix.
pub fn encode_context<F: Scalar>(
    tape: &mut Tape<F>,
    p: &PointerNodes,
    embedded: &[NodeId],
    context_hidden: usize,
) -> Result<NodeId> {
    if embedded.is_empty() {
        return Err(ModelError::EmptyContext);
    }
    let m = embedded.len();
    let mut fw = LstmNodes::zeros(tape, context_hidden);
    let mut fw_h = Vec::with_capacity(m);
    for &z in embedded {
        fw = lstm_step(tape, z, &fw, p.ctx_fw_w, p.ctx_fw_b)?;
        fw_h.push(fw.hidden);
    }
    let mut bw = LstmNodes::zeros(tape, context_hidden);
    let mut bw_h_rev = Vec::with_capacity(m);
    for &z in embedded.iter().rev() {
        bw = lstm_step(tape, z, &bw, p.ctx_bw_w, p.ctx_bw_b)?;
        bw_h_rev.push(bw.hidden);
    }
    let rows: Vec<NodeId> = (0..m)
        .map(|i| tape.concat_cols(&[fw_h[i], bw_h_rev[m - 1 - i]]))
        .collect::<TensorResult<_>>()?;
    Ok(tape.concat_rows(&rows)?)
}

/// Coverage-aware additive attention over context positions
/// (`xi = softmax(u^T tanh(W_h h_i + W_s s + w_c c_i + b))`).
/// With a zero coverage weight this reduces exactly to the coverage-free
/// score.
pub fn context_attention<F: Scalar>(
    tape: &mut Tape<F>,
    p: &PointerNodes,
    h_ctx: NodeId,
    s_bottom: NodeId,
    coverage: NodeId,
) -> Result<NodeId> {
    let proj_h = tape.matmul(h_ctx, p.attn_h_w)?;
    let proj_s = tape.matmul(s_bottom, p.attn_s_w)?;
    let proj_s = tape.add(proj_s, p.attn_b)?;
    let cov_col = tape.transpose(coverage);
    let cov_term = tape.matmul(cov_col, p.attn_cov_w)?;
    let pre = tape.add_row_broadcast(proj_h, proj_s)?;
    let pre = tape.add(pre, cov_term)?;
    let act = tape.tanh(pre);
    let scores_col = tape.matmul(act, p.attn_u)?;
    let scores = tape.transpose(scores_col);
    Ok(tape.softmax_rows(scores)?)
}

/// Coverage update: elementwise running sum of attention distributions.
pub fn update_coverage<F: Scalar>(
    tape: &mut Tape<F>,
    coverage: NodeId,
    xi: NodeId,
) -> Result<NodeId> {
    Ok(tape.add(coverage, xi)?)
}

/// Attention-weighted context readout `h* = sum_i xi_i h_i`.
pub fn context_vector<F: Scalar>(
    tape: &mut Tape<F>,
    h_ctx: NodeId,
    xi: NodeId,
) -> Result<NodeId> {
    Ok(tape.matmul(xi, h_ctx)?)
}

/// Two linear layers then softmax over the global vocabulary.
pub fn vocab_distribution<F: Scalar>(
    tape: &mut Tape<F>,
    p: &PointerNodes,
    s_bottom: NodeId,
    h_star: NodeId,
) -> Result<NodeId> {
    let joint = tape.concat_cols(&[s_bottom, h_star])?;
    let l1 = tape.matmul(joint, p.vocab_w1)?;
    let l1 = tape.add(l1, p.vocab_b1)?;
    let l2 = tape.matmul(l1, p.vocab_w2)?;
    let l2 = tape.add(l2, p.vocab_b2)?;
    Ok(tape.softmax_rows(l2)?)
}

/// Generation probability `p_gen = sigma(w_h*^T h* + w_s^T s + w_x^T x + b)`.
pub fn generation_prob<F: Scalar>(
    tape: &mut Tape<F>,
    p: &PointerNodes,
    h_star: NodeId,
    s_bottom: NodeId,
    x_t: NodeId,
) -> Result<NodeId> {
    let a = tape.matmul(h_star, p.pgen_ctx_w)?;
    let b = tape.matmul(s_bottom, p.pgen_state_w)?;
    let c = tape.matmul(x_t, p.pgen_input_w)?;
    let ab = tape.add(a, b)?;
    let abc = tape.add(ab, c)?;
    let pre = tape.add(abc, p.pgen_b)?;
    Ok(tape.sigmoid(pre))
}

/// Mixed final distribution over the extended index space:
/// `P(y) = p_gen * P_vocab(y) + (1 - p_gen) * sum_{i: z_i = y} xi_i`.
/// Repeated context tokens accumulate their attention mass on one index.
pub fn final_distribution<F: Scalar>(
    tape: &mut Tape<F>,
    p_vocab: NodeId,
    xi: NodeId,
    p_gen: NodeId,
    total_size: usize,
    ctx_ext_ids: &[usize],
) -> Result<NodeId> {
    let vocab_ext = tape.pad_cols(p_vocab, total_size)?;
    let copy_ext = tape.scatter_add_cols(xi, ctx_ext_ids, total_size)?;
    let gen_term = tape.scale_by(vocab_ext, p_gen)?;
    let one_minus = tape.affine(p_gen, -F::one(), F::one());
    let copy_term = tape.scale_by(copy_ext, one_minus)?;
    Ok(tape.add(gen_term, copy_term)?)
}

/// Per-step loss `-log P(y*) + lambda * sum_i min(xi_i, c_i)` with the
/// probability floored at [`PROB_FLOOR`].
pub fn step_loss<F: Scalar>(
    tape: &mut Tape<F>,
    p_final: NodeId,
    target_id: usize,
    xi: NodeId,
    coverage: NodeId,
    lambda: f64,
) -> Result<NodeId> {
    let (_, cols) = tape.shape(p_final);
    if target_id >= cols {
        return Err(ModelError::BadTokenId {
            id: target_id,
            size: cols,
        });
    }
    let p_target = tape.pick(p_final, 0, target_id)?;
    let p_target = tape.clamp_min(p_target, F::from_f64(PROB_FLOOR));
    let log_p = tape.ln(p_target);
    let nll = tape.affine(log_p, -F::one(), F::zero());
    if lambda == 0.0 {
        return Ok(nll);
    }
    let overlap = tape.min_elem(xi, coverage)?;
    let cov_sum = tape.sum_all(overlap);
    let cov_term = tape.affine(cov_sum, F::from_f64(lambda), F::zero());
    Ok(tape.add(nll, cov_term)?)
}

/// One decode step's pointer quantities, recorded for attention traces
/// (the data behind coverage/generation-probability visualizations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub token_id: usize,
    pub token: String,
    pub p_gen: f64,
    pub attention: Vec<f64>,
    pub coverage: Vec<f64>,
}

/// Context-encoder forward pass helper shared by training and inference:
/// embeds context ids (OOV positions use UNK ids) with optional dropout.
pub fn embed_tokens<F: Scalar>(
    tape: &mut Tape<F>,
    word_embed: NodeId,
    ids: &[usize],
    drop: &mut Option<&mut Dropout<'_>>,
) -> Result<Vec<NodeId>> {
    ids.iter()
        .map(|&id| {
            let row = tape.row(word_embed, id)?;
            Ok(maybe_dropout(tape, row, drop)?)
        })
        .collect()
}
