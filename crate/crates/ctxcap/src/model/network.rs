//! Full-network assembly: parameter initialization, the teacher-forced
//! training loss over one sample, and the incremental inference interface
//! consumed by the decoders.
//!
//! The word embedding table is shared between decoder inputs and context
//! words; context tokens outside the global vocabulary are embedded as UNK
//! while keeping their extended ids for copying. Ablation variants:
//! video-only drops the pointer branch (`p_gen` fixed at 1, `h*` zeroed,
//! context ignored), context-only zeroes the frame features and keeps the
//! rest intact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{SampleRecord, Vocabulary, BOS_ID, UNK_ID};
use crate::tensor::{NodeId, ParamStore, Scalar, Tape, TapeParams, Tensor};

use super::config::ModelConfig;
use super::lstm::{LstmNodes, LstmState};
use super::pointer::{self, ExtendedVocab, PointerNodes};
use super::s2vt::{self, EncoderNodes, S2vtNodes};
use super::{maybe_dropout, Dropout, ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    VideoOnly,
    ContextOnly,
}

/// A sample resolved against a vocabulary, ready for the forward pass.
#[derive(Debug, Clone)]
pub struct PreparedSample<F: Scalar> {
    pub clip_id: String,
    pub features: Vec<Vec<F>>,
    pub ext: ExtendedVocab,
    /// Global ids used to embed context tokens (UNK for OOV positions).
    pub ctx_embed_ids: Vec<usize>,
    /// Extended index of every context position (copy targets).
    pub ctx_ext_ids: Vec<usize>,
    /// Teacher-forcing decoder inputs: BOS then the reference tokens
    /// (embedded via global ids, OOV as UNK).
    pub input_embed_ids: Vec<usize>,
    /// Loss targets in the extended space: reference tokens then EOS.
    pub target_ext_ids: Vec<usize>,
    pub names: Vec<String>,
}

/// Values cached once per sample for incremental decoding.
#[derive(Debug, Clone)]
pub struct InferenceCache<F: Scalar> {
    pub variant: Variant,
    pub ext: ExtendedVocab,
    pub ctx_ext_ids: Vec<usize>,
    keys: Tensor<F>,
    h_ctx: Option<Tensor<F>>,
}

/// Decoder state carried between inference steps (one per beam hypothesis).
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceState<F: Scalar> {
    pub top_fw: LstmState<F>,
    pub bottom: LstmState<F>,
    pub coverage: Vec<F>,
}

/// Output of one inference step.
#[derive(Debug, Clone)]
pub struct StepResult<F: Scalar> {
    /// Final distribution over the extended vocabulary.
    pub probs: Vec<F>,
    pub xi: Vec<F>,
    pub coverage_after: Vec<F>,
    pub p_gen: f64,
    pub state: InferenceState<F>,
}

#[derive(Debug, Clone)]
pub struct ContextCaptionModel {
    pub cfg: ModelConfig,
}

impl ContextCaptionModel {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(ContextCaptionModel { cfg })
    }

    /// Fresh parameters: uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for
    /// matrices, zeros for biases, in a fixed name order.
    pub fn init_params<F: Scalar>(&self, seed: u64) -> ParamStore<F> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new(seed);
        let s = &self.cfg.s2vt;
        let p = &self.cfg.pointer;
        let half = s.hidden_dim / 2;
        let two_ch = 2 * p.context_hidden_dim;
        let v = self.cfg.vocab_size;

        store.init_uniform(pointer::names::WORD_EMBED, v, s.word_embed_dim, &mut rng);

        store.init_uniform(s2vt::names::VIDEO_EMBED_W, s.video_feature_dim, s.video_embed_dim, &mut rng);
        store.init_zeros(s2vt::names::VIDEO_EMBED_B, 1, s.video_embed_dim);
        store.init_uniform(s2vt::names::TOP_FW_W, s.video_embed_dim + half, 4 * half, &mut rng);
        store.init_zeros(s2vt::names::TOP_FW_B, 1, 4 * half);
        store.init_uniform(s2vt::names::TOP_BW_W, s.video_embed_dim + half, 4 * half, &mut rng);
        store.init_zeros(s2vt::names::TOP_BW_B, 1, 4 * half);
        let bottom_in = s.word_embed_dim + 2 * s.hidden_dim;
        store.init_uniform(s2vt::names::BOTTOM_W, bottom_in + s.hidden_dim, 4 * s.hidden_dim, &mut rng);
        store.init_zeros(s2vt::names::BOTTOM_B, 1, 4 * s.hidden_dim);
        store.init_uniform(s2vt::names::ATTN_KEY_W, s.hidden_dim, s.attn_dim, &mut rng);
        store.init_uniform(s2vt::names::ATTN_QUERY_W, s.hidden_dim, s.attn_dim, &mut rng);
        store.init_zeros(s2vt::names::ATTN_B, 1, s.attn_dim);
        store.init_uniform(s2vt::names::ATTN_V, s.attn_dim, 1, &mut rng);

        store.init_uniform(pointer::names::CTX_FW_W, s.word_embed_dim + p.context_hidden_dim, 4 * p.context_hidden_dim, &mut rng);
        store.init_zeros(pointer::names::CTX_FW_B, 1, 4 * p.context_hidden_dim);
        store.init_uniform(pointer::names::CTX_BW_W, s.word_embed_dim + p.context_hidden_dim, 4 * p.context_hidden_dim, &mut rng);
        store.init_zeros(pointer::names::CTX_BW_B, 1, 4 * p.context_hidden_dim);
        store.init_uniform(pointer::names::ATTN_H_W, two_ch, p.ctx_attn_dim, &mut rng);
        store.init_uniform(pointer::names::ATTN_S_W, s.hidden_dim, p.ctx_attn_dim, &mut rng);
        store.init_uniform(pointer::names::ATTN_COV_W, 1, p.ctx_attn_dim, &mut rng);
        store.init_zeros(pointer::names::ATTN_B, 1, p.ctx_attn_dim);
        store.init_uniform(pointer::names::ATTN_U, p.ctx_attn_dim, 1, &mut rng);
        store.init_uniform(pointer::names::VOCAB_W1, s.hidden_dim + two_ch, p.vocab_mlp_dim, &mut rng);
        store.init_zeros(pointer::names::VOCAB_B1, 1, p.vocab_mlp_dim);
        store.init_uniform(pointer::names::VOCAB_W2, p.vocab_mlp_dim, v, &mut rng);
        store.init_zeros(pointer::names::VOCAB_B2, 1, v);
        store.init_uniform(pointer::names::PGEN_CTX_W, two_ch, 1, &mut rng);
        store.init_uniform(pointer::names::PGEN_STATE_W, s.hidden_dim, 1, &mut rng);
        store.init_uniform(pointer::names::PGEN_INPUT_W, s.word_embed_dim, 1, &mut rng);
        store.init_zeros(pointer::names::PGEN_B, 1, 1);
        store
    }

    /// Resolve a manifest record against the vocabulary and feature matrix.
    pub fn prepare_sample<F: Scalar>(
        &self,
        record: &SampleRecord,
        vocab: &Vocabulary,
        features: &[Vec<f32>],
    ) -> Result<PreparedSample<F>> {
        if features.is_empty() {
            return Err(ModelError::EmptyVideo);
        }
        if let Some(bad) = features.iter().find(|f| f.len() != self.cfg.s2vt.video_feature_dim) {
            return Err(ModelError::FeatureDim {
                got: bad.len(),
                want: self.cfg.s2vt.video_feature_dim,
            });
        }
        if record.context_tokens.is_empty() {
            return Err(ModelError::EmptyContext);
        }
        if record.context_tokens.len() > self.cfg.pointer.max_context_len {
            return Err(ModelError::ContextTooLong {
                got: record.context_tokens.len(),
                max: self.cfg.pointer.max_context_len,
            });
        }
        let features: Vec<Vec<F>> = features
            .iter()
            .take(self.cfg.s2vt.t_enc)
            .map(|row| row.iter().map(|&v| F::from_f64(v as f64)).collect())
            .collect();

        let ext = ExtendedVocab::build(vocab, &record.context_tokens);
        let ctx_embed_ids: Vec<usize> = record
            .context_tokens
            .iter()
            .map(|t| vocab.encode(t))
            .collect();
        let ctx_ext_ids = ext.context_extended_ids(vocab, &record.context_tokens);

        // Teacher forcing: inputs are BOS + reference, targets reference + EOS,
        // both clamped to the decoder unroll.
        let t_dec = self.cfg.s2vt.t_dec;
        let caption = &record.caption_tokens;
        let steps = (caption.len() + 1).min(t_dec);
        let mut input_embed_ids = Vec::with_capacity(steps);
        let mut target_ext_ids = Vec::with_capacity(steps);
        input_embed_ids.push(BOS_ID);
        for tok in caption.iter().take(steps.saturating_sub(1)) {
            input_embed_ids.push(vocab.encode(tok));
        }
        for tok in caption.iter().take(steps) {
            target_ext_ids.push(ext.target_id(vocab, tok));
        }
        if target_ext_ids.len() < steps {
            target_ext_ids.push(crate::corpus::EOS_ID);
        }

        Ok(PreparedSample {
            clip_id: record.clip_id.clone(),
            features,
            ext,
            ctx_embed_ids,
            ctx_ext_ids,
            input_embed_ids,
            target_ext_ids,
            names: record.names.clone(),
        })
    }

    fn frame_leaves<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        sample: &PreparedSample<F>,
        variant: Variant,
    ) -> Result<Vec<NodeId>> {
        sample
            .features
            .iter()
            .map(|row| {
                let data = if variant == Variant::ContextOnly {
                    vec![F::zero(); row.len()]
                } else {
                    row.clone()
                };
                Ok(tape.leaf(data, 1, row.len())?)
            })
            .collect()
    }

    /// Mean per-step loss of one teacher-forced sample.
    pub fn train_loss<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        tp: &TapeParams,
        sample: &PreparedSample<F>,
        variant: Variant,
        lambda: f64,
        drop: &mut Option<&mut Dropout<'_>>,
    ) -> Result<NodeId> {
        let sp = S2vtNodes::resolve(tp)?;
        let pp = PointerNodes::resolve(tp)?;
        let word_embed = tp.node(pointer::names::WORD_EMBED)?;
        let cfg = &self.cfg.s2vt;

        let raw_frames = self.frame_leaves(tape, sample, variant)?;
        let dropped: Vec<NodeId> = raw_frames
            .into_iter()
            .map(|f| maybe_dropout(tape, f, drop))
            .collect::<crate::tensor::Result<_>>()?;
        let embedded = s2vt::embed_frames(tape, &sp, &dropped)?;
        let mut enc = s2vt::encode(tape, &sp, cfg, &embedded, drop)?;

        let two_ch = 2 * self.cfg.pointer.context_hidden_dim;
        let (h_ctx, total_size) = if variant == Variant::VideoOnly {
            (None, self.cfg.vocab_size)
        } else {
            let z = pointer::embed_tokens(tape, word_embed, &sample.ctx_embed_ids, drop)?;
            let h = pointer::encode_context(tape, &pp, &z, self.cfg.pointer.context_hidden_dim)?;
            let h = maybe_dropout(tape, h, drop)?;
            (Some(h), sample.ext.total_size())
        };

        let m = sample.ctx_ext_ids.len();
        let mut coverage = tape.zeros(1, m);
        let steps = sample.target_ext_ids.len();
        let mut losses = Vec::with_capacity(steps);

        for t in 0..steps {
            let x_raw = tape.row(word_embed, sample.input_embed_ids[t])?;
            let x_t = maybe_dropout(tape, x_raw, drop)?;
            let out = s2vt::decode_step(tape, &sp, cfg, &mut enc, x_t, drop)?;
            let s_bottom = maybe_dropout(tape, out.bottom_hidden, drop)?;

            let target = sample.target_ext_ids[t];
            let loss_t = match h_ctx {
                None => {
                    // Pointer branch removed: p_gen = 1 and h* = 0; targets
                    // outside the global space were prepared as UNK.
                    let h_star = tape.zeros(1, two_ch);
                    let p_vocab = pointer::vocab_distribution(tape, &pp, s_bottom, h_star)?;
                    let target = if target >= self.cfg.vocab_size { UNK_ID } else { target };
                    let p_t = tape.pick(p_vocab, 0, target)?;
                    let p_t = tape.clamp_min(p_t, F::from_f64(pointer::PROB_FLOOR));
                    let lg = tape.ln(p_t);
                    tape.affine(lg, -F::one(), F::zero())
                }
                Some(h) => {
                    let xi = pointer::context_attention(tape, &pp, h, s_bottom, coverage)?;
                    let h_star = pointer::context_vector(tape, h, xi)?;
                    let p_vocab = pointer::vocab_distribution(tape, &pp, s_bottom, h_star)?;
                    let p_gen = pointer::generation_prob(tape, &pp, h_star, s_bottom, x_t)?;
                    let p_final = pointer::final_distribution(
                        tape,
                        p_vocab,
                        xi,
                        p_gen,
                        total_size,
                        &sample.ctx_ext_ids,
                    )?;
                    let loss =
                        pointer::step_loss(tape, p_final, target, xi, coverage, lambda)?;
                    coverage = pointer::update_coverage(tape, coverage, xi)?;
                    loss
                }
            };
            losses.push(loss_t);
        }

        let mut acc = losses[0];
        for &l in &losses[1..] {
            acc = tape.add(acc, l)?;
        }
        Ok(tape.affine(acc, F::from_f64(1.0 / steps as f64), F::zero()))
    }

    /// Run the encoders once and capture everything decoding needs.
    pub fn begin_inference<F: Scalar>(
        &self,
        store: &ParamStore<F>,
        sample: &PreparedSample<F>,
        variant: Variant,
    ) -> Result<(InferenceCache<F>, InferenceState<F>)> {
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, store);
        let sp = S2vtNodes::resolve(&tp)?;
        let pp = PointerNodes::resolve(&tp)?;
        let word_embed = tp.node(pointer::names::WORD_EMBED)?;
        let cfg = &self.cfg.s2vt;

        let frames = self.frame_leaves(&mut tape, sample, variant)?;
        let embedded = s2vt::embed_frames(&mut tape, &sp, &frames)?;
        let enc = s2vt::encode(&mut tape, &sp, cfg, &embedded, &mut None)?;

        let (h_ctx, ext, ctx_ext_ids) = if variant == Variant::VideoOnly {
            (None, sample.ext.without_oov(), Vec::new())
        } else {
            let z = pointer::embed_tokens(&mut tape, word_embed, &sample.ctx_embed_ids, &mut None)?;
            let h = pointer::encode_context(&mut tape, &pp, &z, self.cfg.pointer.context_hidden_dim)?;
            let (rows, cols) = tape.shape(h);
            let t = Tensor::from_values(rows, cols, tape.value(h).to_vec())?;
            (Some(t), sample.ext.clone(), sample.ctx_ext_ids.clone())
        };

        let (krows, kcols) = tape.shape(enc.keys);
        let keys = Tensor::from_values(krows, kcols, tape.value(enc.keys).to_vec())?;
        let state = InferenceState {
            top_fw: enc.top_fw.to_state(&tape),
            bottom: enc.bottom.to_state(&tape),
            coverage: vec![F::zero(); ctx_ext_ids.len()],
        };
        Ok((
            InferenceCache {
                variant,
                ext,
                ctx_ext_ids,
                keys,
                h_ctx,
            },
            state,
        ))
    }

    /// One decode step from `state`, feeding `prev_ext_id` (BOS to start).
    /// Deterministic: no dropout is applied at inference.
    pub fn inference_step<F: Scalar>(
        &self,
        store: &ParamStore<F>,
        cache: &InferenceCache<F>,
        state: &InferenceState<F>,
        prev_ext_id: usize,
    ) -> Result<StepResult<F>> {
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, store);
        let sp = S2vtNodes::resolve(&tp)?;
        let pp = PointerNodes::resolve(&tp)?;
        let word_embed = tp.node(pointer::names::WORD_EMBED)?;
        let cfg = &self.cfg.s2vt;

        let embed_id = if prev_ext_id >= self.cfg.vocab_size {
            if prev_ext_id >= cache.ext.total_size() {
                return Err(ModelError::BadTokenId {
                    id: prev_ext_id,
                    size: cache.ext.total_size(),
                });
            }
            UNK_ID
        } else {
            prev_ext_id
        };
        let x_t = tape.row(word_embed, embed_id)?;

        let keys = tape.leaf_tensor(&cache.keys);
        let mut enc = EncoderNodes {
            keys,
            top_states: Vec::new(),
            top_fw: LstmNodes::from_state(&mut tape, &state.top_fw)?,
            bottom: LstmNodes::from_state(&mut tape, &state.bottom)?,
        };
        let out = s2vt::decode_step(&mut tape, &sp, cfg, &mut enc, x_t, &mut None)?;

        let two_ch = 2 * self.cfg.pointer.context_hidden_dim;
        let (probs, xi_vals, cov_after, p_gen) = match &cache.h_ctx {
            None => {
                let h_star = tape.zeros(1, two_ch);
                let p_vocab =
                    pointer::vocab_distribution(&mut tape, &pp, out.bottom_hidden, h_star)?;
                (
                    tape.value(p_vocab).to_vec(),
                    Vec::new(),
                    Vec::new(),
                    1.0,
                )
            }
            Some(h_ctx) => {
                let h = tape.leaf_tensor(h_ctx);
                let m = state.coverage.len();
                let coverage = tape.leaf(state.coverage.clone(), 1, m)?;
                let xi = pointer::context_attention(&mut tape, &pp, h, out.bottom_hidden, coverage)?;
                let h_star = pointer::context_vector(&mut tape, h, xi)?;
                let p_vocab =
                    pointer::vocab_distribution(&mut tape, &pp, out.bottom_hidden, h_star)?;
                let p_gen =
                    pointer::generation_prob(&mut tape, &pp, h_star, out.bottom_hidden, x_t)?;
                let p_final = pointer::final_distribution(
                    &mut tape,
                    p_vocab,
                    xi,
                    p_gen,
                    cache.ext.total_size(),
                    &cache.ctx_ext_ids,
                )?;
                let cov_after = pointer::update_coverage(&mut tape, coverage, xi)?;
                (
                    tape.value(p_final).to_vec(),
                    tape.value(xi).to_vec(),
                    tape.value(cov_after).to_vec(),
                    tape.scalar_value(p_gen).to_f64_lossy(),
                )
            }
        };

        Ok(StepResult {
            probs,
            xi: xi_vals,
            coverage_after: cov_after.clone(),
            p_gen,
            state: InferenceState {
                top_fw: enc.top_fw.to_state(&tape),
                bottom: enc.bottom.to_state(&tape),
                coverage: cov_after,
            },
        })
    }
}
