//! The stacked encoder-decoder.
//!
//! One unrolled timeline covers both stages with shared parameters. During
//! encoding the bidirectional top layer consumes embedded frames while the
//! bottom layer runs concurrently on `[zero word, s_t_top, zero s*]`; no loss
//! is produced. During decoding the top layer continues forward-direction on
//! zero inputs with the backward half zero-filled (the backward pass never
//! crosses into decoding), and the bottom layer consumes
//! `[x_t, s_t_top, s*_t]` where `s*_t` is the temporal-attention readout over
//! the encoder-stage top states.
//!
//! The attention keys cover all `t_enc` positions including zero-padded
//! frames; no frame mask is applied, mirroring the fixed-length unroll.

use crate::tensor::{NodeId, Result as TensorResult, Scalar, Tape, TapeParams};

use super::config::S2VTConfig;
use super::lstm::{lstm_step, LstmNodes};
use super::{maybe_dropout, Dropout, ModelError, Result};

pub mod names {
    pub const VIDEO_EMBED_W: &str = "s2vt.embed.video.w";
    pub const VIDEO_EMBED_B: &str = "s2vt.embed.video.b";
    pub const TOP_FW_W: &str = "s2vt.top.fw.w";
    pub const TOP_FW_B: &str = "s2vt.top.fw.b";
    pub const TOP_BW_W: &str = "s2vt.top.bw.w";
    pub const TOP_BW_B: &str = "s2vt.top.bw.b";
    pub const BOTTOM_W: &str = "s2vt.bottom.w";
    pub const BOTTOM_B: &str = "s2vt.bottom.b";
    pub const ATTN_KEY_W: &str = "s2vt.attn.key_w";
    pub const ATTN_QUERY_W: &str = "s2vt.attn.query_w";
    pub const ATTN_B: &str = "s2vt.attn.b";
    pub const ATTN_V: &str = "s2vt.attn.v";
}

/// Tape nodes of the encoder-decoder parameters.
#[derive(Debug, Clone, Copy)]
pub struct S2vtNodes {
    pub video_w: NodeId,
    pub video_b: NodeId,
    pub top_fw_w: NodeId,
    pub top_fw_b: NodeId,
    pub top_bw_w: NodeId,
    pub top_bw_b: NodeId,
    pub bottom_w: NodeId,
    pub bottom_b: NodeId,
    pub attn_key_w: NodeId,
    pub attn_query_w: NodeId,
    pub attn_b: NodeId,
    pub attn_v: NodeId,
}

impl S2vtNodes {
    pub fn resolve(tp: &TapeParams) -> TensorResult<Self> {
        Ok(S2vtNodes {
            video_w: tp.node(names::VIDEO_EMBED_W)?,
            video_b: tp.node(names::VIDEO_EMBED_B)?,
            top_fw_w: tp.node(names::TOP_FW_W)?,
            top_fw_b: tp.node(names::TOP_FW_B)?,
            top_bw_w: tp.node(names::TOP_BW_W)?,
            top_bw_b: tp.node(names::TOP_BW_B)?,
            bottom_w: tp.node(names::BOTTOM_W)?,
            bottom_b: tp.node(names::BOTTOM_B)?,
            attn_key_w: tp.node(names::ATTN_KEY_W)?,
            attn_query_w: tp.node(names::ATTN_QUERY_W)?,
            attn_b: tp.node(names::ATTN_B)?,
            attn_v: tp.node(names::ATTN_V)?,
        })
    }
}

/// Per-frame affine embedding with weights shared across time.
pub fn embed_frames<F: Scalar>(
    tape: &mut Tape<F>,
    p: &S2vtNodes,
    frames: &[NodeId],
) -> Result<Vec<NodeId>> {
    frames
        .iter()
        .map(|&f| {
            let proj = tape.matmul(f, p.video_w)?;
            Ok(tape.add(proj, p.video_b)?)
        })
        .collect()
}

/// Encoder outputs plus the running states that continue into decoding.
/// Obtainable only through [`encode`] (or rebuilt from cached values by the
/// inference path), so a decode step cannot precede encoding.
#[derive(Debug)]
pub struct EncoderNodes {
    /// `[t_enc, hidden]` attention keys: the encoder-stage top states.
    pub keys: NodeId,
    /// Per-position top states (forward and backward halves concatenated).
    pub top_states: Vec<NodeId>,
    pub(crate) top_fw: LstmNodes,
    pub(crate) bottom: LstmNodes,
}

/// Run the encoding stage over embedded frames (right-padded with zero
/// frames to `t_enc`).
pub fn encode<F: Scalar>(
    tape: &mut Tape<F>,
    p: &S2vtNodes,
    cfg: &S2VTConfig,
    embedded: &[NodeId],
    drop: &mut Option<&mut Dropout<'_>>,
) -> Result<EncoderNodes> {
    if embedded.is_empty() {
        return Err(ModelError::EmptyVideo);
    }
    if embedded.len() > cfg.t_enc {
        return Err(ModelError::TooManyFrames {
            got: embedded.len(),
            max: cfg.t_enc,
        });
    }
    let half = cfg.hidden_dim / 2;
    let mut frames: Vec<NodeId> = embedded.to_vec();
    while frames.len() < cfg.t_enc {
        frames.push(tape.zeros(1, cfg.video_embed_dim));
    }

    let mut fw = LstmNodes::zeros(tape, half);
    let mut fw_states = Vec::with_capacity(cfg.t_enc);
    for &v in &frames {
        fw = lstm_step(tape, v, &fw, p.top_fw_w, p.top_fw_b)?;
        fw_states.push(fw);
    }
    let mut bw = LstmNodes::zeros(tape, half);
    let mut bw_states_rev = Vec::with_capacity(cfg.t_enc);
    for &v in frames.iter().rev() {
        bw = lstm_step(tape, v, &bw, p.top_bw_w, p.top_bw_b)?;
        bw_states_rev.push(bw);
    }

    let mut top_states = Vec::with_capacity(cfg.t_enc);
    let zero_word = tape.zeros(1, cfg.word_embed_dim);
    let zero_star = tape.zeros(1, cfg.hidden_dim);
    let mut bottom = LstmNodes::zeros(tape, cfg.hidden_dim);
    for t in 0..cfg.t_enc {
        let s_top = tape.concat_cols(&[
            fw_states[t].hidden,
            bw_states_rev[cfg.t_enc - 1 - t].hidden,
        ])?;
        let s_top = maybe_dropout(tape, s_top, drop)?;
        top_states.push(s_top);
        let bottom_in = tape.concat_cols(&[zero_word, s_top, zero_star])?;
        bottom = lstm_step(tape, bottom_in, &bottom, p.bottom_w, p.bottom_b)?;
    }
    let keys = tape.concat_rows(&top_states)?;

    Ok(EncoderNodes {
        keys,
        top_states,
        top_fw: fw,
        bottom,
    })
}

/// Additive-alignment temporal attention over the encoder top states.
/// Returns the frame context vector `s*` and the weights `eta` (`[1, t_enc]`).
pub fn temporal_attention<F: Scalar>(
    tape: &mut Tape<F>,
    p: &S2vtNodes,
    keys: NodeId,
    query: NodeId,
) -> Result<(NodeId, NodeId)> {
    let proj_keys = tape.matmul(keys, p.attn_key_w)?;
    let proj_query = tape.matmul(query, p.attn_query_w)?;
    let proj_query = tape.add(proj_query, p.attn_b)?;
    let pre = tape.add_row_broadcast(proj_keys, proj_query)?;
    let act = tape.tanh(pre);
    let scores_col = tape.matmul(act, p.attn_v)?;
    let scores = tape.transpose(scores_col);
    let eta = tape.softmax_rows(scores)?;
    let s_star = tape.matmul(eta, keys)?;
    Ok((s_star, eta))
}

/// Bottom hidden state of one decode step plus its attention readout.
#[derive(Debug, Clone, Copy)]
pub struct DecodeStepOut {
    pub bottom_hidden: NodeId,
    pub s_star: NodeId,
    pub eta: NodeId,
}

/// Advance the unrolled stack by one decoding timestep. `x_t` is the
/// embedded previous word (BOS embedding at the first step).
pub fn decode_step<F: Scalar>(
    tape: &mut Tape<F>,
    p: &S2vtNodes,
    cfg: &S2VTConfig,
    enc: &mut EncoderNodes,
    x_t: NodeId,
    drop: &mut Option<&mut Dropout<'_>>,
) -> Result<DecodeStepOut> {
    let half = cfg.hidden_dim / 2;
    // Query is the previous bottom hidden state (the last encoding-stage
    // state at the first decode step).
    let query = enc.bottom.hidden;
    let (s_star, eta) = temporal_attention(tape, p, enc.keys, query)?;

    let zero_frame = tape.zeros(1, cfg.video_embed_dim);
    enc.top_fw = lstm_step(tape, zero_frame, &enc.top_fw, p.top_fw_w, p.top_fw_b)?;
    let zero_half = tape.zeros(1, half);
    let s_top = tape.concat_cols(&[enc.top_fw.hidden, zero_half])?;
    let s_top = maybe_dropout(tape, s_top, drop)?;

    let bottom_in = tape.concat_cols(&[x_t, s_top, s_star])?;
    enc.bottom = lstm_step(tape, bottom_in, &enc.bottom, p.bottom_w, p.bottom_b)?;

    Ok(DecodeStepOut {
        bottom_hidden: enc.bottom.hidden,
        s_star,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::{lstm_cell_oracle, rand_vec};
    use crate::tensor::{grad_check, GradCheckOptions, ParamStore, Tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_cfg() -> S2VTConfig {
        S2VTConfig {
            t_enc: 3,
            t_dec: 2,
            video_feature_dim: 3,
            video_embed_dim: 2,
            word_embed_dim: 2,
            hidden_dim: 4,
            attn_dim: 3,
        }
    }

    fn init_store(cfg: &S2VTConfig, seed: u64) -> ParamStore<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new(seed);
        let half = cfg.hidden_dim / 2;
        store.init_uniform(names::VIDEO_EMBED_W, cfg.video_feature_dim, cfg.video_embed_dim, &mut rng);
        store.init_zeros(names::VIDEO_EMBED_B, 1, cfg.video_embed_dim);
        store.init_uniform(names::TOP_FW_W, cfg.video_embed_dim + half, 4 * half, &mut rng);
        store.init_zeros(names::TOP_FW_B, 1, 4 * half);
        store.init_uniform(names::TOP_BW_W, cfg.video_embed_dim + half, 4 * half, &mut rng);
        store.init_zeros(names::TOP_BW_B, 1, 4 * half);
        let bottom_in = cfg.word_embed_dim + 2 * cfg.hidden_dim;
        store.init_uniform(names::BOTTOM_W, bottom_in + cfg.hidden_dim, 4 * cfg.hidden_dim, &mut rng);
        store.init_zeros(names::BOTTOM_B, 1, 4 * cfg.hidden_dim);
        store.init_uniform(names::ATTN_KEY_W, cfg.hidden_dim, cfg.attn_dim, &mut rng);
        store.init_uniform(names::ATTN_QUERY_W, cfg.hidden_dim, cfg.attn_dim, &mut rng);
        store.init_zeros(names::ATTN_B, 1, cfg.attn_dim);
        store.init_uniform(names::ATTN_V, cfg.attn_dim, 1, &mut rng);
        store
    }

    fn zero_store(cfg: &S2VTConfig) -> ParamStore<f64> {
        let mut store = init_store(cfg, 0);
        let names: Vec<String> = store.names().map(str::to_string).collect();
        for n in names {
            for v in store.get_mut(&n).unwrap().values_mut() {
                *v = 0.0;
            }
        }
        store
    }

    fn leaf_frames(tape: &mut Tape<f64>, frames: &[Vec<f64>]) -> Vec<NodeId> {
        frames
            .iter()
            .map(|f| tape.leaf(f.clone(), 1, f.len()).unwrap())
            .collect()
    }

    #[test]
    fn embed_frames_matches_affine_oracle() {
        let cfg = tiny_cfg();
        let store = init_store(&cfg, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let frames: Vec<Vec<f64>> = (0..3)
            .map(|_| rand_vec(&mut rng, cfg.video_feature_dim, 1.0))
            .collect();

        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let nodes = leaf_frames(&mut tape, &frames);
        let embedded = embed_frames(&mut tape, &p, &nodes).unwrap();

        let w = store.get(names::VIDEO_EMBED_W).unwrap();
        let b = store.get(names::VIDEO_EMBED_B).unwrap();
        for (f, e) in frames.iter().zip(&embedded) {
            // Independent per-frame affine arithmetic.
            for j in 0..cfg.video_embed_dim {
                let mut want = b.values()[j];
                for (i, fv) in f.iter().enumerate() {
                    want += fv * w.values()[i * cfg.video_embed_dim + j];
                }
                let got = tape.value(*e)[j];
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embed_zero_feature_zero_bias_is_zero() {
        let cfg = tiny_cfg();
        let store = init_store(&cfg, 4);
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let zero = tape.zeros(1, cfg.video_feature_dim);
        let out = embed_frames(&mut tape, &p, &[zero]).unwrap();
        assert!(tape.value(out[0]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn embed_dim_mismatch_is_an_error() {
        let cfg = tiny_cfg();
        let store = init_store(&cfg, 4);
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let bad = tape.zeros(1, cfg.video_feature_dim + 1);
        assert!(embed_frames(&mut tape, &p, &[bad]).is_err());
    }

    #[test]
    fn zero_params_produce_all_zero_states() {
        let cfg = tiny_cfg();
        let store = zero_store(&cfg);
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let frames: Vec<Vec<f64>> = (0..2)
            .map(|_| rand_vec(&mut rng, cfg.video_feature_dim, 1.0))
            .collect();
        let nodes = leaf_frames(&mut tape, &frames);
        let embedded = embed_frames(&mut tape, &p, &nodes).unwrap();
        let enc = encode(&mut tape, &p, &cfg, &embedded, &mut None).unwrap();
        for s in &enc.top_states {
            assert!(tape.value(*s).iter().all(|v| *v == 0.0));
        }
        assert!(tape.value(enc.bottom.hidden).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_video_is_an_error() {
        let cfg = tiny_cfg();
        let store = init_store(&cfg, 4);
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        assert!(matches!(
            encode(&mut tape, &p, &cfg, &[], &mut None),
            Err(ModelError::EmptyVideo)
        ));
    }

    #[test]
    fn reversed_frames_swap_directional_halves_under_tied_params() {
        let cfg = tiny_cfg();
        let mut store = init_store(&cfg, 9);
        // Tie the two directional cells so the symmetry is exact.
        let fw_w = store.get(names::TOP_FW_W).unwrap().clone();
        let fw_b = store.get(names::TOP_FW_B).unwrap().clone();
        store.insert(names::TOP_BW_W, fw_w);
        store.insert(names::TOP_BW_B, fw_b);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let frames: Vec<Vec<f64>> = (0..cfg.t_enc)
            .map(|_| rand_vec(&mut rng, cfg.video_feature_dim, 1.0))
            .collect();
        let reversed: Vec<Vec<f64>> = frames.iter().rev().cloned().collect();

        let run = |input: &[Vec<f64>]| -> Vec<Vec<f64>> {
            let mut tape = Tape::new();
            let tp = TapeParams::inject(&mut tape, &store);
            let p = S2vtNodes::resolve(&tp).unwrap();
            let nodes = leaf_frames(&mut tape, input);
            let embedded = embed_frames(&mut tape, &p, &nodes).unwrap();
            let enc = encode(&mut tape, &p, &cfg, &embedded, &mut None).unwrap();
            enc.top_states
                .iter()
                .map(|s| tape.value(*s).to_vec())
                .collect()
        };

        let half = cfg.hidden_dim / 2;
        let fwd_run = run(&frames);
        let rev_run = run(&reversed);
        for t in 0..cfg.t_enc {
            let bw_half = &fwd_run[t][half..];
            let fw_half_rev = &rev_run[cfg.t_enc - 1 - t][..half];
            for (a, b) in bw_half.iter().zip(fw_half_rev) {
                assert!((a - b).abs() < 1e-12, "halves differ at t={t}");
            }
        }
    }

    #[test]
    fn single_frame_encode_matches_two_cell_oracle() {
        let mut cfg = tiny_cfg();
        cfg.t_enc = 1;
        let store = init_store(&cfg, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let frame = rand_vec(&mut rng, cfg.video_feature_dim, 1.0);

        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let node = leaf_frames(&mut tape, &[frame.clone()]);
        let embedded = embed_frames(&mut tape, &p, &node).unwrap();
        let enc = encode(&mut tape, &p, &cfg, &embedded, &mut None).unwrap();
        let got = tape.value(enc.top_states[0]).to_vec();

        // Oracle: one forward and one backward cell step on the embedded frame.
        let half = cfg.hidden_dim / 2;
        let emb = tape.value(embedded[0]).to_vec();
        let zeros = vec![0.0; half];
        let (h_fw, _) = lstm_cell_oracle(
            &emb,
            &zeros,
            &zeros,
            store.get(names::TOP_FW_W).unwrap().values(),
            store.get(names::TOP_FW_B).unwrap().values(),
            half,
        );
        let (h_bw, _) = lstm_cell_oracle(
            &emb,
            &zeros,
            &zeros,
            store.get(names::TOP_BW_W).unwrap().values(),
            store.get(names::TOP_BW_B).unwrap().values(),
            half,
        );
        let want: Vec<f64> = h_fw.into_iter().chain(h_bw).collect();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_scores_average_top_states() {
        // Zero attention parameters force equal scores; s* must equal the
        // arithmetic mean of the keys exactly.
        let cfg = tiny_cfg();
        let mut store = init_store(&cfg, 14);
        for n in [names::ATTN_KEY_W, names::ATTN_QUERY_W, names::ATTN_V] {
            for v in store.get_mut(n).unwrap().values_mut() {
                *v = 0.0;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let keys_data = rand_vec(&mut rng, cfg.t_enc * cfg.hidden_dim, 1.0);
        let keys = tape.leaf(keys_data.clone(), cfg.t_enc, cfg.hidden_dim).unwrap();
        let query = tape.zeros(1, cfg.hidden_dim);
        let (s_star, eta) = temporal_attention(&mut tape, &p, keys, query).unwrap();

        let t = cfg.t_enc as f64;
        assert!(tape.value(eta).iter().all(|v| (v - 1.0 / t).abs() < 1e-12));
        for j in 0..cfg.hidden_dim {
            let mean: f64 = (0..cfg.t_enc)
                .map(|i| keys_data[i * cfg.hidden_dim + j])
                .sum::<f64>()
                / t;
            assert!((tape.value(s_star)[j] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_score_selects_single_state() {
        let cfg = tiny_cfg();
        let store = init_store(&cfg, 16);
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let keys = tape
            .leaf(
                vec![
                    1.0, 2.0, 3.0, 4.0, //
                    -1.0, 0.5, 0.25, -2.0, //
                    0.0, 0.0, 1.0, 1.0,
                ],
                3,
                4,
            )
            .unwrap();
        // Bypass the score network: feed a one-hot-ish eta directly through
        // softmax saturation by crafting scores.
        let scores = tape.leaf(vec![50.0, 0.0, 0.0], 1, 3).unwrap();
        let eta = tape.softmax_rows(scores).unwrap();
        let s_star = tape.matmul(eta, keys).unwrap();
        let _ = p;
        for (got, want) in tape.value(s_star).iter().zip(&[1.0, 2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn three_state_attention_matches_hand_arithmetic() {
        let cfg = tiny_cfg();
        let store = init_store(&cfg, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let keys_data = rand_vec(&mut rng, 3 * cfg.hidden_dim, 1.0);
        let query_data = rand_vec(&mut rng, cfg.hidden_dim, 1.0);

        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let keys = tape.leaf(keys_data.clone(), 3, cfg.hidden_dim).unwrap();
        let query = tape.leaf(query_data.clone(), 1, cfg.hidden_dim).unwrap();
        let (s_star, eta) = temporal_attention(&mut tape, &p, keys, query).unwrap();

        // Direct evaluation of the additive score, softmax and weighted sum.
        let w1 = store.get(names::ATTN_KEY_W).unwrap().values();
        let w2 = store.get(names::ATTN_QUERY_W).unwrap().values();
        let ba = store.get(names::ATTN_B).unwrap().values();
        let va = store.get(names::ATTN_V).unwrap().values();
        let a_dim = cfg.attn_dim;
        let h = cfg.hidden_dim;
        let mut scores = vec![0.0; 3];
        for j in 0..3 {
            let mut s = 0.0;
            for a in 0..a_dim {
                let mut pre = ba[a];
                for k in 0..h {
                    pre += keys_data[j * h + k] * w1[k * a_dim + a];
                    pre += query_data[k] * w2[k * a_dim + a];
                }
                s += pre.tanh() * va[a];
            }
            scores[j] = s;
        }
        let z: f64 = scores.iter().map(|s| s.exp()).sum();
        let eta_want: Vec<f64> = scores.iter().map(|s| s.exp() / z).collect();
        for (g, w) in tape.value(eta).iter().zip(&eta_want) {
            assert!((g - w).abs() < 1e-12);
        }
        for k in 0..h {
            let want: f64 = (0..3).map(|j| eta_want[j] * keys_data[j * h + k]).sum();
            assert!((tape.value(s_star)[k] - want).abs() < 1e-12);
        }
        // Weights are a distribution.
        let sum: f64 = tape.value(eta).iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_params_decode_step_stays_zero() {
        let cfg = tiny_cfg();
        let store = zero_store(&cfg);
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let frames = leaf_frames(&mut tape, &[vec![1.0, -1.0, 0.5]]);
        let embedded = embed_frames(&mut tape, &p, &frames).unwrap();
        let mut enc = encode(&mut tape, &p, &cfg, &embedded, &mut None).unwrap();
        let x = tape.zeros(1, cfg.word_embed_dim);
        let out = decode_step(&mut tape, &p, &cfg, &mut enc, x, &mut None).unwrap();
        assert!(tape.value(out.bottom_hidden).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn decode_step_matches_composed_oracle() {
        // One encode frame, one decode step at tiny dims: compose the scalar
        // LSTM oracle with the attention arithmetic done by tape primitives
        // already verified above.
        let mut cfg = tiny_cfg();
        cfg.t_enc = 1;
        let store = init_store(&cfg, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let frame = rand_vec(&mut rng, cfg.video_feature_dim, 1.0);
        let x_data = rand_vec(&mut rng, cfg.word_embed_dim, 1.0);

        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, &store);
        let p = S2vtNodes::resolve(&tp).unwrap();
        let frames = leaf_frames(&mut tape, &[frame]);
        let embedded = embed_frames(&mut tape, &p, &frames).unwrap();
        let mut enc = encode(&mut tape, &p, &cfg, &embedded, &mut None).unwrap();

        // Snapshot pre-step values for the oracle.
        let query = tape.value(enc.bottom.hidden).to_vec();
        let bottom_cell = tape.value(enc.bottom.cell).to_vec();
        let top_fw_h = tape.value(enc.top_fw.hidden).to_vec();
        let top_fw_c = tape.value(enc.top_fw.cell).to_vec();
        let keys = tape.value(enc.keys).to_vec();

        let x = tape.leaf(x_data.clone(), 1, cfg.word_embed_dim).unwrap();
        let out = decode_step(&mut tape, &p, &cfg, &mut enc, x, &mut None).unwrap();
        let got = tape.value(out.bottom_hidden).to_vec();

        // Oracle: attention with T=1 is trivially s* = keys row; the top
        // layer advances on a zero frame; the bottom consumes the concat.
        let half = cfg.hidden_dim / 2;
        let (top_h, _) = lstm_cell_oracle(
            &vec![0.0; cfg.video_embed_dim],
            &top_fw_h,
            &top_fw_c,
            store.get(names::TOP_FW_W).unwrap().values(),
            store.get(names::TOP_FW_B).unwrap().values(),
            half,
        );
        let s_top: Vec<f64> = top_h.iter().copied().chain(vec![0.0; half]).collect();
        let s_star = keys.clone(); // single key, eta = 1
        let bottom_in: Vec<f64> = x_data
            .iter()
            .chain(s_top.iter())
            .chain(s_star.iter())
            .copied()
            .collect();
        let (want, _) = lstm_cell_oracle(
            &bottom_in,
            &query,
            &bottom_cell,
            store.get(names::BOTTOM_W).unwrap().values(),
            store.get(names::BOTTOM_B).unwrap().values(),
            cfg.hidden_dim,
        );
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn gradient_check_through_encode_and_two_decode_steps() {
        let cfg = tiny_cfg();
        let mut store = init_store(&cfg, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        store.insert(
            "frame0",
            crate::tensor::Tensor::from_values(
                1,
                cfg.video_feature_dim,
                rand_vec(&mut rng, cfg.video_feature_dim, 1.0),
            )
            .unwrap(),
        );
        store.insert(
            "x0",
            Tensor::from_values(1, cfg.word_embed_dim, rand_vec(&mut rng, cfg.word_embed_dim, 1.0))
                .unwrap(),
        );
        store.insert(
            "x1",
            Tensor::from_values(1, cfg.word_embed_dim, rand_vec(&mut rng, cfg.word_embed_dim, 1.0))
                .unwrap(),
        );

        let cfg2 = cfg.clone();
        let err = grad_check(
            &mut store,
            move |tape, tp| {
                let p = S2vtNodes::resolve(tp)?;
                let frame = tp.node("frame0")?;
                let embedded = embed_frames(tape, &p, &[frame]).map_err(tensor_err)?;
                let mut enc =
                    encode(tape, &p, &cfg2, &embedded, &mut None).map_err(tensor_err)?;
                let mut acc = tape.zeros(1, 1);
                for xn in ["x0", "x1"] {
                    let x = tp.node(xn)?;
                    let out = decode_step(tape, &p, &cfg2, &mut enc, x, &mut None)
                        .map_err(tensor_err)?;
                    let sq = tape.mul(out.bottom_hidden, out.bottom_hidden)?;
                    let s = tape.sum_all(sq);
                    acc = tape.add(acc, s)?;
                }
                Ok(acc)
            },
            &GradCheckOptions {
                samples_per_param: 0,
                ..GradCheckOptions::default()
            },
        )
        .unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    fn tensor_err(e: ModelError) -> crate::tensor::TensorError {
        match e {
            ModelError::Tensor(t) => t,
            other => crate::tensor::TensorError::InvalidArgument {
                op: "model",
                message: other.to_string(),
            },
        }
    }
}
