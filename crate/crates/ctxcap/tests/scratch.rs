use ctxcap::corpus::{SampleRecord, Split, Vocabulary};
use ctxcap::model::{ContextCaptionModel, ModelConfig, PointerConfig, S2VTConfig, Variant};
use ctxcap::tensor::{Tape, TapeParams};

#[test]
fn per_param_grad_errors() {
    let model = ContextCaptionModel::new(ModelConfig {
        s2vt: S2VTConfig {
            t_enc: 2,
            t_dec: 4,
            video_feature_dim: 3,
            video_embed_dim: 2,
            word_embed_dim: 3,
            hidden_dim: 4,
            attn_dim: 3,
        },
        pointer: PointerConfig {
            context_hidden_dim: 3,
            ctx_attn_dim: 3,
            vocab_mlp_dim: 4,
            max_context_len: 16,
        },
        vocab_size: 10,
    })
    .unwrap();
    let vocab = Vocabulary::from_words(&["the", "dog", "runs"]);
    let rec = SampleRecord {
        clip_id: "c0".into(),
        movie: "m".into(),
        feature_path: "c0.feat".into(),
        context_source: "scene 0".into(),
        context_tokens: vec!["rex".into(), "the".into(), "dog".into()],
        caption_tokens: vec!["rex".into(), "runs".into()],
        split: Split::Train,
        names: vec!["rex".into()],
    };
    let feats = vec![vec![0.5f32, -1.0, 0.25]];
    let sample = model.prepare_sample::<f64>(&rec, &vocab, &feats).unwrap();
    let mut store = model.init_params::<f64>(7);

    let build = |store: &ctxcap::tensor::ParamStore<f64>| -> (f64, Vec<(String, Vec<f64>)>) {
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, store);
        let loss = model
            .train_loss(&mut tape, &tp, &sample, Variant::Full, 0.0, &mut None)
            .unwrap();
        let v = tape.scalar_value(loss);
        let grads = tape.backward(loss).unwrap();
        let названия: Vec<(String, Vec<f64>)> = store
            .names()
            .map(|n| (n.to_string(), grads.get(tp.node(n).unwrap()).to_vec()))
            .collect();
        (v, названия)
    };

    let (_, analytic) = build(&store);

    // h-stability probe at one failing coordinate.
    {
        let name = "s2vt.attn.query_w";
        let idx = 1;
        let a = analytic.iter().find(|(n, _)| n == name).unwrap().1[idx];
        for h in [1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
            let orig = store.get(name).unwrap().values()[idx];
            store.get_mut(name).unwrap().values_mut()[idx] = orig + h;
            let plus = {
                let mut tape = Tape::new();
                let tp = TapeParams::inject(&mut tape, &store);
                let loss = model
                    .train_loss(&mut tape, &tp, &sample, Variant::Full, 0.0, &mut None)
                    .unwrap();
                tape.scalar_value(loss)
            };
            store.get_mut(name).unwrap().values_mut()[idx] = orig - h;
            let minus = {
                let mut tape = Tape::new();
                let tp = TapeParams::inject(&mut tape, &store);
                let loss = model
                    .train_loss(&mut tape, &tp, &sample, Variant::Full, 0.0, &mut None)
                    .unwrap();
                tape.scalar_value(loss)
            };
            store.get_mut(name).unwrap().values_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            println!("h={h:.0e}: numeric {numeric:.12}  analytic {a:.12}");
        }
    }

    let h = 1e-3;
    let names: Vec<String> = store.names().map(str::to_string).collect();
    for name in &names {
        let len = store.get(name).unwrap().len();
        let mut worst = 0.0f64;
        let mut worst_idx = 0;
        for idx in 0..len {
            let orig = store.get(name).unwrap().values()[idx];
            store.get_mut(name).unwrap().values_mut()[idx] = orig + h;
            let (plus, _) = {
                let mut tape = Tape::new();
                let tp = TapeParams::inject(&mut tape, &store);
                let loss = model
                    .train_loss(&mut tape, &tp, &sample, Variant::Full, 0.0, &mut None)
                    .unwrap();
                (tape.scalar_value(loss), ())
            };
            store.get_mut(name).unwrap().values_mut()[idx] = orig - h;
            let minus = {
                let mut tape = Tape::new();
                let tp = TapeParams::inject(&mut tape, &store);
                let loss = model
                    .train_loss(&mut tape, &tp, &sample, Variant::Full, 0.0, &mut None)
                    .unwrap();
                tape.scalar_value(loss)
            };
            store.get_mut(name).unwrap().values_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic.iter().find(|(n, _)| n == name).unwrap().1[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
                worst_idx = idx;
            }
        }
        println!("{name:30} worst {worst:.3e} at {worst_idx}");
    }
    panic!("inspection only");
}
