use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NodeId, ParamStore, Result, Tape, TapeParams, TensorError};

/// Settings for [`grad_check`].
#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Max coordinates sampled per parameter; 0 checks every coordinate.
    pub samples_per_param: usize,
    /// Seed for coordinate sampling.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            samples_per_param: 0,
            seed: 0,
        }
    }
}

/// Compare reverse-mode gradients against central finite differences.
///
/// `build` must deterministically reconstruct the same scalar loss from a
/// fresh tape each time it is called (fix any dropout seeds inside it).
/// Returns the max over sampled coordinates of
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check<B>(
    params: &mut ParamStore<f64>,
    build: B,
    opts: &GradCheckOptions,
) -> Result<f64>
where
    B: Fn(&mut Tape<f64>, &TapeParams) -> Result<NodeId>,
{
    // Analytic pass.
    let mut tape = Tape::new();
    let tp = TapeParams::inject(&mut tape, params);
    let loss = build(&mut tape, &tp)?;
    if !tape.scalar_value(loss).is_finite() {
        return Err(TensorError::NonFiniteLoss(tape.scalar_value(loss)));
    }
    let grads = tape.backward(loss)?;

    let eval = |params: &ParamStore<f64>| -> Result<f64> {
        let mut tape = Tape::new();
        let tp = TapeParams::inject(&mut tape, params);
        let loss = build(&mut tape, &tp)?;
        let v = tape.scalar_value(loss);
        if !v.is_finite() {
            return Err(TensorError::NonFiniteLoss(v));
        }
        Ok(v)
    };

    let names: Vec<String> = params.names().map(str::to_string).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut max_rel = 0.0_f64;

    for name in names {
        let node = tp.node(&name)?;
        let analytic = grads.get(node).to_vec();
        let len = analytic.len();
        let coords: Vec<usize> = if opts.samples_per_param == 0 || len <= opts.samples_per_param {
            (0..len).collect()
        } else {
            let mut all: Vec<usize> = (0..len).collect();
            all.shuffle(&mut rng);
            all.truncate(opts.samples_per_param);
            all
        };
        for idx in coords {
            let original = params.get(&name)?.values()[idx];
            params.get_mut(&name)?.values_mut()[idx] = original + opts.step;
            let plus = eval(params)?;
            params.get_mut(&name)?.values_mut()[idx] = original - opts.step;
            let minus = eval(params)?;
            params.get_mut(&name)?.values_mut()[idx] = original;

            let numeric = (plus - minus) / (2.0 * opts.step);
            let a = analytic[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
