use std::collections::{BTreeMap, HashSet};

use super::{ParamStore, Result, Scalar, TensorError};

/// Adam optimizer state: per-parameter first/second moments plus the shared
/// step counter and hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState<F: Scalar> {
    moments: BTreeMap<String, (Vec<F>, Vec<F>)>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            moments: BTreeMap::new(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One Adam update with bias correction over every parameter, consuming
    /// and zeroing the accumulated gradients.
    pub fn step(&mut self, params: &mut ParamStore<F>) -> Result<()> {
        self.step_with_frozen(params, &HashSet::new())
    }

    /// Adam update that leaves `frozen` parameters (and their moments)
    /// untouched; their gradients are still zeroed afterwards.
    pub fn step_with_frozen(
        &mut self,
        params: &mut ParamStore<F>,
        frozen: &HashSet<String>,
    ) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let b1 = F::from_f64(self.beta1);
        let b2 = F::from_f64(self.beta2);
        let lr = F::from_f64(self.learning_rate);
        let eps = F::from_f64(self.epsilon);
        let one = F::one();
        let bias1 = one - b1.powi(t);
        let bias2 = one - b2.powi(t);

        for (name, tensor) in params.iter_mut() {
            if frozen.contains(name) {
                tensor.zero_grad();
                continue;
            }
            let n = tensor.len();
            let (m, v) = self
                .moments
                .entry(name.to_string())
                .or_insert_with(|| (vec![F::zero(); n], vec![F::zero(); n]));
            if m.len() != n {
                return Err(TensorError::MissingGradient {
                    name: name.to_string(),
                });
            }
            for i in 0..n {
                let g = tensor.grad()[i];
                m[i] = b1 * m[i] + (one - b1) * g;
                v[i] = b2 * v[i] + (one - b2) * g * g;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                tensor.values_mut()[i] =
                    tensor.values()[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
            tensor.zero_grad();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut params = ParamStore::<f64>::new(0);
        params.insert("w", Tensor::from_values(1, 2, vec![1.5, -0.5]).unwrap());
        let mut adam = AdamState::new(1e-2);
        adam.step(&mut params).unwrap();
        assert_eq!(params.get("w").unwrap().values(), &[1.5, -0.5]);
    }

    #[test]
    fn first_step_magnitude_matches_hand_evaluated_recurrence() {
        // Oracle: by hand, at t=1 with g=1:
        //   m = 0.1, v = 0.001, m_hat = m/(1-0.9) = 1, v_hat = v/(1-0.999) = 1,
        //   delta = lr * 1 / (sqrt(1) + eps) = lr / (1 + 1e-8).
        let lr = 1e-4;
        let expected_delta = lr * 1.0 / (1.0_f64.sqrt() + 1e-8);

        let mut params = ParamStore::<f64>::new(0);
        let mut t = Tensor::scalar(0.7);
        t.grad_mut()[0] = 1.0;
        params.insert("theta", t);
        let mut adam = AdamState::new(lr);
        adam.step(&mut params).unwrap();
        let new_val = params.get("theta").unwrap().values()[0];
        assert!((0.7 - new_val - expected_delta).abs() < 1e-15);
        // Decreases by approximately lr.
        assert!((0.7 - new_val - lr).abs() < 1e-9);
        // Gradients zeroed afterwards.
        assert_eq!(params.get("theta").unwrap().grad(), &[0.0]);
    }

    #[test]
    fn identical_scalars_with_identical_grads_get_identical_updates() {
        let mut params = ParamStore::<f64>::new(0);
        for name in ["a", "b"] {
            let mut t = Tensor::scalar(0.25);
            t.grad_mut()[0] = -0.3;
            params.insert(name, t);
        }
        let mut adam = AdamState::new(1e-3);
        adam.step(&mut params).unwrap();
        assert_eq!(
            params.get("a").unwrap().values(),
            params.get("b").unwrap().values()
        );
    }

    #[test]
    fn frozen_parameters_do_not_move() {
        let mut params = ParamStore::<f64>::new(0);
        let mut t = Tensor::scalar(1.0);
        t.grad_mut()[0] = 5.0;
        params.insert("frozen.w", t);
        let mut t2 = Tensor::scalar(1.0);
        t2.grad_mut()[0] = 5.0;
        params.insert("live.w", t2);

        let mut adam = AdamState::new(1e-2);
        let frozen: HashSet<String> = ["frozen.w".to_string()].into_iter().collect();
        adam.step_with_frozen(&mut params, &frozen).unwrap();
        assert_eq!(params.get("frozen.w").unwrap().values(), &[1.0]);
        assert_ne!(params.get("live.w").unwrap().values(), &[1.0]);
        // Frozen moments must not exist; a later unfrozen stage starts clean.
        assert!(!adam.moments.contains_key("frozen.w"));
    }
}
