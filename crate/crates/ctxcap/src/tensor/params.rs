use std::collections::BTreeMap;

use rand::Rng;

use super::tape::Gradients;
use super::{NodeId, Result, Scalar, Tape, Tensor, TensorError};

/// Named parameter container. Iteration order is deterministic (sorted by
/// name), which fixes the order of initialization, optimizer updates and
/// checkpoint layout.
#[derive(Debug, Clone)]
pub struct ParamStore<F: Scalar> {
    params: BTreeMap<String, Tensor<F>>,
    pub rng_seed: u64,
}

impl<F: Scalar> ParamStore<F> {
    pub fn new(rng_seed: u64) -> Self {
        ParamStore {
            params: BTreeMap::new(),
            rng_seed,
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<F>) {
        self.params.insert(name.into(), tensor);
    }

    /// Uniform init in `[-k, k]` with `k = 1/sqrt(fan_in)`, fan-in being the
    /// row count of an `[in, out]` matrix.
    pub fn init_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) {
        let k = 1.0 / (rows as f64).sqrt();
        let values = (0..rows * cols)
            .map(|_| F::from_f64(rng.gen_range(-k..=k)))
            .collect();
        self.insert(
            name,
            Tensor::from_values(rows, cols, values).expect("positive dims"),
        );
    }

    pub fn init_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) {
        self.insert(name, Tensor::zeros(rows, cols));
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<F>> {
        self.params
            .get(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<F>> {
        self.params
            .get_mut(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<F>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<F>)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn zero_grads(&mut self) {
        for t in self.params.values_mut() {
            t.zero_grad();
        }
    }

    /// Total number of scalar parameters.
    pub fn num_values(&self) -> usize {
        self.params.values().map(|t| t.len()).sum()
    }

    /// FNV-1a hash over the exact bit pattern of all values, in name order.
    /// Used to assert that frozen parameters do not move.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for (name, t) in &self.params {
            for b in name.as_bytes() {
                mix(*b);
            }
            let mut buf = Vec::with_capacity(t.len() * F::BYTE_WIDTH);
            for v in t.values() {
                v.write_le(&mut buf);
            }
            for b in buf {
                mix(b);
            }
        }
        h
    }

    /// Checksum restricted to parameters whose name starts with `prefix`.
    pub fn checksum_prefix(&self, prefix: &str) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for (name, t) in &self.params {
            if !name.starts_with(prefix) {
                continue;
            }
            let mut buf = Vec::with_capacity(t.len() * F::BYTE_WIDTH);
            for v in t.values() {
                v.write_le(&mut buf);
            }
            for b in name.as_bytes().iter().copied().chain(buf) {
                mix(b);
            }
        }
        h
    }
}

/// Leaf node ids for every parameter injected into a tape, keyed by name.
#[derive(Debug, Default)]
pub struct TapeParams {
    nodes: BTreeMap<String, NodeId>,
}

impl TapeParams {
    /// Insert every parameter of `store` as a tape leaf.
    pub fn inject<F: Scalar>(tape: &mut Tape<F>, store: &ParamStore<F>) -> Self {
        let mut nodes = BTreeMap::new();
        for (name, tensor) in store.iter() {
            nodes.insert(name.to_string(), tape.leaf_tensor(tensor));
        }
        TapeParams { nodes }
    }

    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.nodes
            .get(name)
            .copied()
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    /// `store.grad += tape_grad * scale` for every parameter leaf.
    pub fn harvest<F: Scalar>(
        &self,
        grads: &Gradients<F>,
        store: &mut ParamStore<F>,
        scale: F,
    ) -> Result<()> {
        for (name, node) in &self.nodes {
            let tensor = store.get_mut(name)?;
            let g = grads.get(*node);
            if g.len() != tensor.len() {
                return Err(TensorError::MissingGradient { name: name.clone() });
            }
            tensor.accumulate_grad(g, scale);
        }
        Ok(())
    }
}
