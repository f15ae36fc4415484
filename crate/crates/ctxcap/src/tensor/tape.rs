use rand::Rng;

use super::{Result, Scalar, Tensor, TensorError};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op<F: Scalar> {
    Leaf,
    Add { a: NodeId, b: NodeId },
    AddRowBroadcast { m: NodeId, r: NodeId },
    Mul { a: NodeId, b: NodeId },
    MinElem { a: NodeId, b: NodeId },
    Affine { x: NodeId, mul: F, add: F },
    MatMul { a: NodeId, b: NodeId },
    Transpose { x: NodeId },
    ConcatCols { parts: Vec<NodeId> },
    ConcatRows { parts: Vec<NodeId> },
    SliceCols { x: NodeId, start: usize },
    Row { x: NodeId, index: usize },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    SoftmaxRows { x: NodeId },
    Ln { x: NodeId },
    ClampMin { x: NodeId, floor: F },
    Pick { x: NodeId, row: usize, col: usize },
    SumAll { x: NodeId },
    ScaleBy { x: NodeId, s: NodeId },
    PadCols { x: NodeId },
    ScatterAddCols { x: NodeId, mapping: Vec<usize> },
    Dropout { x: NodeId, mask: Vec<F> },
}

#[derive(Debug)]
struct Node<F: Scalar> {
    values: Vec<F>,
    rows: usize,
    cols: usize,
    op: Op<F>,
}

/// Forward/backward computation record. Nodes are append-only; reverse-mode
/// differentiation walks them back to front.
#[derive(Debug, Default)]
pub struct Tape<F: Scalar> {
    nodes: Vec<Node<F>>,
}

fn shape_err(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        lhs: vec![lhs.0, lhs.1],
        rhs: vec![rhs.0, rhs.1],
    }
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, values: Vec<F>, rows: usize, cols: usize, op: Op<F>) -> NodeId {
        debug_assert_eq!(values.len(), rows * cols);
        self.nodes.push(Node {
            values,
            rows,
            cols,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &[F] {
        &self.nodes[id.0].values
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    /// Single scalar value of a [1, 1] node.
    pub fn scalar_value(&self, id: NodeId) -> F {
        debug_assert_eq!(self.nodes[id.0].values.len(), 1);
        self.nodes[id.0].values[0]
    }

    // ── Leaves ──────────────────────────────────────────────────────────

    pub fn leaf(&mut self, values: Vec<F>, rows: usize, cols: usize) -> Result<NodeId> {
        if values.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(TensorError::InvalidArgument {
                op: "leaf",
                message: format!("{} values for shape [{rows}, {cols}]", values.len()),
            });
        }
        Ok(self.push(values, rows, cols, Op::Leaf))
    }

    pub fn leaf_tensor(&mut self, t: &Tensor<F>) -> NodeId {
        self.push(t.values().to_vec(), t.rows(), t.cols(), Op::Leaf)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> NodeId {
        self.push(vec![F::zero(); rows * cols], rows, cols, Op::Leaf)
    }

    pub fn scalar(&mut self, v: F) -> NodeId {
        self.push(vec![v], 1, 1, Op::Leaf)
    }

    // ── Elementwise ─────────────────────────────────────────────────────

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(shape_err("add", (ra, ca), (rb, cb)));
        }
        let values = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(&x, &y)| x + y)
            .collect();
        Ok(self.push(values, ra, ca, Op::Add { a, b }))
    }

    /// `[n, d] + [1, d]`, the row vector added to every row.
    pub fn add_row_broadcast(&mut self, m: NodeId, r: NodeId) -> Result<NodeId> {
        let (rm, cm) = self.shape(m);
        let (rr, cr) = self.shape(r);
        if rr != 1 || cr != cm {
            return Err(shape_err("add_row_broadcast", (rm, cm), (rr, cr)));
        }
        let mut values = Vec::with_capacity(rm * cm);
        for i in 0..rm {
            for j in 0..cm {
                values.push(self.nodes[m.0].values[i * cm + j] + self.nodes[r.0].values[j]);
            }
        }
        Ok(self.push(values, rm, cm, Op::AddRowBroadcast { m, r }))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(shape_err("mul", (ra, ca), (rb, cb)));
        }
        let values = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(&x, &y)| x * y)
            .collect();
        Ok(self.push(values, ra, ca, Op::Mul { a, b }))
    }

    /// Elementwise minimum. At ties the gradient flows to the left operand.
    pub fn min_elem(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(shape_err("min_elem", (ra, ca), (rb, cb)));
        }
        let values = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(&x, &y)| if x <= y { x } else { y })
            .collect();
        Ok(self.push(values, ra, ca, Op::MinElem { a, b }))
    }

    /// `x * mul + add` with compile-time constants.
    pub fn affine(&mut self, x: NodeId, mul: F, add: F) -> NodeId {
        let (r, c) = self.shape(x);
        let values = self.nodes[x.0]
            .values
            .iter()
            .map(|&v| v * mul + add)
            .collect();
        self.push(values, r, c, Op::Affine { x, mul, add })
    }

    // ── Linear algebra ──────────────────────────────────────────────────

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(shape_err("matmul", (m, k), (k2, n)));
        }
        let av = &self.nodes[a.0].values;
        let bv = &self.nodes[b.0].values;
        let values = matmul_raw(av, bv, m, k, n);
        Ok(self.push(values, m, n, Op::MatMul { a, b }))
    }

    pub fn transpose(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.shape(x);
        let xv = &self.nodes[x.0].values;
        let mut values = vec![F::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                values[j * r + i] = xv[i * c + j];
            }
        }
        self.push(values, c, r, Op::Transpose { x })
    }

    /// Concatenate along columns; all parts must share the row count.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(TensorError::InvalidArgument {
                op: "concat_cols",
                message: "no parts".into(),
            });
        }
        let (rows, c0) = self.shape(parts[0]);
        let mut total = c0;
        for &p in &parts[1..] {
            let (r, c) = self.shape(p);
            if r != rows {
                return Err(shape_err("concat_cols", (rows, c0), (r, c)));
            }
            total += c;
        }
        let mut values = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for &p in parts {
                let (_, c) = self.shape(p);
                let pv = &self.nodes[p.0].values;
                values.extend_from_slice(&pv[i * c..(i + 1) * c]);
            }
        }
        Ok(self.push(
            values,
            rows,
            total,
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
        ))
    }

    /// Stack row blocks; all parts must share the column count.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(TensorError::InvalidArgument {
                op: "concat_rows",
                message: "no parts".into(),
            });
        }
        let (r0, cols) = self.shape(parts[0]);
        let mut total = r0;
        for &p in &parts[1..] {
            let (r, c) = self.shape(p);
            if c != cols {
                return Err(shape_err("concat_rows", (r0, cols), (r, c)));
            }
            total += r;
        }
        let mut values = Vec::with_capacity(total * cols);
        for &p in parts {
            values.extend_from_slice(&self.nodes[p.0].values);
        }
        Ok(self.push(
            values,
            total,
            cols,
            Op::ConcatRows {
                parts: parts.to_vec(),
            },
        ))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let (r, c) = self.shape(x);
        if start >= end || end > c {
            return Err(TensorError::IndexOutOfBounds {
                op: "slice_cols",
                index: vec![start, end],
                shape: vec![r, c],
            });
        }
        let w = end - start;
        let xv = &self.nodes[x.0].values;
        let mut values = Vec::with_capacity(r * w);
        for i in 0..r {
            values.extend_from_slice(&xv[i * c + start..i * c + end]);
        }
        Ok(self.push(values, r, w, Op::SliceCols { x, start }))
    }

    /// Extract row `index` as a `[1, cols]` node.
    pub fn row(&mut self, x: NodeId, index: usize) -> Result<NodeId> {
        let (r, c) = self.shape(x);
        if index >= r {
            return Err(TensorError::IndexOutOfBounds {
                op: "row",
                index: vec![index],
                shape: vec![r, c],
            });
        }
        let values = self.nodes[x.0].values[index * c..(index + 1) * c].to_vec();
        Ok(self.push(values, 1, c, Op::Row { x, index }))
    }

    // ── Nonlinearities ──────────────────────────────────────────────────

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.shape(x);
        let values = self.nodes[x.0]
            .values
            .iter()
            .map(|&v| F::one() / (F::one() + (-v).exp()))
            .collect();
        self.push(values, r, c, Op::Sigmoid { x })
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.shape(x);
        let values = self.nodes[x.0].values.iter().map(|&v| v.tanh()).collect();
        self.push(values, r, c, Op::Tanh { x })
    }

    /// Row-wise softmax, numerically stabilised by subtracting the row max.
    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let (r, c) = self.shape(x);
        if c == 0 {
            return Err(TensorError::InvalidArgument {
                op: "softmax_rows",
                message: "empty axis".into(),
            });
        }
        let xv = &self.nodes[x.0].values;
        let mut values = vec![F::zero(); r * c];
        for i in 0..r {
            let row = &xv[i * c..(i + 1) * c];
            let max = row.iter().cloned().fold(F::neg_infinity(), F::max);
            let mut sum = F::zero();
            for j in 0..c {
                let e = (row[j] - max).exp();
                values[i * c + j] = e;
                sum = sum + e;
            }
            for j in 0..c {
                values[i * c + j] = values[i * c + j] / sum;
            }
        }
        Ok(self.push(values, r, c, Op::SoftmaxRows { x }))
    }

    /// Natural log; caller must guarantee positive inputs (see `clamp_min`).
    pub fn ln(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.shape(x);
        let values = self.nodes[x.0].values.iter().map(|&v| v.ln()).collect();
        self.push(values, r, c, Op::Ln { x })
    }

    pub fn clamp_min(&mut self, x: NodeId, floor: F) -> NodeId {
        let (r, c) = self.shape(x);
        let values = self.nodes[x.0]
            .values
            .iter()
            .map(|&v| if v > floor { v } else { floor })
            .collect();
        self.push(values, r, c, Op::ClampMin { x, floor })
    }

    // ── Reductions and indexing ─────────────────────────────────────────

    pub fn pick(&mut self, x: NodeId, row: usize, col: usize) -> Result<NodeId> {
        let (r, c) = self.shape(x);
        if row >= r || col >= c {
            return Err(TensorError::IndexOutOfBounds {
                op: "pick",
                index: vec![row, col],
                shape: vec![r, c],
            });
        }
        let v = self.nodes[x.0].values[row * c + col];
        Ok(self.push(vec![v], 1, 1, Op::Pick { x, row, col }))
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let mut sum = F::zero();
        for &v in &self.nodes[x.0].values {
            sum = sum + v;
        }
        self.push(vec![sum], 1, 1, Op::SumAll { x })
    }

    /// Multiply every element of `x` by the scalar node `s` ([1, 1]).
    pub fn scale_by(&mut self, x: NodeId, s: NodeId) -> Result<NodeId> {
        let (sr, sc) = self.shape(s);
        if (sr, sc) != (1, 1) {
            return Err(shape_err("scale_by", self.shape(x), (sr, sc)));
        }
        let sv = self.nodes[s.0].values[0];
        let (r, c) = self.shape(x);
        let values = self.nodes[x.0].values.iter().map(|&v| v * sv).collect();
        Ok(self.push(values, r, c, Op::ScaleBy { x, s }))
    }

    /// Right-pad a row vector with zeros to `new_cols`.
    pub fn pad_cols(&mut self, x: NodeId, new_cols: usize) -> Result<NodeId> {
        let (r, c) = self.shape(x);
        if new_cols < c {
            return Err(TensorError::InvalidArgument {
                op: "pad_cols",
                message: format!("target {new_cols} smaller than current {c}"),
            });
        }
        let xv = &self.nodes[x.0].values;
        let mut values = vec![F::zero(); r * new_cols];
        for i in 0..r {
            values[i * new_cols..i * new_cols + c].copy_from_slice(&xv[i * c..(i + 1) * c]);
        }
        Ok(self.push(values, r, new_cols, Op::PadCols { x }))
    }

    /// `out[mapping[j]] += x[j]` over a `[1, m]` row; positions sharing a
    /// target index accumulate.
    pub fn scatter_add_cols(
        &mut self,
        x: NodeId,
        mapping: &[usize],
        out_cols: usize,
    ) -> Result<NodeId> {
        let (r, c) = self.shape(x);
        if r != 1 || mapping.len() != c {
            return Err(TensorError::InvalidArgument {
                op: "scatter_add_cols",
                message: format!("mapping of {} for shape [{r}, {c}]", mapping.len()),
            });
        }
        if let Some(&bad) = mapping.iter().find(|&&t| t >= out_cols) {
            return Err(TensorError::IndexOutOfBounds {
                op: "scatter_add_cols",
                index: vec![bad],
                shape: vec![1, out_cols],
            });
        }
        let mut values = vec![F::zero(); out_cols];
        for (j, &target) in mapping.iter().enumerate() {
            values[target] = values[target] + self.nodes[x.0].values[j];
        }
        Ok(self.push(
            values,
            1,
            out_cols,
            Op::ScatterAddCols {
                x,
                mapping: mapping.to_vec(),
            },
        ))
    }

    // ── Regularisation ──────────────────────────────────────────────────

    /// Inverted dropout: each element is zeroed with probability `rate` and
    /// survivors are scaled by `1/(1-rate)`. Identity when `training` is
    /// false or `rate` is zero.
    pub fn dropout<R: Rng>(
        &mut self,
        x: NodeId,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<NodeId> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::InvalidArgument {
                op: "dropout",
                message: format!("rate {rate} outside [0, 1)"),
            });
        }
        let (r, c) = self.shape(x);
        if !training || rate == 0.0 {
            let values = self.nodes[x.0].values.clone();
            let mask = vec![F::one(); r * c];
            return Ok(self.push(values, r, c, Op::Dropout { x, mask }));
        }
        let keep_scale = F::from_f64(1.0 / (1.0 - rate));
        let mask: Vec<F> = (0..r * c)
            .map(|_| {
                if rng.gen::<f64>() < rate {
                    F::zero()
                } else {
                    keep_scale
                }
            })
            .collect();
        let values = self.nodes[x.0]
            .values
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        Ok(self.push(values, r, c, Op::Dropout { x, mask }))
    }

    // ── Backward ────────────────────────────────────────────────────────

    /// Reverse-mode sweep from a scalar loss node. Returns per-node gradient
    /// buffers indexed like the tape.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<F>> {
        let (r, c) = self.shape(loss);
        if (r, c) != (1, 1) {
            return Err(TensorError::InvalidArgument {
                op: "backward",
                message: format!("loss must be scalar, got [{r}, {c}]"),
            });
        }
        let loss_val = self.nodes[loss.0].values[0];
        if !loss_val.is_finite() {
            return Err(TensorError::NonFiniteLoss(loss_val.to_f64_lossy()));
        }
        let mut grads: Vec<Vec<F>> = self
            .nodes
            .iter()
            .map(|n| vec![F::zero(); n.values.len()])
            .collect();
        grads[loss.0][0] = F::one();

        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            if grads[i].iter().all(|g| *g == F::zero()) {
                continue;
            }
            let g = std::mem::take(&mut grads[i]);
            match &node.op {
                Op::Leaf => {}
                Op::Add { a, b } => {
                    axpy(&mut grads[a.0], &g, F::one());
                    axpy(&mut grads[b.0], &g, F::one());
                }
                Op::AddRowBroadcast { m, r } => {
                    axpy(&mut grads[m.0], &g, F::one());
                    let cols = node.cols;
                    for i2 in 0..node.rows {
                        for j in 0..cols {
                            grads[r.0][j] = grads[r.0][j] + g[i2 * cols + j];
                        }
                    }
                }
                Op::Mul { a, b } => {
                    let bv = self.nodes[b.0].values.clone();
                    for (k, gv) in g.iter().enumerate() {
                        grads[a.0][k] = grads[a.0][k] + *gv * bv[k];
                    }
                    let av = &self.nodes[a.0].values;
                    for (k, gv) in g.iter().enumerate() {
                        grads[b.0][k] = grads[b.0][k] + *gv * av[k];
                    }
                }
                Op::MinElem { a, b } => {
                    let av = &self.nodes[a.0].values;
                    let bv = &self.nodes[b.0].values;
                    for (k, gv) in g.iter().enumerate() {
                        if av[k] <= bv[k] {
                            grads[a.0][k] = grads[a.0][k] + *gv;
                        } else {
                            grads[b.0][k] = grads[b.0][k] + *gv;
                        }
                    }
                }
                Op::Affine { x, mul, .. } => {
                    axpy(&mut grads[x.0], &g, *mul);
                }
                Op::MatMul { a, b } => {
                    let (m, k) = (self.nodes[a.0].rows, self.nodes[a.0].cols);
                    let n = self.nodes[b.0].cols;
                    // dA = G * B^T
                    let bv = &self.nodes[b.0].values;
                    let mut bt = vec![F::zero(); k * n];
                    for p in 0..k {
                        for q in 0..n {
                            bt[q * k + p] = bv[p * n + q];
                        }
                    }
                    let da = matmul_raw(&g, &bt, m, n, k);
                    axpy(&mut grads[a.0], &da, F::one());
                    // dB = A^T * G
                    let av = &self.nodes[a.0].values;
                    let mut at = vec![F::zero(); m * k];
                    for p in 0..m {
                        for q in 0..k {
                            at[q * m + p] = av[p * k + q];
                        }
                    }
                    let db = matmul_raw(&at, &g, k, m, n);
                    axpy(&mut grads[b.0], &db, F::one());
                }
                Op::Transpose { x } => {
                    let (r2, c2) = (node.rows, node.cols);
                    for i2 in 0..r2 {
                        for j in 0..c2 {
                            let idx = j * r2 + i2;
                            grads[x.0][idx] = grads[x.0][idx] + g[i2 * c2 + j];
                        }
                    }
                }
                Op::ConcatCols { parts } => {
                    let rows = node.rows;
                    let total = node.cols;
                    let mut offset = 0;
                    for &p in parts {
                        let pc = self.nodes[p.0].cols;
                        for i2 in 0..rows {
                            for j in 0..pc {
                                let idx = i2 * pc + j;
                                grads[p.0][idx] = grads[p.0][idx] + g[i2 * total + offset + j];
                            }
                        }
                        offset += pc;
                    }
                }
                Op::ConcatRows { parts } => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.nodes[p.0].values.len();
                        for idx in 0..len {
                            grads[p.0][idx] = grads[p.0][idx] + g[offset + idx];
                        }
                        offset += len;
                    }
                }
                Op::SliceCols { x, start } => {
                    let (r2, w) = (node.rows, node.cols);
                    let xc = self.nodes[x.0].cols;
                    for i2 in 0..r2 {
                        for j in 0..w {
                            let idx = i2 * xc + start + j;
                            grads[x.0][idx] = grads[x.0][idx] + g[i2 * w + j];
                        }
                    }
                }
                Op::Row { x, index } => {
                    let c2 = node.cols;
                    for j in 0..c2 {
                        let idx = index * c2 + j;
                        grads[x.0][idx] = grads[x.0][idx] + g[j];
                    }
                }
                Op::Sigmoid { x } => {
                    for (k, gv) in g.iter().enumerate() {
                        let s = node.values[k];
                        grads[x.0][k] = grads[x.0][k] + *gv * s * (F::one() - s);
                    }
                }
                Op::Tanh { x } => {
                    for (k, gv) in g.iter().enumerate() {
                        let t = node.values[k];
                        grads[x.0][k] = grads[x.0][k] + *gv * (F::one() - t * t);
                    }
                }
                Op::SoftmaxRows { x } => {
                    let (r2, c2) = (node.rows, node.cols);
                    for i2 in 0..r2 {
                        let row = &node.values[i2 * c2..(i2 + 1) * c2];
                        let grow = &g[i2 * c2..(i2 + 1) * c2];
                        let mut dot = F::zero();
                        for j in 0..c2 {
                            dot = dot + grow[j] * row[j];
                        }
                        for j in 0..c2 {
                            let idx = i2 * c2 + j;
                            grads[x.0][idx] = grads[x.0][idx] + row[j] * (grow[j] - dot);
                        }
                    }
                }
                Op::Ln { x } => {
                    let xv = &self.nodes[x.0].values;
                    for (k, gv) in g.iter().enumerate() {
                        grads[x.0][k] = grads[x.0][k] + *gv / xv[k];
                    }
                }
                Op::ClampMin { x, floor } => {
                    let xv = &self.nodes[x.0].values;
                    for (k, gv) in g.iter().enumerate() {
                        if xv[k] > *floor {
                            grads[x.0][k] = grads[x.0][k] + *gv;
                        }
                    }
                }
                Op::Pick { x, row, col } => {
                    let c2 = self.nodes[x.0].cols;
                    let idx = row * c2 + col;
                    grads[x.0][idx] = grads[x.0][idx] + g[0];
                }
                Op::SumAll { x } => {
                    let gv = g[0];
                    for slot in grads[x.0].iter_mut() {
                        *slot = *slot + gv;
                    }
                }
                Op::ScaleBy { x, s } => {
                    let sv = self.nodes[s.0].values[0];
                    axpy(&mut grads[x.0], &g, sv);
                    let xv = &self.nodes[x.0].values;
                    let mut acc = F::zero();
                    for (k, gv) in g.iter().enumerate() {
                        acc = acc + *gv * xv[k];
                    }
                    grads[s.0][0] = grads[s.0][0] + acc;
                }
                Op::PadCols { x } => {
                    let (r2, total) = (node.rows, node.cols);
                    let xc = self.nodes[x.0].cols;
                    for i2 in 0..r2 {
                        for j in 0..xc {
                            let idx = i2 * xc + j;
                            grads[x.0][idx] = grads[x.0][idx] + g[i2 * total + j];
                        }
                    }
                }
                Op::ScatterAddCols { x, mapping } => {
                    for (j, &target) in mapping.iter().enumerate() {
                        grads[x.0][j] = grads[x.0][j] + g[target];
                    }
                }
                Op::Dropout { x, mask } => {
                    for (k, gv) in g.iter().enumerate() {
                        grads[x.0][k] = grads[x.0][k] + *gv * mask[k];
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Gradients produced by [`Tape::backward`]. Interior-node buffers are
/// consumed during the sweep; only leaf gradients remain readable.
pub struct Gradients<F: Scalar> {
    grads: Vec<Vec<F>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn get(&self, id: NodeId) -> &[F] {
        &self.grads[id.0]
    }
}

fn axpy<F: Scalar>(dst: &mut [F], src: &[F], scale: F) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d = *d + *s * scale;
    }
}

fn matmul_raw<F: Scalar>(a: &[F], b: &[F], m: usize, k: usize, n: usize) -> Vec<F> {
    let mut out = vec![F::zero(); m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == F::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] = orow[j] + av * brow[j];
            }
        }
    }
    out
}
