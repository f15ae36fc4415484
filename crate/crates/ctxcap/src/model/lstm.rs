//! Standard LSTM cell expressed in tape operations.

use crate::tensor::{NodeId, Result, Scalar, Tape};

/// Hidden and cell vectors as plain values, for carrying state between tapes
/// (decoding builds one small tape per step).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<F: Scalar> {
    pub hidden: Vec<F>,
    pub cell: Vec<F>,
}

impl<F: Scalar> LstmState<F> {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState {
            hidden: vec![F::zero(); hidden_dim],
            cell: vec![F::zero(); hidden_dim],
        }
    }
}

/// Hidden and cell nodes on a tape.
#[derive(Debug, Clone, Copy)]
pub struct LstmNodes {
    pub hidden: NodeId,
    pub cell: NodeId,
}

impl LstmNodes {
    pub fn zeros<F: Scalar>(tape: &mut Tape<F>, hidden_dim: usize) -> Self {
        LstmNodes {
            hidden: tape.zeros(1, hidden_dim),
            cell: tape.zeros(1, hidden_dim),
        }
    }

    pub fn from_state<F: Scalar>(tape: &mut Tape<F>, state: &LstmState<F>) -> Result<Self> {
        let n = state.hidden.len();
        Ok(LstmNodes {
            hidden: tape.leaf(state.hidden.clone(), 1, n)?,
            cell: tape.leaf(state.cell.clone(), 1, n)?,
        })
    }

    pub fn to_state<F: Scalar>(&self, tape: &Tape<F>) -> LstmState<F> {
        LstmState {
            hidden: tape.value(self.hidden).to_vec(),
            cell: tape.value(self.cell).to_vec(),
        }
    }
}

/// One LSTM step. `w` is `[input_dim + hidden, 4*hidden]` with gate blocks
/// ordered input, forget, candidate, output; `b` is `[1, 4*hidden]`.
///
/// With all-zero parameters and zero state the cell is a fixed point: every
/// gate sits at 0.5, the candidate at tanh(0) = 0, so hidden and cell stay 0.
pub fn lstm_step<F: Scalar>(
    tape: &mut Tape<F>,
    x: NodeId,
    prev: &LstmNodes,
    w: NodeId,
    b: NodeId,
) -> Result<LstmNodes> {
    let (_, hidden) = tape.shape(prev.hidden);
    let input = tape.concat_cols(&[x, prev.hidden])?;
    let wx = tape.matmul(input, w)?;
    let pre = tape.add(wx, b)?;

    let i_pre = tape.slice_cols(pre, 0, hidden)?;
    let f_pre = tape.slice_cols(pre, hidden, 2 * hidden)?;
    let g_pre = tape.slice_cols(pre, 2 * hidden, 3 * hidden)?;
    let o_pre = tape.slice_cols(pre, 3 * hidden, 4 * hidden)?;

    let i_gate = tape.sigmoid(i_pre);
    let f_gate = tape.sigmoid(f_pre);
    let g_cand = tape.tanh(g_pre);
    let o_gate = tape.sigmoid(o_pre);

    let keep = tape.mul(f_gate, prev.cell)?;
    let write = tape.mul(i_gate, g_cand)?;
    let cell = tape.add(keep, write)?;
    let cell_act = tape.tanh(cell);
    let hidden_out = tape.mul(o_gate, cell_act)?;

    Ok(LstmNodes {
        hidden: hidden_out,
        cell,
    })
}
