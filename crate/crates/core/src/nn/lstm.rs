use rand::Rng;

use super::{NnError, NodeId, ParamId, ParamStore, Real, Tape, Tensor};

/// Parameters of one LSTM cell. Gate columns are ordered input, forget,
/// candidate, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmParams {
    pub w_x: ParamId,
    pub w_h: ParamId,
    pub bias: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

/// An [`LstmParams`] bundle snapshotted onto a tape.
#[derive(Clone, Copy, Debug)]
pub struct LstmNodes {
    pub w_x: NodeId,
    pub w_h: NodeId,
    pub bias: NodeId,
    pub hidden: usize,
}

impl LstmParams {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let bound = 1.0 / (hidden as f64).sqrt();
        let w_x = store.add(
            format!("{prefix}.w_x"),
            uniform(&[input_dim, 4 * hidden], bound, rng),
        )?;
        let w_h = store.add(
            format!("{prefix}.w_h"),
            uniform(&[hidden, 4 * hidden], bound, rng),
        )?;
        let mut b = vec![T::zero(); 4 * hidden];
        // Forget gate starts open.
        b[hidden..2 * hidden].iter_mut().for_each(|v| *v = T::one());
        let bias = store.add(format!("{prefix}.bias"), Tensor::vector(b))?;
        Ok(Self {
            w_x,
            w_h,
            bias,
            input_dim,
            hidden,
        })
    }

    /// Look up an existing bundle by name prefix.
    pub fn find<T: Real>(store: &ParamStore<T>, prefix: &str) -> Result<Self, NnError> {
        let get = |n: &str| {
            store
                .id(&format!("{prefix}.{n}"))
                .ok_or_else(|| NnError::MissingParam(format!("{prefix}.{n}")))
        };
        let (w_x, w_h, bias) = (get("w_x")?, get("w_h")?, get("bias")?);
        let hidden = store.value(w_h).rows();
        let input_dim = store.value(w_x).rows();
        if store.value(w_x).cols() != 4 * hidden
            || store.value(w_h).cols() != 4 * hidden
            || store.value(bias).len() != 4 * hidden
        {
            return Err(NnError::Shape(format!("inconsistent LSTM bundle {prefix}")));
        }
        Ok(Self {
            w_x,
            w_h,
            bias,
            input_dim,
            hidden,
        })
    }

    pub fn bind<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>) -> LstmNodes {
        LstmNodes {
            w_x: tape.param(store, self.w_x),
            w_h: tape.param(store, self.w_h),
            bias: tape.param(store, self.bias),
            hidden: self.hidden,
        }
    }
}

/// One LSTM step on a batch: `x` is `[B×d]`, `h` and `c` are `[B×H]`.
///
/// `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`.
pub fn lstm_step<T: Real>(
    tape: &mut Tape<T>,
    cell: &LstmNodes,
    x: NodeId,
    h: NodeId,
    c: NodeId,
) -> Result<(NodeId, NodeId), NnError> {
    let hid = cell.hidden;
    if tape.value(h).cols() != hid || tape.value(c).shape() != tape.value(h).shape() {
        return Err(NnError::Shape(format!(
            "lstm state {:?}/{:?} for hidden size {hid}",
            tape.value(h).shape(),
            tape.value(c).shape()
        )));
    }
    let gates = tape.lstm_gates(x, h, cell.w_x, cell.w_h, cell.bias)?;
    let c_next = tape.lstm_cell(gates, c)?;
    let h_next = tape.lstm_hidden(gates, c_next)?;
    Ok((h_next, c_next))
}

/// Tensor with entries drawn uniformly from `[-bound, bound)`.
pub fn uniform<T: Real, R: Rng + ?Sized>(shape: &[usize], bound: f64, rng: &mut R) -> Tensor<T> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
        .collect();
    Tensor::new(shape, data).expect("shape product matches")
}
