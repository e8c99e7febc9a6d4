use super::{NnError, NodeId, Real, Tape, Tensor};

impl<T: Real> Tape<T> {
    /// `(y − q[action])²` for a single Q-vector; only the selected slot
    /// receives gradient.
    pub fn squared_td_loss(&mut self, q: NodeId, action: usize, y: T) -> Result<NodeId, NnError> {
        let n = self.value(q).len();
        if action >= n {
            return Err(NnError::IndexOutOfRange { index: action, len: n });
        }
        self.selected_squared_error(q, &[(0, action, y)], T::one())
    }

    /// `KL(p ‖ softmax(q))` for a single target distribution.
    pub fn kl_loss(&mut self, p: &Tensor<T>, q_logits: NodeId) -> Result<NodeId, NnError> {
        let shape = self.value(q_logits).shape().to_vec();
        let target = Tensor::new(&shape, p.data().to_vec())
            .map_err(|_| NnError::Shape(format!("target {:?} for {:?}", p.shape(), shape)))?;
        self.kl_div(q_logits, target, T::one())
    }
}

/// `softmax(q / tau)` outside of any tape.
pub fn softmax_t<T: Real>(q: &[T], tau: T) -> Result<Vec<T>, NnError> {
    if !(tau > T::zero()) {
        return Err(NnError::InvalidTemperature(tau.as_f64()));
    }
    let mut out = q.to_vec();
    super::tape::softmax_row(&mut out, tau);
    Ok(out)
}

/// `Σ p ln(p / softmax(q))` outside of any tape.
pub fn kl_value<T: Real>(p: &[T], q_logits: &[T]) -> T {
    super::tape::kl_row(p, q_logits)
}
