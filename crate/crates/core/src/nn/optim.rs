use super::{NnError, ParamStore, Real};

/// Plain SGD step with global-norm clipping; zeroes every gradient afterwards.
///
/// Frozen parameters and frozen rows are excluded from the norm and left
/// untouched. Returns the pre-clip gradient norm.
pub fn sgd_update<T: Real>(params: &mut ParamStore<T>, lr: f64, clip_norm: f64) -> Result<f64, NnError> {
    if !(lr > 0.0) {
        return Err(NnError::InvalidLearningRate(lr));
    }
    let mut sq = 0.0;
    for p in params.iter_mut() {
        if p.frozen {
            continue;
        }
        if p.frozen_rows.is_empty() {
            sq += p.grad.sum_squares();
        } else {
            for r in 0..p.grad.rows() {
                if !p.is_row_frozen(r) {
                    sq += p.grad.row(r).iter().map(|v| v.as_f64().powi(2)).sum::<f64>();
                }
            }
        }
    }
    let norm = sq.sqrt();
    let factor = if clip_norm > 0.0 && norm > clip_norm {
        clip_norm / norm
    } else {
        1.0
    };
    let step = T::from_f64(lr * factor);
    for p in params.iter_mut() {
        if !p.frozen {
            let cols = p.value.cols();
            let masked = !p.frozen_rows.is_empty();
            for (i, (v, &g)) in p.value.data_mut().iter_mut().zip(p.grad.data()).enumerate() {
                if masked && p.frozen_rows.get(i / cols).copied().unwrap_or(false) {
                    continue;
                }
                *v -= step * g;
            }
            if !p.value.is_finite() {
                return Err(NnError::NonFinite("sgd_update"));
            }
        }
        p.grad.fill(T::zero());
    }
    Ok(norm)
}
