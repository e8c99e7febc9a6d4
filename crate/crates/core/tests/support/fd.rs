//! Central finite-difference oracle for tape gradients.
//!
//! Shared with the acceptance suite; independent of the reverse sweep
//! except for reading loss values off a freshly built tape.

use tgpd_core::nn::{NodeId, ParamStore, Tape};

/// Worst relative error between reverse-mode and central-difference
/// gradients, over every parameter array in `store`.
///
/// Relative error per array is `‖a − n‖ / (‖a‖ + ‖n‖)`, zero when both vanish.
pub fn max_relative_error<F>(store: &mut ParamStore<f64>, loss: F) -> f64
where
    F: Fn(&ParamStore<f64>, &mut Tape<f64>) -> NodeId,
{
    let eps = 1e-5;
    store.zero_grad();
    let mut tape = Tape::new();
    let l = loss(store, &mut tape);
    tape.backward(l, store).expect("scalar loss");
    let analytic: Vec<Vec<f64>> = store.iter().map(|(_, p)| p.grad.data().to_vec()).collect();
    store.zero_grad();

    let eval = |s: &ParamStore<f64>| {
        let mut tape = Tape::new();
        let l = loss(s, &mut tape);
        tape.value(l).data()[0]
    };

    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    let mut worst = 0.0f64;
    for (k, id) in ids.into_iter().enumerate() {
        let n = store.get(id).value.len();
        let mut numeric = vec![0.0; n];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = store.get(id).value.data()[i];
            store.get_mut(id).value.data_mut()[i] = orig + eps;
            let up = eval(store);
            store.get_mut(id).value.data_mut()[i] = orig - eps;
            let down = eval(store);
            store.get_mut(id).value.data_mut()[i] = orig;
            *slot = (up - down) / (2.0 * eps);
        }
        worst = worst.max(relative(&analytic[k], &numeric));
    }
    worst
}

pub fn relative(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
