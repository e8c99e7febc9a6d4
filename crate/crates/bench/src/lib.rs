//! Shared fixtures for the criterion benchmarks.

use tgpd_core::agent::{new_teacher, HyperParams, QNet, ReplayBuffer, TokenMap, Transition};
use tgpd_core::env::{bundled_game, GameSpec};

/// Game 1 with a fresh teacher at the default sizes.
pub fn teacher() -> (GameSpec, QNet<f32>) {
    let spec = bundled_game("game1").expect("bundled");
    let net = new_teacher(&spec, &HyperParams::default(), 0).expect("valid sizes");
    (spec, net)
}

/// Observation token sequences from `n` resets of `spec`.
pub fn observations(spec: &GameSpec, n: usize) -> Vec<Vec<u32>> {
    (0..n as u64)
        .map(|seed| {
            let (_, obs) = spec.reset(seed);
            TokenMap::identity().encode(spec, &obs.text).expect("non-empty")
        })
        .collect()
}

/// A replay buffer of random-looking transitions over real observations.
pub fn buffer(spec: &GameSpec, n: usize) -> ReplayBuffer {
    let obs = observations(spec, n + 1);
    let mut buf = ReplayBuffer::new(n);
    for i in 0..n {
        buf.push(Transition {
            state: obs[i].clone().into(),
            action: i % spec.actions.len(),
            object: i % spec.objects.len(),
            reward: if i % 7 == 0 { 0.99 } else { -0.01 },
            next_state: obs[i + 1].clone().into(),
            done: i % 7 == 0,
        });
    }
    buf
}
