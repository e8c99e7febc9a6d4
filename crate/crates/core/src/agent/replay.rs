use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

/// Token sequence shared between transitions.
pub type Tokens = Arc<[u32]>;

/// One environment interaction, with observations as token ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Tokens,
    pub action: usize,
    pub object: usize,
    pub reward: f64,
    pub next_state: Tokens,
    pub done: bool,
}

/// Fixed-capacity ring of transitions with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| rng.gen_range(0..self.items.len())).collect()
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition> {
        self.sample_indices(n, rng).into_iter().map(|i| &self.items[i]).collect()
    }
}


/// Deduplicates observation token sequences. Games produce a small set of
/// distinct observations, so sharing them keeps a full buffer compact.
#[derive(Clone, Debug, Default)]
pub struct TokenInterner {
    seen: HashMap<Vec<u32>, Tokens>,
}

impl TokenInterner {
    pub fn intern(&mut self, tokens: Vec<u32>) -> Tokens {
        if let Some(t) = self.seen.get(&tokens) {
            return t.clone();
        }
        let shared: Tokens = tokens.as_slice().into();
        self.seen.insert(tokens, shared.clone());
        shared
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}
