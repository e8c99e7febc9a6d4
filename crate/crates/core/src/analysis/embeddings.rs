use std::fmt::Write as _;
use std::path::Path;

use crate::agent::{QNet, TokenMap};
use crate::env::GameSpec;
use crate::nn::{write_atomic, Real, Tape};
use crate::Error;

pub const EMBEDDING_HEADER_PREFIX: &str = "word,game_id";

/// LSTM output for each word of `spec` fed alone from the zero state.
pub fn word_vectors<T: Real>(net: &QNet<T>, spec: &GameSpec, tokens: &TokenMap) -> Result<Vec<(String, Vec<T>)>, Error> {
    let words = spec.vocab.words();
    let ids = tokens.try_apply(&(0..words.len() as u32).collect::<Vec<_>>())?;
    let seqs: Vec<[u32; 1]> = ids.iter().map(|&i| [i]).collect();
    let views: Vec<&[u32]> = seqs.iter().map(|s| s.as_slice()).collect();
    let mut tape = Tape::new();
    let h = net.encode(&mut tape, &views)?;
    let h = tape.value(h);
    Ok(words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), h.row(i).to_vec()))
        .collect())
}

/// CSV rows `word,game_id,h_1,…,h_H` for every word of `spec`.
pub fn embeddings_csv<T: Real>(net: &QNet<T>, spec: &GameSpec, tokens: &TokenMap) -> Result<String, Error> {
    let hidden = net.dims().hidden;
    let mut s = String::from(EMBEDDING_HEADER_PREFIX);
    for k in 1..=hidden {
        let _ = write!(s, ",h_{k}");
    }
    s.push('\n');
    for (word, v) in word_vectors(net, spec, tokens)? {
        let _ = write!(s, "{word},{}", spec.game_id);
        for x in v {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn export_word_embeddings<T: Real>(
    net: &QNet<T>,
    spec: &GameSpec,
    tokens: &TokenMap,
    out: &Path,
) -> Result<(), Error> {
    Ok(write_atomic(out, embeddings_csv(net, spec, tokens)?.as_bytes())?)
}
