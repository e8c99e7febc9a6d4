use std::collections::BTreeSet;

use crate::agent::TokenMap;
use crate::env::{GameSpec, Vocabulary};
use crate::Error;

/// Sorted merge of several games' vocabularies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionVocab {
    vocab: Vocabulary,
    games: Vec<GameVocab>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct GameVocab {
    game_id: String,
    /// Game-local id → union id.
    to_union: Vec<u32>,
    /// Union id → present in this game.
    mask: Vec<bool>,
}

impl UnionVocab {
    pub fn new(specs: &[&GameSpec]) -> Result<Self, Error> {
        let mut seen = BTreeSet::new();
        for (i, s) in specs.iter().enumerate() {
            if specs[..i].iter().any(|o| o.game_id == s.game_id) {
                return Err(Error::Config(format!("game {} listed twice", s.game_id)));
            }
            seen.extend(s.vocab.words().iter().cloned());
        }
        let vocab = Vocabulary::from_words(seen);
        let games = specs
            .iter()
            .map(|s| {
                let to_union: Vec<u32> = s
                    .vocab
                    .words()
                    .iter()
                    .map(|w| vocab.get(w).expect("merged"))
                    .collect();
                let mut mask = vec![false; vocab.len()];
                for &u in &to_union {
                    mask[u as usize] = true;
                }
                GameVocab {
                    game_id: s.game_id.clone(),
                    to_union,
                    mask,
                }
            })
            .collect();
        Ok(Self { vocab, games })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn game_ids(&self) -> impl Iterator<Item = &str> {
        self.games.iter().map(|g| g.game_id.as_str())
    }

    fn game(&self, game_id: &str) -> Result<&GameVocab, Error> {
        self.games
            .iter()
            .find(|g| g.game_id == game_id)
            .ok_or_else(|| Error::UnknownGame(game_id.to_owned()))
    }

    /// Which union words occur in `game_id`.
    pub fn mask(&self, game_id: &str) -> Result<&[bool], Error> {
        Ok(&self.game(game_id)?.mask)
    }

    /// Token remapping from `game_id`'s own ids into union ids.
    pub fn token_map(&self, game_id: &str) -> Result<TokenMap, Error> {
        Ok(TokenMap::remap(self.game(game_id)?.to_union.clone()))
    }
}
