use crate::env::GameSpec;
use crate::Error;

/// Maps a game's own vocabulary ids onto a model's embedding rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenMap {
    /// `None` is the identity (model vocabulary = game vocabulary).
    map: Option<Vec<u32>>,
}

impl TokenMap {
    pub fn identity() -> Self {
        Self { map: None }
    }

    pub fn remap(map: Vec<u32>) -> Self {
        Self { map: Some(map) }
    }

    pub fn apply(&self, game_ids: &[u32]) -> Vec<u32> {
        match &self.map {
            None => game_ids.to_vec(),
            Some(m) => game_ids.iter().map(|&i| m[i as usize]).collect(),
        }
    }

    /// Like [`TokenMap::apply`], but rejects ids outside the map.
    pub fn try_apply(&self, game_ids: &[u32]) -> Result<Vec<u32>, Error> {
        match &self.map {
            None => Ok(game_ids.to_vec()),
            Some(m) => game_ids
                .iter()
                .map(|&i| {
                    m.get(i as usize)
                        .copied()
                        .ok_or_else(|| Error::Store(format!("token id {i} outside the {}-word vocabulary", m.len())))
                })
                .collect(),
        }
    }

    /// Tokenize observation text for the model.
    pub fn encode(&self, spec: &GameSpec, text: &str) -> Result<Vec<u32>, Error> {
        let ids = spec.encode(text)?;
        if ids.is_empty() {
            return Err(Error::EmptyObservation);
        }
        self.try_apply(&ids)
    }
}
