use std::path::Path;

use super::MultiGameModel;
use crate::agent::{QNet, TokenMap};
use crate::env::{GameSpec, Vocabulary};
use crate::nn::{Checkpoint, CheckpointError, ParamStore};
use crate::Error;

impl MultiGameModel {
    /// Wrap a single-game teacher, whose embedding rows follow the game's
    /// own vocabulary.
    pub fn from_teacher(net: QNet<f32>, spec: &GameSpec) -> Self {
        Self {
            net,
            vocab: spec.vocab.clone(),
            token_maps: vec![TokenMap::identity()],
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::from_params(&self.net.params, self.vocab.words())
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        Ok(self.to_checkpoint().save(path)?)
    }

    /// Rebuild a model and bind the controllers named by `specs` to their
    /// games. Every spec must have a controller in the checkpoint; the
    /// error names the missing ones. Controllers without a spec stay
    /// loaded but reject observations.
    pub fn from_checkpoint(ckpt: &Checkpoint, specs: &[&GameSpec]) -> Result<Self, Error> {
        let mut params = ParamStore::new();
        for (name, t) in &ckpt.arrays {
            params.add(name.clone(), t.clone())?;
        }
        let net = QNet::from_params(params)?;
        let vocab = Vocabulary::from_words(ckpt.vocab.iter().cloned());
        if vocab.len() != ckpt.vocab.len() || vocab.len() != net.dims().vocab {
            return Err(Error::Checkpoint(CheckpointError::BadArray {
                name: crate::agent::EMBEDDING.into(),
                reason: format!(
                    "{} rows for a vocabulary of {} distinct words",
                    net.dims().vocab,
                    vocab.len()
                ),
            }));
        }
        let missing: Vec<String> = specs
            .iter()
            .filter(|s| net.head_index(&s.game_id).is_none())
            .map(|s| format!("heads.{}.*", s.game_id))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Checkpoint(CheckpointError::Architecture {
                missing: missing.join(", "),
                unexpected: String::new(),
            }));
        }
        let mut token_maps = vec![TokenMap::remap(Vec::new()); net.heads().len()];
        for spec in specs {
            let head = net.head_index(&spec.game_id).expect("checked above");
            let h = &net.heads()[head];
            if (h.n_actions, h.n_objects) != (spec.actions.len(), spec.objects.len()) {
                return Err(Error::Config(format!(
                    "controller {} scores {}x{} commands, the game has {}x{}",
                    spec.game_id,
                    h.n_actions,
                    h.n_objects,
                    spec.actions.len(),
                    spec.objects.len()
                )));
            }
            let map = spec
                .vocab
                .words()
                .iter()
                .map(|w| {
                    vocab
                        .get(w)
                        .ok_or_else(|| Error::Config(format!("checkpoint vocabulary lacks {w:?} from {}", spec.game_id)))
                })
                .collect::<Result<Vec<u32>, _>>()?;
            let identity = map.iter().enumerate().all(|(i, &r)| i as u32 == r) && map.len() == vocab.len();
            token_maps[head] = if identity { TokenMap::identity() } else { TokenMap::remap(map) };
        }
        Ok(Self {
            net,
            vocab,
            token_maps,
        })
    }

    pub fn load(path: &Path, specs: &[&GameSpec]) -> Result<Self, Error> {
        Self::from_checkpoint(&Checkpoint::load(path)?, specs)
    }
}
