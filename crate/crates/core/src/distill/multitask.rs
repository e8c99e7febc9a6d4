use super::{MultiGameModel, UnionVocab};
use crate::agent::{run_dqn, train_teacher, DqnGame, HyperParams, NetDims, QNet, TokenMap, TrainingLog};
use crate::env::GameSpec;
use crate::rng::{self, Stream};
use crate::Error;

/// Multi-task LSTM-DQN baseline: a shared trunk with one controller per
/// game, trained by Q-learning with the game switched every episode and a
/// separate replay buffer per game.
///
/// A single game degenerates to [`train_teacher`] exactly.
pub fn train_multitask_lstm_dqn(
    specs: &[&GameSpec],
    hp: &HyperParams,
    seed: u64,
    budget: u64,
) -> Result<(MultiGameModel, TrainingLog), Error> {
    match specs {
        [] => Err(Error::Config("multi-task training needs at least one game".into())),
        [spec] => {
            let (net, log) = train_teacher(spec, hp, seed, budget)?;
            let model = MultiGameModel {
                net,
                vocab: spec.vocab.clone(),
                token_maps: vec![TokenMap::identity()],
            };
            Ok((model, log))
        }
        _ => {
            let union = UnionVocab::new(specs)?;
            let dims = NetDims {
                vocab: union.len(),
                d_emb: hp.d_emb,
                hidden: hp.hidden,
                linear1: hp.linear1,
            };
            let heads: Vec<_> = specs
                .iter()
                .map(|s| (s.game_id.clone(), s.actions.len(), s.objects.len()))
                .collect();
            let net = QNet::new(dims, &heads, &mut rng::substream(seed, Stream::Init, 0))?;
            let token_maps: Vec<TokenMap> = specs
                .iter()
                .map(|s| union.token_map(&s.game_id))
                .collect::<Result<_, _>>()?;
            let games: Vec<DqnGame> = specs
                .iter()
                .zip(&token_maps)
                .enumerate()
                .map(|(head, (spec, tokens))| DqnGame {
                    spec,
                    head,
                    tokens: tokens.clone(),
                })
                .collect();
            let (net, log, _) = run_dqn(net, &games, hp, seed, budget)?;
            Ok((
                MultiGameModel {
                    net,
                    vocab: union.vocab().clone(),
                    token_maps,
                },
                log,
            ))
        }
    }
}
