//! Single-game LSTM-DQN agents and the Q-learning machinery shared with
//! the multi-task baseline.

mod dqn;
mod eval;
mod hyper;
mod log;
mod net;
mod policy;
mod replay;
mod tokens;

pub use dqn::{new_teacher, run_dqn, train_step, train_teacher, DqnGame, DqnStats, TargetNet};
pub use eval::{
    evaluate, evaluate_all_starts, evaluate_policy, run_episode, EvalResult, FixedPolicy, NetPolicy, OptimalPolicy,
    Policy,
};
pub use hyper::{EpsilonSchedule, HyperParams};
pub use log::{LogRow, TrainingLog, LOG_HEADER};
pub use net::{Forward, Head, NetDims, QNet, EMBEDDING, LINEAR1_BIAS, LINEAR1_WEIGHT};
pub use policy::{best_pair_value, epsilon_greedy, greedy_command, select_command, td_target};
pub use replay::{ReplayBuffer, TokenInterner, Tokens, Transition};
pub use tokens::TokenMap;
