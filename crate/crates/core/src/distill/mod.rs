//! Teacher data stores, the multi-controller student, the distillation
//! trainer and the multi-task Q-learning baseline.

mod multitask;
mod persist;
mod store;
mod student;
mod vocab;

pub use multitask::train_multitask_lstm_dqn;
pub use store::{
    generate_teacher_data, DistillSample, GameStore, TeacherRollout, TeacherStore, STORE_MAGIC, STORE_VERSION,
};
pub use student::{distill_loss, new_student, train_student, DistillStats, MultiGameModel};
pub use vocab::UnionVocab;

#[cfg(test)]
mod tests;
