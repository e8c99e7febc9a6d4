use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::agent::QNet;
use crate::env::Vocabulary;
use crate::nn::Tensor;
use crate::rng::{substream, Stream};
use crate::Error;

/// Embedding-transfer agents. A1–A3 take one teacher each, A4 the student,
/// A5 nothing (random embeddings), A6 every teacher at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransferMode {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
}

impl TransferMode {
    pub const ALL: [TransferMode; 6] = [Self::A1, Self::A2, Self::A3, Self::A4, Self::A5, Self::A6];

    fn check_sources(self, n: usize) -> Result<(), Error> {
        let ok = match self {
            Self::A5 => n == 0,
            Self::A6 => n >= 1,
            _ => n == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("transfer mode {self} cannot take {n} embedding source(s)")))
        }
    }
}

impl fmt::Display for TransferMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown transfer mode {s:?}; expected A1..A6")))
    }
}

/// Word embeddings of a trained model, rows indexed by `vocab`.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddingSource<'a> {
    pub name: &'a str,
    pub vocab: &'a Vocabulary,
    pub embedding: &'a Tensor<f32>,
}

impl<'a> EmbeddingSource<'a> {
    pub fn from_net(name: &'a str, net: &'a QNet<f32>, vocab: &'a Vocabulary) -> Self {
        Self {
            name,
            vocab,
            embedding: net.params.value(net.embedding_id()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransferPlan<'a> {
    pub mode: TransferMode,
    pub sources: Vec<EmbeddingSource<'a>>,
    pub freeze: bool,
}

/// Words copied into the target, grouped by the source they came from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransferReport {
    pub copied: Vec<(String, Vec<String>)>,
    pub frozen_rows: usize,
}

impl TransferReport {
    pub fn total_copied(&self) -> usize {
        self.copied.iter().map(|(_, w)| w.len()).sum()
    }
}

/// Overwrite `target`'s embedding rows for words that `plan`'s sources
/// know, leaving other rows at their random initial values.
///
/// When several sources know a word the source is drawn uniformly from
/// the Analysis stream of `seed`. Copied rows are frozen if `plan.freeze`;
/// in mode A5 nothing is copied and the whole random table is frozen.
pub fn transfer_initialize(
    plan: &TransferPlan<'_>,
    target: &mut QNet<f32>,
    target_vocab: &Vocabulary,
    seed: u64,
) -> Result<TransferReport, Error> {
    plan.mode.check_sources(plan.sources.len())?;
    let d = target.dims().d_emb;
    if target_vocab.len() != target.dims().vocab {
        return Err(Error::Config(format!(
            "target vocabulary has {} words but the embedding has {} rows",
            target_vocab.len(),
            target.dims().vocab
        )));
    }
    for s in &plan.sources {
        if s.embedding.cols() != d || s.embedding.rows() != s.vocab.len() {
            return Err(Error::Config(format!(
                "source {} embeds {} words in {} dimensions, target expects {d}",
                s.name,
                s.embedding.rows(),
                s.embedding.cols()
            )));
        }
    }

    let mut rng = substream(seed, Stream::Analysis, 2);
    let mut report = TransferReport {
        copied: plan.sources.iter().map(|s| (s.name.to_owned(), Vec::new())).collect(),
        frozen_rows: 0,
    };
    let emb = target.embedding_id();
    let param = target.params.get_mut(emb);
    let mut frozen = vec![false; target_vocab.len()];
    for (row, word) in target_vocab.words().iter().enumerate() {
        let holders: Vec<(usize, u32)> = plan
            .sources
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.vocab.get(word).map(|r| (i, r)))
            .collect();
        let (src, src_row) = match holders.len() {
            0 => continue,
            1 => holders[0],
            n => holders[rng.gen_range(0..n)],
        };
        param
            .value
            .row_mut(row)
            .copy_from_slice(plan.sources[src].embedding.row(src_row as usize));
        report.copied[src].1.push(word.clone());
        frozen[row] = plan.freeze;
    }
    if plan.mode == TransferMode::A5 && plan.freeze {
        param.frozen = true;
        report.frozen_rows = frozen.len();
    } else {
        report.frozen_rows = frozen.iter().filter(|&&f| f).count();
        param.frozen_rows = frozen;
    }
    Ok(report)
}
