use std::fmt::Write as _;
use std::path::Path;

use crate::nn::write_atomic;
use crate::Error;

pub const LOG_HEADER: &str = "step,game_id,avg_reward,quest_completion,epsilon,loss";

/// One evaluation checkpoint of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub step: u64,
    pub game_id: String,
    pub avg_reward: f64,
    pub quest_completion: f64,
    pub epsilon: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn for_game<'a>(&'a self, game_id: &'a str) -> impl Iterator<Item = &'a LogRow> + 'a {
        self.rows.iter().filter(move |r| r.game_id == game_id)
    }

    /// First logged step at which `game_id` reaches `completion`.
    pub fn first_step_reaching(&self, game_id: &str, completion: f64) -> Option<u64> {
        self.for_game(game_id)
            .find(|r| r.quest_completion >= completion)
            .map(|r| r.step)
    }

    pub fn last<'a>(&'a self, game_id: &'a str) -> Option<&'a LogRow> {
        self.for_game(game_id).last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(LOG_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                r.step, r.game_id, r.avg_reward, r.quest_completion, r.epsilon, r.loss
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        write_atomic(path, self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self, Error> {
        let mut lines = text.lines();
        if lines.next() != Some(LOG_HEADER) {
            return Err(Error::Config("training log header mismatch".into()));
        }
        let bad = |n: usize| Error::Config(format!("malformed training log row {n}"));
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(n));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(n));
            rows.push(LogRow {
                step: f[0].parse().map_err(|_| bad(n))?,
                game_id: f[1].to_owned(),
                avg_reward: num(2)?,
                quest_completion: num(3)?,
                epsilon: num(4)?,
                loss: num(5)?,
            });
        }
        Ok(Self { rows })
    }
}
