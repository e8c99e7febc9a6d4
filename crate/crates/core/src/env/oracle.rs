//! Breadth-first search over the room graph.

use std::collections::VecDeque;

use super::{Command, EnvError, GameSpec};

/// Hop counts from `from` to every room (`None` when unreachable).
pub fn shortest_distances(spec: &GameSpec, from: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; spec.rooms.len()];
    dist[from] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(r) = queue.pop_front() {
        let d = dist[r].expect("queued rooms have a distance");
        for e in spec.exits.iter().filter(|e| e.from == r) {
            if dist[e.to].is_none() {
                dist[e.to] = Some(d + 1);
                queue.push_back(e.to);
            }
        }
    }
    dist
}

/// Fewest commands that complete `quest` starting in `room`.
pub fn optimal_steps(spec: &GameSpec, room: usize, quest: usize) -> Result<usize, EnvError> {
    let target = spec.quests[quest].room;
    shortest_distances(spec, room)[target]
        .map(|d| d + 1)
        .ok_or_else(|| EnvError::Unreachable {
            room: spec.rooms[room].clone(),
            quest: spec.quests[quest].id.clone(),
        })
}

/// Mean optimal episode return over every `(room, quest)` start.
pub fn optimal_average_return(spec: &GameSpec) -> Result<f64, EnvError> {
    let r = spec.rewards;
    let mut steps = 0usize;
    let mut n = 0usize;
    for (room, quest) in spec.start_states() {
        steps += optimal_steps(spec, room, quest)?;
        n += 1;
    }
    // Every start pays the completion reward once, so the mean return is
    // completion + penalty × mean steps; summing integers keeps it exact.
    Ok(r.completion_reward + r.step_penalty * (steps as f64 / n as f64))
}

/// First command of a shortest completion from `room` (lowest direction
/// index among equally short moves).
pub fn optimal_command(spec: &GameSpec, room: usize, quest: usize) -> Result<Command, EnvError> {
    let q = &spec.quests[quest];
    if room == q.room {
        return Ok(Command::new(q.action, q.object));
    }
    let here = optimal_steps(spec, room, quest)?;
    let go = spec.move_action().expect("rooms are connected only with a move action");
    let mut exits: Vec<_> = spec.exits.iter().filter(|e| e.from == room).collect();
    exits.sort_by_key(|e| e.direction);
    for e in exits {
        if optimal_steps(spec, e.to, quest).ok() == Some(here - 1) {
            return Ok(Command::new(go, e.direction));
        }
    }
    unreachable!("a room at finite distance has a neighbour one hop closer")
}
