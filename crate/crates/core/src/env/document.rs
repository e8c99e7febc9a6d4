//! Game-spec JSON documents.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::vocab::{tokenize, Vocabulary};
use super::{EnvError, Exit, GameSpec, QuestSpec, MOVE_ACTION};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub game_id: String,
    pub rooms: Vec<String>,
    pub exits: Vec<ExitDocument>,
    pub objects: BTreeMap<String, String>,
    pub descriptions: BTreeMap<String, Vec<String>>,
    pub quests: Vec<QuestDocument>,
    pub actions: Vec<String>,
    pub objects_vocab: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitDocument {
    pub from: String,
    pub direction: String,
    pub to: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestDocument {
    pub id: String,
    pub texts: Vec<String>,
    pub room: String,
    pub action: String,
    pub object: String,
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> EnvError {
    EnvError::Invalid {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Parse and validate a game-spec document.
pub fn parse_game_spec(text: &str) -> Result<GameSpec, EnvError> {
    let doc: GameDocument =
        serde_json::from_str(text).map_err(|e| invalid("$", e.to_string()))?;
    // Key order of the original text decides vocabulary order.
    let raw: serde_json::Value =
        serde_json::from_str(text).map_err(|e| invalid("$", e.to_string()))?;
    let keys = |v: Option<&serde_json::Value>| -> Vec<String> {
        v.and_then(|v| v.as_object())
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    };
    let order = KeyOrder {
        top_level: keys(Some(&raw)),
        descriptions: keys(raw.get("descriptions")),
    };
    GameSpec::from_document(doc, &order)
}

/// Order in which keys appeared in the source text. Empty lists fall back
/// to field order and `rooms` order.
#[derive(Clone, Debug, Default)]
pub struct KeyOrder {
    pub top_level: Vec<String>,
    pub descriptions: Vec<String>,
}

impl GameSpec {
    /// Validate a document. `order` fixes the first-seen vocabulary order.
    pub fn from_document(doc: GameDocument, order: &KeyOrder) -> Result<Self, EnvError> {
        if doc.game_id.trim().is_empty() {
            return Err(invalid("game_id", "empty"));
        }
        if doc.rooms.is_empty() {
            return Err(invalid("rooms", "no rooms"));
        }
        let mut room_index = HashMap::new();
        for (i, r) in doc.rooms.iter().enumerate() {
            if room_index.insert(r.clone(), i).is_some() {
                return Err(invalid(format!("rooms[{i}]"), format!("duplicate room {r:?}")));
            }
        }
        let unique = |list: &[String], path: &str| -> Result<(), EnvError> {
            let mut seen = HashSet::new();
            for (i, w) in list.iter().enumerate() {
                if tokenize(w) != [w.clone()] {
                    return Err(invalid(format!("{path}[{i}]"), format!("{w:?} is not a single lowercase word")));
                }
                if !seen.insert(w) {
                    return Err(invalid(format!("{path}[{i}]"), format!("duplicate word {w:?}")));
                }
            }
            Ok(())
        };
        unique(&doc.actions, "actions")?;
        unique(&doc.objects_vocab, "objects_vocab")?;
        let action_index = |w: &str| doc.actions.iter().position(|a| a == w);
        let object_index = |w: &str| doc.objects_vocab.iter().position(|o| o == w);

        let mut exits = Vec::with_capacity(doc.exits.len());
        let mut seen_exit = HashSet::new();
        for (i, e) in doc.exits.iter().enumerate() {
            let from = *room_index
                .get(&e.from)
                .ok_or_else(|| invalid(format!("exits[{i}].from"), format!("unknown room {:?}", e.from)))?;
            let to = *room_index
                .get(&e.to)
                .ok_or_else(|| invalid(format!("exits[{i}].to"), format!("unknown room {:?}", e.to)))?;
            let direction = object_index(&e.direction).ok_or_else(|| {
                invalid(
                    format!("exits[{i}].direction"),
                    format!("{:?} is not in objects_vocab", e.direction),
                )
            })?;
            if !seen_exit.insert((from, direction)) {
                return Err(invalid(format!("exits[{i}]"), "duplicate exit direction for room"));
            }
            exits.push(Exit { from, direction, to });
        }
        if !exits.is_empty() && action_index(MOVE_ACTION).is_none() {
            return Err(invalid("actions", format!("exits require the {MOVE_ACTION:?} action")));
        }
        for (i, e) in exits.iter().enumerate() {
            if !exits.iter().any(|b| b.from == e.to && b.to == e.from) {
                return Err(invalid(
                    format!("exits[{i}]"),
                    format!(
                        "no exit leads back from {:?} to {:?}",
                        doc.rooms[e.to], doc.rooms[e.from]
                    ),
                ));
            }
        }

        for room in doc.objects.keys() {
            if !room_index.contains_key(room) {
                return Err(invalid(format!("objects.{room}"), "unknown room"));
            }
        }
        let mut room_objects = Vec::with_capacity(doc.rooms.len());
        for r in &doc.rooms {
            let word = doc
                .objects
                .get(r)
                .ok_or_else(|| invalid(format!("objects.{r}"), "room has no object"))?;
            let o = object_index(word).ok_or_else(|| {
                invalid(format!("objects.{r}"), format!("{word:?} is not in objects_vocab"))
            })?;
            room_objects.push(o);
        }

        for room in doc.descriptions.keys() {
            if !room_index.contains_key(room) {
                return Err(invalid(format!("descriptions.{room}"), "unknown room"));
            }
        }
        let mut descriptions = Vec::with_capacity(doc.rooms.len());
        for r in &doc.rooms {
            let list = doc
                .descriptions
                .get(r)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| invalid(format!("descriptions.{r}"), "empty description list"))?;
            for (i, d) in list.iter().enumerate() {
                if tokenize(d).is_empty() {
                    return Err(invalid(format!("descriptions.{r}[{i}]"), "no words"));
                }
            }
            descriptions.push(list.clone());
        }

        if doc.quests.is_empty() {
            return Err(invalid("quests", "no quests"));
        }
        let mut quests = Vec::with_capacity(doc.quests.len());
        let mut quest_ids = HashSet::new();
        for (i, q) in doc.quests.iter().enumerate() {
            let path = format!("quests[{i}]");
            if !quest_ids.insert(q.id.clone()) {
                return Err(invalid(format!("{path}.id"), format!("duplicate quest id {:?}", q.id)));
            }
            if q.texts.is_empty() {
                return Err(invalid(format!("{path}.texts"), "no quest texts"));
            }
            for (j, t) in q.texts.iter().enumerate() {
                if tokenize(t).is_empty() {
                    return Err(invalid(format!("{path}.texts[{j}]"), "no words"));
                }
            }
            let room = *room_index
                .get(&q.room)
                .ok_or_else(|| invalid(format!("{path}.room"), format!("unknown room {:?}", q.room)))?;
            let action = action_index(&q.action)
                .ok_or_else(|| invalid(format!("{path}.action"), format!("{:?} is not an action", q.action)))?;
            if q.action == MOVE_ACTION {
                return Err(invalid(format!("{path}.action"), "a quest cannot be completed by moving"));
            }
            let object = object_index(&q.object)
                .ok_or_else(|| invalid(format!("{path}.object"), format!("{:?} is not in objects_vocab", q.object)))?;
            if room_objects[room] != object {
                return Err(invalid(
                    format!("{path}.object"),
                    format!("{:?} is not the object in {:?}", q.object, q.room),
                ));
            }
            quests.push(QuestSpec {
                id: q.id.clone(),
                texts: q.texts.clone(),
                room,
                action,
                object,
            });
        }

        let mut vocab = Vocabulary::new();
        let mut sections: Vec<&str> = order.top_level.iter().map(String::as_str).collect();
        for k in ["descriptions", "quests", "actions", "objects_vocab"] {
            if !sections.contains(&k) {
                sections.push(k);
            }
        }
        let mut desc_rooms: Vec<&String> = order
            .descriptions
            .iter()
            .filter(|r| doc.descriptions.contains_key(*r))
            .collect();
        if desc_rooms.len() != doc.descriptions.len() {
            desc_rooms = doc.rooms.iter().collect();
        }
        for key in sections {
            match key {
                "descriptions" => {
                    for r in &desc_rooms {
                        for d in &doc.descriptions[*r] {
                            for w in tokenize(d) {
                                vocab.insert(w);
                            }
                        }
                    }
                }
                "quests" => {
                    for q in &doc.quests {
                        for t in &q.texts {
                            for w in tokenize(t) {
                                vocab.insert(w);
                            }
                        }
                    }
                }
                "actions" => doc.actions.iter().for_each(|w| {
                    vocab.insert(w.clone());
                }),
                "objects_vocab" => doc.objects_vocab.iter().for_each(|w| {
                    vocab.insert(w.clone());
                }),
                _ => {}
            }
        }

        Ok(GameSpec {
            game_id: doc.game_id,
            rooms: doc.rooms,
            exits,
            room_objects,
            descriptions,
            quests,
            actions: doc.actions,
            objects: doc.objects_vocab,
            vocab,
            rewards: Default::default(),
        })
    }
}
