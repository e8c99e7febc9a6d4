use super::{parse_game_spec, EnvError, GameSpec};

/// Ids of the games shipped under `assets/`.
pub const BUNDLED_GAMES: [&str; 5] = ["game1", "game2", "game3", "game4", "game5"];

/// Raw JSON of a bundled game.
pub fn bundled_game_text(id: &str) -> Result<&'static str, EnvError> {
    Ok(match id {
        "game1" => include_str!("../../../../assets/game1.json"),
        "game2" => include_str!("../../../../assets/game2.json"),
        "game3" => include_str!("../../../../assets/game3.json"),
        "game4" => include_str!("../../../../assets/game4.json"),
        "game5" => include_str!("../../../../assets/game5.json"),
        other => return Err(EnvError::UnknownGame(other.to_owned())),
    })
}

/// Parse a bundled game (`"game1"` … `"game5"`).
pub fn bundled_game(id: &str) -> Result<GameSpec, EnvError> {
    parse_game_spec(bundled_game_text(id)?)
}
