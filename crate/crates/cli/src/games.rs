use std::path::Path;

use tgpd_core::env::{bundled_game, parse_game_spec, GameSpec};

use crate::Failure;

/// A game document path, or the id of a bundled game (`game1` .. `game5`).
pub fn load_game(reference: &str) -> Result<GameSpec, Failure> {
    let path = Path::new(reference);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read game {}: {e}", path.display())))?;
        return parse_game_spec(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(reference);
    bundled_game(stem).map_err(|_| Failure::Config(format!("no game document or bundled game named {reference:?}")))
}
