//! JSON game files.
//!
//! ```json
//! {"players":[{"id":"p1","weight":"1/2"}],
//!  "resources":["r1","r2"],
//!  "strategies":{"p1":[["r1"],["r2"]]},
//!  "latency":{"r1":{"family":"poly_sum","params":[0,1]},
//!             "r2":{"family":"constant","params":[3]}}}
//! ```
//!
//! Weights are decimal or `num/den` strings (plain JSON numbers are read
//! through their decimal text).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::game::{Game, GameError, Player};
use crate::latency::{LatencyFunction, LatencySpec};
use crate::rational::{parse_rational, render_rational, RationalParseError};

#[derive(Debug, Error)]
pub enum GameFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed game JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("weight of player `{player}`: {source}")]
    Weight { player: String, source: RationalParseError },
    #[error("weight of player `{0}` must be a string or number")]
    WeightType(String),
    #[error("no latency given for resource `{0}`")]
    MissingLatency(String),
    #[error("latency given for unknown resource `{0}`")]
    UnknownLatencyResource(String),
    #[error("no strategies given for player `{0}`")]
    MissingStrategies(String),
    #[error("strategies given for unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("player `{player}` uses unknown resource `{resource}`")]
    UnknownResource { player: String, resource: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlayer {
    id: String,
    weight: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    players: Vec<RawPlayer>,
    resources: Vec<String>,
    strategies: BTreeMap<String, Vec<Vec<String>>>,
    latency: BTreeMap<String, LatencyFunction>,
}

pub fn game_from_json(text: &str) -> Result<Game, GameFileError> {
    let raw: RawGame = serde_json::from_str(text)?;
    let mut players = Vec::with_capacity(raw.players.len());
    for p in &raw.players {
        let text = match &p.weight {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(GameFileError::WeightType(p.id.clone())),
        };
        let weight =
            parse_rational(&text).map_err(|source| GameFileError::Weight { player: p.id.clone(), source })?;
        players.push(Player { id: p.id.clone(), weight });
    }
    let index: HashMap<&str, usize> = raw.resources.iter().enumerate().map(|(k, r)| (r.as_str(), k)).collect();
    if let Some(r) = raw.latency.keys().find(|r| !index.contains_key(r.as_str())) {
        return Err(GameFileError::UnknownLatencyResource(r.clone()));
    }
    if let Some(p) = raw.strategies.keys().find(|id| !players.iter().any(|p| &p.id == *id)) {
        return Err(GameFileError::UnknownPlayer(p.clone()));
    }
    let latency = raw
        .resources
        .iter()
        .map(|r| raw.latency.get(r).cloned().ok_or_else(|| GameFileError::MissingLatency(r.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut strategies = Vec::with_capacity(players.len());
    for p in &players {
        let sets = raw.strategies.get(&p.id).ok_or_else(|| GameFileError::MissingStrategies(p.id.clone()))?;
        let mut out = Vec::with_capacity(sets.len());
        for s in sets {
            let mut idx = Vec::with_capacity(s.len());
            for r in s {
                let k = index.get(r.as_str()).ok_or_else(|| GameFileError::UnknownResource {
                    player: p.id.clone(),
                    resource: r.clone(),
                })?;
                idx.push(*k);
            }
            out.push(idx);
        }
        strategies.push(out);
    }
    Ok(Game::new(players, raw.resources, strategies, latency)?)
}

pub fn read_game(path: &Path) -> Result<Game, GameFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| GameFileError::Io { path: path.display().to_string(), source })?;
    game_from_json(&text)
}

pub fn game_to_json(game: &Game) -> Value {
    let players: Vec<Value> =
        game.players().iter().map(|p| json!({"id": p.id, "weight": render_rational(&p.weight)})).collect();
    let names = game.resources();
    let strategies: serde_json::Map<String, Value> = game
        .players()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let sets: Vec<Vec<&str>> = game
                .strategies(k)
                .iter()
                .map(|s| s.resources().iter().map(|&r| names[r].as_str()).collect())
                .collect();
            (p.id.clone(), json!(sets))
        })
        .collect();
    let latency: serde_json::Map<String, Value> = names
        .iter()
        .enumerate()
        .map(|(r, n)| (n.clone(), json!(LatencySpec::from(game.latency(r).clone()))))
        .collect();
    json!({"players": players, "resources": names, "strategies": strategies, "latency": latency})
}
