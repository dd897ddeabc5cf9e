//! JSON game specifications: `{"players": N, "values": {"<mask>": score}}`.
//!
//! Keys are coalition bitmasks (bit `i` = player `i`) written in decimal or
//! as `0b…` binary. Coalitions without an entry score 0.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use g2l_core::game::Game;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Largest game a bitmask key can describe.
pub const MAX_PLAYERS: usize = 64;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    players: usize,
    #[serde(default)]
    values: BTreeMap<String, f64>,
}

/// Game stored as a sparse map from coalition mask to score.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGame {
    players: usize,
    values: HashMap<u64, f64>,
}

impl SparseGame {
    pub fn new(players: usize, values: HashMap<u64, f64>) -> Result<Self> {
        if players > MAX_PLAYERS {
            return Err(Error::Data(format!(
                "games are limited to {MAX_PLAYERS} players, got {players}"
            )));
        }
        for (&mask, &v) in &values {
            if players < 64 && mask >> players != 0 {
                return Err(Error::Data(format!(
                    "coalition {mask:#b} names a player outside 0..{players}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Data(format!("coalition {mask:#b} has non-finite score")));
            }
        }
        Ok(SparseGame { players, values })
    }

    pub fn value(&self, mask: u64) -> f64 {
        self.values.get(&mask).copied().unwrap_or(0.0)
    }
}

impl Game for SparseGame {
    fn players(&self) -> usize {
        self.players
    }

    fn score(&self, members: &[bool]) -> f64 {
        let mask = members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        self.value(mask)
    }
}

fn parse_mask(key: &str) -> Option<u64> {
    match key.strip_prefix("0b") {
        Some(bits) => u64::from_str_radix(bits, 2).ok(),
        None => key.parse().ok(),
    }
}

pub fn parse(path: &Path, text: &str) -> Result<SparseGame> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut values = HashMap::with_capacity(file.values.len());
    for (key, v) in file.values {
        let mask = parse_mask(&key).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            location: format!("key {key:?}"),
            message: "coalition keys must be decimal or 0b-prefixed binary bitmasks".into(),
        })?;
        if values.insert(mask, v).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                location: format!("key {key:?}"),
                message: "coalition listed twice".into(),
            });
        }
    }
    SparseGame::new(file.players, values)
}

pub fn load(path: &Path) -> Result<SparseGame> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(path, &text)
}
