//! Parsers for the textual flag values.

use std::str::FromStr;

use gamedyn::{Error, JointStrategy, Regularizer, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Step size: a number or `auto` for the sampled threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    Auto,
    Value(f64),
}

impl FromStr for Eta {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Eta::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected a number or \"auto\", got {s:?}"))?;
        if !(v > 0.0 && v < 1.0) {
            return Err(format!("eta must lie in (0, 1), got {v}"));
        }
        Ok(Eta::Value(v))
    }
}

/// Comma-separated floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Floats(pub Vec<f64>);

impl FromStr for Floats {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        float_list(s).map(Floats)
    }
}

pub fn float_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let out: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
        return Err(format!("expected a non-empty list of finite numbers, got {s:?}"));
    }
    Ok(out)
}

pub fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

/// Profile syntax: `uniform`, `random`, `pure:i,j,…` (0-indexed) or
/// `mixed:p,q;r,s;…` (one block per player, renormalized).
pub fn strategy(arg: &str, shape: &[usize], seed: u64) -> Result<JointStrategy> {
    let bad = |msg: String| Error::Parse(format!("profile {arg:?}: {msg}"));
    if arg == "uniform" {
        return Ok(JointStrategy::uniform(shape));
    }
    if arg == "random" {
        return Ok(JointStrategy::random(shape, &mut ChaCha8Rng::seed_from_u64(seed)));
    }
    if let Some(rest) = arg.strip_prefix("pure:") {
        let idx: Vec<usize> = rest
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| bad(format!("not an index: {t:?}"))))
            .collect::<Result<_>>()?;
        if idx.len() != shape.len() {
            return Err(bad(format!("{} indices for {} players", idx.len(), shape.len())));
        }
        return JointStrategy::pure(shape, &idx).map_err(|e| bad(e.to_string()));
    }
    if let Some(rest) = arg.strip_prefix("mixed:") {
        let blocks: Vec<Vec<f64>> = rest
            .split(';')
            .map(|b| float_list(b).map_err(bad))
            .collect::<Result<_>>()?;
        if blocks.len() != shape.len() || blocks.iter().zip(shape).any(|(b, &k)| b.len() != k) {
            return Err(bad(format!("block sizes do not match shape {shape:?}")));
        }
        return JointStrategy::normalized(blocks).map_err(|e| bad(e.to_string()));
    }
    Err(bad("expected uniform, random, pure:… or mixed:…".into()))
}

/// A regularizer given as inline JSON or as a path to a JSON file. An
/// object applies to every player; an array gives one per player.
pub fn regularizers(arg: &str, num_players: usize) -> Result<Vec<Regularizer>> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Parse(format!("{arg}: {e}")))?
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("regularizer: {e}")))?;
    let regs: Vec<Regularizer> = if value.is_array() {
        serde_json::from_value(value).map_err(|e| Error::Parse(format!("regularizer: {e}")))?
    } else {
        let r: Regularizer = serde_json::from_value(value).map_err(|e| Error::Parse(format!("regularizer: {e}")))?;
        vec![r; num_players]
    };
    if regs.len() != num_players {
        return Err(Error::Parse(format!("{} regularizers for {num_players} players", regs.len())));
    }
    for r in &regs {
        r.validate().map_err(|e| Error::Parse(format!("regularizer: {e}")))?;
    }
    Ok(regs)
}
