use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointStrategy, NormalFormGame};

/// Largest number of grid points any oracle will enumerate.
pub const MAX_GRID_POINTS: usize = 1_000_000;
/// Default points per simplex edge.
pub const DEFAULT_RESOLUTION: usize = 21;
/// Strict improvement margin.
pub const IMPROVEMENT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ParetoVerdict {
    /// No strict joint improvement at this resolution.
    OptimalAtResolution { resolution: usize },
    Improvement { point: JointStrategy, utilities: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionVerdict {
    pub coalition: Vec<usize>,
    pub witness: Option<JointStrategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongNashReport {
    pub resolution: usize,
    pub coalitions: Vec<CoalitionVerdict>,
    pub strong_nash: bool,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(usize::MAX as u128) as usize
}

/// Points of the simplex of dimension `k` with coordinates in
/// `{0, 1/(r−1), …, 1}`.
pub fn simplex_grid_size(k: usize, resolution: usize) -> usize {
    binomial(resolution - 1 + k - 1, k - 1)
}

/// All grid points of one simplex, in lexicographic order of the integer
/// compositions (vertices included).
pub fn simplex_grid(k: usize, resolution: usize) -> Vec<Vec<f64>> {
    let m = resolution - 1;
    let mut out = Vec::with_capacity(simplex_grid_size(k, resolution));
    let mut comp = vec![0usize; k];
    fn rec(i: usize, left: usize, m: usize, comp: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        let k = comp.len();
        if i == k - 1 {
            comp[i] = left;
            out.push(comp.iter().map(|&c| c as f64 / m as f64).collect());
            return;
        }
        for c in (0..=left).rev() {
            comp[i] = c;
            rec(i + 1, left - c, m, comp, out);
        }
    }
    rec(0, m, m, &mut comp, &mut out);
    out
}

fn grid_total(shape: &[usize], players: &[usize], resolution: usize) -> Option<usize> {
    players
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(simplex_grid_size(shape[n], resolution)))
}

/// Largest resolution ≤ [`DEFAULT_RESOLUTION`] whose full product grid
/// fits under [`MAX_GRID_POINTS`].
pub fn default_resolution(shape: &[usize]) -> usize {
    let all: Vec<usize> = (0..shape.len()).collect();
    (2..=DEFAULT_RESOLUTION)
        .rev()
        .find(|&r| grid_total(shape, &all, r).is_some_and(|t| t <= MAX_GRID_POINTS))
        .unwrap_or(2)
}

fn check_resolution(game: &NormalFormGame, players: &[usize], resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(Error::Argument("grid resolution must be at least 2".into()));
    }
    match grid_total(game.shape(), players, resolution) {
        Some(t) if t <= MAX_GRID_POINTS => Ok(()),
        t => Err(Error::Resource(format!(
            "grid of {} points exceeds the limit of {MAX_GRID_POINTS}",
            t.map_or("more than usize::MAX".into(), |v| v.to_string())
        ))),
    }
}

/// First point (pure profiles first, then the grid in order) where every
/// player in `players` gains more than [`IMPROVEMENT_MARGIN`], with the
/// other blocks fixed at `x_star`.
fn search_improvement(
    game: &NormalFormGame,
    x_star: &JointStrategy,
    players: &[usize],
    resolution: usize,
) -> Result<Option<(JointStrategy, Vec<f64>)>> {
    let shape = game.shape();
    let base: Vec<f64> = players
        .iter()
        .map(|&n| game.utility(x_star, n))
        .collect::<Result<_>>()?;
    let evaluate = |grids: &[Vec<Vec<f64>>], flat: usize| -> Option<(JointStrategy, Vec<f64>)> {
        let mut blocks = x_star.blocks().to_vec();
        let mut rem = flat;
        for (p, &n) in players.iter().enumerate().rev() {
            let g = &grids[p];
            blocks[n] = g[rem % g.len()].clone();
            rem /= g.len();
        }
        let utils: Vec<f64> = players.iter().map(|&n| game.utility(&blocks, n).expect("shape checked")).collect();
        utils
            .iter()
            .zip(&base)
            .all(|(u, b)| *u > b + IMPROVEMENT_MARGIN)
            .then(|| (JointStrategy::new(blocks).expect("grid points are on the simplex"), utils))
    };
    let pure: Vec<Vec<Vec<f64>>> = players
        .iter()
        .map(|&n| {
            (0..shape[n])
                .map(|i| {
                    let mut e = vec![0.0; shape[n]];
                    e[i] = 1.0;
                    e
                })
                .collect()
        })
        .collect();
    let npure: usize = pure.iter().map(|g| g.len()).product();
    if let Some(hit) = (0..npure).find_map(|f| evaluate(&pure, f)) {
        return Ok(Some(hit));
    }
    let grids: Vec<Vec<Vec<f64>>> = players.iter().map(|&n| simplex_grid(shape[n], resolution)).collect();
    let total: usize = grids.iter().map(|g| g.len()).product();
    Ok((0..total).into_par_iter().find_map_first(|f| evaluate(&grids, f)))
}

/// Grid search for `x` with `f_n(x) > f_n(x*)` for every player.
pub fn weak_pareto_oracle(game: &NormalFormGame, x_star: &JointStrategy, grid_resolution: usize) -> Result<ParetoVerdict> {
    if x_star.shape() != game.shape() {
        return Err(Error::Dimension("point does not match the game shape".into()));
    }
    let all: Vec<usize> = (0..game.num_players()).collect();
    check_resolution(game, &all, grid_resolution)?;
    Ok(match search_improvement(game, x_star, &all, grid_resolution)? {
        Some((point, utilities)) => ParetoVerdict::Improvement { point, utilities },
        None => ParetoVerdict::OptimalAtResolution {
            resolution: grid_resolution,
        },
    })
}

/// Per-coalition grid search for joint deviations that strictly improve
/// every member, other players held at `x_star`.
pub fn strong_nash_oracle(game: &NormalFormGame, x_star: &JointStrategy, grid_resolution: usize) -> Result<StrongNashReport> {
    let n = game.num_players();
    if n > 4 {
        return Err(Error::Argument("strong Nash oracle supports at most 4 players".into()));
    }
    if x_star.shape() != game.shape() {
        return Err(Error::Dimension("point does not match the game shape".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    check_resolution(game, &all, grid_resolution)?;
    let mut coalitions = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let witness = search_improvement(game, x_star, &members, grid_resolution)?.map(|(p, _)| p);
        coalitions.push(CoalitionVerdict {
            coalition: members,
            witness,
        });
    }
    coalitions.sort_by(|a, b| a.coalition.len().cmp(&b.coalition.len()).then(a.coalition.cmp(&b.coalition)));
    Ok(StrongNashReport {
        resolution: grid_resolution,
        strong_nash: coalitions.iter().all(|c| c.witness.is_none()),
        coalitions,
    })
}
