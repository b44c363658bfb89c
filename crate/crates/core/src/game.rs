//! Normal-form games as dense payoff tensors.
//!
//! Utilities are the multilinear contractions of the payoff tensors with the
//! players' mixed strategies. Every evaluation routine accepts any block
//! list (`&[Vec<f64>]`), so the same code serves points on the simplex and
//! the multilinear extension used by finite-difference checks.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{centering, face_projector};

/// Largest dense game accepted (total payoff entries per player).
pub const MAX_ENTRIES: usize = 10_000_000;
/// Absolute tolerance for ties in pure-strategy payoffs.
pub const TIE_TOL: f64 = 1e-9;
/// Tolerance on block sums for [`JointStrategy`].
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Probabilities at or below this value are treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// An N-player normal-form game with one dense payoff tensor per player,
/// stored flat in row-major `(i_1, …, i_N)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    name: String,
    shape: Vec<usize>,
    strides: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

/// A point in the product of probability simplices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStrategy {
    blocks: Vec<Vec<f64>>,
}

/// A joint direction in the product of simplex tangent spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    blocks: Vec<Vec<f64>>,
}

/// Strategic/non-strategic split of one player's utility,
/// `f_n(x) = A_n(x_{-n})·x_n + b_n(x_{-n})`, with `b_n` the mean pure payoff.
#[derive(Debug, Clone)]
pub struct StrategicDecomposition {
    game: NormalFormGame,
    player: usize,
}

/// A game re-expressed around a base point: utilities are functions of the
/// offset `y = x − x*`, keep only terms that depend on the player's own
/// offset, and the base point sits at the origin.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    strategic: NormalFormGame,
    center: JointStrategy,
}

#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    players: usize,
    shape: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
    #[serde(default)]
    name: String,
}

fn strides_for(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

impl NormalFormGame {
    /// Builds a game from per-player flat row-major payoff arrays.
    ///
    /// Strategy counts of 1 are allowed so that support-restricted (reduced)
    /// games can be represented; game files require at least 2.
    pub fn new(shape: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if shape.len() < 2 {
            return Err(Error::Argument(format!(
                "a game needs at least 2 players, got {}",
                shape.len()
            )));
        }
        if shape.contains(&0) {
            return Err(Error::Argument("every player needs at least one strategy".into()));
        }
        let total = shape
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .filter(|&t| t <= MAX_ENTRIES)
            .ok_or_else(|| {
                Error::Resource(format!("game of shape {shape:?} exceeds {MAX_ENTRIES} entries"))
            })?;
        if payoffs.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "{} payoff tensors for {} players",
                payoffs.len(),
                shape.len()
            )));
        }
        for (n, t) in payoffs.iter().enumerate() {
            if t.len() != total {
                return Err(Error::Dimension(format!(
                    "payoff tensor {n} has {} entries, shape {shape:?} needs {total}",
                    t.len()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("payoff tensor {n} has non-finite entries")));
            }
        }
        Ok(Self {
            name: String::new(),
            strides: strides_for(&shape),
            shape,
            payoffs,
        })
    }

    /// Two-player game from row-player and column-player payoff matrices.
    pub fn bimatrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        if a.shape() != b.shape() {
            return Err(Error::Dimension("bimatrix payoff shapes differ".into()));
        }
        let (r, c) = a.shape();
        let flat = |m: &DMatrix<f64>| {
            let mut v = Vec::with_capacity(r * c);
            for i in 0..r {
                for j in 0..c {
                    v.push(m[(i, j)]);
                }
            }
            v
        };
        Self::new(vec![r, c], vec![flat(a), flat(b)])
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Random game with payoffs uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Result<Self> {
        let total: usize = shape.iter().product();
        let payoffs = (0..shape.len())
            .map(|_| (0..total).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        Self::new(shape.to_vec(), payoffs)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if file.players != file.shape.len() {
            return Err(Error::Parse(format!(
                "\"players\" is {} but \"shape\" has {} entries",
                file.players,
                file.shape.len()
            )));
        }
        if let Some(k) = file.shape.iter().find(|&&k| k < 2) {
            return Err(Error::Parse(format!("every player needs at least 2 strategies, got {k}")));
        }
        let game = Self::new(file.shape, file.payoffs).map_err(|e| match e {
            Error::Resource(_) => e,
            other => Error::Parse(other.to_string()),
        })?;
        Ok(game.with_name(file.name))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> String {
        let file = GameFile {
            players: self.num_players(),
            shape: self.shape.clone(),
            payoffs: self.payoffs.clone(),
            name: self.name.clone(),
        };
        serde_json::to_string_pretty(&file).expect("game serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_players(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn num_entries(&self) -> usize {
        self.payoffs[0].len()
    }

    /// Flat payoff tensor of player `n`.
    pub fn payoffs(&self, n: usize) -> &[f64] {
        &self.payoffs[n]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Payoff of player `n` at a pure profile.
    pub fn payoff(&self, n: usize, idx: &[usize]) -> f64 {
        self.payoffs[n][self.flat_index(idx)]
    }

    fn check_shape(&self, x: &[Vec<f64>]) -> Result<()> {
        if x.len() != self.num_players() {
            return Err(Error::Dimension(format!(
                "strategy has {} blocks, game has {} players",
                x.len(),
                self.num_players()
            )));
        }
        for (n, (b, &k)) in x.iter().zip(&self.shape).enumerate() {
            if b.len() != k {
                return Err(Error::Dimension(format!(
                    "block {n} has length {}, player has {k} strategies",
                    b.len()
                )));
            }
        }
        Ok(())
    }

    fn check_player(&self, n: usize) -> Result<()> {
        if n >= self.num_players() {
            return Err(Error::Argument(format!("player {n} out of range")));
        }
        Ok(())
    }

    /// Contracts player `n`'s tensor with every block except the axes in
    /// `free`; returns the remaining tensor flattened over `free` in order.
    fn contract(&self, n: usize, x: &[Vec<f64>], free: &[usize]) -> Vec<f64> {
        let nplayers = self.num_players();
        let out_len: usize = free.iter().map(|&a| self.shape[a]).product();
        let mut out = vec![0.0; out_len];
        let mut is_free = vec![false; nplayers];
        for &a in free {
            is_free[a] = true;
        }
        let tensor = &self.payoffs[n];
        let mut idx = vec![0usize; nplayers];
        for &t in tensor.iter() {
            let mut w = 1.0;
            for a in 0..nplayers {
                if !is_free[a] {
                    w *= x[a][idx[a]];
                }
            }
            if w != 0.0 {
                let mut o = 0;
                for &a in free {
                    o = o * self.shape[a] + idx[a];
                }
                out[o] += w * t;
            }
            // odometer, last axis fastest (row-major)
            for a in (0..nplayers).rev() {
                idx[a] += 1;
                if idx[a] < self.shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    /// Expected payoff `f_n(x)`.
    pub fn utility(&self, x: &(impl AsRef<[Vec<f64>]> + ?Sized), n: usize) -> Result<f64> {
        let x = x.as_ref();
        self.check_shape(x)?;
        self.check_player(n)?;
        Ok(self.contract(n, x, &[])[0])
    }

    /// Ambient gradient of `f_n` in block `n`: `v_i = f_n(e_i; x_{-n})`.
    pub fn gradient(&self, x: &(impl AsRef<[Vec<f64>]> + ?Sized), n: usize) -> Result<Vec<f64>> {
        let x = x.as_ref();
        self.check_shape(x)?;
        self.check_player(n)?;
        Ok(self.contract(n, x, &[n]))
    }

    /// Raw second cross-derivative `M_ij = f_n(x_n := e_i, x_m := e_j, rest)`.
    pub fn raw_cross_hessian(
        &self,
        x: &(impl AsRef<[Vec<f64>]> + ?Sized),
        n: usize,
        m: usize,
    ) -> Result<DMatrix<f64>> {
        let x = x.as_ref();
        self.check_shape(x)?;
        self.check_player(n)?;
        self.check_player(m)?;
        if n == m {
            return Err(Error::Argument(
                "cross_hessian needs distinct players; diagonal blocks are zero".into(),
            ));
        }
        let flat = self.contract(n, x, &[n, m]);
        Ok(DMatrix::from_row_slice(self.shape[n], self.shape[m], &flat))
    }

    /// Tangent-space cross-Hessian `Π_n M Π_m`.
    pub fn cross_hessian(
        &self,
        x: &(impl AsRef<[Vec<f64>]> + ?Sized),
        n: usize,
        m: usize,
    ) -> Result<DMatrix<f64>> {
        let raw = self.raw_cross_hessian(x, n, m)?;
        Ok(centering(self.shape[n]) * raw * centering(self.shape[m]))
    }

    /// Cross-Hessian projected onto the tangent spaces of the given faces.
    pub fn cross_hessian_on_faces(
        &self,
        x: &(impl AsRef<[Vec<f64>]> + ?Sized),
        n: usize,
        m: usize,
        support_n: &[usize],
        support_m: &[usize],
    ) -> Result<DMatrix<f64>> {
        let raw = self.raw_cross_hessian(x, n, m)?;
        Ok(face_projector(self.shape[n], support_n) * raw * face_projector(self.shape[m], support_m))
    }

    pub fn strategic_decompose(&self, n: usize) -> Result<StrategicDecomposition> {
        self.check_player(n)?;
        Ok(StrategicDecomposition {
            game: self.clone(),
            player: n,
        })
    }

    /// Best pure-strategy payoff for player `n` and every index within
    /// [`TIE_TOL`] of it.
    pub fn best_response_values(
        &self,
        x: &(impl AsRef<[Vec<f64>]> + ?Sized),
        n: usize,
    ) -> Result<(f64, Vec<usize>)> {
        let g = self.gradient(x, n)?;
        let best = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmax = g
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= best - TIE_TOL)
            .map(|(i, _)| i)
            .collect();
        Ok((best, argmax))
    }

    /// `max_n [max_i f_n(e_i; x_{-n}) − f_n(x)]`.
    pub fn epsilon_nash_gap(&self, x: &(impl AsRef<[Vec<f64>]> + ?Sized)) -> Result<f64> {
        let x = x.as_ref();
        self.check_shape(x)?;
        let mut gap = f64::NEG_INFINITY;
        for n in 0..self.num_players() {
            let g = self.contract(n, x, &[n]);
            let best = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let value: f64 = g.iter().zip(&x[n]).map(|(a, b)| a * b).sum();
            gap = gap.max(best - value);
        }
        Ok(gap)
    }

    /// The purely strategic game: each tensor minus its mean over the
    /// player's own index. Strategically equivalent to `self`.
    pub fn strategic_part(&self) -> NormalFormGame {
        let mut out = self.clone();
        for n in 0..self.num_players() {
            let k = self.shape[n];
            let stride = self.strides[n];
            let t = &self.payoffs[n];
            let dst = &mut out.payoffs[n];
            for (flat, v) in dst.iter_mut().enumerate() {
                let i_n = (flat / stride) % k;
                let base = flat - i_n * stride;
                let mean: f64 = (0..k).map(|j| t[base + j * stride]).sum::<f64>() / k as f64;
                *v = t[flat] - mean;
            }
        }
        out
    }

    /// Recenters the game at an interior base point and drops
    /// non-strategic terms.
    pub fn to_canonical(&self, x_star: &JointStrategy) -> Result<CanonicalForm> {
        self.check_shape(x_star.blocks())?;
        if !x_star.is_interior() {
            return Err(Error::Domain("canonical form needs an interior base point".into()));
        }
        Ok(CanonicalForm {
            strategic: self.strategic_part(),
            center: x_star.clone(),
        })
    }

    /// Adds non-strategic offsets: `offsets[n]` is a tensor over `x_{-n}`
    /// (row-major over the other players' axes) added to `T^n` for every
    /// choice of player `n`'s own index.
    pub fn with_offsets(&self, offsets: &[Vec<f64>]) -> Result<NormalFormGame> {
        if offsets.len() != self.num_players() {
            return Err(Error::Dimension("one offset tensor per player expected".into()));
        }
        let mut out = self.clone();
        let np = self.num_players();
        for n in 0..np {
            let others: Vec<usize> = (0..np).filter(|&a| a != n).collect();
            let need: usize = others.iter().map(|&a| self.shape[a]).product();
            if offsets[n].len() != need {
                return Err(Error::Dimension(format!(
                    "offset {n} has {} entries, needs {need}",
                    offsets[n].len()
                )));
            }
            let mut idx = vec![0usize; np];
            for v in out.payoffs[n].iter_mut() {
                let mut o = 0;
                for &a in &others {
                    o = o * self.shape[a] + idx[a];
                }
                *v += offsets[n][o];
                for a in (0..np).rev() {
                    idx[a] += 1;
                    if idx[a] < self.shape[a] {
                        break;
                    }
                    idx[a] = 0;
                }
            }
        }
        Ok(out)
    }

    /// Multiplies player `n`'s payoff tensor by `c`.
    pub fn scale_player(&self, n: usize, c: f64) -> Result<NormalFormGame> {
        self.check_player(n)?;
        let mut out = self.clone();
        out.payoffs[n].iter_mut().for_each(|v| *v *= c);
        Ok(out)
    }

    /// Restricts every player to the given strategy indices.
    pub fn restrict(&self, supports: &[Vec<usize>]) -> Result<NormalFormGame> {
        if supports.len() != self.num_players() {
            return Err(Error::Dimension("one support per player expected".into()));
        }
        for (n, s) in supports.iter().enumerate() {
            if s.is_empty() || s.iter().any(|&i| i >= self.shape[n]) {
                return Err(Error::Argument(format!("invalid support for player {n}: {s:?}")));
            }
        }
        let shape: Vec<usize> = supports.iter().map(|s| s.len()).collect();
        let total: usize = shape.iter().product();
        let np = self.num_players();
        let mut payoffs = vec![Vec::with_capacity(total); np];
        let mut idx = vec![0usize; np];
        for _ in 0..total {
            let full: Vec<usize> = idx.iter().zip(supports).map(|(&i, s)| s[i]).collect();
            let f = self.flat_index(&full);
            for n in 0..np {
                payoffs[n].push(self.payoffs[n][f]);
            }
            for a in (0..np).rev() {
                idx[a] += 1;
                if idx[a] < shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(NormalFormGame::new(shape, payoffs)?.with_name(self.name.clone()))
    }
}

impl StrategicDecomposition {
    pub fn player(&self) -> usize {
        self.player
    }

    /// `A_n(x_{-n})`: centered pure-strategy payoffs. Block `n` of `x` is ignored.
    pub fn linear_part(&self, x: &(impl AsRef<[Vec<f64>]> + ?Sized)) -> Result<Vec<f64>> {
        let g = self.game.gradient(x, self.player)?;
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        Ok(g.into_iter().map(|v| v - mean).collect())
    }

    /// `b_n(x_{-n})`: mean pure-strategy payoff. Block `n` of `x` is ignored.
    pub fn offset_part(&self, x: &(impl AsRef<[Vec<f64>]> + ?Sized)) -> Result<f64> {
        let g = self.game.gradient(x, self.player)?;
        Ok(g.iter().sum::<f64>() / g.len() as f64)
    }

    /// `A_n(x_{-n})·x_n + b_n(x_{-n})`.
    pub fn reconstruct(&self, x: &(impl AsRef<[Vec<f64>]> + ?Sized)) -> Result<f64> {
        let a = self.linear_part(x)?;
        let b = self.offset_part(x)?;
        let xn = &x.as_ref()[self.player];
        Ok(a.iter().zip(xn).map(|(p, q)| p * q).sum::<f64>() + b)
    }
}

impl CanonicalForm {
    pub fn center(&self) -> &JointStrategy {
        &self.center
    }

    /// The purely strategic payoff tensors (un-translated).
    pub fn strategic_game(&self) -> &NormalFormGame {
        &self.strategic
    }

    fn shifted(&self, y: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if y.len() != self.center.blocks.len() {
            return Err(Error::Dimension("offset has wrong number of blocks".into()));
        }
        y.iter()
            .zip(&self.center.blocks)
            .map(|(a, b)| {
                if a.len() != b.len() {
                    Err(Error::Dimension("offset block length mismatch".into()))
                } else {
                    Ok(a.iter().zip(b).map(|(p, q)| p + q).collect())
                }
            })
            .collect()
    }

    /// `g_n(y) = A_n(x*_{-n} + y_{-n})·y_n`.
    pub fn utility(&self, y: &(impl AsRef<[Vec<f64>]> + ?Sized), n: usize) -> Result<f64> {
        let y = y.as_ref();
        let g = self.gradient(y, n)?;
        Ok(g.iter().zip(&y[n]).map(|(a, b)| a * b).sum())
    }

    /// Own-block gradient of `g_n`: `A_n(x*_{-n} + y_{-n})`, already tangent.
    pub fn gradient(&self, y: &(impl AsRef<[Vec<f64>]> + ?Sized), n: usize) -> Result<Vec<f64>> {
        let x = self.shifted(y.as_ref())?;
        self.strategic.gradient(&x, n)
    }

    pub fn cross_hessian(
        &self,
        y: &(impl AsRef<[Vec<f64>]> + ?Sized),
        n: usize,
        m: usize,
    ) -> Result<DMatrix<f64>> {
        let x = self.shifted(y.as_ref())?;
        self.strategic.cross_hessian(&x, n, m)
    }
}

impl JointStrategy {
    /// Validates that every block is a probability vector.
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (n, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::Domain(format!("block {n} is empty")));
            }
            if b.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Domain(format!("block {n} has negative or non-finite entries")));
            }
            let s: f64 = b.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Domain(format!("block {n} sums to {s}, not 1")));
            }
        }
        Ok(Self { blocks })
    }

    /// Clamps negatives to zero and divides each block by its sum.
    pub fn normalized(mut blocks: Vec<Vec<f64>>) -> Result<Self> {
        for b in blocks.iter_mut() {
            b.iter_mut().for_each(|v| *v = v.max(0.0));
            let s: f64 = b.iter().sum();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Domain("block has no positive mass".into()));
            }
            b.iter_mut().for_each(|v| *v /= s);
        }
        Self::new(blocks)
    }

    pub fn uniform(shape: &[usize]) -> Self {
        Self {
            blocks: shape.iter().map(|&k| vec![1.0 / k as f64; k]).collect(),
        }
    }

    pub fn pure(shape: &[usize], idx: &[usize]) -> Result<Self> {
        if shape.len() != idx.len() {
            return Err(Error::Dimension("pure profile length mismatch".into()));
        }
        let mut blocks = Vec::with_capacity(shape.len());
        for (&k, &i) in shape.iter().zip(idx) {
            if i >= k {
                return Err(Error::Argument(format!("pure index {i} out of range {k}")));
            }
            let mut b = vec![0.0; k];
            b[i] = 1.0;
            blocks.push(b);
        }
        Ok(Self { blocks })
    }

    /// Uniform sample from the product of simplices (flat Dirichlet per block).
    pub fn random<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Self {
        let blocks = shape
            .iter()
            .map(|&k| {
                let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v: f64| v / s).collect()
            })
            .collect();
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.blocks
    }

    pub fn shape(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn is_interior(&self) -> bool {
        self.blocks.iter().flatten().all(|&v| v > 0.0)
    }

    pub fn support(&self, n: usize) -> Vec<usize> {
        self.blocks[n]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > SUPPORT_TOL)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        (0..self.blocks.len()).map(|n| self.support(n)).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// Euclidean distance over the concatenated blocks.
    pub fn distance(&self, other: &JointStrategy) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .zip(other.blocks.iter().flatten())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &JointStrategy) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .zip(other.blocks.iter().flatten())
            .fold(0.0, |a, (p, q)| a.max((p - q).abs()))
    }
}

impl AsRef<[Vec<f64>]> for JointStrategy {
    fn as_ref(&self) -> &[Vec<f64>] {
        &self.blocks
    }
}

impl TangentVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (n, b) in blocks.iter().enumerate() {
            let s: f64 = b.iter().sum();
            let scale = 1.0 + b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if s.abs() > SIMPLEX_TOL * scale {
                return Err(Error::Domain(format!("tangent block {n} sums to {s}, not 0")));
            }
        }
        Ok(Self { blocks })
    }

    /// Centers each block of an arbitrary vector.
    pub fn project(blocks: &[Vec<f64>]) -> Self {
        Self {
            blocks: blocks
                .iter()
                .map(|b| {
                    let m = b.iter().sum::<f64>() / b.len() as f64;
                    b.iter().map(|v| v - m).collect()
                })
                .collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl AsRef<[Vec<f64>]> for TangentVector {
    fn as_ref(&self) -> &[Vec<f64>] {
        &self.blocks
    }
}

/// Centers a single vector (project onto the simplex tangent space).
pub fn project_tangent(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn example_a_utilities_and_gradient() {
        let g = bundled::example_a();
        let x = JointStrategy::pure(g.shape(), &[1, 1]).unwrap();
        assert_eq!(g.utility(&x, 0).unwrap(), 2.0);
        assert_eq!(g.utility(&x, 1).unwrap(), 2.0);
        assert_eq!(g.gradient(&x, 0).unwrap(), vec![-1.0, 2.0, -1.0]);
        let (best, arg) = g.best_response_values(&x, 0).unwrap();
        assert_eq!(best, 2.0);
        assert_eq!(arg, vec![1]);
    }

    #[test]
    fn pure_profile_reads_tensor_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = NormalFormGame::random(&[2, 3, 2], &mut rng).unwrap();
        for idx in [[0, 0, 0], [1, 2, 1], [0, 1, 1]] {
            let x = JointStrategy::pure(g.shape(), &idx).unwrap();
            for n in 0..3 {
                assert_eq!(g.utility(&x, n).unwrap(), g.payoff(n, &idx));
            }
        }
    }

    #[test]
    fn matching_pennies_uniform() {
        let g = bundled::matching_pennies();
        let x = JointStrategy::uniform(g.shape());
        assert_eq!(g.utility(&x, 0).unwrap(), 0.0);
        let v = project_tangent(&g.gradient(&x, 0).unwrap());
        assert!(v.iter().all(|&a| a == 0.0));
        let (_, arg) = g.best_response_values(&x, 1).unwrap();
        assert_eq!(arg, vec![0, 1]);
    }

    #[test]
    fn constant_game() {
        let g = NormalFormGame::new(vec![2, 3], vec![vec![1.5; 6], vec![1.5; 6]]).unwrap();
        let x = JointStrategy::uniform(g.shape());
        assert_eq!(g.gradient(&x, 1).unwrap(), vec![1.5; 3]);
        assert_eq!(g.best_response_values(&x, 1).unwrap().1, vec![0, 1, 2]);
        assert_eq!(g.epsilon_nash_gap(&x).unwrap(), 0.0);
        let d = g.strategic_decompose(0).unwrap();
        assert!(d.linear_part(&x).unwrap().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn example_a_nash_gaps() {
        let g = bundled::example_a();
        let nash = JointStrategy::pure(g.shape(), &[1, 1]).unwrap();
        let pareto = JointStrategy::pure(g.shape(), &[0, 0]).unwrap();
        assert_eq!(g.epsilon_nash_gap(&nash).unwrap(), 0.0);
        assert_eq!(g.epsilon_nash_gap(&pareto).unwrap(), 2.0);
    }

    #[test]
    fn example_a_is_purely_strategic() {
        let g = bundled::example_a();
        assert_eq!(g.strategic_part(), g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = JointStrategy::random(g.shape(), &mut rng);
            for n in 0..2 {
                let d = g.strategic_decompose(n).unwrap();
                assert!(d.offset_part(&x).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_hessian_rejects_diagonal_and_is_constant_for_two_players() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = NormalFormGame::random(&[3, 2], &mut rng).unwrap();
        let x = JointStrategy::uniform(g.shape());
        assert!(matches!(g.cross_hessian(&x, 0, 0), Err(Error::Argument(_))));
        let y = JointStrategy::random(g.shape(), &mut rng);
        let a = g.cross_hessian(&x, 0, 1).unwrap();
        let b = g.cross_hessian(&y, 0, 1).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let g = bundled::matching_pennies();
        let bad = vec![vec![0.5, 0.5]];
        assert!(matches!(g.utility(&bad, 0), Err(Error::Dimension(_))));
        let bad = vec![vec![0.5, 0.5], vec![1.0, 0.0, 0.0]];
        assert!(matches!(g.gradient(&bad, 0), Err(Error::Dimension(_))));
        assert!(JointStrategy::new(vec![vec![0.6, 0.6]]).is_err());
        assert!(JointStrategy::new(vec![vec![1.1, -0.1]]).is_err());
    }

    #[test]
    fn canonical_form_of_matching_pennies_is_skew_bilinear() {
        let g = bundled::matching_pennies();
        let c = g.to_canonical(&JointStrategy::uniform(g.shape())).unwrap();
        let y = vec![vec![0.1, -0.1], vec![-0.2, 0.2]];
        // g_1(y) = y_1ᵀ T y_2 and g_2 = −g_1
        let u1 = c.utility(&y, 0).unwrap();
        let u2 = c.utility(&y, 1).unwrap();
        assert!(close(u1, 0.1 * (-0.2) * 1.0 * 4.0, 1e-14));
        assert!(close(u1 + u2, 0.0, 1e-14));
        let zero = vec![vec![0.0; 2], vec![0.0; 2]];
        assert_eq!(c.utility(&zero, 0).unwrap(), 0.0);
        assert!(g.to_canonical(&JointStrategy::pure(g.shape(), &[0, 0]).unwrap()).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = bundled::example_a();
        let back = NormalFormGame::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
        assert!(matches!(
            NormalFormGame::from_json_str(r#"{"players":2,"shape":[2,1],"payoffs":[[1,2],[3,4]]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            NormalFormGame::from_json_str(r#"{"players":3,"shape":[2,2],"payoffs":[[1,2,3,4],[1,2,3,4]]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            NormalFormGame::new(vec![4000, 4000], vec![vec![], vec![]]),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn restrict_slices_tensors() {
        let g = bundled::example_a();
        let r = g.restrict(&[vec![1], vec![1, 2]]).unwrap();
        assert_eq!(r.shape(), &[1, 2]);
        assert_eq!(r.payoffs(0), &[2.0, 8.0]);
        assert_eq!(r.payoffs(1), &[2.0, -1.0]);
    }
}
