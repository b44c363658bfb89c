//! The β-smoothed best-response map, its Jacobian, and β-smoothed
//! equilibria.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointStrategy, NormalFormGame};
use crate::linalg::block_diag;
use crate::regularizer::Regularizer;
use crate::stability::{game_jacobian_full, BlockMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedResponseConfig {
    pub beta: f64,
    pub regularizers: Vec<Regularizer>,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_inner_max_iter")]
    pub inner_max_iter: usize,
}

fn default_inner_tol() -> f64 {
    1e-12
}

fn default_inner_max_iter() -> usize {
    10_000
}

impl SmoothedResponseConfig {
    pub fn new(beta: f64, regularizers: Vec<Regularizer>) -> Self {
        Self {
            beta,
            regularizers,
            inner_tol: default_inner_tol(),
            inner_max_iter: default_inner_max_iter(),
        }
    }

    /// Entropy for each of `num_players` players.
    pub fn entropy(beta: f64, num_players: usize) -> Self {
        Self::new(beta, vec![Regularizer::Entropy; num_players])
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self {
            beta,
            ..self.clone()
        }
    }

    pub fn validate(&self, game: &NormalFormGame) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Argument(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::Argument("inner_tol must be positive".into()));
        }
        if self.regularizers.len() != game.num_players() {
            return Err(Error::Dimension(format!(
                "{} regularizers for {} players",
                self.regularizers.len(),
                game.num_players()
            )));
        }
        for (n, r) in self.regularizers.iter().enumerate() {
            r.validate()?;
            if let Some(d) = r.dimension() {
                if d != game.shape()[n] {
                    return Err(Error::Dimension(format!(
                        "regularizer {n} has dimension {d}, player has {} strategies",
                        game.shape()[n]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `max_n (max h_n − min h_n)`, the constant in `nash_gap ≤ Cβ`.
    pub fn range_constant(&self, game: &NormalFormGame) -> Result<f64> {
        let mut c: f64 = 0.0;
        for (r, &k) in self.regularizers.iter().zip(game.shape()) {
            c = c.max(r.range_bound(k)?);
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedEquilibrium {
    pub point: JointStrategy,
    pub beta: f64,
    /// `‖Φ^β(x) − x‖∞`.
    pub residual: f64,
    pub nash_gap: f64,
}

/// Numerically stable softmax; entries are clamped to the smallest positive
/// normal so the output stays interior.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp().max(f64::MIN_POSITIVE)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `argmax_x v·x − β h(x)` over the simplex. Entropy uses the softmax
/// closed form, the quadratic kind [`newton_argmax`].
pub fn regularized_argmax(r: &Regularizer, v: &[f64], beta: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    match r {
        Regularizer::Entropy => {
            let z: Vec<f64> = v.iter().map(|a| a / beta).collect();
            Ok(softmax(&z))
        }
        _ => newton_argmax(r, v, beta, tol, max_iter),
    }
}

/// Damped Newton method for `argmax_x v·x − β h(x)` on the open simplex.
///
/// Steps solve the Jacobi-scaled bordered system, are cut back to stay
/// strictly inside the simplex, and pass an Armijo test on the objective.
/// Stops when the centered gradient, divided by `1 + spread(v)/β`, is
/// below `tol` in the max norm.
pub fn newton_argmax(r: &Regularizer, v: &[f64], beta: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let k = v.len();
    if let Some(d) = r.dimension() {
        if d != k {
            return Err(Error::Dimension(format!("regularizer has dimension {d}, payoff vector {k}")));
        }
    }
    if !(beta > 0.0) {
        return Err(Error::Argument("beta must be positive".into()));
    }
    let lam = r.entropy_weight();
    let quad = r.quadratic_terms();
    let vb = DVector::from_iterator(k, v.iter().map(|a| a / beta));
    let spread = vb.max() - vb.min();
    let scale = 1.0 + spread;

    // objective G(x) = λ Σ x ln x + ½ xᵀPx − cᵀx − vᵀx/β (minimized)
    let objective = |x: &DVector<f64>| -> f64 {
        let mut g = lam * x.iter().map(|&a| a * a.ln()).sum::<f64>() - vb.dot(x);
        if let Some((p, c)) = &quad {
            g += 0.5 * x.dot(&(p * x)) - c.dot(x);
        }
        g
    };
    let gradient = |x: &DVector<f64>| -> DVector<f64> {
        let mut g = DVector::from_iterator(k, x.iter().map(|&a| lam * (a.ln() + 1.0))) - &vb;
        if let Some((p, c)) = &quad {
            g += p * x - c;
        }
        g
    };
    // entries pinned at the underflow floor count as an active lower bound
    let floor = 1e-290;
    let residual = |x: &DVector<f64>, g: &DVector<f64>| -> f64 {
        let free: Vec<usize> = (0..k).filter(|&i| x[i] > floor).collect();
        let m = free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64;
        let mut r: f64 = 0.0;
        for i in 0..k {
            r = r.max(if x[i] > floor { (g[i] - m).abs() } else { (m - g[i]).max(0.0) });
        }
        r / scale
    };

    let mut x = DVector::from_vec(softmax(&vb.iter().map(|a| a / lam).collect::<Vec<_>>()));
    let mut g = gradient(&x);
    let mut res = residual(&x, &g);
    let mut f = objective(&x);
    for _ in 0..max_iter {
        if res <= tol {
            return Ok(x.iter().copied().collect());
        }
        // floored entries whose gradient pushes them down stay fixed
        let free: Vec<usize> = (0..k).filter(|&i| x[i] > floor).collect();
        let m = free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64;
        let act: Vec<usize> = (0..k).filter(|&i| x[i] > floor || g[i] < m).collect();
        let ka = act.len();
        // bordered system in scaled variables dx = D dz, D = diag(1/sqrt(H_ii))
        let mut hess = DMatrix::from_diagonal(&x.map(|a| lam / a));
        if let Some((p, _)) = &quad {
            hess += p;
        }
        let d: Vec<f64> = act.iter().map(|&i| 1.0 / hess[(i, i)].sqrt()).collect();
        let mut kkt = DMatrix::zeros(ka + 1, ka + 1);
        let mut rhs = DVector::zeros(ka + 1);
        for (a, &i) in act.iter().enumerate() {
            for (b, &j) in act.iter().enumerate() {
                kkt[(a, b)] = d[a] * hess[(i, j)] * d[b];
            }
            kkt[(a, ka)] = d[a];
            kkt[(ka, a)] = d[a];
            rhs[a] = -d[a] * g[i];
        }
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Domain("singular Newton system".into()))?;
        let mut dx = DVector::zeros(k);
        for (a, &i) in act.iter().enumerate() {
            dx[i] = d[a] * sol[a];
        }
        let mut step: f64 = 1.0;
        for i in 0..k {
            if dx[i] < 0.0 {
                step = step.min(-0.99 * x[i] / dx[i]);
            }
        }
        let slope = g.dot(&dx);
        let full = step;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = (&x + &dx * step).map(|a| a.max(f64::MIN_POSITIVE));
            // once the predicted decrease is below rounding in f, judge by the residual
            let flat = (step * slope).abs() <= 64.0 * f64::EPSILON * (1.0 + f.abs());
            let ok = if flat {
                residual(&trial, &gradient(&trial)) < res
            } else {
                objective(&trial) <= f + 1e-4 * step * slope
            };
            if ok {
                x = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // objective flat to rounding: keep the boundary-safe step if it lowers the residual
            let trial = (&x + &dx * full).map(|a| a.max(f64::MIN_POSITIVE));
            if residual(&trial, &gradient(&trial)) < res {
                x = trial;
            } else {
                return Err(Error::Convergence {
                    iterations: max_iter,
                    residual: res,
                });
            }
        }
        let s = x.sum();
        x /= s;
        f = objective(&x);
        g = gradient(&x);
        res = residual(&x, &g);
    }
    if res <= tol {
        return Ok(x.iter().copied().collect());
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: res,
    })
}

/// `Φ^β(x)`: each player's regularized best response to `x_{-n}`.
pub fn smoothed_best_response(game: &NormalFormGame, cfg: &SmoothedResponseConfig, x: &JointStrategy) -> Result<JointStrategy> {
    cfg.validate(game)?;
    let mut blocks = Vec::with_capacity(game.num_players());
    for n in 0..game.num_players() {
        let v = game.gradient(x, n)?;
        blocks.push(regularized_argmax(&cfg.regularizers[n], &v, cfg.beta, cfg.inner_tol, cfg.inner_max_iter)?);
    }
    JointStrategy::normalized(blocks)
}

/// Block-diagonal pseudoinverse of the regularizer Hessians at `y`, each on
/// the face of strictly positive entries.
pub(crate) fn hessian_pinv_blocks(cfg: &SmoothedResponseConfig, y: &JointStrategy) -> Result<DMatrix<f64>> {
    let mut blocks = Vec::with_capacity(y.blocks().len());
    for (r, b) in cfg.regularizers.iter().zip(y.blocks()) {
        let support: Vec<usize> = (0..b.len()).filter(|&i| b[i] > 0.0).collect();
        blocks.push(r.face_hessian(b, &support)?.pseudoinverse);
    }
    Ok(block_diag(&blocks))
}

/// `∇Φ^β(x) = (1/β) H(Φ^β(x))⁺ J(x)` in ambient coordinates, with `J` the
/// full-simplex game Jacobian.
pub fn response_jacobian(game: &NormalFormGame, cfg: &SmoothedResponseConfig, x: &JointStrategy) -> Result<BlockMatrix> {
    let y = smoothed_best_response(game, cfg, x)?;
    let hp = hessian_pinv_blocks(cfg, &y)?;
    let j = game_jacobian_full(game, x)?;
    Ok(BlockMatrix {
        dims: game.shape().to_vec(),
        matrix: hp * j.matrix / cfg.beta,
    })
}

/// Damped fixed-point iteration `x ← (1−s)x + sΦ^β(x)` with adaptive `s`.
pub fn find_smoothed_equilibrium(
    game: &NormalFormGame,
    cfg: &SmoothedResponseConfig,
    x0: &JointStrategy,
    outer_tol: f64,
    max_iter: usize,
) -> Result<SmoothedEquilibrium> {
    const STAGNATION_WINDOW: usize = 500;
    const STAGNATION_FACTOR: f64 = 0.99;
    const DAMPING_WINDOW: usize = 10;
    if !(outer_tol > 0.0) {
        return Err(Error::Argument("outer_tol must be positive".into()));
    }
    if x0.shape() != game.shape() {
        return Err(Error::Dimension("x0 does not match the game shape".into()));
    }
    let mut x = x0.clone();
    let mut fx = smoothed_best_response(game, cfg, &x)?;
    let mut res = fx.max_abs_diff(&x);
    let mut best = res;
    // best residual of the previous and current stagnation blocks
    let mut block_ref = res;
    let mut block_best = f64::INFINITY;
    let mut s: f64 = 1.0;
    // backtrack the first step so a warm start is not thrown away
    if res > outer_tol {
        for _ in 0..40 {
            let cand = average(&x, &fx, s)?;
            if smoothed_best_response(game, cfg, &cand)?.distance(&cand) <= fx.distance(&x) {
                break;
            }
            s *= 0.5;
        }
    }
    // damping decisions use the Euclidean residual, which rotation does not inflate
    let mut window_start = fx.distance(&x);
    for it in 0..max_iter {
        if res <= outer_tol {
            return Ok(SmoothedEquilibrium {
                nash_gap: game.epsilon_nash_gap(&x)?,
                point: x,
                beta: cfg.beta,
                residual: res,
            });
        }
        x = average(&x, &fx, s)?;
        fx = smoothed_best_response(game, cfg, &x)?;
        res = fx.max_abs_diff(&x);
        // steps are always taken; s adapts once per window so that
        // transient growth along rotating directions does not starve it
        if (it + 1) % DAMPING_WINDOW == 0 {
            let r2 = fx.distance(&x);
            s = if r2 > window_start { 0.5 * s } else { (1.2 * s).min(1.0) };
            window_start = r2;
        }
        best = best.min(res);
        block_best = block_best.min(res);
        if (it + 1) % STAGNATION_WINDOW == 0 {
            if block_best > STAGNATION_FACTOR * block_ref {
                return Err(Error::Cycling {
                    residual: best,
                    stagnant_steps: STAGNATION_WINDOW,
                });
            }
            block_ref = block_best;
            block_best = f64::INFINITY;
        }
    }
    if res <= outer_tol {
        return Ok(SmoothedEquilibrium {
            nash_gap: game.epsilon_nash_gap(&x)?,
            point: x,
            beta: cfg.beta,
            residual: res,
        });
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: best,
    })
}

/// `(1−s)x + s y`, renormalized.
pub(crate) fn average(x: &JointStrategy, y: &JointStrategy, s: f64) -> Result<JointStrategy> {
    let blocks = x
        .blocks()
        .iter()
        .zip(y.blocks())
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (1.0 - s) * p + s * q).collect())
        .collect();
    JointStrategy::normalized(blocks)
}

/// Smoothed equilibria along a decreasing β schedule, each warm-started at
/// the previous one.
pub fn homotopy_trace(
    game: &NormalFormGame,
    cfg: &SmoothedResponseConfig,
    beta_schedule: &[f64],
    x0: &JointStrategy,
    outer_tol: f64,
    max_iter: usize,
) -> Result<Vec<SmoothedEquilibrium>> {
    if beta_schedule.is_empty() {
        return Err(Error::Argument("empty beta schedule".into()));
    }
    if beta_schedule.iter().any(|&b| !(b > 0.0)) || beta_schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Argument("beta schedule must be positive and strictly decreasing".into()));
    }
    let mut out = Vec::with_capacity(beta_schedule.len());
    let mut x = x0.clone();
    for &beta in beta_schedule {
        let c = cfg.with_beta(beta);
        let eq = find_smoothed_equilibrium(game, &c, &x, outer_tol, max_iter).map_err(|e| Error::AtBeta {
            beta,
            source: Box::new(e),
        })?;
        x = eq.point.clone();
        out.push(eq);
    }
    Ok(out)
}

/// Geometric schedule from `start` down to `end` (inclusive) with ratio
/// `factor` in (0, 1).
pub fn geometric_schedule(start: f64, end: f64, factor: f64) -> Vec<f64> {
    let mut out = vec![start];
    let mut b = start;
    while b * factor > end * (1.0 + 1e-12) {
        b *= factor;
        out.push(b);
    }
    if *out.last().unwrap() > end {
        out.push(end);
    }
    out
}
