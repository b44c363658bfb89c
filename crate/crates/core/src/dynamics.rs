//! The averaging dynamics `x(t) = (1−η)x(t−1) + ηΦ^β(x(t−1))`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointStrategy, NormalFormGame};
use crate::linalg::{block_diag, spectral_norm, spectral_radius, tangent_basis};
use crate::regularizer::Regularizer;
use crate::response::{
    average, find_smoothed_equilibrium, hessian_pinv_blocks, response_jacobian, smoothed_best_response,
    SmoothedEquilibrium, SmoothedResponseConfig,
};
use crate::stability::{game_jacobian_full, sample_in_ball};

/// Radius (max norm) of the ball on which the Lipschitz constant is sampled.
pub const BALL_RADIUS: f64 = 0.05;
/// Number of random points sampled in that ball besides its center.
pub const BALL_SAMPLES: usize = 8;
const BALL_SEED: u64 = 0x5eed;
/// Spectral radii within this distance of 1 are `marginal`.
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub eta: f64,
    pub response: SmoothedResponseConfig,
    pub horizon: usize,
    pub record_every: usize,
}

impl DynamicsConfig {
    pub fn new(eta: f64, response: SmoothedResponseConfig, horizon: usize) -> Self {
        Self {
            eta,
            response,
            horizon,
            record_every: 1,
        }
    }

    pub fn validate(&self, game: &NormalFormGame) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Argument(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if self.horizon < 1 {
            return Err(Error::Argument("horizon must be at least 1".into()));
        }
        if self.record_every < 1 {
            return Err(Error::Argument("record_every must be at least 1".into()));
        }
        self.response.validate(game)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Step indices of `points`: 0, every `record_every`, and the horizon.
    pub times: Vec<usize>,
    pub points: Vec<JointStrategy>,
    /// Euclidean distance to the reference at every step `0..=horizon`.
    pub step_distances: Option<Vec<f64>>,
    pub config: DynamicsConfig,
}

impl Trajectory {
    /// Distances at the recorded times.
    pub fn distances(&self) -> Option<Vec<f64>> {
        self.step_distances
            .as_ref()
            .map(|d| self.times.iter().map(|&t| d[t]).collect())
    }

    /// `d(t+1)/d(t)` for every step; 0 where `d(t) = 0`.
    pub fn ratios(&self) -> Option<Vec<f64>> {
        self.step_distances.as_ref().map(|d| {
            d.windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
                .collect()
        })
    }

    pub fn final_point(&self) -> &JointStrategy {
        self.points.last().expect("trajectory has at least one point")
    }

    pub fn final_distance(&self) -> Option<f64> {
        self.step_distances.as_ref().and_then(|d| d.last().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    AsymptoticallyStable,
    Unstable,
    Marginal,
}

impl Classification {
    pub fn from_spectral_radius(rho: f64) -> Self {
        if rho < 1.0 - MARGINAL_TOL {
            Classification::AsymptoticallyStable
        } else if rho > 1.0 + MARGINAL_TOL {
            Classification::Unstable
        } else {
            Classification::Marginal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::AsymptoticallyStable => "asymptotically_stable",
            Classification::Unstable => "unstable",
            Classification::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub equilibrium: SmoothedEquilibrium,
    pub eta: f64,
    /// Of `(1−η)I + η∇Φ^β(x^β)` on the tangent space.
    pub jacobian_spectral_radius: f64,
    pub jacobian_operator_norm: f64,
    pub classification: Classification,
}

pub fn step(game: &NormalFormGame, cfg: &DynamicsConfig, x: &JointStrategy) -> Result<JointStrategy> {
    let y = smoothed_best_response(game, &cfg.response, x)?;
    average(x, &y, cfg.eta)
}

/// Iterates [`step`] for `cfg.horizon` steps.
pub fn run(
    game: &NormalFormGame,
    cfg: &DynamicsConfig,
    x0: &JointStrategy,
    reference: Option<&SmoothedEquilibrium>,
) -> Result<Trajectory> {
    cfg.validate(game)?;
    if x0.shape() != game.shape() {
        return Err(Error::Dimension("x0 does not match the game shape".into()));
    }
    let mut x = x0.clone();
    let mut times = vec![0];
    let mut points = vec![x.clone()];
    let mut dists = reference.map(|r| vec![x.distance(&r.point)]);
    for t in 1..=cfg.horizon {
        x = step(game, cfg, &x)?;
        if let (Some(d), Some(r)) = (dists.as_mut(), reference) {
            d.push(x.distance(&r.point));
        }
        if t % cfg.record_every == 0 || t == cfg.horizon {
            times.push(t);
            points.push(x.clone());
        }
    }
    Ok(Trajectory {
        times,
        points,
        step_distances: dists,
        config: cfg.clone(),
    })
}

/// Block-diagonal orthonormal bases of the full simplex tangent spaces.
pub(crate) fn full_tangent_basis(shape: &[usize]) -> DMatrix<f64> {
    let blocks: Vec<DMatrix<f64>> = shape
        .iter()
        .map(|&k| tangent_basis(k, &(0..k).collect::<Vec<_>>()))
        .collect();
    block_diag(&blocks)
}

/// `(1−η)I + η∇Φ^β(x)` restricted to the tangent space, in orthonormal
/// tangent coordinates.
pub fn dynamics_jacobian(game: &NormalFormGame, rcfg: &SmoothedResponseConfig, eta: f64, x: &JointStrategy) -> Result<DMatrix<f64>> {
    let grad = response_jacobian(game, rcfg, x)?;
    let q = full_tangent_basis(game.shape());
    let d = q.ncols();
    Ok(DMatrix::identity(d, d) * (1.0 - eta) + q.transpose() * grad.matrix * &q * eta)
}

pub fn stability_verdict(game: &NormalFormGame, cfg: &DynamicsConfig, eq: &SmoothedEquilibrium) -> Result<StabilityVerdict> {
    cfg.validate(game)?;
    let m = dynamics_jacobian(game, &cfg.response, cfg.eta, &eq.point)?;
    let rho = spectral_radius(&m);
    Ok(StabilityVerdict {
        equilibrium: eq.clone(),
        eta: cfg.eta,
        jacobian_spectral_radius: rho,
        jacobian_operator_norm: spectral_norm(&m),
        classification: Classification::from_spectral_radius(rho),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaThreshold {
    pub eta: f64,
    /// Largest sampled `‖H⁺J‖₂`.
    pub lipschitz: f64,
    pub radius: f64,
    pub num_samples: usize,
}

/// `max ‖H(y)⁺J(y)‖₂` over `eq` and [`BALL_SAMPLES`] seeded points of the
/// max-norm ball of radius [`BALL_RADIUS`] around it.
pub fn sampled_lipschitz(game: &NormalFormGame, rcfg: &SmoothedResponseConfig, eq: &SmoothedEquilibrium) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(BALL_SEED);
    let mut pts = vec![eq.point.clone()];
    for _ in 0..BALL_SAMPLES {
        pts.push(sample_in_ball(&eq.point, BALL_RADIUS, &mut rng)?);
    }
    let mut l: f64 = 0.0;
    for y in &pts {
        let hp = hessian_pinv_blocks(rcfg, y)?;
        let j = game_jacobian_full(game, y)?;
        l = l.max(spectral_norm(&(hp * j.matrix)));
    }
    Ok(l)
}

/// `β²/(1 + L²)` with the sampled Lipschitz constant.
pub fn eta_threshold(game: &NormalFormGame, rcfg: &SmoothedResponseConfig, eq: &SmoothedEquilibrium) -> Result<EtaThreshold> {
    eta_threshold_with_factor(game, rcfg, eq, 1.0)
}

/// `β²/(1 + c·L²)`; `c = 4` is the boundary-case rule.
pub fn eta_threshold_with_factor(
    game: &NormalFormGame,
    rcfg: &SmoothedResponseConfig,
    eq: &SmoothedEquilibrium,
    c: f64,
) -> Result<EtaThreshold> {
    rcfg.validate(game)?;
    let l = sampled_lipschitz(game, rcfg, eq)?;
    Ok(EtaThreshold {
        eta: rcfg.beta * rcfg.beta / (1.0 + c * l * l),
        lipschitz: l,
        radius: BALL_RADIUS,
        num_samples: BALL_SAMPLES,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub beta: f64,
    pub eta: f64,
    pub equilibrium: Option<SmoothedEquilibrium>,
    pub verdict: Option<StabilityVerdict>,
    pub final_distance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub horizon: usize,
    pub outer_tol: f64,
    pub max_iter: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            horizon: 1000,
            outer_tol: 1e-10,
            max_iter: 200_000,
        }
    }
}

/// For every `(β, η)`: the smoothed equilibrium (warm-started along the
/// βs in decreasing order), its verdict, and the distance after a run from
/// `x0`. Cells are independent and evaluated in parallel; failures are
/// recorded in the cell. Output is ordered as `betas × etas`.
pub fn sweep(
    game: &NormalFormGame,
    betas: &[f64],
    etas: &[f64],
    regularizers: &[Regularizer],
    x0: &JointStrategy,
    scfg: &SweepConfig,
) -> Result<Vec<SweepCell>> {
    if betas.is_empty() || etas.is_empty() {
        return Err(Error::Argument("sweep grids must be non-empty".into()));
    }
    let base = SmoothedResponseConfig::new(betas[0], regularizers.to_vec());
    base.validate(game)?;
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| betas[b].partial_cmp(&betas[a]).expect("finite betas"));
    let mut eqs: Vec<std::result::Result<SmoothedEquilibrium, String>> = vec![Err(String::new()); betas.len()];
    let mut warm = x0.clone();
    for &i in &order {
        let cfg = base.with_beta(betas[i]);
        match find_smoothed_equilibrium(game, &cfg, &warm, scfg.outer_tol, scfg.max_iter) {
            Ok(eq) => {
                warm = eq.point.clone();
                eqs[i] = Ok(eq);
            }
            Err(e) => eqs[i] = Err(Error::AtBeta { beta: betas[i], source: Box::new(e) }.to_string()),
        }
    }
    let cells: Vec<(usize, usize)> = (0..betas.len()).flat_map(|i| (0..etas.len()).map(move |j| (i, j))).collect();
    Ok(cells
        .par_iter()
        .map(|&(i, j)| {
            let (beta, eta) = (betas[i], etas[j]);
            let mut cell = SweepCell {
                beta,
                eta,
                equilibrium: None,
                verdict: None,
                final_distance: None,
                error: None,
            };
            let eq = match &eqs[i] {
                Ok(eq) => eq.clone(),
                Err(e) => {
                    cell.error = Some(e.clone());
                    return cell;
                }
            };
            let dcfg = DynamicsConfig {
                eta,
                response: base.with_beta(beta),
                horizon: scfg.horizon,
                record_every: scfg.horizon,
            };
            let result = stability_verdict(game, &dcfg, &eq)
                .and_then(|v| run(game, &dcfg, x0, Some(&eq)).map(|t| (v, t.final_distance())));
            match result {
                Ok((v, d)) => {
                    cell.verdict = Some(v);
                    cell.final_distance = d;
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell.equilibrium = Some(eq);
            cell
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn mp_eq(beta: f64) -> SmoothedEquilibrium {
        let g = bundled::matching_pennies();
        let cfg = SmoothedResponseConfig::entropy(beta, 2);
        find_smoothed_equilibrium(&g, &cfg, &JointStrategy::uniform(&[2, 2]), 1e-12, 100).unwrap()
    }

    #[test]
    fn step_endpoints() {
        let g = bundled::matching_pennies();
        let rc = SmoothedResponseConfig::entropy(0.1, 2);
        let x = JointStrategy::new(vec![vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        let near_one = step(&g, &DynamicsConfig::new(1.0 - 1e-12, rc.clone(), 1), &x).unwrap();
        assert!(near_one.max_abs_diff(&smoothed_best_response(&g, &rc, &x).unwrap()) < 1e-11);
        let y = step(&g, &DynamicsConfig::new(0.005, rc.clone(), 1), &x).unwrap();
        let u = JointStrategy::uniform(&[2, 2]);
        assert!(y.distance(&u) < x.distance(&u));
        let eq = mp_eq(0.1);
        let z = step(&g, &DynamicsConfig::new(0.3, rc, 1), &eq.point).unwrap();
        assert!(z.max_abs_diff(&eq.point) < 1e-15);
    }

    #[test]
    fn run_records_and_constant_at_reference() {
        let g = bundled::matching_pennies();
        let eq = mp_eq(0.1);
        let mut cfg = DynamicsConfig::new(0.01, SmoothedResponseConfig::entropy(0.1, 2), 10);
        cfg.record_every = 4;
        let t = run(&g, &cfg, &eq.point, Some(&eq)).unwrap();
        assert_eq!(t.times, vec![0, 4, 8, 10]);
        assert!(t.step_distances.as_ref().unwrap().iter().all(|&d| d < 1e-15));
        assert_eq!(t.ratios().unwrap().len(), 10);
    }

    #[test]
    fn config_validation() {
        let g = bundled::matching_pennies();
        let rc = SmoothedResponseConfig::entropy(0.1, 2);
        assert!(DynamicsConfig::new(0.0, rc.clone(), 5).validate(&g).is_err());
        assert!(DynamicsConfig::new(1.0, rc.clone(), 5).validate(&g).is_err());
        assert!(DynamicsConfig::new(0.5, rc, 0).validate(&g).is_err());
    }

    #[test]
    fn zero_game_verdict() {
        let g = NormalFormGame::new(vec![2, 3], vec![vec![0.0; 6]; 2]).unwrap();
        let rc = SmoothedResponseConfig::entropy(0.5, 2);
        let eq = find_smoothed_equilibrium(&g, &rc, &JointStrategy::uniform(&[2, 3]), 1e-12, 10).unwrap();
        let v = stability_verdict(&g, &DynamicsConfig::new(0.25, rc.clone(), 1), &eq).unwrap();
        assert!((v.jacobian_spectral_radius - 0.75).abs() < 1e-14);
        assert_eq!(v.classification, Classification::AsymptoticallyStable);
        let th = eta_threshold(&g, &rc, &eq).unwrap();
        assert_eq!(th.lipschitz, 0.0);
        assert!((th.eta - 0.25).abs() < 1e-15);
    }

    #[test]
    fn matching_pennies_threshold_is_stable_and_monotone() {
        let g = bundled::matching_pennies();
        let mut last = 0.0;
        for beta in [0.05, 0.1, 0.2, 0.5] {
            let rc = SmoothedResponseConfig::entropy(beta, 2);
            let eq = mp_eq(beta);
            let th = eta_threshold(&g, &rc, &eq).unwrap();
            assert!(th.eta > last);
            last = th.eta;
            let v = stability_verdict(&g, &DynamicsConfig::new(th.eta, rc, 1), &eq).unwrap();
            assert_eq!(v.classification, Classification::AsymptoticallyStable);
            assert!(v.jacobian_operator_norm <= (-th.eta / 2.0).exp());
        }
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(Classification::from_spectral_radius(1.0), Classification::Marginal);
        assert_eq!(Classification::from_spectral_radius(1.0 + 1e-8), Classification::Unstable);
        assert_eq!(Classification::from_spectral_radius(0.9), Classification::AsymptoticallyStable);
    }

    #[test]
    fn sweep_single_step() {
        let g = bundled::matching_pennies();
        let cells = sweep(
            &g,
            &[0.5, 0.2],
            &[0.1, 0.01],
            &[Regularizer::Entropy, Regularizer::Entropy],
            &JointStrategy::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap(),
            &SweepConfig { horizon: 1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.error.is_none() && c.final_distance.is_some()), "{cells:?}");
        assert_eq!((cells[1].beta, cells[1].eta), (0.5, 0.01));
    }
}
