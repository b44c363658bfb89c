use serde::{Deserialize, Serialize};

use crate::dynamics::{dynamics_jacobian, eta_threshold_with_factor};
use crate::error::{Error, Result};
use crate::game::{JointStrategy, NormalFormGame};
use crate::linalg::{project_onto_simplex, spectral_norm};
use crate::regularizer::Regularizer;
use crate::response::{homotopy_trace, smoothed_best_response, SmoothedEquilibrium, SmoothedResponseConfig};

/// Largest Nash gap accepted by [`quasi_strict_check`].
pub const NASH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum QuasiStrict {
    QuasiStrict,
    /// `index` is a best response outside the support, or a supported
    /// action that is not a best response.
    NotQuasiStrict { player: usize, index: usize },
    NotNash { gap: f64 },
}

pub fn quasi_strict_check(game: &NormalFormGame, x_star: &JointStrategy) -> Result<QuasiStrict> {
    let gap = game.epsilon_nash_gap(x_star)?;
    if gap > NASH_TOL {
        return Ok(QuasiStrict::NotNash { gap });
    }
    for n in 0..game.num_players() {
        let support = x_star.support(n);
        let (_, argmax) = game.best_response_values(x_star, n)?;
        if let Some(&i) = argmax.iter().find(|i| !support.contains(i)) {
            return Ok(QuasiStrict::NotQuasiStrict { player: n, index: i });
        }
        if let Some(&i) = support.iter().find(|i| !argmax.contains(i)) {
            return Ok(QuasiStrict::NotQuasiStrict { player: n, index: i });
        }
    }
    Ok(QuasiStrict::QuasiStrict)
}

/// A game restricted to the supports of an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGame {
    pub game: NormalFormGame,
    /// `supports[n][j]` is the original index of reduced action `j`.
    pub supports: Vec<Vec<usize>>,
    /// The equilibrium in reduced coordinates (interior).
    pub point: JointStrategy,
}

impl ReducedGame {
    /// Pads a reduced strategy with zeros.
    pub fn embed(&self, y: &JointStrategy, full_shape: &[usize]) -> Result<JointStrategy> {
        if y.shape() != self.game.shape() || full_shape.len() != self.supports.len() {
            return Err(Error::Dimension("strategy does not match the reduced game".into()));
        }
        let blocks = y
            .blocks()
            .iter()
            .zip(&self.supports)
            .zip(full_shape)
            .map(|((b, s), &k)| {
                let mut out = vec![0.0; k];
                for (v, &i) in b.iter().zip(s) {
                    out[i] = *v;
                }
                out
            })
            .collect();
        JointStrategy::new(blocks)
    }

    /// Keeps the supported coordinates and renormalizes.
    pub fn project(&self, x: &JointStrategy) -> Result<JointStrategy> {
        if x.blocks().len() != self.supports.len() {
            return Err(Error::Dimension("strategy does not match the full game".into()));
        }
        let blocks = x
            .blocks()
            .iter()
            .zip(&self.supports)
            .map(|(b, s)| s.iter().map(|&i| b[i]).collect())
            .collect();
        JointStrategy::normalized(blocks)
    }
}

/// Restricts `game` to `supp(x_star)` after checking quasi-strictness.
pub fn reduce_game(game: &NormalFormGame, x_star: &JointStrategy) -> Result<ReducedGame> {
    match quasi_strict_check(game, x_star)? {
        QuasiStrict::QuasiStrict => {}
        QuasiStrict::NotNash { gap } => {
            return Err(Error::Domain(format!("not a Nash equilibrium (gap {gap:e})")));
        }
        QuasiStrict::NotQuasiStrict { player, index } => {
            return Err(Error::Domain(format!(
                "not quasi-strict: player {player}, action {index} breaks support = best responses"
            )));
        }
    }
    let supports = x_star.supports();
    let reduced = game.restrict(&supports)?.with_name(format!("{} (reduced)", game.name()));
    let point = JointStrategy::normalized(
        x_star
            .blocks()
            .iter()
            .zip(&supports)
            .map(|(b, s)| s.iter().map(|&i| b[i]).collect())
            .collect(),
    )?;
    let gap = reduced.epsilon_nash_gap(&point)?;
    if gap > NASH_TOL || !point.is_interior() {
        return Err(Error::Domain("reduced point is not an interior equilibrium".into()));
    }
    Ok(ReducedGame {
        game: reduced,
        supports,
        point,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub beta: f64,
    pub equilibrium: SmoothedEquilibrium,
    /// `‖x^β − Πx^β‖ / β`, `Π` the projection onto the equilibrium's faces.
    pub off_support_ratio: f64,
    pub lipschitz: f64,
    pub eta: f64,
    /// `‖(1−η)I + η∇Φ^β(x^β)‖₂` on the full tangent space.
    pub operator_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub rows: Vec<BoundaryRow>,
    pub ratios_decreasing: bool,
    pub all_bounds_hold: bool,
}

/// Euclidean projection of each block onto the face of the simplex
/// spanned by `support`.
pub fn project_onto_faces(x: &JointStrategy, supports: &[Vec<usize>]) -> Result<JointStrategy> {
    let blocks = x
        .blocks()
        .iter()
        .zip(supports)
        .map(|(b, s)| {
            let p = project_onto_simplex(&s.iter().map(|&i| b[i]).collect::<Vec<_>>());
            let mut out = vec![0.0; b.len()];
            for (v, &i) in p.iter().zip(s) {
                out[i] = *v;
            }
            out
        })
        .collect();
    JointStrategy::normalized(blocks)
}

/// Follows `x^β` along `beta_schedule` and, at each β, measures the mass
/// off the equilibrium's support and checks the full-simplex contraction
/// bound `‖(1−η)I + η∇Φ^β‖₂ ≤ exp(−η/2)` at `η = β²/(1 + c·L²)`
/// (`eta_factor = c`, default 4).
pub fn boundary_convergence_check(
    game: &NormalFormGame,
    regularizers: &[Regularizer],
    x_star: &JointStrategy,
    beta_schedule: &[f64],
    eta_factor: Option<f64>,
) -> Result<BoundaryReport> {
    match quasi_strict_check(game, x_star)? {
        QuasiStrict::QuasiStrict => {}
        other => return Err(Error::Domain(format!("equilibrium is not quasi-strict: {other:?}"))),
    }
    let c = eta_factor.unwrap_or(4.0);
    let cfg = SmoothedResponseConfig::new(beta_schedule.first().copied().unwrap_or(1.0), regularizers.to_vec());
    // start near x* so that symmetric equilibria are not abandoned
    let start = crate::response::average(x_star, &JointStrategy::uniform(game.shape()), 0.1)?;
    let trace = homotopy_trace(game, &cfg, beta_schedule, &start, 1e-13, 1_000_000)?;
    let supports = x_star.supports();
    let mut rows = Vec::with_capacity(trace.len());
    for eq in trace {
        let rc = cfg.with_beta(eq.beta);
        // the solver only drives off-support mass down to the outer
        // tolerance; one more response sets it to its fixed-point value
        let point = smoothed_best_response(game, &rc, &eq.point)?;
        let eq = SmoothedEquilibrium {
            residual: smoothed_best_response(game, &rc, &point)?.max_abs_diff(&point),
            nash_gap: game.epsilon_nash_gap(&point)?,
            point,
            beta: eq.beta,
        };
        let proj = project_onto_faces(&eq.point, &supports)?;
        let th = eta_threshold_with_factor(game, &rc, &eq, c)?;
        let m = dynamics_jacobian(game, &rc, th.eta, &eq.point)?;
        let norm = spectral_norm(&m);
        let bound = (-th.eta / 2.0).exp();
        rows.push(BoundaryRow {
            beta: eq.beta,
            off_support_ratio: eq.point.distance(&proj) / eq.beta,
            lipschitz: th.lipschitz,
            eta: th.eta,
            operator_norm: norm,
            bound,
            holds: norm <= bound,
            equilibrium: eq,
        });
    }
    Ok(BoundaryReport {
        ratios_decreasing: rows.windows(2).all(|w| w[1].off_support_ratio < w[0].off_support_ratio),
        all_bounds_hold: rows.iter().all(|r| r.holds),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn quasi_strict_examples() {
        let mp = bundled::matching_pennies();
        assert_eq!(quasi_strict_check(&mp, &JointStrategy::uniform(&[2, 2])).unwrap(), QuasiStrict::QuasiStrict);
        let a = bundled::example_a();
        let x = JointStrategy::pure(&[3, 3], &[1, 1]).unwrap();
        assert_eq!(quasi_strict_check(&a, &x).unwrap(), QuasiStrict::QuasiStrict);
        assert!(matches!(
            quasi_strict_check(&a, &JointStrategy::pure(&[3, 3], &[0, 0]).unwrap()).unwrap(),
            QuasiStrict::NotNash { .. }
        ));
        // column 2 ties with the supported ones for player 2
        let g = NormalFormGame::new(vec![2, 3], vec![vec![1., -1., 0., -1., 1., 0.], vec![-1., 1., 0., 1., -1., 0.]]).unwrap();
        let x = JointStrategy::new(vec![vec![0.5, 0.5], vec![0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(
            quasi_strict_check(&g, &x).unwrap(),
            QuasiStrict::NotQuasiStrict { player: 1, index: 2 }
        );
    }

    #[test]
    fn reductions() {
        let mp = bundled::matching_pennies();
        let r = reduce_game(&mp, &JointStrategy::uniform(&[2, 2])).unwrap();
        assert_eq!(r.game.shape(), &[2, 2]);
        let a = bundled::example_a();
        let x = JointStrategy::pure(&[3, 3], &[1, 1]).unwrap();
        let r = reduce_game(&a, &x).unwrap();
        assert_eq!(r.game.shape(), &[1, 1]);
        assert_eq!(r.embed(&r.point, &[3, 3]).unwrap(), x);
        let g = bundled::matching_pennies_with_dominated_action();
        let x = JointStrategy::new(vec![vec![0.5, 0.5], vec![0.5, 0.5, 0.0]]).unwrap();
        let r = reduce_game(&g, &x).unwrap();
        assert_eq!(r.game.shape(), &[2, 2]);
        assert_eq!(r.game.epsilon_nash_gap(&r.point).unwrap(), 0.0);
        assert_eq!(r.project(&x).unwrap(), r.point);
        assert!(reduce_game(&a, &JointStrategy::pure(&[3, 3], &[0, 0]).unwrap()).is_err());
    }

    #[test]
    fn face_projection() {
        let x = JointStrategy::new(vec![vec![0.5, 0.5], vec![0.45, 0.45, 0.1]]).unwrap();
        let p = project_onto_faces(&x, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(p.blocks()[1], vec![0.5, 0.5, 0.0]);
    }
}
