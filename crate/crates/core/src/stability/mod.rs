//! Uniform-stability analysis of equilibria: the game Jacobian, λ-skew
//! certificates, conditioner witnesses, support reduction and brute-force
//! Pareto oracles.

mod bilinear;
mod certificate;
mod jacobian;
mod oracles;
mod support;
mod uniform;

pub use bilinear::{bilinear_scale_recovery, BilinearScale, SCALE_TOL};
pub use certificate::{
    interaction_graph, solve_skew_certificate, InteractionGraph, SkewCertificate, ANGLE_TOL, CERTIFICATE_TOL,
    EDGE_TOL, KERNEL_CUTOFF,
};
pub use jacobian::{
    game_jacobian, game_jacobian_full, game_jacobian_on_faces, BlockMatrix, BlockMatrixRows, GameJacobian,
};
pub use oracles::{
    default_resolution, simplex_grid, simplex_grid_size, strong_nash_oracle, weak_pareto_oracle, CoalitionVerdict,
    ParetoVerdict, StrongNashReport, DEFAULT_RESOLUTION, MAX_GRID_POINTS,
};
pub use support::{
    boundary_convergence_check, project_onto_faces, quasi_strict_check, reduce_game, BoundaryReport, BoundaryRow,
    QuasiStrict, ReducedGame, NASH_TOL,
};
pub use uniform::{
    conditioned_extreme_eigenvalue, local_uniform_stability, pareto_improvement_search, pd_stretch,
    random_conditioner, uniform_stability_check, verify_witness, Assumptions, LocalStabilityReport, Pointwise,
    UniformStabilityReport, Witness, CONDITIONER_RANGE, WITNESS_TOL,
};
pub(crate) use uniform::sample_in_ball;
