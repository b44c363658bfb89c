//! The example games shipped in `games/`, plus two constructed games used
//! for the partially-mixed (boundary) case.

use crate::game::NormalFormGame;

const EXAMPLE_A: &str = include_str!("../../../games/example_A.json");
const MATCHING_PENNIES: &str = include_str!("../../../games/matching_pennies.json");
const COORDINATION: &str = include_str!("../../../games/coordination_2x2.json");

/// 3×3 symmetric game whose pure profile (A_2, B_2) is a Nash equilibrium
/// that both players would rather leave for (A_1, B_1).
pub fn example_a() -> NormalFormGame {
    NormalFormGame::from_json_str(EXAMPLE_A).expect("bundled game is valid")
}

pub fn matching_pennies() -> NormalFormGame {
    NormalFormGame::from_json_str(MATCHING_PENNIES).expect("bundled game is valid")
}

/// Pure coordination: both players get 1 when they match, 0 otherwise.
pub fn coordination_2x2() -> NormalFormGame {
    NormalFormGame::from_json_str(COORDINATION).expect("bundled game is valid")
}

/// Matching pennies where the column player has a third action paying 2
/// less than the worst matching-pennies payoff. The row player is
/// indifferent to it. Quasi-strict equilibrium: `((½,½), (½,½,0))`.
pub fn matching_pennies_with_dominated_action() -> NormalFormGame {
    NormalFormGame::new(
        vec![2, 3],
        vec![
            vec![1.0, -1.0, 0.0, -1.0, 1.0, 0.0],
            vec![-1.0, 1.0, -3.0, 1.0, -1.0, -3.0],
        ],
    )
    .expect("valid game")
    .with_name("matching_pennies_dominated")
}

/// Coordination game with the same kind of dominated third column.
pub fn coordination_with_dominated_action() -> NormalFormGame {
    NormalFormGame::new(
        vec![2, 3],
        vec![
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            vec![1.0, 0.0, -2.0, 0.0, 1.0, -2.0],
        ],
    )
    .expect("valid game")
    .with_name("coordination_dominated")
}
