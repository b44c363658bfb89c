use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::jacobian::BlockMatrix;
use crate::linalg::{frobenius_inner, kernel_basis, principal_angle_sines};

/// Blocks with Frobenius norm at or below this are treated as absent.
pub const EDGE_TOL: f64 = 1e-10;
/// Certificates with residual at or below this are feasible.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Relative singular-value cutoff for kernels in the bidirectionality test.
pub const KERNEL_CUTOFF: f64 = 1e-10;
/// Largest principal-angle sine accepted as equal kernels.
pub const ANGLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewCertificate {
    /// Player weights with `λ_1 = 1` (each further connected component
    /// is rooted at 1 at its smallest index).
    pub lambdas: Vec<f64>,
    /// `max_{n≠m} ‖λ_n J_nm + λ_m J_mnᵀ‖_F / (1 + ‖J_nm‖_F)`.
    pub residual: f64,
    pub feasible: bool,
    /// Least-squares ratios `a = λ_m/λ_n` for each pair `n < m` with both
    /// blocks present.
    pub edge_ratios: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionGraph {
    pub edges: Vec<(usize, usize)>,
    pub connected: bool,
    pub bidirectional: bool,
}

fn present(j: &BlockMatrix, n: usize, m: usize) -> bool {
    n != m && j.block(n, m).norm() > EDGE_TOL
}

pub fn interaction_graph(j: &BlockMatrix) -> InteractionGraph {
    let nb = j.num_blocks();
    let mut edges = Vec::new();
    for n in 0..nb {
        for m in 0..nb {
            if present(j, n, m) {
                edges.push((n, m));
            }
        }
    }
    let mut adj = vec![Vec::new(); nb];
    for &(n, m) in &edges {
        adj[n].push(m);
        adj[m].push(n);
    }
    let connected = components(&adj).iter().all(|&c| c == 0);
    let mut bidirectional = true;
    for n in 0..nb {
        for m in 0..nb {
            if n != m && !kernels_match(&j.block(n, m), &j.block(m, n).transpose()) {
                bidirectional = false;
            }
        }
    }
    InteractionGraph {
        edges,
        connected,
        bidirectional,
    }
}

/// `ker(a) = ker(b)` for matrices of equal shape, up to [`ANGLE_TOL`].
fn kernels_match(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    if a.ncols() == 0 {
        return true;
    }
    let ka = if a.norm() > EDGE_TOL {
        kernel_basis(a, KERNEL_CUTOFF)
    } else {
        DMatrix::identity(a.ncols(), a.ncols())
    };
    let kb = if b.norm() > EDGE_TOL {
        kernel_basis(b, KERNEL_CUTOFF)
    } else {
        DMatrix::identity(b.ncols(), b.ncols())
    };
    match principal_angle_sines(&ka, &kb) {
        Some(s) => s.iter().all(|&v| v <= ANGLE_TOL),
        None => false,
    }
}

/// Component label per node (label = smallest node in the component).
fn components(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut label = vec![usize::MAX; adj.len()];
    for root in 0..adj.len() {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = root;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = root;
                    queue.push_back(v);
                }
            }
        }
    }
    label
}

/// Fits `λ` with `λ_n J_nm ≈ −λ_m J_mnᵀ`: least-squares ratios on each
/// two-way pair, propagated breadth-first along a spanning tree, then
/// checked against every pair.
pub fn solve_skew_certificate(j: &BlockMatrix) -> SkewCertificate {
    let nb = j.num_blocks();
    let mut ratio = vec![vec![None; nb]; nb];
    let mut edge_ratios = Vec::new();
    let mut all_positive = true;
    for n in 0..nb {
        for m in (n + 1)..nb {
            if present(j, n, m) && present(j, m, n) {
                let jnm = j.block(n, m);
                let jmn_t = j.block(m, n).transpose();
                let a = -frobenius_inner(&jnm, &jmn_t) / jmn_t.norm_squared();
                if !(a > 0.0) {
                    all_positive = false;
                }
                edge_ratios.push((n, m, a));
                ratio[n][m] = Some(a);
                ratio[m][n] = Some(1.0 / a);
            }
        }
    }
    let mut lambdas = vec![f64::NAN; nb];
    for root in 0..nb {
        if !lambdas[root].is_nan() {
            continue;
        }
        lambdas[root] = 1.0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for v in 0..nb {
                if let (Some(a), true) = (ratio[u][v], lambdas[v].is_nan()) {
                    // best effort on a non-positive ratio keeps λ positive
                    let a: f64 = if a > 0.0 { a } else if a != 0.0 { a.abs() } else { 1.0 };
                    lambdas[v] = lambdas[u] * a;
                    queue.push_back(v);
                }
            }
        }
    }
    let mut residual: f64 = 0.0;
    for n in 0..nb {
        for m in 0..nb {
            if n != m {
                let jnm = j.block(n, m);
                let r = (&jnm * lambdas[n] + j.block(m, n).transpose() * lambdas[m]).norm() / (1.0 + jnm.norm());
                residual = residual.max(r);
            }
        }
    }
    SkewCertificate {
        feasible: all_positive && residual <= CERTIFICATE_TOL,
        lambdas,
        residual,
        edge_ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn skew_from(dims: &[usize], lambdas: &[f64], rng: &mut ChaCha8Rng) -> BlockMatrix {
        let total: usize = dims.iter().sum();
        let g = DMatrix::from_fn(total, total, |_, _| rng.gen_range(-1.0..1.0));
        let sigma = BlockMatrix::new(dims.to_vec(), &g - g.transpose()).unwrap();
        BlockMatrix::from_blocks(dims.to_vec(), |n, m| {
            if n == m {
                DMatrix::zeros(dims[n], dims[n])
            } else {
                sigma.block(n, m) / lambdas[n]
            }
        })
    }

    #[test]
    fn recovers_planted_lambdas() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let j = skew_from(&[2, 3, 1], &[1.0, 2.0, 5.0], &mut rng);
        let c = solve_skew_certificate(&j);
        assert!(c.feasible);
        for (a, b) in c.lambdas.iter().zip([1.0, 2.0, 5.0]) {
            assert!((a - b).abs() < 1e-9 * b);
        }
    }

    #[test]
    fn symmetric_pair_is_infeasible() {
        let dims = vec![1, 1];
        let j = BlockMatrix::new(dims, DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.])).unwrap();
        let c = solve_skew_certificate(&j);
        assert!(!c.feasible);
        assert!(c.edge_ratios[0].2 < 0.0);
        let g = interaction_graph(&j);
        assert!(g.connected && g.bidirectional);
    }

    #[test]
    fn one_way_edge_breaks_bidirectionality() {
        let j = BlockMatrix::new(vec![1, 1], DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.])).unwrap();
        let g = interaction_graph(&j);
        assert_eq!(g.edges, vec![(0, 1)]);
        assert!(g.connected && !g.bidirectional);
        assert!(!solve_skew_certificate(&j).feasible);
    }

    #[test]
    fn disconnected_components_each_rooted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = skew_from(&[2, 2], &[1.0, 3.0], &mut rng);
        let mut j = BlockMatrix::zeros(vec![2, 2, 2, 2]);
        j.set_block(0, 1, &a.block(0, 1));
        j.set_block(1, 0, &a.block(1, 0));
        j.set_block(2, 3, &a.block(0, 1));
        j.set_block(3, 2, &a.block(1, 0));
        let c = solve_skew_certificate(&j);
        assert!(c.feasible);
        assert!((c.lambdas[1] - 3.0).abs() < 1e-9 && (c.lambdas[2] - 1.0).abs() < 1e-15);
        assert!(!interaction_graph(&j).connected);
    }
}
