use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointStrategy, NormalFormGame};
use crate::linalg::{block_diag, tangent_basis};

/// A square matrix partitioned into `dims.len()` row/column blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub dims: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

/// Row-major serialized form of a [`BlockMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMatrixRows {
    pub dims: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl BlockMatrix {
    pub fn new(dims: Vec<usize>, matrix: DMatrix<f64>) -> Result<Self> {
        let total: usize = dims.iter().sum();
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::Dimension(format!(
                "matrix is {}×{}, block dims sum to {total}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dims, matrix })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let total = dims.iter().sum();
        Self {
            dims,
            matrix: DMatrix::zeros(total, total),
        }
    }

    /// Assembles from a closure producing block `(n, m)`.
    pub fn from_blocks(dims: Vec<usize>, mut f: impl FnMut(usize, usize) -> DMatrix<f64>) -> Self {
        let mut out = Self::zeros(dims);
        let nb = out.dims.len();
        for n in 0..nb {
            for m in 0..nb {
                let b = f(n, m);
                out.set_block(n, m, &b);
            }
        }
        out
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.dims.len());
        let mut acc = 0;
        for &d in &self.dims {
            off.push(acc);
            acc += d;
        }
        off
    }

    pub fn block(&self, n: usize, m: usize) -> DMatrix<f64> {
        let off = self.offsets();
        self.matrix
            .view((off[n], off[m]), (self.dims[n], self.dims[m]))
            .into_owned()
    }

    pub fn set_block(&mut self, n: usize, m: usize, b: &DMatrix<f64>) {
        let off = self.offsets();
        assert_eq!((b.nrows(), b.ncols()), (self.dims[n], self.dims[m]), "block shape");
        self.matrix
            .view_mut((off[n], off[m]), (self.dims[n], self.dims[m]))
            .copy_from(b);
    }

    pub fn to_rows(&self) -> BlockMatrixRows {
        BlockMatrixRows {
            dims: self.dims.clone(),
            rows: matrix_rows(&self.matrix),
        }
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// The game Jacobian at a point: blocks `Π_n ∇²_{nm} f_n(x) Π_m` with zero
/// diagonal, projected onto the faces given by `supports`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameJacobian {
    pub point: JointStrategy,
    pub supports: Vec<Vec<usize>>,
    /// Blocks in ambient coordinates (`k_n × k_m`).
    pub ambient: BlockMatrix,
}

impl GameJacobian {
    /// Block-diagonal orthonormal bases of the face tangent spaces.
    pub fn tangent_basis(&self) -> DMatrix<f64> {
        let blocks: Vec<DMatrix<f64>> = self
            .supports
            .iter()
            .zip(&self.ambient.dims)
            .map(|(s, &k)| tangent_basis(k, s))
            .collect();
        block_diag(&blocks)
    }

    /// The Jacobian in tangent coordinates, block dims `|S_n| − 1`.
    pub fn tangent(&self) -> BlockMatrix {
        let q = self.tangent_basis();
        BlockMatrix {
            dims: self.supports.iter().map(|s| s.len().saturating_sub(1)).collect(),
            matrix: q.transpose() * &self.ambient.matrix * q,
        }
    }
}

/// Game Jacobian on the faces of `supp(x)`.
pub fn game_jacobian(game: &NormalFormGame, x: &JointStrategy) -> Result<GameJacobian> {
    let supports = x.supports();
    game_jacobian_on_faces(game, x, supports)
}

/// Game Jacobian on the faces of the given supports.
pub fn game_jacobian_on_faces(game: &NormalFormGame, x: &JointStrategy, supports: Vec<Vec<usize>>) -> Result<GameJacobian> {
    if x.shape() != game.shape() {
        return Err(Error::Dimension("point does not match the game shape".into()));
    }
    if supports.len() != game.num_players() {
        return Err(Error::Dimension("one support per player required".into()));
    }
    let dims = game.shape().to_vec();
    let mut out = BlockMatrix::zeros(dims);
    for n in 0..game.num_players() {
        for m in 0..game.num_players() {
            if n != m {
                let b = game.cross_hessian_on_faces(x, n, m, &supports[n], &supports[m])?;
                out.set_block(n, m, &b);
            }
        }
    }
    Ok(GameJacobian {
        point: x.clone(),
        supports,
        ambient: out,
    })
}

/// Game Jacobian on the full simplices regardless of the support of `x`.
pub fn game_jacobian_full(game: &NormalFormGame, x: &JointStrategy) -> Result<BlockMatrix> {
    let supports = game.shape().iter().map(|&k| (0..k).collect()).collect();
    Ok(game_jacobian_on_faces(game, x, supports)?.ambient)
}
