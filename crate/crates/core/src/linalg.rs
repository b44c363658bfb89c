//! Small dense linear-algebra helpers shared by the analysis modules.
//!
//! All simplex-tangent objects are stored in ambient coordinates and
//! sandwiched by the centering projector of the relevant face.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Projector onto the tangent space of the face spanned by `support`
/// inside `R^k`: `δ_ij − 1/|S|` on `S × S`, zero elsewhere.
pub fn face_projector(k: usize, support: &[usize]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(k, k);
    if support.is_empty() {
        return p;
    }
    let inv = 1.0 / support.len() as f64;
    for &i in support {
        for &j in support {
            p[(i, j)] = if i == j { 1.0 - inv } else { -inv };
        }
    }
    p
}

/// Full-simplex centering projector `I − (1/k) 𝟙𝟙ᵀ`.
pub fn centering(k: usize) -> DMatrix<f64> {
    let all: Vec<usize> = (0..k).collect();
    face_projector(k, &all)
}

/// Orthonormal (Helmert) basis of the tangent space of the face `support`,
/// as a `k × (|S|−1)` matrix.
pub fn tangent_basis(k: usize, support: &[usize]) -> DMatrix<f64> {
    let s = support.len();
    let d = s.saturating_sub(1);
    let mut q = DMatrix::zeros(k, d);
    for j in 1..s {
        let norm = ((j * (j + 1)) as f64).sqrt();
        for &idx in &support[..j] {
            q[(idx, j - 1)] = 1.0 / norm;
        }
        q[(support[j], j - 1)] = -(j as f64) / norm;
    }
    q
}

/// Block-diagonal stacking of per-block matrices.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Moore–Penrose pseudoinverse of a symmetric matrix via eigendecomposition,
/// discarding eigenvalues below `rel_cutoff` times the largest magnitude.
pub fn sym_pinv(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let mut out = DMatrix::zeros(n, n);
    if max == 0.0 {
        return out;
    }
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > rel_cutoff * max {
            let v = eig.eigenvectors.column(idx);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &s| a.max(s))
}

/// Eigenvalues of a general real square matrix.
///
/// The QR iteration is capped; when it stalls it is restarted on seeded
/// orthogonal similarity transforms, which leave the spectrum unchanged.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let cap = 200 * n.max(10);
    if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, cap) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4u64);
    for _ in 0..16 {
        let q = random_orthogonal(n, &mut rng);
        if let Some(s) = Schur::try_new(q.transpose() * m * &q, f64::EPSILON, cap) {
            return s.complex_eigenvalues().iter().copied().collect();
        }
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v))
}

/// Symmetric PD square root and inverse square root.
pub fn sym_sqrt_and_inv_sqrt(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let mut s = DMatrix::zeros(n, n);
    let mut si = DMatrix::zeros(n, n);
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        let outer = v * v.transpose();
        let r = lam.max(0.0).sqrt();
        s += &outer * r;
        if r > 0.0 {
            si += outer / r;
        }
    }
    (s, si)
}

/// Orthonormal basis of the numerical kernel of `m` (columns), using a
/// singular-value cutoff relative to the largest singular value.
pub fn kernel_basis(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let (r, c) = (m.nrows(), m.ncols());
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to square so the SVD yields a full right-singular basis.
    let mut sq = DMatrix::zeros(r.max(c), c);
    sq.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= rel_cutoff * smax)
        .map(|(i, _)| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(c, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Sines of the principal angles between the column spaces of two
/// orthonormal bases. Returns `None` when the dimensions differ.
pub fn principal_angle_sines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<Vec<f64>> {
    if a.ncols() != b.ncols() {
        return None;
    }
    if a.ncols() == 0 {
        return Some(Vec::new());
    }
    let resid = b - a * (a.transpose() * b);
    Some(resid.svd(false, false).singular_values.iter().copied().collect())
}

pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    if d == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&a| (a - theta).max(0.0)).collect()
}
