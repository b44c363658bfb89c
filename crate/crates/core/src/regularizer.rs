//! Steep regularizers on the probability simplex.
//!
//! Two kinds are provided: negative entropy `Σ x_i ln x_i` and the family
//! `λ Σ x_i ln x_i + ½‖A(x − w)‖²`, which realizes every positive-definite
//! tangent Hessian at a chosen interior point (see
//! [`make_regularizer_with_hessian`]). Gradients and Hessians are taken on
//! the face of the simplex containing the point and represented in ambient
//! coordinates.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{face_projector, min_sym_eigenvalue, tangent_basis};
use crate::response::{newton_argmax, regularized_argmax};

/// Maximum number of halvings of `λ` when constructing a regularizer with a
/// prescribed Hessian.
pub const MAX_LAMBDA_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    Entropy,
    QuadraticEntropy {
        lambda: f64,
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        w: Vec<f64>,
    },
}

/// Hessian of a regularizer on a face of the simplex with its
/// Moore–Penrose pseudoinverse; both vanish outside `support`.
#[derive(Debug, Clone)]
pub struct FaceHessian {
    pub support: Vec<usize>,
    pub hessian: DMatrix<f64>,
    pub pseudoinverse: DMatrix<f64>,
}

impl Regularizer {
    pub fn quadratic_entropy(lambda: f64, a: &DMatrix<f64>, w: Vec<f64>) -> Result<Self> {
        let rows = (0..a.nrows())
            .map(|i| a.row(i).iter().copied().collect())
            .collect();
        let r = Regularizer::QuadraticEntropy { lambda, a: rows, w };
        r.validate()?;
        Ok(r)
    }

    /// Checks the parameters of a (possibly deserialized) regularizer.
    pub fn validate(&self) -> Result<()> {
        if let Regularizer::QuadraticEntropy { lambda, a, w } = self {
            if !(*lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::Argument(format!("lambda must be positive, got {lambda}")));
            }
            let k = w.len();
            if k == 0 || a.len() != k || a.iter().any(|r| r.len() != k) {
                return Err(Error::Argument("A must be k×k with k = len(w)".into()));
            }
            let m = self.a_matrix().expect("quadratic kind");
            if m.iter().chain(w).any(|v| !v.is_finite()) {
                return Err(Error::Argument("non-finite regularizer parameter".into()));
            }
            let svd = m.svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if !(smin > 1e-14 * smax.max(1.0)) {
                return Err(Error::Argument("A must be invertible".into()));
            }
        }
        Ok(())
    }

    /// Fixed dimension, if the regularizer carries one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Regularizer::Entropy => None,
            Regularizer::QuadraticEntropy { w, .. } => Some(w.len()),
        }
    }

    pub(crate) fn entropy_weight(&self) -> f64 {
        match self {
            Regularizer::Entropy => 1.0,
            Regularizer::QuadraticEntropy { lambda, .. } => *lambda,
        }
    }

    fn a_matrix(&self) -> Option<DMatrix<f64>> {
        match self {
            Regularizer::Entropy => None,
            Regularizer::QuadraticEntropy { a, .. } => {
                let k = a.len();
                Some(DMatrix::from_fn(k, k, |i, j| a[i][j]))
            }
        }
    }

    /// `(AᵀA, AᵀA w)` for the quadratic kind.
    pub(crate) fn quadratic_terms(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let a = self.a_matrix()?;
        let Regularizer::QuadraticEntropy { w, .. } = self else {
            unreachable!()
        };
        let ata = a.transpose() * &a;
        let c = &ata * DVector::from_column_slice(w);
        Some((ata, c))
    }

    fn check_dim(&self, k: usize) -> Result<()> {
        match self.dimension() {
            Some(d) if d != k => Err(Error::Dimension(format!(
                "regularizer has dimension {d}, point has {k}"
            ))),
            _ => Ok(()),
        }
    }

    /// `h(x)` with `0·ln 0 = 0`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        if x.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain("regularizer evaluated at a negative entry".into()));
        }
        let ent: f64 = x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
        let mut out = self.entropy_weight() * ent;
        if let (Some(a), Regularizer::QuadraticEntropy { w, .. }) = (self.a_matrix(), self) {
            let d = DVector::from_iterator(x.len(), x.iter().zip(w).map(|(p, q)| p - q));
            out += 0.5 * (a * d).norm_squared();
        }
        Ok(out)
    }

    fn check_face(&self, x: &[f64], support: &[usize]) -> Result<()> {
        self.check_dim(x.len())?;
        if support.is_empty() || support.iter().any(|&i| i >= x.len()) {
            return Err(Error::Argument(format!("invalid support {support:?}")));
        }
        for (i, &v) in x.iter().enumerate() {
            let inside = support.contains(&i);
            if inside && !(v > 0.0) {
                return Err(Error::Domain(format!(
                    "entry {i} is {v} but the face claims it in the support"
                )));
            }
            if !inside && v != 0.0 {
                return Err(Error::Domain(format!("entry {i} is {v}, point is not on the face")));
            }
        }
        Ok(())
    }

    /// Gradient on the face `support`, centered over the support.
    pub fn tangent_gradient_on_face(&self, x: &[f64], support: &[usize]) -> Result<Vec<f64>> {
        self.check_face(x, support)?;
        let k = x.len();
        let lam = self.entropy_weight();
        let mut g = DVector::zeros(k);
        for &i in support {
            g[i] = lam * x[i].ln();
        }
        if let Some((ata, c)) = self.quadratic_terms() {
            g += &ata * DVector::from_column_slice(x) - c;
        }
        Ok((face_projector(k, support) * g).iter().copied().collect())
    }

    /// Gradient on the face spanned by the support of `x`.
    pub fn tangent_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
        self.tangent_gradient_on_face(x, &support)
    }

    /// Hessian and pseudoinverse on the face `support`.
    ///
    /// The entropic pseudoinverse uses the closed form
    /// `(1/λ)(diag(x) − x xᵀ/Σx)`; the quadratic kind solves the bordered
    /// system with a diagonal rescaling. Both stay accurate when some
    /// probabilities are tiny and `diag(1/x)` is badly scaled.
    pub fn face_hessian(&self, x: &[f64], support: &[usize]) -> Result<FaceHessian> {
        self.check_face(x, support)?;
        let k = x.len();
        let lam = self.entropy_weight();
        let mut inner = DMatrix::zeros(k, k);
        for &i in support {
            inner[(i, i)] = lam / x[i];
        }
        let quad = self.quadratic_terms();
        if let Some((ata, _)) = &quad {
            inner += ata;
        }
        let p = face_projector(k, support);
        let hessian = &p * &inner * &p;
        let pseudoinverse = match quad {
            None => entropic_pinv(x, support, lam),
            Some(_) => bordered_pinv(&inner, support)?,
        };
        Ok(FaceHessian {
            support: support.to_vec(),
            hessian,
            pseudoinverse,
        })
    }

    /// `max h − min h` over the simplex of dimension `k` (the constant in the
    /// smoothed-to-Nash bound).
    pub fn range_bound(&self, k: usize) -> Result<f64> {
        self.check_dim(k)?;
        match self {
            Regularizer::Entropy => Ok((k as f64).ln()),
            Regularizer::QuadraticEntropy { .. } => {
                // convex ⇒ max at a vertex; min by the regularized solver with v = 0
                let mut hi = f64::NEG_INFINITY;
                for i in 0..k {
                    let mut e = vec![0.0; k];
                    e[i] = 1.0;
                    hi = hi.max(self.value(&e)?);
                }
                let argmin = newton_argmax(self, &vec![0.0; k], 1.0, 1e-13, 10_000)?;
                Ok(hi - self.value(&argmin)?)
            }
        }
    }
}

fn entropic_pinv(x: &[f64], support: &[usize], lam: f64) -> DMatrix<f64> {
    let k = x.len();
    let s: f64 = support.iter().map(|&i| x[i]).sum();
    let mut out = DMatrix::zeros(k, k);
    for &i in support {
        for &j in support {
            let d = if i == j { x[i] } else { 0.0 };
            out[(i, j)] = (d - x[i] * x[j] / s) / lam;
        }
    }
    out
}

/// Tangent inverse of `Π_S P Π_S` via `[[P, 𝟙],[𝟙ᵀ, 0]]` restricted to `S`,
/// with Jacobi scaling of `P`.
fn bordered_pinv(inner: &DMatrix<f64>, support: &[usize]) -> Result<DMatrix<f64>> {
    let k = inner.nrows();
    let s = support.len();
    let scale: Vec<f64> = support.iter().map(|&i| 1.0 / inner[(i, i)].abs().sqrt()).collect();
    let mut kkt = DMatrix::zeros(s + 1, s + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = scale[a] * inner[(i, j)] * scale[b];
        }
        kkt[(a, s)] = scale[a];
        kkt[(s, a)] = scale[a];
    }
    let lu = kkt.lu();
    let proj = face_projector(s, &(0..s).collect::<Vec<_>>());
    let mut out = DMatrix::zeros(k, k);
    for col in 0..s {
        let mut rhs = DVector::zeros(s + 1);
        for a in 0..s {
            rhs[a] = proj[(a, col)] * scale[a];
        }
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Domain("singular face Hessian".into()))?;
        for (a, &i) in support.iter().enumerate() {
            out[(i, support[col])] = scale[a] * sol[a];
        }
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Builds `λ Σ x ln x + ½‖A(x − w)‖²` whose tangent gradient vanishes at the
/// interior point `x` and whose tangent Hessian there equals `m`.
///
/// `λ` is the largest of `1, ½, ¼, …` keeping `M + 𝟙𝟙ᵀ − λ diag(1/x)`
/// positive definite; `A` is its Cholesky factor and
/// `w = x + λ (AᵀA)⁻¹ ln x`.
pub fn make_regularizer_with_hessian(x: &[f64], m: &DMatrix<f64>) -> Result<Regularizer> {
    let k = x.len();
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("target point must be interior".into()));
    }
    if (x.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("target point must lie on the simplex".into()));
    }
    if m.nrows() != k || m.ncols() != k {
        return Err(Error::Dimension(format!("target Hessian must be {k}×{k}")));
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Argument("target Hessian must be symmetric".into()));
    }
    if (m * DVector::from_element(k, 1.0)).amax() > 1e-10 * scale {
        return Err(Error::Argument("target Hessian must annihilate the all-ones vector".into()));
    }
    let q = tangent_basis(k, &(0..k).collect::<Vec<_>>());
    if !(min_sym_eigenvalue(&(q.transpose() * m * &q)) > 0.0) {
        return Err(Error::Argument("target Hessian is not positive definite on the tangent space".into()));
    }
    let ones = DMatrix::from_element(k, k, 1.0);
    let base = (m + m.transpose()) * 0.5 + ones;
    let mut lambda = 1.0;
    for _ in 0..=MAX_LAMBDA_HALVINGS {
        let mut ata = base.clone();
        for i in 0..k {
            ata[(i, i)] -= lambda / x[i];
        }
        if let Some(chol) = Cholesky::new(ata.clone()) {
            let a = chol.l().transpose();
            let logx = DVector::from_iterator(k, x.iter().map(|v| v.ln()));
            let shift = chol.solve(&logx) * lambda;
            let w: Vec<f64> = x.iter().zip(shift.iter()).map(|(p, s)| p + s).collect();
            return Regularizer::quadratic_entropy(lambda, &a, w);
        }
        lambda *= 0.5;
    }
    Err(Error::Convergence {
        iterations: MAX_LAMBDA_HALVINGS,
        residual: lambda,
    })
}

/// Mass that the regularized maximizer puts on an `eps`-suboptimal index
/// `i`, divided by `β`, for each `β` in `betas`.
///
/// Each entry is the largest ratio over a fixed family of probe vectors
/// with `v_i = max_j v_j − eps`: the remaining entries sit at the maximum,
/// at `v_i`, or one unit below `v_i`. Only this boundary slice of the
/// suboptimal set is probed, not its interior.
pub fn linear_steepness_probe(
    r: &Regularizer,
    k: usize,
    i: usize,
    eps: f64,
    betas: &[f64],
) -> Result<Vec<f64>> {
    if k < 2 || i >= k {
        return Err(Error::Argument(format!("index {i} invalid for dimension {k}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::Argument("eps must be non-negative".into()));
    }
    r.check_dim(k)?;
    let top = (i + 1) % k;
    let probes: Vec<Vec<f64>> = [0.0, -eps, -eps - 1.0]
        .iter()
        .map(|&rest| {
            let mut v = vec![rest; k];
            v[top] = 0.0;
            v[i] = -eps;
            v
        })
        .collect();
    betas
        .iter()
        .map(|&beta| {
            if !(beta > 0.0) {
                return Err(Error::Argument("beta must be positive".into()));
            }
            let mut worst: f64 = 0.0;
            for v in &probes {
                let x = regularized_argmax(r, v, beta, 1e-13, 10_000)?;
                worst = worst.max(x[i] / beta);
            }
            Ok(worst)
        })
        .collect()
}
