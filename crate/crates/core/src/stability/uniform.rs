use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::{interaction_graph, solve_skew_certificate, InteractionGraph, SkewCertificate};
use super::jacobian::{game_jacobian, matrix_rows, BlockMatrix};
use crate::error::{Error, Result};
use crate::game::{JointStrategy, NormalFormGame};
use crate::linalg::{block_diag, eigenvalues, min_sym_eigenvalue, random_orthogonal, sym_sqrt_and_inv_sqrt};

/// Real parts above this (in absolute value) witness instability.
pub const WITNESS_TOL: f64 = 1e-6;
/// Objective level at which a Pareto-improvement direction is accepted.
pub const IMPROVEMENT_TOL: f64 = 1e-8;
/// Conditioner eigenvalues are drawn log-uniformly from this range.
pub const CONDITIONER_RANGE: (f64, f64) = (1e-2, 1e2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pointwise {
    Stable,
    Unstable,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Block-diagonal PD conditioner `H` in tangent coordinates.
    pub conditioner: Vec<Vec<f64>>,
    pub dims: Vec<usize>,
    /// Eigenvalue of `H⁻¹J` as `[re, im]`.
    pub eigenvalue: [f64; 2],
    /// `identity`, `sampled` or `pareto_stretch`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumptions {
    pub connected: bool,
    pub bidirectional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformStabilityReport {
    pub pointwise: Pointwise,
    pub certificate: Option<SkewCertificate>,
    pub witness: Option<Witness>,
    /// Conjunction over a sampled neighbourhood, when one was checked.
    pub local: Option<bool>,
    pub assumptions: Assumptions,
    pub graph: InteractionGraph,
    /// Largest `|Re λ|` over the tried conditioners; absent on the
    /// certificate path.
    pub max_sampled_real_part: Option<f64>,
}

/// PD matrix `H` with `u = H v`, for `uᵀv > 0`.
///
/// Parallel vectors give a multiple of the identity. Otherwise `H` acts as
/// a positive diagonal in an orthonormal basis of `span{u, v}` rotated so
/// both vectors have positive coordinates, and as the identity on the
/// orthogonal complement.
pub fn pd_stretch(u: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::Dimension("pd_stretch needs vectors of equal nonzero length".into()));
    }
    let d = u.len();
    let uu = DVector::from_column_slice(u);
    let vv = DVector::from_column_slice(v);
    let (nu, nv) = (uu.norm(), vv.norm());
    if !(nu > 0.0 && nv > 0.0) {
        return Err(Error::Domain("pd_stretch needs nonzero vectors".into()));
    }
    let cos = uu.dot(&vv) / (nu * nv);
    if !(cos > 1e-12) {
        return Err(Error::Domain(format!("pd_stretch needs uᵀv > 0, cosine is {cos:e}")));
    }
    let uh = &uu / nu;
    let vh = &vv / nv;
    let perp = &uh - &vh * uh.dot(&vh);
    let h = if perp.norm() <= 1e-14 {
        DMatrix::identity(d, d) * (nu / nv)
    } else {
        let bis = (&uh + &vh).normalize();
        let orth = (&uh - &vh).normalize();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b1 = (&bis + &orth) * s;
        let b2 = (&bis - &orth) * s;
        let (a1, a2) = (b1.dot(&uu), b2.dot(&uu));
        let (c1, c2) = (b1.dot(&vv), b2.dot(&vv));
        let mut h = DMatrix::identity(d, d) - &b1 * b1.transpose() - &b2 * b2.transpose();
        h += &b1 * b1.transpose() * (a1 / c1) + &b2 * b2.transpose() * (a2 / c2);
        (&h + h.transpose()) * 0.5
    };
    let err = (&h * &vv - &uu).norm();
    if err > 1e-10 * nu.max(1.0) || !(min_sym_eigenvalue(&h) > 0.0) {
        return Err(Error::Domain(format!("pd_stretch verification failed (error {err:e})")));
    }
    Ok(h)
}

fn block_slices(dims: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for &d in dims {
        out.push((acc, d));
        acc += d;
    }
    out
}

/// Per-player improvement rates `x_nᵀ (Jx)_n`.
fn improvement_rates(j: &BlockMatrix, x: &DVector<f64>) -> Vec<f64> {
    let jx = &j.matrix * x;
    block_slices(&j.dims)
        .iter()
        .map(|&(o, d)| x.rows(o, d).dot(&jx.rows(o, d)))
        .collect()
}

/// Searches unit-norm tangent blocks `x` with `x_nᵀ(Jx)_n > 0` for every
/// player with a nontrivial tangent space.
///
/// Maximizes a soft minimum of the rates by normalized gradient ascent
/// from random starts. Returns the per-block directions of the first
/// restart whose true minimum exceeds [`IMPROVEMENT_TOL`].
pub fn pareto_improvement_search(j: &BlockMatrix, num_restarts: usize, rng_seed: u64) -> Option<Vec<Vec<f64>>> {
    const ITERS: usize = 400;
    let slices = block_slices(&j.dims);
    let active: Vec<usize> = (0..j.dims.len()).filter(|&n| j.dims[n] > 0).collect();
    if active.is_empty() || j.matrix.norm() <= 1e-12 {
        return None;
    }
    let scale = j.matrix.norm();
    let total = j.matrix.nrows();
    let normalize = |x: &mut DVector<f64>| {
        for &(o, d) in &slices {
            if d > 0 {
                let nrm = x.rows(o, d).norm();
                if nrm > 0.0 {
                    x.rows_mut(o, d).unscale_mut(nrm);
                }
            }
        }
    };
    (0..num_restarts).into_par_iter().find_map_first(|r| {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(r as u64);
        let mut x = DVector::from_fn(total, |_, _| rng.sample::<f64, _>(StandardNormal));
        normalize(&mut x);
        let temp = 0.05 * scale;
        for _ in 0..ITERS {
            let rates = improvement_rates(j, &x);
            let min = active.iter().map(|&n| rates[n]).fold(f64::INFINITY, f64::min);
            if min > IMPROVEMENT_TOL * scale.max(1.0) {
                break;
            }
            let w: Vec<f64> = (0..rates.len())
                .map(|n| if j.dims[n] > 0 { (-(rates[n] - min) / temp).exp() } else { 0.0 })
                .collect();
            // ∇ Σ w_n x_nᵀ(Jx)_n = W J x + Jᵀ W x with W = blockdiag(w_n I)
            let mut wx = x.clone();
            for (n, &(o, d)) in slices.iter().enumerate() {
                wx.rows_mut(o, d).scale_mut(w[n]);
            }
            let mut grad = j.matrix.tr_mul(&wx);
            let jx = &j.matrix * &x;
            for (n, &(o, d)) in slices.iter().enumerate() {
                let mut g = grad.rows_mut(o, d);
                g += jx.rows(o, d) * w[n];
            }
            // keep the step in each sphere's tangent plane
            for &(o, d) in &slices {
                let xb = x.rows(o, d).into_owned();
                let gb = grad.rows(o, d).into_owned();
                grad.rows_mut(o, d).copy_from(&(&gb - &xb * xb.dot(&gb)));
            }
            let gn = grad.norm();
            if gn == 0.0 {
                break;
            }
            x += grad * (0.1 / gn);
            normalize(&mut x);
        }
        let rates = improvement_rates(j, &x);
        let min = active.iter().map(|&n| rates[n]).fold(f64::INFINITY, f64::min);
        (min > IMPROVEMENT_TOL * scale.max(1.0)).then(|| {
            slices
                .iter()
                .map(|&(o, d)| x.rows(o, d).iter().copied().collect())
                .collect()
        })
    })
}

/// Random block-diagonal PD matrix: Haar rotation times log-uniform
/// eigenvalues in [`CONDITIONER_RANGE`], per block.
pub fn random_conditioner<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DMatrix<f64> {
    let (lo, hi) = (CONDITIONER_RANGE.0.ln(), CONDITIONER_RANGE.1.ln());
    let blocks: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&d| {
            let q = random_orthogonal(d, rng);
            let e = DVector::from_fn(d, |_, _| rng.gen_range(lo..hi).exp());
            &q * DMatrix::from_diagonal(&e) * q.transpose()
        })
        .collect();
    block_diag(&blocks)
}

/// Eigenvalue of `H⁻¹J` with the largest absolute real part, computed on
/// the similar matrix `H^{-1/2} J H^{-1/2}`.
pub fn conditioned_extreme_eigenvalue(j: &BlockMatrix, h: &DMatrix<f64>) -> Option<(f64, f64)> {
    let mut inv_sqrt_blocks = Vec::new();
    let off = j.offsets();
    for (n, &d) in j.dims.iter().enumerate() {
        let hb = h.view((off[n], off[n]), (d, d)).into_owned();
        inv_sqrt_blocks.push(sym_sqrt_and_inv_sqrt(&hb).1);
    }
    let s = block_diag(&inv_sqrt_blocks);
    let m = &s * &j.matrix * &s;
    eigenvalues(&m)
        .into_iter()
        .max_by(|a, b| a.re.abs().partial_cmp(&b.re.abs()).expect("finite eigenvalues"))
        .map(|z| (z.re, z.im))
}

/// Independent check: `H` is symmetric PD block-diagonal and `H⁻¹J`
/// (formed by a Cholesky solve) has an eigenvalue with `|Re| > tol`.
pub fn verify_witness(j: &BlockMatrix, h: &DMatrix<f64>, tol: f64) -> bool {
    let off = j.offsets();
    for n in 0..j.dims.len() {
        for m in 0..j.dims.len() {
            if n != m && h.view((off[n], off[m]), (j.dims[n], j.dims[m])).amax() != 0.0 {
                return false;
            }
        }
    }
    if (h - h.transpose()).amax() > 1e-12 * h.amax() {
        return false;
    }
    let Some(chol) = h.clone().cholesky() else {
        return false;
    };
    let m = chol.solve(&j.matrix);
    eigenvalues(&m).iter().any(|z| z.re.abs() > tol)
}

fn witness_from(j: &BlockMatrix, h: DMatrix<f64>, source: &str) -> Option<Witness> {
    let (re, im) = conditioned_extreme_eigenvalue(j, &h)?;
    (re.abs() > WITNESS_TOL && verify_witness(j, &h, WITNESS_TOL)).then(|| Witness {
        conditioner: matrix_rows(&h),
        dims: j.dims.clone(),
        eigenvalue: [re, im],
        source: source.into(),
    })
}

/// Decides uniform stability of a Jacobian given in tangent coordinates.
///
/// `stable` needs a feasible λ-skew certificate on a connected,
/// bidirectional interaction graph (or `J = 0`). `unstable` needs a
/// verified conditioner, from the identity, `num_conditioners` random
/// draws, or a Pareto-improvement direction stretched per block.
/// Anything else is `indeterminate`.
pub fn uniform_stability_check(j: &BlockMatrix, num_conditioners: usize, rng_seed: u64) -> UniformStabilityReport {
    let certificate = solve_skew_certificate(j);
    let graph = interaction_graph(j);
    let assumptions = Assumptions {
        connected: graph.connected,
        bidirectional: graph.bidirectional,
    };
    let report = |pointwise, witness, max_re| UniformStabilityReport {
        pointwise,
        certificate: Some(certificate.clone()),
        witness,
        local: None,
        assumptions: assumptions.clone(),
        graph: graph.clone(),
        max_sampled_real_part: max_re,
    };
    if j.matrix.amax() <= 1e-14 {
        return report(Pointwise::Stable, None, Some(0.0));
    }
    if certificate.feasible && graph.connected && graph.bidirectional {
        return report(Pointwise::Stable, None, None);
    }
    let total = j.matrix.nrows();
    let identity = DMatrix::identity(total, total);
    let mut max_re = conditioned_extreme_eigenvalue(j, &identity).map_or(0.0, |z| z.0.abs());
    if let Some(w) = witness_from(j, identity, "identity") {
        return report(Pointwise::Unstable, Some(w), Some(max_re));
    }
    let sampled: Vec<(f64, Option<Witness>)> = (0..num_conditioners)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(i as u64);
            let h = random_conditioner(&j.dims, &mut rng);
            let re = conditioned_extreme_eigenvalue(j, &h).map_or(0.0, |z| z.0.abs());
            let w = if re > WITNESS_TOL { witness_from(j, h, "sampled") } else { None };
            (re, w)
        })
        .collect();
    let mut found = None;
    for (re, w) in sampled {
        max_re = max_re.max(re);
        if found.is_none() {
            found = w;
        }
    }
    if found.is_none() {
        found = stretch_witness(j, rng_seed);
    }
    match found {
        Some(w) => report(Pointwise::Unstable, Some(w), Some(max_re)),
        None => report(Pointwise::Indeterminate, None, Some(max_re)),
    }
}

/// Conditioner `H` with `H⁻¹J x = x` built from a Pareto-improvement
/// direction `x` and a PD stretch per block.
fn stretch_witness(j: &BlockMatrix, seed: u64) -> Option<Witness> {
    let x = pareto_improvement_search(j, 32, seed)?;
    let flat = DVector::from_iterator(j.matrix.nrows(), x.iter().flatten().copied());
    let jx = &j.matrix * &flat;
    let mut blocks = Vec::new();
    for (n, &(o, d)) in block_slices(&j.dims).iter().enumerate() {
        if d == 0 {
            blocks.push(DMatrix::zeros(0, 0));
            continue;
        }
        let u: Vec<f64> = jx.rows(o, d).iter().copied().collect();
        blocks.push(pd_stretch(&u, &x[n]).ok()?);
    }
    witness_from(j, block_diag(&blocks), "pareto_stretch")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStabilityReport {
    pub center: UniformStabilityReport,
    pub samples: Vec<(JointStrategy, Pointwise)>,
    /// Every checked point is `stable`.
    pub all_stable: bool,
}

/// Runs [`uniform_stability_check`] at `x` and at `num_samples` interior
/// points within `radius` of it in the max norm.
pub fn local_uniform_stability(
    game: &NormalFormGame,
    x: &JointStrategy,
    radius: f64,
    num_samples: usize,
    rng_seed: u64,
) -> Result<LocalStabilityReport> {
    const CONDITIONERS: usize = 64;
    if !x.is_interior() {
        return Err(Error::Domain("local uniform stability needs an interior point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut center = uniform_stability_check(&game_jacobian(game, x)?.tangent(), CONDITIONERS, rng_seed);
    let mut samples = Vec::with_capacity(num_samples);
    for i in 0..num_samples {
        let y = sample_in_ball(x, radius, &mut rng)?;
        let r = uniform_stability_check(&game_jacobian(game, &y)?.tangent(), CONDITIONERS, rng_seed.wrapping_add(i as u64 + 1));
        samples.push((y, r.pointwise));
    }
    let all_stable = center.pointwise == Pointwise::Stable && samples.iter().all(|s| s.1 == Pointwise::Stable);
    center.local = Some(all_stable);
    Ok(LocalStabilityReport {
        center,
        samples,
        all_stable,
    })
}

/// Random interior point with `‖y − x‖∞ ≤ radius`: a centered uniform
/// perturbation, shrunk if needed to stay strictly inside.
pub(crate) fn sample_in_ball<R: Rng + ?Sized>(x: &JointStrategy, radius: f64, rng: &mut R) -> Result<JointStrategy> {
    let mut blocks = Vec::with_capacity(x.blocks().len());
    for b in x.blocks() {
        let k = b.len();
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = raw.iter().sum::<f64>() / k as f64;
        let mut p: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let amax = p.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if amax > 0.0 {
            p.iter_mut().for_each(|v| *v *= radius / amax);
        }
        let mut t: f64 = 1.0;
        for (a, d) in b.iter().zip(&p) {
            if *d < 0.0 {
                t = t.min(0.5 * a / -d);
            }
        }
        blocks.push(b.iter().zip(&p).map(|(a, d)| a + t * d).collect());
    }
    JointStrategy::normalized(blocks)
}
