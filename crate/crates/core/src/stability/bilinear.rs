use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative Frobenius error accepted for `A = λB`.
pub const SCALE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BilinearScale {
    Scale { lambda: f64 },
    /// `xᵀAy` and `xᵀBy` have different signs.
    Refuted { x: Vec<f64>, y: Vec<f64>, a_value: f64, b_value: f64 },
}

/// Decides whether `A = λB` for some `λ > 0` using singular vectors of `A`;
/// when not, returns a pair `(x, y)` on which the bilinear forms disagree
/// in sign.
pub fn bilinear_scale_recovery(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<BilinearScale> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension("A and B must have the same shape".into()));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Argument("empty matrices".into()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 && nb == 0.0 {
        return Err(Error::Argument("A and B are both zero".into()));
    }
    if nb > 0.0 && na > 0.0 {
        let svd = a.clone().svd(true, true);
        let (u, vt) = (svd.u.as_ref().expect("U"), svd.v_t.as_ref().expect("Vᵀ"));
        let i1 = argmax(svd.singular_values.as_slice());
        let u1 = u.column(i1);
        let v1 = vt.row(i1).transpose();
        let num = (u1.transpose() * a * &v1)[(0, 0)];
        let den = (u1.transpose() * b * &v1)[(0, 0)];
        if den != 0.0 {
            let lambda = num / den;
            if lambda > 0.0 && (a - b * lambda).norm() <= SCALE_TOL * na {
                return Ok(BilinearScale::Scale { lambda });
            }
        }
    }
    Ok(sign_witness(a, b))
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Searches sign-disagreeing pairs among singular-vector pairs of the
/// nonzero matrix, the combinations `(u_i + αu_1, v_i − αv_1)` around the
/// balancing `α² = σ_i/σ_1`, and seeded random combinations.
fn sign_witness(a: &DMatrix<f64>, b: &DMatrix<f64>) -> BilinearScale {
    let base = if a.norm() > 0.0 { a } else { b };
    let svd = base.clone().svd(true, true);
    let u = svd.u.expect("U");
    let vt = svd.v_t.expect("Vᵀ");
    let s = svd.singular_values;
    let r = s.len();
    let order = {
        let mut o: Vec<usize> = (0..r).collect();
        o.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("finite"));
        o
    };
    let us: Vec<DVector<f64>> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let vs: Vec<DVector<f64>> = order.iter().map(|&i| vt.row(i).transpose()).collect();
    let sv: Vec<f64> = order.iter().map(|&i| s[i]).collect();

    let mut candidates: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    for i in 0..r {
        for j in 0..r {
            candidates.push((us[i].clone(), vs[j].clone()));
            candidates.push((us[i].clone(), -&vs[j]));
        }
    }
    for i in 1..r {
        let bal = if sv[0] > 0.0 { (sv[i] / sv[0]).sqrt() } else { 1.0 };
        for f in [0.5, 0.9, 0.99, 1.0, 1.01, 1.1, 2.0] {
            for alpha in [bal * f, -bal * f] {
                candidates.push((&us[i] + &us[0] * alpha, &vs[i] - &vs[0] * alpha));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..2000 {
        let cx: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let cy: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let x = us.iter().zip(&cx).fold(DVector::zeros(a.nrows()), |acc, (v, c)| acc + v * *c);
        let y = vs.iter().zip(&cy).fold(DVector::zeros(a.ncols()), |acc, (v, c)| acc + v * *c);
        candidates.push((x, y));
    }
    let (sa, sb) = (a.norm().max(f64::MIN_POSITIVE), b.norm().max(f64::MIN_POSITIVE));
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, f64, f64)> = None;
    for (x, y) in candidates {
        let nx = x.norm() * y.norm();
        if nx == 0.0 {
            continue;
        }
        let av = (x.transpose() * a * &y)[(0, 0)];
        let bv = (x.transpose() * b * &y)[(0, 0)];
        let (ra, rb) = (av / (sa * nx), bv / (sb * nx));
        // strength of the disagreement: opposite strict signs, or one side zero
        let score = if ra * rb < 0.0 {
            ra.abs().min(rb.abs())
        } else if (ra == 0.0) != (rb == 0.0) || (ra.abs() < 1e-14) != (rb.abs() < 1e-14) {
            1e-14 * ra.abs().max(rb.abs())
        } else {
            continue;
        };
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, x, y, av, bv));
        }
    }
    match best {
        Some((_, x, y, av, bv)) => BilinearScale::Refuted {
            x: x.iter().copied().collect(),
            y: y.iter().copied().collect(),
            a_value: av,
            b_value: bv,
        },
        // proportional with a negative factor is caught above; this is a fallback
        None => {
            let x: Vec<f64> = us[0].iter().copied().collect();
            let y: Vec<f64> = vs[0].iter().copied().collect();
            let xv = DVector::from_column_slice(&x);
            let yv = DVector::from_column_slice(&y);
            BilinearScale::Refuted {
                a_value: (xv.transpose() * a * &yv)[(0, 0)],
                b_value: (xv.transpose() * b * &yv)[(0, 0)],
                x,
                y,
            }
        }
    }
}
