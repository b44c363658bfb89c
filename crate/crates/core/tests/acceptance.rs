//! Acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; the process exits nonzero
//! if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gamedyn::bundled;
use gamedyn::dynamics::{eta_threshold, run, stability_verdict, DynamicsConfig};
use gamedyn::linalg::{eigenvalues, min_sym_eigenvalue};
use gamedyn::response::{find_smoothed_equilibrium, response_jacobian, smoothed_best_response};
use gamedyn::stability::{
    bilinear_scale_recovery, boundary_convergence_check, game_jacobian, pd_stretch, random_conditioner,
    solve_skew_certificate, uniform_stability_check, verify_witness, weak_pareto_oracle, BilinearScale, BlockMatrix,
    ParetoVerdict, Pointwise,
};
use gamedyn::{JointStrategy, NormalFormGame, Regularizer, SmoothedResponseConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

fn mixed_shapes() -> Vec<Vec<usize>> {
    vec![
        vec![2, 2],
        vec![3, 3],
        vec![4, 4],
        vec![2, 3],
        vec![3, 4],
        vec![2, 2, 2],
        vec![3, 3, 2],
        vec![4, 3, 2],
    ]
}

// 1. Smoothed equilibria are (β·max ln k)-Nash.
fn criterion_1() -> Outcome {
    let betas = [1.0, 0.3, 0.1, 0.03, 0.01];
    let mut games = vec![
        bundled::matching_pennies(),
        bundled::coordination_2x2(),
        bundled::example_a(),
        bundled::matching_pennies_with_dominated_action(),
    ];
    let mut r = rng(1);
    for s in mixed_shapes() {
        games.push(NormalFormGame::random(&s, &mut r).unwrap());
    }
    let (mut found, mut tried, mut worst_slack) = (0, 0, f64::INFINITY);
    let mut ok = true;
    for g in &games {
        let cfg = SmoothedResponseConfig::entropy(1.0, g.num_players());
        let lnk = g.shape().iter().map(|&k| (k as f64).ln()).fold(0.0, f64::max);
        let mut x = JointStrategy::uniform(g.shape());
        for &b in &betas {
            tried += 1;
            let Ok(eq) = find_smoothed_equilibrium(g, &cfg.with_beta(b), &x, 1e-12, 100_000) else {
                continue;
            };
            found += 1;
            let slack = b * lnk + 1e-9 - eq.nash_gap;
            worst_slack = worst_slack.min(slack);
            ok &= slack >= 0.0;
            x = eq.point;
        }
    }
    outcome(
        ok && found > 0,
        format!("{found}/{tried} smoothed equilibria found; min slack β·max ln k + 1e-9 − gap = {worst_slack:.3e}"),
    )
}

// 2. Contraction rate at the sampled step-size threshold.
fn criterion_2() -> Outcome {
    let g = bundled::matching_pennies();
    let cfg = SmoothedResponseConfig::entropy(0.1, 2);
    let eq = find_smoothed_equilibrium(&g, &cfg, &JointStrategy::uniform(&[2, 2]), 1e-14, 100_000).unwrap();
    let eta = eta_threshold(&g, &cfg, &eq).unwrap().eta;
    let t_final = 5000;
    let dcfg = DynamicsConfig {
        record_every: t_final,
        ..DynamicsConfig::new(eta, cfg, t_final)
    };
    let rate = (-eta / 2.0).exp() * (1.0 + 1e-6);
    let final_bound = (-(eta * t_final as f64 + 2f64.ln()) / 2.0).exp();
    let mut r = rng(2);
    let (mut max_ratio, mut max_final): (f64, f64) = (0.0, 0.0);
    // last step at which any run exceeds the per-step rate
    let mut last_violation = 0;
    for _ in 0..10 {
        let x0 = JointStrategy::random(&[2, 2], &mut r);
        let traj = run(&g, &dcfg, &x0, Some(&eq)).unwrap();
        let ratios = traj.ratios().unwrap();
        max_ratio = ratios[100..].iter().copied().fold(max_ratio, f64::max);
        if let Some(t) = ratios.iter().rposition(|&q| q > rate) {
            last_violation = last_violation.max(t);
        }
        max_final = max_final.max(traj.final_distance().unwrap());
    }
    let per_step = max_ratio <= rate;
    let fin = max_final <= final_bound;
    outcome(
        per_step && fin,
        format!(
            "η = {eta:.4e}; per-step: max ratio {max_ratio:.8} vs exp(−η/2)(1+1e-6) = {rate:.8} [{}], \
             last violating step {last_violation}; \
             final: max ‖x(T)−x^β‖ {max_final:.3e} vs {final_bound:.3e} [{}]",
            if per_step { "ok" } else { "violated" },
            if fin { "ok" } else { "violated" },
        ),
    )
}

// 3. The mixed coordination equilibrium is unstable for every step size.
fn criterion_3() -> Outcome {
    let g = bundled::coordination_2x2();
    let mut min_rho = f64::INFINITY;
    let mut max_escape = 0usize;
    let mut ok = true;
    for &b in &[0.1, 0.03, 0.01] {
        let cfg = SmoothedResponseConfig::entropy(b, 2);
        let eq = find_smoothed_equilibrium(&g, &cfg, &JointStrategy::uniform(&[2, 2]), 1e-14, 1000).unwrap();
        for &eta in &[0.001, 0.01, 0.1, 0.5, 0.9] {
            let dcfg = DynamicsConfig::new(eta, cfg.clone(), 1);
            let v = stability_verdict(&g, &dcfg, &eq).unwrap();
            min_rho = min_rho.min(v.jacobian_spectral_radius);
            ok &= v.jacobian_spectral_radius > 1.0;
            let mut blocks = eq.point.blocks().to_vec();
            blocks[0][0] += 1e-4;
            blocks[0][1] -= 1e-4;
            let mut x = JointStrategy::new(blocks).unwrap();
            let mut escaped = None;
            for t in 1..=100_000 {
                x = gamedyn::dynamics::step(&g, &dcfg, &x).unwrap();
                if x.distance(&eq.point) > 1e-2 {
                    escaped = Some(t);
                    break;
                }
            }
            match escaped {
                Some(t) => max_escape = max_escape.max(t),
                None => ok = false,
            }
        }
    }
    outcome(
        ok,
        format!("min spectral radius {min_rho:.6}; slowest escape from the 1e-2 ball after {max_escape} steps"),
    )
}

fn random_dims(r: &mut ChaCha8Rng) -> Vec<usize> {
    let n = r.gen_range(2..=4);
    (0..n).map(|_| r.gen_range(1..=4)).collect()
}

/// `J_mn = −(λ_n/λ_m) J_nmᵀ` for a dense random upper part.
fn skew_block(dims: &[usize], lambdas: &[f64], r: &mut ChaCha8Rng) -> BlockMatrix {
    let mut j = BlockMatrix::zeros(dims.to_vec());
    for n in 0..dims.len() {
        for m in n + 1..dims.len() {
            let b = gaussian(r, dims[n], dims[m]);
            j.set_block(n, m, &b);
            j.set_block(m, n, &(b.transpose() * (-lambdas[n] / lambdas[m])));
        }
    }
    j
}

// 4. λ-skew Jacobians have imaginary conditioned spectra; perturbed ones
// admit a witness.
fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let dims = random_dims(&mut r);
        let lambdas: Vec<f64> = (0..dims.len()).map(|_| r.gen_range(-2.0f64..2.0).exp()).collect();
        let j = skew_block(&dims, &lambdas, &mut r);
        for _ in 0..100 {
            let h = random_conditioner(&dims, &mut r);
            let m = h.clone().cholesky().unwrap().solve(&j.matrix);
            let ev = eigenvalues(&m);
            let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let re = ev.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            if rho > 0.0 {
                worst = worst.max(re / rho);
            }
        }
    }
    let mut witnessed = 0;
    let mut sampled = 0;
    for i in 0..100 {
        let dims = random_dims(&mut r);
        let lambdas: Vec<f64> = (0..dims.len()).map(|_| r.gen_range(-2.0f64..2.0).exp()).collect();
        let mut j = skew_block(&dims, &lambdas, &mut r);
        // symmetric perturbation of one off-diagonal pair, redrawn until
        // that pair admits no positive ratio a with J_nm = −a J_mnᵀ
        let (n, m) = (0, r.gen_range(1..dims.len()));
        let (jnm, jmn) = (j.block(n, m), j.block(m, n));
        let (pnm, pmn) = loop {
            let p = gaussian(&mut r, dims[n], dims[m]) * 0.5;
            let (a, b) = (&jnm + &p, &jmn + p.transpose());
            let bt = b.transpose();
            let ratio = -a.dot(&bt) / bt.norm_squared();
            if ratio <= 0.0 || (&a + &bt * ratio).norm() > 0.1 * a.norm() {
                break (a, b);
            }
        };
        j.set_block(n, m, &pnm);
        j.set_block(m, n, &pmn);
        let rep = uniform_stability_check(&j, 64, i);
        if let (Pointwise::Unstable, Some(w)) = (rep.pointwise, &rep.witness) {
            let h = DMatrix::from_row_iterator(j.matrix.nrows(), j.matrix.ncols(), w.conditioner.iter().flatten().copied());
            if verify_witness(&j, &h, 1e-6) {
                witnessed += 1;
                sampled += usize::from(w.source != "pareto_stretch");
            }
        }
    }
    outcome(
        worst <= 1e-8 && witnessed == 100,
        format!(
            "skew: max |Re|/ρ = {worst:.3e} over 10^4 conditioned spectra; \
             non-skew: {witnessed}/100 verified witnesses ({sampled} from identity or sampling)"
        ),
    )
}

// 5. Certificate recovery on path, cycle and complete graphs.
fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut worst_lambda = 0.0_f64;
    let mut worst_res = 0.0_f64;
    let mut all_feasible = true;
    for topology in ["path", "cycle", "complete"] {
        for _ in 0..30 {
            let n = r.gen_range(3..=6);
            let dims: Vec<usize> = (0..n).map(|_| r.gen_range(1..=4)).collect();
            let lambdas: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0f64..2.0).exp()).collect();
            let edges: Vec<(usize, usize)> = match topology {
                "path" => (0..n - 1).map(|i| (i, i + 1)).collect(),
                "cycle" => (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect(),
                _ => (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect(),
            };
            let mut j = BlockMatrix::zeros(dims.clone());
            for &(a, b) in &edges {
                let blk = gaussian(&mut r, dims[a], dims[b]);
                j.set_block(a, b, &blk);
                j.set_block(b, a, &(blk.transpose() * (-lambdas[a] / lambdas[b])));
            }
            let c = solve_skew_certificate(&j);
            all_feasible &= c.feasible;
            for (got, want) in c.lambdas.iter().zip(&lambdas) {
                let want = want / lambdas[0];
                worst_lambda = worst_lambda.max((got - want).abs() / want);
            }
            worst_res = worst_res.max(c.residual);
        }
    }
    outcome(
        all_feasible && worst_lambda <= 1e-9 && worst_res <= 1e-9,
        format!("90 instances: max relative λ error {worst_lambda:.3e}, max residual {worst_res:.3e}"),
    )
}

// 6. PD stretch.
fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let (mut worst_fit, mut min_eig, mut accepted, mut rejected) = (0.0_f64, f64::INFINITY, 0, 0);
    let mut tried_bad = 0;
    while accepted < 1000 || tried_bad < 1000 {
        let d = r.gen_range(2..=8);
        let u = DVector::from_fn(d, |_, _| r.sample::<f64, _>(StandardNormal));
        let v = DVector::from_fn(d, |_, _| r.sample::<f64, _>(StandardNormal));
        let uv = u.dot(&v);
        if uv > 1e-12 && accepted < 1000 {
            let h = pd_stretch(u.as_slice(), v.as_slice()).unwrap();
            worst_fit = worst_fit.max((&h * &v - &u).amax());
            min_eig = min_eig.min(min_sym_eigenvalue(&h));
            accepted += 1;
        } else if uv <= 0.0 && tried_bad < 1000 {
            tried_bad += 1;
            rejected += usize::from(pd_stretch(u.as_slice(), v.as_slice()).is_err());
        }
    }
    // exactly orthogonal pair
    rejected += usize::from(pd_stretch(&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0]).is_err());
    outcome(
        worst_fit <= 1e-10 && min_eig > 0.0 && rejected == 1001,
        format!("1000 pairs: max |Hv−u| {worst_fit:.3e}, min eig {min_eig:.3e}; rejected {rejected}/1001 with uᵀv ≤ 0"),
    )
}

// 7. Bilinear scale recovery.
fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut worst = 0.0_f64;
    let mut ok = true;
    for &lambda in &[0.5, 1.0, 3.0] {
        for _ in 0..20 {
            let (p, q) = (r.gen_range(1..=6), r.gen_range(1..=6));
            let b = gaussian(&mut r, p, q);
            match bilinear_scale_recovery(&(&b * lambda), &b).unwrap() {
                BilinearScale::Scale { lambda: got } => worst = worst.max((got - lambda).abs()),
                BilinearScale::Refuted { .. } => ok = false,
            }
        }
    }
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    let refuted = match bilinear_scale_recovery(&a, &DMatrix::identity(2, 2)).unwrap() {
        BilinearScale::Refuted { x, y, .. } => {
            let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
            let av = x.dot(&(&a * &y));
            let bv = x.dot(&y);
            av * bv < 0.0
        }
        BilinearScale::Scale { .. } => false,
    };
    outcome(
        ok && worst <= 1e-9 && refuted,
        format!("60 instances: max |λ̂ − λ| {worst:.3e}; diag(1,2) vs I refuted with a verified sign witness: {refuted}"),
    )
}

// 8. The 3×3 example game.
fn criterion_8() -> Outcome {
    let g = bundled::example_a();
    let nash = JointStrategy::pure(&[3, 3], &[1, 1]).unwrap();
    let top = JointStrategy::pure(&[3, 3], &[0, 0]).unwrap();
    let gap_nash = g.epsilon_nash_gap(&nash).unwrap();
    let u_nash = [g.utility(&nash, 0).unwrap(), g.utility(&nash, 1).unwrap()];
    let witness_ok = matches!(
        weak_pareto_oracle(&g, &nash, 21).unwrap(),
        ParetoVerdict::Improvement { ref point, ref utilities } if *point == top && *utilities == vec![4.0, 4.0]
    );
    let gap_top = g.epsilon_nash_gap(&top).unwrap();
    let top_optimal = weak_pareto_oracle(&g, &top, 21).unwrap() == ParetoVerdict::OptimalAtResolution { resolution: 21 };
    outcome(
        gap_nash == 0.0 && u_nash == [2.0, 2.0] && witness_ok && gap_top == 2.0 && top_optimal,
        format!(
            "(A2,B2): gap {gap_nash}, utilities {u_nash:?}, witness (A1,B1) at (4,4): {witness_ok}; \
             (A1,B1): gap {gap_top}, optimal at resolution 21: {top_optimal}"
        ),
    )
}

// 9. Partially mixed equilibrium with a dominated action.
fn criterion_9() -> Outcome {
    let g = bundled::matching_pennies_with_dominated_action();
    let x_star = JointStrategy::new(vec![vec![0.5, 0.5], vec![0.5, 0.5, 0.0]]).unwrap();
    let rep = boundary_convergence_check(
        &g,
        &[Regularizer::Entropy, Regularizer::Entropy],
        &x_star,
        &[0.3, 0.1, 0.03, 0.01],
        Some(4.0),
    )
    .unwrap();
    let last = rep.rows.last().unwrap().off_support_ratio;
    let ratios: Vec<String> = rep.rows.iter().map(|r| format!("{:.3e}", r.off_support_ratio)).collect();
    let slack = rep.rows.iter().map(|r| r.bound - r.operator_norm).fold(f64::INFINITY, f64::min);
    outcome(
        rep.ratios_decreasing && last < 1e-3 && rep.all_bounds_hold,
        format!("off-support/β = [{}]; min exp(−η/2) − ‖Jac‖₂ = {slack:.3e}", ratios.join(", ")),
    )
}

fn random_offsets(g: &NormalFormGame, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let shape = g.shape();
    (0..shape.len())
        .map(|n| {
            let len: usize = shape.iter().enumerate().filter(|&(a, _)| a != n).map(|(_, &k)| k).product();
            (0..len).map(|_| r.gen_range(-5.0..5.0)).collect()
        })
        .collect()
}

// 10. Non-strategic offsets change nothing.
fn criterion_10() -> Outcome {
    let mut r = rng(10);
    let shapes = mixed_shapes();
    let (mut traj_diff, mut eq_diff, mut cert_diff) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut mismatched_outcomes = 0;
    for i in 0..20 {
        let g = NormalFormGame::random(&shapes[i % shapes.len()], &mut r).unwrap();
        let h = g.with_offsets(&random_offsets(&g, &mut r)).unwrap();
        let cfg = SmoothedResponseConfig::entropy(0.5, g.num_players());
        let x0 = JointStrategy::random(g.shape(), &mut r);
        let dcfg = DynamicsConfig::new(0.2, cfg.clone(), 200);
        let (ta, tb) = (run(&g, &dcfg, &x0, None).unwrap(), run(&h, &dcfg, &x0, None).unwrap());
        for (a, b) in ta.points.iter().zip(&tb.points) {
            traj_diff = traj_diff.max(a.max_abs_diff(b));
        }
        let u = JointStrategy::uniform(g.shape());
        match (
            find_smoothed_equilibrium(&g, &cfg, &u, 1e-12, 100_000),
            find_smoothed_equilibrium(&h, &cfg, &u, 1e-12, 100_000),
        ) {
            (Ok(a), Ok(b)) => eq_diff = eq_diff.max(a.point.max_abs_diff(&b.point)),
            (Err(_), Err(_)) => {}
            _ => mismatched_outcomes += 1,
        }
        let ca = solve_skew_certificate(&game_jacobian(&g, &x0).unwrap().tangent());
        let cb = solve_skew_certificate(&game_jacobian(&h, &x0).unwrap().tangent());
        if ca.feasible != cb.feasible {
            mismatched_outcomes += 1;
        }
        cert_diff = cert_diff.max((ca.residual - cb.residual).abs());
        for (a, b) in ca.lambdas.iter().zip(&cb.lambdas) {
            cert_diff = cert_diff.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    outcome(
        traj_diff <= 1e-9 && eq_diff <= 1e-9 && cert_diff <= 1e-9 && mismatched_outcomes == 0,
        format!(
            "20 games: trajectory diff {traj_diff:.3e}, equilibrium diff {eq_diff:.3e}, \
             certificate diff {cert_diff:.3e}, mismatched outcomes {mismatched_outcomes}"
        ),
    )
}

fn tangent_direction(k: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| r.sample(StandardNormal)).collect();
    let mean = v.iter().sum::<f64>() / k as f64;
    v.iter().map(|a| a - mean).collect()
}

fn interior_point(shape: &[usize], r: &mut ChaCha8Rng) -> JointStrategy {
    let blocks = shape
        .iter()
        .map(|&k| (0..k).map(|_| r.gen_range(0.2..1.0)).collect())
        .collect();
    JointStrategy::normalized(blocks).unwrap()
}

fn shifted(x: &JointStrategy, dir: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    x.blocks()
        .iter()
        .zip(dir)
        .map(|(b, d)| b.iter().zip(d).map(|(a, e)| a + h * e).collect())
        .collect()
}

fn random_quadratic(k: usize, r: &mut ChaCha8Rng) -> Regularizer {
    let a = gaussian(r, k, k) * 0.7;
    let w: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..1.0)).collect();
    Regularizer::quadratic_entropy(r.gen_range(0.1..1.0), &a, w).unwrap()
}

// 11. Finite-difference consistency.
fn criterion_11() -> Outcome {
    const H: f64 = 1e-5;
    let mut r = rng(11);
    let (mut e_grad, mut e_cross, mut e_resp, mut e_reg_grad, mut e_reg_hess) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut shapes = vec![vec![3, 3, 3], vec![2, 3, 2]];
    while shapes.len() < 50 {
        let n = r.gen_range(2..=3);
        shapes.push((0..n).map(|_| r.gen_range(2..=3)).collect());
    }
    for (gi, shape) in shapes.iter().enumerate() {
        let g = NormalFormGame::random(shape, &mut r).unwrap();
        let x = interior_point(shape, &mut r);
        let np = shape.len();
        for n in 0..np {
            // utility along a tangent direction of block n
            let mut dir: Vec<Vec<f64>> = shape.iter().map(|&k| vec![0.0; k]).collect();
            dir[n] = tangent_direction(shape[n], &mut r);
            let fd = (g.utility(&shifted(&x, &dir, H), n).unwrap() - g.utility(&shifted(&x, &dir, -H), n).unwrap()) / (2.0 * H);
            let an: f64 = g.gradient(&x, n).unwrap().iter().zip(&dir[n]).map(|(a, b)| a * b).sum();
            e_grad = e_grad.max((fd - an).abs());
            for m in (0..np).filter(|&m| m != n) {
                let mut dm: Vec<Vec<f64>> = shape.iter().map(|&k| vec![0.0; k]).collect();
                dm[m] = tangent_direction(shape[m], &mut r);
                let gp = g.gradient(&shifted(&x, &dm, H), n).unwrap();
                let gm = g.gradient(&shifted(&x, &dm, -H), n).unwrap();
                let fd = DVector::from_iterator(shape[n], gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * H)));
                let fd = gamedyn::linalg::centering(shape[n]) * fd;
                let an = g.cross_hessian(&x, n, m).unwrap() * DVector::from_vec(dm[m].clone());
                e_cross = e_cross.max((fd - an).amax());
            }
        }
        // response Jacobian: entropy everywhere, the quadratic kind on every fifth game
        let regs: Vec<Regularizer> = if gi % 5 == 0 {
            shape.iter().map(|&k| random_quadratic(k, &mut r)).collect()
        } else {
            vec![Regularizer::Entropy; np]
        };
        let cfg = SmoothedResponseConfig::new(0.5, regs);
        let jac = response_jacobian(&g, &cfg, &x).unwrap();
        let dir: Vec<Vec<f64>> = shape.iter().map(|&k| tangent_direction(k, &mut r)).collect();
        let yp = smoothed_best_response(&g, &cfg, &JointStrategy::new(shifted(&x, &dir, H)).unwrap()).unwrap();
        let ym = smoothed_best_response(&g, &cfg, &JointStrategy::new(shifted(&x, &dir, -H)).unwrap()).unwrap();
        let fd = DVector::from_iterator(
            jac.matrix.nrows(),
            yp.flatten().iter().zip(ym.flatten()).map(|(a, b)| (a - b) / (2.0 * H)),
        );
        let an = &jac.matrix * DVector::from_iterator(jac.matrix.ncols(), dir.iter().flatten().copied());
        e_resp = e_resp.max((fd - an).amax());
    }
    // regularizer derivatives at interior points and on a face
    for trial in 0..50 {
        let k = 2 + trial % 4;
        let reg = if trial % 2 == 0 { Regularizer::Entropy } else { random_quadratic(k, &mut r) };
        let support: Vec<usize> = if trial % 3 == 0 { (0..k - 1).collect() } else { (0..k).collect() };
        let mut x = vec![0.0; k];
        for &i in &support {
            x[i] = r.gen_range(0.2..1.0);
        }
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|a| *a /= s);
        let mut d = vec![0.0; k];
        let td = tangent_direction(support.len(), &mut r);
        for (&i, v) in support.iter().zip(td) {
            d[i] = v;
        }
        let at = |h: f64| -> Vec<f64> { x.iter().zip(&d).map(|(a, b)| a + h * b).collect() };
        let fd = (reg.value(&at(H)).unwrap() - reg.value(&at(-H)).unwrap()) / (2.0 * H);
        let an: f64 = reg.tangent_gradient_on_face(&x, &support).unwrap().iter().zip(&d).map(|(a, b)| a * b).sum();
        e_reg_grad = e_reg_grad.max((fd - an).abs());
        let gp = reg.tangent_gradient_on_face(&at(H), &support).unwrap();
        let gm = reg.tangent_gradient_on_face(&at(-H), &support).unwrap();
        let fd = DVector::from_iterator(k, gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * H)));
        let an = reg.face_hessian(&x, &support).unwrap().hessian * DVector::from_vec(d.clone());
        e_reg_hess = e_reg_hess.max((fd - an).amax());
    }
    outcome(
        e_grad <= 1e-6 && e_cross <= 1e-6 && e_resp <= 1e-5 && e_reg_grad <= 1e-6 && e_reg_hess <= 1e-5,
        format!(
            "50 games: gradient {e_grad:.2e}, cross-Hessian {e_cross:.2e}, response Jacobian {e_resp:.2e}; \
             50 regularizers: gradient {e_reg_grad:.2e}, Hessian {e_reg_hess:.2e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome, u64); 11] = [
        (1, "smoothed equilibria are approximate Nash", criterion_1, 10),
        (2, "contraction rate at the step-size threshold", criterion_2, 30),
        (3, "mixed coordination equilibrium is unstable", criterion_3, 60),
        (4, "λ-skew iff imaginary conditioned spectra", criterion_4, 60),
        (5, "certificate recovery", criterion_5, 10),
        (6, "positive-definite stretch", criterion_6, 5),
        (7, "bilinear scale recovery", criterion_7, 5),
        (8, "3×3 example game ledger", criterion_8, 5),
        (9, "boundary case with a dominated action", criterion_9, 30),
        (10, "invariance under non-strategic offsets", criterion_10, 30),
        (11, "finite-difference suite", criterion_11, 60),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f, budget) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}: {} ({:.2}s of {budget}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
