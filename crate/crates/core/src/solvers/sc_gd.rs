use ndarray::{Array1, ArrayView1};

use super::{check_step, norm, History, Momentum, SolveConfig, SolveReport, Termination};
use crate::array::dot;
use crate::error::Result;
use crate::functionals::{bregman_loss, ProxFunctional};
use crate::operators::LinearMap;

/// `∇G_J(v) = K (prox_J(u† + K*v) - u†)`.
pub fn grad_g(
    v: ArrayView1<f64>,
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    prox: &ProxFunctional,
) -> Result<Array1<f64>> {
    k.codomain().check(v, "grad_G v")?;
    k.domain().check(u_dag, "grad_G u†")?;
    Ok(gradient(v, u_dag, k, prox))
}

fn gradient(
    v: ArrayView1<f64>,
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    prox: &ProxFunctional,
) -> Array1<f64> {
    let p = &u_dag + &k.adjoint(v);
    let diff = prox.prox(p.view()) - &u_dag;
    k.apply(diff.view())
}

/// `G_J(v) = B_J(u†, u† + K*v)`, evaluated through the Bregman-distance form of the loss.
pub fn sc_objective(
    v: ArrayView1<f64>,
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    prox: &ProxFunctional,
) -> Result<f64> {
    k.codomain().check(v, "G_J v")?;
    k.domain().check(u_dag, "G_J u†")?;
    let p = &u_dag + &k.adjoint(v);
    Ok(bregman_loss(prox, u_dag, p.view()))
}

/// Minimises `G_J` from `v = 0` with step `cfg.tau <= 1 / ||K||^2`.
///
/// Stops when `||∇G_J(v^k)|| <= cfg.grad_tol` or after `cfg.max_iters` updates.
pub fn solve_sc_gd(
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    prox: &ProxFunctional,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    solve_sc_gd_with_hook(u_dag, k, prox, cfg, |_, _| {})
}

/// [`solve_sc_gd`] that calls `on_restart(iteration, v)` whenever momentum is reset.
pub fn solve_sc_gd_with_hook(
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    prox: &ProxFunctional,
    cfg: &SolveConfig,
    mut on_restart: impl FnMut(usize, ArrayView1<f64>),
) -> Result<SolveReport> {
    cfg.validate()?;
    k.domain().check(u_dag, "solve_sc_gd u†")?;
    let lk = k.norm_bound();
    if lk > 0.0 {
        check_step("tau", cfg.tau, 1.0 / (lk * lk))?;
    }

    let m = k.codomain().len();
    let mut v = Array1::<f64>::zeros(m);
    let mut v_prev = v.clone();
    let mut t_prev = 1.0f64;
    let mut history = History::new(cfg.record_every);

    let mut iteration = 0;
    let (grad_norm, termination) = loop {
        let g_v = gradient(v.view(), u_dag, k, prox);
        let gn = norm(&g_v);
        history.observe(iteration, gn);
        if gn <= cfg.grad_tol {
            break (gn, Termination::Tolerance);
        }
        if iteration >= cfg.max_iters {
            break (gn, Termination::MaxIters);
        }

        let (t, y, g_y) = match cfg.momentum {
            Momentum::None => (1.0, None, g_v),
            Momentum::Nesterov | Momentum::AdaptiveRestart => {
                let t = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
                let beta = (t_prev - 1.0) / t;
                if beta == 0.0 {
                    (t, None, g_v)
                } else {
                    let y = &v + &((&v - &v_prev) * beta);
                    let g_y = gradient(y.view(), u_dag, k, prox);
                    (t, Some(y), g_y)
                }
            }
        };

        let mut next = match y {
            Some(y) => y,
            None => v.clone(),
        };
        next.scaled_add(-cfg.tau, &g_y);

        let mut t = t;
        if cfg.momentum == Momentum::AdaptiveRestart {
            let step = &next - &v;
            if dot(g_y.view(), step.view()) > 0.0 {
                t = 1.0;
                on_restart(iteration + 1, next.view());
            }
        }

        v_prev = std::mem::replace(&mut v, next);
        t_prev = t;
        iteration += 1;
    };

    let v_norm = norm(&v);
    Ok(SolveReport {
        v,
        q: None,
        iterations: iteration,
        final_grad_norm: grad_norm,
        v_norm,
        history: history.finish(iteration, grad_norm),
        termination,
        support_size: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::Shape;
    use crate::error::Error;
    use crate::operators::{DenseMap, Identity};
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64) -> (DenseMap, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = DenseMap::new(Array2::from_shape_fn((6, 4), |_| rng.random_range(-1.0..1.0))).unwrap();
        let u: Array1<f64> = (0..4)
            .map(|i| if i % 2 == 0 { rng.random_range(-2.0..2.0) } else { 0.0 })
            .collect();
        (k, u)
    }

    #[test]
    fn gradient_at_origin_for_identity() {
        let k = Identity::new(Shape::real(&[2]));
        let u = array![1.0, 0.0];
        let g = grad_g(array![0.0, 0.0].view(), u.view(), &k, &ProxFunctional::l1(1.0)).unwrap();
        assert_eq!(g, array![-1.0, 0.0]);
    }

    #[test]
    fn gradient_vanishes_at_fixed_point() {
        let k = Identity::new(Shape::real(&[3]));
        let u = array![2.0, 0.0, -1.0];
        let v = array![1.0, 0.5, -1.0];
        let g = grad_g(v.view(), u.view(), &k, &ProxFunctional::l1(1.0)).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences_of_loss() {
        let prox = ProxFunctional::l1(1.0);
        let h = 1e-6;
        for seed in 0..10 {
            let (k, u) = random_instance(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let v: Array1<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = grad_g(v.view(), u.view(), &k, &prox).unwrap();
            let fd: Array1<f64> = (0..6)
                .map(|i| {
                    let mut vp = v.clone();
                    let mut vm = v.clone();
                    vp[i] += h;
                    vm[i] -= h;
                    (sc_objective(vp.view(), u.view(), &k, &prox).unwrap()
                        - sc_objective(vm.view(), u.view(), &k, &prox).unwrap())
                        / (2.0 * h)
                })
                .collect();
            let err = norm(&(&g - &fd)) / norm(&g).max(1e-12);
            assert!(err < 1e-5, "seed {seed}: {err}");
        }
    }

    #[test]
    fn identity_problem_converges_immediately() {
        let k = Identity::new(Shape::real(&[2]));
        let cfg = SolveConfig {
            max_iters: 100,
            grad_tol: 1e-12,
            ..SolveConfig::default()
        };
        let r = solve_sc_gd(array![1.0, 0.0].view(), &k, &ProxFunctional::l1(1.0), &cfg).unwrap();
        assert_eq!(r.termination, Termination::Tolerance);
        assert!(r.iterations <= 5);
        assert!((r.v[0] - 1.0).abs() < 1e-12 && r.v[1].abs() <= 1.0);
        assert!(r.final_grad_norm < 1e-12);
        assert_eq!(r.history.last().unwrap().1, r.final_grad_norm);
    }

    #[test]
    fn refuses_oversized_step() {
        let k = DenseMap::new(array![[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let cfg = SolveConfig {
            tau: 0.5,
            ..SolveConfig::default()
        };
        let err = solve_sc_gd(array![1.0, 0.0].view(), &k, &ProxFunctional::l1(1.0), &cfg);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn objective_is_convex_along_segments() {
        let prox = ProxFunctional::l1(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for seed in 0..20 {
            let (k, u) = random_instance(seed);
            let v1: Array1<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v2: Array1<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lam: f64 = rng.random_range(0.0..1.0);
            let mid = &v1 * lam + &v2 * (1.0 - lam);
            let g = |v: &Array1<f64>| sc_objective(v.view(), u.view(), &k, &prox).unwrap();
            assert!(g(&mid) <= lam * g(&v1) + (1.0 - lam) * g(&v2) + 1e-10);
        }
    }

    #[test]
    fn plain_descent_residual_eventually_decreases() {
        let (k, u) = random_instance(3);
        let lk = k.norm_bound();
        let cfg = SolveConfig {
            max_iters: 2000,
            tau: 1.0 / (lk * lk),
            momentum: Momentum::None,
            ..SolveConfig::default()
        };
        let r = solve_sc_gd(u.view(), &k, &ProxFunctional::l1(1.0), &cfg).unwrap();
        let tail = &r.history[r.history.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12)));
    }

    #[test]
    fn restart_objective_values_decrease() {
        let prox = ProxFunctional::l1(1.0);
        for seed in 0..5 {
            let (k, u) = random_instance(seed);
            let lk = k.norm_bound();
            let cfg = SolveConfig {
                max_iters: 3000,
                grad_tol: 1e-12,
                tau: 1.0 / (lk * lk),
                ..SolveConfig::default()
            };
            let mut values = Vec::new();
            solve_sc_gd_with_hook(u.view(), &k, &prox, &cfg, |_, v| {
                values.push(sc_objective(v, u.view(), &k, &prox).unwrap());
            })
            .unwrap();
            for w in values.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {values:?}");
            }
        }
    }

    #[test]
    fn tolerance_exit_is_a_reproducible_fixed_point() {
        let (k, u) = random_instance(7);
        let lk = k.norm_bound();
        let prox = ProxFunctional::l1(1.0);
        let cfg = SolveConfig {
            max_iters: 100_000,
            grad_tol: 1e-10,
            tau: 1.0 / (lk * lk),
            ..SolveConfig::default()
        };
        let r = solve_sc_gd(u.view(), &k, &prox, &cfg).unwrap();
        if r.converged() {
            let g = grad_g(r.v.view(), u.view(), &k, &prox).unwrap();
            assert!((norm(&g) - r.final_grad_norm).abs() <= 1e-12);
        }
        assert!((r.v_norm - norm(&r.v)).abs() <= 1e-12);
    }
}
