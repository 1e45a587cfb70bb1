//! Exact TV source element for denoising (K = I), its verification, and the
//! PDHG round trip through the range data `u + alpha v`.

use sourceforge::array::{field_from_flat, flatten_image, image_from_flat, l2_norm, Shape};
use sourceforge::experiments::shepp_logan;
use sourceforge::functionals::{verify_tv_subgradient, ProxFunctional};
use sourceforge::operators::{Grad2, Identity};
use sourceforge::solvers::{range_data, solve_rc_cd, SolveConfig};
use sourceforge::varreg::{error_estimate, pdhg_defaults, solve_pdhg, ForwardModel, VarRegProblem};

fn main() -> sourceforge::Result<()> {
    let n = 48;
    let u = shepp_logan(n, n)?;
    let k = Identity::new(Shape::real(&[n, n]));
    let cfg = SolveConfig {
        max_iters: 100_000,
        grad_tol: 1e-10,
        ..SolveConfig::default()
    };
    let rep = solve_rc_cd(flatten_image(&u).view(), &k, &Grad2::new(n, n)?, None, &ProxFunctional::group_l21(1.0), &cfg)?;
    println!("coordinate descent: {} iterations, residual {:.2e}, ||v|| = {:.4}", rep.iterations, rep.final_grad_norm, rep.v_norm);

    let v = image_from_flat(rep.v.view(), n, n)?;
    let q = field_from_flat(rep.q.as_ref().unwrap().view(), n - 1, n - 1)?;
    let check = verify_tv_subgradient(&v, &q, &u, 1e-6);
    println!("verification: {} (max |q| = {:.8})", check.passed, check.max_group_norm);

    for alpha in [0.1, 0.5, 1.0] {
        let g = range_data(flatten_image(&u).view(), &k, rep.v.view(), alpha)?;
        let problem = VarRegProblem::new(ForwardModel::Identity { n_y: n, n_x: n }, g, alpha)?;
        let pd = sourceforge::solvers::SolveConfig {
            max_iters: 20_000,
            grad_tol: 1e-12,
            ..pdhg_defaults()
        };
        let (rec, _, _) = solve_pdhg(&problem, &pd)?;
        println!("alpha {alpha}: |u_alpha - u| / |u| = {:.2e}", l2_norm(&(&rec - &u)) / l2_norm(&u));
    }

    let e = error_estimate(rep.v.view(), 1e-2)?;
    println!("noise 1e-2: choose alpha = {:.3e}, Bregman error at most {:.3e}", e.alpha_star, e.bound);
    Ok(())
}
