use ndarray::{Array1, ArrayView1};

use super::{check_step, norm, History, SolveConfig, SolveReport, Termination};
use crate::error::{Error, Result};
use crate::functionals::{bregman_loss, ProxFunctional};
use crate::operators::LinearMap;

struct Problem<'a> {
    k: &'a dyn LinearMap,
    a: &'a dyn LinearMap,
    /// `A u† + b`
    anchor: Array1<f64>,
    prox_h: &'a ProxFunctional,
}

impl<'a> Problem<'a> {
    fn new(
        u_dag: ArrayView1<f64>,
        k: &'a dyn LinearMap,
        a: &'a dyn LinearMap,
        b: Option<ArrayView1<f64>>,
        prox_h: &'a ProxFunctional,
    ) -> Result<Self> {
        if k.domain() != a.domain() {
            return Err(Error::Shape {
                context: "K and A must share a domain",
                expected: k.domain().dims().to_vec(),
                got: a.domain().dims().to_vec(),
            });
        }
        k.domain().check(u_dag, "u†")?;
        let mut anchor = a.apply(u_dag);
        if let Some(b) = b {
            a.codomain().check(b, "offset b")?;
            anchor += &b;
        }
        Ok(Problem {
            k,
            a,
            anchor,
            prox_h,
        })
    }

    fn residual(&self, v: ArrayView1<f64>, q: ArrayView1<f64>) -> Array1<f64> {
        self.k.adjoint(v) - self.a.adjoint(q)
    }

    /// `prox_H(Au† + b + q) - (Au† + b)`
    fn prox_shift(&self, q: ArrayView1<f64>) -> Array1<f64> {
        let p = &self.anchor + &q;
        self.prox_h.prox(p.view()) - &self.anchor
    }

    fn partials(&self, v: ArrayView1<f64>, q: ArrayView1<f64>) -> (Array1<f64>, Array1<f64>) {
        let r = self.residual(v, q);
        let dv = self.k.apply(r.view());
        let dq = self.prox_shift(q) - self.a.apply(r.view());
        (dv, dq)
    }
}

/// `(∂_v E_H, ∂_q E_H)` at `(v, q)`.
pub fn rc_partial_derivatives(
    v: ArrayView1<f64>,
    q: ArrayView1<f64>,
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    a: &dyn LinearMap,
    b: Option<ArrayView1<f64>>,
    prox_h: &ProxFunctional,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let pb = Problem::new(u_dag, k, a, b, prox_h)?;
    k.codomain().check(v, "v")?;
    a.codomain().check(q, "q")?;
    Ok(pb.partials(v, q))
}

/// `E_H(v, q) = 1/2 ||K*v - A*q||^2 + B_H(Au† + b, Au† + b + q)`.
pub fn rc_objective(
    v: ArrayView1<f64>,
    q: ArrayView1<f64>,
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    a: &dyn LinearMap,
    b: Option<ArrayView1<f64>>,
    prox_h: &ProxFunctional,
) -> Result<f64> {
    let pb = Problem::new(u_dag, k, a, b, prox_h)?;
    k.codomain().check(v, "v")?;
    a.codomain().check(q, "q")?;
    let r = pb.residual(v, q);
    let p = &pb.anchor + &q;
    Ok(0.5 * r.dot(&r) + bregman_loss(prox_h, pb.anchor.view(), p.view()))
}

/// Explicit coordinate descent on `E_H` from `(v, q) = (0, 0)`.
///
/// Updates `v` with step `cfg.tau <= 1/||K||^2`, then `q` with step
/// `cfg.sigma <= 1/(||A||^2 + 1)` using the freshly updated `v`. The stopping
/// measure is `(||∂_v E_H|| + ||∂_q E_H||) / 2`, evaluated before each update.
/// The report's `v` is the dual element and `q` the auxiliary field.
pub fn solve_rc_cd(
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    a: &dyn LinearMap,
    b: Option<ArrayView1<f64>>,
    prox_h: &ProxFunctional,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let pb = Problem::new(u_dag, k, a, b, prox_h)?;
    let lk = k.norm_bound();
    if lk > 0.0 {
        check_step("tau", cfg.tau, 1.0 / (lk * lk))?;
    }
    let la = a.norm_bound();
    check_step("sigma", cfg.sigma, 1.0 / (la * la + 1.0))?;

    let mut v = Array1::<f64>::zeros(k.codomain().len());
    let mut q = Array1::<f64>::zeros(a.codomain().len());
    let mut history = History::new(cfg.record_every);
    let mut iteration = 0;

    let (metric, termination) = loop {
        let r = pb.residual(v.view(), q.view());
        let dv = k.apply(r.view());
        let shift = pb.prox_shift(q.view());
        let dq = &shift - &a.apply(r.view());
        let metric = 0.5 * (norm(&dv) + norm(&dq));
        history.observe(iteration, metric);
        if metric <= cfg.grad_tol {
            break (metric, Termination::Tolerance);
        }
        if iteration >= cfg.max_iters {
            break (metric, Termination::MaxIters);
        }

        v.scaled_add(-cfg.tau, &dv);
        let r_new = pb.residual(v.view(), q.view());
        let dq_new = shift - a.apply(r_new.view());
        q.scaled_add(-cfg.sigma, &dq_new);
        iteration += 1;
    };

    let v_norm = norm(&v);
    Ok(SolveReport {
        v,
        q: Some(q),
        iterations: iteration,
        final_grad_norm: metric,
        v_norm,
        history: history.finish(iteration, metric),
        termination,
        support_size: None,
    })
}
