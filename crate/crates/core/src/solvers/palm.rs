use ndarray::{Array1, ArrayView1};

use super::{check_step, norm, History, SolveConfig, SolveReport, Termination};
use crate::array::Spectrum;
use crate::error::{Error, Result};
use crate::functionals::ProxFunctional;
use crate::operators::{LinearMap, SampledFourier, SamplingMask};

/// PALM for a sparse Fourier-domain element of a real image `u†`:
/// `1/2 ||Re F^{-1} ṽ - A^T q||^2 + beta sum |ṽ| + G_H(q)` from `(0, 0)`.
///
/// `A` must act on images. See [`solve_palm_with`] for the general form.
pub fn solve_palm(
    u_dag: ArrayView1<f64>,
    a: &dyn LinearMap,
    prox_h: &ProxFunctional,
    beta: f64,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    let dims = a.domain().dims();
    if dims.len() != 2 || a.domain().is_complex() {
        return Err(Error::Input(format!(
            "A must act on real images, got domain {:?}",
            dims
        )));
    }
    let k = SampledFourier::new(SamplingMask::full(dims[0], dims[1]));
    solve_palm_with(u_dag, &k, a, prox_h, beta, cfg)
}

/// PALM on `1/2 ||K* ṽ - A* q||^2 + beta ||ṽ||_1 + G_H(q)` from `(0, 0)`.
///
/// For a complex codomain the l1 term is the sum of complex moduli. The `ṽ`
/// step uses `cfg.tau <= 1/||K||^2`, the `q` step `cfg.sigma <= 1/(||A||^2 + 1)`.
/// Stops once `(||Δṽ||/tau + ||Δq||/sigma) / 2 <= cfg.grad_tol`.
pub fn solve_palm_with(
    u_dag: ArrayView1<f64>,
    k: &dyn LinearMap,
    a: &dyn LinearMap,
    prox_h: &ProxFunctional,
    beta: f64,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    if k.domain() != a.domain() {
        return Err(Error::Shape {
            context: "K and A must share a domain",
            expected: k.domain().dims().to_vec(),
            got: a.domain().dims().to_vec(),
        });
    }
    k.domain().check(u_dag, "u†")?;
    let lk = k.norm_bound();
    if lk > 0.0 {
        check_step("tau", cfg.tau, 1.0 / (lk * lk))?;
    }
    let la = a.norm_bound();
    check_step("sigma", cfg.sigma, 1.0 / (la * la + 1.0))?;

    let complex = k.codomain().is_complex();
    let sparsity = if complex {
        ProxFunctional::group_l21(cfg.tau * beta)
    } else {
        ProxFunctional::l1(cfg.tau * beta)
    };
    let anchor = a.apply(u_dag);

    let mut v = Array1::<f64>::zeros(k.codomain().len());
    let mut q = Array1::<f64>::zeros(a.codomain().len());
    let mut history = History::new(cfg.record_every);
    let mut iteration = 0;
    let mut residual = f64::INFINITY;

    let termination = loop {
        if iteration >= cfg.max_iters {
            break Termination::MaxIters;
        }
        let r = k.adjoint(v.view()) - a.adjoint(q.view());
        let mut z = v.clone();
        z.scaled_add(-cfg.tau, &k.apply(r.view()));
        let v_next = sparsity.prox(z.view());

        let r = k.adjoint(v_next.view()) - a.adjoint(q.view());
        let p = &anchor + &q;
        let shift = prox_h.prox(p.view()) - &anchor;
        let dq = shift - a.apply(r.view());
        let q_next = &q - &(dq * cfg.sigma);

        residual = 0.5 * (norm(&(&v_next - &v)) / cfg.tau + norm(&(&q_next - &q)) / cfg.sigma);
        v = v_next;
        q = q_next;
        iteration += 1;
        history.observe(iteration, residual);
        if residual <= cfg.grad_tol {
            break Termination::Tolerance;
        }
    };

    let support = if complex {
        v.as_slice()
            .expect("owned")
            .chunks_exact(2)
            .filter(|c| c[0] != 0.0 || c[1] != 0.0)
            .count()
    } else {
        v.iter().filter(|&&x| x != 0.0).count()
    };
    let v_norm = norm(&v);
    Ok(SolveReport {
        v,
        q: Some(q),
        iterations: iteration,
        final_grad_norm: residual,
        v_norm,
        history: history.finish(iteration, residual),
        termination,
        support_size: Some(support),
    })
}

/// Sampling pattern on the non-zero entries of a sparse spectrum, always
/// including the zero frequency.
pub fn extract_mask(spectrum: &Spectrum) -> SamplingMask {
    SamplingMask::from_grid(spectrum.mapv(|c| c.re != 0.0 || c.im != 0.0)).with_dc()
}
