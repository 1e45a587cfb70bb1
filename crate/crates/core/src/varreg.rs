//! TV-regularised least squares, solved by PDHG, and the quantities that enter
//! the error estimate.
//!
//! The problem is `min_u 1/2 ||K u - g||^2 + alpha ||A u||_{2,1}` with `A` the
//! forward-difference gradient. Only the TV term is dualised; the quadratic
//! data term is handled by its exact proximal map.

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::{Array1, ArrayView1, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{dot, field_from_flat, flatten_image, image_from_flat, l2_norm, Image, VectorField};
use crate::error::{Error, Result};
use crate::functionals::{tv_value, ProxFunctional};
use crate::operators::{
    Direction, DenseMap, Grad2, Identity, LinearMap, SampledFourier, SamplingMask,
};
use crate::array::Shape;
use crate::solvers::{check_step, History, SolveConfig, SolveReport, Termination};

/// Bregman distances below this are treated as evidence that the supplied
/// field is not a subgradient.
pub const NEGATIVE_BREGMAN_TOL: f64 = 1e-8;

/// Forward operators for which the data-term prox has a closed form.
#[derive(Clone, Debug)]
pub enum ForwardModel {
    Identity { n_y: usize, n_x: usize },
    /// `K = S F` onto the full complex grid.
    Fourier(SampledFourier),
    /// Small explicit matrix acting on the flattened image.
    Dense { map: DenseMap, n_y: usize, n_x: usize },
}

impl ForwardModel {
    pub fn fourier(mask: SamplingMask) -> Self {
        ForwardModel::Fourier(SampledFourier::new(mask))
    }

    pub fn dense(matrix: ndarray::Array2<f64>, n_y: usize, n_x: usize) -> Result<Self> {
        let rows = matrix.nrows();
        let map = DenseMap::with_shapes(matrix, Shape::real(&[n_y, n_x]), Shape::real(&[rows]))?;
        Ok(ForwardModel::Dense { map, n_y, n_x })
    }

    pub fn image_dims(&self) -> (usize, usize) {
        match self {
            ForwardModel::Identity { n_y, n_x } | ForwardModel::Dense { n_y, n_x, .. } => (*n_y, *n_x),
            ForwardModel::Fourier(k) => k.mask().dims(),
        }
    }

    pub fn as_map(&self) -> Box<dyn LinearMap + '_> {
        match self {
            ForwardModel::Identity { n_y, n_x } => Box::new(Identity::new(Shape::real(&[*n_y, *n_x]))),
            ForwardModel::Fourier(k) => Box::new(k),
            ForwardModel::Dense { map, .. } => Box::new(map),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VarRegProblem {
    pub forward: ForwardModel,
    pub data: Array1<f64>,
    pub alpha: f64,
}

impl VarRegProblem {
    pub fn new(forward: ForwardModel, data: Array1<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        forward.as_map().codomain().check(data.view(), "VarRegProblem data")?;
        Ok(VarRegProblem { forward, data, alpha })
    }

    /// `1/2 ||K u - g||^2 + alpha TV(u)`.
    pub fn objective(&self, u: &Image) -> f64 {
        let k = self.forward.as_map();
        let r = k.apply(flatten_image(u).view()) - &self.data;
        0.5 * r.dot(&r) + self.alpha * tv_value(u)
    }
}

/// Step sizes `tau = 1/8`, `sigma = 1` and a 1000-iteration cap.
pub fn pdhg_defaults() -> SolveConfig {
    SolveConfig {
        max_iters: 1000,
        grad_tol: 0.0,
        tau: 1.0 / 8.0,
        sigma: 1.0,
        ..SolveConfig::default()
    }
}

/// `(I + tau K*K)^{-1}` for the supported forward models.
enum DataProx {
    Identity { tau: f64 },
    Fourier { k: SampledFourier, denom: ndarray::Array2<f64> },
    Dense { chol: Cholesky<f64, nalgebra::Dyn> },
}

impl DataProx {
    fn new(forward: &ForwardModel, tau: f64) -> Result<Self> {
        Ok(match forward {
            ForwardModel::Identity { .. } => DataProx::Identity { tau },
            ForwardModel::Fourier(k) => {
                // K*K = Re F^{-1} S F acts on real images as the multiplier (m(k) + m(-k)) / 2
                let denom = k.mask().symmetrized_weights().mapv(|m| 1.0 + tau * m);
                DataProx::Fourier { k: k.clone(), denom }
            }
            ForwardModel::Dense { map, .. } => {
                let m = map.matrix();
                let (rows, cols) = m.dim();
                let k = DMatrix::from_fn(rows, cols, |i, j| m[[i, j]]);
                let normal = DMatrix::identity(cols, cols) + (k.transpose() * &k) * tau;
                let chol = Cholesky::new(normal)
                    .ok_or_else(|| Error::Degenerate("normal equations are not positive definite".into()))?;
                DataProx::Dense { chol }
            }
        })
    }

    fn solve(&self, rhs: Array1<f64>, n_y: usize, n_x: usize) -> Array1<f64> {
        match self {
            DataProx::Identity { tau } => rhs / (1.0 + tau),
            DataProx::Fourier { k, denom } => {
                let image = rhs.into_shape_with_order((n_y, n_x)).expect("image length");
                let mut spec = k.plan().forward_real(image.view());
                Zip::from(&mut spec).and(denom).for_each(|c, &d| *c /= d);
                let back = k.plan().transform(spec.view(), Direction::Inverse);
                back.iter().map(|c: &Complex64| c.re).collect()
            }
            DataProx::Dense { chol } => {
                let b = DVector::from_iterator(rhs.len(), rhs.iter().copied());
                let x = chol.solve(&b);
                x.iter().copied().collect()
            }
        }
    }
}

fn relative_change(diff: f64, size: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / size
    }
}

/// PDHG from `u = 0`, `q = 0`:
///
/// ```text
/// q <- proj_{|q| <= alpha}(q + sigma A ubar)
/// u <- (I + tau K*K)^{-1} (u - tau A^T q + tau K* g)
/// ubar <- 2 u_new - u_old
/// ```
///
/// Stops at `cfg.max_iters` or when
/// `(||Δu||/||u|| + ||Δq||/||q||) / 2 <= cfg.grad_tol`. The report's `v` holds the
/// primal iterate and `q` the dual field.
pub fn solve_pdhg(problem: &VarRegProblem, cfg: &SolveConfig) -> Result<(Image, VectorField, SolveReport)> {
    cfg.validate()?;
    let (n_y, n_x) = problem.forward.image_dims();
    let a = Grad2::new(n_y, n_x)?;
    let la = a.norm_bound();
    check_step("tau * sigma", cfg.tau * cfg.sigma, 1.0 / (la * la))?;

    let k = problem.forward.as_map();
    let ball = ProxFunctional::indicator_ball(problem.alpha, true);
    let data_prox = DataProx::new(&problem.forward, cfg.tau)?;
    let kg = k.adjoint(problem.data.view()) * cfg.tau;

    let mut u = Array1::<f64>::zeros(n_y * n_x);
    let mut u_bar = u.clone();
    let mut q = Array1::<f64>::zeros(a.codomain().len());
    let mut history = History::new(cfg.record_every);
    let mut iteration = 0;
    let mut metric = f64::INFINITY;

    let termination = loop {
        if iteration >= cfg.max_iters {
            break Termination::MaxIters;
        }
        let mut ascent = q.clone();
        ascent.scaled_add(cfg.sigma, &a.apply(u_bar.view()));
        let q_next = ball.prox(ascent.view());

        let mut rhs = &u - &(a.adjoint(q_next.view()) * cfg.tau);
        rhs += &kg;
        let u_next = data_prox.solve(rhs, n_y, n_x);

        u_bar = &u_next * 2.0 - &u;
        metric = 0.5
            * (relative_change(l2_norm(&(&u_next - &u)), l2_norm(&u_next))
                + relative_change(l2_norm(&(&q_next - &q)), l2_norm(&q_next)));
        u = u_next;
        q = q_next;
        iteration += 1;
        history.observe(iteration, metric);
        if metric <= cfg.grad_tol {
            break Termination::Tolerance;
        }
    };

    let image = image_from_flat(u.view(), n_y, n_x)?;
    let field = field_from_flat(q.view(), n_y - 1, n_x - 1)?;
    let v_norm = l2_norm(&u);
    let report = SolveReport {
        v: u,
        q: Some(q),
        iterations: iteration,
        final_grad_norm: metric,
        v_norm,
        history: history.finish(iteration, metric),
        termination,
        support_size: None,
    };
    Ok((image, field, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub v_norm: f64,
    pub delta: f64,
    /// `delta / ||v||`
    pub alpha_star: f64,
    /// `||v|| delta`
    pub bound: f64,
}

pub fn error_estimate(v: ArrayView1<f64>, delta: f64) -> Result<ErrorEstimate> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Input(format!("delta must be non-negative, got {delta}")));
    }
    let v_norm = l2_norm(&v);
    if v_norm == 0.0 {
        return Err(Error::Degenerate(
            "alpha = delta/||v|| is undefined for v = 0".into(),
        ));
    }
    Ok(ErrorEstimate {
        v_norm,
        delta,
        alpha_star: delta / v_norm,
        bound: v_norm * delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BregmanDistance {
    pub value: f64,
    /// False when `value < -NEGATIVE_BREGMAN_TOL`, i.e. the field is not a subgradient.
    pub consistent: bool,
}

/// `TV(u) - TV(w) - <A^T q_w, u - w>`. The value is reported unclipped.
pub fn bregman_distance_tv(u: &Image, w: &Image, q_w: &VectorField) -> Result<BregmanDistance> {
    if u.dim() != w.dim() {
        return Err(Error::Shape {
            context: "bregman_distance_tv",
            expected: vec![w.nrows(), w.ncols()],
            got: vec![u.nrows(), u.ncols()],
        });
    }
    let (n_y, n_x) = w.dim();
    let a = Grad2::new(n_y, n_x)?;
    if q_w.dim() != (n_y - 1, n_x - 1, 2) {
        let (r, c, d) = q_w.dim();
        return Err(Error::Shape {
            context: "bregman_distance_tv field",
            expected: vec![n_y - 1, n_x - 1, 2],
            got: vec![r, c, d],
        });
    }
    let p = a.transpose(q_w);
    let diff = u - w;
    let value = tv_value(u) - tv_value(w) - (&p * &diff).sum();
    Ok(BregmanDistance {
        value,
        consistent: value >= -NEGATIVE_BREGMAN_TOL,
    })
}

/// `p_alpha = K*(f - K u_alpha) / alpha`, the subgradient certified by the
/// optimality condition of the regularised problem.
pub fn optimality_subgradient(problem: &VarRegProblem, u_alpha: &Image) -> Array1<f64> {
    let k = problem.forward.as_map();
    let r = &problem.data - &k.apply(flatten_image(u_alpha).view());
    k.adjoint(r.view()) / problem.alpha
}

/// Symmetric Bregman distance `<u_alpha - u†, p_alpha - K*v>`.
pub fn symmetric_bregman(
    u_alpha: ArrayView1<f64>,
    u_dag: ArrayView1<f64>,
    p_alpha: ArrayView1<f64>,
    kstar_v: ArrayView1<f64>,
) -> f64 {
    let du = &u_alpha - &u_dag;
    let dp = &p_alpha - &kstar_v;
    dot(du.view(), dp.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blocky(n: usize) -> Image {
        Array2::from_shape_fn((n, n), |(i, j)| {
            if i >= n / 4 && i < 3 * n / 4 && j >= n / 4 && j < 3 * n / 4 {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn error_estimate_examples() {
        let e = error_estimate(ndarray::array![2.0, 0.0].view(), 0.5).unwrap();
        assert_eq!(e.alpha_star, 0.25);
        assert_eq!(e.bound, 1.0);
        let z = error_estimate(ndarray::array![3.0, 4.0].view(), 0.0).unwrap();
        assert_eq!(z.bound, 0.0);
        assert!(matches!(
            error_estimate(ndarray::array![0.0].view(), 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn bregman_distance_examples() {
        let u = blocky(8);
        let q0 = VectorField::zeros((7, 7, 2));
        let same = bregman_distance_tv(&u, &u, &q0).unwrap();
        assert_eq!(same.value, 0.0);
        let flat = Image::from_elem((8, 8), 0.3);
        let d = bregman_distance_tv(&u, &flat, &q0).unwrap();
        assert!((d.value - tv_value(&u)).abs() < 1e-14);
        let a = Grad2::new(8, 8).unwrap();
        let bad = a.gradient(&u) * 5.0;
        assert!(!bregman_distance_tv(&u, &flat, &bad).unwrap().consistent);
    }

    #[test]
    fn constant_image_is_recovered_from_fourier_samples() {
        let n = 16;
        let mask = SamplingMask::lowpass(n, n, 3, 3).unwrap();
        let uc = Image::from_elem((n, n), 0.7);
        let k = SampledFourier::new(mask.clone());
        let g = k.apply(flatten_image(&uc).view());
        let p = VarRegProblem::new(ForwardModel::fourier(mask), g, 0.5).unwrap();
        let (u, _, _) = solve_pdhg(&p, &pdhg_defaults()).unwrap();
        let err = l2_norm(&(&u - &uc)) / l2_norm(&uc);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn fourier_prox_matches_dense_solve() {
        let n = 6;
        let mask = SamplingMask::lowpass(n, n, 3, 2).unwrap();
        let k = SampledFourier::new(mask.clone());
        let tau = 0.3;
        let mut cols = Vec::new();
        for idx in 0..n * n {
            let mut e = Array1::zeros(n * n);
            e[idx] = 1.0;
            cols.push(k.adjoint(k.apply(e.view()).view()));
        }
        let kk = DMatrix::from_fn(n * n, n * n, |i, j| cols[j][i]);
        let lhs = DMatrix::identity(n * n, n * n) + kk * tau;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rhs: Array1<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let expected = lhs.lu().solve(&DVector::from_iterator(n * n, rhs.iter().copied())).unwrap();
        let got = DataProx::new(&ForwardModel::fourier(mask), tau).unwrap().solve(rhs, n, n);
        for i in 0..n * n {
            assert!((got[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn refuses_unstable_steps() {
        let p = VarRegProblem::new(
            ForwardModel::Identity { n_y: 4, n_x: 4 },
            Array1::zeros(16),
            1.0,
        )
        .unwrap();
        let cfg = SolveConfig {
            tau: 0.5,
            sigma: 1.0,
            ..pdhg_defaults()
        };
        assert!(matches!(solve_pdhg(&p, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn objective_beats_zero_and_perturbed_truth() {
        let n = 12;
        let u_dag = blocky(n);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = flatten_image(&u_dag) + &Array1::from_shape_fn(n * n, |_| rng.random_range(-0.1..0.1));
        let p = VarRegProblem::new(ForwardModel::Identity { n_y: n, n_x: n }, g, 0.2).unwrap();
        let (u, q, report) = solve_pdhg(&p, &pdhg_defaults()).unwrap();
        let f = p.objective(&u);
        assert!(f <= p.objective(&Image::zeros((n, n))));
        for _ in 0..5 {
            let eps = Image::from_shape_fn((n, n), |_| rng.random_range(-1e-3..1e-3));
            assert!(f <= p.objective(&(&u_dag + &eps)));
        }
        assert!(crate::array::pointwise_norm(&q).iter().all(|&r| r <= 0.2 * (1.0 + 1e-12)));
        assert_eq!(report.iterations, 1000);
    }

    #[test]
    fn dense_forward_model_solves() {
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Array2::from_shape_fn((10, n * n), |_| rng.random_range(-0.5..0.5));
        let fm = ForwardModel::dense(m, n, n).unwrap();
        let u_dag = blocky(n);
        let g = fm.as_map().apply(flatten_image(&u_dag).view());
        let p = VarRegProblem::new(fm, g, 1e-3).unwrap();
        let (u, _, _) = solve_pdhg(&p, &SolveConfig { max_iters: 5000, ..pdhg_defaults() }).unwrap();
        assert!(p.objective(&u) <= p.objective(&u_dag) + 1e-6);
    }
}
