//! Regularisers with closed-form proximal maps and a-posteriori subgradient checks.

use ndarray::{Array, Array1, ArrayBase, ArrayView1, Data, Dimension, Zip};
use serde::{Deserialize, Serialize};

use crate::array::{dot, l2_norm, Image, Spectrum, VectorField};
use crate::operators::Grad2;

/// Scalar soft shrinkage `sign(x) max(|x| - beta, 0)`.
#[inline]
pub fn shrink(x: f64, beta: f64) -> f64 {
    if x > beta {
        x - beta
    } else if x < -beta {
        x + beta
    } else {
        0.0
    }
}

/// Shrinks the 2-vector `(a, b)` towards zero by `beta` in Euclidean norm.
/// The zero vector maps to zero.
#[inline]
pub fn shrink_pair(a: f64, b: f64, beta: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r <= beta {
        (0.0, 0.0)
    } else {
        let f = (r - beta) / r;
        (a * f, b * f)
    }
}

/// Proximal map of `beta ||.||_1`, componentwise.
pub fn soft_threshold<S, D>(z: &ArrayBase<S, D>, beta: f64) -> Array<f64, D>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    z.mapv(|x| shrink(x, beta))
}

/// Complex soft thresholding: shrinks the modulus, keeps the phase.
pub fn soft_threshold_complex(z: &Spectrum, beta: f64) -> Spectrum {
    z.mapv(|c| {
        let (re, im) = shrink_pair(c.re, c.im, beta);
        num_complex::Complex64::new(re, im)
    })
}

/// Proximal map of `beta ||.||_{2,1}` on a vector field: per-pixel group shrinkage.
pub fn group_soft_threshold(z: &VectorField, beta: f64) -> VectorField {
    let mut out = z.clone();
    for mut px in out.lanes_mut(ndarray::Axis(2)) {
        let (a, b) = shrink_pair(px[0], px[1], beta);
        px[0] = a;
        px[1] = b;
    }
    out
}

/// `||q||_{2,1}`, the sum of pointwise Euclidean norms.
pub fn l21_norm(q: &VectorField) -> f64 {
    q.lanes(ndarray::Axis(2))
        .into_iter()
        .map(|px| px[0].hypot(px[1]))
        .sum()
}

/// Isotropic total variation with forward differences over the
/// `(n_y-1) x (n_x-1)` interior index range.
pub fn tv_value(u: &Image) -> f64 {
    let (n_y, n_x) = u.dim();
    let mut acc = 0.0;
    for i in 0..n_y.saturating_sub(1) {
        for j in 0..n_x.saturating_sub(1) {
            let dy = u[[i + 1, j]] - u[[i, j]];
            let dx = u[[i, j + 1]] - u[[i, j]];
            acc += dy.hypot(dx);
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxKind {
    /// `scale * sum |x_i|`.
    L1,
    /// `scale * sum_k ||(x_{2k}, x_{2k+1})||`. On an interleaved complex buffer
    /// this is the complex-modulus one-norm.
    GroupL21,
    /// Indicator of the radius-`scale` ball of the dual norm: `|x_i| <= scale`
    /// when `grouped` is false, `||(x_{2k}, x_{2k+1})|| <= scale` when true.
    IndicatorBall { grouped: bool },
}

/// A convex functional with a closed-form proximal map, acting on flat buffers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxFunctional {
    pub kind: ProxKind,
    pub scale: f64,
}

impl ProxFunctional {
    pub fn l1(scale: f64) -> Self {
        ProxFunctional {
            kind: ProxKind::L1,
            scale,
        }
    }

    pub fn group_l21(scale: f64) -> Self {
        ProxFunctional {
            kind: ProxKind::GroupL21,
            scale,
        }
    }

    pub fn indicator_ball(radius: f64, grouped: bool) -> Self {
        ProxFunctional {
            kind: ProxKind::IndicatorBall { grouped },
            scale: radius,
        }
    }

    /// Same functional with its weight multiplied by `factor` (for `prox_{tau J}`).
    /// Indicators are invariant under positive scaling.
    pub fn scaled(self, factor: f64) -> Self {
        match self.kind {
            ProxKind::IndicatorBall { .. } => self,
            _ => ProxFunctional {
                scale: self.scale * factor,
                ..self
            },
        }
    }

    /// Length of the groups this functional couples.
    pub fn group_size(&self) -> usize {
        match self.kind {
            ProxKind::L1 | ProxKind::IndicatorBall { grouped: false } => 1,
            ProxKind::GroupL21 | ProxKind::IndicatorBall { grouped: true } => 2,
        }
    }

    pub fn value(&self, x: ArrayView1<f64>) -> f64 {
        match self.kind {
            ProxKind::L1 => self.scale * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxKind::GroupL21 => self.scale * pairs(x).map(|(a, b)| a.hypot(b)).sum::<f64>(),
            ProxKind::IndicatorBall { grouped } => {
                let slack = self.scale * (1.0 + 1e-12);
                let inside = if grouped {
                    pairs(x).all(|(a, b)| a.hypot(b) <= slack)
                } else {
                    x.iter().all(|v| v.abs() <= slack)
                };
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn prox(&self, z: ArrayView1<f64>) -> Array1<f64> {
        let beta = self.scale;
        match self.kind {
            ProxKind::L1 => z.mapv(|x| shrink(x, beta)),
            ProxKind::GroupL21 => map_pairs(z, |a, b| shrink_pair(a, b, beta)),
            ProxKind::IndicatorBall { grouped: false } => z.mapv(|x| x.clamp(-beta, beta)),
            ProxKind::IndicatorBall { grouped: true } => map_pairs(z, |a, b| {
                let r = a.hypot(b);
                if r <= beta {
                    (a, b)
                } else {
                    (a * beta / r, b * beta / r)
                }
            }),
        }
    }
}

fn pairs(x: ArrayView1<'_, f64>) -> impl Iterator<Item = (f64, f64)> + '_ {
    debug_assert!(x.len() % 2 == 0, "grouped functional on odd-length buffer");
    (0..x.len() / 2).map(move |k| (x[2 * k], x[2 * k + 1]))
}

fn map_pairs(z: ArrayView1<f64>, f: impl Fn(f64, f64) -> (f64, f64)) -> Array1<f64> {
    assert!(z.len() % 2 == 0, "grouped functional on odd-length buffer");
    let mut out = Array1::zeros(z.len());
    for k in 0..z.len() / 2 {
        let (a, b) = f(z[2 * k], z[2 * k + 1]);
        out[2 * k] = a;
        out[2 * k + 1] = b;
    }
    out
}

/// Bregman loss `B_J(u, p) = 1/2 ||u - prox(p)||^2 + D_J^{p - prox(p)}(u, prox(p))`.
///
/// Its gradient in `p` is `prox_J(p) - u`, and it vanishes exactly when
/// `p - u` is a subgradient of `J` at `u`.
pub fn bregman_loss(j: &ProxFunctional, u: ArrayView1<f64>, p: ArrayView1<f64>) -> f64 {
    let w = j.prox(p);
    let du = &u - &w;
    let s = &p - &w;
    0.5 * dot(du.view(), du.view()) + j.value(u) - j.value(w.view()) - dot(s.view(), du.view())
}

/// Outcome of checking a candidate subgradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgradientCheck {
    /// Largest pointwise dual-norm of the candidate (must not exceed one).
    pub max_group_norm: f64,
    /// Largest deviation from the forced value on the active set.
    pub support_mismatch: f64,
    /// `||v - A^T q||` for the composite check; zero for the componentwise check.
    pub consistency_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `p ∈ ∂||w||_1`: `p_j = sign(w_j)` on the support and `|p_j| <= 1` elsewhere.
pub fn verify_l1_subgradient(p: ArrayView1<f64>, w: ArrayView1<f64>, tol: f64) -> SubgradientCheck {
    assert_eq!(p.len(), w.len(), "subgradient and point lengths differ");
    let mut max_off = 0.0f64;
    let mut mismatch = 0.0f64;
    for (&pj, &wj) in p.iter().zip(w.iter()) {
        if wj != 0.0 {
            mismatch = mismatch.max((pj - wj.signum()).abs());
        } else {
            max_off = max_off.max(pj.abs());
        }
    }
    SubgradientCheck {
        max_group_norm: max_off,
        support_mismatch: mismatch,
        consistency_residual: 0.0,
        tolerance: tol,
        passed: mismatch <= tol && max_off <= 1.0 + tol,
    }
}

/// Checks that `v = A^T q` with `q ∈ ∂||.||_{2,1}(Au)`, i.e. `v ∈ ∂TV(u)`.
///
/// Passes when `||v - A^T q|| <= tol max(1, ||v||)`, every `|q_ij| <= 1 + tol`,
/// and `q_ij = (Au)_ij / |(Au)_ij|` within `tol` wherever `(Au)_ij != 0`.
pub fn verify_tv_subgradient(v: &Image, q: &VectorField, u: &Image, tol: f64) -> SubgradientCheck {
    let (n_y, n_x) = u.dim();
    assert_eq!(v.dim(), (n_y, n_x), "subgradient image shape");
    assert_eq!(q.dim(), (n_y - 1, n_x - 1, 2), "dual field shape");
    let a = Grad2::new(n_y, n_x).expect("grid of at least 2x2");
    let grad = a.gradient(u);
    let residual = l2_norm(&(v - &a.transpose(q)));

    let mut max_norm = 0.0f64;
    let mut mismatch = 0.0f64;
    Zip::from(q.lanes(ndarray::Axis(2)))
        .and(grad.lanes(ndarray::Axis(2)))
        .for_each(|qp, gp| {
            max_norm = max_norm.max(qp[0].hypot(qp[1]));
            let r = gp[0].hypot(gp[1]);
            if r > 0.0 {
                let d = (qp[0] - gp[0] / r).hypot(qp[1] - gp[1] / r);
                mismatch = mismatch.max(d);
            }
        });

    let passed = residual <= tol * l2_norm(v).max(1.0) && max_norm <= 1.0 + tol && mismatch <= tol;
    SubgradientCheck {
        max_group_norm: max_norm,
        support_mismatch: mismatch,
        consistency_residual: residual,
        tolerance: tol,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2, Array3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Minimises `1/2 (u - z)^2 + beta |u|` over a grid with spacing `h`.
    fn brute_prox_1d(z: f64, beta: f64, h: f64) -> f64 {
        let lo = z.min(0.0) - 1.0;
        let steps = ((z.max(0.0) + 1.0 - lo) / h) as usize;
        (0..=steps)
            .map(|k| lo + k as f64 * h)
            .min_by(|a, b| {
                let fa = 0.5 * (a - z).powi(2) + beta * a.abs();
                let fb = 0.5 * (b - z).powi(2) + beta * b.abs();
                fa.total_cmp(&fb)
            })
            .unwrap()
    }

    #[test]
    fn scalar_shrink_examples() {
        assert_eq!(shrink(2.0, 1.0), 1.0);
        assert_eq!(shrink(0.5, 1.0), 0.0);
        assert_eq!(shrink(-3.0, 1.0), -2.0);
        assert!((brute_prox_1d(-3.0, 1.0, 1e-6) - -2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_threshold_is_identity() {
        let z = array![-1.5, 0.0, 2.25];
        assert_eq!(soft_threshold(&z, 0.0), z);
    }

    #[test]
    fn group_examples() {
        let mut z = Array3::zeros((1, 2, 2));
        z[[0, 0, 0]] = 3.0;
        z[[0, 0, 1]] = 4.0;
        let out = group_soft_threshold(&z, 1.0);
        assert!((out[[0, 0, 0]] - 2.4).abs() < 1e-15);
        assert!((out[[0, 0, 1]] - 3.2).abs() < 1e-15);
        assert_eq!(out[[0, 1, 0]], 0.0);
        assert_eq!(out[[0, 1, 1]], 0.0);
    }

    #[test]
    fn group_reduces_to_scalar_with_one_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: f64 = rng.random_range(-3.0..3.0);
            let mut z = Array3::zeros((1, 1, 2));
            z[[0, 0, 0]] = x;
            let out = group_soft_threshold(&z, 0.7);
            assert!((out[[0, 0, 0]] - shrink(x, 0.7)).abs() < 1e-15);
            assert_eq!(out[[0, 0, 1]], 0.0);
        }
    }

    #[test]
    fn complex_shrink_keeps_phase() {
        let z = array![[num_complex::Complex64::new(3.0, 4.0), Default::default()]];
        let out = soft_threshold_complex(&z, 1.0);
        assert!((out[[0, 0]].re - 2.4).abs() < 1e-15 && (out[[0, 0]].im - 3.2).abs() < 1e-15);
        assert_eq!(out[[0, 1]], Default::default());
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_value(&Array2::from_elem((4, 4), 0.3)), 0.0);
        assert!((tv_value(&array![[0.0, 1.0], [2.0, 3.0]]) - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tv_is_l21_of_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = Array2::from_shape_fn((8, 8), |_| rng.random_range(0.0..1.0));
        let a = Grad2::new(8, 8).unwrap();
        assert!((tv_value(&u) - l21_norm(&a.gradient(&u))).abs() < 1e-12);
    }

    #[test]
    fn moreau_identity_for_l1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let beta = 0.8;
        let z: Array1<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
        let prox = ProxFunctional::l1(beta).prox(z.view());
        let proj = ProxFunctional::indicator_ball(1.0, false).prox((&z / beta).view());
        let back = &prox + &(proj * beta);
        assert!(l2_norm(&(&back - &z)) < 1e-10);
    }

    #[test]
    fn moreau_identity_for_group_l21() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let beta = 1.3;
        let z: Array1<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
        let prox = ProxFunctional::group_l21(beta).prox(z.view());
        let proj = ProxFunctional::indicator_ball(1.0, true).prox((&z / beta).view());
        assert!(l2_norm(&(&prox + &(proj * beta) - &z)) < 1e-10);
    }

    #[test]
    fn norms_map_zero_to_zero_and_are_nonnegative() {
        for j in [ProxFunctional::l1(2.0), ProxFunctional::group_l21(0.5)] {
            let zero = Array1::zeros(6);
            assert_eq!(j.prox(zero.view()), zero);
            assert!(j.value(array![1.0, -2.0, 0.0, 3.0, -0.5, 0.1].view()) >= 0.0);
        }
    }

    #[test]
    fn indicator_value_is_zero_inside_infinite_outside() {
        let j = ProxFunctional::indicator_ball(1.0, true);
        assert_eq!(j.value(array![0.6, 0.8].view()), 0.0);
        assert_eq!(j.value(array![1.2, 0.0].view()), f64::INFINITY);
    }

    #[test]
    fn bregman_loss_vanishes_at_subgradient() {
        let j = ProxFunctional::l1(1.0);
        let u = array![2.0, 0.0, -1.0];
        // p - u ∈ ∂||u||_1
        let p = array![3.0, 0.4, -2.0];
        assert!(bregman_loss(&j, u.view(), p.view()).abs() < 1e-15);
        assert!(bregman_loss(&j, u.view(), array![2.5, 0.0, -1.0].view()) > 0.0);
    }

    #[test]
    fn l1_verification_examples() {
        let ok = verify_l1_subgradient(array![1.0, 0.3].view(), array![2.0, 0.0].view(), 1e-9);
        assert!(ok.passed);
        let bad = verify_l1_subgradient(array![0.5, 0.0].view(), array![2.0, 0.0].view(), 1e-9);
        assert!(!bad.passed);
        assert!((bad.support_mismatch - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tv_verification_examples() {
        let u = Array2::from_elem((4, 4), 0.5);
        let q = Array3::zeros((3, 3, 2));
        let v = Array2::zeros((4, 4));
        assert!(verify_tv_subgradient(&v, &q, &u, 1e-6).passed);

        let mut q = Array3::zeros((3, 3, 2));
        q[[1, 1, 0]] = 1.2;
        let v = Grad2::new(4, 4).unwrap().transpose(&q);
        let check = verify_tv_subgradient(&v, &q, &u, 1e-6);
        assert!(!check.passed);
        assert!((check.max_group_norm - 1.2).abs() < 1e-15);
    }

    #[test]
    fn tv_verification_checks_alignment_on_edges() {
        let u = array![[0.0, 0.0], [1.0, 1.0]];
        let a = Grad2::new(2, 2).unwrap();
        let mut q = Array3::zeros((1, 1, 2));
        q[[0, 0, 0]] = 1.0;
        assert!(verify_tv_subgradient(&a.transpose(&q), &q, &u, 1e-9).passed);
        q[[0, 0, 0]] = 0.5;
        let check = verify_tv_subgradient(&a.transpose(&q), &q, &u, 1e-9);
        assert!(!check.passed);
        assert!((check.support_mismatch - 0.5).abs() < 1e-15);
    }
}
