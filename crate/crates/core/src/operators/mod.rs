//! Linear forward operators with explicit adjoints.
//!
//! Every map acts on flat real buffers (see [`crate::array`]). Complex grids are
//! treated as real vector spaces, so adjoints are taken with respect to the real
//! inner product `Re <x, y>`.

mod dense;
mod fourier;
mod gradient;
mod sampling;

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{dot, l2_norm, Shape};
use crate::error::{Error, Result};

pub use dense::{vandermonde, DenseMap};
pub use fourier::{dft2, dft2_real, ComplexEmbed, Dft2, Dft2Map, Direction, SampledFourier};
pub use gradient::{grad2, Grad2};
pub use sampling::{sampling, Sampling, SamplingMask};

/// Iteration cap used when an operator estimates its own norm.
pub const POWER_ITERS: usize = 100;
/// Relative eigenvalue change that ends power iteration early.
pub const POWER_TOL: f64 = 1e-10;

/// A bounded linear map between two flat real spaces.
///
/// `apply` and `adjoint` panic when handed a buffer of the wrong length;
/// solvers validate shapes once before iterating.
pub trait LinearMap: Send + Sync + fmt::Debug {
    fn domain(&self) -> &Shape;
    fn codomain(&self) -> &Shape;
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64>;
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64>;
    /// Upper bound (or converged estimate, for dense maps) of the operator norm.
    fn norm_bound(&self) -> f64;
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn domain(&self) -> &Shape {
        (**self).domain()
    }
    fn codomain(&self) -> &Shape {
        (**self).codomain()
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (**self).apply(x)
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        (**self).adjoint(y)
    }
    fn norm_bound(&self) -> f64 {
        (**self).norm_bound()
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn domain(&self) -> &Shape {
        (**self).domain()
    }
    fn codomain(&self) -> &Shape {
        (**self).codomain()
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (**self).apply(x)
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        (**self).adjoint(y)
    }
    fn norm_bound(&self) -> f64 {
        (**self).norm_bound()
    }
}

#[derive(Clone, Debug)]
pub struct Identity {
    shape: Shape,
}

impl Identity {
    pub fn new(shape: Shape) -> Self {
        Identity { shape }
    }
}

impl LinearMap for Identity {
    fn domain(&self) -> &Shape {
        &self.shape
    }
    fn codomain(&self) -> &Shape {
        &self.shape
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.shape.len());
        x.to_owned()
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(y.len(), self.shape.len());
        y.to_owned()
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}

/// `outer ∘ inner`.
#[derive(Clone, Debug)]
pub struct Compose {
    outer: Arc<dyn LinearMap>,
    inner: Arc<dyn LinearMap>,
}

impl Compose {
    pub fn new(outer: Arc<dyn LinearMap>, inner: Arc<dyn LinearMap>) -> Result<Self> {
        if outer.domain() != inner.codomain() {
            return Err(Error::Shape {
                context: "compose",
                expected: outer.domain().dims().to_vec(),
                got: inner.codomain().dims().to_vec(),
            });
        }
        Ok(Compose { outer, inner })
    }
}

impl LinearMap for Compose {
    fn domain(&self) -> &Shape {
        self.inner.domain()
    }
    fn codomain(&self) -> &Shape {
        self.outer.codomain()
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.outer.apply(self.inner.apply(x).view())
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        self.inner.adjoint(self.outer.adjoint(y).view())
    }
    fn norm_bound(&self) -> f64 {
        self.outer.norm_bound() * self.inner.norm_bound()
    }
}

/// Estimates the largest singular value of `map` by power iteration on `K*K`.
///
/// The start vector is drawn from a generator with a fixed seed, so the result
/// is deterministic. A zero map returns `0`.
pub fn power_norm(map: &dyn LinearMap, iters: usize, tol: f64) -> f64 {
    let n = map.domain().len();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut x: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nx = l2_norm(&x);
    x /= nx;

    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        let y = map.adjoint(map.apply(x.view()).view());
        let next = l2_norm(&y);
        if next == 0.0 {
            return 0.0;
        }
        x = y / next;
        let converged = (next - lambda).abs() <= tol * next;
        lambda = next;
        if converged {
            break;
        }
    }
    lambda.sqrt()
}

/// Largest relative adjoint mismatch `|<Kx, y> - <x, K*y>| / (||x|| ||y||)` over
/// `pairs` random Gaussian pairs.
pub fn adjoint_mismatch(map: &dyn LinearMap, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x: Array1<f64> = (0..map.domain().len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let y: Array1<f64> = (0..map.codomain().len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let lhs = dot(map.apply(x.view()).view(), y.view());
        let rhs = dot(x.view(), map.adjoint(y.view()).view());
        let scale = l2_norm(&x) * l2_norm(&y);
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn power_norm_of_identity_is_one() {
        let id = Identity::new(Shape::real(&[5]));
        assert!((power_norm(&id, POWER_ITERS, POWER_TOL) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn power_norm_of_diagonal_picks_largest_entry() {
        let d = DenseMap::new(array![[1.0, 0.0], [0.0, 3.0]]).unwrap();
        assert!((power_norm(&d, POWER_ITERS, POWER_TOL) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn power_norm_of_zero_map_is_zero() {
        let z = DenseMap::new(ndarray::Array2::zeros((3, 2))).unwrap();
        assert_eq!(power_norm(&z, POWER_ITERS, POWER_TOL), 0.0);
    }

    #[test]
    fn compose_rejects_mismatched_shapes() {
        let a: Arc<dyn LinearMap> = Arc::new(Identity::new(Shape::real(&[3])));
        let b: Arc<dyn LinearMap> = Arc::new(Identity::new(Shape::real(&[4])));
        assert!(Compose::new(a, b).is_err());
    }

    #[test]
    fn compose_adjoint_is_reversed_product() {
        let a: Arc<dyn LinearMap> =
            Arc::new(DenseMap::new(array![[1.0, 2.0, 0.0], [0.5, -1.0, 3.0]]).unwrap());
        let b: Arc<dyn LinearMap> =
            Arc::new(DenseMap::new(array![[1.0, -1.0], [2.0, 0.0], [0.0, 4.0]]).unwrap());
        let c = Compose::new(a, b).unwrap();
        assert!(adjoint_mismatch(&c, 20, 1) < 1e-12);
    }
}
