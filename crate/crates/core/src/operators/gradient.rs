use ndarray::{Array1, Array2, Array3, ArrayView1};

use super::LinearMap;
use crate::array::{Image, Shape, VectorField};
use crate::error::{Error, Result};

/// Forward-difference gradient `A: R^{n_y x n_x} -> R^{(n_y-1) x (n_x-1) x 2}`,
///
/// `(Au)[i,j,0] = u[i+1,j] - u[i,j]` and `(Au)[i,j,1] = u[i,j+1] - u[i,j]`
/// for `i < n_y - 1`, `j < n_x - 1`. The last row and column only enter as
/// the "+1" neighbours.
#[derive(Clone, Debug)]
pub struct Grad2 {
    n_y: usize,
    n_x: usize,
    domain: Shape,
    codomain: Shape,
}

pub fn grad2(n_y: usize, n_x: usize) -> Result<Grad2> {
    Grad2::new(n_y, n_x)
}

impl Grad2 {
    pub fn new(n_y: usize, n_x: usize) -> Result<Self> {
        if n_y < 2 || n_x < 2 {
            return Err(Error::Input(format!(
                "gradient needs at least a 2x2 grid, got {n_y}x{n_x}"
            )));
        }
        Ok(Grad2 {
            n_y,
            n_x,
            domain: Shape::real(&[n_y, n_x]),
            codomain: Shape::real(&[n_y - 1, n_x - 1, 2]),
        })
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.n_y, self.n_x)
    }

    pub fn field_dims(&self) -> (usize, usize) {
        (self.n_y - 1, self.n_x - 1)
    }

    pub fn gradient(&self, u: &Image) -> VectorField {
        assert_eq!(u.dim(), (self.n_y, self.n_x));
        Array3::from_shape_fn((self.n_y - 1, self.n_x - 1, 2), |(i, j, c)| {
            if c == 0 {
                u[[i + 1, j]] - u[[i, j]]
            } else {
                u[[i, j + 1]] - u[[i, j]]
            }
        })
    }

    /// `A^T q`, the negative divergence.
    pub fn transpose(&self, q: &VectorField) -> Image {
        assert_eq!(q.dim(), (self.n_y - 1, self.n_x - 1, 2));
        let mut out = Array2::zeros((self.n_y, self.n_x));
        for i in 0..self.n_y - 1 {
            for j in 0..self.n_x - 1 {
                let (a, b) = (q[[i, j, 0]], q[[i, j, 1]]);
                out[[i + 1, j]] += a;
                out[[i, j + 1]] += b;
                out[[i, j]] -= a + b;
            }
        }
        out
    }
}

impl LinearMap for Grad2 {
    fn domain(&self) -> &Shape {
        &self.domain
    }
    fn codomain(&self) -> &Shape {
        &self.codomain
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.domain.len());
        let (n_y, n_x) = (self.n_y, self.n_x);
        let mut out = Array1::zeros(self.codomain.len());
        let o = out.as_slice_mut().expect("owned");
        let mut k = 0;
        for i in 0..n_y - 1 {
            for j in 0..n_x - 1 {
                let here = x[i * n_x + j];
                o[k] = x[(i + 1) * n_x + j] - here;
                o[k + 1] = x[i * n_x + j + 1] - here;
                k += 2;
            }
        }
        out
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(y.len(), self.codomain.len());
        let (n_y, n_x) = (self.n_y, self.n_x);
        let mut out = Array1::zeros(self.domain.len());
        let o = out.as_slice_mut().expect("owned");
        let mut k = 0;
        for i in 0..n_y - 1 {
            for j in 0..n_x - 1 {
                let (a, b) = (y[k], y[k + 1]);
                o[(i + 1) * n_x + j] += a;
                o[i * n_x + j + 1] += b;
                o[i * n_x + j] -= a + b;
                k += 2;
            }
        }
        out
    }
    fn norm_bound(&self) -> f64 {
        8f64.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{flatten_field, flatten_image};
    use crate::operators::adjoint_mismatch;
    use ndarray::array;

    #[test]
    fn two_by_two_differences() {
        let a = grad2(2, 2).unwrap();
        let g = a.gradient(&array![[0.0, 1.0], [2.0, 3.0]]);
        assert_eq!(g[[0, 0, 0]], 2.0);
        assert_eq!(g[[0, 0, 1]], 1.0);
    }

    #[test]
    fn constants_are_annihilated() {
        let a = grad2(5, 7).unwrap();
        let g = a.apply(Array1::from_elem(35, 3.25).view());
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flat_and_structured_paths_agree() {
        let a = grad2(4, 6).unwrap();
        let u = Array2::from_shape_fn((4, 6), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        assert_eq!(a.apply(flatten_image(&u).view()), flatten_field(&a.gradient(&u)));
        let q = a.gradient(&u);
        assert_eq!(a.adjoint(flatten_field(&q).view()), flatten_image(&a.transpose(&q)));
    }

    #[test]
    fn adjoint_output_has_zero_mean() {
        let a = grad2(6, 5).unwrap();
        let y: Array1<f64> = (0..40).map(|i| (i as f64 * 0.37).cos()).collect();
        assert!(a.adjoint(y.view()).sum().abs() < 1e-12);
    }

    #[test]
    fn passes_randomized_adjoint_test() {
        assert!(adjoint_mismatch(&grad2(16, 16).unwrap(), 20, 7) < 1e-12);
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(grad2(1, 5).is_err());
    }
}
