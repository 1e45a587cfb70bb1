use ndarray::{Array1, Array2, ArrayView1};

use super::{power_norm, LinearMap, POWER_ITERS, POWER_TOL};
use crate::array::{require_finite, Shape};
use crate::error::{Error, Result};

/// Explicit matrix. Used for the polynomial design matrix and for small test problems.
#[derive(Clone, Debug)]
pub struct DenseMap {
    matrix: Array2<f64>,
    domain: Shape,
    codomain: Shape,
    norm: f64,
}

impl DenseMap {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        Self::with_shapes(matrix, Shape::real(&[cols]), Shape::real(&[rows]))
    }

    /// Dense map whose domain is laid out as `domain` (for example an image),
    /// with one matrix column per flat domain entry.
    pub fn with_shapes(matrix: Array2<f64>, domain: Shape, codomain: Shape) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if domain.is_complex() || codomain.is_complex() {
            return Err(Error::Input("dense maps are real".into()));
        }
        if cols != domain.len() || rows != codomain.len() {
            return Err(Error::Shape {
                context: "DenseMap",
                expected: vec![codomain.len(), domain.len()],
                got: vec![rows, cols],
            });
        }
        require_finite(matrix.iter(), "matrix")?;
        let mut map = DenseMap {
            matrix,
            domain,
            codomain,
            norm: 0.0,
        };
        map.norm = power_norm(&map, POWER_ITERS, POWER_TOL);
        Ok(map)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

impl LinearMap for DenseMap {
    fn domain(&self) -> &Shape {
        &self.domain
    }
    fn codomain(&self) -> &Shape {
        &self.codomain
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.matrix.dot(&x)
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        self.matrix.t().dot(&y)
    }
    fn norm_bound(&self) -> f64 {
        self.norm
    }
}

/// Vandermonde matrix with entry `(i, p) = samples[i]^p` for `p = 0..=degree`.
pub fn vandermonde(samples: &[f64], degree: usize) -> Result<DenseMap> {
    if samples.is_empty() {
        return Err(Error::Input("vandermonde needs at least one sample".into()));
    }
    require_finite(samples, "samples")?;
    let matrix = Array2::from_shape_fn((samples.len(), degree + 1), |(i, p)| {
        samples[i].powi(p as i32)
    });
    DenseMap::new(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::adjoint_mismatch;
    use ndarray::array;

    #[test]
    fn single_sample_row_is_powers() {
        let v = vandermonde(&[2.0], 2).unwrap();
        assert_eq!(v.matrix(), &array![[1.0, 2.0, 4.0]]);
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        let v = vandermonde(&[0.0, 1.0], 1).unwrap();
        assert_eq!(v.matrix(), &array![[1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn paper_sized_design_matrix() {
        let samples: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let v = vandermonde(&samples, 75).unwrap();
        assert_eq!(v.matrix().dim(), (50, 76));
        assert!(adjoint_mismatch(&v, 20, 3) < 1e-10);
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(matches!(
            vandermonde(&[1.0, f64::NAN], 3),
            Err(Error::Input(_))
        ));
    }
}
