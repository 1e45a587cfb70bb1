//! Array conventions shared by every operator and solver.
//!
//! Linear maps act on flat `Array1<f64>` buffers. Images are stored row-major
//! (`n_y` rows, `n_x` columns), vector fields as `(n_y-1) x (n_x-1) x 2` with the
//! channel index last, and complex grids as interleaved `(re, im)` pairs. With this
//! layout the real inner product of two flat buffers is the real part of the
//! Hermitian product, and both a vector field and a complex grid are sequences of
//! consecutive 2-element groups.

use ndarray::{Array1, Array2, Array3, ArrayBase, ArrayView1, Data, Dimension};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Image = Array2<f64>;
pub type VectorField = Array3<f64>;
pub type Spectrum = Array2<Complex64>;

/// Logical shape of a flat buffer: its dimensions and whether entries are complex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
    complex: bool,
}

impl Shape {
    pub fn real(dims: &[usize]) -> Self {
        Shape {
            dims: dims.to_vec(),
            complex: false,
        }
    }

    pub fn complex(dims: &[usize]) -> Self {
        Shape {
            dims: dims.to_vec(),
            complex: true,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    /// Number of `f64` slots in the flat representation.
    pub fn len(&self) -> usize {
        let n: usize = self.dims.iter().product();
        if self.complex {
            2 * n
        } else {
            n
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn check(&self, x: ArrayView1<f64>, context: &'static str) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::Shape {
                context,
                expected: vec![self.len()],
                got: vec![x.len()],
            });
        }
        Ok(())
    }
}

pub fn l2_norm<S, D>(a: &ArrayBase<S, D>) -> f64
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn flatten_image(image: &Image) -> Array1<f64> {
    image.iter().copied().collect()
}

pub fn image_from_flat(x: ArrayView1<f64>, n_y: usize, n_x: usize) -> Result<Image> {
    if x.len() != n_y * n_x {
        return Err(Error::Shape {
            context: "image_from_flat",
            expected: vec![n_y, n_x],
            got: vec![x.len()],
        });
    }
    Ok(Array2::from_shape_vec((n_y, n_x), x.to_vec()).expect("length checked"))
}

pub fn flatten_field(field: &VectorField) -> Array1<f64> {
    field.iter().copied().collect()
}

/// Rebuilds a vector field of `rows x cols x 2` from its flat form.
pub fn field_from_flat(x: ArrayView1<f64>, rows: usize, cols: usize) -> Result<VectorField> {
    if x.len() != rows * cols * 2 {
        return Err(Error::Shape {
            context: "field_from_flat",
            expected: vec![rows, cols, 2],
            got: vec![x.len()],
        });
    }
    Ok(Array3::from_shape_vec((rows, cols, 2), x.to_vec()).expect("length checked"))
}

pub fn flatten_spectrum(s: &Spectrum) -> Array1<f64> {
    s.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn spectrum_from_flat(x: ArrayView1<f64>, n_y: usize, n_x: usize) -> Result<Spectrum> {
    if x.len() != 2 * n_y * n_x {
        return Err(Error::Shape {
            context: "spectrum_from_flat",
            expected: vec![n_y, n_x, 2],
            got: vec![x.len()],
        });
    }
    let data: Vec<Complex64> = x
        .as_slice()
        .map(|s| s.to_vec())
        .unwrap_or_else(|| x.to_vec())
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    Ok(Array2::from_shape_vec((n_y, n_x), data).expect("length checked"))
}

/// Pointwise Euclidean norm `sqrt(q1^2 + q2^2)` of a vector field.
pub fn pointwise_norm(field: &VectorField) -> Image {
    let (rows, cols, _) = field.dim();
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        field[[i, j, 0]].hypot(field[[i, j, 1]])
    })
}

pub(crate) fn require_finite<'a>(values: impl IntoIterator<Item = &'a f64>, what: &str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} contains non-finite values")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn complex_shape_counts_two_slots_per_entry() {
        assert_eq!(Shape::complex(&[3, 4]).len(), 24);
        assert_eq!(Shape::real(&[3, 4]).len(), 12);
    }

    #[test]
    fn spectrum_flat_layout_is_interleaved() {
        let s = array![[Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)]];
        let flat = flatten_spectrum(&s);
        assert_eq!(flat.to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(spectrum_from_flat(flat.view(), 1, 2).unwrap(), s);
    }

    #[test]
    fn field_reshape_rejects_wrong_length() {
        let x = Array1::zeros(7);
        assert!(field_from_flat(x.view(), 2, 2).is_err());
    }
}
