use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{LinearMap, SamplingMask};
use crate::array::{flatten_spectrum, spectrum_from_flat, Image, Shape, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Planned orthonormal 2D DFT, `1/sqrt(n_x n_y)` in both directions.
#[derive(Clone)]
pub struct Dft2 {
    n_y: usize,
    n_x: usize,
    rows_fwd: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_fwd: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Dft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft2")
            .field("n_y", &self.n_y)
            .field("n_x", &self.n_x)
            .finish()
    }
}

impl Dft2 {
    pub fn new(n_y: usize, n_x: usize) -> Self {
        assert!(n_y >= 1 && n_x >= 1, "empty DFT grid");
        let mut planner = FftPlanner::new();
        Dft2 {
            n_y,
            n_x,
            rows_fwd: planner.plan_fft_forward(n_x),
            rows_inv: planner.plan_fft_inverse(n_x),
            cols_fwd: planner.plan_fft_forward(n_y),
            cols_inv: planner.plan_fft_inverse(n_y),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_y, self.n_x)
    }

    pub fn transform(&self, input: ArrayView2<Complex64>, direction: Direction) -> Spectrum {
        assert_eq!(input.dim(), (self.n_y, self.n_x), "DFT grid mismatch");
        let (rows, cols) = match direction {
            Direction::Forward => (&self.rows_fwd, &self.cols_fwd),
            Direction::Inverse => (&self.rows_inv, &self.cols_inv),
        };
        let (n_y, n_x) = (self.n_y, self.n_x);

        // rows are contiguous in standard layout
        let mut buf: Vec<Complex64> = input.iter().copied().collect();
        rows.process(&mut buf);

        let mut transposed = vec![Complex64::default(); n_y * n_x];
        for i in 0..n_y {
            for j in 0..n_x {
                transposed[j * n_y + i] = buf[i * n_x + j];
            }
        }
        cols.process(&mut transposed);

        let scale = 1.0 / ((n_y * n_x) as f64).sqrt();
        Array2::from_shape_fn((n_y, n_x), |(i, j)| transposed[j * n_y + i] * scale)
    }

    pub fn forward_real(&self, image: ArrayView2<f64>) -> Spectrum {
        self.transform(image.mapv(|v| Complex64::new(v, 0.0)).view(), Direction::Forward)
    }
}

/// One-shot orthonormal 2D DFT of a complex grid.
pub fn dft2(input: &Spectrum, direction: Direction) -> Spectrum {
    let (n_y, n_x) = input.dim();
    Dft2::new(n_y, n_x).transform(input.view(), direction)
}

pub fn dft2_real(image: &Image, direction: Direction) -> Spectrum {
    let (n_y, n_x) = image.dim();
    Dft2::new(n_y, n_x).transform(image.mapv(|v| Complex64::new(v, 0.0)).view(), direction)
}

/// Inclusion of a real grid into the complex grid of the same size. Its adjoint takes the real part.
#[derive(Clone, Debug)]
pub struct ComplexEmbed {
    domain: Shape,
    codomain: Shape,
}

impl ComplexEmbed {
    pub fn new(n_y: usize, n_x: usize) -> Self {
        ComplexEmbed {
            domain: Shape::real(&[n_y, n_x]),
            codomain: Shape::complex(&[n_y, n_x]),
        }
    }
}

impl LinearMap for ComplexEmbed {
    fn domain(&self) -> &Shape {
        &self.domain
    }
    fn codomain(&self) -> &Shape {
        &self.codomain
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.domain.len());
        x.iter().flat_map(|&v| [v, 0.0]).collect()
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(y.len(), self.codomain.len());
        y.iter().step_by(2).copied().collect()
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}

/// The orthonormal DFT as a map on complex grids. Unitary, so the adjoint is the inverse.
#[derive(Clone, Debug)]
pub struct Dft2Map {
    plan: Dft2,
    shape: Shape,
}

impl Dft2Map {
    pub fn new(n_y: usize, n_x: usize) -> Self {
        Dft2Map {
            plan: Dft2::new(n_y, n_x),
            shape: Shape::complex(&[n_y, n_x]),
        }
    }

    fn run(&self, x: ArrayView1<f64>, direction: Direction) -> Array1<f64> {
        let (n_y, n_x) = self.plan.dims();
        let grid = spectrum_from_flat(x, n_y, n_x).expect("DFT input length");
        flatten_spectrum(&self.plan.transform(grid.view(), direction))
    }
}

impl LinearMap for Dft2Map {
    fn domain(&self) -> &Shape {
        &self.shape
    }
    fn codomain(&self) -> &Shape {
        &self.shape
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.run(x, Direction::Forward)
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        self.run(y, Direction::Inverse)
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}

/// Masked Fourier sampling `K = S F` of a real image onto the full complex grid
/// (zeros off the mask). Adjoint: `y -> Re F^{-1} S y`.
#[derive(Clone, Debug)]
pub struct SampledFourier {
    plan: Dft2,
    mask: SamplingMask,
    domain: Shape,
    codomain: Shape,
}

impl SampledFourier {
    pub fn new(mask: SamplingMask) -> Self {
        let (n_y, n_x) = mask.dims();
        SampledFourier {
            plan: Dft2::new(n_y, n_x),
            domain: Shape::real(&[n_y, n_x]),
            codomain: Shape::complex(&[n_y, n_x]),
            mask,
        }
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn plan(&self) -> &Dft2 {
        &self.plan
    }

    /// `F^{-1} S y` before taking the real part; the imaginary part is what the
    /// real-linear adjoint discards.
    pub fn backproject_complex(&self, y: ArrayView1<f64>) -> Spectrum {
        let (n_y, n_x) = self.mask.dims();
        let mut grid = spectrum_from_flat(y, n_y, n_x).expect("sampled data length");
        self.mask.apply_to(&mut grid);
        self.plan.transform(grid.view(), Direction::Inverse)
    }
}

impl LinearMap for SampledFourier {
    fn domain(&self) -> &Shape {
        &self.domain
    }
    fn codomain(&self) -> &Shape {
        &self.codomain
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let (n_y, n_x) = self.mask.dims();
        assert_eq!(x.len(), n_y * n_x);
        let image = x.to_shape((n_y, n_x)).expect("image length");
        let mut spectrum = self.plan.forward_real(image.view());
        self.mask.apply_to(&mut spectrum);
        flatten_spectrum(&spectrum)
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        self.backproject_complex(y).iter().map(|c| c.re).collect()
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}
