use ndarray::{Array1, Array2, ArrayView1};

use super::LinearMap;
use crate::array::{Shape, Spectrum};
use crate::error::{Error, Result};

/// Cartesian sampling pattern on an `n_y x n_x` frequency grid in unshifted
/// (DFT) order: index `(0, 0)` is the zero frequency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    grid: Array2<bool>,
    count: usize,
}

/// Signed frequency of DFT index `p` on a length-`n` axis, matching the
/// fftshifted position `p' - floor(n/2)`.
pub(crate) fn signed_frequency(p: usize, n: usize) -> i64 {
    let (p, n) = (p as i64, n as i64);
    if p < (n + 1) / 2 {
        p
    } else {
        p - n
    }
}

impl SamplingMask {
    pub fn from_grid(grid: Array2<bool>) -> Self {
        let count = grid.iter().filter(|&&b| b).count();
        SamplingMask { grid, count }
    }

    pub fn full(n_y: usize, n_x: usize) -> Self {
        Self::from_grid(Array2::from_elem((n_y, n_x), true))
    }

    pub fn empty(n_y: usize, n_x: usize) -> Self {
        Self::from_grid(Array2::from_elem((n_y, n_x), false))
    }

    /// Square/rectangular low-pass block of `height x width` frequencies centred on
    /// the zero frequency. An even extent gets its extra row/column on the positive side.
    pub fn lowpass(n_y: usize, n_x: usize, height: usize, width: usize) -> Result<Self> {
        if height > n_y || width > n_x {
            return Err(Error::Config(format!(
                "low-pass block {height}x{width} does not fit a {n_y}x{n_x} grid"
            )));
        }
        let band = |extent: usize| {
            let lo = -(((extent as i64) - 1).max(0) / 2);
            lo..lo + extent as i64
        };
        let mut grid = Array2::from_elem((n_y, n_x), false);
        for ky in band(height) {
            for kx in band(width) {
                let p = ky.rem_euclid(n_y as i64) as usize;
                let q = kx.rem_euclid(n_x as i64) as usize;
                grid[[p, q]] = true;
            }
        }
        Ok(Self::from_grid(grid))
    }

    /// Low-pass pattern with exactly `count` frequencies: the most central ones by
    /// Chebyshev radius, then Euclidean radius, then index order.
    pub fn lowpass_with_count(n_y: usize, n_x: usize, count: usize) -> Result<Self> {
        if count > n_y * n_x {
            return Err(Error::Config(format!(
                "cannot select {count} of {} frequencies",
                n_y * n_x
            )));
        }
        let mut order: Vec<(i64, i64, usize)> = (0..n_y * n_x)
            .map(|idx| {
                let ky = signed_frequency(idx / n_x, n_y);
                let kx = signed_frequency(idx % n_x, n_x);
                (ky.abs().max(kx.abs()), ky * ky + kx * kx, idx)
            })
            .collect();
        order.sort_unstable();
        let mut grid = Array2::from_elem((n_y, n_x), false);
        for &(_, _, idx) in order.iter().take(count) {
            grid[[idx / n_x, idx % n_x]] = true;
        }
        Ok(Self::from_grid(grid))
    }

    /// The `count` frequencies where `|spectrum|` is largest (ties by index order).
    pub fn largest_coefficients(spectrum: &Spectrum, count: usize) -> Result<Self> {
        let (n_y, n_x) = spectrum.dim();
        if count > n_y * n_x {
            return Err(Error::Config(format!(
                "cannot select {count} of {} frequencies",
                n_y * n_x
            )));
        }
        let mut order: Vec<(f64, usize)> = spectrum
            .iter()
            .enumerate()
            .map(|(idx, c)| (c.norm(), idx))
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut grid = Array2::from_elem((n_y, n_x), false);
        for &(_, idx) in order.iter().take(count) {
            grid[[idx / n_x, idx % n_x]] = true;
        }
        Ok(Self::from_grid(grid))
    }

    pub fn grid(&self) -> &Array2<bool> {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dim()
    }

    pub fn density(&self) -> f64 {
        self.count as f64 / self.grid.len() as f64
    }

    pub fn contains(&self, p: usize, q: usize) -> bool {
        self.grid[[p, q]]
    }

    /// Returns a copy that also samples the zero frequency.
    pub fn with_dc(mut self) -> Self {
        if !self.grid[[0, 0]] {
            self.grid[[0, 0]] = true;
            self.count += 1;
        }
        self
    }

    /// `(m(k) + m(-k)) / 2`: the Fourier multiplier of `K*K` when `K = S F` acts on
    /// real images.
    pub fn symmetrized_weights(&self) -> Array2<f64> {
        let (n_y, n_x) = self.dims();
        Array2::from_shape_fn((n_y, n_x), |(p, q)| {
            let here = self.grid[[p, q]] as u8 as f64;
            let mirror = self.grid[[(n_y - p) % n_y, (n_x - q) % n_x]] as u8 as f64;
            0.5 * (here + mirror)
        })
    }

    pub fn as_f64(&self) -> Array2<f64> {
        self.grid.mapv(|b| if b { 1.0 } else { 0.0 })
    }

    pub(crate) fn apply_to(&self, spectrum: &mut Spectrum) {
        for (c, &keep) in spectrum.iter_mut().zip(self.grid.iter()) {
            if !keep {
                *c = Default::default();
            }
        }
    }
}

/// Diagonal 0/1 sampling `S` on the complex frequency grid.
#[derive(Clone, Debug)]
pub struct Sampling {
    mask: SamplingMask,
    shape: Shape,
}

impl Sampling {
    pub fn new(mask: SamplingMask) -> Self {
        let (n_y, n_x) = mask.dims();
        Sampling {
            shape: Shape::complex(&[n_y, n_x]),
            mask,
        }
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }
}

pub fn sampling(mask: SamplingMask) -> Sampling {
    Sampling::new(mask)
}

impl LinearMap for Sampling {
    fn domain(&self) -> &Shape {
        &self.shape
    }
    fn codomain(&self) -> &Shape {
        &self.shape
    }
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.shape.len());
        let mut out = x.to_owned();
        for (pair, &keep) in out
            .as_slice_mut()
            .expect("owned")
            .chunks_exact_mut(2)
            .zip(self.mask.grid.iter())
        {
            if !keep {
                pair[0] = 0.0;
                pair[1] = 0.0;
            }
        }
        out
    }
    fn adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        self.apply(y)
    }
    fn norm_bound(&self) -> f64 {
        if self.mask.count == 0 {
            0.0
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::adjoint_mismatch;

    #[test]
    fn paper_lowpass_block_count() {
        let m = SamplingMask::lowpass(400, 400, 130, 130).unwrap();
        assert_eq!(m.count(), 16900);
        assert!(m.contains(0, 0));
        // even extent: -64..=65
        assert!(m.contains(65, 0) && !m.contains(400 - 65, 0));
        assert!(m.contains(400 - 64, 0));
    }

    #[test]
    fn odd_lowpass_block_is_symmetric() {
        let m = SamplingMask::lowpass(9, 9, 3, 5).unwrap();
        assert_eq!(m.count(), 15);
        let w = m.symmetrized_weights();
        assert!(w.iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn lowpass_must_fit() {
        assert!(SamplingMask::lowpass(8, 8, 9, 2).is_err());
    }

    #[test]
    fn counted_lowpass_nests_square_blocks() {
        let square = SamplingMask::lowpass(16, 16, 5, 5).unwrap();
        let counted = SamplingMask::lowpass_with_count(16, 16, 25).unwrap();
        assert_eq!(square, counted);
        assert_eq!(SamplingMask::lowpass_with_count(16, 16, 30).unwrap().count(), 30);
    }

    #[test]
    fn full_and_empty_masks() {
        let x: Array1<f64> = (0..32).map(|i| i as f64).collect();
        assert_eq!(Sampling::new(SamplingMask::full(4, 4)).apply(x.view()), x);
        let zero = Sampling::new(SamplingMask::empty(4, 4)).apply(x.view());
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sampling_is_idempotent_and_self_adjoint() {
        let s = Sampling::new(SamplingMask::lowpass(6, 6, 3, 2).unwrap());
        let x: Array1<f64> = (0..72).map(|i| (i as f64).sin()).collect();
        let once = s.apply(x.view());
        assert_eq!(s.apply(once.view()), once);
        assert!(adjoint_mismatch(&s, 20, 4) < 1e-14);
    }

    #[test]
    fn with_dc_counts_once() {
        let m = SamplingMask::empty(3, 3).with_dc();
        assert_eq!(m.count(), 1);
        assert_eq!(m.clone().with_dc().count(), 1);
    }
}
