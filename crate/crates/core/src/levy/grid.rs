//! Samples on uniform d-dimensional grids and their discrete Fourier transforms.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Relative size below which boundary samples count as zero.
const BOUNDARY_TOL: f64 = 1e-12;

/// Values of a compactly supported function at the nodes `lo + k h`, `0 ≤ k < shape`.
///
/// Row-major storage (last axis fastest). Samples outside the box are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    shape: Vec<usize>,
    lo: Vec<f64>,
    h: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(shape: Vec<usize>, lo: Vec<f64>, h: f64, values: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() != lo.len() {
            return Err(Error::Grid(
                "shape and lower corner must have equal, nonzero length".into(),
            ));
        }
        if shape.iter().any(|&n| n < 3) {
            return Err(Error::Grid("every axis needs at least 3 nodes".into()));
        }
        if !(h > 0.0 && h.is_finite()) || lo.iter().any(|x| !x.is_finite()) {
            return Err(Error::Grid(
                "spacing must be positive and corner finite".into(),
            ));
        }
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("values must be finite".into()));
        }
        let g = Self {
            shape,
            lo,
            h,
            values,
        };
        g.check_boundary_layer()?;
        Ok(g)
    }

    /// Sample `f` at every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(
        shape: Vec<usize>,
        lo: Vec<f64>,
        h: f64,
        f: F,
    ) -> Result<Self> {
        let len: usize = shape.iter().product();
        let d = shape.len();
        let mut values = Vec::with_capacity(len);
        let mut x = vec![0.0; d];
        for flat in 0..len {
            let mut rem = flat;
            for a in (0..d).rev() {
                let k = rem % shape[a];
                rem /= shape[a];
                x[a] = lo[a] + h * k as f64;
            }
            values.push(f(&x));
        }
        Self::new(shape, lo, h, values)
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.shape.clone(), self.lo.clone(), self.h, values)
    }

    fn check_boundary_layer(&self) -> Result<()> {
        let max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = BOUNDARY_TOL * max;
        let d = self.dim();
        for (flat, v) in self.values.iter().enumerate() {
            if v.abs() <= tol {
                continue;
            }
            let idx = self.unflatten(flat);
            if (0..d).any(|a| idx[a] == 0 || idx[a] + 1 == self.shape[a]) {
                return Err(Error::Grid(format!(
                    "nonzero value {v} on the boundary layer at {idx:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Side length `n h` of the periodic box along `axis`.
    pub fn box_len(&self, axis: usize) -> f64 {
        self.shape[axis] as f64 * self.h
    }

    /// Volume element `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.shape == other.shape && self.lo == other.lo && self.h == other.h
    }

    pub(crate) fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        idx
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    /// Value at an integer multi-index; zero outside the box.
    pub fn at(&self, idx: &[i64]) -> f64 {
        let mut flat = 0usize;
        for (a, &k) in idx.iter().enumerate() {
            if k < 0 || k as usize >= self.shape[a] {
                return 0.0;
            }
            flat = flat * self.shape[a] + k as usize;
        }
        self.values[flat]
    }

    /// Multilinear interpolation at a point; zero outside the box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut base = vec![0i64; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let t = (x[a] - self.lo[a]) / self.h;
            let f = t.floor();
            base[a] = f as i64;
            frac[a] = t - f;
        }
        let mut total = 0.0;
        let mut idx = vec![0i64; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    idx[a] = base[a] + 1;
                    w *= frac[a];
                } else {
                    idx[a] = base[a];
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                total += w * self.at(&idx);
            }
        }
        total
    }

    /// Unnormalized DFT `Σ_k u_k e^{-2πi k·m/n}` along every axis, row-major.
    pub fn dft(&self) -> Vec<Complex<f64>> {
        let mut data: Vec<Complex<f64>> =
            self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        let strides = self.strides();
        for a in 0..self.dim() {
            let n = self.shape[a];
            let fft = planner.plan_fft_forward(n);
            let stride = strides[a];
            let mut line = vec![Complex::new(0.0, 0.0); n];
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let start = outer + inner;
                    for k in 0..n {
                        line[k] = data[start + k * stride];
                    }
                    fft.process(&mut line);
                    for k in 0..n {
                        data[start + k * stride] = line[k];
                    }
                }
            }
        }
        data
    }

    /// Angular frequency of DFT bin `m` along `axis`, folded into `[-π/h, π/h)`.
    pub fn frequency(&self, axis: usize, m: usize) -> f64 {
        let n = self.shape[axis] as i64;
        let m = m as i64;
        let k = if m >= (n + 1) / 2 { m - n } else { m };
        2.0 * std::f64::consts::PI * k as f64 / (n as f64 * self.h)
    }
}
