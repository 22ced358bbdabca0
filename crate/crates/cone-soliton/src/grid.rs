//! Uniform periodic grids on the torus `[0, 2π)^d`, `d ≤ 3`, with spectral
//! (FFT) and fourth-order central finite-difference differentiation.
//!
//! Spectral differentiation is the production path for smooth periodic data;
//! the finite-difference stencil exists as an independent cross-check.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// How spatial partial derivatives are evaluated on a grid link.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DiffScheme {
    /// Fourier differentiation: exact for resolved trigonometric data.
    Spectral,
    /// Fourth-order central differences with periodic wraparound.
    CentralFd4,
}

impl std::fmt::Display for DiffScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiffScheme::Spectral => write!(f, "spectral"),
            DiffScheme::CentralFd4 => write!(f, "central-fd4"),
        }
    }
}

pub const MIN_AXIS_POINTS: usize = 8;
pub const MAX_AXIS_POINTS: usize = 512;

pub struct Grid {
    shape: Vec<usize>,
    np: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Grid{:?}", self.shape)
    }
}

impl Grid {
    pub fn new(shape: &[usize]) -> Result<Grid> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(Error::BadDimension {
                dim: shape.len(),
                reason: "grid links support 1 to 3 axes".to_string(),
            });
        }
        for &n in shape {
            if !(MIN_AXIS_POINTS..=MAX_AXIS_POINTS).contains(&n) {
                return Err(Error::Invalid {
                    context: "grid resolution",
                    message: format!(
                        "axis resolution {n} outside supported range \
                         [{MIN_AXIS_POINTS}, {MAX_AXIS_POINTS}]"
                    ),
                });
            }
        }
        let np = shape.iter().product();
        let mut planner = FftPlanner::new();
        let forward = shape
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect();
        let inverse = shape
            .iter()
            .map(|&n| planner.plan_fft_inverse(n))
            .collect();
        Ok(Grid {
            shape: shape.to_vec(),
            np,
            forward,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn n_points(&self) -> usize {
        self.np
    }

    /// Row-major stride of an axis in the flattened point index.
    fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Coordinates of a flattened point index.
    pub fn coords(&self, p: usize) -> Vec<f64> {
        let mut rem = p;
        let mut out = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let s = self.stride(axis);
            let idx = rem / s;
            rem %= s;
            out.push(2.0 * std::f64::consts::PI * idx as f64 / self.shape[axis] as f64);
        }
        out
    }

    /// Flattened index from per-axis indices.
    pub fn index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dim());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Partial derivative of a scalar field along one axis.
    pub fn derivative(&self, field: &[f64], axis: usize, scheme: DiffScheme) -> Result<Vec<f64>> {
        if field.len() != self.np {
            return Err(Error::Invalid {
                context: "grid derivative",
                message: format!("field has {} values, grid has {}", field.len(), self.np),
            });
        }
        if axis >= self.dim() {
            return Err(Error::BadDimension {
                dim: axis,
                reason: format!("axis index out of range for a {}-axis grid", self.dim()),
            });
        }
        match scheme {
            DiffScheme::Spectral => Ok(self.spectral_derivative(field, axis)),
            DiffScheme::CentralFd4 => Ok(self.fd4_derivative(field, axis)),
        }
    }

    /// Visit every 1-d line along `axis`: calls `f(base, stride)` where the
    /// line's points are `base + k * stride` for `k in 0..shape[axis]`.
    fn for_each_line(&self, axis: usize, mut f: impl FnMut(usize, usize)) {
        let stride = self.stride(axis);
        let n = self.shape[axis];
        let nlines = self.np / n;
        // Enumerate bases: all points whose index along `axis` is zero.
        // Points factor as outer * (n * stride) + inner with inner < stride.
        let outer = self.np / (n * stride);
        for o in 0..outer {
            for i in 0..stride {
                f(o * n * stride + i, stride);
            }
        }
        debug_assert_eq!(outer * stride, nlines);
    }

    fn spectral_derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let n = self.shape[axis];
        let fwd = &self.forward[axis];
        let inv = &self.inverse[axis];
        let mut out = vec![0.0; self.np];
        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
        self.for_each_line(axis, |base, stride| {
            for k in 0..n {
                buf[k] = Complex::new(field[base + k * stride], 0.0);
            }
            fwd.process(&mut buf);
            // Zero the roundoff floor of the spectrum so that the wavenumber
            // multiplication cannot amplify it; see SPECTRUM_NOISE_REL.
            let peak = buf.iter().map(|b| b.norm_sqr()).fold(0.0f64, f64::max);
            let cut = peak * crate::tol::SPECTRUM_NOISE_REL * crate::tol::SPECTRUM_NOISE_REL;
            let scale = 1.0 / n as f64;
            for (m, b) in buf.iter_mut().enumerate() {
                if b.norm_sqr() <= cut {
                    *b = Complex::new(0.0, 0.0);
                    continue;
                }
                // Signed wavenumber; the unpaired Nyquist mode has no
                // well-defined derivative and is dropped.
                let k = if 2 * m < n {
                    m as f64
                } else if 2 * m == n {
                    0.0
                } else {
                    m as f64 - n as f64
                };
                *b *= Complex::new(0.0, k * scale);
            }
            inv.process(&mut buf);
            for k in 0..n {
                out[base + k * stride] = buf[k].re;
            }
        });
        out
    }

    fn fd4_derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let n = self.shape[axis];
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let inv12h = 1.0 / (12.0 * h);
        let mut out = vec![0.0; self.np];
        self.for_each_line(axis, |base, stride| {
            for k in 0..n {
                let at = |off: isize| {
                    let idx = (k as isize + off).rem_euclid(n as isize) as usize;
                    field[base + idx * stride]
                };
                out[base + k * stride] =
                    (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) * inv12h;
            }
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..grid.n_points()).map(|p| f(&grid.coords(p))).collect()
    }

    #[test]
    fn spectral_derivative_of_sine_is_cosine() {
        let grid = Grid::new(&[32]).unwrap();
        let field = sample(&grid, |x| (2.0 * x[0]).sin());
        let d = grid.derivative(&field, 0, DiffScheme::Spectral).unwrap();
        for p in 0..grid.n_points() {
            let x = grid.coords(p)[0];
            assert!((d[p] - 2.0 * (2.0 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn axes_differentiate_independently_in_3d() {
        let grid = Grid::new(&[8, 12, 10]).unwrap();
        let field = sample(&grid, |x| x[0].sin() * (2.0 * x[1]).cos() + x[2].sin());
        let d1 = grid.derivative(&field, 1, DiffScheme::Spectral).unwrap();
        for p in 0..grid.n_points() {
            let x = grid.coords(p);
            let expect = -2.0 * x[0].sin() * (2.0 * x[1]).sin();
            assert!((d1[p] - expect).abs() < 1e-12, "at {x:?}");
        }
    }

    #[test]
    fn fd4_converges_at_fourth_order() {
        let err_at = |n: usize| -> f64 {
            let grid = Grid::new(&[n]).unwrap();
            let field = sample(&grid, |x| (3.0 * x[0]).sin());
            let d = grid.derivative(&field, 0, DiffScheme::CentralFd4).unwrap();
            (0..n)
                .map(|p| {
                    let x = grid.coords(p)[0];
                    (d[p] - 3.0 * (3.0 * x).cos()).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let (e32, e64) = (err_at(32), err_at(64));
        let order = (e32 / e64).log2();
        assert!(order > 3.7 && order < 4.3, "observed order {order}");
    }

    #[test]
    fn schemes_agree_on_smooth_data() {
        let grid = Grid::new(&[64, 64]).unwrap();
        let field = sample(&grid, |x| (x[0] + 2.0 * x[1]).sin());
        let s = grid.derivative(&field, 0, DiffScheme::Spectral).unwrap();
        let f = grid.derivative(&field, 0, DiffScheme::CentralFd4).unwrap();
        let dev = s
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(dev < 5e-5, "schemes deviate by {dev}");
    }

    #[test]
    fn nyquist_mode_is_dropped_not_amplified() {
        let grid = Grid::new(&[8]).unwrap();
        // Pure Nyquist signal: alternating +1/-1.
        let field: Vec<f64> = (0..8).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = grid.derivative(&field, 0, DiffScheme::Spectral).unwrap();
        for v in d {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn tiny_or_huge_grids_are_rejected() {
        assert!(Grid::new(&[4]).is_err());
        assert!(Grid::new(&[600]).is_err());
        assert!(Grid::new(&[16, 16, 16, 16]).is_err());
        assert!(Grid::new(&[]).is_err());
    }
}
