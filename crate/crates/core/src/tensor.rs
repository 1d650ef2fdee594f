//! Dense third-order tensors and the unitary Fourier transform along the time mode.
//!
//! Storage is row-major with `t` varying fastest, so every tube `x[i, j, ..]` is a
//! contiguous run of `T` values. Frequency slices are indexed from zero: slice 0 is
//! the DC slice, slice `l` mirrors slice `(T - l) % T`, and only the first
//! [`SliceIndexPlan::half`] slices carry independent information for real input.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;

/// A single complex `M x N` frontal slice.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Tubes handed to one worker at a time in the tube-parallel transforms.
const TUBES_PER_TASK: usize = 64;

/// Shape of an `M x N x T` tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub t: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize, t: usize) -> Result<Self> {
        if m == 0 || n == 0 || t == 0 {
            return Err(Error::InvalidDims(format!("{m}x{n}x{t} has a zero extent")));
        }
        m.checked_mul(n)
            .and_then(|mn| mn.checked_mul(t))
            .ok_or_else(|| Error::InvalidDims(format!("{m}x{n}x{t} overflows")))?;
        Ok(Self { m, n, t })
    }

    pub fn len(&self) -> usize {
        self.m * self.n * self.t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tubes(&self) -> usize {
        self.m * self.n
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, t: usize) -> usize {
        (i * self.n + j) * self.t + t
    }

    #[inline]
    pub fn unravel(&self, flat: usize) -> (usize, usize, usize) {
        let t = flat % self.t;
        let tube = flat / self.t;
        (tube / self.n, tube % self.n, t)
    }

    pub fn contains(&self, i: usize, j: usize, t: usize) -> bool {
        i < self.m && j < self.n && t < self.t
    }

    /// Number of independent frequency slices, `ceil((T + 1) / 2)`.
    pub fn half(&self) -> usize {
        half_len(self.t)
    }
}

pub fn half_len(t: usize) -> usize {
    t / 2 + 1
}

/// Partition of the frequency axis into low-rank, sparse and mirrored slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceIndexPlan {
    pub t: usize,
    pub k: usize,
    pub half: usize,
}

impl SliceIndexPlan {
    pub fn new(t: usize, k: usize) -> Result<Self> {
        let half = half_len(t);
        if t == 0 || k == 0 || k > half {
            return Err(Error::InvalidConfig(format!(
                "K = {k} must lie in 1..={half} for T = {t}"
            )));
        }
        Ok(Self { t, k, half })
    }

    pub fn lowrank_range(&self) -> std::ops::Range<usize> {
        0..self.k
    }

    pub fn sparse_range(&self) -> std::ops::Range<usize> {
        self.k..self.half
    }

    pub fn mirror_range(&self) -> std::ops::Range<usize> {
        self.half..self.t
    }

    /// Slice whose conjugate equals slice `l` for real signals.
    pub fn mirror(&self, l: usize) -> usize {
        (self.t - l) % self.t
    }

    /// Slices that equal their own conjugate: DC, and Nyquist when `T` is even.
    pub fn is_self_conjugate(&self, l: usize) -> bool {
        self.mirror(l) == l
    }
}

/// Real `M x N x T` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor3 {
    dims: Dims,
    values: Vec<f64>,
}

impl DenseTensor3 {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.len()],
        }
    }

    pub fn from_vec(dims: Dims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::LengthMismatch {
                expected: dims.len(),
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, values })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(dims.len());
        for i in 0..dims.m {
            for j in 0..dims.n {
                for t in 0..dims.t {
                    values.push(f(i, j, t));
                }
            }
        }
        Self { dims, values }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, t: usize) -> f64 {
        self.values[self.dims.index(i, j, t)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, t: usize, v: f64) {
        let idx = self.dims.index(i, j, t);
        self.values[idx] = v;
    }

    pub fn tube(&self, i: usize, j: usize) -> &[f64] {
        let start = self.dims.index(i, j, 0);
        &self.values[start..start + self.dims.t]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self - other‖_F`; panics on shape mismatch.
    pub fn distance(&self, other: &DenseTensor3) -> f64 {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, a: f64) -> DenseTensor3 {
        Self {
            dims: self.dims,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }
}

/// Complex `M x N x T` tensor, usually the Fourier image of a real tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor3 {
    dims: Dims,
    values: Vec<Complex64>,
    symmetric: bool,
}

impl ComplexTensor3 {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            values: vec![Complex64::new(0.0, 0.0); dims.len()],
            symmetric: true,
        }
    }

    /// Wraps raw values; the result is not flagged conjugate-symmetric.
    pub fn from_vec(dims: Dims, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::LengthMismatch {
                expected: dims.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            dims,
            values,
            symmetric: false,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> Complex64 {
        self.values[self.dims.index(i, j, l)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frequency slice `l` as an `M x N` matrix.
    pub fn slice(&self, l: usize) -> Result<ComplexMatrix> {
        extract_slice(self, l)
    }
}

fn plan(t: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::<f64>::new();
    if inverse {
        planner.plan_fft_inverse(t)
    } else {
        planner.plan_fft_forward(t)
    }
}

/// Unitary DFT along the time mode: `y[.., l] = T^{-1/2} Σ_t x[.., t] e^{-2πi l t / T}`.
pub fn mode3_dft(x: &DenseTensor3) -> ComplexTensor3 {
    let dims = x.dims;
    let t = dims.t;
    let scale = 1.0 / (t as f64).sqrt();
    let fft = plan(t, false);
    let mut values: Vec<Complex64> = x.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    parallel::for_each_chunk_mut(&mut values, t * TUBES_PER_TASK, |_, chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
        for z in chunk.iter_mut() {
            *z *= scale;
        }
    });
    ComplexTensor3 {
        dims,
        values,
        symmetric: true,
    }
}

/// Inverse of [`mode3_dft`]. The imaginary residual of the result must stay below
/// `1e-8 · (1 + ‖y‖_F)`; otherwise the stack was not the image of a real tensor.
pub fn mode3_idft(y: &ComplexTensor3) -> Result<DenseTensor3> {
    let dims = y.dims;
    let t = dims.t;
    let scale = 1.0 / (t as f64).sqrt();
    let fft = plan(t, true);
    let mut buf = y.values.clone();
    parallel::for_each_chunk_mut(&mut buf, t * TUBES_PER_TASK, |_, chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
    let tolerance = 1e-8 * (1.0 + y.frobenius_norm());
    let mut residual = 0.0f64;
    let values: Vec<f64> = buf
        .iter()
        .map(|z| {
            residual = residual.max((z.im * scale).abs());
            z.re * scale
        })
        .collect();
    if residual > tolerance || !residual.is_finite() {
        return Err(Error::SymmetryViolation {
            residual,
            tolerance,
        });
    }
    Ok(DenseTensor3 { dims, values })
}

/// Frequency slice `l` of an already transformed stack.
pub fn extract_slice(y: &ComplexTensor3, l: usize) -> Result<ComplexMatrix> {
    let dims = y.dims;
    if l >= dims.t {
        return Err(Error::SliceOutOfRange {
            index: l,
            count: dims.t,
        });
    }
    Ok(DMatrix::from_fn(dims.m, dims.n, |i, j| y.get(i, j, l)))
}

/// `e^{-2πi k / T} / √T` for `k in 0..T`.
pub(crate) fn dft_row_table(t: usize) -> Vec<Complex64> {
    let scale = 1.0 / (t as f64).sqrt();
    (0..t)
        .map(|k| {
            let angle = -2.0 * PI * k as f64 / t as f64;
            Complex64::new(angle.cos() * scale, angle.sin() * scale)
        })
        .collect()
}

/// Frequency slice `l` of a real tensor, computed as a single DFT row product
/// without forming the full stack.
pub fn dft_slice(x: &DenseTensor3, l: usize) -> Result<ComplexMatrix> {
    let dims = x.dims;
    if l >= dims.t {
        return Err(Error::SliceOutOfRange {
            index: l,
            count: dims.t,
        });
    }
    let table = dft_row_table(dims.t);
    Ok(DMatrix::from_fn(dims.m, dims.n, |i, j| {
        x.tube(i, j)
            .iter()
            .enumerate()
            .map(|(t, &v)| table[(l * t) % dims.t] * v)
            .sum()
    }))
}

/// First `half` frequency slices of a real tensor.
pub fn half_spectrum(x: &DenseTensor3) -> Vec<ComplexMatrix> {
    let stack = mode3_dft(x);
    let dims = x.dims;
    (0..dims.half())
        .map(|l| DMatrix::from_fn(dims.m, dims.n, |i, j| stack.get(i, j, l)))
        .collect()
}

/// Rebuilds a full `T`-slice stack from its first `ceil((T+1)/2)` slices by
/// mirroring conjugates. Self-conjugate slices have their imaginary parts dropped.
pub fn conjugate_symmetrize(front: &[ComplexMatrix], t: usize) -> Result<ComplexTensor3> {
    let half = half_len(t);
    if t == 0 || front.len() != half {
        return Err(Error::WrongSliceCount {
            expected: half,
            got: front.len(),
        });
    }
    let (m, n) = front[0].shape();
    if front.iter().any(|s| s.shape() != (m, n)) {
        return Err(Error::InvalidDims(
            "half-spectrum slices differ in shape".into(),
        ));
    }
    let dims = Dims::new(m, n, t)?;
    let mut values = vec![Complex64::new(0.0, 0.0); dims.len()];
    for i in 0..m {
        for j in 0..n {
            let base = dims.index(i, j, 0);
            let tube = &mut values[base..base + t];
            for (l, slice) in front.iter().enumerate() {
                let z = slice[(i, j)];
                let mirror = (t - l) % t;
                if mirror == l {
                    tube[l] = Complex64::new(z.re, 0.0);
                } else {
                    tube[l] = z;
                    tube[mirror] = z.conj();
                }
            }
        }
    }
    Ok(ComplexTensor3 {
        dims,
        values,
        symmetric: true,
    })
}
