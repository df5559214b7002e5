//! Dense rank-3 containers for radar cubes, spectrum maps, and detection maps.
//!
//! Complex data is stored as separate real and imaginary planes (structure of
//! arrays). The hot loops in convolution and CFAR then run over plain `&[T]`
//! slices, which the compiler autovectorizes; an interleaved layout defeats
//! that. Axis order is fixed throughout the crate:
//!
//! * axis 0: fast time (raw cubes) or range (maps)
//! * axis 1: sweep (raw cubes) or Doppler (maps)
//! * axis 2: receiver (raw cubes) or azimuth (maps)
//!
//! Axis 2 is contiguous in memory.

use crate::{Complex, Error, Result, Scalar};

/// Flat length of a rank-3 shape.
pub fn numel(dims: [usize; 3]) -> usize {
    dims[0] * dims[1] * dims[2]
}

/// Complex-valued rank-3 tensor with separate re/im storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor<T> {
    dims: [usize; 3],
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Scalar> ComplexTensor<T> {
    /// All-zero tensor of the given shape.
    pub fn zeros(dims: [usize; 3]) -> Self {
        let n = numel(dims);
        Self {
            dims,
            re: vec![T::zero(); n],
            im: vec![T::zero(); n],
        }
    }

    /// Builds a tensor from existing planes, checking lengths.
    pub fn from_parts(dims: [usize; 3], re: Vec<T>, im: Vec<T>) -> Result<Self> {
        let n = numel(dims);
        if re.len() != n || im.len() != n {
            return Err(Error::ShapeMismatch {
                context: "ComplexTensor::from_parts",
                expected: vec![n],
                got: vec![re.len(), im.len()],
            });
        }
        Ok(Self { dims, re, im })
    }

    /// Fills a tensor by evaluating `f` at every index.
    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut([usize; 3]) -> Complex<T>) -> Self {
        let mut out = Self::zeros(dims);
        let mut flat = 0;
        for i0 in 0..dims[0] {
            for i1 in 0..dims[1] {
                for i2 in 0..dims[2] {
                    let z = f([i0, i1, i2]);
                    out.re[flat] = z.re;
                    out.im[flat] = z.im;
                    flat += 1;
                }
            }
        }
        out
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    /// Flat offset of a multi-index.
    #[inline]
    pub fn idx(&self, i: [usize; 3]) -> usize {
        debug_assert!(i[0] < self.dims[0] && i[1] < self.dims[1] && i[2] < self.dims[2]);
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    #[inline]
    pub fn get(&self, i: [usize; 3]) -> Complex<T> {
        let k = self.idx(i);
        Complex::new(self.re[k], self.im[k])
    }

    #[inline]
    pub fn set(&mut self, i: [usize; 3], z: Complex<T>) {
        let k = self.idx(i);
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    #[inline]
    pub fn get_flat(&self, k: usize) -> Complex<T> {
        Complex::new(self.re[k], self.im[k])
    }

    #[inline]
    pub fn set_flat(&mut self, k: usize, z: Complex<T>) {
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    pub fn re(&self) -> &[T] {
        &self.re
    }

    pub fn im(&self) -> &[T] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [T] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [T] {
        &mut self.im
    }

    /// Both planes mutably, for kernels that update re and im together.
    pub fn planes_mut(&mut self) -> (&mut [T], &mut [T]) {
        (&mut self.re, &mut self.im)
    }

    /// Consumes the tensor, yielding shape and planes.
    pub fn into_parts(self) -> ([usize; 3], Vec<T>, Vec<T>) {
        (self.dims, self.re, self.im)
    }

    /// `|z|^2` per cell, accumulated in the working precision.
    pub fn abs_sq(&self) -> RealTensor<T> {
        let data = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| r * r + i * i)
            .collect();
        RealTensor {
            dims: self.dims,
            data,
        }
    }

    /// Total energy `sum |z|^2` in f64, robust to long sums in f32.
    pub fn energy_f64(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| {
                let (r, i) = (r.to_f64_lossy(), i.to_f64_lossy());
                r * r + i * i
            })
            .sum()
    }

    /// Element-wise `self += other`.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch {
                context: "ComplexTensor::add_assign",
                expected: self.dims.to_vec(),
                got: other.dims.to_vec(),
            });
        }
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += *b;
        }
        for (a, b) in self.im.iter_mut().zip(&other.im) {
            *a += *b;
        }
        Ok(())
    }

    /// Element-wise scale by a real factor.
    pub fn scale(&mut self, s: T) {
        for a in &mut self.re {
            *a *= s;
        }
        for a in &mut self.im {
            *a *= s;
        }
    }

    pub fn fill_zero(&mut self) {
        self.re.fill(T::zero());
        self.im.fill(T::zero());
    }

    /// Converts element type, rounding through `f64`.
    pub fn cast<U: Scalar>(&self) -> ComplexTensor<U> {
        ComplexTensor {
            dims: self.dims,
            re: self.re.iter().map(|&x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
            im: self.im.iter().map(|&x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
        }
    }
}

/// Real-valued rank-3 tensor (power maps, SINR maps, detection maps).
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor<T> {
    dims: [usize; 3],
    data: Vec<T>,
}

impl<T: Scalar> RealTensor<T> {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![T::zero(); numel(dims)],
        }
    }

    pub fn from_parts(dims: [usize; 3], data: Vec<T>) -> Result<Self> {
        if data.len() != numel(dims) {
            return Err(Error::ShapeMismatch {
                context: "RealTensor::from_parts",
                expected: vec![numel(dims)],
                got: vec![data.len()],
            });
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut([usize; 3]) -> T) -> Self {
        let mut out = Self::zeros(dims);
        let mut flat = 0;
        for i0 in 0..dims[0] {
            for i1 in 0..dims[1] {
                for i2 in 0..dims[2] {
                    out.data[flat] = f([i0, i1, i2]);
                    flat += 1;
                }
            }
        }
        out
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, i: [usize; 3]) -> usize {
        debug_assert!(i[0] < self.dims[0] && i[1] < self.dims[1] && i[2] < self.dims[2]);
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    #[inline]
    pub fn get(&self, i: [usize; 3]) -> T {
        self.data[self.idx(i)]
    }

    #[inline]
    pub fn set(&mut self, i: [usize; 3], v: T) {
        let k = self.idx(i);
        self.data[k] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn cast<U: Scalar>(&self) -> RealTensor<U> {
        RealTensor {
            dims: self.dims,
            data: self.data.iter().map(|&x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
        }
    }
}

/// Boolean rank-3 mask (flagged samples, detection sets in tests).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolTensor {
    dims: [usize; 3],
    data: Vec<bool>,
}

impl BoolTensor {
    pub fn new(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![false; numel(dims)],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, i: [usize; 3]) -> usize {
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    #[inline]
    pub fn get(&self, i: [usize; 3]) -> bool {
        self.data[self.idx(i)]
    }

    #[inline]
    pub fn set(&mut self, i: [usize; 3], v: bool) {
        let k = self.idx(i);
        self.data[k] = v;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_is_row_major_with_axis2_contiguous() {
        let t = ComplexTensor::<f64>::zeros([4, 3, 2]);
        assert_eq!(t.idx([0, 0, 0]), 0);
        assert_eq!(t.idx([0, 0, 1]), 1);
        assert_eq!(t.idx([0, 1, 0]), 2);
        assert_eq!(t.idx([1, 0, 0]), 6);
        assert_eq!(t.idx([3, 2, 1]), 23);
    }

    #[test]
    fn from_parts_rejects_wrong_lengths() {
        let err = ComplexTensor::<f32>::from_parts([2, 2, 2], vec![0.0; 7], vec![0.0; 8]);
        assert!(err.is_err());
    }

    #[test]
    fn energy_matches_abs_sq_sum() {
        let t = ComplexTensor::<f64>::from_fn([3, 2, 2], |i| {
            Complex::new(i[0] as f64 - 1.0, i[2] as f64 * 0.5)
        });
        let by_cells: f64 = t.abs_sq().data().iter().sum();
        assert!((t.energy_f64() - by_cells).abs() < 1e-12);
    }
}
