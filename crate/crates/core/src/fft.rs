//! Thin axis-wise FFT layer over rustfft.
//!
//! Convention used everywhere in this crate: the forward transform is the
//! plain unnormalized DFT, the inverse divides by the transform length, so
//! `inverse(forward(x)) == x`.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::{Fft, FftDirection, FftPlanner};

use crate::{Complex, ComplexTensor, Scalar};

/// Plan cache plus scratch storage. Create one per pipeline and reuse it;
/// planning is memoized per (length, direction).
pub struct Ffts<T: Scalar> {
    planner: FftPlanner<T>,
    plans: HashMap<(usize, bool), Arc<dyn Fft<T>>>,
    scratch: Vec<Complex<T>>,
    line: Vec<Complex<T>>,
}

impl<T: Scalar> Default for Ffts<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Ffts<T> {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            plans: HashMap::new(),
            scratch: Vec::new(),
            line: Vec::new(),
        }
    }

    fn plan(&mut self, len: usize, forward: bool) -> Arc<dyn Fft<T>> {
        let planner = &mut self.planner;
        self.plans
            .entry((len, forward))
            .or_insert_with(|| {
                let dir = if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                };
                planner.plan_fft(len, dir)
            })
            .clone()
    }

    fn run(&mut self, buf: &mut [Complex<T>], forward: bool) {
        let plan = self.plan(buf.len(), forward);
        let need = plan.get_inplace_scratch_len();
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex::new(T::zero(), T::zero()));
        }
        plan.process_with_scratch(buf, &mut self.scratch[..need]);
        if !forward {
            let inv = T::one() / T::from_f64_lossy(buf.len() as f64);
            for z in buf.iter_mut() {
                z.re *= inv;
                z.im *= inv;
            }
        }
    }

    /// In-place unnormalized forward DFT of one line.
    pub fn forward(&mut self, buf: &mut [Complex<T>]) {
        self.run(buf, true);
    }

    /// In-place inverse DFT of one line, scaled by `1/len`.
    pub fn inverse(&mut self, buf: &mut [Complex<T>]) {
        self.run(buf, false);
    }

    /// Forward DFT along one axis of a tensor, every line independently.
    pub fn forward_axis(&mut self, t: &mut ComplexTensor<T>, axis: usize) {
        self.transform_axis(t, axis, true);
    }

    /// Inverse DFT (scaled by `1/len`) along one axis of a tensor.
    pub fn inverse_axis(&mut self, t: &mut ComplexTensor<T>, axis: usize) {
        self.transform_axis(t, axis, false);
    }

    fn transform_axis(&mut self, t: &mut ComplexTensor<T>, axis: usize, forward: bool) {
        assert!(axis < 3, "axis out of range");
        let dims = t.dims();
        let len = dims[axis];
        if len == 0 {
            return;
        }
        let strides = [dims[1] * dims[2], dims[2], 1];
        let stride = strides[axis];
        let (oa, ob) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let plan = self.plan(len, forward);
        let need = plan.get_inplace_scratch_len();
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex::new(T::zero(), T::zero()));
        }
        if self.line.len() < len {
            self.line.resize(len, Complex::new(T::zero(), T::zero()));
        }
        let inv = T::one() / T::from_f64_lossy(len as f64);
        let (re, im) = t.planes_mut();
        for a in 0..dims[oa] {
            for b in 0..dims[ob] {
                let base = a * strides[oa] + b * strides[ob];
                let line = &mut self.line[..len];
                for (j, z) in line.iter_mut().enumerate() {
                    let k = base + j * stride;
                    z.re = re[k];
                    z.im = im[k];
                }
                plan.process_with_scratch(line, &mut self.scratch[..need]);
                for (j, z) in line.iter().enumerate() {
                    let k = base + j * stride;
                    if forward {
                        re[k] = z.re;
                        im[k] = z.im;
                    } else {
                        re[k] = z.re * inv;
                        im[k] = z.im * inv;
                    }
                }
            }
        }
    }
}

/// Index permutation that moves the zero-frequency bin to the center:
/// output position `i` takes input bin `(i + len/2) % len`.
#[inline]
pub fn fftshift_src(i: usize, len: usize) -> usize {
    (i + len / 2) % len
}
