//! Complex 3-D convolutions, dense and separable, with hand-written
//! backward passes.
//!
//! Orientation: centered cross-correlation with zero padding and stride 1,
//! `out[i] = sum_k w[k] * x[i + k - h]` with `h = (K-1)/2` per axis, so
//! output dims equal input dims and a kernel whose only nonzero tap sits at
//! the center is the identity.
//!
//! Everything reduces to two primitives over whole tensors: a shifted
//! multiply-accumulate (`out += w * shift(x)`) and a shifted conjugated dot
//! product. Both walk contiguous runs along the innermost axis, which is
//! what makes the structure-of-arrays layout pay off.
//!
//! Gradients follow the convention used throughout the crate for real losses
//! over complex values: the gradient of `L` with respect to `z = a + jb` is
//! carried as `dL/da + j dL/db`. Through `y = w * x` that pulls back as
//! `g_x = conj(w) * g_y` and `g_w = conj(x) * g_y`.

use crate::{C64, Complex, ComplexTensor, Error, Result, Scalar};

/// Output index range `[lo, hi)` along one axis of length `d` such that
/// `i + o` stays in `[0, d)`. Empty when the shift exceeds the axis.
#[inline]
fn valid_range(d: usize, o: isize) -> (usize, usize) {
    let lo = if o < 0 { (-o) as usize } else { 0 };
    let hi = if o > 0 {
        d.saturating_sub(o as usize)
    } else {
        d
    };
    (lo.min(d), hi.min(d))
}

#[inline]
fn caxpy<T: Scalar>(wr: T, wi: T, xr: &[T], xi: &[T], yr: &mut [T], yi: &mut [T]) {
    for j in 0..yr.len() {
        let (ar, ai) = (xr[j], xi[j]);
        yr[j] += wr * ar - wi * ai;
        yi[j] += wr * ai + wi * ar;
    }
}

#[inline]
fn cdot_conj<T: Scalar>(xr: &[T], xi: &[T], gr: &[T], gi: &[T]) -> (T, T) {
    let mut sr = T::zero();
    let mut si = T::zero();
    for j in 0..xr.len() {
        sr += xr[j] * gr[j] + xi[j] * gi[j];
        si += xr[j] * gi[j] - xi[j] * gr[j];
    }
    (sr, si)
}

/// `out[i] += w * x[i + off]` over the intersection of both tensors.
fn shifted_axpy3<T: Scalar>(
    w: Complex<T>,
    x: &ComplexTensor<T>,
    off: [isize; 3],
    out: &mut ComplexTensor<T>,
) {
    let dims = out.dims();
    let (lo0, hi0) = valid_range(dims[0], off[0]);
    let (lo1, hi1) = valid_range(dims[1], off[1]);
    let (lo2, hi2) = valid_range(dims[2], off[2]);
    if lo0 >= hi0 || lo1 >= hi1 || lo2 >= hi2 {
        return;
    }
    let len = hi2 - lo2;
    let s0 = dims[1] * dims[2];
    let s1 = dims[2];
    let xr = x.re();
    let xi = x.im();
    let (yr, yi) = out.planes_mut();
    for i0 in lo0..hi0 {
        let x0 = (i0 as isize + off[0]) as usize;
        for i1 in lo1..hi1 {
            let x1 = (i1 as isize + off[1]) as usize;
            let xb = x0 * s0 + x1 * s1 + (lo2 as isize + off[2]) as usize;
            let yb = i0 * s0 + i1 * s1 + lo2;
            caxpy(
                w.re,
                w.im,
                &xr[xb..xb + len],
                &xi[xb..xb + len],
                &mut yr[yb..yb + len],
                &mut yi[yb..yb + len],
            );
        }
    }
}

/// `sum_i conj(x[i + off]) * g[i]` over the intersection, accumulated in f64
/// across runs.
fn shifted_cdot3<T: Scalar>(x: &ComplexTensor<T>, g: &ComplexTensor<T>, off: [isize; 3]) -> C64 {
    let dims = g.dims();
    let (lo0, hi0) = valid_range(dims[0], off[0]);
    let (lo1, hi1) = valid_range(dims[1], off[1]);
    let (lo2, hi2) = valid_range(dims[2], off[2]);
    if lo0 >= hi0 || lo1 >= hi1 || lo2 >= hi2 {
        return C64::new(0.0, 0.0);
    }
    let len = hi2 - lo2;
    let s0 = dims[1] * dims[2];
    let s1 = dims[2];
    let (xr, xi) = (x.re(), x.im());
    let (gr, gi) = (g.re(), g.im());
    let mut acc = C64::new(0.0, 0.0);
    for i0 in lo0..hi0 {
        let x0 = (i0 as isize + off[0]) as usize;
        for i1 in lo1..hi1 {
            let x1 = (i1 as isize + off[1]) as usize;
            let xb = x0 * s0 + x1 * s1 + (lo2 as isize + off[2]) as usize;
            let gb = i0 * s0 + i1 * s1 + lo2;
            let (sr, si) = cdot_conj(
                &xr[xb..xb + len],
                &xi[xb..xb + len],
                &gr[gb..gb + len],
                &gi[gb..gb + len],
            );
            acc.re += sr.to_f64_lossy();
            acc.im += si.to_f64_lossy();
        }
    }
    acc
}

fn check_odd(extent: [usize; 3]) -> Result<()> {
    if extent.iter().any(|&k| k == 0 || k % 2 == 0) {
        return Err(Error::invalid(
            "kernel_extent",
            format!("extents must be odd and positive, got {extent:?}"),
        ));
    }
    Ok(())
}

/// Dense 3-D kernel, taps row-major over `extent`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel3<T> {
    pub extent: [usize; 3],
    pub taps: Vec<Complex<T>>,
}

impl<T: Scalar> Kernel3<T> {
    pub fn zeros(extent: [usize; 3]) -> Self {
        Self {
            extent,
            taps: vec![Complex::new(T::zero(), T::zero()); extent[0] * extent[1] * extent[2]],
        }
    }

    /// Outer product of three per-axis factors; the dense equivalent of a
    /// separable kernel.
    pub fn from_factors(factors: &[Vec<Complex<T>>; 3]) -> Self {
        let extent = [factors[0].len(), factors[1].len(), factors[2].len()];
        let mut taps = Vec::with_capacity(extent[0] * extent[1] * extent[2]);
        for f0 in &factors[0] {
            for f1 in &factors[1] {
                for f2 in &factors[2] {
                    taps.push(*f0 * *f1 * *f2);
                }
            }
        }
        Self { extent, taps }
    }
}

/// `out += x conv kernel` (dense).
pub fn conv_generic_accum<T: Scalar>(
    x: &ComplexTensor<T>,
    kernel: &Kernel3<T>,
    out: &mut ComplexTensor<T>,
) -> Result<()> {
    check_odd(kernel.extent)?;
    if x.dims() != out.dims() {
        return Err(Error::ShapeMismatch {
            context: "conv_generic",
            expected: out.dims().to_vec(),
            got: x.dims().to_vec(),
        });
    }
    let [k0, k1, k2] = kernel.extent;
    let h = [(k0 / 2) as isize, (k1 / 2) as isize, (k2 / 2) as isize];
    let mut t = 0;
    for a in 0..k0 {
        for b in 0..k1 {
            for c in 0..k2 {
                let off = [a as isize - h[0], b as isize - h[1], c as isize - h[2]];
                shifted_axpy3(kernel.taps[t], x, off, out);
                t += 1;
            }
        }
    }
    Ok(())
}

/// `out += x conv factor` along one axis.
pub fn conv_axis_accum<T: Scalar>(
    x: &ComplexTensor<T>,
    factor: &[Complex<T>],
    axis: usize,
    out: &mut ComplexTensor<T>,
) -> Result<()> {
    let k = factor.len();
    if k == 0 || k % 2 == 0 {
        return Err(Error::invalid(
            "kernel_extent",
            format!("factor length must be odd and positive, got {k}"),
        ));
    }
    if x.dims() != out.dims() {
        return Err(Error::ShapeMismatch {
            context: "conv_axis",
            expected: out.dims().to_vec(),
            got: x.dims().to_vec(),
        });
    }
    let h = (k / 2) as isize;
    for (t, &w) in factor.iter().enumerate() {
        let mut off = [0isize; 3];
        off[axis] = t as isize - h;
        shifted_axpy3(w, x, off, out);
    }
    Ok(())
}

/// Tap order reversal plus conjugation: the adjoint kernel. Pulling a
/// gradient back through a convolution is a convolution with this.
pub fn flip_conj<T: Scalar>(taps: &[Complex<T>]) -> Vec<Complex<T>> {
    taps.iter().rev().map(|w| w.conj()).collect()
}

fn flip_conj_kernel<T: Scalar>(kernel: &Kernel3<T>) -> Kernel3<T> {
    // Row-major full reversal reverses every axis at once.
    Kernel3 {
        extent: kernel.extent,
        taps: flip_conj(&kernel.taps),
    }
}

/// Dense backward: accumulates the input gradient and returns the tap
/// gradients in f64.
pub fn conv_generic_backward<T: Scalar>(
    x: &ComplexTensor<T>,
    kernel: &Kernel3<T>,
    gout: &ComplexTensor<T>,
    gin_accum: &mut ComplexTensor<T>,
) -> Result<Vec<C64>> {
    check_odd(kernel.extent)?;
    conv_generic_accum(gout, &flip_conj_kernel(kernel), gin_accum)?;
    let [k0, k1, k2] = kernel.extent;
    let h = [(k0 / 2) as isize, (k1 / 2) as isize, (k2 / 2) as isize];
    let mut gw = Vec::with_capacity(kernel.taps.len());
    for a in 0..k0 {
        for b in 0..k1 {
            for c in 0..k2 {
                let off = [a as isize - h[0], b as isize - h[1], c as isize - h[2]];
                gw.push(shifted_cdot3(x, gout, off));
            }
        }
    }
    Ok(gw)
}

/// Separable forward for one (input, output) channel pair:
/// `out += A2(A1(A0(x)))` where `Ad` convolves with `factors[d]` along axis
/// `d`. `t1`, `t2` are caller-provided scratch of the same dims.
pub fn conv_separable_accum<T: Scalar>(
    x: &ComplexTensor<T>,
    factors: &[Vec<Complex<T>>; 3],
    out: &mut ComplexTensor<T>,
    t1: &mut ComplexTensor<T>,
    t2: &mut ComplexTensor<T>,
) -> Result<()> {
    t1.fill_zero();
    conv_axis_accum(x, &factors[0], 0, t1)?;
    t2.fill_zero();
    conv_axis_accum(t1, &factors[1], 1, t2)?;
    conv_axis_accum(t2, &factors[2], 2, out)
}

/// Per-axis tap gradients of a separable pair, plus the input gradient.
///
/// The stage outputs are recomputed here rather than cached: two extra
/// forward passes per pair cost less than holding both intermediates for
/// every pair of every sample of a batch.
#[allow(clippy::too_many_arguments)]
pub fn conv_separable_backward<T: Scalar>(
    x: &ComplexTensor<T>,
    factors: &[Vec<Complex<T>>; 3],
    gout: &ComplexTensor<T>,
    gin_accum: &mut ComplexTensor<T>,
    t1: &mut ComplexTensor<T>,
    t2: &mut ComplexTensor<T>,
    t3: &mut ComplexTensor<T>,
    t4: &mut ComplexTensor<T>,
) -> Result<[Vec<C64>; 3]> {
    // u1 = A0(x), u2 = A1(u1).
    t1.fill_zero();
    conv_axis_accum(x, &factors[0], 0, t1)?;
    t2.fill_zero();
    conv_axis_accum(t1, &factors[1], 1, t2)?;

    let half = |k: usize| (k / 2) as isize;

    // Axis-2 stage: tap grads against u2, then pull back.
    let mut g2 = Vec::with_capacity(factors[2].len());
    for t in 0..factors[2].len() {
        let mut off = [0isize; 3];
        off[2] = t as isize - half(factors[2].len());
        g2.push(shifted_cdot3(t2, gout, off));
    }
    t3.fill_zero();
    conv_axis_accum(gout, &flip_conj(&factors[2]), 2, t3)?;

    // Axis-1 stage against u1.
    let mut g1 = Vec::with_capacity(factors[1].len());
    for t in 0..factors[1].len() {
        let mut off = [0isize; 3];
        off[1] = t as isize - half(factors[1].len());
        g1.push(shifted_cdot3(t1, t3, off));
    }
    t4.fill_zero();
    conv_axis_accum(t3, &flip_conj(&factors[1]), 1, t4)?;

    // Axis-0 stage against the input.
    let mut g0 = Vec::with_capacity(factors[0].len());
    for t in 0..factors[0].len() {
        let mut off = [0isize; 3];
        off[0] = t as isize - half(factors[0].len());
        g0.push(shifted_cdot3(x, t4, off));
    }
    conv_axis_accum(t4, &flip_conj(&factors[0]), 0, gin_accum)?;

    Ok([g0, g1, g2])
}
