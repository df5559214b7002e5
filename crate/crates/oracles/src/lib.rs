//! Slow, obviously-correct reference implementations used by integration
//! tests to cross-check the optimized pipeline: direct DFTs in place of
//! FFTs, per-cell window scans in place of prefix sums, explicit box
//! matching in place of dilation. Everything computes in f64.

use num_complex::Complex64;
use num_traits::Zero;

use rim_core::cfar::CfarSpec;
use rim_core::metrics::{F1Stats, ToleranceSpec};
use rim_core::spectrum::{window, SpectrumConfig, WindowKind};
use rim_core::{BoolTensor, Complex, ComplexTensor, RealTensor, Scalar};

/// O(N^2) DFT along one axis; `inverse` applies the conjugate kernel and
/// the 1/N scale, matching the convention of the fast path.
pub fn dft_axis<T: Scalar>(x: &ComplexTensor<T>, axis: usize, inverse: bool) -> ComplexTensor<f64> {
    let dims = x.dims();
    let n = dims[axis];
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    let mut out = ComplexTensor::<f64>::zeros(dims);
    for i0 in 0..dims[0] {
        for i1 in 0..dims[1] {
            for i2 in 0..dims[2] {
                let mut acc = Complex64::zero();
                let out_idx = [i0, i1, i2];
                for j in 0..n {
                    let mut in_idx = out_idx;
                    in_idx[axis] = j;
                    let v = x.get(in_idx);
                    let z = Complex64::new(v.re.to_f64_lossy(), v.im.to_f64_lossy());
                    let ang = sign * 2.0 * std::f64::consts::PI * (out_idx[axis] * j) as f64
                        / n as f64;
                    acc += z * Complex64::new(ang.cos(), ang.sin());
                }
                out.set(out_idx, Complex::new(acc.re * scale, acc.im * scale));
            }
        }
    }
    out
}

/// Range-Doppler-angle transform composed from direct DFTs and explicit
/// index bookkeeping; mirrors the contract of the fast transform.
pub fn rda_direct<T: Scalar>(cube: &ComplexTensor<T>, cfg: &SpectrumConfig) -> ComplexTensor<f64> {
    let [ns, m, k] = cube.dims();
    let wn = window(WindowKind::Hann, ns).expect("window");
    let wm = window(WindowKind::Hann, m).expect("window");
    let wk = window(WindowKind::Taylor, k).expect("window");

    let mut windowed = ComplexTensor::<f64>::zeros(cube.dims());
    for i0 in 0..ns {
        for i1 in 0..m {
            for i2 in 0..k {
                let v = cube.get([i0, i1, i2]);
                let w = wn[i0] * wm[i1] * wk[i2];
                windowed.set(
                    [i0, i1, i2],
                    Complex::new(v.re.to_f64_lossy() * w, v.im.to_f64_lossy() * w),
                );
            }
        }
    }

    let spectral = dft_axis(
        &dft_axis(&dft_axis(&windowed, 0, false), 1, false),
        2,
        false,
    );

    // Keep the lowest range bins, center-crop shifted Doppler, shift angle.
    let r = cfg.range_bins;
    let d = cfg.doppler_bins;
    let mut out = ComplexTensor::<f64>::zeros([r, d, k]);
    let doppler_start = (m - d) / 2;
    for i0 in 0..r {
        for i1 in 0..d {
            for i2 in 0..k {
                let src1 = (doppler_start + i1 + m / 2) % m;
                let src2 = (i2 + k / 2) % k;
                out.set([i0, i1, i2], spectral.get([i0, src1, src2]));
            }
        }
    }
    out
}

/// Per-cell SINR by explicit window scans with border clipping: power in
/// dB over the mean of the window cells minus the guard cells.
pub fn sinr_naive<T: Scalar>(map: &ComplexTensor<T>, spec: &CfarSpec) -> RealTensor<f64> {
    let dims = map.dims();
    let wh = [spec.window[0] / 2, spec.window[1] / 2, spec.window[2] / 2];
    let gh = [spec.guard[0] / 2, spec.guard[1] / 2, spec.guard[2] / 2];
    let mut out = RealTensor::<f64>::zeros(dims);
    for i0 in 0..dims[0] {
        for i1 in 0..dims[1] {
            for i2 in 0..dims[2] {
                let cut = [i0, i1, i2];
                let mut noise_sum = 0.0f64;
                let mut noise_cnt = 0usize;
                for j0 in i0.saturating_sub(wh[0])..=(i0 + wh[0]).min(dims[0] - 1) {
                    for j1 in i1.saturating_sub(wh[1])..=(i1 + wh[1]).min(dims[1] - 1) {
                        for j2 in i2.saturating_sub(wh[2])..=(i2 + wh[2]).min(dims[2] - 1) {
                            let in_guard = j0.abs_diff(i0) <= gh[0]
                                && j1.abs_diff(i1) <= gh[1]
                                && j2.abs_diff(i2) <= gh[2];
                            if in_guard {
                                continue;
                            }
                            let z = map.get([j0, j1, j2]);
                            noise_sum +=
                                z.re.to_f64_lossy().powi(2) + z.im.to_f64_lossy().powi(2);
                            noise_cnt += 1;
                        }
                    }
                }
                let z = map.get(cut);
                let p = z.re.to_f64_lossy().powi(2) + z.im.to_f64_lossy().powi(2);
                let noise = noise_sum / noise_cnt as f64;
                let sinr =
                    10.0 * ((p + spec.epsilon) / (noise + spec.epsilon)).log10();
                out.set(cut, sinr);
            }
        }
    }
    out
}

/// Tolerant confusion counts by scanning the full box around every cell.
pub fn f1_brute(truth: &BoolTensor, pred: &BoolTensor, tol: ToleranceSpec) -> F1Stats {
    let dims = truth.dims();
    let half = [tol.range, tol.doppler, tol.angle];
    let near = |map: &BoolTensor, idx: [usize; 3]| -> bool {
        for a in idx[0].saturating_sub(half[0])..=(idx[0] + half[0]).min(dims[0] - 1) {
            for b in idx[1].saturating_sub(half[1])..=(idx[1] + half[1]).min(dims[1] - 1) {
                for c in idx[2].saturating_sub(half[2])..=(idx[2] + half[2]).min(dims[2] - 1) {
                    if map.get([a, b, c]) {
                        return true;
                    }
                }
            }
        }
        false
    };
    let mut stats = F1Stats::default();
    for i0 in 0..dims[0] {
        for i1 in 0..dims[1] {
            for i2 in 0..dims[2] {
                let idx = [i0, i1, i2];
                if pred.get(idx) {
                    if near(truth, idx) {
                        stats.true_positives += 1;
                    } else {
                        stats.false_positives += 1;
                    }
                }
                if truth.get(idx) && !near(pred, idx) {
                    stats.false_negatives += 1;
                }
            }
        }
    }
    stats
}

/// Mean of |pred - reference|^2, straight from the definition.
pub fn mse_naive<T: Scalar>(reference: &ComplexTensor<T>, pred: &ComplexTensor<T>) -> f64 {
    let mut acc = 0.0;
    for c in 0..pred.len() {
        let p = pred.get_flat(c);
        let r = reference.get_flat(c);
        let dr = p.re.to_f64_lossy() - r.re.to_f64_lossy();
        let di = p.im.to_f64_lossy() - r.im.to_f64_lossy();
        acc += dr * dr + di * di;
    }
    acc / pred.len() as f64
}

/// Mean of (|pred| - |reference|)^2.
pub fn magmse_naive<T: Scalar>(reference: &ComplexTensor<T>, pred: &ComplexTensor<T>) -> f64 {
    let mut acc = 0.0;
    for c in 0..pred.len() {
        let p = pred.get_flat(c);
        let r = reference.get_flat(c);
        let pm = (p.re.to_f64_lossy().powi(2) + p.im.to_f64_lossy().powi(2)).sqrt();
        let rm = (r.re.to_f64_lossy().powi(2) + r.im.to_f64_lossy().powi(2)).sqrt();
        acc += (pm - rm) * (pm - rm);
    }
    acc / pred.len() as f64
}

/// Central finite difference of a scalar function at `x`, one component.
pub fn fd_partial(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut dn = x.to_vec();
    up[k] += h;
    dn[k] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}
