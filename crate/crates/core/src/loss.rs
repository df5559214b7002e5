//! Training objectives over rank-3 maps.
//!
//! Each loss returns the scalar value together with its gradient, mean over
//! all cells. `bce` consumes real-valued detection maps and emits a real
//! gradient; the complex regression losses emit gradients in the
//! `dL/dre + j dL/dim` convention.

use crate::{Complex, ComplexTensor, Error, RealTensor, Result, Scalar};

/// Predictions are clamped to `[CLAMP, 1 - CLAMP]` inside the log; the
/// gradient is zeroed where the clamp is active.
const CLAMP: f64 = 1e-7;

fn check_dims(context: &'static str, a: [usize; 3], b: [usize; 3]) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            context,
            expected: a.to_vec(),
            got: b.to_vec(),
        });
    }
    Ok(())
}

/// Class-weighted binary cross-entropy, mean over cells. A cell's class is
/// its discrete target (`y >= 0.5`); positive cells weigh `alpha`, negative
/// cells `1 - alpha`. The cross-entropy itself keeps the soft target, so the
/// per-cell minimizer is exactly `p = y` for every `alpha`:
/// `mean(w(y) * (-y * ln p - (1 - y) * ln(1 - p)))`.
pub fn bce<T: Scalar>(
    target: &RealTensor<T>,
    pred: &RealTensor<T>,
    alpha: f64,
) -> Result<(f64, RealTensor<T>)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(
            "alpha",
            format!("class weight must be in [0, 1], got {alpha}"),
        ));
    }
    check_dims("bce", target.dims(), pred.dims())?;
    let n = pred.len() as f64;
    let mut loss = 0.0f64;
    let mut grad = RealTensor::zeros(pred.dims());
    for c in 0..pred.len() {
        let y = target.data()[c].to_f64_lossy();
        let w = if y >= 0.5 { alpha } else { 1.0 - alpha };
        let p_raw = pred.data()[c].to_f64_lossy();
        let p = p_raw.clamp(CLAMP, 1.0 - CLAMP);
        loss -= w * (y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        if (CLAMP..=1.0 - CLAMP).contains(&p_raw) {
            let g = w * (-y / p + (1.0 - y) / (1.0 - p)) / n;
            grad.data_mut()[c] = T::from_f64_lossy(g);
        }
    }
    Ok((loss / n, grad))
}

/// Mean squared error over complex maps: `mean(|pred - reference|^2)`.
pub fn mse<T: Scalar>(
    reference: &ComplexTensor<T>,
    pred: &ComplexTensor<T>,
) -> Result<(f64, ComplexTensor<T>)> {
    check_dims("mse", reference.dims(), pred.dims())?;
    let n = pred.len() as f64;
    let mut loss = 0.0f64;
    let mut grad = ComplexTensor::zeros(pred.dims());
    for c in 0..pred.len() {
        let d_re = pred.re()[c].to_f64_lossy() - reference.re()[c].to_f64_lossy();
        let d_im = pred.im()[c].to_f64_lossy() - reference.im()[c].to_f64_lossy();
        loss += d_re * d_re + d_im * d_im;
        grad.set_flat(
            c,
            Complex::new(
                T::from_f64_lossy(2.0 * d_re / n),
                T::from_f64_lossy(2.0 * d_im / n),
            ),
        );
    }
    Ok((loss / n, grad))
}

/// Magnitude-only squared error: `mean((|pred| - |reference|)^2)`. Phase of
/// the prediction is unconstrained; the gradient at an exactly zero
/// prediction is taken as zero.
pub fn magmse<T: Scalar>(
    reference: &ComplexTensor<T>,
    pred: &ComplexTensor<T>,
) -> Result<(f64, ComplexTensor<T>)> {
    check_dims("magmse", reference.dims(), pred.dims())?;
    let n = pred.len() as f64;
    let mut loss = 0.0f64;
    let mut grad = ComplexTensor::zeros(pred.dims());
    for c in 0..pred.len() {
        let pr = pred.re()[c].to_f64_lossy();
        let pi = pred.im()[c].to_f64_lossy();
        let m = (pr * pr + pi * pi).sqrt();
        let r = reference.get_flat(c);
        let rm = (r.re.to_f64_lossy().powi(2) + r.im.to_f64_lossy().powi(2)).sqrt();
        let d = m - rm;
        loss += d * d;
        if m > 0.0 {
            let s = 2.0 * d / (n * m);
            grad.set_flat(
                c,
                Complex::new(T::from_f64_lossy(s * pr), T::from_f64_lossy(s * pi)),
            );
        }
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_from(vals: &[f64], dims: [usize; 3]) -> RealTensor<f64> {
        let mut t = RealTensor::zeros(dims);
        t.data_mut().copy_from_slice(vals);
        t
    }

    #[test]
    fn bce_at_half_is_ln2() {
        let y = real_from(&[0.5, 0.5], [2, 1, 1]);
        let p = real_from(&[0.5, 0.5], [2, 1, 1]);
        let (l, _) = bce(&y, &p, 0.5).unwrap();
        // 0.5 * ln 2 with alpha = 0.5 on both classes.
        assert!((l - 0.5 * 2.0f64.ln()).abs() < 1e-12, "{l}");
        assert!((l - 0.34657359027997264).abs() < 1e-15);
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        let dims = [2, 2, 1];
        let y = real_from(&[1.0, 0.0, 0.7, 0.2], dims);
        let p0 = [0.8, 0.3, 0.55, 0.1];
        for alpha in [0.5, 0.75, 1.0] {
            let p = real_from(&p0, dims);
            let (_, g) = bce(&y, &p, alpha).unwrap();
            let h = 1e-7;
            for c in 0..4 {
                let mut up = p0;
                up[c] += h;
                let mut dn = p0;
                dn[c] -= h;
                let (lp, _) = bce(&y, &real_from(&up, dims), alpha).unwrap();
                let (lm, _) = bce(&y, &real_from(&dn, dims), alpha).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                assert!(
                    (fd - g.data()[c]).abs() < 1e-5 * fd.abs().max(1.0),
                    "alpha {alpha} cell {c}: {fd} vs {}",
                    g.data()[c]
                );
            }
        }
    }

    #[test]
    fn bce_minimum_sits_at_the_target_for_any_weight() {
        // The class weight scales the loss but never moves the minimizer.
        for alpha in [0.25, 0.5, 0.75] {
            for y in [0.2, 0.4, 0.7, 0.85] {
                let yt = real_from(&[y], [1, 1, 1]);
                let (_, g) = bce(&yt, &real_from(&[y], [1, 1, 1]), alpha).unwrap();
                assert!(g.data()[0].abs() < 1e-12, "alpha {alpha} y {y}");
                let (_, g_lo) = bce(&yt, &real_from(&[y - 0.1], [1, 1, 1]), alpha).unwrap();
                let (_, g_hi) = bce(&yt, &real_from(&[y + 0.1], [1, 1, 1]), alpha).unwrap();
                assert!(g_lo.data()[0] < 0.0 && g_hi.data()[0] > 0.0);
            }
        }
    }

    #[test]
    fn bce_clamps_extreme_predictions() {
        let y = real_from(&[1.0], [1, 1, 1]);
        let (l, g) = bce(&y, &real_from(&[0.0], [1, 1, 1]), 0.5).unwrap();
        assert!(l.is_finite());
        // Clamped region: gradient deliberately zero.
        assert_eq!(g.data()[0], 0.0);
        assert!(bce(&y, &real_from(&[0.5], [1, 1, 1]), 1.5).is_err());
    }

    fn cplx(vals: &[(f64, f64)], dims: [usize; 3]) -> ComplexTensor<f64> {
        let mut t = ComplexTensor::zeros(dims);
        for (c, &(re, im)) in vals.iter().enumerate() {
            t.set_flat(c, Complex::new(re, im));
        }
        t
    }

    #[test]
    fn mse_matches_definition_and_finite_differences() {
        let dims = [2, 1, 1];
        let r = cplx(&[(1.0, -2.0), (0.5, 0.0)], dims);
        let p = cplx(&[(0.0, 0.0), (1.0, 1.0)], dims);
        let (l, g) = mse(&r, &p).unwrap();
        assert!((l - (5.0 + 1.25) / 2.0).abs() < 1e-12);
        let h = 1e-6;
        for c in 0..2 {
            for part in 0..2 {
                let mut up = p.clone();
                let mut dn = p.clone();
                if part == 0 {
                    up.re_mut()[c] += h;
                    dn.re_mut()[c] -= h;
                } else {
                    up.im_mut()[c] += h;
                    dn.im_mut()[c] -= h;
                }
                let fd = (mse(&r, &up).unwrap().0 - mse(&r, &dn).unwrap().0) / (2.0 * h);
                let an = if part == 0 { g.re()[c] } else { g.im()[c] };
                assert!((fd - an).abs() < 1e-6, "cell {c} part {part}");
            }
        }
    }

    #[test]
    fn magmse_is_phase_invariant() {
        let dims = [3, 1, 1];
        let r = cplx(&[(1.0, 0.0), (0.0, 2.0), (-1.5, 0.5)], dims);
        let p = cplx(&[(0.6, 0.8), (1.0, 1.0), (2.0, 0.0)], dims);
        let (l, _) = magmse(&r, &p).unwrap();
        // Rotate every prediction by 90 degrees; magnitudes unchanged.
        let rot = cplx(&[(-0.8, 0.6), (-1.0, 1.0), (0.0, 2.0)], dims);
        let (l_rot, _) = magmse(&r, &rot).unwrap();
        assert!((l - l_rot).abs() < 1e-12);
        // Perfect magnitude match, any phase: zero loss.
        let (l0, g0) = magmse(&r, &cplx(&[(0.0, 1.0), (2.0, 0.0), (0.5, 1.5)], dims)).unwrap();
        assert!(l0 < 1e-12);
        assert!(g0.energy_f64() < 1e-20);
    }

    #[test]
    fn magmse_gradient_matches_finite_differences_and_zero_is_safe() {
        let dims = [2, 1, 1];
        let r = cplx(&[(1.0, 1.0), (0.3, -0.4)], dims);
        let p = cplx(&[(0.5, -0.2), (-1.0, 0.7)], dims);
        let (_, g) = magmse(&r, &p).unwrap();
        let h = 1e-6;
        for c in 0..2 {
            for part in 0..2 {
                let mut up = p.clone();
                let mut dn = p.clone();
                if part == 0 {
                    up.re_mut()[c] += h;
                    dn.re_mut()[c] -= h;
                } else {
                    up.im_mut()[c] += h;
                    dn.im_mut()[c] -= h;
                }
                let fd = (magmse(&r, &up).unwrap().0 - magmse(&r, &dn).unwrap().0) / (2.0 * h);
                let an = if part == 0 { g.re()[c] } else { g.im()[c] };
                assert!((fd - an).abs() < 1e-5, "cell {c} part {part}: {fd} vs {an}");
            }
        }
        // Zero prediction: gradient defined as zero, no NaN.
        let zero_p = cplx(&[(0.0, 0.0), (0.0, 0.0)], dims);
        let (lz, gz) = magmse(&r, &zero_p).unwrap();
        assert!(lz.is_finite());
        assert_eq!(gz.get_flat(0), Complex::new(0.0, 0.0));
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let a = cplx(&[(0.0, 0.0)], [1, 1, 1]);
        let b = cplx(&[(0.0, 0.0), (0.0, 0.0)], [2, 1, 1]);
        assert!(mse(&a, &b).is_err());
        assert!(magmse(&a, &b).is_err());
        let ya = real_from(&[0.0], [1, 1, 1]);
        let yb = real_from(&[0.0, 0.0], [2, 1, 1]);
        assert!(bce(&ya, &yb, 0.5).is_err());
    }
}
