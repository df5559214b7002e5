//! Complex batch normalization.
//!
//! Treating each complex activation as the 2-vector (re, im), the layer
//! whitens every channel to zero mean and identity 2x2 covariance over the
//! batch population (all cells of all samples), then applies a trainable
//! symmetric 2x2 matrix `gamma` and a complex shift `beta`:
//!
//! `y = gamma * V^{-1/2} (x - mu) + beta`, `V = cov(x) + eps I`.
//!
//! That makes 5 real trainables per channel: 3 in `gamma`, 2 in `beta`.
//! `gamma` starts at `I/sqrt(2)` so re and im each carry half the unit
//! power, `beta` at zero. Running estimates of mean and covariance are kept
//! for evaluation mode.
//!
//! The backward pass differentiates through the batch statistics, including
//! the matrix inverse square root; nothing is treated as constant.

use serde::{Deserialize, Serialize};

use crate::{Complex, ComplexTensor, Error, Result, Scalar};

/// Stabilizer added to both covariance diagonals before inversion.
pub const BN_EPS: f64 = 1e-5;
/// Running-statistics update rate: `run = (1-m)*run + m*batch`.
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel parameters (one instance covers a whole layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnParams<T> {
    /// Symmetric 2x2 per channel: `[g_rr, g_ri, g_ii]`.
    pub gamma: Vec<[T; 3]>,
    pub beta: Vec<Complex<T>>,
    pub running_mean: Vec<Complex<T>>,
    /// Covariance `[a, b, c]` per channel: var(re), cov(re,im), var(im).
    pub running_cov: Vec<[T; 3]>,
}

impl<T: Scalar> BnParams<T> {
    pub fn identity_init(channels: usize) -> Self {
        let g = T::from_f64_lossy(1.0 / 2.0f64.sqrt());
        Self {
            gamma: vec![[g, T::zero(), g]; channels],
            beta: vec![Complex::new(T::zero(), T::zero()); channels],
            running_mean: vec![Complex::new(T::zero(), T::zero()); channels],
            running_cov: vec![[T::one(), T::zero(), T::one()]; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// Batch statistics of one training forward, per channel.
#[derive(Debug, Clone)]
pub struct BnBatchStats {
    pub mean: Vec<[f64; 2]>,
    /// Raw covariance `[a, b, c]` before the eps stabilizer.
    pub cov: Vec<[f64; 3]>,
}

/// Cache for the backward pass, per channel.
#[derive(Debug, Clone)]
pub struct BnCache {
    mean: Vec<[f64; 2]>,
    /// Stabilized covariance.
    v: Vec<[f64; 3]>,
    /// Its inverse square root `[w00, w01, w11]` (symmetric).
    w: Vec<[f64; 3]>,
    n: f64,
}

/// Symmetric 2x2 inverse square root via the closed form
/// `(V + sqrt(det V) I) / (sqrt(det V) * sqrt(trace V + 2 sqrt(det V)))`
/// inverted, returned as `[w00, w01, w11]`.
fn inv_sqrt_2x2(a: f64, b: f64, c: f64) -> Result<[f64; 3]> {
    let det = a * c - b * b;
    if !(det > 0.0) || !(a + c > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let s = det.sqrt();
    let t = (a + c + 2.0 * s).sqrt();
    let d = s * t;
    Ok([(c + s) / d, -b / d, (a + s) / d])
}

/// Chain rule through [`inv_sqrt_2x2`]: maps accumulated gradients on
/// `[w00, w01(+w10), w11]` to gradients on `(a, b, c)`.
fn inv_sqrt_2x2_backward(a: f64, b: f64, c: f64, dw: [f64; 3]) -> [f64; 3] {
    let s = (a * c - b * b).sqrt();
    let t = (a + c + 2.0 * s).sqrt();
    let d = s * t;
    let (w00, w01, w11) = ((c + s) / d, -b / d, (a + s) / d);

    let ds = [c / (2.0 * s), -b / s, a / (2.0 * s)];
    // t = sqrt(a + c + 2s): d t/dx = (delta + 2 ds)/(2t).
    let dt = [
        (1.0 + 2.0 * ds[0]) / (2.0 * t),
        (2.0 * ds[1]) / (2.0 * t),
        (1.0 + 2.0 * ds[2]) / (2.0 * t),
    ];
    let dd = [
        ds[0] * t + s * dt[0],
        ds[1] * t + s * dt[1],
        ds[2] * t + s * dt[2],
    ];
    let mut out = [0.0f64; 3];
    for x in 0..3 {
        let numer_00 = if x == 2 { 1.0 } else { 0.0 } + ds[x];
        let d_w00 = (numer_00 - w00 * dd[x]) / d;
        let numer_01 = if x == 1 { -1.0 } else { 0.0 };
        let d_w01 = (numer_01 - w01 * dd[x]) / d;
        let numer_11 = if x == 0 { 1.0 } else { 0.0 } + ds[x];
        let d_w11 = (numer_11 - w11 * dd[x]) / d;
        out[x] = dw[0] * d_w00 + dw[1] * d_w01 + dw[2] * d_w11;
    }
    out
}

fn check_batch<T: Scalar>(x: &[Vec<ComplexTensor<T>>], channels: usize) -> Result<[usize; 3]> {
    if x.is_empty() || x[0].is_empty() {
        return Err(Error::invalid("batch", "empty batch or zero channels"));
    }
    let dims = x[0][0].dims();
    for s in x {
        if s.len() != channels {
            return Err(Error::ShapeMismatch {
                context: "batchnorm channels",
                expected: vec![channels],
                got: vec![s.len()],
            });
        }
        for t in s {
            if t.dims() != dims {
                return Err(Error::ShapeMismatch {
                    context: "batchnorm dims",
                    expected: dims.to_vec(),
                    got: t.dims().to_vec(),
                });
            }
        }
    }
    Ok(dims)
}

/// Training-mode forward over a batch laid out `[sample][channel]`.
/// Returns outputs, the backward cache, and the raw batch statistics for the
/// caller's running-estimate update.
pub fn bn_forward_train<T: Scalar>(
    params: &BnParams<T>,
    x: &[Vec<ComplexTensor<T>>],
) -> Result<(Vec<Vec<ComplexTensor<T>>>, BnCache, BnBatchStats)> {
    let channels = params.channels();
    let dims = check_batch(x, channels)?;
    let n = (x.len() * dims[0] * dims[1] * dims[2]) as f64;

    let mut mean = vec![[0.0f64; 2]; channels];
    let mut cov = vec![[0.0f64; 3]; channels];
    for ch in 0..channels {
        let (mut sr, mut si) = (0.0f64, 0.0f64);
        let (mut srr, mut sri, mut sii) = (0.0f64, 0.0f64, 0.0f64);
        for s in x {
            for (&r, &i) in s[ch].re().iter().zip(s[ch].im()) {
                let (r, i) = (r.to_f64_lossy(), i.to_f64_lossy());
                sr += r;
                si += i;
                srr += r * r;
                sri += r * i;
                sii += i * i;
            }
        }
        let mu = [sr / n, si / n];
        mean[ch] = mu;
        cov[ch] = [
            srr / n - mu[0] * mu[0],
            sri / n - mu[0] * mu[1],
            sii / n - mu[1] * mu[1],
        ];
    }

    let mut v = vec![[0.0f64; 3]; channels];
    let mut w = vec![[0.0f64; 3]; channels];
    for ch in 0..channels {
        v[ch] = [cov[ch][0] + BN_EPS, cov[ch][1], cov[ch][2] + BN_EPS];
        w[ch] = inv_sqrt_2x2(v[ch][0], v[ch][1], v[ch][2])?;
    }

    let out = affine_apply(params, x, &mean, &w)?;
    Ok((
        out,
        BnCache {
            mean: mean.clone(),
            v,
            w,
            n,
        },
        BnBatchStats { mean, cov },
    ))
}

/// Evaluation-mode forward: whitening from the running estimates.
pub fn bn_forward_eval<T: Scalar>(
    params: &BnParams<T>,
    x: &[Vec<ComplexTensor<T>>],
) -> Result<Vec<Vec<ComplexTensor<T>>>> {
    let channels = params.channels();
    check_batch(x, channels)?;
    let mut mean = vec![[0.0f64; 2]; channels];
    let mut w = vec![[0.0f64; 3]; channels];
    for ch in 0..channels {
        mean[ch] = [
            params.running_mean[ch].re.to_f64_lossy(),
            params.running_mean[ch].im.to_f64_lossy(),
        ];
        let rc = params.running_cov[ch];
        w[ch] = inv_sqrt_2x2(
            rc[0].to_f64_lossy() + BN_EPS,
            rc[1].to_f64_lossy(),
            rc[2].to_f64_lossy() + BN_EPS,
        )?;
    }
    affine_apply(params, x, &mean, &w)
}

fn affine_apply<T: Scalar>(
    params: &BnParams<T>,
    x: &[Vec<ComplexTensor<T>>],
    mean: &[[f64; 2]],
    w: &[[f64; 3]],
) -> Result<Vec<Vec<ComplexTensor<T>>>> {
    let mut out = Vec::with_capacity(x.len());
    for s in x {
        let mut per_sample = Vec::with_capacity(s.len());
        for (ch, t) in s.iter().enumerate() {
            let g = params.gamma[ch];
            let (grr, gri, gii) = (
                g[0].to_f64_lossy(),
                g[1].to_f64_lossy(),
                g[2].to_f64_lossy(),
            );
            let (br, bi) = (
                params.beta[ch].re.to_f64_lossy(),
                params.beta[ch].im.to_f64_lossy(),
            );
            let [w00, w01, w11] = w[ch];
            let mu = mean[ch];
            // Fused (gamma * W) and shift, all in f64 per cell.
            let m00 = grr * w00 + gri * w01;
            let m01 = grr * w01 + gri * w11;
            let m10 = gri * w00 + gii * w01;
            let m11 = gri * w01 + gii * w11;
            let mut o = ComplexTensor::zeros(t.dims());
            {
                let (or_, oi_) = o.planes_mut();
                for (k, (&r, &i)) in t.re().iter().zip(t.im()).enumerate() {
                    let ur = r.to_f64_lossy() - mu[0];
                    let ui = i.to_f64_lossy() - mu[1];
                    or_[k] = T::from_f64_lossy(m00 * ur + m01 * ui + br);
                    oi_[k] = T::from_f64_lossy(m10 * ur + m11 * ui + bi);
                }
            }
            per_sample.push(o);
        }
        out.push(per_sample);
    }
    Ok(out)
}

/// Parameter gradients of one layer, in f64.
#[derive(Debug, Clone)]
pub struct BnGrads {
    pub gamma: Vec<[f64; 3]>,
    pub beta: Vec<[f64; 2]>,
}

/// Backward through the training-mode forward. `x` is the original input
/// batch, `gout` the gradient on the outputs; returns the input gradient and
/// the parameter gradients. Differentiating through the batch statistics
/// means every cell's gradient feels the whole channel population.
pub fn bn_backward<T: Scalar>(
    params: &BnParams<T>,
    cache: &BnCache,
    x: &[Vec<ComplexTensor<T>>],
    gout: &[Vec<ComplexTensor<T>>],
) -> Result<(Vec<Vec<ComplexTensor<T>>>, BnGrads)> {
    let channels = params.channels();
    let dims = check_batch(x, channels)?;
    let gdims = check_batch(gout, channels)?;
    if gdims != dims || gout.len() != x.len() {
        return Err(Error::ShapeMismatch {
            context: "batchnorm backward",
            expected: dims.to_vec(),
            got: gdims.to_vec(),
        });
    }
    let n = cache.n;

    let mut grads = BnGrads {
        gamma: vec![[0.0; 3]; channels],
        beta: vec![[0.0; 2]; channels],
    };
    let mut gin: Vec<Vec<ComplexTensor<T>>> = x
        .iter()
        .map(|s| s.iter().map(|t| ComplexTensor::zeros(t.dims())).collect())
        .collect();

    for ch in 0..channels {
        let g = params.gamma[ch];
        let (grr, gri, gii) = (
            g[0].to_f64_lossy(),
            g[1].to_f64_lossy(),
            g[2].to_f64_lossy(),
        );
        let [w00, w01, w11] = cache.w[ch];
        let mu = cache.mean[ch];

        // Pass A: accumulate beta, gamma, dW, and the mean of dv.
        let mut d_beta = [0.0f64; 2];
        let mut d_gamma = [0.0f64; 3];
        let mut d_w = [0.0f64; 3]; // [dw00, dw01 + dw10, dw11]
        let mut sum_dv = [0.0f64; 2];
        for (s_x, s_g) in x.iter().zip(gout) {
            let (xr, xi) = (s_x[ch].re(), s_x[ch].im());
            let (gr, gi) = (s_g[ch].re(), s_g[ch].im());
            for k in 0..xr.len() {
                let gre = gr[k].to_f64_lossy();
                let gim = gi[k].to_f64_lossy();
                let ur = xr[k].to_f64_lossy() - mu[0];
                let ui = xi[k].to_f64_lossy() - mu[1];
                let vr = w00 * ur + w01 * ui;
                let vi = w01 * ur + w11 * ui;
                d_beta[0] += gre;
                d_beta[1] += gim;
                d_gamma[0] += gre * vr;
                d_gamma[1] += gre * vi + gim * vr;
                d_gamma[2] += gim * vi;
                // dv = gamma^T g = gamma g (symmetric).
                let dvr = grr * gre + gri * gim;
                let dvi = gri * gre + gii * gim;
                sum_dv[0] += dvr;
                sum_dv[1] += dvi;
                // v = W u: dW accumulates dv u^T, off-diagonals combined.
                d_w[0] += dvr * ur;
                d_w[1] += dvr * ui + dvi * ur;
                d_w[2] += dvi * ui;
            }
        }

        let dv_cov = inv_sqrt_2x2_backward(
            cache.v[ch][0],
            cache.v[ch][1],
            cache.v[ch][2],
            d_w,
        );
        let (da, db, dc) = (dv_cov[0], dv_cov[1], dv_cov[2]);

        // Mean of du over the population: the covariance path sums to zero
        // because sum(u) = 0, leaving only the whitening path.
        let mean_du = [
            (w00 * sum_dv[0] + w01 * sum_dv[1]) / n,
            (w01 * sum_dv[0] + w11 * sum_dv[1]) / n,
        ];

        // Pass B: per-cell input gradients.
        for (si, (s_x, s_g)) in x.iter().zip(gout).enumerate() {
            let (xr, xi) = (s_x[ch].re(), s_x[ch].im());
            let (gr, gi) = (s_g[ch].re(), s_g[ch].im());
            let (or_, oi_) = gin[si][ch].planes_mut();
            for k in 0..xr.len() {
                let gre = gr[k].to_f64_lossy();
                let gim = gi[k].to_f64_lossy();
                let ur = xr[k].to_f64_lossy() - mu[0];
                let ui = xi[k].to_f64_lossy() - mu[1];
                let dvr = grr * gre + gri * gim;
                let dvi = gri * gre + gii * gim;
                let mut dur = w00 * dvr + w01 * dvi;
                let mut dui = w01 * dvr + w11 * dvi;
                dur += (2.0 * da * ur + db * ui) / n;
                dui += (2.0 * dc * ui + db * ur) / n;
                or_[k] = T::from_f64_lossy(dur - mean_du[0]);
                oi_[k] = T::from_f64_lossy(dui - mean_du[1]);
            }
        }

        grads.gamma[ch] = d_gamma;
        grads.beta[ch] = d_beta;
    }

    Ok((gin, grads))
}

/// Exponential moving average update of the running statistics.
pub fn bn_update_running<T: Scalar>(params: &mut BnParams<T>, stats: &BnBatchStats) {
    let m = BN_MOMENTUM;
    for ch in 0..params.channels() {
        let rm = &mut params.running_mean[ch];
        rm.re = T::from_f64_lossy(rm.re.to_f64_lossy() * (1.0 - m) + stats.mean[ch][0] * m);
        rm.im = T::from_f64_lossy(rm.im.to_f64_lossy() * (1.0 - m) + stats.mean[ch][1] * m);
        for j in 0..3 {
            let rc = params.running_cov[ch][j].to_f64_lossy();
            params.running_cov[ch][j] = T::from_f64_lossy(rc * (1.0 - m) + stats.cov[ch][j] * m);
        }
    }
}
