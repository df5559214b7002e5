//! Classical interference mitigation on time-domain cubes: zeroing, IMAT
//! sparse reconstruction, and a simplified ramp filter.
//!
//! All three operate per fast-time line (fixed sweep and receiver) or per
//! range profile and return a cube of the input shape, so they slot into the
//! same spectrum pipeline as the learned model.

use serde::{Deserialize, Serialize};

use crate::fft::Ffts;
use crate::{BoolTensor, Complex, ComplexTensor, Error, Result, Scalar};

/// Interference detector settings for [`zeroing`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroingSpec {
    /// Multiple of the robust noise scale above the per-line median at
    /// which a sample counts as interfered.
    pub detection_factor: f64,
}

impl Default for ZeroingSpec {
    fn default() -> Self {
        Self {
            detection_factor: 4.0,
        }
    }
}

impl ZeroingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.detection_factor > 0.0) {
            return Err(Error::invalid(
                "detection_factor",
                format!("must be positive, got {}", self.detection_factor),
            ));
        }
        Ok(())
    }
}

/// Settings for [`imat`] sparse reconstruction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ImatSpec {
    pub iterations: usize,
    /// Starting threshold as a fraction of the initial peak spectrum
    /// magnitude.
    pub initial_threshold: f64,
    /// Exponential decay rate of the threshold per iteration.
    pub decay: f64,
}

impl Default for ImatSpec {
    fn default() -> Self {
        Self {
            iterations: 20,
            initial_threshold: 0.9,
            decay: 0.15,
        }
    }
}

impl ImatSpec {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be at least 1"));
        }
        if !(self.initial_threshold > 0.0 && self.initial_threshold <= 1.0) {
            return Err(Error::invalid(
                "initial_threshold",
                format!("must be in (0, 1], got {}", self.initial_threshold),
            ));
        }
        if !(self.decay > 0.0) {
            return Err(Error::invalid(
                "decay",
                format!("must be positive, got {}", self.decay),
            ));
        }
        Ok(())
    }
}

/// Reconstruction energy may not exceed this multiple of the input line
/// energy; beyond it the iteration is considered divergent.
const IMAT_ENERGY_LIMIT: f64 = 10.0;

/// Default sweep window of the ramp filter's sliding minimum.
pub const RAMP_WINDOW: usize = 5;

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite magnitudes"));
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Normal-consistent scale from the median absolute deviation.
const MAD_TO_SIGMA: f64 = 1.0 / 0.6745;

/// Detects interfered samples per fast-time line and zeroes them.
///
/// A sample is flagged when its magnitude exceeds the line median by more
/// than `detection_factor` times the MAD-based scale. Returns the cleaned
/// cube and the flag mask (input to [`imat`]). A line whose samples are all
/// flagged is zeroed entirely with a warning.
pub fn zeroing<T: Scalar>(
    cube: &ComplexTensor<T>,
    spec: &ZeroingSpec,
) -> Result<(ComplexTensor<T>, BoolTensor)> {
    spec.validate()?;
    let [n_fast, sweeps, rx] = cube.dims();
    let mut out = cube.clone();
    let mut mask = BoolTensor::new(cube.dims());
    let mut mags = vec![0.0f64; n_fast];
    let mut devs = vec![0.0f64; n_fast];

    for m in 0..sweeps {
        for k in 0..rx {
            for n in 0..n_fast {
                mags[n] = cube.get([n, m, k]).norm().to_f64_lossy();
            }
            devs.copy_from_slice(&mags);
            let med = median_in_place(&mut devs);
            for (d, &v) in devs.iter_mut().zip(&mags) {
                *d = (v - med).abs();
            }
            let scale = median_in_place(&mut devs) * MAD_TO_SIGMA;
            let threshold = med + spec.detection_factor * scale;

            let mut flagged = 0usize;
            for n in 0..n_fast {
                if mags[n] > threshold {
                    out.set([n, m, k], Complex::new(T::zero(), T::zero()));
                    mask.set([n, m, k], true);
                    flagged += 1;
                }
            }
            if flagged == n_fast {
                log::warn!("zeroing flagged every sample of sweep {m}, receiver {k}");
            }
        }
    }
    Ok((out, mask))
}

fn gather_line<T: Scalar>(
    cube: &ComplexTensor<T>,
    m: usize,
    k: usize,
    line: &mut [Complex<T>],
) {
    for (n, v) in line.iter_mut().enumerate() {
        *v = cube.get([n, m, k]);
    }
}

fn scatter_line<T: Scalar>(
    cube: &mut ComplexTensor<T>,
    m: usize,
    k: usize,
    line: &[Complex<T>],
) {
    for (n, &v) in line.iter().enumerate() {
        cube.set([n, m, k], v);
    }
}

fn energy<T: Scalar>(line: &[Complex<T>]) -> f64 {
    line.iter()
        .map(|z| {
            let (r, i) = (z.re.to_f64_lossy(), z.im.to_f64_lossy());
            r * r + i * i
        })
        .sum()
}

/// Iterative method with adaptive thresholding: reconstructs the samples
/// flagged in `mask` from the sparse spectrum of the rest.
///
/// Per line, iteration `k` transforms the current estimate, keeps spectrum
/// bins at or above `initial_threshold * exp(-decay * k)` times the initial
/// peak magnitude, inverts, and re-imposes unflagged samples from the
/// input. Lines without flags are returned untouched.
pub fn imat<T: Scalar>(
    cube: &ComplexTensor<T>,
    mask: &BoolTensor,
    spec: &ImatSpec,
    ffts: &mut Ffts<T>,
) -> Result<ComplexTensor<T>> {
    spec.validate()?;
    if cube.dims() != mask.dims() {
        return Err(Error::ShapeMismatch {
            context: "imat",
            expected: cube.dims().to_vec(),
            got: mask.dims().to_vec(),
        });
    }
    let [n_fast, sweeps, rx] = cube.dims();
    let mut out = cube.clone();
    let mut line = vec![Complex::new(T::zero(), T::zero()); n_fast];
    let mut known = vec![Complex::new(T::zero(), T::zero()); n_fast];
    let mut flags = vec![false; n_fast];

    for m in 0..sweeps {
        for k in 0..rx {
            let mut any = false;
            for n in 0..n_fast {
                flags[n] = mask.get([n, m, k]);
                any |= flags[n];
            }
            if !any {
                continue;
            }
            gather_line(cube, m, k, &mut known);
            line.copy_from_slice(&known);
            let input_energy = energy(&line);

            // Peak of the initial sparse spectrum anchors the schedule.
            ffts.forward(&mut line);
            let peak = line
                .iter()
                .map(|z| z.norm().to_f64_lossy())
                .fold(0.0f64, f64::max);
            ffts.inverse(&mut line);

            for it in 0..spec.iterations {
                let level = spec.initial_threshold * (-spec.decay * it as f64).exp() * peak;
                ffts.forward(&mut line);
                for z in line.iter_mut() {
                    if z.norm().to_f64_lossy() < level {
                        *z = Complex::new(T::zero(), T::zero());
                    }
                }
                ffts.inverse(&mut line);
                for n in 0..n_fast {
                    if !flags[n] {
                        line[n] = known[n];
                    }
                }
                let e = energy(&line);
                if input_energy > 0.0 && e > IMAT_ENERGY_LIMIT * input_energy {
                    return Err(Error::ImatDiverged {
                        ratio: e / input_energy,
                        iterations: it + 1,
                    });
                }
            }
            scatter_line(&mut out, m, k, &line);
        }
    }
    Ok(out)
}

/// Simplified ramp filter with the default 5-sweep window.
pub fn ramp_filter<T: Scalar>(
    cube: &ComplexTensor<T>,
    ffts: &mut Ffts<T>,
) -> Result<ComplexTensor<T>> {
    ramp_filter_with_window(cube, RAMP_WINDOW, ffts)
}

/// Magnitude-only correction across sweeps: per range bin and receiver,
/// the range-profile magnitude is replaced by the minimum over a centered
/// sweep window (clipped at the borders), keeping the original phase.
/// Interference inflates magnitudes, so the minimum tracks the clean level;
/// phase corruption is deliberately left in place. The result is
/// transformed back to the time domain.
pub fn ramp_filter_with_window<T: Scalar>(
    cube: &ComplexTensor<T>,
    window: usize,
    ffts: &mut Ffts<T>,
) -> Result<ComplexTensor<T>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::invalid(
            "window",
            format!("sweep window must be odd, got {window}"),
        ));
    }
    let [n_fast, sweeps, rx] = cube.dims();
    if sweeps < window {
        return Err(Error::invalid(
            "sweeps",
            format!("need at least {window} sweeps, got {sweeps}"),
        ));
    }
    let half = window / 2;

    // Range profiles: FFT along fast time, one line per (sweep, receiver).
    let mut profiles = cube.clone();
    ffts.forward_axis(&mut profiles, 0);

    let mut out = profiles.clone();
    let mut mags = vec![0.0f64; sweeps];
    for n in 0..n_fast {
        for k in 0..rx {
            for m in 0..sweeps {
                mags[m] = profiles.get([n, m, k]).norm().to_f64_lossy();
            }
            for m in 0..sweeps {
                let lo = m.saturating_sub(half);
                let hi = (m + half).min(sweeps - 1);
                let lowest = mags[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
                let z = profiles.get([n, m, k]);
                let scaled = if mags[m] > 0.0 {
                    let s = T::from_f64_lossy(lowest / mags[m]);
                    Complex::new(z.re * s, z.im * s)
                } else {
                    Complex::new(T::zero(), T::zero())
                };
                out.set([n, m, k], scaled);
            }
        }
    }

    ffts.inverse_axis(&mut out, 0);
    Ok(out)
}
