//! From raw dechirped cubes to range/Doppler/azimuth maps, plus the global
//! complex whitening applied before maps enter the network.
//!
//! Processing order: per-axis amplitude windows, 3-D FFT, then crops. Fast
//! time keeps the lowest `range_bins` non-negative beat frequencies (targets
//! appear at positive beat frequency only). Doppler is centered with the
//! zero-velocity bin in the middle and cropped to `doppler_bins`. Azimuth is
//! centered with broadside in the middle and kept whole.

use serde::{Deserialize, Serialize};

use crate::fft::{fftshift_src, Ffts};
use crate::{ComplexTensor, Error, Result, Scalar};

/// Amplitude taper shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Symmetric raised cosine; first and last coefficients are zero.
    Hann,
    /// Taylor taper with `n̄ = 4` and −30 dB sidelobes, the usual choice for
    /// small azimuth arrays where a Hann would cost too much mainlobe width.
    Taylor,
}

/// Window coefficients of the given length, peak normalized to one.
pub fn window(kind: WindowKind, len: usize) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::invalid("len", "window length must be at least 1"));
    }
    if len == 1 {
        return Ok(vec![1.0]);
    }
    let raw = match kind {
        WindowKind::Hann => hann_raw(len),
        WindowKind::Taylor => taylor_raw(len, 4, 30.0),
    };
    let max = raw.iter().cloned().fold(f64::MIN, f64::max);
    if max <= 0.0 {
        return Err(Error::invalid(
            "len",
            format!("{kind:?} window of length {len} is degenerate (all zero)"),
        ));
    }
    Ok(raw.into_iter().map(|v| v / max).collect())
}

fn hann_raw(len: usize) -> Vec<f64> {
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / denom).cos()))
        .collect()
}

/// Classic Taylor synthesis: `nbar − 1` cosine terms whose coefficients are
/// chosen so the first `nbar` sidelobes sit at `−sll_db`.
fn taylor_raw(len: usize, nbar: usize, sll_db: f64) -> Vec<f64> {
    let b = 10f64.powf(sll_db / 20.0);
    let a = (b + (b * b - 1.0).sqrt()).ln() / std::f64::consts::PI;
    let s2 = (nbar * nbar) as f64 / (a * a + (nbar as f64 - 0.5).powi(2));
    let m_terms: Vec<f64> = (1..nbar).map(|m| m as f64).collect();
    let mut fm = vec![0.0f64; m_terms.len()];
    for (mi, &m) in m_terms.iter().enumerate() {
        let sign = if mi % 2 == 0 { 1.0 } else { -1.0 };
        let mut numer = sign;
        for &j in &m_terms {
            numer *= 1.0 - m * m / s2 / (a * a + (j - 0.5).powi(2));
        }
        let mut denom = 2.0;
        for &j in &m_terms {
            if j != m {
                denom *= 1.0 - (m * m) / (j * j);
            }
        }
        fm[mi] = numer / denom;
    }
    let big_m = len as f64;
    (0..len)
        .map(|n| {
            let x = n as f64 - big_m / 2.0 + 0.5;
            let mut w = 1.0;
            for (mi, &m) in m_terms.iter().enumerate() {
                w += 2.0 * fm[mi] * (2.0 * std::f64::consts::PI * m * x / big_m).cos();
            }
            w
        })
        .collect()
}

/// Output geometry of the range/Doppler/azimuth transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    /// Non-negative range bins kept (lowest beat frequencies).
    pub range_bins: usize,
    /// Doppler bins kept, centered on zero velocity.
    pub doppler_bins: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            range_bins: 96,
            doppler_bins: 96,
        }
    }
}

/// Windowed 3-D FFT of a raw cube with the crops described in the module doc.
///
/// Hann tapers on fast time and sweeps, Taylor on the receiver axis. The
/// forward FFT is unnormalized. Output dims are
/// `[range_bins, doppler_bins, receivers]`.
pub fn rda_transform<T: Scalar>(
    cube: &ComplexTensor<T>,
    cfg: &SpectrumConfig,
    ffts: &mut Ffts<T>,
) -> Result<ComplexTensor<T>> {
    let [d0, d1, d2] = cube.dims();
    if cfg.range_bins == 0 || cfg.range_bins > d0 / 2 {
        return Err(Error::invalid(
            "range_bins",
            format!("must be in 1..={} (half of {} fast-time samples), got {}", d0 / 2, d0, cfg.range_bins),
        ));
    }
    if cfg.doppler_bins == 0 || cfg.doppler_bins > d1 {
        return Err(Error::invalid(
            "doppler_bins",
            format!("must be in 1..={d1}, got {}", cfg.doppler_bins),
        ));
    }
    if (d1 - cfg.doppler_bins) % 2 != 0 {
        return Err(Error::invalid(
            "doppler_bins",
            format!("crop of {d1} sweeps to {} bins is not center-symmetric", cfg.doppler_bins),
        ));
    }

    let w0: Vec<T> = window(WindowKind::Hann, d0)?.iter().map(|&v| T::from_f64_lossy(v)).collect();
    let w1: Vec<T> = window(WindowKind::Hann, d1)?.iter().map(|&v| T::from_f64_lossy(v)).collect();
    let w2: Vec<T> = window(WindowKind::Taylor, d2)?.iter().map(|&v| T::from_f64_lossy(v)).collect();

    let mut work = cube.clone();
    {
        let (re, im) = work.planes_mut();
        let mut flat = 0;
        for i0 in 0..d0 {
            for i1 in 0..d1 {
                let w01 = w0[i0] * w1[i1];
                for w2k in w2.iter().take(d2) {
                    let w = w01 * *w2k;
                    re[flat] *= w;
                    im[flat] *= w;
                    flat += 1;
                }
            }
        }
    }

    // Range FFT, then keep the leading bins. Axis 0 is outermost, so the
    // kept cells are one contiguous prefix.
    ffts.forward_axis(&mut work, 0);
    let keep = cfg.range_bins * d1 * d2;
    let (_, mut re, mut im) = work.into_parts();
    re.truncate(keep);
    im.truncate(keep);
    let mut work = ComplexTensor::from_parts([cfg.range_bins, d1, d2], re, im)?;

    // Doppler FFT, center, crop.
    ffts.forward_axis(&mut work, 1);
    let crop0 = (d1 - cfg.doppler_bins) / 2;
    let mut centered = ComplexTensor::zeros([cfg.range_bins, cfg.doppler_bins, d2]);
    for i0 in 0..cfg.range_bins {
        for j in 0..cfg.doppler_bins {
            let src1 = fftshift_src(crop0 + j, d1);
            for k in 0..d2 {
                centered.set([i0, j, k], work.get([i0, src1, k]));
            }
        }
    }

    // Azimuth FFT, center only.
    ffts.forward_axis(&mut centered, 2);
    let mut out = ComplexTensor::zeros(centered.dims());
    for i0 in 0..cfg.range_bins {
        for i1 in 0..cfg.doppler_bins {
            for k in 0..d2 {
                out.set([i0, i1, k], centered.get([i0, i1, fftshift_src(k, d2)]));
            }
        }
    }
    Ok(out)
}

/// Affine (re, im) decorrelation fitted on a reference population:
/// `y = W (x − μ)` with `W` the inverse lower Cholesky factor of the
/// population covariance, so the transformed population has zero mean and
/// identity covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Whitener {
    pub mean: [f64; 2],
    /// Row-major 2×2, lower triangular.
    pub transform: [[f64; 2]; 2],
}

/// Streaming moment accumulator for [`Whitener`]; add maps one at a time.
#[derive(Debug, Clone, Default)]
pub struct WhitenerFit {
    n: u64,
    sum_re: f64,
    sum_im: f64,
    sum_rr: f64,
    sum_ri: f64,
    sum_ii: f64,
}

impl WhitenerFit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<T: Scalar>(&mut self, map: &ComplexTensor<T>) {
        for (&r, &i) in map.re().iter().zip(map.im()) {
            let (r, i) = (r.to_f64_lossy(), i.to_f64_lossy());
            self.sum_re += r;
            self.sum_im += i;
            self.sum_rr += r * r;
            self.sum_ri += r * i;
            self.sum_ii += i * i;
        }
        self.n += map.len() as u64;
    }

    pub fn finish(&self) -> Result<Whitener> {
        if self.n == 0 {
            return Err(Error::invalid("population", "no samples accumulated"));
        }
        let n = self.n as f64;
        let mu = [self.sum_re / n, self.sum_im / n];
        let a = self.sum_rr / n - mu[0] * mu[0];
        let b = self.sum_ri / n - mu[0] * mu[1];
        let c = self.sum_ii / n - mu[1] * mu[1];
        let floor = (a + c) * 1e-14 + f64::MIN_POSITIVE;
        if !(a > floor) {
            return Err(Error::SingularCovariance);
        }
        let l00 = a.sqrt();
        let l10 = b / l00;
        let s = c - l10 * l10;
        if !(s > floor) {
            return Err(Error::SingularCovariance);
        }
        let l11 = s.sqrt();
        Ok(Whitener {
            mean: mu,
            transform: [[1.0 / l00, 0.0], [-l10 / (l00 * l11), 1.0 / l11]],
        })
    }
}

impl Whitener {
    /// No-op transform: zero mean, unit lower-triangular factor.
    pub fn identity() -> Self {
        Self {
            mean: [0.0, 0.0],
            transform: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Fits on a slice of maps; see [`WhitenerFit`] for the streaming form.
    pub fn fit<T: Scalar>(maps: &[ComplexTensor<T>]) -> Result<Self> {
        let mut acc = WhitenerFit::new();
        for m in maps {
            acc.add(m);
        }
        acc.finish()
    }

    /// Applies `y = W (x − μ)` in place.
    pub fn apply<T: Scalar>(&self, map: &mut ComplexTensor<T>) {
        let mr = T::from_f64_lossy(self.mean[0]);
        let mi = T::from_f64_lossy(self.mean[1]);
        let w00 = T::from_f64_lossy(self.transform[0][0]);
        let w10 = T::from_f64_lossy(self.transform[1][0]);
        let w11 = T::from_f64_lossy(self.transform[1][1]);
        let (re, im) = map.planes_mut();
        for (r, i) in re.iter_mut().zip(im.iter_mut()) {
            let ur = *r - mr;
            let ui = *i - mi;
            *r = w00 * ur;
            *i = w10 * ur + w11 * ui;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex;

    #[test]
    fn hann_3_is_0_1_0() {
        assert_eq!(window(WindowKind::Hann, 3).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn hann_8_matches_reference_after_peak_normalization() {
        let expect = [
            0.0,
            0.1980622641951618,
            0.6431041321077906,
            1.0,
            1.0,
            0.6431041321077906,
            0.1980622641951618,
            0.0,
        ];
        let got = window(WindowKind::Hann, 8).unwrap();
        for (g, e) in got.iter().zip(expect) {
            assert!((g - e).abs() < 1e-15, "{g} vs {e}");
        }
    }

    #[test]
    fn taylor_16_matches_reference_after_peak_normalization() {
        let expect = [
            0.25388183826768423,
            0.3242444113746219,
            0.4463443880694454,
            0.5924332184988345,
            0.7367835763499139,
            0.8608073088571034,
            0.9517025248152616,
            1.0,
            1.0,
            0.9517025248152616,
            0.8608073088571034,
            0.7367835763499139,
            0.5924332184988345,
            0.4463443880694454,
            0.3242444113746219,
            0.25388183826768423,
        ];
        let got = window(WindowKind::Taylor, 16).unwrap();
        for (g, e) in got.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn windows_are_symmetric_with_unit_peak() {
        for kind in [WindowKind::Hann, WindowKind::Taylor] {
            for len in [1usize, 3, 5, 16, 17, 128, 256] {
                let w = window(kind, len).unwrap();
                let max = w.iter().cloned().fold(f64::MIN, f64::max);
                assert!((max - 1.0).abs() < 1e-15);
                for i in 0..len {
                    assert!(
                        (w[i] - w[len - 1 - i]).abs() < 1e-12,
                        "{kind:?} len {len} asymmetric at {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_windows_are_rejected() {
        assert!(window(WindowKind::Hann, 0).is_err());
        assert!(window(WindowKind::Hann, 2).is_err());
        assert_eq!(window(WindowKind::Hann, 1).unwrap(), vec![1.0]);
        assert_eq!(window(WindowKind::Taylor, 1).unwrap(), vec![1.0]);
        assert!(window(WindowKind::Taylor, 2).is_ok());
    }

    fn tone_cube(dims: [usize; 3], fr: f64, fd: f64, fa: f64) -> ComplexTensor<f64> {
        ComplexTensor::from_fn(dims, |i| {
            let ph = 2.0
                * std::f64::consts::PI
                * (fr * i[0] as f64 / dims[0] as f64
                    + fd * i[1] as f64 / dims[1] as f64
                    + fa * i[2] as f64 / dims[2] as f64);
            Complex::new(ph.cos(), ph.sin())
        })
    }

    fn argmax(map: &ComplexTensor<f64>) -> [usize; 3] {
        let dims = map.dims();
        let mut best = (f64::MIN, [0usize; 3]);
        for i0 in 0..dims[0] {
            for i1 in 0..dims[1] {
                for i2 in 0..dims[2] {
                    let p = map.get([i0, i1, i2]).norm_sqr();
                    if p > best.0 {
                        best = (p, [i0, i1, i2]);
                    }
                }
            }
        }
        best.1
    }

    #[test]
    fn on_bin_tone_lands_on_expected_output_cell() {
        let cfg = SpectrumConfig {
            range_bins: 12,
            doppler_bins: 12,
        };
        // Positive Doppler 3 cycles/frame, angle bin 2 of 8.
        let cube = tone_cube([32, 16, 8], 5.0, 3.0, 2.0);
        let map = rda_transform(&cube, &cfg, &mut Ffts::new()).unwrap();
        assert_eq!(map.dims(), [12, 12, 8]);
        assert_eq!(argmax(&map), [5, 6 + 3, 4 + 2]);
    }

    #[test]
    fn negative_doppler_maps_below_center() {
        let cfg = SpectrumConfig {
            range_bins: 12,
            doppler_bins: 12,
        };
        // -2 cycles/frame is raw bin 14 of 16, i.e. 2 below the center.
        let cube = tone_cube([32, 16, 8], 3.0, 14.0, 6.0);
        let map = rda_transform(&cube, &cfg, &mut Ffts::new()).unwrap();
        assert_eq!(argmax(&map), [3, 6 - 2, 4 - 2]);
    }

    #[test]
    fn zero_frequency_tone_sits_at_map_center() {
        let cfg = SpectrumConfig {
            range_bins: 8,
            doppler_bins: 8,
        };
        let cube = tone_cube([32, 16, 8], 2.0, 0.0, 0.0);
        let map = rda_transform(&cube, &cfg, &mut Ffts::new()).unwrap();
        assert_eq!(argmax(&map), [2, 4, 4]);
    }

    #[test]
    fn oversized_crops_are_rejected() {
        let cube = ComplexTensor::<f64>::zeros([32, 16, 8]);
        let mut ffts = Ffts::new();
        for cfg in [
            SpectrumConfig { range_bins: 17, doppler_bins: 8 },
            SpectrumConfig { range_bins: 0, doppler_bins: 8 },
            SpectrumConfig { range_bins: 8, doppler_bins: 17 },
            SpectrumConfig { range_bins: 8, doppler_bins: 15 },
        ] {
            assert!(rda_transform(&cube, &cfg, &mut ffts).is_err(), "{cfg:?}");
        }
    }

    fn correlated_map(seed: u64, dims: [usize; 3]) -> ComplexTensor<f64> {
        // Cheap deterministic LCG; distribution details are irrelevant here.
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        ComplexTensor::from_fn(dims, |_| {
            let x = next();
            let y = next();
            // Skewed, shifted, and correlated on purpose.
            Complex::new(3.0 * x + 1.5, 1.2 * x + 0.4 * y - 0.7)
        })
    }

    #[test]
    fn whitened_population_has_zero_mean_identity_covariance() {
        let maps: Vec<_> = (0..4).map(|s| correlated_map(s, [16, 16, 4])).collect();
        let w = Whitener::fit(&maps).unwrap();
        let mut acc = WhitenerFit::new();
        for m in &maps {
            let mut t = m.clone();
            w.apply(&mut t);
            acc.add(&t);
        }
        let n = (maps.len() * maps[0].len()) as f64;
        let mean_re = acc.sum_re / n;
        let mean_im = acc.sum_im / n;
        let cov_rr = acc.sum_rr / n - mean_re * mean_re;
        let cov_ri = acc.sum_ri / n - mean_re * mean_im;
        let cov_ii = acc.sum_ii / n - mean_im * mean_im;
        assert!(mean_re.abs() < 1e-10 && mean_im.abs() < 1e-10);
        assert!((cov_rr - 1.0).abs() < 1e-10);
        assert!(cov_ri.abs() < 1e-10);
        assert!((cov_ii - 1.0).abs() < 1e-10);
    }

    #[test]
    fn whitener_is_deterministic_for_fixed_input() {
        let maps: Vec<_> = (0..2).map(|s| correlated_map(s, [8, 8, 4])).collect();
        let w1 = Whitener::fit(&maps).unwrap();
        let w2 = Whitener::fit(&maps).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn degenerate_populations_are_rejected() {
        let constant = ComplexTensor::<f64>::from_fn([4, 4, 2], |_| Complex::new(2.5, -1.0));
        assert!(matches!(
            Whitener::fit(std::slice::from_ref(&constant)),
            Err(Error::SingularCovariance)
        ));
        let pure_real = ComplexTensor::<f64>::from_fn([4, 4, 2], |i| {
            Complex::new(i[0] as f64 - 1.2, 0.0)
        });
        assert!(matches!(
            Whitener::fit(std::slice::from_ref(&pure_real)),
            Err(Error::SingularCovariance)
        ));
    }
}
