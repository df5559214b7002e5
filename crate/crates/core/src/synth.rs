//! Synthetic dechirped FMCW radar frames: point targets, receiver noise, and
//! mutual interference from other FMCW radars.
//!
//! A frame ("cube") is indexed `[fast-time sample, sweep, receiver]`. After
//! dechirping, a point target is a 3-D complex exponential whose frequencies
//! encode range (fast time), radial velocity (sweep to sweep), and azimuth
//! (receiver to receiver, half-wavelength spacing). An interfering radar
//! contributes energy only while its instantaneous frequency is within the
//! victim's IF bandwidth of the ego chirp, which produces the characteristic
//! short bursts when the two chirps cross.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Complex, ComplexTensor, Error, Result, Scalar};

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Ego radar and sampling geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarConfig {
    /// Sweep start frequency, Hz.
    pub start_freq_hz: f64,
    /// Sweep bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Sweep duration, s. Sweeps repeat back to back.
    pub sweep_duration_s: f64,
    /// Sweeps per frame.
    pub num_sweeps: usize,
    /// ADC samples per sweep.
    pub samples_per_sweep: usize,
    /// Uniform linear array size.
    pub num_receivers: usize,
    /// Element spacing in carrier wavelengths.
    pub receiver_spacing_wavelengths: f64,
    /// Complex noise power per sample (re and im each carry half).
    pub noise_power: f64,
    /// Receiver IF bandwidth, Hz: interference outside this band of the ego
    /// chirp is rejected before sampling.
    pub if_bandwidth_hz: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            start_freq_hz: 79.0e9,
            bandwidth_hz: 0.27e9,
            sweep_duration_s: 12.8e-6,
            num_sweeps: 128,
            samples_per_sweep: 256,
            num_receivers: 16,
            receiver_spacing_wavelengths: 0.5,
            noise_power: 1.0,
            if_bandwidth_hz: 10.0e6,
        }
    }
}

impl RadarConfig {
    /// ADC rate, Hz. Sampling is contiguous over the sweep.
    pub fn sample_rate_hz(&self) -> f64 {
        self.samples_per_sweep as f64 / self.sweep_duration_s
    }

    /// Chirp slope, Hz/s.
    pub fn slope_hz_per_s(&self) -> f64 {
        self.bandwidth_hz / self.sweep_duration_s
    }

    /// Mid-sweep carrier used for Doppler and array phase.
    pub fn ref_freq_hz(&self) -> f64 {
        self.start_freq_hz + 0.5 * self.bandwidth_hz
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.num_sweeps as f64 * self.sweep_duration_s
    }

    pub fn cube_dims(&self) -> [usize; 3] {
        [self.samples_per_sweep, self.num_sweeps, self.num_receivers]
    }

    /// Fractional range FFT bin of a target: beat cycles per sweep.
    pub fn range_bin(&self, range_m: f64) -> f64 {
        2.0 * self.bandwidth_hz * range_m / C
    }

    /// Signed fractional Doppler bin (cycles per frame across sweeps).
    pub fn doppler_bin(&self, velocity_mps: f64) -> f64 {
        let fd = 2.0 * velocity_mps * self.ref_freq_hz() / C;
        fd * self.sweep_duration_s * self.num_sweeps as f64
    }

    /// Signed fractional azimuth bin (cycles per array across receivers).
    pub fn angle_bin(&self, azimuth_rad: f64) -> f64 {
        self.receiver_spacing_wavelengths * azimuth_rad.sin() * self.num_receivers as f64
    }

    /// Largest representable range: the beat frequency must stay in the
    /// non-negative half of the fast-time spectrum.
    pub fn max_range_m(&self) -> f64 {
        (self.samples_per_sweep as f64 / 2.0) * C / (2.0 * self.bandwidth_hz)
    }

    /// Largest unambiguous |radial velocity|.
    pub fn max_speed_mps(&self) -> f64 {
        C / (4.0 * self.ref_freq_hz() * self.sweep_duration_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_freq_hz > 0.0) {
            return Err(Error::invalid("start_freq_hz", "must be positive"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth_hz", "must be positive"));
        }
        if !(self.sweep_duration_s > 0.0) {
            return Err(Error::invalid("sweep_duration_s", "must be positive"));
        }
        if self.num_sweeps < 2 || self.samples_per_sweep < 2 || self.num_receivers < 1 {
            return Err(Error::invalid(
                "cube_dims",
                format!("degenerate cube {:?}", self.cube_dims()),
            ));
        }
        if !(self.noise_power >= 0.0) {
            return Err(Error::invalid("noise_power", "must be non-negative"));
        }
        if !(self.if_bandwidth_hz > 0.0) {
            return Err(Error::invalid("if_bandwidth_hz", "must be positive"));
        }
        Ok(())
    }
}

/// One point target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectParam {
    pub range_m: f64,
    pub velocity_mps: f64,
    /// Azimuth off broadside, radians, in [-pi/2, pi/2].
    pub azimuth_rad: f64,
    /// Linear amplitude per sample.
    pub amplitude: f64,
}

/// One interfering FMCW radar. Its chirps repeat back to back for
/// `num_sweeps` sweeps starting at `time_offset_s` on the ego frame clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererParam {
    pub start_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub sweep_duration_s: f64,
    pub num_sweeps: usize,
    pub time_offset_s: f64,
    pub azimuth_rad: f64,
    /// Scene-level signal-and-noise to interference ratio, dB. Applied when
    /// the scene is assembled, where the total clean power is known.
    pub snir_db: f64,
}

fn validate_objects(cfg: &RadarConfig, objects: &[ObjectParam]) -> Result<()> {
    for (i, o) in objects.iter().enumerate() {
        if !(o.range_m >= 0.0 && o.range_m < cfg.max_range_m()) {
            return Err(Error::invalid(
                "range_m",
                format!("object {i}: {} outside [0, {})", o.range_m, cfg.max_range_m()),
            ));
        }
        if !(o.velocity_mps.abs() < cfg.max_speed_mps()) {
            return Err(Error::invalid(
                "velocity_mps",
                format!("object {i}: {} outside ±{}", o.velocity_mps, cfg.max_speed_mps()),
            ));
        }
        if !(o.azimuth_rad.abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(
                "azimuth_rad",
                format!("object {i}: {} outside ±pi/2", o.azimuth_rad),
            ));
        }
        if !(o.amplitude >= 0.0 && o.amplitude.is_finite()) {
            return Err(Error::invalid(
                "amplitude",
                format!("object {i}: {} must be finite and non-negative", o.amplitude),
            ));
        }
    }
    Ok(())
}

/// Deterministic seed derivation: one master seed, many independent streams.
/// SplitMix64 of the master xored with a stream tag.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Clean frame: superposition of point targets plus circular complex
/// Gaussian receiver noise. Deterministic in `seed`.
pub fn synth_objects<T: Scalar>(
    cfg: &RadarConfig,
    objects: &[ObjectParam],
    seed: u64,
) -> Result<ComplexTensor<T>> {
    cfg.validate()?;
    validate_objects(cfg, objects)?;
    let [ns, m, k] = cfg.cube_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut re = vec![0.0f64; ns * m * k];
    let mut im = vec![0.0f64; ns * m * k];

    for o in objects {
        // Cycles per fast-time sample / per sweep / per receiver.
        let d_fast = cfg.range_bin(o.range_m) / ns as f64;
        let d_slow = cfg.doppler_bin(o.velocity_mps) / m as f64;
        let d_rx = cfg.receiver_spacing_wavelengths * o.azimuth_rad.sin();
        let phase0: f64 = rng.gen::<f64>();

        let two_pi = 2.0 * std::f64::consts::PI;
        let step_fast = Complex::new((two_pi * d_fast).cos(), (two_pi * d_fast).sin());
        let step_rx = Complex::new((two_pi * d_rx).cos(), (two_pi * d_rx).sin());

        for mi in 0..m {
            // Fresh phase per sweep keeps recurrence drift bounded to one sweep.
            let ph = two_pi * (phase0 + d_slow * mi as f64).fract();
            let mut along_n = Complex::new(o.amplitude * ph.cos(), o.amplitude * ph.sin());
            for ni in 0..ns {
                let mut along_k = along_n;
                let base = (ni * m + mi) * k;
                for cell in 0..k {
                    re[base + cell] += along_k.re;
                    im[base + cell] += along_k.im;
                    along_k *= step_rx;
                }
                along_n *= step_fast;
            }
        }
    }

    if cfg.noise_power > 0.0 {
        let sigma = (cfg.noise_power / 2.0).sqrt();
        for (r, i) in re.iter_mut().zip(im.iter_mut()) {
            let gr: f64 = StandardNormal.sample(&mut rng);
            let gi: f64 = StandardNormal.sample(&mut rng);
            *r += sigma * gr;
            *i += sigma * gi;
        }
    }

    let cube = ComplexTensor::from_parts([ns, m, k], re, im)?;
    Ok(cube.cast())
}

/// Raw (unit-amplitude) interference frame from one interferer.
///
/// Per sample, the interferer's instantaneous frequency is compared against
/// the ego chirp; samples with a difference inside the IF bandwidth receive
/// a unit-magnitude complex exponential at the mixed-down phase, steered
/// across the array by the interferer azimuth. Everything else is zero.
/// Scaling to a target SNIR happens at scene level. Returns an all-zero cube
/// when the chirps never cross inside the band (valid; logged).
pub fn synth_interference<T: Scalar>(
    cfg: &RadarConfig,
    intf: &InterfererParam,
    phase0: f64,
) -> Result<ComplexTensor<T>> {
    cfg.validate()?;
    if !(intf.bandwidth_hz > 0.0) || !(intf.sweep_duration_s > 0.0) || intf.num_sweeps == 0 {
        return Err(Error::invalid(
            "interferer",
            format!("degenerate chirp {intf:?}"),
        ));
    }
    if !(intf.azimuth_rad.abs() <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid(
            "azimuth_rad",
            format!("interferer azimuth {} outside ±pi/2", intf.azimuth_rad),
        ));
    }

    let [ns, m, k] = cfg.cube_dims();
    let fs = cfg.sample_rate_hz();
    let slope_e = cfg.slope_hz_per_s();
    let slope_i = intf.bandwidth_hz / intf.sweep_duration_s;
    let active = intf.num_sweeps as f64 * intf.sweep_duration_s;
    let two_pi = 2.0 * std::f64::consts::PI;
    let d_rx = cfg.receiver_spacing_wavelengths * intf.azimuth_rad.sin();
    let step_rx = Complex::new((two_pi * d_rx).cos(), (two_pi * d_rx).sin());

    let mut re = vec![0.0f64; ns * m * k];
    let mut im = vec![0.0f64; ns * m * k];
    let mut hit = false;

    for mi in 0..m {
        let sweep_start = mi as f64 * cfg.sweep_duration_s;
        for ni in 0..ns {
            let tau_e = ni as f64 / fs;
            let t = sweep_start + tau_e;
            let s = t - intf.time_offset_s;
            if s < 0.0 || s >= active {
                continue;
            }
            let u = s / intf.sweep_duration_s;
            let mut frac = u - u.floor();
            // Snap exact sweep boundaries to the new sweep; f64 noise in
            // s/T otherwise lands tau_i at T instead of 0.
            if 1.0 - frac < 1e-9 {
                frac = 0.0;
            }
            let tau_i = frac * intf.sweep_duration_s;
            let f_diff = (intf.start_freq_hz + slope_i * tau_i)
                - (cfg.start_freq_hz + slope_e * tau_e);
            if f_diff.abs() >= cfg.if_bandwidth_hz {
                continue;
            }
            hit = true;
            // Mixed-down phase: interferer RF phase minus ego chirp phase,
            // both with per-sweep phase reset, in cycles.
            let ph_i = intf.start_freq_hz * tau_i + 0.5 * slope_i * tau_i * tau_i;
            let ph_e = cfg.start_freq_hz * tau_e + 0.5 * slope_e * tau_e * tau_e;
            let ph = two_pi * (ph_i - ph_e + phase0).fract();
            let mut z = Complex::new(ph.cos(), ph.sin());
            let base = (ni * m + mi) * k;
            for cell in 0..k {
                re[base + cell] += z.re;
                im[base + cell] += z.im;
                z *= step_rx;
            }
        }
    }

    if !hit {
        log::warn!(
            "interferer at {:.3} GHz never crossed the ego band; interference cube is zero",
            intf.start_freq_hz / 1e9
        );
    }
    let cube = ComplexTensor::from_parts([ns, m, k], re, im)?;
    Ok(cube.cast())
}

/// Random scene composition ranges. All intervals are inclusive uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneDistribution {
    pub objects_min: usize,
    pub objects_max: usize,
    /// Object amplitudes are log-uniform over `[-spread, 0]` dB relative to 1.
    pub amplitude_spread_db: f64,
    pub range_m: [f64; 2],
    /// Radial speed magnitude bound; sampled uniform over `[-max, max]`.
    pub speed_max_mps: f64,
    /// Azimuths are uniform in sin(angle) over `[-max, max]`.
    pub sin_azimuth_max: f64,
    pub interferers_min: usize,
    pub interferers_max: usize,
    pub intf_start_freq_hz: [f64; 2],
    pub intf_bandwidth_hz: [f64; 2],
    pub intf_sweep_duration_s: [f64; 2],
    pub intf_num_sweeps: [usize; 2],
    pub snir_db: [f64; 2],
}

impl Default for SceneDistribution {
    fn default() -> Self {
        Self {
            objects_min: 1,
            objects_max: 10,
            amplitude_spread_db: 30.0,
            range_m: [2.0, 50.0],
            speed_max_mps: 50.0,
            sin_azimuth_max: 0.95,
            interferers_min: 1,
            interferers_max: 3,
            intf_start_freq_hz: [78.9e9, 79.1e9],
            intf_bandwidth_hz: [0.15e9, 0.25e9],
            intf_sweep_duration_s: [12.0e-6, 24.0e-6],
            intf_num_sweeps: [100, 156],
            snir_db: [10.0, 30.0],
        }
    }
}

impl SceneDistribution {
    pub fn validate(&self, cfg: &RadarConfig) -> Result<()> {
        if self.objects_min > self.objects_max {
            return Err(Error::invalid("objects", "min > max"));
        }
        if self.interferers_min > self.interferers_max {
            return Err(Error::invalid("interferers", "min > max"));
        }
        if !(self.range_m[0] >= 0.0 && self.range_m[1] < cfg.max_range_m()) {
            return Err(Error::invalid(
                "range_m",
                format!("{:?} outside [0, {})", self.range_m, cfg.max_range_m()),
            ));
        }
        if !(self.speed_max_mps < cfg.max_speed_mps()) {
            return Err(Error::invalid(
                "speed_max_mps",
                format!("{} exceeds unambiguous ±{}", self.speed_max_mps, cfg.max_speed_mps()),
            ));
        }
        if !(self.sin_azimuth_max > 0.0 && self.sin_azimuth_max <= 1.0) {
            return Err(Error::invalid("sin_azimuth_max", "must be in (0, 1]"));
        }
        if !(self.amplitude_spread_db >= 0.0) {
            return Err(Error::invalid("amplitude_spread_db", "must be non-negative"));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Draws the point targets of one scene.
pub fn sample_objects(
    cfg: &RadarConfig,
    dist: &SceneDistribution,
    rng: &mut ChaCha8Rng,
) -> Vec<ObjectParam> {
    let _ = cfg;
    let n = rng.gen_range(dist.objects_min..=dist.objects_max);
    (0..n)
        .map(|_| {
            let amp_db = uniform(rng, -dist.amplitude_spread_db, 0.0);
            ObjectParam {
                range_m: uniform(rng, dist.range_m[0], dist.range_m[1]),
                velocity_mps: uniform(rng, -dist.speed_max_mps, dist.speed_max_mps),
                azimuth_rad: uniform(rng, -dist.sin_azimuth_max, dist.sin_azimuth_max).asin(),
                amplitude: 10f64.powf(amp_db / 20.0),
            }
        })
        .collect()
}

/// Draws the interferers of one scene. The start offset is uniform over the
/// frame, extended half an interferer duration to each side so partial
/// overlaps at both frame edges occur.
pub fn sample_interferers(
    cfg: &RadarConfig,
    dist: &SceneDistribution,
    rng: &mut ChaCha8Rng,
) -> Vec<InterfererParam> {
    let n = rng.gen_range(dist.interferers_min..=dist.interferers_max);
    (0..n)
        .map(|_| {
            let sweep_duration_s =
                uniform(rng, dist.intf_sweep_duration_s[0], dist.intf_sweep_duration_s[1]);
            let num_sweeps =
                rng.gen_range(dist.intf_num_sweeps[0]..=dist.intf_num_sweeps[1]);
            let dur = num_sweeps as f64 * sweep_duration_s;
            InterfererParam {
                start_freq_hz: uniform(rng, dist.intf_start_freq_hz[0], dist.intf_start_freq_hz[1]),
                bandwidth_hz: uniform(rng, dist.intf_bandwidth_hz[0], dist.intf_bandwidth_hz[1]),
                sweep_duration_s,
                num_sweeps,
                time_offset_s: uniform(rng, -0.5 * dur, cfg.frame_duration_s() - 0.5 * dur),
                azimuth_rad: uniform(rng, -1.0, 1.0).asin(),
                snir_db: uniform(rng, dist.snir_db[0], dist.snir_db[1]),
            }
        })
        .collect()
}

/// One fully assembled scene.
#[derive(Debug, Clone)]
pub struct SceneSample<T> {
    pub clean: ComplexTensor<T>,
    pub interfered: ComplexTensor<T>,
    pub objects: Vec<ObjectParam>,
    pub interferers: Vec<InterfererParam>,
    pub seed: u64,
}

/// Draws and synthesizes a complete scene: clean cube (targets + noise) and
/// the same cube with every interferer added at its drawn SNIR. The SNIR is
/// realized exactly against the total clean power. Deterministic in `seed`.
pub fn sample_scene<T: Scalar>(
    cfg: &RadarConfig,
    dist: &SceneDistribution,
    seed: u64,
) -> Result<SceneSample<T>> {
    cfg.validate()?;
    dist.validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5343_454E)); // "SCEN"
    let objects = sample_objects(cfg, dist, &mut rng);
    let interferers = sample_interferers(cfg, dist, &mut rng);

    let clean: ComplexTensor<T> = synth_objects(cfg, &objects, derive_seed(seed, 1))?;
    let clean_power = clean.energy_f64();

    let mut interfered = clean.clone();
    for (i, intf) in interferers.iter().enumerate() {
        let phase0: f64 = ChaCha8Rng::seed_from_u64(derive_seed(seed, 100 + i as u64)).gen();
        let mut raw: ComplexTensor<T> = synth_interference(cfg, intf, phase0)?;
        let raw_power = raw.energy_f64();
        if raw_power <= 0.0 {
            continue;
        }
        let target_power = clean_power / 10f64.powf(intf.snir_db / 10.0);
        raw.scale(T::from_f64_lossy((target_power / raw_power).sqrt()));
        interfered.add_assign(&raw)?;
    }

    Ok(SceneSample {
        clean,
        interfered,
        objects,
        interferers,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> RadarConfig {
        RadarConfig {
            num_sweeps: 32,
            samples_per_sweep: 64,
            num_receivers: 8,
            ..RadarConfig::default()
        }
    }

    #[test]
    fn default_geometry_matches_closed_forms() {
        let cfg = RadarConfig::default();
        // Range resolution c/2B = 0.555 m per bin.
        let bin = cfg.range_bin(10.0);
        assert!((bin - 10.0 / (C / (2.0 * 0.27e9))).abs() < 1e-9);
        assert!((cfg.max_range_m() - 128.0 * C / (2.0 * 0.27e9)).abs() < 1e-6);
        // Unambiguous speed approximately 74 m/s at 79 GHz center.
        assert!((cfg.max_speed_mps() - 74.0).abs() < 1.0);
        // Broadside sits at fractional bin 0; steering covers +-8 bins.
        assert_eq!(cfg.angle_bin(0.0), 0.0);
        assert!((cfg.angle_bin(std::f64::consts::FRAC_PI_2) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn synth_objects_is_deterministic_in_seed() {
        let cfg = small_cfg();
        let objects = vec![ObjectParam {
            range_m: 10.0,
            velocity_mps: 5.0,
            azimuth_rad: 0.2,
            amplitude: 1.0,
        }];
        let a: ComplexTensor<f64> = synth_objects(&cfg, &objects, 7).unwrap();
        let b: ComplexTensor<f64> = synth_objects(&cfg, &objects, 7).unwrap();
        let c: ComplexTensor<f64> = synth_objects(&cfg, &objects, 8).unwrap();
        assert_eq!(a, b);
        assert!(a != c);
    }

    #[test]
    fn noise_only_cube_has_expected_power() {
        let cfg = RadarConfig {
            noise_power: 2.0,
            ..small_cfg()
        };
        let cube: ComplexTensor<f64> = synth_objects(&cfg, &[], 3).unwrap();
        let n = cube.len() as f64;
        let per_sample = cube.energy_f64() / n;
        assert!(
            (per_sample - 2.0).abs() < 0.1,
            "noise power per sample {per_sample}"
        );
    }

    #[test]
    fn noiseless_single_object_has_constant_magnitude() {
        let cfg = RadarConfig {
            noise_power: 0.0,
            ..small_cfg()
        };
        let objects = vec![ObjectParam {
            range_m: 12.0,
            velocity_mps: -10.0,
            azimuth_rad: -0.5,
            amplitude: 0.7,
        }];
        let cube: ComplexTensor<f64> = synth_objects(&cfg, &objects, 1).unwrap();
        for kf in 0..cube.len() {
            let mag = cube.get_flat(kf).norm();
            assert!((mag - 0.7).abs() < 1e-10);
        }
    }

    #[test]
    fn out_of_domain_objects_are_rejected() {
        let cfg = small_cfg();
        let base = ObjectParam {
            range_m: 10.0,
            velocity_mps: 0.0,
            azimuth_rad: 0.0,
            amplitude: 1.0,
        };
        let cases = [
            ObjectParam { range_m: -1.0, ..base.clone() },
            ObjectParam { range_m: cfg.max_range_m() + 1.0, ..base.clone() },
            ObjectParam { velocity_mps: cfg.max_speed_mps() + 1.0, ..base.clone() },
            ObjectParam { azimuth_rad: 2.0, ..base.clone() },
            ObjectParam { amplitude: f64::NAN, ..base.clone() },
        ];
        for bad in cases {
            let r: Result<ComplexTensor<f64>> = synth_objects(&cfg, &[bad.clone()], 0);
            assert!(r.is_err(), "{bad:?} accepted");
        }
    }

    /// Same slope, same grid: the difference frequency is constant, so the
    /// burst covers every active sample or none at all.
    #[test]
    fn parallel_chirps_are_all_or_nothing() {
        let cfg = RadarConfig {
            noise_power: 0.0,
            ..small_cfg()
        };
        let mut intf = InterfererParam {
            start_freq_hz: cfg.start_freq_hz + 5.0e6,
            bandwidth_hz: cfg.bandwidth_hz,
            sweep_duration_s: cfg.sweep_duration_s,
            num_sweeps: cfg.num_sweeps,
            time_offset_s: 0.0,
            azimuth_rad: 0.1,
            snir_db: 20.0,
        };
        let inside: ComplexTensor<f64> = synth_interference(&cfg, &intf, 0.25).unwrap();
        let nonzero = inside
            .re()
            .iter()
            .zip(inside.im())
            .filter(|(r, i)| **r != 0.0 || **i != 0.0)
            .count();
        assert_eq!(nonzero, inside.len(), "5 MHz offset is inside a 10 MHz IF");

        intf.start_freq_hz = cfg.start_freq_hz + 50.0e6;
        let outside: ComplexTensor<f64> = synth_interference(&cfg, &intf, 0.25).unwrap();
        assert_eq!(outside.energy_f64(), 0.0, "50 MHz offset never enters the IF");
    }

    #[test]
    fn crossing_chirps_produce_partial_bursts() {
        let cfg = RadarConfig {
            noise_power: 0.0,
            ..small_cfg()
        };
        let intf = InterfererParam {
            start_freq_hz: 78.9e9,
            bandwidth_hz: 0.2e9,
            sweep_duration_s: 18.0e-6,
            num_sweeps: 40,
            time_offset_s: 0.0,
            azimuth_rad: -0.3,
            snir_db: 20.0,
        };
        let cube: ComplexTensor<f64> = synth_interference(&cfg, &intf, 0.0).unwrap();
        let nonzero = cube
            .re()
            .iter()
            .zip(cube.im())
            .filter(|(r, i)| **r != 0.0 || **i != 0.0)
            .count();
        assert!(nonzero > 0, "slopes differ and bands overlap: bursts expected");
        assert!(
            nonzero < cube.len() / 2,
            "bursts must be sparse, got {nonzero}/{}",
            cube.len()
        );
        // Active samples carry unit magnitude before scene scaling.
        for kf in 0..cube.len() {
            let mag = cube.get_flat(kf).norm();
            assert!(mag == 0.0 || (mag - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn interferer_respects_its_active_interval() {
        let cfg = RadarConfig {
            noise_power: 0.0,
            ..small_cfg()
        };
        // Active only during the first quarter of the frame.
        let intf = InterfererParam {
            start_freq_hz: cfg.start_freq_hz + 1.0e6,
            bandwidth_hz: cfg.bandwidth_hz,
            sweep_duration_s: cfg.sweep_duration_s,
            num_sweeps: cfg.num_sweeps / 4,
            time_offset_s: 0.0,
            azimuth_rad: 0.0,
            snir_db: 20.0,
        };
        let cube: ComplexTensor<f64> = synth_interference(&cfg, &intf, 0.0).unwrap();
        let [_, m, k] = cfg.cube_dims();
        for ni in 0..cfg.samples_per_sweep {
            for mi in 0..m {
                let z = cube.get([ni, mi, 0]);
                let active = mi < cfg.num_sweeps / 4;
                assert_eq!(z.norm() > 0.0, active, "sweep {mi} sample {ni}");
            }
        }
        let _ = k;
    }

    #[test]
    fn scene_realizes_requested_snir_exactly() {
        let cfg = small_cfg();
        let dist = SceneDistribution {
            interferers_min: 1,
            interferers_max: 1,
            range_m: [2.0, 15.0],
            ..SceneDistribution::default()
        };
        let scene: SceneSample<f64> = sample_scene(&cfg, &dist, 42).unwrap();
        let clean_power = scene.clean.energy_f64();
        let mut diff = scene.interfered.clone();
        for (a, b) in diff.re_mut().iter_mut().zip(scene.clean.re()) {
            *a -= *b;
        }
        for (a, b) in diff.im_mut().iter_mut().zip(scene.clean.im()) {
            *a -= *b;
        }
        let int_power = diff.energy_f64();
        if int_power > 0.0 {
            let snir = 10.0 * (clean_power / int_power).log10();
            assert!(
                (snir - scene.interferers[0].snir_db).abs() < 0.1,
                "realized {snir} dB vs drawn {} dB",
                scene.interferers[0].snir_db
            );
        }
    }

    #[test]
    fn scene_is_deterministic_and_within_distribution() {
        let cfg = small_cfg();
        let dist = SceneDistribution {
            range_m: [2.0, 15.0],
            ..SceneDistribution::default()
        };
        let a: SceneSample<f32> = sample_scene(&cfg, &dist, 9).unwrap();
        let b: SceneSample<f32> = sample_scene(&cfg, &dist, 9).unwrap();
        assert_eq!(a.clean, b.clean);
        assert_eq!(a.interfered, b.interfered);
        assert_eq!(a.objects, b.objects);
        assert!(a.objects.len() >= dist.objects_min && a.objects.len() <= dist.objects_max);
        assert!(
            a.interferers.len() >= dist.interferers_min
                && a.interferers.len() <= dist.interferers_max
        );
        for o in &a.objects {
            assert!(o.range_m >= dist.range_m[0] && o.range_m <= dist.range_m[1]);
            assert!(o.velocity_mps.abs() <= dist.speed_max_mps);
            assert!(o.amplitude <= 1.0 && o.amplitude >= 10f64.powf(-30.0 / 20.0));
        }
        for i in &a.interferers {
            assert!(i.snir_db >= dist.snir_db[0] && i.snir_db <= dist.snir_db[1]);
        }
    }

    #[test]
    fn derive_seed_separates_streams() {
        let s = 1234567;
        assert_ne!(derive_seed(s, 0), derive_seed(s, 1));
        assert_ne!(derive_seed(s, 1), derive_seed(s + 1, 1));
        assert_eq!(derive_seed(s, 5), derive_seed(s, 5));
    }
}
