//! Cell-averaging CFAR detection over range/Doppler/azimuth maps, with a
//! continuous relaxation that admits gradients.
//!
//! Per cell, the noise estimate is the mean power over a rectangular window
//! centered on the cell, excluding an inner guard box (the cell under test
//! sits inside the guard). At map borders both boxes are clipped and the
//! mean runs over the cells that remain. The local SINR in dB is compared
//! against a threshold `beta_db`: the discrete detector is a hard step, the
//! relaxed detector a logistic with temperature `tau_db` on the dB axis, so
//! both agree wherever the SINR is more than a few `tau_db` away from the
//! threshold, and the relaxed one has a well-defined gradient everywhere.
//!
//! All internal arithmetic runs in f64 regardless of the map element type;
//! box sums use prefix sums per axis, so cost is independent of window size.

use serde::{Deserialize, Serialize};

use crate::{ComplexTensor, Error, RealTensor, Result, Scalar};

/// Detector behavior: hard step or its differentiable relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfarMode {
    Discrete,
    Relaxed,
}

/// Window geometry and threshold of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfarSpec {
    /// Full extent of the averaging window per axis; odd.
    pub window: [usize; 3],
    /// Full extent of the excluded guard box per axis; odd, smaller than
    /// `window`. `[1,1,1]` excludes only the cell under test.
    pub guard: [usize; 3],
    /// Detection threshold on the SINR, dB.
    pub beta_db: f64,
    /// Temperature of the relaxation, dB. Small values approach the step.
    pub tau_db: f64,
    /// Additive floor for both the cell power and the noise estimate.
    pub epsilon: f64,
}

impl Default for CfarSpec {
    fn default() -> Self {
        Self {
            window: [9, 9, 5],
            guard: [3, 3, 1],
            beta_db: 12.0,
            tau_db: 10.0,
            epsilon: 1e-12,
        }
    }
}

impl CfarSpec {
    pub fn validate(&self, dims: [usize; 3]) -> Result<()> {
        for d in 0..3 {
            if self.window[d] % 2 == 0 || self.guard[d] % 2 == 0 {
                return Err(Error::invalid(
                    "window/guard",
                    format!("extents must be odd, got {:?}/{:?}", self.window, self.guard),
                ));
            }
            if self.guard[d] >= self.window[d] {
                return Err(Error::invalid(
                    "guard",
                    format!("guard {:?} must be smaller than window {:?}", self.guard, self.window),
                ));
            }
            if self.window[d] > dims[d] {
                return Err(Error::WindowTooLarge {
                    window: self.window,
                    dims,
                });
            }
        }
        if !(self.tau_db > 0.0) {
            return Err(Error::invalid("tau_db", "must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// Everything the backward pass needs from a forward evaluation.
pub struct CfarCache {
    dims: [usize; 3],
    power: Vec<f64>,
    noise: Vec<f64>,
    /// Number of averaged cells per position (window minus guard, clipped).
    count: Vec<f64>,
    /// Relaxed detection values.
    relaxed: Vec<f64>,
}

/// Clipped sliding-box sum along every axis; `half[d]` cells to each side.
fn box_sum(data: &[f64], dims: [usize; 3], half: [usize; 3]) -> Vec<f64> {
    let mut cur = data.to_vec();
    let strides = [dims[1] * dims[2], dims[2], 1];
    let mut prefix: Vec<f64> = Vec::new();
    for axis in 0..3 {
        if half[axis] == 0 {
            continue;
        }
        let len = dims[axis];
        let h = half[axis];
        let stride = strides[axis];
        let (oa, ob) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        prefix.clear();
        prefix.resize(len + 1, 0.0);
        let mut next = vec![0.0f64; cur.len()];
        for a in 0..dims[oa] {
            for b in 0..dims[ob] {
                let base = a * strides[oa] + b * strides[ob];
                for j in 0..len {
                    prefix[j + 1] = prefix[j] + cur[base + j * stride];
                }
                for i in 0..len {
                    let lo = i.saturating_sub(h);
                    let hi = (i + h).min(len - 1);
                    next[base + i * stride] = prefix[hi + 1] - prefix[lo];
                }
            }
        }
        cur = next;
    }
    cur
}

/// Per-cell count of a clipped box: product of per-axis clipped extents.
fn box_count(dims: [usize; 3], half: [usize; 3]) -> Vec<f64> {
    let per_axis: Vec<Vec<f64>> = (0..3)
        .map(|d| {
            (0..dims[d])
                .map(|i| {
                    let lo = i.saturating_sub(half[d]);
                    let hi = (i + half[d]).min(dims[d] - 1);
                    (hi - lo + 1) as f64
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; dims[0] * dims[1] * dims[2]];
    let mut flat = 0;
    for i0 in 0..dims[0] {
        for i1 in 0..dims[1] {
            let c01 = per_axis[0][i0] * per_axis[1][i1];
            for i2 in 0..dims[2] {
                out[flat] = c01 * per_axis[2][i2];
                flat += 1;
            }
        }
    }
    out
}

fn halves(extent: [usize; 3]) -> [usize; 3] {
    [extent[0] / 2, extent[1] / 2, extent[2] / 2]
}

fn forward_cache<T: Scalar>(map: &ComplexTensor<T>, spec: &CfarSpec) -> Result<CfarCache> {
    let dims = map.dims();
    spec.validate(dims)?;
    let power: Vec<f64> = map
        .re()
        .iter()
        .zip(map.im())
        .map(|(&r, &i)| {
            let (r, i) = (r.to_f64_lossy(), i.to_f64_lossy());
            r * r + i * i
        })
        .collect();

    let hw = halves(spec.window);
    let hg = halves(spec.guard);
    let sum_w = box_sum(&power, dims, hw);
    let sum_g = box_sum(&power, dims, hg);
    let cnt_w = box_count(dims, hw);
    let cnt_g = box_count(dims, hg);

    let mut noise = vec![0.0f64; power.len()];
    let mut count = vec![0.0f64; power.len()];
    for c in 0..power.len() {
        let n_cells = cnt_w[c] - cnt_g[c];
        debug_assert!(n_cells >= 1.0);
        noise[c] = (sum_w[c] - sum_g[c]) / n_cells;
        count[c] = n_cells;
    }

    let tau = spec.tau_db;
    let beta = spec.beta_db;
    let eps = spec.epsilon;
    let relaxed: Vec<f64> = power
        .iter()
        .zip(&noise)
        .map(|(&p, &n)| {
            let sinr_db = 10.0 * ((p + eps) / (n + eps)).log10();
            1.0 / (1.0 + (-(sinr_db - beta) / tau).exp())
        })
        .collect();

    Ok(CfarCache {
        dims,
        power,
        noise,
        count,
        relaxed,
    })
}

/// Local SINR in dB per cell.
pub fn sinr_map<T: Scalar>(map: &ComplexTensor<T>, spec: &CfarSpec) -> Result<RealTensor<T>> {
    let cache = forward_cache(map, spec)?;
    let eps = spec.epsilon;
    let data = cache
        .power
        .iter()
        .zip(&cache.noise)
        .map(|(&p, &n)| T::from_f64_lossy(10.0 * ((p + eps) / (n + eps)).log10()))
        .collect();
    RealTensor::from_parts(cache.dims, data)
}

/// Hard detections: 1 where the SINR exceeds `beta_db`, else 0.
pub fn detect_discrete<T: Scalar>(
    map: &ComplexTensor<T>,
    spec: &CfarSpec,
) -> Result<RealTensor<T>> {
    let cache = forward_cache(map, spec)?;
    let eps = spec.epsilon;
    let data = cache
        .power
        .iter()
        .zip(&cache.noise)
        .map(|(&p, &n)| {
            let sinr_db = 10.0 * ((p + eps) / (n + eps)).log10();
            if sinr_db > spec.beta_db {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    RealTensor::from_parts(cache.dims, data)
}

/// Soft detections in (0, 1); the differentiable surrogate of
/// [`detect_discrete`]. Crosses 0.5 exactly where the hard detector flips.
pub fn detect_relaxed<T: Scalar>(
    map: &ComplexTensor<T>,
    spec: &CfarSpec,
) -> Result<RealTensor<T>> {
    Ok(detect_relaxed_cached(map, spec)?.0)
}

/// Relaxed detections plus the cache that [`backward_from_cache`] consumes.
pub fn detect_relaxed_cached<T: Scalar>(
    map: &ComplexTensor<T>,
    spec: &CfarSpec,
) -> Result<(RealTensor<T>, CfarCache)> {
    let cache = forward_cache(map, spec)?;
    let out = RealTensor::from_parts(
        cache.dims,
        cache.relaxed.iter().map(|&y| T::from_f64_lossy(y)).collect(),
    )?;
    Ok((out, cache))
}

/// Dispatch by mode; useful where the mode comes from configuration.
pub fn detect<T: Scalar>(
    map: &ComplexTensor<T>,
    spec: &CfarSpec,
    mode: CfarMode,
) -> Result<RealTensor<T>> {
    match mode {
        CfarMode::Discrete => detect_discrete(map, spec),
        CfarMode::Relaxed => detect_relaxed(map, spec),
    }
}

/// Pulls an upstream gradient on the relaxed detections back to the complex
/// map, reusing the forward cache.
///
/// The cell power enters the SINR twice: directly in its own numerator, and
/// through the noise estimates of every neighbor whose window (minus guard)
/// contains it. That second path is itself a clipped box sum, evaluated with
/// the same sliding machinery as the forward pass.
pub fn backward_from_cache<T: Scalar>(
    map: &ComplexTensor<T>,
    spec: &CfarSpec,
    cache: &CfarCache,
    upstream: &RealTensor<T>,
) -> Result<ComplexTensor<T>> {
    if upstream.dims() != cache.dims || map.dims() != cache.dims {
        return Err(Error::ShapeMismatch {
            context: "cfar backward",
            expected: cache.dims.to_vec(),
            got: upstream.dims().to_vec(),
        });
    }
    let eps = spec.epsilon;
    let k10 = 10.0 / std::f64::consts::LN_10;
    let n = cache.power.len();

    // d(loss)/d(sinr_db) per cell through the logistic.
    let mut d_sinr = vec![0.0f64; n];
    for c in 0..n {
        let y = cache.relaxed[c];
        d_sinr[c] = upstream.data()[c].to_f64_lossy() * y * (1.0 - y) / spec.tau_db;
    }

    // Direct path and the per-cell contribution it sends to its neighbors'
    // noise estimates.
    let mut d_power = vec![0.0f64; n];
    let mut q = vec![0.0f64; n];
    for c in 0..n {
        d_power[c] = d_sinr[c] * k10 / (cache.power[c] + eps);
        q[c] = -d_sinr[c] * k10 / (cache.noise[c] + eps) / cache.count[c];
    }
    let scatter_w = box_sum(&q, cache.dims, halves(spec.window));
    let scatter_g = box_sum(&q, cache.dims, halves(spec.guard));
    for c in 0..n {
        d_power[c] += scatter_w[c] - scatter_g[c];
    }

    // d|z|^2/dz: gradient of a real loss with respect to (re, im).
    let mut grad = ComplexTensor::zeros(cache.dims);
    {
        let (gre, gim) = grad.planes_mut();
        for c in 0..n {
            let dp = d_power[c];
            gre[c] = T::from_f64_lossy(2.0 * map.re()[c].to_f64_lossy() * dp);
            gim[c] = T::from_f64_lossy(2.0 * map.im()[c].to_f64_lossy() * dp);
        }
    }
    Ok(grad)
}

/// Stateless gradient of the relaxed detector. `mode` must be
/// [`CfarMode::Relaxed`]; the discrete detector has no gradient.
pub fn cfar_backward<T: Scalar>(
    map: &ComplexTensor<T>,
    spec: &CfarSpec,
    mode: CfarMode,
    upstream: &RealTensor<T>,
) -> Result<ComplexTensor<T>> {
    if mode == CfarMode::Discrete {
        return Err(Error::DiscreteBackward);
    }
    let cache = forward_cache(map, spec)?;
    backward_from_cache(map, spec, &cache, upstream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex;

    fn spec_small() -> CfarSpec {
        CfarSpec {
            window: [5, 5, 3],
            guard: [3, 3, 1],
            ..CfarSpec::default()
        }
    }

    fn random_map(dims: [usize; 3], seed: u64) -> ComplexTensor<f64> {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        ComplexTensor::from_fn(dims, |_| Complex::new(2.0 * next(), 2.0 * next()))
    }

    #[test]
    fn isolated_peak_on_unit_floor_has_textbook_sinr() {
        let dims = [11, 11, 7];
        let mut map = ComplexTensor::<f64>::from_fn(dims, |_| Complex::new(1.0, 0.0));
        map.set([5, 5, 3], Complex::new(10.0, 0.0));
        let spec = spec_small();
        let sinr = sinr_map(&map, &spec).unwrap();
        // Peak power 100 over unit noise: 20 dB.
        assert!((sinr.get([5, 5, 3]) - 20.0).abs() < 1e-9);
        let relaxed = detect_relaxed(&map, &spec).unwrap();
        let expect = 1.0 / (1.0 + (-(20.0 - 12.0) / 10.0f64).exp());
        assert!((relaxed.get([5, 5, 3]) - expect).abs() < 1e-12);
        let discrete = detect_discrete(&map, &spec).unwrap();
        assert_eq!(discrete.get([5, 5, 3]), 1.0);
        // A far-away floor cell sees SINR 0 dB: below threshold.
        assert_eq!(discrete.get([1, 1, 1]), 0.0);
    }

    #[test]
    fn guard_of_ones_excludes_only_the_cell_under_test() {
        let dims = [3, 3, 3];
        let mut map = ComplexTensor::<f64>::zeros(dims);
        let mut k = 1.0f64;
        for i0 in 0..3 {
            for i1 in 0..3 {
                for i2 in 0..3 {
                    map.set([i0, i1, i2], Complex::new(k.sqrt(), 0.0));
                    k += 1.0;
                }
            }
        }
        let spec = CfarSpec {
            window: [3, 3, 3],
            guard: [1, 1, 1],
            ..CfarSpec::default()
        };
        // Center power is 14; the other 26 cells sum to 1+..+27 - 14 = 364,
        // so the noise estimate is 364/26 = 14 and the SINR is 0 dB.
        let sinr = sinr_map(&map, &spec).unwrap();
        let expect = 10.0 * (14.0f64 / 14.0).log10();
        assert!((sinr.get([1, 1, 1]) - expect).abs() < 1e-9);
    }

    #[test]
    fn borders_average_over_clipped_neighborhoods() {
        let dims = [4, 4, 3];
        let map = ComplexTensor::<f64>::from_fn(dims, |i| {
            Complex::new((1 + i[0] + 2 * i[1] + i[2]) as f64, 0.0)
        });
        let spec = CfarSpec {
            window: [3, 3, 3],
            guard: [1, 1, 1],
            epsilon: 1e-12,
            ..CfarSpec::default()
        };
        let sinr = sinr_map(&map, &spec).unwrap();
        // Corner [0,0,0]: window clips to 2x2x2, guard to the cell itself.
        let mut sum = 0.0;
        for i0 in 0..2 {
            for i1 in 0..2 {
                for i2 in 0..2 {
                    sum += map.get([i0, i1, i2]).norm_sqr();
                }
            }
        }
        let p = map.get([0, 0, 0]).norm_sqr();
        let noise = (sum - p) / 7.0;
        let expect = 10.0 * ((p + 1e-12) / (noise + 1e-12)).log10();
        assert!((sinr.get([0, 0, 0]) - expect).abs() < 1e-9);
    }

    #[test]
    fn tiny_temperature_approaches_the_hard_detector() {
        let map = random_map([10, 9, 5], 11);
        let spec = CfarSpec {
            tau_db: 1e-3,
            ..spec_small()
        };
        let sinr = sinr_map(&map, &spec).unwrap();
        let soft = detect_relaxed(&map, &spec).unwrap();
        let hard = detect_discrete(&map, &spec).unwrap();
        for c in 0..soft.len() {
            if (sinr.data()[c] - spec.beta_db).abs() >= 0.1 {
                assert!(
                    (soft.data()[c] - hard.data()[c]).abs() < 1e-6,
                    "cell {c}: soft {} hard {}",
                    soft.data()[c],
                    hard.data()[c]
                );
            }
        }
    }

    #[test]
    fn half_crossing_matches_hard_threshold_for_any_temperature() {
        let map = random_map([8, 8, 4], 3);
        for tau in [1e-3, 1.0, 10.0, 100.0] {
            let spec = CfarSpec {
                tau_db: tau,
                ..spec_small()
            };
            let soft = detect_relaxed(&map, &spec).unwrap();
            let hard = detect_discrete(&map, &spec).unwrap();
            for c in 0..soft.len() {
                assert_eq!(
                    soft.data()[c] > 0.5,
                    hard.data()[c] == 1.0,
                    "tau {tau} cell {c}"
                );
            }
        }
    }

    #[test]
    fn relaxed_values_live_in_the_open_unit_interval() {
        let map = random_map([8, 8, 4], 5);
        let soft = detect_relaxed(&map, &spec_small()).unwrap();
        for &y in soft.data() {
            assert!(y > 0.0 && y < 1.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let dims = [8, 7, 4];
        let map = random_map(dims, 17);
        let spec = spec_small();
        let upstream = RealTensor::<f64>::from_fn(dims, |i| {
            ((i[0] * 31 + i[1] * 7 + i[2]) % 13) as f64 / 13.0 - 0.4
        });
        let loss = |m: &ComplexTensor<f64>| -> f64 {
            let y = detect_relaxed(m, &spec).unwrap();
            y.data()
                .iter()
                .zip(upstream.data())
                .map(|(&a, &b)| a * b)
                .sum()
        };
        let grad = cfar_backward(&map, &spec, CfarMode::Relaxed, &upstream).unwrap();
        let h = 1e-6;
        let mut checked = 0;
        for &c in &[0usize, 1, 50, 100, 151, dims[0] * dims[1] * dims[2] - 1] {
            for part in 0..2 {
                let mut plus = map.clone();
                let mut minus = map.clone();
                if part == 0 {
                    plus.re_mut()[c] += h;
                    minus.re_mut()[c] -= h;
                } else {
                    plus.im_mut()[c] += h;
                    minus.im_mut()[c] -= h;
                }
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let an = if part == 0 {
                    grad.re()[c]
                } else {
                    grad.im()[c]
                };
                let denom = fd.abs().max(an.abs()).max(1e-9);
                assert!(
                    ((fd - an) / denom).abs() < 1e-5,
                    "cell {c} part {part}: fd {fd} vs analytic {an}"
                );
                checked += 1;
            }
        }
        assert_eq!(checked, 12);
    }

    /// On a uniform map every interior cell's direct gradient is exactly
    /// cancelled by what it receives back through its neighbors' noise
    /// estimates.
    #[test]
    fn uniform_map_has_vanishing_interior_gradient() {
        let dims = [20, 20, 8];
        let map = ComplexTensor::<f64>::from_fn(dims, |_| Complex::new(0.6, -0.8));
        let spec = spec_small();
        let ones = RealTensor::<f64>::from_fn(dims, |_| 1.0);
        let grad = cfar_backward(&map, &spec, CfarMode::Relaxed, &ones).unwrap();
        // Direct-path magnitude, for scale.
        let cache = forward_cache(&map, &spec).unwrap();
        let y = cache.relaxed[0];
        let direct = (1.0 * y * (1.0 - y) / spec.tau_db) * (10.0 / std::f64::consts::LN_10)
            / (cache.power[0] + spec.epsilon)
            * 2.0
            * 0.6;
        let margin = spec.window[0] - 1;
        for i0 in margin..dims[0] - margin {
            for i1 in margin..dims[1] - margin {
                for i2 in spec.window[2] - 1..dims[2] - (spec.window[2] - 1) {
                    let g = grad.get([i0, i1, i2]);
                    assert!(
                        g.norm() < direct.abs() * 1e-12,
                        "interior cell [{i0},{i1},{i2}] gradient {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let map = ComplexTensor::<f64>::zeros([8, 8, 4]);
        let even = CfarSpec {
            window: [4, 5, 3],
            ..CfarSpec::default()
        };
        assert!(sinr_map(&map, &even).is_err());
        let big = CfarSpec {
            window: [9, 9, 5],
            ..CfarSpec::default()
        };
        assert!(matches!(
            sinr_map(&map, &big),
            Err(Error::WindowTooLarge { .. })
        ));
        let guard_too_big = CfarSpec {
            window: [5, 5, 3],
            guard: [5, 3, 1],
            ..CfarSpec::default()
        };
        assert!(sinr_map(&map, &guard_too_big).is_err());
        let bad_tau = CfarSpec {
            tau_db: 0.0,
            ..spec_small()
        };
        assert!(sinr_map(&map, &bad_tau).is_err());
    }

    #[test]
    fn discrete_mode_refuses_backward() {
        let map = random_map([8, 8, 4], 1);
        let up = RealTensor::<f64>::zeros([8, 8, 4]);
        assert!(matches!(
            cfar_backward(&map, &spec_small(), CfarMode::Discrete, &up),
            Err(Error::DiscreteBackward)
        ));
    }

    #[test]
    fn raising_cut_power_raises_its_sinr() {
        let dims = [9, 9, 5];
        let mut map = random_map(dims, 23);
        let spec = spec_small();
        let before = sinr_map(&map, &spec).unwrap().get([4, 4, 2]);
        let z = map.get([4, 4, 2]);
        map.set([4, 4, 2], z * 2.0);
        let after = sinr_map(&map, &spec).unwrap().get([4, 4, 2]);
        assert!(after > before);
    }
}
