//! Report emission: a summary table across methods on the test split, plus
//! grayscale map dumps (binary PGM) of one chosen sample.
//!
//! Map dumps are range-angle views: the non-coherent sum of map magnitudes
//! over the Doppler axis, dB-normalized so the brightest pixel is 0 dB and
//! the floor is clipped at -60 dB. Detection dumps sum binary detections
//! over Doppler and scale by the largest count; a map with no detections
//! renders all black.

use std::path::{Path, PathBuf};

use rim_core::cfar::detect_discrete;
use rim_core::fft::Ffts;
use rim_core::metrics::binarize;
use rim_core::{BoolTensor, ComplexTensor, Error, Result};

use crate::config::ExperimentConfig;
use crate::evaluate::{score_split, EvalTarget, MethodScores};
use crate::pipeline::{
    fit_whitener, method_output_map, open_split, restore, truth_mask, whitened_map, Method,
};

/// Non-coherent range-angle view: `out[r][a] = sum_d |map[r, d, a]|`.
/// Returned row-major as (rows, cols, values) with rows = range bins.
pub fn range_angle_view(map: &ComplexTensor<f32>) -> (usize, usize, Vec<f64>) {
    let [d0, d1, d2] = map.dims();
    let mut out = vec![0.0f64; d0 * d2];
    for r in 0..d0 {
        for d in 0..d1 {
            for a in 0..d2 {
                out[r * d2 + a] += map.get([r, d, a]).norm() as f64;
            }
        }
    }
    (d0, d2, out)
}

/// Doppler-summed detection counts of a binary mask, same layout as
/// `range_angle_view`.
pub fn detection_view(mask: &BoolTensor) -> (usize, usize, Vec<u64>) {
    let [d0, d1, d2] = mask.dims();
    let mut out = vec![0u64; d0 * d2];
    for r in 0..d0 {
        for d in 0..d1 {
            for a in 0..d2 {
                out[r * d2 + a] += u64::from(mask.get([r, d, a]));
            }
        }
    }
    (d0, d2, out)
}

/// Maps magnitudes to gray levels on a dB scale: 0 dB (the maximum) is
/// white, -60 dB and below is black. An all-zero view stays black.
pub fn db_gray(view: &[f64]) -> Vec<u8> {
    let max = view.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return vec![0; view.len()];
    }
    view.iter()
        .map(|&v| {
            if v <= 0.0 {
                return 0;
            }
            let db = (20.0 * (v / max).log10()).clamp(-60.0, 0.0);
            ((db + 60.0) / 60.0 * 255.0).round() as u8
        })
        .collect()
}

/// Scales detection counts linearly so the largest count is white.
pub fn count_gray(view: &[u64]) -> Vec<u8> {
    let max = view.iter().cloned().max().unwrap_or(0);
    if max == 0 {
        return vec![0; view.len()];
    }
    view.iter()
        .map(|&v| ((v as f64 / max as f64) * 255.0).round() as u8)
        .collect()
}

/// Writes an 8-bit binary PGM (magic `P5`).
pub fn write_pgm(path: impl AsRef<Path>, cols: usize, rows: usize, gray: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if gray.len() != cols * rows {
        return Err(Error::ShapeMismatch {
            context: "PGM pixel buffer",
            expected: vec![rows, cols],
            got: vec![gray.len()],
        });
    }
    let mut bytes = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    bytes.extend_from_slice(gray);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn dump_map(dir: &Path, name: &str, map: &ComplexTensor<f32>) -> Result<PathBuf> {
    let (rows, cols, view) = range_angle_view(map);
    let path = dir.join(format!("{name}.pgm"));
    write_pgm(&path, cols, rows, &db_gray(&view))?;
    Ok(path)
}

fn dump_mask(dir: &Path, name: &str, mask: &BoolTensor) -> Result<PathBuf> {
    let (rows, cols, view) = detection_view(mask);
    let path = dir.join(format!("detections-{name}.pgm"));
    write_pgm(&path, cols, rows, &count_gray(&view))?;
    Ok(path)
}

/// Summary table across methods, in presentation order.
pub fn summary_csv(rows: &[MethodScores]) -> String {
    let mut csv = String::from("method,f1,magmse,mse\n");
    for s in rows {
        let mse = match s.mean_mse {
            Some(v) => format!("{v:.6e}"),
            None => "-".to_string(),
        };
        csv.push_str(&format!(
            "{},{:.6},{:.6e},{mse}\n",
            s.label,
            s.f1(),
            s.mean_magmse
        ));
    }
    csv
}

pub struct ReportOutcome {
    pub summary_path: PathBuf,
    pub rows: Vec<MethodScores>,
    pub dumps: Vec<PathBuf>,
}

/// Scores no-mitigation, the classical methods, and every given checkpoint
/// on the test split, writes `summary.csv`, and dumps range-angle and
/// detection views of one test sample, all under `<output_dir>/report`
/// unless `out` overrides it.
pub fn cmd_report(
    cfg: &ExperimentConfig,
    checkpoints: &[PathBuf],
    sample: usize,
    out: Option<PathBuf>,
) -> Result<ReportOutcome> {
    cfg.validate()?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.join("report"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut ffts = Ffts::new();

    let mut targets: Vec<EvalTarget> = [Method::None, Method::Zeroing, Method::Imat, Method::Ramp]
        .into_iter()
        .map(EvalTarget::Method)
        .collect();
    targets.extend(checkpoints.iter().cloned().map(EvalTarget::Checkpoint));

    let mut rows = Vec::with_capacity(targets.len());
    for target in &targets {
        let scores = score_split(cfg, "test", target, &mut ffts)?;
        log::info!("test split, {}: F1 {:.4}", scores.label, scores.f1());
        rows.push(scores);
    }
    let summary_path = dir.join("summary.csv");
    std::fs::write(&summary_path, summary_csv(&rows)).map_err(|e| Error::io(&summary_path, e))?;

    let (_, mut reader) = open_split(cfg, "test")?;
    if sample >= reader.len() {
        return Err(Error::invalid(
            "sample",
            format!("test split has {} samples, got index {sample}", reader.len()),
        ));
    }
    let clean = reader.read_clean(sample)?;
    let interfered = reader.read_interfered(sample)?;
    let whitener = fit_whitener(cfg, &mut ffts)?;
    let clean_map = whitened_map(&clean, &cfg.spectrum, &whitener, &mut ffts)?;
    let truth = truth_mask(&clean_map, &cfg.cfar)?;

    let mut dumps = Vec::new();
    dumps.push(dump_map(&dir, "clean", &clean_map)?);
    dumps.push(dump_map(
        &dir,
        "interfered",
        &whitened_map(&interfered, &cfg.spectrum, &whitener, &mut ffts)?,
    )?);
    dumps.push(dump_mask(&dir, "truth", &truth)?);

    for method in [Method::Zeroing, Method::Imat, Method::Ramp] {
        let map = method_output_map(method, &interfered, &whitener, cfg, None, &mut ffts)?;
        dumps.push(dump_map(&dir, &format!("mitigated-{}", method.name()), &map)?);
        let pred = binarize(&detect_discrete(&map, &cfg.cfar)?, "report detections")?;
        dumps.push(dump_mask(&dir, method.name(), &pred)?);
    }
    for path in checkpoints {
        let (ckpt, mut model) = restore(path)?;
        let map = method_output_map(
            Method::Nn,
            &interfered,
            &ckpt.meta.whitener,
            cfg,
            Some(&mut model),
            &mut ffts,
        )?;
        let slug = format!("nn-{}", ckpt.meta.objective);
        dumps.push(dump_map(&dir, &slug, &map)?);
        let pred = binarize(&detect_discrete(&map, &ckpt.meta.cfar)?, "report detections")?;
        dumps.push(dump_mask(&dir, &slug, &pred)?);
    }

    Ok(ReportOutcome {
        summary_path,
        rows,
        dumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn lcg_map(dims: [usize; 3], seed: u64) -> ComplexTensor<f32> {
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut next = move || {
            state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            ((state >> 11) as f64 / (1u64 << 53) as f64) as f32 - 0.5
        };
        ComplexTensor::from_fn(dims, |_| Complex::new(next(), next()))
    }

    #[test]
    fn doppler_sum_matches_direct_computation() {
        let map = lcg_map([7, 5, 4], 99);
        let (rows, cols, view) = range_angle_view(&map);
        assert_eq!((rows, cols), (7, 4));
        for r in 0..7 {
            for a in 0..4 {
                let mut direct = 0.0f64;
                for d in 0..5 {
                    direct += map.get([r, d, a]).norm() as f64;
                }
                assert!((view[r * 4 + a] - direct).abs() <= 1e-6 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn brightest_pixel_renders_at_zero_db() {
        let gray = db_gray(&[1.0, 10.0, 0.01, 0.0]);
        assert_eq!(gray[1], 255);
        assert_eq!(gray[0], ((-20.0f64 + 60.0) / 60.0 * 255.0).round() as u8);
        // 0.01 is -60 dB below the max, exactly at the clip point.
        assert_eq!(gray[2], 0);
        assert_eq!(gray[3], 0);
    }

    #[test]
    fn empty_views_render_all_black() {
        assert!(db_gray(&[0.0; 12]).iter().all(|&p| p == 0));
        assert!(count_gray(&[0; 12]).iter().all(|&p| p == 0));
        let mask = BoolTensor::new([3, 4, 2]);
        let (rows, cols, view) = detection_view(&mask);
        assert_eq!(rows * cols, 6);
        assert!(count_gray(&view).iter().all(|&p| p == 0));
    }

    #[test]
    fn pgm_header_and_payload_are_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        write_pgm(&path, 3, 2, &[0, 64, 128, 192, 255, 32]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(bytes.len(), b"P5\n3 2\n255\n".len() + 6);
        assert!(write_pgm(dir.path().join("bad.pgm"), 3, 3, &[0; 6]).is_err());
    }

    #[test]
    fn detection_counts_scale_to_white() {
        let mut mask = BoolTensor::new([2, 3, 1]);
        mask.set([0, 0, 0], true);
        mask.set([0, 1, 0], true);
        mask.set([0, 2, 0], true);
        mask.set([1, 1, 0], true);
        let (_, _, view) = detection_view(&mask);
        let gray = count_gray(&view);
        assert_eq!(view, vec![3, 1]);
        assert_eq!(gray, vec![255, 85]);
    }
}
