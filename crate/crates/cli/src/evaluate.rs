//! Scoring of a mitigation method or a trained checkpoint on one dataset
//! split: tolerant F1 against clean-map truth plus regression errors
//! against the whitened clean map.
//!
//! The CSV output has one row per sample and one micro-aggregated row at
//! the end. Models trained on phase-blind objectives report no complex
//! MSE; the column holds `-` for them.

use std::path::PathBuf;

use rim_core::cfar::{detect_discrete, CfarSpec};
use rim_core::fft::Ffts;
use rim_core::loss::{magmse, mse};
use rim_core::metrics::{binarize, f1_tolerant, F1Stats};
use rim_core::spectrum::Whitener;
use rim_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::pipeline::{
    fit_whitener, method_output_map, open_split, restore, truth_mask, whitened_map, Method,
};

/// What to evaluate: a classical method (or no mitigation) on the fly, or a
/// network restored from a checkpoint.
#[derive(Debug, Clone)]
pub enum EvalTarget {
    Method(Method),
    Checkpoint(PathBuf),
}

/// Scores of a single sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleScore {
    pub f1: f64,
    pub magmse: f64,
    /// Absent when the evaluated model was trained phase-blind.
    pub mse: Option<f64>,
}

/// Split-level scores of one method: per-sample rows plus the micro
/// aggregate (confusion counts summed over samples, errors averaged).
#[derive(Debug, Clone)]
pub struct MethodScores {
    /// Human-readable row label, e.g. `zeroing` or `nn (bce)`.
    pub label: String,
    /// File-name-safe identifier, e.g. `zeroing` or `nn-bce`.
    pub slug: String,
    pub per_sample: Vec<SampleScore>,
    pub stats: F1Stats,
    pub mean_magmse: f64,
    pub mean_mse: Option<f64>,
}

impl MethodScores {
    pub fn f1(&self) -> f64 {
        self.stats.f1()
    }
}

struct Resolved {
    method: Method,
    model: Option<rim_core::cvnn::Model<f32>>,
    whitener: Whitener,
    cfar: CfarSpec,
    label: String,
    slug: String,
    phase_blind: bool,
}

/// A checkpoint brings its own whitener and detector settings (the ones it
/// was trained against); classical methods use the config's and a whitener
/// refitted on the training split.
fn resolve(cfg: &ExperimentConfig, target: &EvalTarget, ffts: &mut Ffts<f32>) -> Result<Resolved> {
    match target {
        EvalTarget::Method(Method::Nn) => Err(Error::invalid(
            "method",
            "evaluating a network needs a checkpoint; pass --checkpoint <file>",
        )),
        EvalTarget::Method(m) => Ok(Resolved {
            method: *m,
            model: None,
            whitener: fit_whitener(cfg, ffts)?,
            cfar: cfg.cfar,
            label: m.label().to_string(),
            slug: m.name().to_string(),
            phase_blind: false,
        }),
        EvalTarget::Checkpoint(path) => {
            let (ckpt, model) = restore(path)?;
            let objective = ckpt.meta.objective.clone();
            Ok(Resolved {
                method: Method::Nn,
                model: Some(model),
                whitener: ckpt.meta.whitener.clone(),
                cfar: ckpt.meta.cfar,
                label: format!("nn ({objective})"),
                slug: format!("nn-{objective}"),
                phase_blind: objective != "mse",
            })
        }
    }
}

/// Scores every sample of `split` under `target`. Truth masks come from
/// the discrete detector on whitened clean maps, predictions from the same
/// detector on the method's output map; both use the same whitener.
pub fn score_split(
    cfg: &ExperimentConfig,
    split: &str,
    target: &EvalTarget,
    ffts: &mut Ffts<f32>,
) -> Result<MethodScores> {
    let mut r = resolve(cfg, target, ffts)?;
    let (_, mut reader) = open_split(cfg, split)?;
    let n = reader.len();

    let mut per_sample = Vec::with_capacity(n);
    let mut stats = F1Stats::default();
    let mut magmse_sum = 0.0f64;
    let mut mse_sum = 0.0f64;
    for i in 0..n {
        let interfered = reader.read_interfered(i)?;
        let clean = reader.read_clean(i)?;
        let clean_map = whitened_map(&clean, &cfg.spectrum, &r.whitener, ffts)?;
        let truth = truth_mask(&clean_map, &r.cfar)?;

        let pred_map =
            method_output_map(r.method, &interfered, &r.whitener, cfg, r.model.as_mut(), ffts)?;
        let pred = binarize(&detect_discrete(&pred_map, &r.cfar)?, "evaluated detections")?;

        let s = f1_tolerant(&truth, &pred, cfg.tolerance)?;
        let sample_magmse = magmse(&clean_map, &pred_map)?.0;
        let sample_mse = if r.phase_blind {
            None
        } else {
            Some(mse(&clean_map, &pred_map)?.0)
        };
        stats.merge(&s);
        magmse_sum += sample_magmse;
        mse_sum += sample_mse.unwrap_or(0.0);
        per_sample.push(SampleScore {
            f1: s.f1(),
            magmse: sample_magmse,
            mse: sample_mse,
        });
    }

    let denom = n.max(1) as f64;
    Ok(MethodScores {
        label: r.label,
        slug: r.slug,
        per_sample,
        stats,
        mean_magmse: magmse_sum / denom,
        mean_mse: if r.phase_blind {
            None
        } else {
            Some(mse_sum / denom)
        },
    })
}

fn mse_cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.6e}"),
        None => "-".to_string(),
    }
}

/// Renders the per-sample CSV: a header, one row per sample, and one
/// `aggregate` row (micro F1 over summed confusion counts, mean errors).
pub fn scores_csv(scores: &MethodScores) -> String {
    let mut csv = String::from("sample,f1,magmse,mse\n");
    for (i, s) in scores.per_sample.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{:.6},{:.6e},{}\n",
            s.f1,
            s.magmse,
            mse_cell(s.mse)
        ));
    }
    csv.push_str(&format!(
        "aggregate,{:.6},{:.6e},{}\n",
        scores.f1(),
        scores.mean_magmse,
        mse_cell(scores.mean_mse)
    ));
    csv
}

pub struct EvalOutcome {
    pub scores: MethodScores,
    pub csv_path: PathBuf,
}

/// Evaluates `target` on `split` and writes the per-sample CSV, by default
/// to `<output_dir>/eval-<slug>-<split>.csv`.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    split: &str,
    target: &EvalTarget,
    out: Option<PathBuf>,
) -> Result<EvalOutcome> {
    cfg.validate()?;
    let mut ffts = Ffts::new();
    let scores = score_split(cfg, split, target, &mut ffts)?;

    let csv_path = out.unwrap_or_else(|| {
        cfg.output_dir
            .join(format!("eval-{}-{split}.csv", scores.slug))
    });
    if let Some(dir) = csv_path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&csv_path, scores_csv(&scores)).map_err(|e| Error::io(&csv_path, e))?;
    log::info!(
        "{} on {split}: F1 {:.4}, MAGMSE {:.4e} ({} samples)",
        scores.label,
        scores.f1(),
        scores.mean_magmse,
        scores.per_sample.len()
    );
    Ok(EvalOutcome { scores, csv_path })
}
