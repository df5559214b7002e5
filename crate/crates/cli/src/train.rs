//! Minibatch training with early stopping on validation F1.
//!
//! The BCE objective routes gradients through the relaxed detector into the
//! network; the regression objectives compare network output maps against
//! whitened clean maps directly. Validation after every epoch runs the
//! discrete detector (the deployment condition) and scores tolerant F1
//! against the clean-map truth; the best checkpoint is kept and training
//! stops after `patience` epochs without improvement.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rim_core::cfar::{backward_from_cache, detect_discrete, detect_relaxed_cached};
use rim_core::cvnn::{adam_step, AdamState, Model, Phase};
use rim_core::fft::Ffts;
use rim_core::io::{save_checkpoint, Checkpoint, CheckpointMeta};
use rim_core::loss::{bce, magmse, mse};
use rim_core::metrics::{binarize, f1_tolerant, F1Stats};
use rim_core::spectrum::Whitener;
use rim_core::synth::derive_seed;
use rim_core::{BoolTensor, ComplexTensor, Error, RealTensor, Result};

use crate::config::{ExperimentConfig, Objective};
use crate::pipeline::{fit_whitener, open_split, relaxed_target, truth_mask, whitened_map};

/// One epoch of the training trajectory. Epoch 0 is the untrained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean objective over the epoch's samples; absent at epoch 0.
    pub train_loss: Option<f64>,
    pub val_f1: f64,
}

/// Full trajectory plus the outcome, written alongside the checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub objective: String,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub stopped_early: bool,
}

impl RunRecord {
    /// The recorded best must be the maximum of the trajectory.
    pub fn check(&self) -> Result<()> {
        let max = self
            .epochs
            .iter()
            .map(|e| e.val_f1)
            .fold(f64::NEG_INFINITY, f64::max);
        if (self.best_val_f1 - max).abs() > 1e-12 {
            return Err(Error::invalid(
                "run record",
                format!("best {} is not the trajectory max {}", self.best_val_f1, max),
            ));
        }
        Ok(())
    }
}

/// In-memory split: network inputs plus per-objective targets.
struct PreparedSplit {
    inputs: Vec<ComplexTensor<f32>>,
    /// Soft detector outputs on clean maps (BCE only).
    soft_targets: Vec<RealTensor<f32>>,
    /// Whitened clean maps (regression objectives only).
    references: Vec<ComplexTensor<f32>>,
    truth: Vec<BoolTensor>,
}

fn prepare_split(
    cfg: &ExperimentConfig,
    split: &str,
    whitener: &Whitener,
    ffts: &mut Ffts<f32>,
    want_truth: bool,
) -> Result<PreparedSplit> {
    let (_, mut reader) = open_split(cfg, split)?;
    let n = reader.len();
    let mut out = PreparedSplit {
        inputs: Vec::with_capacity(n),
        soft_targets: Vec::new(),
        references: Vec::new(),
        truth: Vec::new(),
    };
    for i in 0..n {
        let interfered = reader.read_interfered(i)?;
        out.inputs
            .push(whitened_map(&interfered, &cfg.spectrum, whitener, ffts)?);
        let clean = reader.read_clean(i)?;
        let clean_map = whitened_map(&clean, &cfg.spectrum, whitener, ffts)?;
        match cfg.objective {
            Objective::Bce => out
                .soft_targets
                .push(relaxed_target(&clean_map, &cfg.cfar)?),
            Objective::Mse | Objective::Magmse => out.references.push(clean_map.clone()),
        }
        if want_truth {
            out.truth.push(truth_mask(&clean_map, &cfg.cfar)?);
        }
    }
    Ok(out)
}

/// Validation F1 with the discrete detector on eval-mode outputs, micro
/// aggregated over the split.
fn validation_f1(
    model: &mut Model<f32>,
    cfg: &ExperimentConfig,
    val: &PreparedSplit,
) -> Result<f64> {
    let mut stats = F1Stats::default();
    for (i, chunk) in val.inputs.chunks(cfg.batch_size).enumerate() {
        let outs = model.forward(chunk, Phase::Eval)?;
        for (j, out) in outs.iter().enumerate() {
            let hard = detect_discrete(out, &cfg.cfar)?;
            let pred = binarize(&hard, "validation detections")?;
            let truth = &val.truth[i * cfg.batch_size + j];
            stats.merge(&f1_tolerant(truth, &pred, cfg.tolerance)?);
        }
    }
    Ok(stats.f1())
}

/// Batch loss and per-sample output gradients for the configured objective.
/// Upstream gradients are scaled by 1/batch so the step optimizes the mean.
fn batch_loss_and_grads(
    cfg: &ExperimentConfig,
    train: &PreparedSplit,
    batch_ids: &[usize],
    outs: &[ComplexTensor<f32>],
) -> Result<(f64, Vec<ComplexTensor<f32>>)> {
    let inv_b = 1.0 / batch_ids.len() as f64;
    let mut loss_sum = 0.0f64;
    let mut gouts = Vec::with_capacity(batch_ids.len());
    for (j, &id) in batch_ids.iter().enumerate() {
        match cfg.objective {
            Objective::Bce => {
                let (relaxed, cache) = detect_relaxed_cached(&outs[j], &cfg.cfar)?;
                let (l, mut g) = bce(&train.soft_targets[id], &relaxed, cfg.alpha)?;
                loss_sum += l;
                for v in g.data_mut() {
                    *v *= inv_b as f32;
                }
                gouts.push(backward_from_cache(&outs[j], &cfg.cfar, &cache, &g)?);
            }
            Objective::Mse => {
                let (l, mut g) = mse(&train.references[id], &outs[j])?;
                loss_sum += l;
                g.scale(inv_b as f32);
                gouts.push(g);
            }
            Objective::Magmse => {
                let (l, mut g) = magmse(&train.references[id], &outs[j])?;
                loss_sum += l;
                g.scale(inv_b as f32);
                gouts.push(g);
            }
        }
    }
    Ok((loss_sum * inv_b, gouts))
}

pub struct TrainOutcome {
    pub record: RunRecord,
    pub checkpoint_path: std::path::PathBuf,
}

/// Trains per the config and writes the best checkpoint and the run record
/// under the output directory. Deterministic in (config, seed).
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut ffts = Ffts::new();

    log::info!("fitting whitener on the training split");
    let whitener = fit_whitener(cfg, &mut ffts)?;
    let train = prepare_split(cfg, "train", &whitener, &mut ffts, false)?;
    let val = prepare_split(cfg, "val", &whitener, &mut ffts, true)?;
    let n_train = train.inputs.len();

    let mut model: Model<f32> = Model::init(cfg.model.clone(), derive_seed(cfg.seed, 0x4D4F_4445))?;
    let mut params = model.flat_params();
    let mut adam = AdamState::new(params.len());

    let ckpt_path = cfg.checkpoint_path();
    let save_best = |model: &Model<f32>,
                     adam: &AdamState,
                     epoch: usize,
                     best: f64|
     -> Result<()> {
        let ckpt = Checkpoint {
            spec: model.spec().clone(),
            params: model.flat_params(),
            running: model.running_stats(),
            adam: Some(adam.clone()),
            meta: CheckpointMeta {
                epoch,
                best_val_f1: best,
                objective: cfg.objective.name().to_string(),
                seed: cfg.seed,
                whitener: whitener.clone(),
                cfar: cfg.cfar,
                alpha: cfg.alpha,
            },
        };
        save_checkpoint(&ckpt_path, &ckpt)
    };

    // Epoch 0: the untrained model, so an aborted run still has a
    // checkpoint and the record starts from a defined baseline.
    let mut best = validation_f1(&mut model, cfg, &val)?;
    let mut best_epoch = 0usize;
    save_best(&model, &adam, 0, best)?;
    let mut record = RunRecord {
        objective: cfg.objective.name().to_string(),
        seed: cfg.seed,
        epochs: vec![EpochRecord {
            epoch: 0,
            train_loss: None,
            val_f1: best,
        }],
        best_epoch: 0,
        best_val_f1: best,
        stopped_early: false,
    };
    log::info!("epoch 0 (untrained): val F1 {best:.4}");

    let mut since_best = 0usize;
    let mut ids: Vec<usize> = (0..n_train).collect();
    for epoch in 1..=cfg.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x5348_0000 + epoch as u64));
        ids.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        for batch_ids in ids.chunks(cfg.batch_size) {
            let batch: Vec<ComplexTensor<f32>> = batch_ids
                .iter()
                .map(|&id| train.inputs[id].clone())
                .collect();
            let outs = model.forward(&batch, Phase::Train)?;
            let (loss, gouts) = batch_loss_and_grads(cfg, &train, batch_ids, &outs)?;
            if !loss.is_finite() {
                let path = cfg.run_record_path();
                let json = serde_json::to_vec_pretty(&record)?;
                std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
                log::error!("non-finite loss at epoch {epoch}; best checkpoint retained");
                return Err(Error::NonFinite {
                    what: "loss",
                    step: adam.step + 1,
                });
            }
            let (grads, _) = model.backward(&gouts)?;
            adam_step(&mut params, &grads.flatten(), &mut adam, &cfg.adam)?;
            model.set_flat_params(&params)?;
            loss_sum += loss;
            batches += 1;
        }
        let train_loss = loss_sum / batches as f64;

        let val_f1 = validation_f1(&mut model, cfg, &val)?;
        record.epochs.push(EpochRecord {
            epoch,
            train_loss: Some(train_loss),
            val_f1,
        });
        log::info!("epoch {epoch}: loss {train_loss:.6}, val F1 {val_f1:.4}");

        if val_f1 > best {
            best = val_f1;
            best_epoch = epoch;
            since_best = 0;
            save_best(&model, &adam, epoch, best)?;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                record.stopped_early = true;
                log::info!("no improvement for {} epochs; stopping", cfg.patience);
                break;
            }
        }
    }

    record.best_epoch = best_epoch;
    record.best_val_f1 = best;
    record.check()?;
    let path = cfg.run_record_path();
    let json = serde_json::to_vec_pretty(&record)?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;

    Ok(TrainOutcome {
        record,
        checkpoint_path: ckpt_path,
    })
}
