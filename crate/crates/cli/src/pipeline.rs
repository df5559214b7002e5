//! Shared plumbing between the commands: cube-to-map processing, whitener
//! fitting, target construction, mitigation dispatch, and checkpoint
//! restoration.
//!
//! Every map that reaches the detector, a loss, or a metric lives in the
//! same whitened spectral space. The whitener is fitted once on the
//! interfered maps of the training split; clean references, detection
//! targets, truth masks, and mitigated maps all pass through that one
//! transform, so CFAR decisions and scores are comparable across methods.

use std::path::Path;

use rim_core::baselines::{imat, ramp_filter, zeroing, ImatSpec, ZeroingSpec};
use rim_core::cfar::{detect_discrete, detect_relaxed, CfarSpec};
use rim_core::cvnn::{Model, Phase};
use rim_core::dataset::{load_manifest, Manifest, SplitReader};
use rim_core::fft::Ffts;
use rim_core::io::Checkpoint;
use rim_core::metrics::binarize;
use rim_core::spectrum::{rda_transform, SpectrumConfig, Whitener, WhitenerFit};
use rim_core::{BoolTensor, ComplexTensor, Error, RealTensor, Result};

use crate::config::ExperimentConfig;

/// Mitigation method selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Interfered data passed through untouched.
    None,
    Zeroing,
    Imat,
    Ramp,
    /// Trained network applied to the whitened map.
    Nn,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Method::None),
            "zeroing" => Ok(Method::Zeroing),
            "imat" => Ok(Method::Imat),
            "ramp" => Ok(Method::Ramp),
            "nn" => Ok(Method::Nn),
            other => Err(Error::invalid(
                "method",
                format!("unknown method {other:?}, expected none|zeroing|imat|ramp|nn"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Zeroing => "zeroing",
            Method::Imat => "imat",
            Method::Ramp => "ramp",
            Method::Nn => "nn",
        }
    }

    /// Human-readable row label for reports. The ramp filter is a
    /// magnitude-only approximation of the published variant, and says so.
    pub fn label(&self) -> &'static str {
        match self {
            Method::None => "no mitigation",
            Method::Zeroing => "zeroing",
            Method::Imat => "IMAT",
            Method::Ramp => "ramp filter (approx.)",
            Method::Nn => "nn",
        }
    }
}

/// Opens the dataset described by the config and checks it against the
/// manifest geometry.
pub fn open_split(cfg: &ExperimentConfig, split: &str) -> Result<(Manifest, SplitReader)> {
    let manifest = load_manifest(&cfg.dataset_dir)?;
    let reader = SplitReader::open(&cfg.dataset_dir, &manifest, split)?;
    let dims = reader.cube_dims();
    if dims != cfg.radar.cube_dims() {
        return Err(Error::ShapeMismatch {
            context: "dataset cube dims",
            expected: cfg.radar.cube_dims().to_vec(),
            got: dims.to_vec(),
        });
    }
    Ok((manifest, reader))
}

/// Fits the global whitener on the interfered maps of the training split,
/// streaming one sample at a time.
pub fn fit_whitener(cfg: &ExperimentConfig, ffts: &mut Ffts<f32>) -> Result<Whitener> {
    let (_, mut reader) = open_split(cfg, "train")?;
    let mut acc = WhitenerFit::new();
    for i in 0..reader.len() {
        let cube = reader.read_interfered(i)?;
        let map = rda_transform(&cube, &cfg.spectrum, ffts)?;
        acc.add(&map);
    }
    acc.finish()
}

/// Cube to whitened range/Doppler/angle map.
pub fn whitened_map(
    cube: &ComplexTensor<f32>,
    spectrum: &SpectrumConfig,
    whitener: &Whitener,
    ffts: &mut Ffts<f32>,
) -> Result<ComplexTensor<f32>> {
    let mut map = rda_transform(cube, spectrum, ffts)?;
    whitener.apply(&mut map);
    Ok(map)
}

/// Soft detection target for the BCE objective: the relaxed detector run on
/// the whitened clean map. Thresholding this at 0.5 reproduces the discrete
/// truth mask exactly.
pub fn relaxed_target(
    whitened_clean: &ComplexTensor<f32>,
    cfar: &CfarSpec,
) -> Result<RealTensor<f32>> {
    detect_relaxed(whitened_clean, cfar)
}

/// Binary truth mask: the discrete detector run on the whitened clean map.
pub fn truth_mask(whitened_clean: &ComplexTensor<f32>, cfar: &CfarSpec) -> Result<BoolTensor> {
    let hard = detect_discrete(whitened_clean, cfar)?;
    binarize(&hard, "clean-map truth")
}

/// Applies a classical method in the time domain. `Nn` is not a cube
/// transform (the network lives in map space) and is rejected here.
pub fn mitigate_cube(
    cube: &ComplexTensor<f32>,
    method: Method,
    zeroing_spec: &ZeroingSpec,
    imat_spec: &ImatSpec,
    ffts: &mut Ffts<f32>,
) -> Result<ComplexTensor<f32>> {
    match method {
        Method::None => Ok(cube.clone()),
        Method::Zeroing => Ok(zeroing(cube, zeroing_spec)?.0),
        Method::Imat => {
            let (zeroed, mask) = zeroing(cube, zeroing_spec)?;
            imat(&zeroed, &mask, imat_spec, ffts)
        }
        Method::Ramp => ramp_filter(cube, ffts),
        Method::Nn => Err(Error::invalid(
            "method",
            "nn operates on spectral maps; restore a checkpoint and evaluate instead",
        )),
    }
}

/// Rebuilds a model from a checkpoint: spec, trainables, running stats.
pub fn model_from_checkpoint(ckpt: &Checkpoint) -> Result<Model<f32>> {
    let mut model = Model::init(ckpt.spec.clone(), 0)?;
    model.set_flat_params(&ckpt.params)?;
    model.set_running_stats(&ckpt.running)?;
    Ok(model)
}

/// Runs the network in evaluation mode over maps, chunked to keep memory
/// bounded; returns one output map per input.
pub fn forward_eval(
    model: &mut Model<f32>,
    inputs: &[ComplexTensor<f32>],
    chunk: usize,
) -> Result<Vec<ComplexTensor<f32>>> {
    let mut out = Vec::with_capacity(inputs.len());
    for batch in inputs.chunks(chunk.max(1)) {
        out.extend(model.forward(batch, Phase::Eval)?);
    }
    Ok(out)
}

/// The prediction map a method produces for one sample, in whitened space.
#[allow(clippy::too_many_arguments)]
pub fn method_output_map(
    method: Method,
    interfered: &ComplexTensor<f32>,
    whitener: &Whitener,
    cfg: &ExperimentConfig,
    model: Option<&mut Model<f32>>,
    ffts: &mut Ffts<f32>,
) -> Result<ComplexTensor<f32>> {
    match method {
        Method::Nn => {
            let model = model.ok_or_else(|| {
                Error::invalid("checkpoint", "method nn requires a restored model")
            })?;
            let input = whitened_map(interfered, &cfg.spectrum, whitener, ffts)?;
            let mut out = model.forward(std::slice::from_ref(&input), Phase::Eval)?;
            Ok(out.pop().expect("one output per input"))
        }
        _ => {
            let mitigated = mitigate_cube(interfered, method, &cfg.zeroing, &cfg.imat, ffts)?;
            whitened_map(&mitigated, &cfg.spectrum, whitener, ffts)
        }
    }
}

/// Loads a checkpoint and restores both the model and the whitener it was
/// trained with.
pub fn restore(path: impl AsRef<Path>) -> Result<(Checkpoint, Model<f32>)> {
    let ckpt = rim_core::io::load_checkpoint(path)?;
    let model = model_from_checkpoint(&ckpt)?;
    Ok((ckpt, model))
}
