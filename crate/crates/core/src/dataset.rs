//! Dataset persistence: streams synthesized scenes into per-split cube
//! containers with JSON truth sidecars and a hashed manifest.
//!
//! One container per split, rank 5 `[samples, 2, fast_time, sweeps,
//! receivers]`; index 0 of the pair axis is the clean cube, index 1 the
//! interfered one. Scenes are generated and written one at a time, so peak
//! memory stays at a single scene regardless of split size.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::io::{sha256_file, CubeReader, CubeWriter};
use crate::synth::{
    derive_seed, sample_scene, InterfererParam, ObjectParam, RadarConfig, SceneDistribution,
};
use crate::{ComplexTensor, Error, Result};

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// Sample counts per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for DatasetSizes {
    fn default() -> Self {
        Self {
            train: 2500,
            val: 250,
            test: 250,
        }
    }
}

impl DatasetSizes {
    /// Small split sizes for CPU-budget runs.
    pub fn desk_scale() -> Self {
        Self {
            train: 200,
            val: 40,
            test: 40,
        }
    }

    pub fn of(&self, split: &str) -> Option<usize> {
        match split {
            "train" => Some(self.train),
            "val" => Some(self.val),
            "test" => Some(self.test),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train == 0 || self.val == 0 || self.test == 0 {
            return Err(Error::invalid("dataset sizes", "every split needs at least 1 sample"));
        }
        Ok(())
    }
}

/// Ground truth of one sample, stored in the sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleMeta {
    pub objects: Vec<ObjectParam>,
    pub interferers: Vec<InterfererParam>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitRecord {
    pub name: String,
    pub file: String,
    pub meta_file: String,
    pub samples: usize,
    pub sha256: String,
}

/// Top-level dataset description written as `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub radar: RadarConfig,
    pub distribution: SceneDistribution,
    pub master_seed: u64,
    pub splits: Vec<SplitRecord>,
}

impl Manifest {
    pub fn split(&self, name: &str) -> Option<&SplitRecord> {
        self.splits.iter().find(|s| s.name == name)
    }

    pub fn total_samples(&self) -> usize {
        self.splits.iter().map(|s| s.samples).sum()
    }
}

/// Disjoint per-sample seed streams; splits never share a scene.
fn sample_seed(master: u64, split_idx: usize, sample_idx: usize) -> u64 {
    derive_seed(master, ((split_idx as u64 + 1) << 40) + sample_idx as u64)
}

/// Generates and writes all three splits under `dir`. Returns the manifest,
/// which is also written to `dir/manifest.json`. Refuses to overwrite an
/// existing dataset unless `force`.
pub fn build_dataset(
    dir: impl AsRef<Path>,
    radar: &RadarConfig,
    dist: &SceneDistribution,
    sizes: &DatasetSizes,
    master_seed: u64,
    force: bool,
) -> Result<Manifest> {
    radar.validate()?;
    dist.validate(radar)?;
    sizes.validate()?;
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() && !force {
        return Err(Error::AlreadyExists {
            path: manifest_path,
        });
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let [ns, m, k] = radar.cube_dims();
    let mut splits = Vec::with_capacity(3);
    for (split_idx, name) in SPLIT_NAMES.iter().enumerate() {
        let n = sizes.of(name).expect("known split");
        let file = format!("{name}.rim");
        let meta_file = format!("{name}.meta.json");
        let mut writer = CubeWriter::create(dir.join(&file), &[n, 2, ns, m, k], true)?;
        let mut metas = Vec::with_capacity(n);
        for i in 0..n {
            let seed = sample_seed(master_seed, split_idx, i);
            let scene = sample_scene::<f32>(radar, dist, seed)?;
            writer.push_block(&scene.clean)?;
            writer.push_block(&scene.interfered)?;
            metas.push(SampleMeta {
                objects: scene.objects,
                interferers: scene.interferers,
                seed,
            });
        }
        let sha256 = writer.finish()?;
        let meta_path = dir.join(&meta_file);
        let json = serde_json::to_vec_pretty(&metas)?;
        std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;
        splits.push(SplitRecord {
            name: name.to_string(),
            file,
            meta_file,
            samples: n,
            sha256,
        });
    }

    let manifest = Manifest {
        radar: radar.clone(),
        distribution: dist.clone(),
        master_seed,
        splits,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let path = dir.as_ref().join("manifest.json");
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(&path, e.to_string()))
}

/// Random-access view of one split: paired cubes plus truth.
pub struct SplitReader {
    reader: CubeReader,
    metas: Vec<SampleMeta>,
    samples: usize,
}

impl SplitReader {
    pub fn open(dir: impl AsRef<Path>, manifest: &Manifest, split: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let record = manifest.split(split).ok_or_else(|| {
            Error::invalid("split", format!("manifest has no split named {split}"))
        })?;
        let reader = CubeReader::open(dir.join(&record.file))?;
        let dims = reader.dims().to_vec();
        let path: PathBuf = dir.join(&record.file);
        if dims.len() != 5 || dims[0] != record.samples || dims[1] != 2 {
            return Err(Error::format(
                &path,
                format!("expected [{}, 2, ...] split shape, got {dims:?}", record.samples),
            ));
        }
        let meta_path = dir.join(&record.meta_file);
        let bytes = std::fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let metas: Vec<SampleMeta> =
            serde_json::from_slice(&bytes).map_err(|e| Error::format(&meta_path, e.to_string()))?;
        if metas.len() != record.samples {
            return Err(Error::format(
                &meta_path,
                format!("{} truth entries for {} samples", metas.len(), record.samples),
            ));
        }
        Ok(Self {
            reader,
            metas,
            samples: record.samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    pub fn cube_dims(&self) -> [usize; 3] {
        self.reader.block_dims()
    }

    pub fn meta(&self, idx: usize) -> &SampleMeta {
        &self.metas[idx]
    }

    pub fn read_clean(&mut self, idx: usize) -> Result<ComplexTensor<f32>> {
        self.reader.read_block(2 * idx)
    }

    pub fn read_interfered(&mut self, idx: usize) -> Result<ComplexTensor<f32>> {
        self.reader.read_block(2 * idx + 1)
    }
}

/// Recomputes split file digests against the manifest.
pub fn verify_dataset(dir: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    let dir = dir.as_ref();
    for record in &manifest.splits {
        let path = dir.join(&record.file);
        let digest = sha256_file(&path)?;
        if digest != record.sha256 {
            return Err(Error::format(
                &path,
                format!("digest mismatch: manifest {}, file {digest}", record.sha256),
            ));
        }
    }
    Ok(())
}
