//! Binary containers: cube files for datasets and checkpoint files for
//! trained models.
//!
//! Cube container: magic `RIMCUBE1`, little-endian header of `u32` rank,
//! `u32` dims, and a `u8` dtype tag (0 = complex64 as interleaved f32
//! re,im), then the row-major payload. Split files are rank 5,
//! `[samples, 2, fast_time, sweeps, receivers]`, with clean at index 0 and
//! interfered at index 1 of the second axis. Writers hash every byte as it
//! goes out, so dataset manifests get a digest for free.
//!
//! Checkpoint container: magic `RIMCKPT1` with a per-layer shape table, the
//! flat f32 trainables, batch norm running statistics, optional optimizer
//! moments, and a JSON metadata trailer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as _, Seek, SeekFrom, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cfar::CfarSpec;
use crate::cvnn::{AdamState, KernelMode, ModelSpec};
use crate::spectrum::Whitener;
use crate::{Complex, ComplexTensor, Error, Result};

const CUBE_MAGIC: &[u8; 8] = b"RIMCUBE1";
const CKPT_MAGIC: &[u8; 8] = b"RIMCKPT1";
const DTYPE_C64: u8 = 0;

/// Streaming writer of one cube container; hashes all bytes written.
pub struct CubeWriter {
    path: PathBuf,
    out: BufWriter<File>,
    hasher: Sha256,
    block_dims: [usize; 3],
    blocks_expected: u64,
    blocks_written: u64,
}

impl CubeWriter {
    /// Creates a container of shape `dims` whose trailing three axes form
    /// the per-block cube shape. Refuses existing paths unless `force`.
    pub fn create(path: impl AsRef<Path>, dims: &[usize], force: bool) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if path.exists() && !force {
            return Err(Error::AlreadyExists { path });
        }
        if dims.len() < 3 || dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid(
                "dims",
                format!("need rank >= 3 nonzero dims, got {dims:?}"),
            ));
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = Self {
            path,
            out: BufWriter::new(file),
            hasher: Sha256::new(),
            block_dims: [
                dims[dims.len() - 3],
                dims[dims.len() - 2],
                dims[dims.len() - 1],
            ],
            blocks_expected: dims[..dims.len() - 3].iter().product::<usize>() as u64,
            blocks_written: 0,
        };
        let mut header = Vec::with_capacity(8 + 4 + dims.len() * 4 + 1);
        header.extend_from_slice(CUBE_MAGIC);
        header.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for &d in dims {
            header.extend_from_slice(&(d as u32).to_le_bytes());
        }
        header.push(DTYPE_C64);
        w.write_hashed(&header)?;
        Ok(w)
    }

    fn write_hashed(&mut self, bytes: &[u8]) -> Result<()> {
        self.hasher.update(bytes);
        self.out
            .write_all(bytes)
            .map_err(|e| Error::io(&self.path, e))
    }

    /// Appends one rank-3 block in container order.
    pub fn push_block(&mut self, cube: &ComplexTensor<f32>) -> Result<()> {
        if cube.dims() != self.block_dims {
            return Err(Error::ShapeMismatch {
                context: "cube write",
                expected: self.block_dims.to_vec(),
                got: cube.dims().to_vec(),
            });
        }
        if self.blocks_written == self.blocks_expected {
            return Err(Error::format(
                &self.path,
                format!("container already holds all {} blocks", self.blocks_expected),
            ));
        }
        let mut buf = Vec::with_capacity(cube.len() * 8);
        for k in 0..cube.len() {
            buf.extend_from_slice(&cube.re()[k].to_le_bytes());
            buf.extend_from_slice(&cube.im()[k].to_le_bytes());
        }
        self.write_hashed(&buf)?;
        self.blocks_written += 1;
        Ok(())
    }

    /// Flushes and returns the hex digest of everything written. Errors if
    /// the block count does not match the header.
    pub fn finish(mut self) -> Result<String> {
        if self.blocks_written != self.blocks_expected {
            return Err(Error::format(
                &self.path,
                format!(
                    "container holds {} of {} blocks",
                    self.blocks_written, self.blocks_expected
                ),
            ));
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(hex(&self.hasher.finalize()))
    }
}

/// Random-access reader over a cube container.
pub struct CubeReader {
    path: PathBuf,
    file: BufReader<File>,
    dims: Vec<usize>,
    payload_offset: u64,
}

impl CubeReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut file = BufReader::new(file);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic).map_err(|e| Error::io(&path, e))?;
        if &magic != CUBE_MAGIC {
            return Err(Error::format(&path, "bad magic, not a cube container"));
        }
        let rank = read_u32(&mut file, &path)? as usize;
        if !(3..=8).contains(&rank) {
            return Err(Error::format(&path, format!("unreasonable rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            let d = read_u32(&mut file, &path)? as usize;
            if d == 0 {
                return Err(Error::format(&path, "zero dimension"));
            }
            dims.push(d);
        }
        let mut dtype = [0u8; 1];
        file.read_exact(&mut dtype).map_err(|e| Error::io(&path, e))?;
        if dtype[0] != DTYPE_C64 {
            return Err(Error::format(
                &path,
                format!("unsupported dtype tag {}", dtype[0]),
            ));
        }
        let payload_offset = (8 + 4 + rank * 4 + 1) as u64;
        Ok(Self {
            path,
            file,
            dims,
            payload_offset,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn block_dims(&self) -> [usize; 3] {
        let r = self.dims.len();
        [self.dims[r - 3], self.dims[r - 2], self.dims[r - 1]]
    }

    pub fn num_blocks(&self) -> usize {
        self.dims[..self.dims.len() - 3].iter().product()
    }

    /// Reads the rank-3 block at flat index `idx` over the leading axes.
    pub fn read_block(&mut self, idx: usize) -> Result<ComplexTensor<f32>> {
        if idx >= self.num_blocks() {
            return Err(Error::invalid(
                "block index",
                format!("index {idx} of {}", self.num_blocks()),
            ));
        }
        let bd = self.block_dims();
        let count = bd[0] * bd[1] * bd[2];
        let bytes = count as u64 * 8;
        self.file
            .seek(SeekFrom::Start(self.payload_offset + idx as u64 * bytes))
            .map_err(|e| Error::io(&self.path, e))?;
        let mut buf = vec![0u8; bytes as usize];
        self.file
            .read_exact(&mut buf)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut cube = ComplexTensor::zeros(bd);
        for k in 0..count {
            let re = f32::from_le_bytes(buf[8 * k..8 * k + 4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(buf[8 * k + 4..8 * k + 8].try_into().expect("4 bytes"));
            cube.set_flat(k, Complex::new(re, im));
        }
        Ok(cube)
    }
}

fn read_u32(r: &mut impl std::io::Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl std::io::Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u64::from_le_bytes(b))
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 hex digest of a whole file (manifest verification).
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io(path, e))?;
    Ok(hex(&hasher.finalize()))
}

/// Everything the training harness wants to remember alongside weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub epoch: usize,
    pub best_val_f1: f64,
    /// Objective name the model was trained with ("bce", "mse", "magmse").
    pub objective: String,
    pub seed: u64,
    pub whitener: Whitener,
    pub cfar: CfarSpec,
    /// Positive-class weight of the detection loss.
    pub alpha: f64,
}

/// A trained model on disk: spec, flat trainables, running statistics,
/// optionally the optimizer moments for resumption, and metadata.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub params: Vec<f32>,
    pub running: Vec<f32>,
    pub adam: Option<AdamState>,
    pub meta: CheckpointMeta,
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    ckpt.spec.validate()?;
    if ckpt.params.len() != ckpt.spec.param_count() {
        return Err(Error::ShapeMismatch {
            context: "checkpoint params",
            expected: vec![ckpt.spec.param_count()],
            got: vec![ckpt.params.len()],
        });
    }
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CKPT_MAGIC);

    // Layer table: count, then (cin, cout, k0, k1, k2, mode) per layer.
    let spec = &ckpt.spec;
    buf.extend_from_slice(&(spec.num_layers() as u32).to_le_bytes());
    for l in 0..spec.num_layers() {
        buf.extend_from_slice(&(spec.channels[l] as u32).to_le_bytes());
        buf.extend_from_slice(&(spec.channels[l + 1] as u32).to_le_bytes());
        for &k in &spec.kernel_extent {
            buf.extend_from_slice(&(k as u32).to_le_bytes());
        }
        buf.push(match spec.mode {
            KernelMode::Generic => 0,
            KernelMode::Separable => 1,
        });
    }

    buf.extend_from_slice(&(ckpt.params.len() as u32).to_le_bytes());
    for &p in &ckpt.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    buf.extend_from_slice(&(ckpt.running.len() as u32).to_le_bytes());
    for &p in &ckpt.running {
        buf.extend_from_slice(&p.to_le_bytes());
    }

    match &ckpt.adam {
        None => buf.push(0),
        Some(state) => {
            if state.m.len() != ckpt.params.len() || state.v.len() != ckpt.params.len() {
                return Err(Error::ShapeMismatch {
                    context: "checkpoint optimizer state",
                    expected: vec![ckpt.params.len()],
                    got: vec![state.m.len(), state.v.len()],
                });
            }
            buf.push(1);
            buf.extend_from_slice(&state.step.to_le_bytes());
            for &m in &state.m {
                buf.extend_from_slice(&m.to_le_bytes());
            }
            for &v in &state.v {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }

    let meta = serde_json::to_vec(&ckpt.meta)?;
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta);

    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != CKPT_MAGIC {
        return Err(Error::format(path, "bad magic, not a checkpoint"));
    }

    let num_layers = read_u32(&mut r, path)? as usize;
    if num_layers == 0 || num_layers > 64 {
        return Err(Error::format(path, format!("unreasonable layer count {num_layers}")));
    }
    let mut channels: Vec<usize> = Vec::with_capacity(num_layers + 1);
    let mut extent = [0usize; 3];
    let mut mode = KernelMode::Generic;
    for l in 0..num_layers {
        let cin = read_u32(&mut r, path)? as usize;
        let cout = read_u32(&mut r, path)? as usize;
        let mut k = [0usize; 3];
        for v in k.iter_mut() {
            *v = read_u32(&mut r, path)? as usize;
        }
        let mut mb = [0u8; 1];
        r.read_exact(&mut mb).map_err(|e| Error::io(path, e))?;
        let m = match mb[0] {
            0 => KernelMode::Generic,
            1 => KernelMode::Separable,
            t => return Err(Error::format(path, format!("unknown kernel mode tag {t}"))),
        };
        if l == 0 {
            channels.push(cin);
            extent = k;
            mode = m;
        } else if channels[l] != cin || extent != k || mode != m {
            return Err(Error::format(path, "inconsistent layer table"));
        }
        channels.push(cout);
    }
    let spec = ModelSpec {
        kernel_extent: extent,
        mode,
        channels,
    };
    spec.validate()
        .map_err(|e| Error::format(path, format!("invalid model spec: {e}")))?;

    let n_params = read_u32(&mut r, path)? as usize;
    if n_params != spec.param_count() {
        return Err(Error::format(
            path,
            format!(
                "parameter count {n_params} does not match spec ({})",
                spec.param_count()
            ),
        ));
    }
    let mut params = vec![0f32; n_params];
    read_f32s(&mut r, path, &mut params)?;
    let n_running = read_u32(&mut r, path)? as usize;
    let mut running = vec![0f32; n_running];
    read_f32s(&mut r, path, &mut running)?;

    let mut flag = [0u8; 1];
    r.read_exact(&mut flag).map_err(|e| Error::io(path, e))?;
    let adam = match flag[0] {
        0 => None,
        1 => {
            let step = read_u64(&mut r, path)?;
            let mut m = vec![0f64; n_params];
            let mut v = vec![0f64; n_params];
            read_f64s(&mut r, path, &mut m)?;
            read_f64s(&mut r, path, &mut v)?;
            Some(AdamState { m, v, step })
        }
        t => return Err(Error::format(path, format!("bad optimizer flag {t}"))),
    };

    let meta_len = read_u32(&mut r, path)? as usize;
    let mut meta_bytes = vec![0u8; meta_len];
    r.read_exact(&mut meta_bytes).map_err(|e| Error::io(path, e))?;
    let meta: CheckpointMeta = serde_json::from_slice(&meta_bytes)
        .map_err(|e| Error::format(path, format!("metadata: {e}")))?;

    Ok(Checkpoint {
        spec,
        params,
        running,
        adam,
        meta,
    })
}

fn read_f32s(r: &mut impl std::io::Read, path: &Path, out: &mut [f32]) -> Result<()> {
    let mut buf = vec![0u8; out.len() * 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f32::from_le_bytes(buf[4 * i..4 * i + 4].try_into().expect("4 bytes"));
    }
    Ok(())
}

fn read_f64s(r: &mut impl std::io::Read, path: &Path, out: &mut [f64]) -> Result<()> {
    let mut buf = vec![0u8; out.len() * 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f64::from_le_bytes(buf[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    }
    Ok(())
}
