//! Batch application of a classical mitigation method to one split,
//! writing the mitigated cubes into a single container file.

use std::path::PathBuf;

use rim_core::fft::Ffts;
use rim_core::io::CubeWriter;
use rim_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::pipeline::{mitigate_cube, open_split, Method};

pub struct MitigateOutcome {
    pub path: PathBuf,
    pub sha256: String,
    pub samples: usize,
}

/// Mitigates every interfered cube of `split` with `method` and writes the
/// results as one rank-4 container (sample index plus cube dims), by
/// default to `<output_dir>/mitigated-<method>-<split>.rim`. Refuses to
/// overwrite without `force`. The network is not a time-domain transform
/// and is rejected here.
pub fn cmd_mitigate(
    cfg: &ExperimentConfig,
    split: &str,
    method: Method,
    out: Option<PathBuf>,
    force: bool,
) -> Result<MitigateOutcome> {
    cfg.validate()?;
    if method == Method::Nn {
        return Err(Error::invalid(
            "method",
            "nn operates on spectral maps; use evaluate with --checkpoint instead",
        ));
    }
    let (_, mut reader) = open_split(cfg, split)?;
    let n = reader.len();
    let [ns, m, k] = reader.cube_dims();

    let path = out.unwrap_or_else(|| {
        cfg.output_dir
            .join(format!("mitigated-{}-{split}.rim", method.name()))
    });
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut writer = CubeWriter::create(&path, &[n, ns, m, k], force)?;
    let mut ffts = Ffts::new();
    for i in 0..n {
        let interfered = reader.read_interfered(i)?;
        let mitigated = mitigate_cube(&interfered, method, &cfg.zeroing, &cfg.imat, &mut ffts)?;
        writer.push_block(&mitigated)?;
    }
    let sha256 = writer.finish()?;
    log::info!(
        "wrote {n} mitigated cubes ({}) to {}",
        method.name(),
        path.display()
    );
    Ok(MitigateOutcome {
        path,
        sha256,
        samples: n,
    })
}
