//! Text file formats, run configuration, checkpoints and manifests.

mod checkpoint;
mod config;
mod formats;
mod manifest;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use config::{AggregateConfig, RunConfig, SimulateConfig};
pub use formats::{
    format_ard, format_edge_list, format_ground_truth, format_node_list, format_subpop_map,
    parse_ard, parse_edge_list, parse_ground_truth, parse_node_list, parse_subpop_map,
};
pub use manifest::{sha256_hex, Manifest};

use std::path::Path;

use crate::error::{Error, Result};

/// Read a whole file, keeping the exact bytes for digests.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|_| Error::Data(format!("{}: not valid UTF-8", path.display())))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
