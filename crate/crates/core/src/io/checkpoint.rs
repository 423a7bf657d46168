//! Self-describing checkpoints: a text header (dimensions, digests, the
//! config text and RNG cursor) followed by little-endian f64 blocks for γ,
//! φ and B in row-major order.

use std::fmt::Write;

use super::manifest::sha256_hex;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::VariationalState;

pub const CHECKPOINT_MAGIC: &str = "ard-mmsb-checkpoint\t1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: VariationalState,
    /// Canonical config text the state was fitted under.
    pub config_text: String,
    pub seed: u64,
    /// Passes finished so far; partitions for the next pass are drawn from
    /// the (seed, completed_passes) stream.
    pub completed_passes: usize,
    /// Digest of the ARD file bytes.
    pub ard_digest: String,
}

pub fn write_checkpoint(c: &Checkpoint) -> Vec<u8> {
    let s = &c.state;
    let mut header = String::new();
    writeln!(header, "{CHECKPOINT_MAGIC}").unwrap();
    writeln!(header, "num_nodes\t{}", s.num_nodes()).unwrap();
    writeln!(header, "num_subpops\t{}", s.num_subpops()).unwrap();
    writeln!(header, "num_communities\t{}", s.num_communities()).unwrap();
    writeln!(header, "completed_passes\t{}", c.completed_passes).unwrap();
    writeln!(header, "rng_cursor\tseed={};next_pass={}", c.seed, c.completed_passes).unwrap();
    writeln!(header, "ard_digest\t{}", c.ard_digest).unwrap();
    writeln!(header, "config_digest\t{}", sha256_hex(c.config_text.as_bytes())).unwrap();
    writeln!(header, "config_bytes\t{}", c.config_text.len()).unwrap();
    let mut out = header.into_bytes();
    out.extend_from_slice(c.config_text.as_bytes());
    out.extend_from_slice(b"data\n");
    for m in [&s.gamma, &s.phi, &s.blockmatrix] {
        for x in m.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    source: &'a str,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl std::fmt::Display) -> Error {
        Error::Data(format!("{}: checkpoint byte {}: {message}", self.source, self.pos))
    }

    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| self.err("truncated header"))?;
        let text = std::str::from_utf8(&rest[..end]).map_err(|_| self.err("header is not UTF-8"))?;
        self.pos += end + 1;
        Ok(text)
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.line()?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix('\t'))
            .ok_or_else(|| self.err(format!("expected {key}, found {line:?}")))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.err(format!("cannot parse {key} {v:?}")))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(format!("expected {n} more bytes")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let raw = self.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}

pub fn read_checkpoint(bytes: &[u8], source: &str) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0, source };
    if r.line()? != CHECKPOINT_MAGIC {
        return Err(r.err("not a checkpoint file"));
    }
    let n: usize = r.number("num_nodes")?;
    let k: usize = r.number("num_subpops")?;
    let d: usize = r.number("num_communities")?;
    let completed_passes: usize = r.number("completed_passes")?;
    let cursor = r.field("rng_cursor")?;
    let seed = cursor
        .strip_prefix("seed=")
        .and_then(|c| c.split_once(";next_pass="))
        .filter(|(_, p)| p.parse::<usize>().ok() == Some(completed_passes))
        .and_then(|(s, _)| s.parse::<u64>().ok())
        .ok_or_else(|| r.err(format!("bad rng cursor {cursor:?}")))?;
    let ard_digest = r.field("ard_digest")?.to_string();
    let config_digest = r.field("config_digest")?.to_string();
    let len: usize = r.number("config_bytes")?;
    let config_text = std::str::from_utf8(r.take(len)?)
        .map_err(|_| r.err("config is not UTF-8"))?
        .to_string();
    if sha256_hex(config_text.as_bytes()) != config_digest {
        return Err(r.err("config digest does not match the embedded config"));
    }
    if r.line()? != "data" {
        return Err(r.err("expected data marker"));
    }
    let gamma = r.matrix(n, d)?;
    let phi = r.matrix(k, d)?;
    let blockmatrix = r.matrix(d, d)?;
    if r.pos != bytes.len() {
        return Err(r.err("trailing bytes"));
    }
    let state = VariationalState::new(gamma, phi, blockmatrix).map_err(|e| Error::Data(format!("{source}: {e}")))?;
    Ok(Checkpoint {
        state,
        config_text,
        seed,
        completed_passes,
        ard_digest,
    })
}
