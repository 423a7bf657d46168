//! Run manifests: command, tool version, seed, input digests, the config
//! snapshot and timing.

use std::fmt::Write;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// (label, path, sha256 of the exact bytes read)
    pub inputs: Vec<(String, String, String)>,
    pub config_text: String,
    pub started_unix: u64,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_text: &str) -> Self {
        let started_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: Vec::new(),
            config_text: config_text.to_string(),
            started_unix,
        }
    }

    pub fn add_input(&mut self, label: &str, path: &str, bytes: &[u8]) {
        self.inputs.push((label.to_string(), path.to_string(), sha256_hex(bytes)));
    }

    /// Manifest text; the config snapshot goes last so it can be copied out
    /// verbatim.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        writeln!(o, "command\t{}", self.command).unwrap();
        writeln!(o, "tool_version\t{}", self.tool_version).unwrap();
        writeln!(o, "seed\t{}", self.seed).unwrap();
        writeln!(o, "started_unix\t{}", self.started_unix).unwrap();
        for (label, path, digest) in &self.inputs {
            writeln!(o, "input\t{label}\t{path}\t{digest}").unwrap();
        }
        writeln!(o, "config_digest\t{}", sha256_hex(self.config_text.as_bytes())).unwrap();
        writeln!(o, "config_bytes\t{}", self.config_text.len()).unwrap();
        o.push_str(&self.config_text);
        o
    }

    /// Line appended once the command finishes.
    pub fn timing_line(elapsed: std::time::Duration) -> String {
        format!("elapsed_seconds\t{:.3}\n", elapsed.as_secs_f64())
    }
}
