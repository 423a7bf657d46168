use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ardmmsb::io::{self, Manifest, RunConfig};
use ardmmsb::{Error, Result};

use crate::args::GlobalArgs;

/// Effective configuration plus the raw bytes it came from.
pub struct Context {
    pub config: RunConfig,
    /// Exact config file text; empty when running on defaults.
    pub config_text: String,
    pub config_path: Option<PathBuf>,
    pub out: PathBuf,
    overrides: GlobalArgs,
}

impl Context {
    pub fn load(global: &GlobalArgs) -> Result<Self> {
        let (config_text, base) = match &global.config {
            Some(path) => {
                let text = io::read_text(path)?;
                let parsed = RunConfig::parse(&text, &path.display().to_string())?;
                (text, parsed)
            }
            None => (String::new(), RunConfig::default()),
        };
        let mut ctx = Context {
            config: base,
            config_text,
            config_path: global.config.clone(),
            out: global.out.clone(),
            overrides: global.clone(),
        };
        ctx.apply_overrides();
        Ok(ctx)
    }

    /// Swap in a config (e.g. from a checkpoint) and reapply flag overrides.
    pub fn replace_config(&mut self, config: RunConfig) {
        self.config = config;
        self.apply_overrides();
    }

    fn apply_overrides(&mut self) {
        let g = &self.overrides;
        if let Some(seed) = g.seed {
            self.config.seed = seed;
        }
        if let Some(p) = g.parallelism {
            self.config.parallelism = p;
        }
        if let Some(p) = g.passes {
            self.config.num_passes = p;
        }
        if let Some(t) = g.tol {
            self.config.elbo_tol = t;
        }
    }

    /// Config text stored in checkpoints. The thread count is reset so that
    /// runs with different parallelism produce identical files.
    pub fn checkpoint_config_text(&self) -> String {
        let mut c = self.config.clone();
        c.parallelism = RunConfig::default().parallelism;
        c.to_text()
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Create the output directory and write the manifest and effective
    /// config before any results.
    pub fn start(&self, command: &str, inputs: &[(&str, &Path, &[u8])]) -> Result<Run> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        let mut manifest = Manifest::new(command, self.config.seed, &self.config_text);
        if let Some(path) = &self.config_path {
            manifest.add_input("config", &path.display().to_string(), self.config_text.as_bytes());
        }
        for (label, path, bytes) in inputs {
            manifest.add_input(label, &path.display().to_string(), bytes);
        }
        let manifest_path = self.path("manifest.txt");
        io::write_file(&manifest_path, manifest.to_text())?;
        io::write_file(&self.path("effective.cfg"), self.config.to_text())?;
        Ok(Run {
            manifest_path,
            started: Instant::now(),
        })
    }
}

pub struct Run {
    manifest_path: PathBuf,
    started: Instant,
}

impl Run {
    pub fn finish(self) -> Result<()> {
        let io_err = |e| Error::Io {
            path: self.manifest_path.clone(),
            source: e,
        };
        let mut f = OpenOptions::new().append(true).open(&self.manifest_path).map_err(io_err)?;
        f.write_all(Manifest::timing_line(self.started.elapsed()).as_bytes())
            .map_err(io_err)
    }
}

/// Read a file, returning both bytes (for digests) and UTF-8 text.
pub fn read_input(path: &Path) -> Result<(Vec<u8>, String)> {
    let bytes = io::read_bytes(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Data(format!("{}: not valid UTF-8", path.display())))?;
    Ok((bytes, text))
}

pub fn source(path: &Path) -> String {
    path.display().to_string()
}
