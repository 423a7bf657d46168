//! Flat `key = value` run configuration with `[section]` headers.
//!
//! Keys before the first section belong to the run itself (currently just
//! `seed`). Unknown sections and keys are rejected with their line number.
//! Missing keys keep their defaults.

use std::fmt::Write;

use crate::engine::{FitConfig, InitConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::Priors;
use crate::sim::{diagonal_blockmatrix, SubpopulationDesign};

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateConfig {
    pub num_subpops: usize,
    pub members_per_subpop: usize,
    pub member_concentration: f64,
    /// One value (repeated D times) or D values.
    pub centers_alpha: Vec<f64>,
    /// Blockmatrix diagonal; its length fixes D.
    pub diagonal: Vec<f64>,
    pub off_diagonal: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let six = SubpopulationDesign::six_community(40, 50);
        SimulateConfig {
            num_subpops: six.num_subpops,
            members_per_subpop: six.members_per_subpop,
            member_concentration: six.member_concentration,
            centers_alpha: vec![six.centers_alpha[0]],
            diagonal: (0..6).map(|m| six.blockmatrix[(m, m)]).collect(),
            off_diagonal: six.blockmatrix[(0, 1)],
        }
    }
}

impl SimulateConfig {
    pub fn design(&self) -> Result<SubpopulationDesign> {
        let d = self.diagonal.len();
        let centers_alpha = expand(&self.centers_alpha, d, "simulate.centers_alpha")?;
        Ok(SubpopulationDesign {
            num_subpops: self.num_subpops,
            members_per_subpop: self.members_per_subpop,
            member_concentration: self.member_concentration,
            centers_alpha,
            blockmatrix: diagonal_blockmatrix(&self.diagonal, self.off_diagonal),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateConfig {
    /// Number of nodes sampled as ARD rows.
    pub sample_size: usize,
}

impl Default for AggregateConfig {
    fn default() -> Self {
        AggregateConfig { sample_size: 500 }
    }
}

/// Everything a run reads from its config file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub simulate: SimulateConfig,
    pub aggregate: AggregateConfig,
    pub num_communities: usize,
    /// One value (repeated D times) or D values.
    pub alpha: Vec<f64>,
    pub beta_a: f64,
    pub beta_b: f64,
    pub elbo_tol: f64,
    pub max_inner_iters: usize,
    pub step_halving_floor: f64,
    pub num_passes: usize,
    pub minibatch_size: usize,
    pub subpops_per_minibatch: Option<usize>,
    pub parallelism: usize,
    pub audit_steps: bool,
    pub init: InitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::new(6);
        RunConfig {
            seed: 0,
            simulate: SimulateConfig::default(),
            aggregate: AggregateConfig::default(),
            num_communities: fit.num_communities,
            alpha: vec![1.0],
            beta_a: 1.0,
            beta_b: 1.0,
            elbo_tol: fit.elbo_tol,
            max_inner_iters: fit.max_inner_iters,
            step_halving_floor: fit.step_halving_floor,
            num_passes: fit.num_passes,
            minibatch_size: fit.minibatch_size,
            subpops_per_minibatch: fit.subpops_per_minibatch,
            parallelism: fit.parallelism,
            audit_steps: fit.audit_steps,
            init: fit.init,
        }
    }
}

fn expand(values: &[f64], d: usize, key: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; d]),
        n if n == d => Ok(values.to_vec()),
        n => Err(Error::Config(format!("{key} has {n} values, expected 1 or {d}"))),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

struct Line<'a> {
    source: &'a str,
    number: usize,
}

impl Line<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::ConfigLine {
            path: self.source.to_string(),
            line: self.number,
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| self.err(format!("cannot parse {value:?} for {key}")))
    }

    fn list(&self, key: &str, value: &str) -> Result<Vec<f64>> {
        let out: Vec<f64> = value
            .split(',')
            .map(|v| self.parse(key, v.trim()))
            .collect::<Result<_>>()?;
        if out.is_empty() {
            return Err(self.err(format!("{key} needs at least one value")));
        }
        Ok(out)
    }

    fn flag(&self, key: &str, value: &str) -> Result<bool> {
        match value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.err(format!("{key} must be true or false, got {value:?}"))),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut section = String::new();
        for (j, raw) in text.lines().enumerate() {
            let line = Line { source, number: j + 1 };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !matches!(name, "simulate" | "aggregate" | "fit" | "init") {
                    return Err(line.err(format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| line.err(format!("expected key = value, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match (section.as_str(), key) {
                ("", "seed") => c.seed = line.parse(key, value)?,
                ("simulate", "num_subpops") => c.simulate.num_subpops = line.parse(key, value)?,
                ("simulate", "members_per_subpop") => c.simulate.members_per_subpop = line.parse(key, value)?,
                ("simulate", "member_concentration") => {
                    c.simulate.member_concentration = line.parse(key, value)?
                }
                ("simulate", "centers_alpha") => c.simulate.centers_alpha = line.list(key, value)?,
                ("simulate", "diagonal") => c.simulate.diagonal = line.list(key, value)?,
                ("simulate", "off_diagonal") => c.simulate.off_diagonal = line.parse(key, value)?,
                ("aggregate", "sample_size") => c.aggregate.sample_size = line.parse(key, value)?,
                ("fit", "num_communities") => c.num_communities = line.parse(key, value)?,
                ("fit", "alpha") => c.alpha = line.list(key, value)?,
                ("fit", "beta_a") => c.beta_a = line.parse(key, value)?,
                ("fit", "beta_b") => c.beta_b = line.parse(key, value)?,
                ("fit", "elbo_tol") => c.elbo_tol = line.parse(key, value)?,
                ("fit", "max_inner_iters") => c.max_inner_iters = line.parse(key, value)?,
                ("fit", "step_halving_floor") => c.step_halving_floor = line.parse(key, value)?,
                ("fit", "num_passes") => c.num_passes = line.parse(key, value)?,
                ("fit", "minibatch_size") => c.minibatch_size = line.parse(key, value)?,
                ("fit", "subpops_per_minibatch") => {
                    c.subpops_per_minibatch = match value {
                        "all" => None,
                        v => Some(line.parse(key, v)?),
                    }
                }
                ("fit", "parallelism") => c.parallelism = line.parse(key, value)?,
                ("fit", "audit_steps") => c.audit_steps = line.flag(key, value)?,
                ("init", "tau") => c.init.tau = line.parse(key, value)?,
                ("init", "kmeans_restarts") => c.init.kmeans_restarts = line.parse(key, value)?,
                ("init", "max_iter") => c.init.max_iter = line.parse(key, value)?,
                ("init", "oversample") => c.init.oversample = line.parse(key, value)?,
                ("init", "power_iters") => c.init.power_iters = line.parse(key, value)?,
                ("", _) => return Err(line.err(format!("unknown top-level key {key:?}"))),
                (s, _) => return Err(line.err(format!("unknown key {key:?} in [{s}]"))),
            }
        }
        Ok(c)
    }

    /// Canonical text with every key; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let s = &self.simulate;
        writeln!(o, "seed = {}", self.seed).unwrap();
        writeln!(o, "\n[simulate]").unwrap();
        writeln!(o, "num_subpops = {}", s.num_subpops).unwrap();
        writeln!(o, "members_per_subpop = {}", s.members_per_subpop).unwrap();
        writeln!(o, "member_concentration = {}", s.member_concentration).unwrap();
        writeln!(o, "centers_alpha = {}", join(&s.centers_alpha)).unwrap();
        writeln!(o, "diagonal = {}", join(&s.diagonal)).unwrap();
        writeln!(o, "off_diagonal = {}", s.off_diagonal).unwrap();
        writeln!(o, "\n[aggregate]").unwrap();
        writeln!(o, "sample_size = {}", self.aggregate.sample_size).unwrap();
        writeln!(o, "\n[fit]").unwrap();
        writeln!(o, "num_communities = {}", self.num_communities).unwrap();
        writeln!(o, "alpha = {}", join(&self.alpha)).unwrap();
        writeln!(o, "beta_a = {}", self.beta_a).unwrap();
        writeln!(o, "beta_b = {}", self.beta_b).unwrap();
        writeln!(o, "elbo_tol = {}", self.elbo_tol).unwrap();
        writeln!(o, "max_inner_iters = {}", self.max_inner_iters).unwrap();
        writeln!(o, "step_halving_floor = {}", self.step_halving_floor).unwrap();
        writeln!(o, "num_passes = {}", self.num_passes).unwrap();
        writeln!(o, "minibatch_size = {}", self.minibatch_size).unwrap();
        match self.subpops_per_minibatch {
            Some(v) => writeln!(o, "subpops_per_minibatch = {v}").unwrap(),
            None => writeln!(o, "subpops_per_minibatch = all").unwrap(),
        }
        writeln!(o, "parallelism = {}", self.parallelism).unwrap();
        writeln!(o, "audit_steps = {}", self.audit_steps).unwrap();
        let i = &self.init;
        writeln!(o, "\n[init]").unwrap();
        writeln!(o, "tau = {}", i.tau).unwrap();
        writeln!(o, "kmeans_restarts = {}", i.kmeans_restarts).unwrap();
        writeln!(o, "max_iter = {}", i.max_iter).unwrap();
        writeln!(o, "oversample = {}", i.oversample).unwrap();
        writeln!(o, "power_iters = {}", i.power_iters).unwrap();
        o
    }

    /// Inference settings; configuration mistakes map to exit code 2.
    pub fn fit_config(&self) -> Result<FitConfig> {
        let d = self.num_communities;
        let as_config = |e: Error| Error::Config(e.to_string());
        let priors = Priors::new(
            expand(&self.alpha, d, "fit.alpha")?,
            Matrix::filled(d, d, self.beta_a),
            Matrix::filled(d, d, self.beta_b),
        )
        .map_err(as_config)?;
        let config = FitConfig {
            num_communities: d,
            priors,
            elbo_tol: self.elbo_tol,
            max_inner_iters: self.max_inner_iters,
            step_halving_floor: self.step_halving_floor,
            num_passes: self.num_passes,
            minibatch_size: self.minibatch_size,
            subpops_per_minibatch: self.subpops_per_minibatch,
            seed: self.seed,
            parallelism: self.parallelism,
            audit_steps: self.audit_steps,
            init: self.init.clone(),
        };
        config.validate().map_err(as_config)?;
        Ok(config)
    }
}
