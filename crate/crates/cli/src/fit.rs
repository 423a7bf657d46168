//! `init` and `fit`.

use std::fmt::Write as _;
use std::path::Path;

use ardmmsb::engine::{run_passes, svd_initialize_with, PassReport};
use ardmmsb::io::{self, read_checkpoint, sha256_hex, write_checkpoint, Checkpoint, RunConfig};
use ardmmsb::{ArdMatrix, Error, Result, VariationalState};

use crate::context::{read_input, source, Context};

fn read_ard(path: &Path) -> Result<(Vec<u8>, ArdMatrix)> {
    let (bytes, text) = read_input(path)?;
    let ard = io::parse_ard(&text, &source(path))?;
    Ok((bytes, ard))
}

fn checkpoint_name(completed: usize) -> String {
    format!("checkpoint-pass-{completed:03}.bin")
}

pub fn init(ctx: &Context, ard_path: &Path) -> Result<()> {
    let (ard_bytes, ard) = read_ard(ard_path)?;
    let run = ctx.start("init", &[("ard", ard_path, &ard_bytes)])?;
    let config = ctx.config.fit_config()?;
    let outcome = svd_initialize_with(&ard, config.num_communities, config.seed, &config.init)?;
    if outcome.used_fallback {
        log::warn!("ARD matrix is rank deficient; used the jittered uniform initialization");
    }
    let checkpoint = Checkpoint {
        state: outcome.state,
        config_text: ctx.checkpoint_config_text(),
        seed: config.seed,
        completed_passes: 0,
        ard_digest: sha256_hex(&ard_bytes),
    };
    let bytes = write_checkpoint(&checkpoint);
    io::write_file(&ctx.path(&checkpoint_name(0)), &bytes)?;
    io::write_file(&ctx.path("checkpoint.bin"), &bytes)?;
    let sv: Vec<String> = outcome.singular_values.iter().map(|s| s.to_string()).collect();
    io::write_file(&ctx.path("singular_values.txt"), sv.join("\n") + "\n")?;
    println!("initialized {} communities into {}", config.num_communities, ctx.out.display());
    run.finish()
}

pub fn fit(ctx: &mut Context, ard_path: &Path, resume: Option<&Path>) -> Result<()> {
    let (ard_bytes, ard) = read_ard(ard_path)?;
    let ard_digest = sha256_hex(&ard_bytes);
    let resumed = match resume {
        Some(path) => {
            let bytes = io::read_bytes(path)?;
            let checkpoint = read_checkpoint(&bytes, &source(path))?;
            if checkpoint.ard_digest != ard_digest {
                return Err(Error::Data(format!(
                    "{} was fitted to different ARD bytes than {}",
                    path.display(),
                    ard_path.display()
                )));
            }
            if ctx.config_path.is_none() {
                let stored = RunConfig::parse(&checkpoint.config_text, &format!("{} (config)", path.display()))?;
                ctx.replace_config(stored);
            }
            Some((path.to_path_buf(), bytes, checkpoint))
        }
        None => None,
    };

    let mut inputs: Vec<(&str, &Path, &[u8])> = vec![("ard", ard_path, &ard_bytes)];
    if let Some((path, bytes, _)) = &resumed {
        inputs.push(("resume", path, bytes));
    }
    let run = ctx.start("fit", &inputs)?;
    let config = ctx.config.fit_config()?;
    let config_text = ctx.checkpoint_config_text();
    let mut report = String::new();

    let (state, first_pass) = match resumed {
        Some((_, _, checkpoint)) => {
            if checkpoint.state.num_communities() != config.num_communities {
                return Err(Error::Config(format!(
                    "checkpoint has {} communities but the config asks for {}",
                    checkpoint.state.num_communities(),
                    config.num_communities
                )));
            }
            writeln!(report, "resumed_from_pass\t{}", checkpoint.completed_passes).unwrap();
            (checkpoint.state, checkpoint.completed_passes)
        }
        None => {
            let outcome = svd_initialize_with(&ard, config.num_communities, config.seed, &config.init)?;
            writeln!(report, "init_fallback\t{}", outcome.used_fallback).unwrap();
            let checkpoint = Checkpoint {
                state: outcome.state.clone(),
                config_text: config_text.clone(),
                seed: config.seed,
                completed_passes: 0,
                ard_digest: ard_digest.clone(),
            };
            io::write_file(&ctx.path(&checkpoint_name(0)), write_checkpoint(&checkpoint))?;
            (outcome.state, 0)
        }
    };

    let count = config.num_passes.saturating_sub(first_pass);
    let mut trajectory = String::from("pass\tminibatch\titeration\tlstar\n");
    let mut last: Option<Vec<u8>> = None;
    let (final_state, passes, kls) = run_passes(state.clone(), &ard, &config, first_pass, count, |pass, st, rep| {
        let checkpoint = Checkpoint {
            state: st.clone(),
            config_text: config_text.clone(),
            seed: config.seed,
            completed_passes: pass + 1,
            ard_digest: ard_digest.clone(),
        };
        let bytes = write_checkpoint(&checkpoint);
        io::write_file(&ctx.path(&checkpoint_name(pass + 1)), &bytes)?;
        last = Some(bytes);
        append_trajectory(&mut trajectory, pass, rep);
        Ok(())
    })?;
    let final_bytes = match last {
        Some(bytes) => bytes,
        None => write_checkpoint(&Checkpoint {
            state: final_state.clone(),
            config_text: config_text.clone(),
            seed: config.seed,
            completed_passes: first_pass,
            ard_digest: ard_digest.clone(),
        }),
    };
    io::write_file(&ctx.path("checkpoint.bin"), final_bytes)?;
    io::write_file(&ctx.path("trajectory.tsv"), trajectory)?;

    let mut kl_csv = String::from("pass,node,kl\n");
    for (j, pass_kl) in kls.iter().enumerate() {
        for (i, kl) in pass_kl.iter().enumerate() {
            writeln!(kl_csv, "{},{i},{kl}", first_pass + j).unwrap();
        }
    }
    io::write_file(&ctx.path("pass_kl.csv"), kl_csv)?;

    for (rep, kl) in passes.iter().zip(&kls) {
        append_pass_summary(&mut report, rep, kl);
    }
    writeln!(report, "completed_passes\t{}", first_pass + passes.len()).unwrap();
    io::write_file(&ctx.path("fit_report.txt"), report)?;
    summarize(&final_state, first_pass + passes.len(), ctx);
    run.finish()
}

fn append_trajectory(out: &mut String, pass: usize, rep: &PassReport) {
    for mb in &rep.minibatches {
        for (t, l) in mb.fit.trajectory.iter().enumerate() {
            writeln!(out, "{pass}\t{}\t{t}\t{l}", mb.index).unwrap();
        }
    }
}

fn append_pass_summary(out: &mut String, rep: &PassReport, kl: &[f64]) {
    let iterations: usize = rep.minibatches.iter().map(|m| m.fit.iterations).sum();
    let converged = rep.minibatches.iter().filter(|m| m.fit.converged).count();
    let mut sorted = kl.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    writeln!(
        out,
        "pass\t{}\tminibatches\t{}\tconverged\t{converged}\titerations\t{iterations}\taccepted\t{}\trejected\t{}\tmedian_kl\t{median}\tseconds\t{:.3}",
        rep.pass,
        rep.minibatches.len(),
        rep.accepted(),
        rep.rejected(),
        rep.elapsed.as_secs_f64()
    )
    .unwrap();
}

fn summarize(state: &VariationalState, completed: usize, ctx: &Context) {
    println!(
        "fitted {} nodes x {} subpopulations, {} communities, {completed} passes into {}",
        state.num_nodes(),
        state.num_subpops(),
        state.num_communities(),
        ctx.out.display()
    );
}
