//! `eval` and `export-memberships`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ardmmsb::eval::{
    align_labels, argmax_rows, blockmatrix_error, hard_assign, mean_and_se, membership_kl, nmi, roc_auc, score_links,
};
use ardmmsb::graph::induced_subgraph;
use ardmmsb::io::{self, read_checkpoint};
use ardmmsb::{DirectedGraph, Error, GroundTruth, Matrix, Result, VariationalState};

use crate::context::{read_input, source, Context};

pub struct EvalInputs<'a> {
    pub checkpoints: &'a [PathBuf],
    pub truth: Option<&'a Path>,
    pub sampled: Option<&'a Path>,
    pub edges: Option<&'a Path>,
    pub previous: Option<&'a Path>,
    pub truth_as_estimate: bool,
}

/// Lower edges of the log10 KL histogram bins; values below the first edge
/// land in the first bin and above the last in the last.
const KL_BIN_EDGES: std::ops::RangeInclusive<i32> = -24..=4;

fn load_state(path: &Path) -> Result<(Vec<u8>, VariationalState)> {
    let bytes = io::read_bytes(path)?;
    let checkpoint = read_checkpoint(&bytes, &source(path))?;
    Ok((bytes, checkpoint.state))
}

/// A near-degenerate Dirichlet state whose means are the true memberships.
fn truth_state(truth: &GroundTruth, rows: &[usize]) -> Result<VariationalState> {
    const SCALE: f64 = 1e6;
    let d = truth.num_communities();
    let lift = |m: &Matrix, rows: &[usize]| -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows.len() * d);
        for &i in rows {
            data.extend(m.row(i).iter().map(|x| SCALE * x + 1e-9));
        }
        Matrix::from_vec(rows.len(), d, data)
    };
    let subpops: Vec<usize> = (0..truth.num_subpops()).collect();
    VariationalState::new(
        lift(&truth.memberships, rows)?,
        lift(&truth.realized_subpop_means(), &subpops)?,
        truth.blockmatrix.clone(),
    )
}

struct Repeat {
    metrics: Vec<(String, f64)>,
    roc: Vec<(f64, f64)>,
    kl: Vec<f64>,
}

pub fn eval(ctx: &Context, inputs: EvalInputs) -> Result<()> {
    let mut owned: Vec<(&str, PathBuf, Vec<u8>)> = Vec::new();
    let mut states = Vec::new();
    for path in inputs.checkpoints {
        let (bytes, state) = load_state(path)?;
        owned.push(("checkpoint", path.clone(), bytes));
        states.push(state);
    }
    let truth = match inputs.truth {
        Some(path) => {
            let (bytes, text) = read_input(path)?;
            owned.push(("truth", path.to_path_buf(), bytes));
            Some(io::parse_ground_truth(&text, &source(path))?)
        }
        None => None,
    };
    let sampled = match inputs.sampled {
        Some(path) => {
            let (bytes, text) = read_input(path)?;
            owned.push(("sampled", path.to_path_buf(), bytes));
            Some(io::parse_node_list(&text, &source(path))?)
        }
        None => None,
    };
    let edge_text = match inputs.edges {
        Some(path) => {
            let (bytes, text) = read_input(path)?;
            owned.push(("edges", path.to_path_buf(), bytes));
            Some((path, text))
        }
        None => None,
    };
    let previous = match inputs.previous {
        Some(path) => {
            let (bytes, state) = load_state(path)?;
            owned.push(("previous", path.to_path_buf(), bytes));
            Some(state)
        }
        None => None,
    };
    let manifest_inputs: Vec<(&str, &Path, &[u8])> =
        owned.iter().map(|(l, p, b)| (*l, p.as_path(), b.as_slice())).collect();
    let run = ctx.start("eval", &manifest_inputs)?;

    if inputs.truth_as_estimate {
        let truth = truth
            .as_ref()
            .ok_or_else(|| Error::Config("--truth-as-estimate needs --truth".into()))?;
        let rows = sampled.clone().unwrap_or_else(|| (0..truth.num_nodes()).collect());
        states.push(truth_state(truth, &rows)?);
    }
    if states.is_empty() {
        return Err(Error::Config("eval needs at least one --checkpoint or --truth-as-estimate".into()));
    }
    let n = states[0].num_nodes();
    if states.iter().any(|s| s.num_nodes() != n) {
        return Err(Error::DimensionMismatch("checkpoints have different node counts".into()));
    }
    let ids = sampled.unwrap_or_else(|| (0..n).collect());
    if ids.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} sampled node ids for {n} fitted rows",
            ids.len()
        )));
    }

    let mut notices = Vec::new();
    let truth_rows = match &truth {
        Some(t) => {
            let labels = argmax_rows(&t.memberships);
            if let Some(&bad) = ids.iter().find(|&&i| i >= labels.len()) {
                return Err(Error::DimensionMismatch(format!(
                    "node {bad} is outside the {}-node ground truth",
                    labels.len()
                )));
            }
            Some(ids.iter().map(|&i| labels[i]).collect::<Vec<_>>())
        }
        None => {
            notices.push("no ground truth given; NMI and blockmatrix recovery skipped");
            None
        }
    };
    let graph = match edge_text {
        Some((path, text)) => {
            let parsed = io::parse_edge_list(&text, None, &source(path))?;
            let needed = truth
                .as_ref()
                .map_or(0, |t| t.num_nodes())
                .max(ids.iter().map(|i| i + 1).max().unwrap_or(0))
                .max(parsed.num_nodes());
            let full = io::parse_edge_list(&text, Some(needed), &source(path))?;
            Some(sampled_graph(&full, &ids)?)
        }
        None => {
            notices.push("no edge list given; link prediction skipped");
            None
        }
    };
    if previous.is_none() {
        notices.push("no previous checkpoint given; between-pass KL skipped");
    }

    let mut repeats = Vec::new();
    for state in &states {
        let mut r = Repeat {
            metrics: Vec::new(),
            roc: Vec::new(),
            kl: Vec::new(),
        };
        if let (Some(t), Some(rows)) = (&truth, &truth_rows) {
            truth_metrics(&mut r, state, t, rows, &mut notices)?;
        }
        if let Some(g) = &graph {
            if g.num_edges() == 0 {
                notices.push("sampled subgraph has no links; link prediction skipped");
            } else {
                link_metrics(&mut r, state, g, ctx.config.seed)?;
            }
        }
        if let Some(prev) = &previous {
            r.kl = membership_kl(prev, state)?;
            let mut sorted = r.kl.clone();
            sorted.sort_by(f64::total_cmp);
            r.metrics.push(("kl_median".into(), sorted[sorted.len() / 2]));
            r.metrics.push(("kl_mean".into(), r.kl.iter().sum::<f64>() / r.kl.len() as f64));
            r.metrics.push(("kl_max".into(), sorted[sorted.len() - 1]));
        }
        repeats.push(r);
    }

    notices.sort_unstable();
    notices.dedup();
    for notice in &notices {
        eprintln!("notice: {notice}");
    }
    io::write_file(&ctx.path("metrics.txt"), metrics_text(&repeats, &notices))?;
    if graph.is_some() {
        let mut roc = String::from("repeat,false_positive_rate,true_positive_rate\n");
        for (j, r) in repeats.iter().enumerate() {
            for (fpr, tpr) in &r.roc {
                writeln!(roc, "{j},{fpr},{tpr}").unwrap();
            }
        }
        io::write_file(&ctx.path("roc.csv"), roc)?;
    }
    if previous.is_some() {
        let mut kl = String::from("repeat,node,kl\n");
        let mut hist = String::from("repeat,log10_lower,log10_upper,count\n");
        for (j, r) in repeats.iter().enumerate() {
            for (i, v) in r.kl.iter().enumerate() {
                writeln!(kl, "{j},{i},{v}").unwrap();
            }
            for (lo, count) in kl_histogram(&r.kl) {
                writeln!(hist, "{j},{lo},{},{count}", lo + 1).unwrap();
            }
        }
        io::write_file(&ctx.path("kl.csv"), kl)?;
        io::write_file(&ctx.path("kl_histogram.csv"), hist)?;
    }
    println!("evaluated {} estimate(s) into {}", repeats.len(), ctx.out.display());
    run.finish()
}

fn sampled_graph(full: &DirectedGraph, ids: &[usize]) -> Result<DirectedGraph> {
    if ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Data("sampled node ids must be strictly increasing".into()));
    }
    Ok(induced_subgraph(full, ids.to_vec()).graph)
}

fn truth_metrics(
    r: &mut Repeat,
    state: &VariationalState,
    truth: &GroundTruth,
    truth_rows: &[usize],
    notices: &mut Vec<&'static str>,
) -> Result<()> {
    let estimate = hard_assign(state);
    r.metrics.push(("nmi".into(), nmi(truth_rows, &estimate)?));
    let d = state.num_communities();
    if truth.num_communities() != d {
        notices.push("fitted and true community counts differ; blockmatrix recovery skipped");
        return Ok(());
    }
    let alignment = align_labels(truth_rows, &estimate, d)?;
    let err = blockmatrix_error(&state.blockmatrix, &truth.blockmatrix, &alignment)?;
    r.metrics.push(("block_squared_error".into(), err.squared_error));
    for (m, v) in err.diagonal.iter().enumerate() {
        r.metrics.push((format!("block_diagonal_{m}"), *v));
    }
    Ok(())
}

fn link_metrics(r: &mut Repeat, state: &VariationalState, graph: &DirectedGraph, seed: u64) -> Result<()> {
    let scored = score_links(state, graph, seed)?;
    let summary = roc_auc(&scored)?;
    r.metrics.push(("auc".into(), summary.auc));
    r.metrics.push(("average_rank".into(), summary.avg_rank));
    let mean = |link: bool, f: &dyn Fn(f64) -> f64| {
        let v: Vec<f64> = scored.iter().filter(|p| p.is_link == link).map(|p| f(p.score)).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    r.metrics.push(("predictive_link_mean".into(), mean(true, &|s| s)));
    r.metrics.push(("predictive_nonlink_mean".into(), mean(false, &|s| s)));
    r.metrics.push(("predictive_link_log_mean".into(), mean(true, &|s| s.ln())));
    r.metrics.push(("predictive_nonlink_log_mean".into(), mean(false, &|s| (1.0 - s).ln())));
    r.roc = summary.curve;
    Ok(())
}

fn kl_histogram(kl: &[f64]) -> Vec<(i32, usize)> {
    let lo = *KL_BIN_EDGES.start();
    let hi = *KL_BIN_EDGES.end();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &v in kl {
        let bin = if v > 0.0 { v.log10().floor() as i32 } else { lo };
        counts[(bin.clamp(lo, hi) - lo) as usize] += 1;
    }
    KL_BIN_EDGES.zip(counts).collect()
}

/// `name<TAB>value` lines: per-repeat values as `rJ.name`, then `name.mean`
/// and, with two or more repeats, `name.se`.
fn metrics_text(repeats: &[Repeat], notices: &[&str]) -> String {
    let mut out = String::new();
    for notice in notices {
        writeln!(out, "notice\t{notice}").unwrap();
    }
    writeln!(out, "repeats\t{}", repeats.len()).unwrap();
    for (j, r) in repeats.iter().enumerate() {
        for (name, v) in &r.metrics {
            writeln!(out, "r{j}.{name}\t{v}").unwrap();
        }
    }
    let names: Vec<&String> = repeats[0].metrics.iter().map(|(n, _)| n).collect();
    for name in names {
        let values: Vec<f64> = repeats
            .iter()
            .filter_map(|r| r.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
            .collect();
        let (mean, se) = mean_and_se(&values);
        writeln!(out, "{name}.mean\t{mean}").unwrap();
        if values.len() >= 2 {
            writeln!(out, "{name}.se\t{se}").unwrap();
        }
    }
    out
}

pub fn export_memberships(ctx: &Context, checkpoint: &Path, sampled: Option<&Path>) -> Result<()> {
    let (bytes, state) = load_state(checkpoint)?;
    let mut inputs: Vec<(&str, &Path, &[u8])> = vec![("checkpoint", checkpoint, &bytes)];
    let sampled = match sampled {
        Some(path) => {
            let (b, text) = read_input(path)?;
            Some((path, b, io::parse_node_list(&text, &source(path))?))
        }
        None => None,
    };
    if let Some((path, b, _)) = &sampled {
        inputs.push(("sampled", path, b));
    }
    let run = ctx.start("export-memberships", &inputs)?;
    let ids: Vec<usize> = match sampled {
        Some((_, _, ids)) => ids,
        None => (0..state.num_nodes()).collect(),
    };
    if ids.len() != state.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "{} sampled node ids for {} fitted rows",
            ids.len(),
            state.num_nodes()
        )));
    }
    let d = state.num_communities();
    let header = |first: &str| {
        let cols: Vec<String> = (0..d).map(|m| format!("community_{m}")).collect();
        format!("{first},{}\n", cols.join(","))
    };
    let rows = |m: &Matrix, labels: &mut dyn Iterator<Item = usize>, first: &str| {
        let mut out = header(first);
        for (label, row) in labels.zip(m.iter_rows()) {
            let vals: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{label},{}", vals.join(",")).unwrap();
        }
        out
    };
    io::write_file(
        &ctx.path("node_memberships.csv"),
        rows(&state.node_memberships(), &mut ids.iter().copied(), "node"),
    )?;
    io::write_file(
        &ctx.path("subpop_memberships.csv"),
        rows(&state.subpop_memberships(), &mut (0..state.num_subpops()), "subpop"),
    )?;
    io::write_file(
        &ctx.path("blockmatrix.csv"),
        rows(&state.blockmatrix, &mut (0..d), "community"),
    )?;
    println!("exported memberships for {} nodes into {}", ids.len(), ctx.out.display());
    run.finish()
}
