//! `simulate` and `aggregate`.

use std::path::Path;

use ardmmsb::graph::{subsample_nodes, SubpopulationMap};
use ardmmsb::io::{self, format_ard, format_edge_list, format_ground_truth, format_node_list, format_subpop_map};
use ardmmsb::{aggregate_ard, Error, Result};

use crate::context::{read_input, source, Context};

pub fn simulate(ctx: &Context) -> Result<()> {
    let run = ctx.start("simulate", &[])?;
    let design = ctx.config.simulate.design().map_err(|e| Error::Config(e.to_string()))?;
    let (graph, truth) = design.simulate(ctx.config.seed)?;
    io::write_file(&ctx.path("edges.tsv"), format_edge_list(&graph))?;
    io::write_file(&ctx.path("subpops.tsv"), format_subpop_map(&truth.subpopulation_map()))?;
    io::write_file(&ctx.path("truth.txt"), format_ground_truth(&truth))?;
    println!(
        "simulated {} nodes, {} edges, {} subpopulations into {}",
        graph.num_nodes(),
        graph.num_edges(),
        truth.num_subpops(),
        ctx.out.display()
    );
    run.finish()
}

pub fn aggregate(ctx: &Context, edges_path: &Path, subpops_path: &Path) -> Result<()> {
    let (edge_bytes, edge_text) = read_input(edges_path)?;
    let (map_bytes, map_text) = read_input(subpops_path)?;
    let run = ctx.start(
        "aggregate",
        &[("edges", edges_path, &edge_bytes), ("subpops", subpops_path, &map_bytes)],
    )?;
    let map = io::parse_subpop_map(&map_text, &source(subpops_path))?;
    let graph = io::parse_edge_list(&edge_text, None, &source(edges_path))?;
    let n = graph.num_nodes().max(map.num_nodes());
    let graph = io::parse_edge_list(&edge_text, Some(n), &source(edges_path))?;
    let map = pad_map(map, n)?;
    let sample = subsample_nodes(&graph, ctx.config.aggregate.sample_size, ctx.config.seed)?;
    let ard = aggregate_ard(&graph, &map, &sample.original_ids)?;
    io::write_file(&ctx.path("ard.tsv"), format_ard(&ard))?;
    io::write_file(&ctx.path("sampled.tsv"), format_node_list(&sample.original_ids))?;
    println!(
        "aggregated {} sampled nodes over {} subpopulations ({} nonzero counts) into {}",
        ard.num_nodes(),
        ard.num_subpops(),
        ard.nnz(),
        ctx.out.display()
    );
    run.finish()
}

/// Extend a subpopulation map with unassigned nodes up to `n`.
fn pad_map(map: SubpopulationMap, n: usize) -> Result<SubpopulationMap> {
    if map.num_nodes() == n {
        return Ok(map);
    }
    let mut labels = map.labels().to_vec();
    labels.resize(n, None);
    SubpopulationMap::new(map.num_subpops(), labels)
}
