//! Contextual shortest paths on a synthetic grid: CSV round trip, FY and
//! suboptimality fits, relative regret against the clairvoyant route.

use std::sync::Arc;

use fy_invopt::spath::{self, GridSpec, SpRunConfig};
use fy_invopt::train::Method;

fn main() -> fy_invopt::Result<()> {
    let grid = GridSpec::default();
    let sp = spath::synth_graph_instance(&grid, 1000, 0.1, 7)?;
    println!(
        "{} nodes, {} edges, {} records, context dim {}",
        sp.graph.num_nodes(),
        sp.graph.num_edges(),
        sp.len(),
        sp.context_dim()
    );

    let dir = std::env::temp_dir().join("fy_invopt_spath_example");
    std::fs::create_dir_all(&dir)?;
    spath::write_graph_csv(&dir.join("edges.csv"), &sp.graph, &sp.node_names)?;
    spath::write_records_csv(&dir.join("records.csv"), &sp)?;
    let source = &sp.node_names[sp.graph.source()];
    let sink = &sp.node_names[sp.graph.sink()];
    let (g, names) = spath::load_graph(&dir.join("edges.csv"), source, sink)?;
    let loaded = spath::load_records(&dir.join("records.csv"), Arc::new(g), names)?;
    println!("reloaded {} records from {}", loaded.len(), dir.display());

    let cfg = SpRunConfig::default();
    for method in [Method::Fy, Method::Subopt] {
        let r = spath::sp_run(&loaded, method, &cfg, 1)?;
        println!(
            "{:<7} relative regret {:>5.2}%  fit time {:.2}s",
            method.name(),
            r.relative_regret_ratio.unwrap(),
            r.wall_time_seconds
        );
    }
    Ok(())
}
