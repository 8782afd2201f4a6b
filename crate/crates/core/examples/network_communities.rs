//! Spillover network for two blocks of six firms linked by one bridge:
//! build, prune below the third quartile, detect Louvain communities and
//! export GraphML, DOT and JSON.
//!
//! ```text
//! cargo run --release --example network_communities -- [out_dir]
//! ```

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use spillover::gfevd::compute_gfevd;
use spillover::network::{build_network, community_graph, export_graph, louvain, GraphFormat, NodeMeta, PruneOrder};
use spillover::simulate;
use spillover::var::{estimate_var_ols, IndicatorPanel};

fn main() -> spillover::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "network_out".into()));
    std::fs::create_dir_all(&dir)?;
    let n = 12;
    let block = |i: usize| i / 6;
    let beta = DMatrix::from_fn(n, n, |i, j| match (i == j, block(i) == block(j)) {
        (true, _) => 0.3,
        (false, true) => 0.08,
        _ if (i, j) == (6, 0) => 0.15,
        _ => 0.0,
    });
    let data = simulate::var_process(&DVector::zeros(n), &[beta], &DMatrix::identity(n, n), 1500, 23);
    let labels: Vec<String> = (0..n).map(|i| format!("{}{}", ["LIF", "REI"][block(i)], i % 6 + 1)).collect();
    let model = estimate_var_ols(&IndicatorPanel::new(labels.clone(), data)?, 1)?;
    let m = compute_gfevd(&model, 10)?;

    let subsector = ["Lif.Hea.", "Reins."];
    let meta: Vec<NodeMeta> = labels
        .iter()
        .enumerate()
        .map(|(i, t)| NodeMeta { ticker: t.clone(), subsector: subsector[block(i)].into(), country: "DE".into() })
        .collect();
    let directed = build_network(&m, &meta)?;
    let graph = community_graph(&directed, 0.75, PruneOrder::PruneThenConvert);
    println!("{} directed edges, {} after pruning and symmetrizing", directed.edges.len(), graph.edges.len());

    let part = louvain(&graph);
    println!("modularity {:.3}", part.modularity);
    for c in 0..part.sizes.len() {
        println!("community {c}: {}", part.members(c).join(" "));
    }
    for format in [GraphFormat::GraphMl, GraphFormat::Dot, GraphFormat::Json] {
        let path = dir.join(format!("network.{}", format.extension()));
        export_graph(&directed, format, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
