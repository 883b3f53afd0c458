use lifting::protocol::{RefinedProtocol, Step};
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::report::{Report, Table};
use crate::CliError;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (g, comps) = cfg.protocols()?;
    let delta = cfg.delta()?;
    let budget = cfg.budget();
    let mut report = Report::new("refine", cfg);
    let mut leaves = Table::new(
        "leaves",
        &["component", "leaf", "transcript", "output", "rho", "x_size", "y_size"],
    );
    let mut unstructured = Vec::new();
    let mut mismatches = Vec::new();
    let mut per = Vec::new();
    let (mut nodes, mut inputs) = (0u64, 0u64);
    for c in &comps {
        let r = RefinedProtocol::build(&c.protocol, &g, &delta, &budget)?;
        nodes += r.len() as u64;
        unstructured.extend(r.unstructured_nodes(&budget)?.into_iter().map(|id| format!("{} node {id}", c.name)));
        let bad: Vec<String> = (0..g.alice_size())
            .into_par_iter()
            .flat_map_iter(|x| {
                let (r, c) = (&r, &c);
                (0..g.bob_size()).filter_map(move |y| {
                    let (t, out) = r.run(x, y);
                    let (bits, want, _) = c.protocol.run(x, y);
                    (out != want || t.project() != bits).then(|| format!("{} x={x} y={y}", c.name))
                })
            })
            .collect();
        inputs += g.alice_size() * g.bob_size();
        mismatches.extend(bad);
        let transcripts = r.leaf_transcripts();
        for (id, t) in &transcripts {
            let node = r.node(*id);
            let Step::Leaf(out) = node.step else { unreachable!("leaf_transcripts yields leaves") };
            leaves.push(vec![
                c.name.clone(),
                id.to_string(),
                t.to_string(),
                out.to_string(),
                node.rho.to_string(),
                node.rect.x.len().to_string(),
                node.rect.y.len().to_string(),
            ]);
        }
        per.push(json!({
            "component": c.name,
            "base_depth": c.protocol.depth(),
            "nodes": r.len(),
            "leaves": transcripts.len(),
            "refined_depth": r.depth(),
        }));
    }
    report.assert("every_iteration_node_structured", nodes, unstructured);
    report.assert("refined_run_matches_original", inputs, mismatches);
    report.results = json!({ "instance": g.to_string(), "components": per });
    report.table(leaves);
    Ok(report)
}
