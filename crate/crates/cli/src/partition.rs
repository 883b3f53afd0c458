use lifting::entropy::{random_setvar, verify_partition_lemma};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::report::{Report, Table};
use crate::rng::case_rng;
use crate::CliError;

struct Case {
    coords: usize,
    m: u64,
    size: u64,
    deficiency: String,
    deficiency_float: f64,
    parts: usize,
    is_partition: bool,
    holds: bool,
    first_violation: Option<usize>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let seed = cfg.seed("random sets")?;
    let delta = cfg.delta()?;
    let budget = cfg.budget();
    if let Some(m) = cfg.m {
        if m < 2 {
            return Err(CliError::Config("m must be at least 2".into()));
        }
    }
    if cfg.coords == Some(0) {
        return Err(CliError::Config("coords must be positive".into()));
    }
    if let (Some(m), Some(k)) = (cfg.m, cfg.coords) {
        let points = (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if points > budget.pairs as u128 {
            return Err(lifting::Error::Resource {
                what: "random set ambient".into(),
                required: format!("{points} points"),
                budget: format!("{} pairs", budget.pairs),
            }
            .into());
        }
    }
    let cases: Vec<Case> = (0..cfg.count())
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let k = cfg.coords.unwrap_or_else(|| rng.gen_range(1..=3));
            let m = cfg.m.map(u64::from).unwrap_or_else(|| [2, 4, 8][rng.gen_range(0..3)]);
            let keep = [0.05, 0.2, 0.5, 0.9][rng.gen_range(0..4)];
            let x = random_setvar(&mut rng, m, k, keep);
            let parts = x.density_restoring_partition(&delta, &budget)?;
            let rep = verify_partition_lemma(&x, &parts, &delta, &budget)?;
            let d = x.total_deficiency();
            Ok(Case {
                coords: k,
                m,
                size: x.len(),
                deficiency: d.exact_string(),
                deficiency_float: d.to_f64(),
                parts: parts.len(),
                is_partition: rep.is_partition,
                holds: rep.holds,
                first_violation: rep.first_violation,
            })
        })
        .collect::<Result<_, lifting::Error>>()?;

    let mut report = Report::new("partition", cfg);
    let n = cases.len() as u64;
    let at = |i: usize| format!("case {i} (seed {seed})");
    report.assert(
        "parts_form_a_partition",
        n,
        cases.iter().enumerate().filter(|(_, c)| !c.is_partition).map(|(i, _)| at(i)).collect(),
    );
    report.assert(
        "density_and_deficiency_bounds",
        n,
        cases
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_partition && !c.holds)
            .map(|(i, c)| format!("{}: part {:?}", at(i), c.first_violation))
            .collect(),
    );
    let parts: usize = cases.iter().map(|c| c.parts).sum();
    report.results = json!({
        "sets": n,
        "parts": parts,
        "max_parts": cases.iter().map(|c| c.parts).max().unwrap_or(0),
        "mean_parts": if n == 0 { 0.0 } else { parts as f64 / n as f64 },
    });
    let mut t = Table::new(
        "partitions",
        &["case", "coords", "m", "size", "deficiency", "deficiency_float", "parts", "is_partition", "holds"],
    );
    for (i, c) in cases.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            c.coords.to_string(),
            c.m.to_string(),
            c.size.to_string(),
            c.deficiency.clone(),
            format!("{:.9}", c.deficiency_float),
            c.parts.to_string(),
            c.is_partition.to_string(),
            c.holds.to_string(),
        ]);
    }
    report.table(t);
    Ok(report)
}
