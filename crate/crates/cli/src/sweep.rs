use lifting::affine::{AffineRefinement, Shape};
use lifting::analysis::{true_transcript_dist, tv_distance, with_bottom};
use lifting::exact::{fmt_q, q_int, q_ratio};
use lifting::fixtures::affine_family;
use lifting::protocol::RefinedProtocol;
use lifting::simulate::simulate_exact;
use lifting::{ComposedInstance, Q};
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::report::{median, q_cols, q_json, z_str, Report, Table};
use crate::CliError;

struct Row {
    protocol: &'static str,
    m: u32,
    z: String,
    tv: Q,
    expected_queries: Q,
    bottom: Q,
    /// Explicit-engine TV equals the affine one; `None` when over budget.
    explicit: Option<bool>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.protocol.is_some() {
        return Err(CliError::Config("sweep runs the bundled affine family; protocol files are not supported".into()));
    }
    let n = cfg.n.unwrap_or(1);
    let ms = cfg.sweep_ms()?;
    let sim = cfg.sim(n)?;
    let budget = cfg.budget();
    let zs = cfg.zs(n)?;
    let mut jobs = Vec::new();
    for &m in &ms {
        let shape = Shape::new(n, m)?;
        let members: Vec<_> = affine_family(&shape)
            .into_iter()
            .filter(|(name, _)| cfg.fixture.as_deref().is_none_or(|f| f == *name))
            .collect();
        if members.is_empty() {
            return Err(CliError::Config(format!("unknown family member {:?}", cfg.fixture.as_deref().unwrap_or(""))));
        }
        jobs.extend(members.into_iter().map(|(name, t)| (m, shape, name, t)));
    }
    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|(m, shape, name, tree)| {
            let a = AffineRefinement::build(tree, shape, &sim.delta, &budget)?;
            let explicit = match ComposedInstance::index(n, *m) {
                Ok(g) if g.domain_pairs() <= budget.pairs as u128 => {
                    let p = tree.to_protocol(&g, &budget)?;
                    Some(RefinedProtocol::build(&p, &g, &sim.delta, &budget)?)
                }
                _ => None,
            };
            zs.iter()
                .map(|z| {
                    let walk = a.walk_law(z, &sim)?;
                    let tv = tv_distance(&with_bottom(&a.slice_law(z)?), &walk.transcripts);
                    let explicit = explicit
                        .as_ref()
                        .map(|r| -> Result<bool, lifting::Error> {
                            let truth = with_bottom(&true_transcript_dist(r, z, &budget)?);
                            Ok(tv_distance(&truth, &simulate_exact(r, z, &sim)?.transcripts) == tv)
                        })
                        .transpose()?;
                    let expected_queries = walk.queries.iter().map(|(k, p)| p * q_int(*k as i64)).sum();
                    Ok(Row {
                        protocol: name,
                        m: *m,
                        z: z_str(z),
                        tv,
                        expected_queries,
                        bottom: walk.bottom_mass(),
                        explicit,
                    })
                })
                .collect::<Result<Vec<_>, lifting::Error>>()
        })
        .collect::<Result<_, lifting::Error>>()?;
    let rows: Vec<Row> = rows.into_iter().flatten().collect();

    let mut report = Report::new("sweep", cfg);
    let checked: Vec<&Row> = rows.iter().filter(|r| r.explicit.is_some()).collect();
    report.assert(
        "affine_engine_matches_explicit_engine",
        checked.len() as u64,
        checked
            .iter()
            .filter(|r| r.explicit == Some(false))
            .map(|r| format!("{} m={} z={}", r.protocol, r.m, r.z))
            .collect(),
    );
    let mut t = Table::new(
        "sweep",
        &[
            "protocol",
            "n",
            "m",
            "z",
            "tv",
            "tv_float",
            "expected_queries",
            "expected_queries_float",
            "bottom",
            "bottom_float",
            "explicit_check",
        ],
    );
    for r in &rows {
        let [tv, tvf] = q_cols(&r.tv);
        let [q, qf] = q_cols(&r.expected_queries);
        let [b, bf] = q_cols(&r.bottom);
        let check = match r.explicit {
            Some(true) => "agree",
            Some(false) => "disagree",
            None => "over-budget",
        };
        t.push(vec![r.protocol.to_string(), n.to_string(), r.m.to_string(), r.z.clone(), tv, tvf, q, qf, b, bf, check.into()]);
    }
    let curve: Vec<_> = ms
        .iter()
        .map(|&m| {
            let mut tvs: Vec<Q> = rows.iter().filter(|r| r.m == m).map(|r| r.tv.clone()).collect();
            let mean = tvs.iter().sum::<Q>() * q_ratio(1, tvs.len() as u64);
            let max = tvs.iter().max().cloned().unwrap_or_default();
            let med = median(&mut tvs);
            json!({ "m": m, "median_tv": q_json(&med), "mean_tv": q_json(&mean), "max_tv": q_json(&max) })
        })
        .collect();
    report.results = json!({ "n": n, "delta": fmt_q(&sim.delta), "curve": curve });
    report.table(t);
    Ok(report)
}
