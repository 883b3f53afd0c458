use std::collections::{BTreeMap, BTreeSet};

use lifting::exact::{fmt_q, q_int, q_to_f64};
use lifting::gadget::z_index;
use lifting::protocol::{RefinedProtocol, TranscriptOutcome};
use lifting::simulate::{ledger_check, simulate_exact, simulate_sample, SimConfig};
use lifting::{ExactDist, Q};
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::report::{q_cols, q_json, z_str, Report, Table};
use crate::rng::case_rng;
use crate::CliError;

/// Width of the band the sampled frequencies are compared against, in
/// standard errors. Reported, never asserted.
const REPORT_SIGMAS: f64 = 3.0;

struct Cell {
    transcripts: Vec<Vec<String>>,
    queries: Vec<Vec<String>>,
    summary: Value,
    runs: u64,
    locality: Vec<String>,
    ledger: Vec<String>,
    support: Vec<String>,
}

fn expectation(d: &ExactDist<usize>) -> Q {
    d.iter().map(|(k, p)| p * q_int(*k as i64)).sum()
}

/// Standardized deviation of an observed count from its exact probability;
/// `None` for outcomes of probability zero or one.
fn deviation(p: &Q, count: u64, runs: u64) -> Option<f64> {
    let p = q_to_f64(p);
    let se = (p * (1.0 - p) / runs as f64).sqrt();
    (runs > 0 && se > 0.0).then(|| (count as f64 / runs as f64 - p).abs() / se)
}

fn cell(name: &str, r: &RefinedProtocol, z: &[bool], sim: &SimConfig, seed: Option<u64>, case: u64, samples: u64) -> Result<Cell, CliError> {
    let g = r.instance();
    let exact = simulate_exact(r, z, sim)?;
    let mut outcome_counts: BTreeMap<TranscriptOutcome, u64> = BTreeMap::new();
    let mut query_counts: BTreeMap<usize, u64> = BTreeMap::new();
    let (mut locality, mut ledger, mut support) = (Vec::new(), Vec::new(), Vec::new());
    let zs = z_str(z);
    if let Some(seed) = seed {
        let mut seeds = case_rng(seed, case);
        for run in 0..samples {
            let run_seed: u64 = seeds.gen();
            let out = simulate_sample(r, z, sim, run_seed)?;
            let at = || format!("{name} z={zs} run {run} (run seed {run_seed}, seed {seed})");
            let distinct: BTreeSet<usize> = out.queries.iter().copied().collect();
            let fixed: BTreeSet<usize> = out.final_rho.fixed().into_iter().collect();
            let within_cap = sim.query_cap.is_none_or(|cap| out.queries.len() <= cap);
            if distinct.len() != out.queries.len() || distinct != fixed || !out.final_rho.consistent_with(z) || !within_cap {
                locality.push(at());
            }
            if !ledger_check(&out, &sim.delta, g).holds {
                ledger.push(at());
            }
            let o = out.result.outcome();
            if exact.transcripts.prob(&o).is_zero() {
                support.push(format!("{}: {o}", at()));
            }
            *outcome_counts.entry(o).or_insert(0) += 1;
            *query_counts.entry(out.queries.len()).or_insert(0) += 1;
        }
    }
    let runs = if seed.is_some() { samples } else { 0 };
    let freq = |c: u64| if runs == 0 { String::new() } else { format!("{:.9}", c as f64 / runs as f64) };
    let mut worst = 0.0f64;
    let mut transcripts = Vec::new();
    for (o, p) in exact.transcripts.iter() {
        let c = *outcome_counts.get(o).unwrap_or(&0);
        let dev = deviation(p, c, runs);
        worst = worst.max(dev.unwrap_or(0.0));
        let [e, f] = q_cols(p);
        transcripts.push(vec![
            name.to_string(),
            zs.clone(),
            o.to_string(),
            e,
            f,
            c.to_string(),
            freq(c),
            dev.map_or(String::new(), |d| format!("{d:.3}")),
        ]);
    }
    let mut queries = Vec::new();
    for (k, p) in exact.queries.iter() {
        let c = *query_counts.get(k).unwrap_or(&0);
        let [e, f] = q_cols(p);
        queries.push(vec![name.to_string(), zs.clone(), k.to_string(), e, f, c.to_string(), freq(c)]);
    }
    let failures: BTreeMap<&str, Value> = exact.failures.iter().map(|(f, q)| (f.as_str(), q_json(q))).collect();
    let summary = json!({
        "component": name,
        "z": zs,
        "bottom": q_json(&exact.bottom_mass()),
        "failures": failures,
        "expected_queries": q_json(&expectation(&exact.queries)),
        "outcomes": exact.transcripts.len(),
        "runs": runs,
        "worst_deviation_se": if runs == 0 { Value::Null } else { json!(worst) },
        "within_band": if runs == 0 { Value::Null } else { json!(worst <= REPORT_SIGMAS) },
    });
    Ok(Cell {
        transcripts,
        queries,
        summary,
        runs,
        locality,
        ledger,
        support,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (g, comps) = cfg.protocols()?;
    let sim = cfg.sim(g.n())?;
    let budget = cfg.budget();
    let samples = cfg.samples();
    let seed = if samples > 0 { Some(cfg.seed("sampling walks")?) } else { None };
    let zs = cfg.zs(g.n())?;
    let refined: Vec<RefinedProtocol> = comps
        .iter()
        .map(|c| RefinedProtocol::build(&c.protocol, &g, &sim.delta, &budget))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, &Vec<bool>)> = (0..comps.len()).flat_map(|ci| zs.iter().map(move |z| (ci, z))).collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(ci, z)| {
            let case = ((ci as u64) << 32) | z_index(g.n(), z)?;
            cell(&comps[ci].name, &refined[ci], z, &sim, seed, case, samples)
        })
        .collect::<Result<_, CliError>>()?;

    let mut report = Report::new("simulate", cfg);
    let runs: u64 = cells.iter().map(|c| c.runs).sum();
    let gather = |f: fn(&Cell) -> &Vec<String>| cells.iter().flat_map(|c| f(c).iter().cloned()).collect::<Vec<_>>();
    report.assert("queries_match_fixed_blocks", runs, gather(|c| &c.locality));
    report.assert("potential_ledger", runs, gather(|c| &c.ledger));
    report.assert("sampled_outcomes_in_exact_support", runs, gather(|c| &c.support));
    let mut transcripts = Table::new(
        "transcripts",
        &["component", "z", "outcome", "exact", "exact_float", "count", "frequency", "deviation_se"],
    );
    let mut queries = Table::new("queries", &["component", "z", "queries", "exact", "exact_float", "count", "frequency"]);
    for c in &cells {
        c.transcripts.iter().for_each(|r| transcripts.push(r.clone()));
        c.queries.iter().for_each(|r| queries.push(r.clone()));
    }
    report.results = json!({
        "instance": g.to_string(),
        "delta": fmt_q(&sim.delta),
        "deficiency_cap": fmt_q(&sim.deficiency_cap),
        "report_band_se": REPORT_SIGMAS,
        "weights": comps.iter().map(|c| json!({ "component": c.name, "weight": fmt_q(&c.weight) })).collect::<Vec<_>>(),
        "cells": cells.iter().map(|c| c.summary.clone()).collect::<Vec<_>>(),
    });
    report.table(transcripts);
    report.table(queries);
    Ok(report)
}
