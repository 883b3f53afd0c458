use lifting::analysis::{
    fourier_pointwise_check, fourier_pointwise_unchecked, marginals_report, norm_bound_check, support_check, true_transcript_dist, tv_distance,
    with_bottom,
};
use lifting::exact::{fmt_q, q_ratio};
use lifting::protocol::RefinedProtocol;
use lifting::simulate::simulate_exact;
use lifting::{Budget, ComposedInstance, ExactDist, SetVar, Q};
use num_traits::One;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::report::{q_cols, q_json, z_str, Report, Table};
use crate::rng::case_rng;
use crate::CliError;

/// Stream offsets keeping the two batteries' generators apart.
const FOURIER_STREAM: u64 = 1 << 40;
const NORM_STREAM: u64 = 2 << 40;

/// Default cap on the coordinates of a Fourier battery law.
const FOURIER_MAX_COORDS: usize = 8;

struct Battery {
    checked: u64,
    failures: Vec<String>,
    summary: serde_json::Value,
}

/// I.i.d. bits, each 0 with probability `(1 + bias)/2`.
fn product_law(k: usize, bias: &Q) -> Result<ExactDist<u64>, lifting::Error> {
    let half = q_ratio(1, 2);
    let zero = &half * (Q::one() + bias);
    let one = &half * (Q::one() - bias);
    ExactDist::from_masses((0..1u64 << k).map(|v| {
        let ones = v.count_ones() as usize;
        let p = (0..k).fold(Q::one(), |acc, i| acc * if i < ones { &one } else { &zero });
        (v, p)
    }))
}

/// Laws on `{0,1}^k`: `count` random ones (arbitrary, or small perturbations
/// of uniform) plus, for every `k`, i.i.d. bits of bias `n^-5`. Only laws
/// meeting the parity hypothesis are checked. The implication is only claimed
/// for `k ≤ n`; a larger `max_coords` probes beyond that range.
fn fourier_battery(seed: u64, count: u64, n: usize, max_coords: Option<usize>, budget: &Budget) -> Result<Battery, CliError> {
    let n = n.max(2);
    let max_k = max_coords.unwrap_or(n.min(FOURIER_MAX_COORDS));
    if max_k == 0 {
        return Err(CliError::Config("fourier_coords must be positive".into()));
    }
    let check = |d: &ExactDist<u64>, k: usize| {
        if k <= n {
            fourier_pointwise_check(d, k, n, budget)
        } else {
            fourier_pointwise_unchecked(d, k, n, budget)
        }
    };
    let mut results: Vec<(bool, bool, String)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, FOURIER_STREAM + i);
            let k = rng.gen_range(1..=max_k);
            let size = 1usize << k;
            let weights: Vec<u64> = if rng.gen_bool(1.0 / 3.0) {
                (0..size).map(|_| rng.gen_range(0..8)).collect()
            } else {
                let scale = 1u64 << rng.gen_range(8..28);
                let spread = scale >> rng.gen_range(6..16);
                (0..size).map(|_| scale + rng.gen_range(0..=spread)).collect()
            };
            let weights = if weights.iter().all(|&w| w == 0) { vec![1; size] } else { weights };
            let d = ExactDist::from_counts(weights.iter().enumerate().map(|(v, &w)| (v as u64, w)))?;
            let c = check(&d, k)?;
            Ok((c.hypothesis, c.conclusion, format!("law {i} (seed {seed}) k={k}")))
        })
        .collect::<Result<_, lifting::Error>>()?;
    let bias = q_ratio(1, (n as u64).pow(5));
    for k in 1..=max_k {
        let c = check(&product_law(k, &bias)?, k)?;
        results.push((c.hypothesis, c.conclusion, format!("product law k={k} bias {}", fmt_q(&bias))));
    }
    let hyp = results.iter().filter(|r| r.0).count() as u64;
    Ok(Battery {
        checked: hyp,
        failures: results.iter().filter(|r| r.0 && !r.1).map(|r| r.2.clone()).collect(),
        summary: json!({
            "laws": results.len(),
            "n": n,
            "max_coords": max_k,
            "satisfying_hypothesis": hyp,
        }),
    })
}

fn sampled_setvar(rng: &mut impl Rng, ambient: u64, k: usize, count: usize) -> Result<SetVar, lifting::Error> {
    let points: Vec<Vec<u64>> = (0..count).map(|_| (0..k).map(|_| rng.gen_range(0..ambient)).collect()).collect();
    SetVar::new(vec![ambient; k], points)
}

/// Random variables on one or two blocks of the instance's gadget.
fn norm_battery(seed: u64, count: u64, g: &ComposedInstance, budget: &Budget) -> Result<Battery, CliError> {
    let gadget = g.gadget();
    let max_k = g.n().min(2);
    let results: Vec<(bool, bool, String)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, NORM_STREAM + i);
            let k = rng.gen_range(1..=max_k);
            let coords: Vec<usize> = match (k, rng.gen_range(0..3)) {
                (1, _) => vec![0],
                (_, 0) => vec![0],
                (_, 1) => vec![1],
                _ => vec![0, 1],
            };
            let (nx, ny) = (rng.gen_range(1..=16), rng.gen_range(1..=64));
            let x = sampled_setvar(&mut rng, gadget.alice_size(), k, nx)?;
            let y = sampled_setvar(&mut rng, gadget.bob_size(), k, ny)?;
            let r = norm_bound_check(gadget, &coords, &x, &y, budget)?;
            Ok((r.holds, r.exact_norm, format!("instance {i} (seed {seed}) I={coords:?}")))
        })
        .collect::<Result<_, lifting::Error>>()?;
    let exact = results.iter().filter(|r| r.1).count();
    Ok(Battery {
        checked: count,
        failures: results.iter().filter(|r| !r.0).map(|r| r.2.clone()).collect(),
        summary: json!({ "instances": count, "gadget": gadget.to_string(), "exact_norm": exact }),
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (g, comps) = cfg.protocols()?;
    let sim = cfg.sim(g.n())?;
    let budget = cfg.budget();
    let zs = cfg.zs(g.n())?;
    let count = cfg.count();
    let seed = if count > 0 { Some(cfg.seed("the Fourier and norm batteries")?) } else { None };
    let refined: Vec<RefinedProtocol> = comps
        .iter()
        .map(|c| RefinedProtocol::build(&c.protocol, &g, &sim.delta, &budget))
        .collect::<Result<_, _>>()?;

    let mut report = Report::new("verify", cfg);
    let mut tv_table = Table::new(
        "tv",
        &["component", "weight", "z", "tv", "tv_float", "bottom", "bottom_float", "support_ok"],
    );
    let mut marg = Table::new(
        "marginals",
        &[
            "component",
            "node",
            "z",
            "rho",
            "intersection",
            "tv_x",
            "tv_x_float",
            "tv_y",
            "tv_y_float",
            "structured",
            "deficiency_ok",
        ],
    );
    let mut support_bad = Vec::new();
    let mut per_z = Vec::new();
    let (mut nonempty, mut pairs) = (0u64, 0u64);
    for z in &zs {
        let zs = z_str(z);
        let rows: Vec<(Q, Q, bool)> = refined
            .par_iter()
            .map(|r| {
                let truth = with_bottom(&true_transcript_dist(r, z, &budget)?);
                let walk = simulate_exact(r, z, &sim)?.transcripts;
                Ok((tv_distance(&truth, &walk), walk.prob(&lifting::protocol::TranscriptOutcome::Bottom), support_check(&walk, &truth)))
            })
            .collect::<Result<_, lifting::Error>>()?;
        let mut mixture = Q::default();
        let mut worst = Q::default();
        for (c, (tv, bottom, ok)) in comps.iter().zip(rows) {
            if !ok {
                support_bad.push(format!("{} z={zs}", c.name));
            }
            mixture += &c.weight * &tv;
            worst = worst.max(tv.clone());
            let [t, tf] = q_cols(&tv);
            let [b, bf] = q_cols(&bottom);
            tv_table.push(vec![c.name.clone(), fmt_q(&c.weight), zs.clone(), t, tf, b, bf, ok.to_string()]);
        }
        // Components are told apart by the public coin, so the mixture's TV is
        // the weighted sum.
        per_z.push(json!({ "z": zs, "mixture_tv": q_json(&mixture), "worst_component_tv": q_json(&worst) }));
    }
    for (c, r) in comps.iter().zip(&refined) {
        for (id, node) in r.nodes().iter().enumerate() {
            for z in zs.iter().filter(|z| node.rho.consistent_with(z)) {
                let rep = marginals_report(&g, &node.rect, &node.rho, z, &sim.delta, &sim.deficiency_cap, &budget)?;
                pairs += 1;
                nonempty += rep.nonempty as u64;
                let cols = |q: &Option<Q>| q.as_ref().map_or([String::new(), String::new()], q_cols);
                let [tx, txf] = cols(&rep.tv_x);
                let [ty, tyf] = cols(&rep.tv_y);
                marg.push(vec![
                    c.name.clone(),
                    id.to_string(),
                    z_str(z),
                    node.rho.to_string(),
                    rep.intersection.to_string(),
                    tx,
                    txf,
                    ty,
                    tyf,
                    rep.structured.to_string(),
                    rep.deficiency_ok.to_string(),
                ]);
            }
        }
    }
    report.assert("walk_support_within_true_support", (comps.len() * zs.len()) as u64, support_bad);

    let mut results = json!({
        "instance": g.to_string(),
        "delta": fmt_q(&sim.delta),
        "strict_zpp": sim.strict_zpp,
        "per_z": per_z,
        "marginals": {
            "node_z_pairs": pairs,
            "nonempty": nonempty,
            "nonempty_rate": if pairs == 0 { 0.0 } else { nonempty as f64 / pairs as f64 },
        },
    });
    if let Some(seed) = seed {
        let f = fourier_battery(seed, count, g.n(), cfg.fourier_coords, &budget)?;
        report.assert("parity_bias_implies_pointwise_uniformity", f.checked, f.failures);
        let nb = norm_battery(seed, count, &g, &budget)?;
        report.assert("parity_bias_norm_bound", nb.checked, nb.failures);
        results["fourier"] = f.summary;
        results["norm"] = nb.summary;
    }
    report.results = results;
    report.table(tv_table);
    report.table(marg);
    Ok(report)
}
