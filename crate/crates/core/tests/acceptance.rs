//! Acceptance battery. Prints one PASS/FAIL line per criterion (with detail
//! lines indented below) and exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use lifting::affine::{AffineRefinement, Shape};
use lifting::analysis::{
    fourier_pointwise_check, marginals_report, norm_bound_check, support_check, true_transcript_dist, tv_distance,
    with_bottom,
};
use lifting::entropy::{random_setvar, verify_partition_lemma};
use lifting::exact::{fmt_q, q_int, q_ratio, q_to_f64};
use lifting::fixtures::{affine_family, bottom_fixture, one_bit, protocol_family, random_decision_tree, random_protocol};
use lifting::gadget::z_from_index;
use lifting::protocol::{dt_to_protocol, ProtocolTree, RefinedProtocol, TranscriptOutcome};
use lifting::simulate::{ledger_check, simulate_exact, simulate_sample, SimConfig};
use lifting::{Budget, ComposedInstance, ExactDist, GadgetSpec, SetVar, Q};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Allowed deviation for the exact criteria.
const EXACT_TOLERANCE: i64 = 0;
/// Sampler band in standard errors.
const SAMPLER_SIGMAS: f64 = 3.0;
const SAMPLER_RUNS: u64 = 10_000;
const REFINE_PROTOCOLS_PER_SHAPE: u64 = 30;
const PARTITION_SUPPORTS: u64 = 1_200;
const FOURIER_DISTRIBUTIONS: u64 = 1_200;
const NORM_INSTANCES: u64 = 1_200;
const WALK_RUNS: u64 = 10_000;
const CURVE_MS: [u32; 4] = [4, 8, 16, 32];

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Verdict {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    fn with(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }
}

fn nine_tenths() -> Q {
    q_ratio(9, 10)
}

fn exact_zero(q: &Q) -> bool {
    q.abs() <= q_int(EXACT_TOLERANCE)
}

fn refine(p: &ProtocolTree, g: &ComposedInstance) -> RefinedProtocol {
    RefinedProtocol::build(p, g, &nine_tenths(), &Budget::default()).expect("refinement fits the budget")
}

/// The random protocols of criteria 1 and 3.
fn refine_battery() -> Vec<(ComposedInstance, u64, ProtocolTree)> {
    let mut out = Vec::new();
    for (n, m) in [(1, 2), (1, 4), (2, 2), (2, 4)] {
        let g = ComposedInstance::index(n, m).unwrap();
        for seed in 0..REFINE_PROTOCOLS_PER_SHAPE {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 40) ^ ((m as u64) << 32));
            out.push((g.clone(), seed, random_protocol(&mut rng, &g, 4)));
        }
    }
    out
}

fn criterion_refinement(battery: &[(ComposedInstance, u64, ProtocolTree)]) -> Verdict {
    let bad: Vec<String> = battery
        .par_iter()
        .filter_map(|(g, seed, p)| {
            let r = refine(p, g);
            for x in 0..g.alice_size() {
                for y in 0..g.bob_size() {
                    let (bits, out, _) = p.run(x, y);
                    let (t, out_r) = r.run(x, y);
                    if out != out_r || t.project() != bits {
                        return Some(format!("n={} m={} seed={seed} x={x} y={y}", g.n(), g.gadget().alice_size()));
                    }
                }
            }
            None
        })
        .collect();
    let inputs: u128 = battery.iter().map(|(g, _, _)| g.domain_pairs()).sum();
    Verdict::new(
        bad.is_empty(),
        format!("{} protocols, {inputs} inputs, {} mismatches", battery.len(), bad.len()),
    )
    .with(bad.into_iter().take(5).collect())
}

fn criterion_partition() -> Verdict {
    let budget = Budget::default();
    let delta = nine_tenths();
    let results: Vec<Option<String>> = (0..PARTITION_SUPPORTS)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(1..=3usize);
            let m = [2u64, 4, 8][rng.gen_range(0..3)];
            let keep = [0.05, 0.2, 0.5, 0.9][rng.gen_range(0..4)];
            let x = random_setvar(&mut rng, m, k, keep);
            let parts = x.density_restoring_partition(&delta, &budget).unwrap();
            let rep = verify_partition_lemma(&x, &parts, &delta, &budget).unwrap();
            (!(rep.is_partition && rep.holds)).then(|| format!("seed={seed} k={k} m={m} first violation {:?}", rep.first_violation))
        })
        .collect();
    let bad: Vec<String> = results.into_iter().flatten().collect();
    Verdict::new(bad.is_empty(), format!("{PARTITION_SUPPORTS} supports, {} failures", bad.len())).with(bad.into_iter().take(5).collect())
}

fn criterion_structured(battery: &[(ComposedInstance, u64, ProtocolTree)]) -> Verdict {
    let budget = Budget::default();
    let counts: Vec<(usize, Vec<String>)> = battery
        .par_iter()
        .map(|(g, seed, p)| {
            let r = refine(p, g);
            let bad = r.unstructured_nodes(&budget).unwrap();
            (r.len(), bad.iter().map(|id| format!("n={} seed={seed} node={id}", g.n())).collect())
        })
        .collect();
    let nodes: usize = counts.iter().map(|(n, _)| n).sum();
    let bad: Vec<String> = counts.into_iter().flat_map(|(_, b)| b).collect();
    Verdict::new(bad.is_empty(), format!("{nodes} iteration nodes, {} unstructured", bad.len())).with(bad.into_iter().take(5).collect())
}

/// Law on `{0,1}^k` with masses proportional to `weights`.
fn weighted(weights: &[u64]) -> ExactDist<u64> {
    ExactDist::from_counts(weights.iter().enumerate().map(|(v, &w)| (v as u64, w))).unwrap()
}

/// `2^{-k}(1 + ε·χ_I(z))`.
fn single_coefficient(k: usize, set: u64, eps: &Q) -> ExactDist<u64> {
    let base = q_ratio(1, 1 << k);
    ExactDist::from_masses((0..1u64 << k).map(|z| {
        let sign = if (z & set).count_ones() % 2 == 1 { -eps.clone() } else { eps.clone() };
        (z, &base * (Q::from_integer(1.into()) + sign))
    }))
    .unwrap()
}

fn criterion_fourier() -> Verdict {
    let budget = Budget::default();
    let mut cases: Vec<(usize, usize, ExactDist<u64>, &'static str)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..FOURIER_DISTRIBUTIONS {
        let n = if i % 2 == 0 { 2 } else { 4 };
        let k = rng.gen_range(1..=n);
        let size = 1usize << k;
        // Alternate between arbitrary laws and small perturbations of uniform.
        let weights: Vec<u64> = if i % 3 == 0 {
            (0..size).map(|_| rng.gen_range(0..8)).collect()
        } else {
            let scale = 1u64 << rng.gen_range(8..28);
            let spread = scale >> rng.gen_range(6..16);
            (0..size).map(|_| scale + rng.gen_range(0..=spread)).collect()
        };
        if weights.iter().all(|&w| w == 0) {
            continue;
        }
        cases.push((n, k, weighted(&weights), "random"));
    }
    for n in [2usize, 4] {
        for k in 1..=n {
            for set in 1u64..1 << k {
                let deg = set.count_ones() as i32;
                let threshold = Q::new(1.into(), num_bigint::BigInt::from(n).pow((5 * deg) as u32));
                for eps in [threshold.clone(), threshold.clone() * q_ratio(1, 2), threshold * q_int(2), q_ratio(1, 2)] {
                    if eps <= q_int(1) {
                        cases.push((n, k, single_coefficient(k, set, &eps), "single-coefficient"));
                    }
                }
            }
        }
    }
    let results: Vec<(bool, bool, String)> = cases
        .par_iter()
        .map(|(n, k, d, kind)| {
            let c = fourier_pointwise_check(d, *k, *n, &budget).unwrap();
            (c.hypothesis, c.conclusion, format!("{kind} n={n} k={k}"))
        })
        .collect();
    let hyp = results.iter().filter(|r| r.0).count();
    let bad: Vec<String> = results.iter().filter(|r| r.0 && !r.1).map(|r| r.2.clone()).collect();
    Verdict::new(
        bad.is_empty(),
        format!("{} distributions (|J| <= n), {hyp} satisfy the hypothesis, {} counterexamples", results.len(), bad.len()),
    )
    .with(bad.into_iter().take(5).collect())
}

/// Nonempty uniform variable on up to `count` random points of `ambient^k`.
fn sampled_setvar(rng: &mut impl Rng, ambient: u64, k: usize, count: usize) -> SetVar {
    let points: Vec<Vec<u64>> = (0..count).map(|_| (0..k).map(|_| rng.gen_range(0..ambient)).collect()).collect();
    SetVar::new(vec![ambient; k], points).unwrap()
}

fn criterion_norm() -> Verdict {
    let budget = Budget::default();
    let results: Vec<(bool, bool, String)> = (0..NORM_INSTANCES)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = [2u32, 4, 8][rng.gen_range(0..3)];
            let g = GadgetSpec::index(m).unwrap();
            let k = rng.gen_range(1..=2usize);
            let coords: Vec<usize> = match (k, rng.gen_range(0..3)) {
                (1, _) => vec![0],
                (_, 0) => vec![0],
                (_, 1) => vec![1],
                _ => vec![0, 1],
            };
            let (nx, ny) = (rng.gen_range(1..=16), rng.gen_range(1..=64));
            let x = sampled_setvar(&mut rng, g.alice_size(), k, nx);
            let y = sampled_setvar(&mut rng, g.bob_size(), k, ny);
            let r = norm_bound_check(&g, &coords, &x, &y, &budget).unwrap();
            (r.holds, r.exact_norm, format!("seed={seed} m={m} I={coords:?}"))
        })
        .collect();
    let bad: Vec<String> = results.iter().filter(|r| !r.0).map(|r| r.2.clone()).collect();
    let exact = results.iter().filter(|r| r.1).count();
    Verdict::new(
        bad.is_empty(),
        format!("{} instances ({exact} with the exact gadget norm), {} violations", results.len(), bad.len()),
    )
    .with(bad.into_iter().take(5).collect())
}

fn criterion_walks() -> Verdict {
    let g = ComposedInstance::index(2, 4).unwrap();
    let cfg = SimConfig::for_blocks(2);
    let mut protocols: Vec<ProtocolTree> = protocol_family(&g).into_iter().map(|(_, p)| p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    protocols.extend((0..19).map(|_| random_protocol(&mut rng, &g, 4)));
    let refined: Vec<RefinedProtocol> = protocols.iter().map(|p| refine(p, &g)).collect();
    let per = WALK_RUNS / refined.len() as u64 + 1;
    let results: Vec<(u64, Vec<String>)> = refined
        .par_iter()
        .enumerate()
        .map(|(k, r)| {
            let mut bad = Vec::new();
            let mut runs = 0;
            for s in 0..per {
                let seed = (k as u64) << 32 | s;
                let z = z_from_index(2, s % 4);
                let out = simulate_sample(r, &z, &cfg, seed).unwrap();
                runs += 1;
                if out.queries.len() != out.final_rho.fixed().len() {
                    bad.push(format!("protocol {k} seed {seed}: query count"));
                }
                if !ledger_check(&out, &cfg.delta, &g).holds {
                    bad.push(format!("protocol {k} seed {seed}: ledger"));
                }
            }
            (runs, bad)
        })
        .collect();
    let runs: u64 = results.iter().map(|r| r.0).sum();
    let bad: Vec<String> = results.into_iter().flat_map(|r| r.1).collect();
    Verdict::new(bad.is_empty() && runs >= WALK_RUNS, format!("{runs} walks, {} violations", bad.len()))
        .with(bad.into_iter().take(5).collect())
}

fn criterion_fixture() -> Verdict {
    let (g, p) = one_bit();
    let r = refine(&p, &g);
    let cfg = SimConfig {
        strict_zpp: true,
        ..SimConfig::for_blocks(1)
    };
    let mut pass = true;
    let mut details = Vec::new();
    for zi in 0..2 {
        let z = z_from_index(1, zi);
        let truth = with_bottom(&true_transcript_dist(&r, &z, &Budget::default()).unwrap());
        let sim = simulate_exact(&r, &z, &cfg).unwrap();
        let tv = tv_distance(&truth, &sim.transcripts);
        let support = support_check(&sim.transcripts, &truth);
        pass &= exact_zero(&tv) && support;
        details.push(format!("z={} TV={} support_check={support}", zi, fmt_q(&tv)));
    }
    Verdict::new(pass, "one-bit fixture, strict mode").with(details)
}

fn criterion_conversion() -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (n, m) in [(1, 2), (1, 4), (2, 2), (2, 4)] {
        let g = ComposedInstance::index(n, m).unwrap();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_decision_tree(&mut rng, n, n);
            let p = dt_to_protocol(&t, &g).unwrap();
            checked += 1;
            if p.depth() != t.depth() * (m.trailing_zeros() as usize + 1) {
                bad.push(format!("n={n} m={m} seed={seed}: cost {} for depth {}", p.depth(), t.depth()));
            }
            for x in 0..g.alice_size() {
                for y in 0..g.bob_size() {
                    if p.run(x, y).1 != t.eval(&z_from_index(n, g.output_index(x, y))).0 {
                        bad.push(format!("n={n} m={m} seed={seed}: output at x={x} y={y}"));
                    }
                }
            }
        }
    }
    Verdict::new(bad.is_empty(), format!("{checked} trees, {} violations", bad.len())).with(bad.into_iter().take(5).collect())
}

fn median(values: &mut [Q]) -> Q {
    values.sort();
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2].clone()
    } else {
        (&values[k / 2 - 1] + &values[k / 2]) * q_ratio(1, 2)
    }
}

/// Exact TV(t_z, t′_z) of every family protocol and `z` at one shape, from
/// the affine engine; where Bob's domain fits the budget the explicit engine
/// recomputes every value and must agree exactly.
fn curve_point(n: usize, m: u32) -> (Vec<(String, u64, Q)>, Option<bool>) {
    let budget = Budget::default();
    let shape = Shape::new(n, m).unwrap();
    let cfg = SimConfig::for_blocks(n);
    let explicit = ComposedInstance::index(n, m).ok().filter(|g| g.domain_pairs() <= budget.pairs as u128);
    let rows: Vec<(String, u64, Q, Option<bool>)> = affine_family(&shape)
        .into_par_iter()
        .flat_map_iter(|(name, t)| {
            let a = AffineRefinement::build(&t, &shape, &cfg.delta, &budget).unwrap();
            let r = explicit.as_ref().map(|g| refine(&t.to_protocol(g, &budget).unwrap(), g));
            let cfg = cfg.clone();
            (0..1u64 << n).map(move |zi| {
                let z = z_from_index(n, zi);
                let tv = tv_distance(&with_bottom(&a.slice_law(&z).unwrap()), &a.walk_law(&z, &cfg).unwrap().transcripts);
                let agrees = r.as_ref().map(|r| {
                    let truth = with_bottom(&true_transcript_dist(r, &z, &budget).unwrap());
                    tv_distance(&truth, &simulate_exact(r, &z, &cfg).unwrap().transcripts) == tv
                });
                (name.to_string(), zi, tv, agrees)
            })
        })
        .collect();
    let agrees = rows.iter().map(|r| r.3).collect::<Option<Vec<bool>>>().map(|v| v.iter().all(|&b| b));
    (rows.into_iter().map(|(a, b, c, _)| (a, b, c)).collect(), agrees)
}

fn criterion_curve() -> Verdict {
    let mut details = vec!["n m protocol z tv".to_string()];
    let mut medians: BTreeMap<(usize, u32), Q> = BTreeMap::new();
    let mut agreement = true;
    for n in [1usize, 2] {
        for m in CURVE_MS {
            let (rows, agrees) = curve_point(n, m);
            for (name, zi, tv) in &rows {
                details.push(format!("{n} {m} {name} {zi:0w$b} {} ({:.6})", fmt_q(tv), q_to_f64(tv), w = n));
            }
            let mut tvs: Vec<Q> = rows.into_iter().map(|r| r.2).collect();
            let mean = tvs.iter().sum::<Q>() * q_ratio(1, tvs.len() as u64);
            let max = tvs.iter().max().cloned().unwrap_or_default();
            let med = median(&mut tvs);
            let check = match agrees {
                Some(true) => "explicit engine agrees",
                Some(false) => "EXPLICIT ENGINE DISAGREES",
                None => "explicit engine over budget",
            };
            agreement &= agrees != Some(false);
            details.push(format!(
                "n={n} m={m}: median {} ({:.6}), mean {:.6}, max {:.6}; {check}",
                fmt_q(&med),
                q_to_f64(&med),
                q_to_f64(&mean),
                q_to_f64(&max)
            ));
            medians.insert((n, m), med);
        }
    }
    let two = medians[&(2, 32)] <= medians[&(2, 4)];
    let one = CURVE_MS.windows(2).all(|w| medians[&(1, w[1])] <= medians[&(1, w[0])]);
    details.push(format!("n=2 median at m=32 <= median at m=4: {two}"));
    details.push(format!("n=1 medians non-increasing in m: {one}"));
    Verdict::new(agreement && one && two, "closeness curve, bundled family, every z").with(details)
}

fn frequencies(name: &str, r: &RefinedProtocol, z: &[bool], cfg: &SimConfig, seed: u64) -> (bool, String) {
    let exact = simulate_exact(r, z, cfg).unwrap();
    let mut counts: BTreeMap<TranscriptOutcome, u64> = BTreeMap::new();
    for s in 0..SAMPLER_RUNS {
        let out = simulate_sample(r, z, cfg, seed.wrapping_mul(1 << 20).wrapping_add(s)).unwrap();
        *counts.entry(out.result.outcome()).or_insert(0) += 1;
    }
    let mut worst = 0.0f64;
    let mut ok = counts.keys().all(|t| !exact.transcripts.prob(t).is_zero());
    for (t, q) in exact.transcripts.iter() {
        let p = q_to_f64(q);
        let freq = *counts.get(t).unwrap_or(&0) as f64 / SAMPLER_RUNS as f64;
        let se = (p * (1.0 - p) / SAMPLER_RUNS as f64).sqrt();
        if se > 0.0 {
            worst = worst.max((freq - p).abs() / se);
        } else {
            ok &= freq == p;
        }
    }
    ok &= worst <= SAMPLER_SIGMAS;
    (ok, format!("{name}: {} outcomes, worst deviation {worst:.2} SE", exact.transcripts.len()))
}

fn criterion_sampler() -> Verdict {
    let mut jobs: Vec<(String, ComposedInstance, ProtocolTree, Vec<bool>)> = Vec::new();
    let (g, p) = bottom_fixture();
    jobs.push(("bottom fixture z=0".into(), g, p, vec![false]));
    let (g, p) = one_bit();
    jobs.push(("one-bit fixture z=1".into(), g, p, vec![true]));
    for (n, m) in [(1, 4), (2, 4)] {
        let g = ComposedInstance::index(n, m).unwrap();
        for (name, p) in protocol_family(&g) {
            jobs.push((format!("{name} n={n} m={m} z=1^n"), g.clone(), p, vec![true; n]));
        }
    }
    let results: Vec<(bool, String)> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, (name, g, p, z))| frequencies(name, &refine(p, g), z, &SimConfig::for_blocks(g.n()), k as u64))
        .collect();
    let pass = results.iter().all(|r| r.0);
    Verdict::new(pass, format!("{} fixtures x {SAMPLER_RUNS} samples, band {SAMPLER_SIGMAS} SE", results.len()))
        .with(results.into_iter().map(|r| r.1).collect())
}

fn criterion_marginals() -> Verdict {
    let budget = Budget::default();
    let cap = q_int(8);
    let mut details =
        vec!["report only: the closeness bound is asymptotic in m and is not asserted at these sizes".to_string()];
    for (n, m) in [(1, 4), (1, 8), (1, 16), (2, 4), (2, 8)] {
        let g = ComposedInstance::index(n, m).unwrap();
        let mut tv_x = Vec::new();
        let mut tv_y = Vec::new();
        let mut total = 0u64;
        let mut nonempty = 0u64;
        let mut held = 0u64;
        for (_, p) in protocol_family(&g) {
            let r = refine(&p, &g);
            for node in r.nodes() {
                for zi in 0..1u64 << n {
                    let z = z_from_index(n, zi);
                    if !node.rho.consistent_with(&z) {
                        continue;
                    }
                    let rep = marginals_report(&g, &node.rect, &node.rho, &z, &nine_tenths(), &cap, &budget).unwrap();
                    total += 1;
                    nonempty += rep.nonempty as u64;
                    held += rep.preconditions_held() as u64;
                    if let (Some(a), Some(b)) = (rep.tv_x, rep.tv_y) {
                        tv_x.push(a);
                        tv_y.push(b);
                    }
                }
            }
        }
        let mx = |v: &[Q]| v.iter().max().map(q_to_f64).unwrap_or(0.0);
        let (med_x, med_y) = if tv_x.is_empty() {
            (0.0, 0.0)
        } else {
            (q_to_f64(&median(&mut tv_x)), q_to_f64(&median(&mut tv_y)))
        };
        details.push(format!(
            "n={n} m={m}: {total} (node, z) pairs, preconditions {held}, nonempty rate {:.3}, tv_x median {med_x:.4} max {:.4}, tv_y median {med_y:.4} max {:.4}",
            nonempty as f64 / total as f64,
            mx(&tv_x),
            mx(&tv_y),
        ));
    }
    Verdict::new(true, "marginals batteries (report only)").with(details)
}

type Criterion<'a> = (&'static str, &'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() -> ExitCode {
    let battery = refine_battery();
    let criteria: Vec<Criterion> = vec![
        ("1", "refinement equivalence [exact, tol 0]", Box::new(|| criterion_refinement(&battery))),
        ("2", "density-restoring partition lemma [exact, tol 0]", Box::new(criterion_partition)),
        ("3", "structured invariant [exact, tol 0]", Box::new(|| criterion_structured(&battery))),
        ("4", "parity-to-pointwise implication [exact, tol 0]", Box::new(criterion_fourier)),
        ("5", "parity norm bound [exact, tol 0]", Box::new(criterion_norm)),
        ("6", "query locality and ledger [exact, tol 0]", Box::new(criterion_walks)),
        ("7", "one-bit fixture TV and support [exact, tol 0]", Box::new(criterion_fixture)),
        ("8", "decision tree conversion [exact, tol 0]", Box::new(criterion_conversion)),
        ("9", "closeness curve [measured trend]", Box::new(criterion_curve)),
        ("10", "sampler consistency [statistical, 3 SE]", Box::new(criterion_sampler)),
        ("11", "marginals batteries [report only]", Box::new(criterion_marginals)),
    ];
    let mut failed = 0;
    for (id, name, run) in &criteria {
        let start = Instant::now();
        let v = run();
        println!(
            "{} criterion {id}: {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.summary,
            start.elapsed().as_secs_f64()
        );
        for d in &v.details {
            println!("    {d}");
        }
        failed += !v.pass as usize;
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
