use lifting::analysis::{dt_error, protocol_error, true_transcript_dist, tv_distance, with_bottom};
use lifting::exact::fmt_q;
use lifting::fixtures::{and_with_error_third, random_decision_tree};
use lifting::gadget::z_from_index;
use lifting::protocol::{dt_eval, dt_to_protocol, RandomizedDecisionTree, RandomizedProtocol, RefinedProtocol};
use lifting::simulate::{protocol_to_dt, simulate_exact, SimConfig};
use lifting::{Budget, ComposedInstance, OuterFunction, Q};
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::report::{q_cols, Report, Table};
use crate::rng::case_rng;
use crate::CliError;

struct Case {
    name: String,
    tree: RandomizedDecisionTree,
}

struct Outcome {
    name: String,
    depth: usize,
    cost: usize,
    expected_cost: usize,
    disagreements: Vec<String>,
    round_trip_depth: usize,
    errors: Option<Errors>,
}

struct Errors {
    tree: Q,
    protocol: Q,
    round_trip: Q,
    /// Largest mixture TV between the walk and the true transcript law.
    simulation_loss: Q,
}

fn simulation_loss(p: &RandomizedProtocol, g: &ComposedInstance, sim: &SimConfig, budget: &Budget) -> Result<Q, lifting::Error> {
    let refined: Vec<(Q, RefinedProtocol)> = p
        .components()
        .iter()
        .map(|(w, t)| Ok((w.clone(), RefinedProtocol::build(t, g, &sim.delta, budget)?)))
        .collect::<Result<_, lifting::Error>>()?;
    let mut worst = Q::default();
    for zi in 0..1u64 << g.n() {
        let z = z_from_index(g.n(), zi);
        let mut tv = Q::default();
        for (w, r) in &refined {
            let truth = with_bottom(&true_transcript_dist(r, &z, budget)?);
            tv += w * tv_distance(&truth, &simulate_exact(r, &z, sim)?.transcripts);
        }
        worst = worst.max(tv);
    }
    Ok(worst)
}

fn convert(case: &Case, g: &ComposedInstance, f: Option<&OuterFunction>, sim: &SimConfig, budget: &Budget) -> Result<Outcome, lifting::Error> {
    let bits_per_query = g.gadget().alice_bits().expect("index gadget") as usize + 1;
    let mut comps = Vec::new();
    let mut disagreements = Vec::new();
    let mut cost = 0;
    for (ci, (w, t)) in case.tree.components().iter().enumerate() {
        let p = dt_to_protocol(t, g)?;
        cost = cost.max(p.depth());
        if p.depth() != t.depth() * bits_per_query {
            disagreements.push(format!("{} component {}: cost {} for depth {}", case.name, ci + 1, p.depth(), t.depth()));
        }
        for x in 0..g.alice_size() {
            for y in 0..g.bob_size() {
                let z = z_from_index(g.n(), g.output_index(x, y));
                if p.run(x, y).1 != dt_eval(t, &z).0 {
                    disagreements.push(format!("{} component {} x={x} y={y}", case.name, ci + 1));
                }
            }
        }
        comps.push((w.clone(), p));
    }
    let protocol = RandomizedProtocol::new(comps)?;
    let round_trip = protocol_to_dt(&protocol, g, sim, budget)?;
    let errors = f
        .map(|f| -> Result<Errors, lifting::Error> {
            Ok(Errors {
                tree: dt_error(&case.tree, f)?,
                protocol: protocol_error(&protocol, g, f, budget)?,
                round_trip: dt_error(&round_trip, f)?,
                simulation_loss: simulation_loss(&protocol, g, sim, budget)?,
            })
        })
        .transpose()?;
    Ok(Outcome {
        name: case.name.clone(),
        depth: case.tree.depth(),
        cost,
        expected_cost: case.tree.depth() * bits_per_query,
        disagreements,
        round_trip_depth: round_trip.depth(),
        errors,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let budget = cfg.budget();
    let mut function = cfg.outer_function()?;
    let (g, cases) = match (&cfg.fixture, cfg.decision_tree()?) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either tree or fixture, not both".into())),
        (Some(name), None) if name == "and_third" => {
            if cfg.n.is_some_and(|n| n != 2) {
                return Err(CliError::Config("and_third needs n = 2".into()));
            }
            let g = ComposedInstance::index(2, cfg.m.unwrap_or(4))?;
            let (f, t, _) = and_with_error_third(&g)?;
            function = function.or(Some(f));
            (g, vec![Case { name: "and_third".into(), tree: t }])
        }
        (Some(name), None) => return Err(CliError::Config(format!("convert has no fixture {name:?}; use and_third"))),
        (None, Some((header, tree))) => {
            let g = match header {
                Some(g) => g,
                None => {
                    let n = cfg.n.ok_or_else(|| CliError::Config("the tree file has no instance line; set n".into()))?;
                    ComposedInstance::index(n, cfg.m.unwrap_or(4))?
                }
            };
            tree.validate(g.n())?;
            (g, vec![Case { name: "tree".into(), tree }])
        }
        (None, None) => {
            let seed = cfg.seed("drawing random trees")?;
            let g = ComposedInstance::index(cfg.n.unwrap_or(2), cfg.m.unwrap_or(4))?;
            let cases = (0..cfg.count())
                .map(|i| {
                    let t = random_decision_tree(&mut case_rng(seed, i), g.n(), g.n());
                    Case {
                        name: format!("random{i}"),
                        tree: RandomizedDecisionTree::point(t),
                    }
                })
                .collect();
            (g, cases)
        }
    };
    if let Some(f) = &function {
        if f.n() != g.n() {
            return Err(CliError::Config(format!("the outer function has n = {}, the instance n = {}", f.n(), g.n())));
        }
    }
    if g.gadget().alice_bits().is_none() {
        return Err(CliError::Config("conversion needs an index gadget".into()));
    }
    if g.domain_pairs() > budget.pairs as u128 {
        return Err(lifting::Error::Resource {
            what: "conversion check".into(),
            required: format!("{} pairs", g.domain_pairs()),
            budget: format!("{} pairs", budget.pairs),
        }
        .into());
    }
    let sim = cfg.sim(g.n())?;
    let outcomes: Vec<Outcome> = cases
        .par_iter()
        .map(|c| convert(c, &g, function.as_ref(), &sim, &budget))
        .collect::<Result<_, lifting::Error>>()?;

    let mut report = Report::new("convert", cfg);
    report.assert(
        "protocol_cost_and_outputs_match_tree",
        outcomes.len() as u64,
        outcomes.iter().flat_map(|o| o.disagreements.iter().cloned()).collect(),
    );
    if function.is_some() {
        report.assert(
            "round_trip_error_within_simulation_loss",
            outcomes.len() as u64,
            outcomes
                .iter()
                .filter(|o| o.errors.as_ref().is_some_and(|e| e.round_trip > &e.protocol + &e.simulation_loss))
                .map(|o| o.name.clone())
                .collect(),
        );
    }
    let mut t = Table::new(
        "convert",
        &[
            "case",
            "depth",
            "protocol_cost",
            "expected_cost",
            "round_trip_depth",
            "tree_error",
            "tree_error_float",
            "protocol_error",
            "protocol_error_float",
            "round_trip_error",
            "round_trip_error_float",
            "simulation_loss",
            "simulation_loss_float",
        ],
    );
    for o in &outcomes {
        let mut row = vec![
            o.name.clone(),
            o.depth.to_string(),
            o.cost.to_string(),
            o.expected_cost.to_string(),
            o.round_trip_depth.to_string(),
        ];
        match &o.errors {
            Some(e) => {
                for q in [&e.tree, &e.protocol, &e.round_trip, &e.simulation_loss] {
                    row.extend(q_cols(q));
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 8)),
        }
        t.push(row);
    }
    report.results = json!({
        "instance": g.to_string(),
        "function": function.as_ref().map(|f| f.to_string()),
        "cases": outcomes.len(),
        "max_round_trip_depth": outcomes.iter().map(|o| o.round_trip_depth).max().unwrap_or(0),
        "worst_round_trip_error": outcomes.iter().filter_map(|o| o.errors.as_ref().map(|e| e.round_trip.clone())).max().map(|q| fmt_q(&q)),
    });
    report.table(t);
    Ok(report)
}
