//! The randomized decision tree that generates refined transcripts by querying
//! bits of `z`.
//!
//! At each iteration the walk pretends `x` and `y` are uniform over the current
//! rectangle: Bob's bit `b` is drawn with probability `|Y^b|/|Y|`, Alice's bit
//! with `|X^b|/|X|` and her part with `|X^i|/|X^b|`. Bob's reply on the newly
//! fixed blocks `I` is read off `z_I` by querying it; when no `y` in `Y` can
//! produce that reply the walk outputs `⊥`.
//!
//! Every Alice iteration adds a ledger row tracking the potential
//! `Φ = D∞(X_free) = |free|·log2 a - log2|X|`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::dist::{ExactDist, MassAccumulator};
use crate::error::{Error, Result};
use crate::exact::{big_pow, q_from_big, q_int, q_ratio, Bits, Q};
use crate::gadget::{Budget, ComposedInstance, PartialAssignment, Subset};
use crate::protocol::{
    DecisionTree, Message, Output, Player, RandomizedDecisionTree, RandomizedProtocol, RefinedPart, RefinedProtocol,
    Step, Transcript, TranscriptOutcome,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimConfig {
    /// Density rate used when refining; in `(0, 1)`.
    pub delta: BigRational,
    /// Bits of deficiency of `Y` beyond which the strict mode halts.
    pub deficiency_cap: BigRational,
    /// Output `⊥` instead of exceeding this many queries.
    pub query_cap: Option<usize>,
    /// Halt with `⊥` at any iteration whose `D∞(Y)` exceeds the cap.
    pub strict_zpp: bool,
}

impl SimConfig {
    /// Rate 9/10, cap `n³` bits, no query cap, strict mode off.
    pub fn for_blocks(n: usize) -> Self {
        SimConfig {
            delta: q_ratio(9, 10),
            deficiency_cap: q_int((n as i64).pow(3)),
            query_cap: None,
            strict_zpp: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_positive() || self.delta >= Q::one() {
            return Err(Error::domain("density rate must lie in (0, 1)"));
        }
        if !self.deficiency_cap.is_positive() {
            return Err(Error::domain("deficiency cap must be positive"));
        }
        if self.query_cap == Some(0) {
            return Err(Error::domain("query cap must be positive"));
        }
        Ok(())
    }
}

/// Why a walk output `⊥`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Failure {
    /// `z_I` is not a reply any `y ∈ Y` can send.
    ImpossibleMessage,
    /// Strict mode: `D∞(Y)` exceeded the cap.
    DeficiencyCutoff,
    /// The next iteration would exceed the query cap.
    QueryCap,
}

impl Failure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Failure::ImpossibleMessage => "impossible-s",
            Failure::DeficiencyCutoff => "deficiency-cutoff",
            Failure::QueryCap => "query-cap",
        }
    }
}

impl Serialize for Failure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimResult {
    Transcript(Transcript),
    Bottom(Failure),
}

impl SimResult {
    pub fn outcome(&self) -> TranscriptOutcome {
        match self {
            SimResult::Transcript(t) => TranscriptOutcome::Transcript(t.clone()),
            SimResult::Bottom(_) => TranscriptOutcome::Bottom,
        }
    }
}

/// One iteration of the potential ledger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LedgerRow {
    /// Iteration number along the walk, from 0.
    pub iteration: usize,
    pub player: Player,
    /// `log2(|X|/|X^b|)`; zero for Bob.
    pub gamma: Bits,
    /// `log2(|X^b|/|X^{≥i}|)`; zero for Bob.
    pub delta_i: Bits,
    /// Blocks queried in this iteration.
    pub queries: usize,
    pub potential_before: Bits,
    pub potential_after: Bits,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub result: SimResult,
    /// Leaf value, or `⊥` on failure.
    pub output: Output,
    /// Queried blocks in query order (1-based in serialized form).
    #[serde(serialize_with = "one_based")]
    pub queries: Vec<usize>,
    pub ledger: Vec<LedgerRow>,
    /// Partial assignment when the walk stopped, including an attempted but
    /// impossible reply.
    #[serde(serialize_with = "display")]
    pub final_rho: PartialAssignment,
}

fn one_based<S: Serializer>(v: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|i| i + 1))
}

fn display<S: Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn check_z(r: &RefinedProtocol, z: &[bool]) -> Result<()> {
    if z.len() != r.instance().n() {
        return Err(Error::domain(format!("z has {} bits, instance has {} blocks", z.len(), r.instance().n())));
    }
    Ok(())
}

fn potential(g: &ComposedInstance, free: usize, x: &Subset) -> Bits {
    Bits::log2(q_from_big(big_pow(g.gadget().alice_size(), free as u64), BigUint::from(x.len())))
}

fn y_deficiency(g: &ComposedInstance, y: &Subset) -> Bits {
    Bits::log2(q_from_big(BigUint::from(g.bob_size()), BigUint::from(y.len())))
}

fn over_cap(r: &RefinedProtocol, id: usize, cfg: &SimConfig) -> bool {
    cfg.strict_zpp && y_deficiency(r.instance(), &r.node(id).rect.y) > Bits::rational(&cfg.deficiency_cap)
}

fn ledger_row(r: &RefinedProtocol, id: usize, iteration: usize, xb: &Subset, part: &RefinedPart) -> LedgerRow {
    let g = r.instance();
    let node = r.node(id);
    let free = node.rho.free().len();
    LedgerRow {
        iteration,
        player: Player::Alice,
        gamma: Bits::log2_ratio(node.rect.x.len(), xb.len()),
        delta_i: part.delta.clone(),
        queries: part.fixed.len(),
        potential_before: potential(g, free, &node.rect.x),
        potential_after: potential(g, free - part.fixed.len(), &part.x),
    }
}

fn bob_row(r: &RefinedProtocol, id: usize, iteration: usize) -> LedgerRow {
    let node = r.node(id);
    let phi = potential(r.instance(), node.rho.free().len(), &node.rect.x);
    LedgerRow {
        iteration,
        player: Player::Bob,
        gamma: Bits::zero(),
        delta_i: Bits::zero(),
        queries: 0,
        potential_before: phi.clone(),
        potential_after: phi,
    }
}

fn draw(rng: &mut ChaCha8Rng, weights: &[u64]) -> usize {
    let total: u64 = weights.iter().sum();
    let mut t = rng.gen_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if t < w {
            return i;
        }
        t -= w;
    }
    unreachable!("draw below the total weight")
}

fn child_size_y(r: &RefinedProtocol, c: Option<usize>) -> u64 {
    c.map_or(0, |c| r.node(c).rect.y.len())
}

/// One seeded run of the walk on `z`.
pub fn simulate_sample(r: &RefinedProtocol, z: &[bool], cfg: &SimConfig, seed: u64) -> Result<SimOutcome> {
    check_z(r, z)?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut msgs = Vec::new();
    let mut queries = Vec::new();
    let mut ledger = Vec::new();
    let mut id = r.root();
    let mut iteration = 0;
    let finish = |result: SimResult, output: Output, queries: Vec<usize>, ledger, rho: PartialAssignment| SimOutcome {
        result,
        output,
        queries,
        ledger,
        final_rho: rho,
    };
    loop {
        let node = r.node(id);
        if over_cap(r, id, cfg) {
            let rho = node.rho.clone();
            return Ok(finish(SimResult::Bottom(Failure::DeficiencyCutoff), Output::Bottom, queries, ledger, rho));
        }
        match &node.step {
            Step::Leaf(o) => {
                return Ok(finish(SimResult::Transcript(Transcript(msgs)), *o, queries, ledger, node.rho.clone()));
            }
            Step::Bob(children) => {
                let b = draw(&mut rng, &[child_size_y(r, children[0]), child_size_y(r, children[1])]);
                msgs.push(Message::Bit(b == 1));
                ledger.push(bob_row(r, id, iteration));
                id = children[b].expect("drawn branch has positive mass");
            }
            Step::Alice(branches) => {
                let sizes: Vec<u64> = branches.iter().map(|br| br.as_ref().map_or(0, |br| br.x.len())).collect();
                let b = draw(&mut rng, &sizes);
                let branch = branches[b].as_ref().expect("drawn branch has positive mass");
                let psizes: Vec<u64> = branch.parts.iter().map(|p| p.x.len()).collect();
                let part = &branch.parts[draw(&mut rng, &psizes)];
                msgs.push(Message::Bit(b == 1));
                msgs.push(Message::Part(part.index));
                if cfg.query_cap.is_some_and(|cap| queries.len() + part.fixed.len() > cap) {
                    let rho = node.rho.clone();
                    return Ok(finish(SimResult::Bottom(Failure::QueryCap), Output::Bottom, queries, ledger, rho));
                }
                let s: Vec<bool> = part.fixed.iter().map(|&i| z[i]).collect();
                queries.extend(&part.fixed);
                ledger.push(ledger_row(r, id, iteration, &branch.x, part));
                match part.child(&s) {
                    Some(c) => {
                        msgs.push(Message::Fix(s));
                        id = c;
                    }
                    None => {
                        let mut rho = node.rho.clone();
                        for (&i, &v) in part.fixed.iter().zip(&s) {
                            rho.set(i, v);
                        }
                        return Ok(finish(SimResult::Bottom(Failure::ImpossibleMessage), Output::Bottom, queries, ledger, rho));
                    }
                }
            }
        }
        iteration += 1;
    }
}

/// Exact law of the walk on one `z`.
#[derive(Clone, Debug)]
pub struct ExactSim {
    pub transcripts: ExactDist<TranscriptOutcome>,
    pub queries: ExactDist<usize>,
    pub outputs: ExactDist<Output>,
    /// Probability of each failure reason (reasons with zero mass omitted).
    pub failures: BTreeMap<Failure, Q>,
}

impl ExactSim {
    pub fn bottom_mass(&self) -> Q {
        self.transcripts.prob(&TranscriptOutcome::Bottom)
    }
}

/// Multiplies the walk's branch probabilities exactly over the whole refined
/// tree.
pub fn simulate_exact(r: &RefinedProtocol, z: &[bool], cfg: &SimConfig) -> Result<ExactSim> {
    check_z(r, z)?;
    cfg.validate()?;
    let mut transcripts = MassAccumulator::new();
    let mut queries = MassAccumulator::new();
    let mut outputs = MassAccumulator::new();
    let mut failures: BTreeMap<Failure, Q> = BTreeMap::new();
    let mut record = |outcome: TranscriptOutcome, out: Output, nq: usize, fail: Option<Failure>, mass: Q| {
        if let Some(f) = fail {
            *failures.entry(f).or_insert_with(Q::zero) += &mass;
        }
        transcripts.add(outcome, mass.clone());
        queries.add(nq, mass.clone());
        outputs.add(out, mass);
    };
    let mut stack: Vec<(usize, Q, Vec<Message>, usize)> = vec![(r.root(), Q::one(), Vec::new(), 0)];
    while let Some((id, mass, msgs, nq)) = stack.pop() {
        let node = r.node(id);
        if over_cap(r, id, cfg) {
            record(TranscriptOutcome::Bottom, Output::Bottom, nq, Some(Failure::DeficiencyCutoff), mass);
            continue;
        }
        match &node.step {
            Step::Leaf(o) => record(TranscriptOutcome::Transcript(Transcript(msgs)), *o, nq, None, mass),
            Step::Bob(children) => {
                let total = node.rect.y.len();
                for (b, c) in children.iter().enumerate() {
                    if let Some(c) = c {
                        let mut m = msgs.clone();
                        m.push(Message::Bit(b == 1));
                        let p = q_ratio(r.node(*c).rect.y.len(), total);
                        stack.push((*c, &mass * p, m, nq));
                    }
                }
            }
            Step::Alice(branches) => {
                let total = node.rect.x.len();
                for (b, branch) in branches.iter().enumerate() {
                    let Some(branch) = branch else { continue };
                    let pb = q_ratio(branch.x.len(), total);
                    for part in &branch.parts {
                        let mass_i = &mass * &pb * q_ratio(part.x.len(), branch.x.len());
                        let mut m = msgs.clone();
                        m.push(Message::Bit(b == 1));
                        m.push(Message::Part(part.index));
                        if cfg.query_cap.is_some_and(|cap| nq + part.fixed.len() > cap) {
                            record(TranscriptOutcome::Bottom, Output::Bottom, nq, Some(Failure::QueryCap), mass_i);
                            continue;
                        }
                        let s: Vec<bool> = part.fixed.iter().map(|&i| z[i]).collect();
                        let nq2 = nq + part.fixed.len();
                        match part.child(&s) {
                            Some(c) => {
                                m.push(Message::Fix(s));
                                stack.push((c, mass_i, m, nq2));
                            }
                            None => record(TranscriptOutcome::Bottom, Output::Bottom, nq2, Some(Failure::ImpossibleMessage), mass_i),
                        }
                    }
                }
            }
        }
    }
    Ok(ExactSim {
        transcripts: transcripts.finish()?,
        queries: queries.finish()?,
        outputs: outputs.finish()?,
        failures,
    })
}

/// Result of [`ledger_check`].
#[derive(Clone, Debug, Serialize)]
pub struct LedgerReport {
    /// Per row: `after ≤ before + γ + δ_i - (1-δ)·q·log2 a`.
    pub rows_ok: Vec<bool>,
    /// `(1-δ)·log2 a·(total queries)`.
    pub aggregate_lhs: Bits,
    /// `Σ(γ + δ_i)` plus the potential at the root.
    pub aggregate_rhs: Bits,
    pub holds: bool,
}

/// Checks the ledger of one run in exact arithmetic.
pub fn ledger_check(outcome: &SimOutcome, delta: &BigRational, g: &ComposedInstance) -> LedgerReport {
    let drop = Q::one() - delta;
    let log_a = Bits::log2_int(g.gadget().alice_size());
    let mut rows_ok = Vec::with_capacity(outcome.ledger.len());
    let mut income = Bits::zero();
    let mut total_q = 0u64;
    for row in &outcome.ledger {
        let spent = log_a.scale(&(&drop * q_int(row.queries as i64)));
        let bound = &(&(&row.potential_before + &row.gamma) + &row.delta_i) - &spent;
        rows_ok.push(row.potential_after <= bound);
        income = &(&income + &row.gamma) + &row.delta_i;
        total_q += row.queries as u64;
    }
    let initial = outcome.ledger.first().map_or(Bits::zero(), |r| r.potential_before.clone());
    let lhs = log_a.scale(&(&drop * q_int(total_q as i64)));
    let rhs = &income + &initial;
    let queries_match = total_q == outcome.queries.len() as u64;
    let holds = queries_match && rows_ok.iter().all(|&ok| ok) && lhs <= rhs;
    LedgerReport {
        rows_ok,
        aggregate_lhs: lhs,
        aggregate_rhs: rhs,
        holds,
    }
}

/// The walk as a chance tree whose branches depend on queried bits.
enum WalkNode {
    Leaf(Output),
    Chance(Vec<(Q, WalkNode)>),
    /// Queries `coords` in order; `children` indexed by the reply bits with the
    /// first coordinate most significant.
    Query { coords: Vec<usize>, children: Vec<WalkNode> },
}

fn walk_tree(r: &RefinedProtocol, id: usize, nq: usize, cfg: &SimConfig) -> WalkNode {
    let node = r.node(id);
    if over_cap(r, id, cfg) {
        return WalkNode::Leaf(Output::Bottom);
    }
    match &node.step {
        Step::Leaf(o) => WalkNode::Leaf(*o),
        Step::Bob(children) => {
            let total = node.rect.y.len();
            WalkNode::Chance(
                children
                    .iter()
                    .flatten()
                    .map(|&c| (q_ratio(r.node(c).rect.y.len(), total), walk_tree(r, c, nq, cfg)))
                    .collect(),
            )
        }
        Step::Alice(branches) => {
            let total = node.rect.x.len();
            let mut out = Vec::new();
            for branch in branches.iter().flatten() {
                for part in &branch.parts {
                    let p = q_ratio(part.x.len(), total);
                    let sub = if cfg.query_cap.is_some_and(|cap| nq + part.fixed.len() > cap) {
                        WalkNode::Leaf(Output::Bottom)
                    } else {
                        let nq2 = nq + part.fixed.len();
                        WalkNode::Query {
                            coords: part.fixed.clone(),
                            children: part
                                .replies
                                .iter()
                                .map(|c| c.map_or(WalkNode::Leaf(Output::Bottom), |c| walk_tree(r, c, nq2, cfg)))
                                .collect(),
                        }
                    };
                    out.push((p, sub));
                }
            }
            WalkNode::Chance(out)
        }
    }
}

/// Endpoints of the sub-intervals of `[lo, hi)` at which some chance choice in
/// the subtree changes, when one uniform `r ∈ [0,1)` drives every choice.
fn breakpoints(w: &WalkNode, lo: &Q, hi: &Q, out: &mut Vec<Q>) {
    match w {
        WalkNode::Leaf(_) => {}
        WalkNode::Chance(items) => {
            let width = hi - lo;
            let mut at = lo.clone();
            for (p, sub) in items {
                let next = &at + &width * p;
                out.push(next.clone());
                breakpoints(sub, &at, &next, out);
                at = next;
            }
        }
        WalkNode::Query { children, .. } => {
            for c in children {
                breakpoints(c, lo, hi, out);
            }
        }
    }
}

/// The deterministic tree followed when the driving uniform equals `t`.
fn fix_randomness(w: &WalkNode, lo: &Q, hi: &Q, t: &Q) -> DecisionTree {
    match w {
        WalkNode::Leaf(o) => DecisionTree::leaf(*o),
        WalkNode::Chance(items) => {
            let width = hi - lo;
            let mut at = lo.clone();
            for (p, sub) in items {
                let next = &at + &width * p;
                if t < &next {
                    return fix_randomness(sub, &at, &next, t);
                }
                at = next;
            }
            unreachable!("t lies below hi")
        }
        WalkNode::Query { coords, children } => {
            let subs: Vec<DecisionTree> = children.iter().map(|c| fix_randomness(c, lo, hi, t)).collect();
            query_chain(coords, &subs)
        }
    }
}

fn query_chain(coords: &[usize], subs: &[DecisionTree]) -> DecisionTree {
    match coords.split_first() {
        None => subs[0].clone(),
        Some((&c, rest)) => {
            let half = subs.len() / 2;
            DecisionTree::query(c, query_chain(rest, &subs[..half]), query_chain(rest, &subs[half..]))
        }
    }
}

/// Flattens the walk of one refined protocol into a mixture of deterministic
/// decision trees.
pub fn walk_to_dt(r: &RefinedProtocol, cfg: &SimConfig) -> Result<RandomizedDecisionTree> {
    cfg.validate()?;
    let w = walk_tree(r, r.root(), 0, cfg);
    let (zero, one) = (Q::zero(), Q::one());
    let mut cuts = vec![zero.clone(), one.clone()];
    breakpoints(&w, &zero, &one, &mut cuts);
    cuts.sort();
    cuts.dedup();
    let mut comps = Vec::new();
    for pair in cuts.windows(2) {
        let mid = (&pair[0] + &pair[1]) / q_int(2);
        comps.push((&pair[1] - &pair[0], fix_randomness(&w, &zero, &one, &mid)));
    }
    RandomizedDecisionTree::new(comps)
}

/// Lifts a randomized protocol to a randomized decision tree: pick a
/// component, refine it, run the walk, and output the reached leaf's value
/// (`⊥` on failure).
pub fn protocol_to_dt(
    pi: &RandomizedProtocol,
    g: &ComposedInstance,
    cfg: &SimConfig,
    budget: &Budget,
) -> Result<RandomizedDecisionTree> {
    pi.validate(g)?;
    let mut comps = Vec::new();
    for (w, p) in pi.components() {
        let r = RefinedProtocol::build(p, g, &cfg.delta, budget)?;
        for (v, t) in walk_to_dt(&r, cfg)?.components() {
            comps.push((w * v, t.clone()));
        }
    }
    RandomizedDecisionTree::new(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtocolTree;

    fn one_bit() -> (ComposedInstance, ProtocolTree) {
        let g = ComposedInstance::index(1, 2).unwrap();
        let p = ProtocolTree::speak_fn(
            &g,
            Player::Alice,
            |x| x == 0,
            ProtocolTree::leaf(Output::Value(0)),
            ProtocolTree::leaf(Output::Value(1)),
        );
        (g, p)
    }

    fn refine(p: &ProtocolTree, g: &ComposedInstance) -> RefinedProtocol {
        RefinedProtocol::build(p, g, &q_ratio(9, 10), &Budget::default()).unwrap()
    }

    #[test]
    fn zero_communication_walk() {
        let g = ComposedInstance::index(2, 2).unwrap();
        let r = refine(&ProtocolTree::leaf(Output::Value(1)), &g);
        let cfg = SimConfig::for_blocks(2);
        let o = simulate_sample(&r, &[true, false], &cfg, 1).unwrap();
        assert_eq!(o.result, SimResult::Transcript(Transcript::default()));
        assert!(o.queries.is_empty());
        let e = simulate_exact(&r, &[false, false], &cfg).unwrap();
        assert_eq!(e.transcripts, ExactDist::point(TranscriptOutcome::Transcript(Transcript::default())));
        assert!(ledger_check(&o, &cfg.delta, &g).holds);
    }

    #[test]
    fn one_bit_walk_on_zero() {
        let (g, p) = one_bit();
        let r = refine(&p, &g);
        let cfg = SimConfig::for_blocks(1);
        let e = simulate_exact(&r, &[false], &cfg).unwrap();
        assert_eq!(e.transcripts.len(), 2);
        for (t, q) in e.transcripts.iter() {
            assert_eq!(*q, q_ratio(1, 2));
            assert!(t.to_string().ends_with("s0"));
        }
        assert!(e.bottom_mass().is_zero());
        for seed in 0..20 {
            let o = simulate_sample(&r, &[false], &cfg, seed).unwrap();
            assert_eq!(o.queries, vec![0]);
            let rep = ledger_check(&o, &cfg.delta, &g);
            assert!(rep.holds);
            assert_eq!(o.ledger[0].gamma, Bits::integer(1));
            assert_eq!(o.ledger[0].delta_i, Bits::zero());
            assert_eq!(rep.aggregate_lhs, Bits::rational(&q_ratio(1, 10)));
        }
    }

    #[test]
    fn impossible_reply_mass() {
        // Bob sends y_11, then Alice sends [x_1 = 1]. On b=1 Bob's Y has y_1 = 1
        // so the reply z_1 = 0 is impossible when x_1 = 1 is announced.
        let g = ComposedInstance::index(1, 2).unwrap();
        let alice = || {
            ProtocolTree::speak_fn(&g, Player::Alice, |x| x == 0, ProtocolTree::leaf(Output::Value(0)), ProtocolTree::leaf(Output::Value(1)))
        };
        let p = ProtocolTree::speak_fn(&g, Player::Bob, |y| y & 0b10 != 0, alice(), alice());
        let r = refine(&p, &g);
        let e = simulate_exact(&r, &[false], &SimConfig::for_blocks(1)).unwrap();
        assert_eq!(e.bottom_mass(), q_ratio(1, 4));
        assert_eq!(e.failures.get(&Failure::ImpossibleMessage), Some(&q_ratio(1, 4)));
    }

    #[test]
    fn walk_tree_flattening_preserves_the_law() {
        let (g, p) = one_bit();
        let cfg = SimConfig::for_blocks(1);
        let dt = protocol_to_dt(&RandomizedProtocol::point(p.clone()), &g, &cfg, &Budget::default()).unwrap();
        let r = refine(&p, &g);
        for z in [false, true] {
            let e = simulate_exact(&r, &[z], &cfg).unwrap();
            assert_eq!(dt.output_dist(&[z]), e.outputs);
            assert_eq!(dt.query_count_dist(&[z]), e.queries);
        }
        let leaf = RandomizedProtocol::point(ProtocolTree::leaf(Output::Value(1)));
        let t = protocol_to_dt(&leaf, &g, &cfg, &Budget::default()).unwrap();
        assert_eq!(t.components(), &[(Q::one(), DecisionTree::leaf(Output::Value(1)))]);
    }

    #[test]
    fn caps_produce_tagged_failures() {
        let (g, p) = one_bit();
        let r = refine(&p, &g);
        let mut cfg = SimConfig::for_blocks(1);
        cfg.query_cap = Some(1);
        assert!(simulate_exact(&r, &[true], &cfg).unwrap().bottom_mass().is_zero());
        cfg.strict_zpp = true;
        cfg.deficiency_cap = q_ratio(1, 2);
        // Every leaf has |Y| = 2 of 4: deficiency 1 bit > 1/2.
        let e = simulate_exact(&r, &[true], &cfg).unwrap();
        assert!(e.bottom_mass().is_one());
        assert_eq!(e.failures.get(&Failure::DeficiencyCutoff), Some(&Q::one()));
        let o = simulate_sample(&r, &[true], &cfg, 3).unwrap();
        assert_eq!(o.result, SimResult::Bottom(Failure::DeficiencyCutoff));
        assert!(SimConfig { query_cap: Some(0), ..SimConfig::for_blocks(1) }.validate().is_err());
    }

    #[test]
    fn outcome_serialization() {
        let (g, p) = one_bit();
        let r = refine(&p, &g);
        let o = simulate_sample(&r, &[true], &SimConfig::for_blocks(1), 0).unwrap();
        let json = serde_json::to_value(&o).unwrap();
        assert_eq!(json["queries"], serde_json::json!([1]));
        assert_eq!(json["final_rho"], "1");
        assert!(json["result"]["transcript"].is_array());
    }
}
