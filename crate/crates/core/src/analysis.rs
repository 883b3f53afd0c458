//! Brute-force oracles: true transcript distributions over a slice, distances
//! and support inclusion, marginal closeness inside structured rectangles,
//! parity biases with their norm bound, the parity-to-pointwise implication,
//! and decision-tree error.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dist::{ExactDist, MassAccumulator};
use crate::entropy::SetVar;
use crate::error::{Error, Result};
use crate::exact::{big_pow, q_from_big, q_int, q_ratio, Bits, Q};
use crate::gadget::{is_structured, z_index, Budget, ComposedInstance, GadgetSpec, OuterFunction, PartialAssignment, Rect};
use crate::protocol::{Output, ProtocolTree, RandomizedDecisionTree, RandomizedProtocol, RefinedProtocol, Transcript, TranscriptOutcome};

/// Law of the refined transcript on a uniform input from `G⁻¹(z)`.
pub fn true_transcript_dist(r: &RefinedProtocol, z: &[bool], budget: &Budget) -> Result<ExactDist<Transcript>> {
    let g = r.instance();
    budget.check_pairs("slice enumeration", g.domain_pairs())?;
    let zi = z_index(g.n(), z)?;
    let mut counts: HashMap<usize, u64> = HashMap::new();
    g.for_each_in_slice(zi, |x, y| *counts.entry(r.locate(x, y)).or_insert(0) += 1);
    if counts.is_empty() {
        return Err(Error::domain("empty slice"));
    }
    let transcripts: HashMap<usize, Transcript> = r.leaf_transcripts().into_iter().collect();
    ExactDist::from_counts(counts.into_iter().map(|(leaf, c)| (transcripts[&leaf].clone(), c)))
}

/// Law of the unrefined protocol's bits on a uniform input from `G⁻¹(z)`.
pub fn base_transcript_dist(p: &ProtocolTree, g: &ComposedInstance, z: &[bool], budget: &Budget) -> Result<ExactDist<Vec<bool>>> {
    p.validate(g)?;
    budget.check_pairs("slice enumeration", g.domain_pairs())?;
    let zi = z_index(g.n(), z)?;
    let mut counts: HashMap<usize, u64> = HashMap::new();
    g.for_each_in_slice(zi, |x, y| *counts.entry(p.run(x, y).2).or_insert(0) += 1);
    if counts.is_empty() {
        return Err(Error::domain("empty slice"));
    }
    let mut paths: HashMap<usize, Vec<bool>> = HashMap::new();
    let mut stack = vec![(0usize, Vec::new())];
    while let Some((id, bits)) = stack.pop() {
        match p.node(id) {
            crate::protocol::PNode::Leaf(_) => {
                paths.insert(id, bits);
            }
            crate::protocol::PNode::Speak { children, .. } => {
                for (b, &child) in children.iter().enumerate() {
                    let mut nb = bits.clone();
                    nb.push(b == 1);
                    stack.push((child, nb));
                }
            }
        }
    }
    ExactDist::from_counts(counts.into_iter().map(|(leaf, c)| (paths[&leaf].clone(), c)))
}

/// Embeds a transcript law into the outcome space that includes `⊥`.
pub fn with_bottom(d: &ExactDist<Transcript>) -> ExactDist<TranscriptOutcome> {
    d.map(|t| TranscriptOutcome::Transcript(t.clone()))
}

pub fn tv_distance<T: Ord + Clone>(a: &ExactDist<T>, b: &ExactDist<T>) -> Q {
    a.tv_distance(b)
}

/// Every non-`⊥` outcome of `sim` has positive mass under `truth`.
pub fn support_check(sim: &ExactDist<TranscriptOutcome>, truth: &ExactDist<TranscriptOutcome>) -> bool {
    sim.support()
        .all(|o| matches!(o, TranscriptOutcome::Bottom) || truth.prob(o).is_positive())
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalsReport {
    /// `|G⁻¹(z) ∩ X×Y|`.
    pub intersection: u64,
    pub nonempty: bool,
    /// TV between the intersection's x-marginal and uniform on `X`; absent
    /// when the intersection is empty.
    #[serde(serialize_with = "crate::exact::serialize_opt_q")]
    pub tv_x: Option<Q>,
    #[serde(serialize_with = "crate::exact::serialize_opt_q")]
    pub tv_y: Option<Q>,
    pub structured: bool,
    /// `D∞(Y)` over all blocks.
    pub deficiency_y: Bits,
    pub deficiency_ok: bool,
}

impl MarginalsReport {
    pub fn preconditions_held(&self) -> bool {
        self.structured && self.deficiency_ok
    }
}

/// Compares the marginals of the uniform law on `G⁻¹(z) ∩ X×Y` with uniform
/// laws on `X` and `Y`, and records whether the rectangle was structured with
/// `D∞(Y) ≤ cap`.
pub fn marginals_report(
    g: &ComposedInstance,
    rect: &Rect,
    rho: &PartialAssignment,
    z: &[bool],
    delta: &Q,
    cap: &Q,
    budget: &Budget,
) -> Result<MarginalsReport> {
    if rho.n() != g.n() || !rho.consistent_with(z) {
        return Err(Error::domain("z must be consistent with the partial assignment"));
    }
    budget.check_pairs("marginals report", rect.size())?;
    let zi = z_index(g.n(), z)?;
    let structured = is_structured(g, rect, rho, delta, budget)?;
    let mut cx: HashMap<u64, u64> = HashMap::new();
    let mut cy: HashMap<u64, u64> = HashMap::new();
    let mut total = 0u64;
    for x in rect.x.iter() {
        for y in rect.y.iter() {
            if g.output_index(x, y) == zi {
                *cx.entry(x).or_insert(0) += 1;
                *cy.entry(y).or_insert(0) += 1;
                total += 1;
            }
        }
    }
    let tv_uniform = |counts: &HashMap<u64, u64>, size: u64| -> Q {
        // ½ Σ |c/N - 1/size| over the whole set, zero counts included.
        let mut s = Q::zero();
        for c in counts.values() {
            s += (q_ratio(*c, total) - q_ratio(1, size)).abs();
        }
        s += q_ratio(size - counts.len() as u64, size);
        s / q_int(2)
    };
    let deficiency_y = Bits::log2(q_from_big(BigUint::from(g.bob_size()), BigUint::from(rect.y.len())));
    let deficiency_ok = deficiency_y <= Bits::rational(cap);
    let (tv_x, tv_y) = if total == 0 {
        (None, None)
    } else {
        (Some(tv_uniform(&cx, rect.x.len())), Some(tv_uniform(&cy, rect.y.len())))
    };
    Ok(MarginalsReport {
        intersection: total,
        nonempty: total > 0,
        tv_x,
        tv_y,
        structured,
        deficiency_y,
        deficiency_ok,
    })
}

fn check_block_vars(g: &GadgetSpec, coords: &[usize], x: &SetVar, y: &SetVar) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::domain("X and Y must cover the same blocks"));
    }
    if x.ambient().iter().any(|&a| a != g.alice_size()) || y.ambient().iter().any(|&b| b != g.bob_size()) {
        return Err(Error::domain("ambient sizes must match the gadget"));
    }
    if coords.iter().any(|&i| i >= x.dims()) {
        return Err(Error::domain("parity coordinate outside the blocks"));
    }
    Ok(())
}

/// `E[(-1)^{⊕_{i∈I} g(x_i, y_i)}]` for independent uniform `x ∈ X`, `y ∈ Y`.
pub fn parity_bias(g: &GadgetSpec, coords: &[usize], x: &SetVar, y: &SetVar, budget: &Budget) -> Result<Q> {
    check_block_vars(g, coords, x, y)?;
    budget.check_pairs("parity bias", x.len() as u128 * y.len() as u128)?;
    let mut sum = BigInt::zero();
    for xp in x.points() {
        let mut plus = 0i64;
        for yp in y.points() {
            let parity = coords.iter().fold(false, |acc, &i| acc ^ g.eval_unchecked(xp[i], yp[i]));
            plus += if parity { -1 } else { 1 };
        }
        sum += plus;
    }
    Ok(Q::new(sum, BigInt::from(x.len()) * BigInt::from(y.len())))
}

/// The `±1` matrix of a gadget, rows indexed by Alice's block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetMatrix {
    rows: u64,
    cols: u64,
    entries: Vec<i8>,
}

impl GadgetMatrix {
    pub fn new(g: &GadgetSpec, budget: &Budget) -> Result<Self> {
        let (rows, cols) = (g.alice_size(), g.bob_size());
        budget.check_pairs("gadget matrix", rows as u128 * cols as u128)?;
        let entries = (0..rows)
            .flat_map(|x| (0..cols).map(move |y| (x, y)))
            .map(|(x, y)| if g.eval_unchecked(x, y) { -1 } else { 1 })
            .collect();
        Ok(GadgetMatrix { rows, cols, entries })
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn cols(&self) -> u64 {
        self.cols
    }

    pub fn entry(&self, x: u64, y: u64) -> i8 {
        self.entries[(x * self.cols + y) as usize]
    }

    /// `M·Mᵀ = cols·I`.
    pub fn rows_orthogonal(&self) -> bool {
        (0..self.rows).all(|a| {
            (0..self.rows).all(|b| {
                let dot: i64 = (0..self.cols).map(|y| (self.entry(a, y) * self.entry(b, y)) as i64).sum();
                dot == if a == b { self.cols as i64 } else { 0 }
            })
        })
    }

    /// An upper bound on the squared operator norm: exactly `cols` when the
    /// rows are orthogonal, otherwise the squared Frobenius norm. The flag tells
    /// which.
    pub fn norm_squared(&self) -> (Q, bool) {
        if self.rows_orthogonal() {
            (q_int(self.cols as i64), true)
        } else {
            (q_int((self.rows * self.cols) as i64), false)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormBound {
    /// `|parity bias|`.
    #[serde(serialize_with = "crate::exact::serialize_q")]
    pub lhs: Q,
    /// `‖D_{X_I}‖²·‖M‖^{2|I|}·‖D_{Y_I}‖²`.
    #[serde(serialize_with = "crate::exact::serialize_q")]
    pub rhs_squared: Q,
    /// The gadget norm was exact rather than the Frobenius bound.
    pub exact_norm: bool,
    pub holds: bool,
}

fn squared_norm(v: &SetVar, coords: &[usize]) -> Q {
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    for p in v.points() {
        *counts.entry(coords.iter().map(|&i| p[i]).collect()).or_insert(0) += 1;
    }
    let sum: BigUint = counts.values().map(|&c| BigUint::from(c) * BigUint::from(c)).sum();
    q_from_big(sum, BigUint::from(v.len()) * BigUint::from(v.len()))
}

/// Cauchy-Schwarz bound on the parity bias, compared on squares so all
/// arithmetic is rational.
pub fn norm_bound_check(g: &GadgetSpec, coords: &[usize], x: &SetVar, y: &SetVar, budget: &Budget) -> Result<NormBound> {
    let bias = parity_bias(g, coords, x, y, budget)?.abs();
    let (m2, exact_norm) = GadgetMatrix::new(g, budget)?.norm_squared();
    let m2k = (0..coords.len()).fold(Q::one(), |acc, _| acc * &m2);
    let rhs_squared = squared_norm(x, coords) * m2k * squared_norm(y, coords);
    let holds = &bias * &bias <= rhs_squared;
    Ok(NormBound {
        lhs: bias,
        rhs_squared,
        exact_norm,
        holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierCheck {
    /// Every nonempty `I`: `|E χ_I| ≤ n^{-5|I|}`.
    pub hypothesis: bool,
    /// Every `z`: `|D(z) - 2^{-k}| ≤ n^{-3}·2^{-k}`.
    pub conclusion: bool,
    /// Largest `|E χ_I|·n^{5|I|}`; the hypothesis holds iff this is at most 1.
    #[serde(serialize_with = "crate::exact::serialize_q")]
    pub worst_coefficient_ratio: Q,
    /// Largest `|D(z)·2^k - 1|·n³`; the conclusion holds iff at most 1.
    #[serde(serialize_with = "crate::exact::serialize_q")]
    pub worst_deviation_ratio: Q,
}

/// Checks both sides of the parity-to-pointwise implication for a law on
/// `{0,1}^k` (outcome `v` encodes `z` with `z_1` most significant). The bound
/// `2^{-5|I|·log2 n}` equals `n^{-5|I|}`, so everything is rational. Requires
/// `2 ≤ n` and `k ≤ n`: the implication is about coordinate sets inside `[n]`,
/// and fails for larger `k` (e.g. `k = 4`, `n = 2`, i.i.d. bits of bias
/// `1/32`).
pub fn fourier_pointwise_check(d: &ExactDist<u64>, k: usize, n: usize, budget: &Budget) -> Result<FourierCheck> {
    if n < 2 {
        return Err(Error::domain("the parity bound is vacuous for n < 2"));
    }
    if k > n {
        return Err(Error::domain(format!("{k} coordinates exceed n = {n}")));
    }
    fourier_pointwise_unchecked(d, k, n, budget)
}

/// [`fourier_pointwise_check`] without the `k ≤ n` precondition.
pub fn fourier_pointwise_unchecked(d: &ExactDist<u64>, k: usize, n: usize, budget: &Budget) -> Result<FourierCheck> {
    budget.check_coords("Fourier check", k)?;
    if d.support().any(|&v| v >> k != 0) {
        return Err(Error::domain(format!("outcome outside {{0,1}}^{k}")));
    }
    let n_big = BigUint::from(n as u64);
    let mut worst_coef = Q::zero();
    for mask in 1u64..(1u64 << k) {
        let coef: Q = d
            .iter()
            .map(|(&v, p)| if (v & mask).count_ones() % 2 == 1 { -p.clone() } else { p.clone() })
            .sum();
        let scale = num_traits::pow::Pow::pow(&n_big, 5 * mask.count_ones());
        let ratio = coef.abs() * Q::from_integer(BigInt::from(scale));
        if ratio > worst_coef {
            worst_coef = ratio;
        }
    }
    let cells = Q::from_integer(BigInt::from(big_pow(2, k as u64)));
    let n3 = Q::from_integer(BigInt::from(n as u64).pow(3));
    let mut worst_dev = Q::zero();
    for v in 0..(1u64 << k) {
        let dev = (d.prob(&v) * &cells - Q::one()).abs() * &n3;
        if dev > worst_dev {
            worst_dev = dev;
        }
    }
    Ok(FourierCheck {
        hypothesis: worst_coef <= Q::one(),
        conclusion: worst_dev <= Q::one(),
        worst_coefficient_ratio: worst_coef,
        worst_deviation_ratio: worst_dev,
    })
}

fn wrong(out: &Output, want: bool) -> bool {
    *out != Output::bit(want)
}

/// Largest error over defined inputs, with `⊥` counted as wrong.
pub fn dt_error(t: &RandomizedDecisionTree, f: &OuterFunction) -> Result<Q> {
    t.validate(f.n())?;
    let mut worst = Q::zero();
    for zi in f.defined_inputs() {
        let want = f.value(zi).expect("defined input");
        let z = crate::gadget::z_from_index(f.n(), zi);
        let err: Q = t.output_dist(&z).iter().filter(|(o, _)| wrong(o, want)).map(|(_, p)| p.clone()).sum();
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}

/// Largest error of a randomized protocol for `f ∘ gⁿ` over inputs whose
/// gadget outputs are a defined input of `f`.
pub fn protocol_error(p: &RandomizedProtocol, g: &ComposedInstance, f: &OuterFunction, budget: &Budget) -> Result<Q> {
    p.validate(g)?;
    if f.n() != g.n() {
        return Err(Error::domain("outer function and instance disagree on n"));
    }
    budget.check_pairs("protocol error", g.domain_pairs())?;
    let mut worst = Q::zero();
    for x in 0..g.alice_size() {
        for y in 0..g.bob_size() {
            let Some(want) = f.value(g.output_index(x, y)) else { continue };
            let mut acc = MassAccumulator::new();
            for (w, t) in p.components() {
                acc.add(wrong(&t.run(x, y).1, want), w.clone());
            }
            let err = acc.finish()?.prob(&true);
            if err > worst {
                worst = err;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{DecisionTree, Player};
    use crate::simulate::{simulate_exact, SimConfig};
    use crate::gadget::Subset;

    fn one_bit() -> (ComposedInstance, ProtocolTree) {
        let g = ComposedInstance::index(1, 2).unwrap();
        let p = ProtocolTree::speak_fn(&g, Player::Alice, |x| x == 0, ProtocolTree::leaf(Output::Value(0)), ProtocolTree::leaf(Output::Value(1)));
        (g, p)
    }

    fn nine_tenths() -> Q {
        q_ratio(9, 10)
    }

    #[test]
    fn true_distribution_examples() {
        let b = Budget::default();
        let g = ComposedInstance::index(1, 2).unwrap();
        let leaf = RefinedProtocol::build(&ProtocolTree::leaf(Output::Value(0)), &g, &nine_tenths(), &b).unwrap();
        assert_eq!(true_transcript_dist(&leaf, &[false], &b).unwrap(), ExactDist::point(Transcript::default()));
        let (g, p) = one_bit();
        let r = RefinedProtocol::build(&p, &g, &nine_tenths(), &b).unwrap();
        let t = true_transcript_dist(&r, &[false], &b).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|(_, q)| *q == q_ratio(1, 2)));
        let sim = simulate_exact(&r, &[false], &SimConfig::for_blocks(1)).unwrap();
        assert!(tv_distance(&sim.transcripts, &with_bottom(&t)).is_zero());
        assert!(support_check(&sim.transcripts, &with_bottom(&t)));
    }

    #[test]
    fn support_check_allows_bottom() {
        let truth = ExactDist::point(TranscriptOutcome::Transcript(Transcript::default()));
        assert!(support_check(&ExactDist::point(TranscriptOutcome::Bottom), &truth));
        assert!(support_check(&truth, &truth));
        let other = ExactDist::point(TranscriptOutcome::Transcript("b1".parse().unwrap()));
        assert!(!support_check(&other, &truth));
    }

    #[test]
    fn marginals_examples() {
        let b = Budget::default();
        let d = nine_tenths();
        let g = ComposedInstance::index(1, 4).unwrap();
        for z in [false, true] {
            let rep = marginals_report(&g, &g.full_rect(), &PartialAssignment::all_free(1), &[z], &d, &q_int(1), &b).unwrap();
            assert!(rep.nonempty);
            assert!(rep.tv_x.as_ref().unwrap().is_zero());
            assert!(rep.preconditions_held());
        }
        let g = ComposedInstance::index(1, 2).unwrap();
        let rect = Rect::new(Subset::from_iter(2, [0]).unwrap(), Subset::full(4));
        let rho: PartialAssignment = "0".parse().unwrap();
        let rep = marginals_report(&g, &rect, &rho, &[false], &d, &q_int(1), &b).unwrap();
        assert_eq!(rep.intersection, 2);
        assert!(rep.tv_x.as_ref().unwrap().is_zero());
        assert_eq!(rep.tv_y.unwrap(), q_ratio(1, 2));
        // Y forces y_x = 1 for the only x while z = 0.
        let rect = Rect::new(Subset::from_iter(2, [0]).unwrap(), Subset::from_iter(4, [0b10, 0b11]).unwrap());
        let rep = marginals_report(&g, &rect, &PartialAssignment::all_free(1), &[false], &d, &q_int(1), &b).unwrap();
        assert!(!rep.nonempty);
        assert!(!rep.structured);
        assert!(rep.deficiency_ok);
        assert!(marginals_report(&g, &rect, &rho, &[true], &d, &q_int(1), &b).is_err());
    }

    fn blocks(g: &GadgetSpec, xs: &[u64], ys: &[u64]) -> (SetVar, SetVar) {
        (
            SetVar::new(vec![g.alice_size()], xs.iter().map(|&v| vec![v])).unwrap(),
            SetVar::new(vec![g.bob_size()], ys.iter().map(|&v| vec![v])).unwrap(),
        )
    }

    #[test]
    fn parity_bias_examples() {
        let b = Budget::default();
        let g = GadgetSpec::index(2).unwrap();
        let (x, y) = blocks(&g, &[0, 1], &[0, 1, 2, 3]);
        assert!(parity_bias(&g, &[0], &x, &y, &b).unwrap().is_zero());
        let (x, y) = blocks(&g, &[0, 1], &[0]);
        assert!(parity_bias(&g, &[0], &x, &y, &b).unwrap().is_one());
        let (x, y) = blocks(&g, &[0], &[0b10, 0b11]);
        assert_eq!(parity_bias(&g, &[0], &x, &y, &b).unwrap(), q_int(-1));
    }

    #[test]
    fn norm_bound_examples() {
        let b = Budget::default();
        let g = GadgetSpec::index(2).unwrap();
        let m = GadgetMatrix::new(&g, &b).unwrap();
        assert!(m.rows_orthogonal());
        assert_eq!(m.norm_squared(), (q_int(4), true));
        let (x, y) = blocks(&g, &[0, 1], &[0, 1, 2, 3]);
        let nb = norm_bound_check(&g, &[0], &x, &y, &b).unwrap();
        assert!(nb.lhs.is_zero());
        assert_eq!(nb.rhs_squared, q_ratio(1, 2));
        assert!(nb.holds);
        let (x, y) = blocks(&g, &[1], &[0b01]);
        let nb = norm_bound_check(&g, &[0], &x, &y, &b).unwrap();
        assert!(nb.lhs.is_one());
        assert_eq!(nb.rhs_squared, q_int(4));
        assert!(nb.holds);
    }

    #[test]
    fn fourier_examples() {
        let b = Budget::default();
        let uniform = ExactDist::from_counts((0..4u64).map(|v| (v, 1))).unwrap();
        let c = fourier_pointwise_check(&uniform, 2, 2, &b).unwrap();
        assert!(c.hypothesis && c.conclusion);
        let c = fourier_pointwise_check(&ExactDist::point(0u64), 2, 2, &b).unwrap();
        assert!(!c.hypothesis && !c.conclusion);
        let skew = ExactDist::from_counts([(0u64, 3), (1, 1), (2, 1), (3, 3)]).unwrap();
        let c = fourier_pointwise_check(&skew, 2, 2, &b).unwrap();
        assert!(!c.hypothesis);
        // |E χ_{1,2}| = 1/2, ratio to 2^{-10} is 512.
        assert_eq!(c.worst_coefficient_ratio, q_int(512));
        assert!(fourier_pointwise_check(&uniform, 2, 1, &b).is_err());
        assert!(fourier_pointwise_check(&uniform, 3, 2, &b).is_err());
    }

    #[test]
    fn implication_needs_k_at_most_n() {
        // Four i.i.d. bits with bias 1/32: every |E χ_I| = 32^{-|I|} meets the
        // n = 2 bound with equality, yet D(0000) = (33/32)^4 / 16.
        let b = Budget::default();
        let d = ExactDist::from_masses((0..16u64).map(|v| {
            let ones = v.count_ones() as u64;
            let p = q_ratio(33, 64).pow((4 - ones) as i32) * q_ratio(31, 64).pow(ones as i32);
            (v, p)
        }))
        .unwrap();
        let c = fourier_pointwise_unchecked(&d, 4, 2, &b).unwrap();
        assert!(c.hypothesis && !c.conclusion);
        // With n = 4 the bound 4^{-5|I|} is far below 32^{-|I|}.
        assert!(!fourier_pointwise_check(&d, 4, 4, &b).unwrap().hypothesis);
    }

    #[test]
    fn dt_error_examples() {
        let f: OuterFunction = "01".parse().unwrap();
        let ident = DecisionTree::query(0, DecisionTree::leaf(Output::Value(0)), DecisionTree::leaf(Output::Value(1)));
        let zero = DecisionTree::leaf(Output::Value(0));
        assert!(dt_error(&RandomizedDecisionTree::point(ident.clone()), &f).unwrap().is_zero());
        assert!(dt_error(&RandomizedDecisionTree::point(zero.clone()), &f).unwrap().is_one());
        let mix = RandomizedDecisionTree::new(vec![(q_ratio(3, 4), ident), (q_ratio(1, 4), zero)]).unwrap();
        assert_eq!(dt_error(&mix, &f).unwrap(), q_ratio(1, 4));
        let bot = RandomizedDecisionTree::point(DecisionTree::leaf(Output::Bottom));
        assert!(dt_error(&bot, &f).unwrap().is_one());
    }
}
