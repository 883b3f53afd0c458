//! Refinement, walk law and slice law for index instances whose Bob messages
//! are affine functions over GF(2). Bob's sets stay affine subspaces of
//! `{0,1}^{nm}` and are never enumerated, so `nm` may reach 128 while Alice's
//! side (`m^n` inputs) is handled explicitly as in [`crate::protocol`].

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dist::{ExactDist, MassAccumulator};
use crate::entropy::SetVar;
use crate::error::{Error, Result};
use crate::exact::{q_from_big, q_int, q_ratio, Q};
use crate::gadget::{Budget, ComposedInstance, GadgetSpec, PartialAssignment};
use crate::protocol::{Message, Output, Player, ProtocolTree, Transcript, TranscriptOutcome};
use crate::simulate::{ExactSim, Failure, SimConfig};

/// Shape of the instance: `n` blocks of the index gadget on `m` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    n: usize,
    m: u32,
    alice_size: u64,
}

impl Shape {
    pub fn new(n: usize, m: u32) -> Result<Self> {
        GadgetSpec::index(m)?;
        if n == 0 {
            return Err(Error::domain("composition needs n >= 1"));
        }
        if n as u64 * m as u64 > 128 {
            return Err(Error::resource("affine Bob space", format!("{} bits", n as u64 * m as u64), "128 bits"));
        }
        let alice_size = (0..n)
            .try_fold(1u64, |acc, _| acc.checked_mul(m as u64))
            .ok_or_else(|| Error::resource("Alice domain", format!("{m}^{n} elements"), "u64 indices"))?;
        Ok(Shape { n, m, alice_size })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn alice_size(&self) -> u64 {
        self.alice_size
    }

    fn bob_bits(&self) -> u32 {
        self.n as u32 * self.m
    }

    pub fn alice_block(&self, x: u64, i: usize) -> u64 {
        (x / (self.m as u64).pow((self.n - 1 - i) as u32)) % self.m as u64
    }

    /// Bit index in the Bob word of position `pos` of block `block`; matches
    /// the composed encoding (block 1 most significant, position 1 leftmost).
    pub fn bob_bit(&self, block: usize, pos: u64) -> u32 {
        self.bob_bits() - 1 - (block as u32 * self.m + pos as u32)
    }
}

/// `y ↦ parity(mask & y) ⊕ flip`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffineForm {
    pub mask: u128,
    pub flip: bool,
}

impl AffineForm {
    /// Position `pos` (0-based) of block `block`.
    pub fn bit(shape: &Shape, block: usize, pos: u64) -> Self {
        AffineForm {
            mask: 1 << shape.bob_bit(block, pos),
            flip: false,
        }
    }

    /// Parity of every bit of block `block`.
    pub fn block_parity(shape: &Shape, block: usize) -> Self {
        let mask = (0..shape.m as u64).fold(0u128, |acc, p| acc | 1 << shape.bob_bit(block, p));
        AffineForm { mask, flip: false }
    }

    pub fn eval(&self, y: u128) -> bool {
        ((self.mask & y).count_ones() % 2 == 1) ^ self.flip
    }
}

/// A protocol tree with explicit Alice tables and affine Bob messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AffineTree {
    Leaf(Output),
    Alice {
        table: Vec<bool>,
        children: Box<[AffineTree; 2]>,
    },
    Bob {
        form: AffineForm,
        children: Box<[AffineTree; 2]>,
    },
}

impl AffineTree {
    pub fn leaf(out: Output) -> Self {
        AffineTree::Leaf(out)
    }

    pub fn alice_fn(shape: &Shape, f: impl Fn(u64) -> bool, zero: AffineTree, one: AffineTree) -> Self {
        AffineTree::Alice {
            table: (0..shape.alice_size).map(f).collect(),
            children: Box::new([zero, one]),
        }
    }

    pub fn bob(form: AffineForm, zero: AffineTree, one: AffineTree) -> Self {
        AffineTree::Bob {
            form,
            children: Box::new([zero, one]),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            AffineTree::Leaf(_) => 0,
            AffineTree::Alice { children, .. } | AffineTree::Bob { children, .. } => {
                1 + children[0].depth().max(children[1].depth())
            }
        }
    }

    pub fn validate(&self, shape: &Shape) -> Result<()> {
        let all = if shape.bob_bits() == 128 { u128::MAX } else { (1u128 << shape.bob_bits()) - 1 };
        match self {
            AffineTree::Leaf(_) => Ok(()),
            AffineTree::Alice { table, children } => {
                if table.len() as u64 != shape.alice_size {
                    return Err(Error::domain("Alice table size differs from m^n"));
                }
                children.iter().try_for_each(|c| c.validate(shape))
            }
            AffineTree::Bob { form, children } => {
                if form.mask & !all != 0 {
                    return Err(Error::domain("affine form reads bits outside Bob's input"));
                }
                children.iter().try_for_each(|c| c.validate(shape))
            }
        }
    }

    /// The same protocol with explicit tables; needs Bob's domain to fit the
    /// pair budget.
    pub fn to_protocol(&self, g: &ComposedInstance, budget: &Budget) -> Result<ProtocolTree> {
        let GadgetSpec::Index { m } = *g.gadget() else {
            return Err(Error::domain("affine protocols are defined for the index gadget"));
        };
        let shape = Shape::new(g.n(), m)?;
        self.validate(&shape)?;
        budget.check_pairs("explicit Bob tables", g.domain_pairs())?;
        Ok(self.explicit(g))
    }

    pub(crate) fn explicit(&self, g: &ComposedInstance) -> ProtocolTree {
        match self {
            AffineTree::Leaf(o) => ProtocolTree::leaf(*o),
            AffineTree::Alice { table, children } => ProtocolTree::speak(
                Player::Alice,
                table.iter().copied().collect(),
                children[0].explicit(g),
                children[1].explicit(g),
            ),
            AffineTree::Bob { form, children } => ProtocolTree::speak_fn(
                g,
                Player::Bob,
                |y| form.eval(y as u128),
                children[0].explicit(g),
                children[1].explicit(g),
            ),
        }
    }
}

/// An affine subspace of `{0,1}^N` as a reduced system: every row has a
/// distinct pivot (its highest bit) that no other row contains.
#[derive(Clone, Debug, Default)]
struct Space {
    rows: Vec<(u128, bool)>,
}

impl Space {
    fn reduce(&self, mut mask: u128, mut rhs: bool) -> (u128, bool) {
        for &(r, b) in &self.rows {
            if mask & pivot(r) != 0 {
                mask ^= r;
                rhs ^= b;
            }
        }
        (mask, rhs)
    }

    /// `self ∩ {parity(mask & y) = rhs}`, or `None` when empty.
    fn with(&self, mask: u128, rhs: bool) -> Option<Space> {
        let (mask, rhs) = self.reduce(mask, rhs);
        if mask == 0 {
            return (!rhs).then(|| self.clone());
        }
        let p = pivot(mask);
        let mut rows: Vec<(u128, bool)> = self
            .rows
            .iter()
            .map(|&(r, b)| if r & p != 0 { (r ^ mask, b ^ rhs) } else { (r, b) })
            .collect();
        rows.push((mask, rhs));
        Some(Space { rows })
    }

    fn with_all(&self, constraints: impl IntoIterator<Item = (u128, bool)>) -> Option<Space> {
        let mut s = self.clone();
        for (mask, rhs) in constraints {
            s = s.with(mask, rhs)?;
        }
        Some(s)
    }

    /// Codimension; `log2(2^N / |Y|)`.
    fn rank(&self) -> usize {
        self.rows.len()
    }
}

fn pivot(mask: u128) -> u128 {
    1 << (127 - mask.leading_zeros())
}

#[derive(Clone, Debug)]
struct Part {
    index: usize,
    fixed: Vec<usize>,
    size: u64,
    replies: Vec<Option<usize>>,
}

#[derive(Clone, Debug)]
struct Branch {
    size: u64,
    parts: Vec<Part>,
}

#[derive(Clone, Debug)]
enum Step {
    Leaf(Output),
    Bob([Option<usize>; 2]),
    Alice(Box<[Option<Branch>; 2]>),
}

#[derive(Clone, Debug)]
struct Node {
    x: Vec<u64>,
    y: Space,
    step: Step,
}

/// The refinement of an [`AffineTree`], mirroring
/// [`crate::protocol::RefinedProtocol`] node for node.
#[derive(Clone, Debug)]
pub struct AffineRefinement {
    shape: Shape,
    nodes: Vec<Node>,
}

impl AffineRefinement {
    /// Refines at density rate `delta ∈ (0, 1)`. Alice's domain counts against
    /// the pair budget.
    pub fn build(tree: &AffineTree, shape: &Shape, delta: &BigRational, budget: &Budget) -> Result<Self> {
        tree.validate(shape)?;
        crate::entropy::check_rate(delta)?;
        if delta.is_one() {
            return Err(Error::domain("refinement needs a density rate below 1"));
        }
        budget.check_pairs("Alice domain", shape.alice_size as u128)?;
        budget.check_coords("refinement", shape.n)?;
        let mut r = AffineRefinement {
            shape: *shape,
            nodes: Vec::new(),
        };
        let x: Vec<u64> = (0..shape.alice_size).collect();
        r.build_node(tree, x, Space::default(), PartialAssignment::all_free(shape.n), delta, budget)?;
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn build_node(
        &mut self,
        t: &AffineTree,
        x: Vec<u64>,
        y: Space,
        rho: PartialAssignment,
        delta: &BigRational,
        budget: &Budget,
    ) -> Result<usize> {
        let id = self.nodes.len();
        self.nodes.push(Node {
            x: x.clone(),
            y: y.clone(),
            step: Step::Leaf(Output::Bottom),
        });
        let step = match t {
            AffineTree::Leaf(o) => Step::Leaf(*o),
            AffineTree::Bob { form, children } => {
                let mut out = [None, None];
                for b in 0..2 {
                    if let Some(yb) = y.with(form.mask, (b == 1) ^ form.flip) {
                        out[b] = Some(self.build_node(&children[b], x.clone(), yb, rho.clone(), delta, budget)?);
                    }
                }
                Step::Bob(out)
            }
            AffineTree::Alice { table, children } => {
                let mut out = [None, None];
                for b in 0..2 {
                    let xb: Vec<u64> = x.iter().copied().filter(|&v| table[v as usize] == (b == 1)).collect();
                    if !xb.is_empty() {
                        out[b] = Some(self.branch(&children[b], xb, &y, &rho, delta, budget)?);
                    }
                }
                Step::Alice(Box::new(out))
            }
        };
        self.nodes[id].step = step;
        Ok(id)
    }

    fn branch(
        &mut self,
        t: &AffineTree,
        xb: Vec<u64>,
        y: &Space,
        rho: &PartialAssignment,
        delta: &BigRational,
        budget: &Budget,
    ) -> Result<Branch> {
        let shape = self.shape;
        let free = rho.free();
        let key = |x: u64| -> Vec<u64> { free.iter().map(|&i| shape.alice_block(x, i)).collect() };
        let var = SetVar::with_coords(vec![shape.m as u64; free.len()], free.clone(), xb.iter().map(|&x| key(x)))?;
        if var.len() != xb.len() as u64 {
            return Err(Error::domain("projection is not injective; X is not fixed off the free blocks"));
        }
        let parts = var.density_restoring_partition(delta, budget)?;
        let mut out = Vec::with_capacity(parts.len());
        for part in &parts {
            let fixed: Vec<usize> = part.fixed.iter().map(|&p| free[p]).collect();
            let xs: Vec<u64> = xb.iter().copied().filter(|&x| part.contains(&key(x))).collect();
            let mut replies = Vec::with_capacity(1 << fixed.len());
            for s in 0..1usize << fixed.len() {
                let bit = |j: usize| (s >> (fixed.len() - 1 - j)) & 1 == 1;
                let pins = fixed
                    .iter()
                    .zip(&part.value)
                    .enumerate()
                    .map(|(j, (&i, &a))| (1u128 << shape.bob_bit(i, a), bit(j)));
                replies.push(match y.with_all(pins) {
                    None => None,
                    Some(ys) => {
                        let mut rho_s = rho.clone();
                        for (j, &i) in fixed.iter().enumerate() {
                            rho_s.set(i, bit(j));
                        }
                        Some(self.build_node(t, xs.clone(), ys, rho_s, delta, budget)?)
                    }
                });
            }
            out.push(Part {
                index: part.index,
                fixed,
                size: xs.len() as u64,
                replies,
            });
        }
        Ok(Branch {
            size: xb.len() as u64,
            parts: out,
        })
    }

    fn check_z(&self, z: &[bool]) -> Result<()> {
        if z.len() != self.shape.n {
            return Err(Error::domain(format!("z has {} bits, instance has {} blocks", z.len(), self.shape.n)));
        }
        Ok(())
    }

    /// Exact law of the walk on `z`; agrees with
    /// [`crate::simulate::simulate_exact`] on the explicit refinement.
    pub fn walk_law(&self, z: &[bool], cfg: &SimConfig) -> Result<ExactSim> {
        self.check_z(z)?;
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
        let half = q_ratio(1, 2);
        let mut stack: Vec<(usize, Q, Vec<Message>, usize)> = vec![(0, Q::one(), Vec::new(), 0)];
        while let Some((id, mass, msgs, nq)) = stack.pop() {
            let node = &self.nodes[id];
            if cfg.strict_zpp && q_int(node.y.rank() as i64) > cfg.deficiency_cap {
                record(TranscriptOutcome::Bottom, Output::Bottom, nq, Some(Failure::DeficiencyCutoff), mass);
                continue;
            }
            match &node.step {
                Step::Leaf(o) => record(TranscriptOutcome::Transcript(Transcript(msgs)), *o, nq, None, mass),
                Step::Bob(children) => {
                    let both = children.iter().all(Option::is_some);
                    for (b, c) in children.iter().enumerate() {
                        if let Some(c) = c {
                            let mut m = msgs.clone();
                            m.push(Message::Bit(b == 1));
                            let p = if both { &mass * &half } else { mass.clone() };
                            stack.push((*c, p, m, nq));
                        }
                    }
                }
                Step::Alice(branches) => {
                    let total = node.x.len() as u64;
                    for (b, branch) in branches.iter().enumerate() {
                        let Some(branch) = branch else { continue };
                        let pb = q_ratio(branch.size, total);
                        for part in &branch.parts {
                            let mass_i = &mass * &pb * q_ratio(part.size, branch.size);
                            let mut m = msgs.clone();
                            m.push(Message::Bit(b == 1));
                            m.push(Message::Part(part.index));
                            if cfg.query_cap.is_some_and(|cap| nq + part.fixed.len() > cap) {
                                record(TranscriptOutcome::Bottom, Output::Bottom, nq, Some(Failure::QueryCap), mass_i);
                                continue;
                            }
                            let s: Vec<bool> = part.fixed.iter().map(|&i| z[i]).collect();
                            let nq2 = nq + part.fixed.len();
                            let si = s.iter().fold(0usize, |acc, &v| (acc << 1) | v as usize);
                            match part.replies[si] {
                                Some(c) => {
                                    m.push(Message::Fix(s));
                                    stack.push((c, mass_i, m, nq2));
                                }
                                None => record(
                                    TranscriptOutcome::Bottom,
                                    Output::Bottom,
                                    nq2,
                                    Some(Failure::ImpossibleMessage),
                                    mass_i,
                                ),
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

    /// Law of the refined transcript on a uniform input from `G⁻¹(z)`; agrees
    /// with [`crate::analysis::true_transcript_dist`].
    pub fn slice_law(&self, z: &[bool]) -> Result<ExactDist<Transcript>> {
        self.check_z(z)?;
        let shape = self.shape;
        let total_bits = shape.bob_bits() as usize;
        let mut counts: Vec<(Transcript, BigUint)> = Vec::new();
        let mut stack: Vec<(usize, Vec<Message>)> = vec![(0, Vec::new())];
        while let Some((id, msgs)) = stack.pop() {
            let node = &self.nodes[id];
            match &node.step {
                Step::Leaf(_) => {
                    let mut c = BigUint::zero();
                    for &x in &node.x {
                        let pins = (0..shape.n).map(|i| (1u128 << shape.bob_bit(i, shape.alice_block(x, i)), z[i]));
                        if let Some(s) = node.y.with_all(pins) {
                            c += BigUint::one() << (total_bits - s.rank());
                        }
                    }
                    if !c.is_zero() {
                        counts.push((Transcript(msgs), c));
                    }
                }
                Step::Bob(children) => {
                    for (b, c) in children.iter().enumerate() {
                        if let Some(c) = c {
                            let mut m = msgs.clone();
                            m.push(Message::Bit(b == 1));
                            stack.push((*c, m));
                        }
                    }
                }
                Step::Alice(branches) => {
                    for (b, branch) in branches.iter().enumerate() {
                        let Some(branch) = branch else { continue };
                        for part in &branch.parts {
                            for (si, c) in part.replies.iter().enumerate() {
                                let Some(c) = c else { continue };
                                let k = part.fixed.len();
                                let s: Vec<bool> = (0..k).map(|j| (si >> (k - 1 - j)) & 1 == 1).collect();
                                let mut m = msgs.clone();
                                m.extend([Message::Bit(b == 1), Message::Part(part.index), Message::Fix(s)]);
                                stack.push((*c, m));
                            }
                        }
                    }
                }
            }
        }
        let total: BigUint = counts.iter().map(|(_, c)| c).sum();
        if total.is_zero() {
            return Err(Error::domain("empty slice"));
        }
        ExactDist::from_masses(counts.into_iter().map(|(t, c)| (t, q_from_big(c, total.clone()))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{true_transcript_dist, tv_distance, with_bottom};
    use crate::fixtures::{affine_family, random_affine_tree};
    use crate::gadget::z_from_index;
    use crate::protocol::RefinedProtocol;
    use crate::simulate::simulate_exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agree(tree: &AffineTree, n: usize, m: u32, cfg: &SimConfig) {
        let budget = Budget::default();
        let shape = Shape::new(n, m).unwrap();
        let g = ComposedInstance::index(n, m).unwrap();
        let a = AffineRefinement::build(tree, &shape, &cfg.delta, &budget).unwrap();
        let r = RefinedProtocol::build(&tree.to_protocol(&g, &budget).unwrap(), &g, &cfg.delta, &budget).unwrap();
        assert_eq!(a.len(), r.len());
        for zi in 0..1u64 << n {
            let z = z_from_index(n, zi);
            let slice = a.slice_law(&z).unwrap();
            assert_eq!(slice, true_transcript_dist(&r, &z, &budget).unwrap());
            let walk = a.walk_law(&z, cfg).unwrap();
            let explicit = simulate_exact(&r, &z, cfg).unwrap();
            assert_eq!(walk.transcripts, explicit.transcripts);
            assert_eq!(walk.queries, explicit.queries);
            assert_eq!(walk.failures, explicit.failures);
            assert_eq!(
                tv_distance(&with_bottom(&slice), &walk.transcripts),
                tv_distance(&with_bottom(&true_transcript_dist(&r, &z, &budget).unwrap()), &explicit.transcripts)
            );
        }
    }

    #[test]
    fn space_counts_solutions() {
        let s = Space::default().with(0b011, true).unwrap();
        assert_eq!(s.rank(), 1);
        let s = s.with(0b110, false).unwrap();
        assert!(s.with(0b101, false).is_none());
        assert_eq!(s.with(0b101, true).unwrap().rank(), 2);
    }

    #[test]
    fn family_matches_the_explicit_engine() {
        for (n, m) in [(1, 2), (1, 4), (1, 8), (2, 2), (2, 4)] {
            let shape = Shape::new(n, m).unwrap();
            for (_, t) in affine_family(&shape) {
                agree(&t, n, m, &SimConfig::for_blocks(n));
                let strict = SimConfig {
                    strict_zpp: true,
                    query_cap: Some(1),
                    ..SimConfig::for_blocks(n)
                };
                agree(&t, n, m, &strict);
            }
        }
    }

    #[test]
    fn random_trees_match_the_explicit_engine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, m) in [(1, 4), (2, 2), (2, 4)] {
            let shape = Shape::new(n, m).unwrap();
            for _ in 0..15 {
                agree(&random_affine_tree(&mut rng, &shape, 4), n, m, &SimConfig::for_blocks(n));
            }
        }
    }

    #[test]
    fn wide_instances_build_without_enumerating_bob() {
        let shape = Shape::new(2, 32).unwrap();
        for (name, t) in affine_family(&shape) {
            let a = AffineRefinement::build(&t, &shape, &q_ratio(9, 10), &Budget::default()).unwrap();
            for zi in 0..4 {
                let z = z_from_index(2, zi);
                let walk = a.walk_law(&z, &SimConfig::for_blocks(2)).unwrap();
                let slice = a.slice_law(&z).unwrap();
                assert!(tv_distance(&with_bottom(&slice), &walk.transcripts) <= Q::one(), "{name}");
            }
        }
        assert!(Shape::new(5, 32).is_err());
    }
}
