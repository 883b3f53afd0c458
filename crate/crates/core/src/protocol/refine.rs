use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::One;
use serde::ser::SerializeTuple;
use serde::{Serialize, Serializer};

use super::tree::{Output, PNode, Player, ProtocolTree};
use crate::entropy::SetVar;
use crate::error::{Error, Result};
use crate::exact::{Bits, Q};
use crate::gadget::{bools_to_string, is_structured, parse_bools, Budget, ComposedInstance, PartialAssignment, Rect, Subset};

/// One message of a refined transcript.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Message {
    /// A bit of the original protocol.
    Bit(bool),
    /// Alice's part index, 1-based.
    Part(usize),
    /// Bob's gadget outputs on the newly fixed blocks, ascending block order.
    Fix(Vec<bool>),
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Bit(b) => write!(f, "b{}", *b as u8),
            Message::Part(i) => write!(f, "i{i}"),
            Message::Fix(s) => write!(f, "s{}", bools_to_string(s)),
        }
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::parse(format!("bad message '{s}'"));
        let (kind, rest) = s.split_at_checked(1).ok_or_else(bad)?;
        match kind {
            "b" => match rest {
                "0" => Ok(Message::Bit(false)),
                "1" => Ok(Message::Bit(true)),
                _ => Err(bad()),
            },
            "i" => rest.parse().ok().filter(|&i| i > 0).map(Message::Part).ok_or_else(bad),
            "s" => Ok(Message::Fix(parse_bools(rest)?)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        match self {
            Message::Bit(b) => {
                t.serialize_element("b")?;
                t.serialize_element(&(*b as u8))?;
            }
            Message::Part(i) => {
                t.serialize_element("i")?;
                t.serialize_element(i)?;
            }
            Message::Fix(bits) => {
                t.serialize_element("s")?;
                t.serialize_element(&bools_to_string(bits))?;
            }
        }
        t.end()
    }
}

/// A refined transcript. Rendered as space-separated messages ("b1 i1 s0"),
/// or "-" when empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Transcript(pub Vec<Message>);

impl Transcript {
    /// The original protocol's bits, dropping part and fix messages.
    pub fn project(&self) -> Vec<bool> {
        self.0
            .iter()
            .filter_map(|m| match m {
                Message::Bit(b) => Some(*b),
                _ => None,
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.0.iter().map(Message::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Transcript {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Ok(Transcript::default());
        }
        s.split_whitespace().map(str::parse).collect::<Result<_>>().map(Transcript)
    }
}

/// A transcript or the failure symbol; the outcome space shared by the
/// simulator and the true distribution.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TranscriptOutcome {
    Bottom,
    Transcript(Transcript),
}

impl fmt::Display for TranscriptOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranscriptOutcome::Bottom => f.write_str("bot"),
            TranscriptOutcome::Transcript(t) => t.fmt(f),
        }
    }
}

impl Serialize for TranscriptOutcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One part `X^i` emitted after Alice's bit, with Bob's replies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinedPart {
    pub index: usize,
    /// Newly fixed blocks `I`, ascending.
    pub fixed: Vec<usize>,
    /// `α`, one Alice value per block of `fixed`.
    pub value: Vec<u64>,
    pub x: Subset,
    /// `log2(|X^b| / |X^{≥i}|)`.
    pub delta: Bits,
    /// Child iteration per reply `s` (encoded with the first bit most
    /// significant); `None` where no `y` in the current `Y` produces `s`.
    pub replies: Vec<Option<usize>>,
}

impl RefinedPart {
    pub fn reply_index(s: &[bool]) -> usize {
        s.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn reply_bits(&self, idx: usize) -> Vec<bool> {
        let k = self.fixed.len();
        (0..k).map(|j| (idx >> (k - 1 - j)) & 1 == 1).collect()
    }

    pub fn child(&self, s: &[bool]) -> Option<usize> {
        self.replies[Self::reply_index(s)]
    }

    /// Label as "x_{...}=(...)" with 1-based blocks and values.
    pub fn label(&self) -> String {
        crate::entropy::format_label(&self.fixed, &self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliceBranch {
    /// `X^b`.
    pub x: Subset,
    pub parts: Vec<RefinedPart>,
    /// Position in `parts` of each Alice input in `X^b`, `u32::MAX` elsewhere.
    part_of: Vec<u32>,
}

impl AliceBranch {
    pub fn part_for(&self, x: u64) -> Option<&RefinedPart> {
        self.part_of
            .get(x as usize)
            .filter(|&&p| p != u32::MAX)
            .map(|&p| &self.parts[p as usize])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Leaf(Output),
    /// Children after Bob's bit; `None` when `Y^b` is empty.
    Bob([Option<usize>; 2]),
    /// Alice's bit, then the partition; `None` when `X^b` is empty.
    Alice(Box<[Option<AliceBranch>; 2]>),
}

/// Start of an iteration: the rectangle of inputs reaching it, the partial
/// assignment, and the node of the original protocol being simulated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationNode {
    pub rect: Rect,
    pub rho: PartialAssignment,
    pub source: usize,
    pub depth: usize,
    pub step: Step,
}

/// The refined protocol: the original protocol plus, after each bit from
/// Alice, a part announcement that restores density on her free blocks and
/// Bob's gadget outputs on the blocks that part fixes.
#[derive(Clone, Debug)]
pub struct RefinedProtocol {
    instance: ComposedInstance,
    base: ProtocolTree,
    delta: BigRational,
    nodes: Vec<IterationNode>,
}

impl RefinedProtocol {
    /// Builds the refinement of `base` at density rate `delta ∈ (0, 1)`.
    pub fn build(base: &ProtocolTree, g: &ComposedInstance, delta: &BigRational, budget: &Budget) -> Result<Self> {
        base.validate(g)?;
        crate::entropy::check_rate(delta)?;
        if delta.is_one() {
            return Err(Error::domain("refinement needs a density rate below 1"));
        }
        budget.check_pairs("refinement", g.domain_pairs())?;
        budget.check_coords("refinement", g.n())?;
        let mut b = Builder {
            g,
            base,
            delta,
            budget,
            nodes: Vec::new(),
        };
        b.build(0, g.full_rect(), PartialAssignment::all_free(g.n()), 0)?;
        Ok(RefinedProtocol {
            instance: g.clone(),
            base: base.clone(),
            delta: delta.clone(),
            nodes: b.nodes,
        })
    }

    pub fn instance(&self) -> &ComposedInstance {
        &self.instance
    }

    pub fn base(&self) -> &ProtocolTree {
        &self.base
    }

    pub fn delta(&self) -> &Q {
        &self.delta
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &IterationNode {
        &self.nodes[id]
    }

    /// All iteration nodes; parents precede children.
    pub fn nodes(&self) -> &[IterationNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub(crate) fn table(&self, id: usize) -> &bitvec::vec::BitVec<u64> {
        match self.base.node(self.nodes[id].source) {
            PNode::Speak { table, .. } => table,
            PNode::Leaf(_) => unreachable!("leaf iterations have no table"),
        }
    }

    /// Gadget outputs of Bob's input on `part.fixed` against `part.value`.
    pub fn reply(&self, part: &RefinedPart, y: u64) -> Vec<bool> {
        let gadget = self.instance.gadget();
        part.fixed
            .iter()
            .zip(&part.value)
            .map(|(&i, &a)| gadget.eval_unchecked(a, self.instance.bob_block(y, i)))
            .collect()
    }

    /// Leaf iteration reached by `(x, y)`.
    pub fn locate(&self, x: u64, y: u64) -> usize {
        self.walk(x, y, |_| {})
    }

    fn walk(&self, x: u64, y: u64, mut emit: impl FnMut(Message)) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id].step {
                Step::Leaf(_) => return id,
                Step::Bob(children) => {
                    let b = self.table(id)[y as usize];
                    emit(Message::Bit(b));
                    id = children[b as usize].expect("an input's own branch is never empty");
                }
                Step::Alice(branches) => {
                    let b = self.table(id)[x as usize];
                    emit(Message::Bit(b));
                    let branch = branches[b as usize].as_ref().expect("an input's own branch is never empty");
                    let part = branch.part_for(x).expect("parts cover X^b");
                    emit(Message::Part(part.index));
                    let s = self.reply(part, y);
                    id = part.child(&s).expect("an input's own reply is never empty");
                    emit(Message::Fix(s));
                }
            }
        }
    }

    /// `run_refined`: the refined transcript and the leaf value on `(x, y)`.
    pub fn run(&self, x: u64, y: u64) -> (Transcript, Output) {
        let mut msgs = Vec::new();
        let leaf = self.walk(x, y, |m| msgs.push(m));
        match self.nodes[leaf].step {
            Step::Leaf(o) => (Transcript(msgs), o),
            _ => unreachable!("walk ends at a leaf"),
        }
    }

    /// Every leaf with its transcript, in depth-first order.
    pub fn leaf_transcripts(&self) -> Vec<(usize, Transcript)> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Vec<Message>)> = vec![(0, Vec::new())];
        while let Some((id, msgs)) = stack.pop() {
            let mut push = |child: usize, extra: Vec<Message>| {
                let mut m = msgs.clone();
                m.extend(extra);
                stack.push((child, m));
            };
            match &self.nodes[id].step {
                Step::Leaf(_) => out.push((id, Transcript(msgs.clone()))),
                Step::Bob(children) => {
                    for b in (0..2).rev() {
                        if let Some(c) = children[b] {
                            push(c, vec![Message::Bit(b == 1)]);
                        }
                    }
                }
                Step::Alice(branches) => {
                    for b in (0..2).rev() {
                        let Some(branch) = &branches[b] else { continue };
                        for part in branch.parts.iter().rev() {
                            for (si, child) in part.replies.iter().enumerate().rev() {
                                if let Some(c) = child {
                                    push(
                                        *c,
                                        vec![
                                            Message::Bit(b == 1),
                                            Message::Part(part.index),
                                            Message::Fix(part.reply_bits(si)),
                                        ],
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Leaf rectangles of the refined tree.
    pub fn leaf_rectangles(&self) -> Vec<(usize, &Rect)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.step, Step::Leaf(_)))
            .map(|(i, n)| (i, &n.rect))
            .collect()
    }

    /// Ids of the iteration nodes whose rectangle is not structured at the
    /// construction rate.
    pub fn unstructured_nodes(&self, budget: &Budget) -> Result<Vec<usize>> {
        let mut bad = Vec::new();
        for (id, n) in self.nodes.iter().enumerate() {
            if !is_structured(&self.instance, &n.rect, &n.rho, &self.delta, budget)? {
                bad.push(id);
            }
        }
        Ok(bad)
    }

    /// Largest number of iterations on a root-leaf path.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

struct Builder<'a> {
    g: &'a ComposedInstance,
    base: &'a ProtocolTree,
    delta: &'a BigRational,
    budget: &'a Budget,
    nodes: Vec<IterationNode>,
}

impl Builder<'_> {
    fn build(&mut self, v: usize, rect: Rect, rho: PartialAssignment, depth: usize) -> Result<usize> {
        let id = self.nodes.len();
        self.nodes.push(IterationNode {
            rect: rect.clone(),
            rho: rho.clone(),
            source: v,
            depth,
            step: Step::Leaf(Output::Bottom),
        });
        let step = match self.base.node(v) {
            PNode::Leaf(o) => Step::Leaf(*o),
            PNode::Speak {
                player: Player::Bob,
                table,
                children,
            } => {
                let mut out = [None, None];
                for b in 0..2 {
                    let yb = rect.y.filter(|y| table[y as usize] == (b == 1));
                    if !yb.is_empty() {
                        out[b] = Some(self.build(children[b], Rect::new(rect.x.clone(), yb), rho.clone(), depth + 1)?);
                    }
                }
                Step::Bob(out)
            }
            PNode::Speak {
                player: Player::Alice,
                table,
                children,
            } => {
                let mut out = [None, None];
                for b in 0..2 {
                    let xb = rect.x.filter(|x| table[x as usize] == (b == 1));
                    if !xb.is_empty() {
                        out[b] = Some(self.alice_branch(children[b], xb, &rect.y, &rho, depth)?);
                    }
                }
                Step::Alice(Box::new(out))
            }
        };
        self.nodes[id].step = step;
        Ok(id)
    }

    fn alice_branch(&mut self, v: usize, xb: Subset, y: &Subset, rho: &PartialAssignment, depth: usize) -> Result<AliceBranch> {
        let g = self.g;
        let free = rho.free();
        let var = SetVar::project_alice(g, &xb, &free)?;
        let parts = var.density_restoring_partition(self.delta, self.budget)?;
        let mut lookup: HashMap<&[u64], u32> = HashMap::new();
        for (pos, p) in parts.iter().enumerate() {
            for pt in &p.points {
                lookup.insert(pt.as_slice(), pos as u32);
            }
        }
        let mut part_of = vec![u32::MAX; g.alice_size() as usize];
        let mut members: Vec<Vec<u64>> = vec![Vec::new(); parts.len()];
        for x in xb.iter() {
            let key: Vec<u64> = free.iter().map(|&i| g.alice_block(x, i)).collect();
            let pos = lookup[key.as_slice()];
            part_of[x as usize] = pos;
            members[pos as usize].push(x);
        }
        let gadget = g.gadget();
        let mut refined = Vec::with_capacity(parts.len());
        for (part, xs) in parts.iter().zip(members) {
            let fixed: Vec<usize> = part.fixed.iter().map(|&p| free[p]).collect();
            let xi = Subset::from_iter(g.alice_size(), xs)?;
            let mut by_reply: Vec<Option<Subset>> = vec![None; 1 << fixed.len()];
            for yv in y.iter() {
                let s = fixed
                    .iter()
                    .zip(&part.value)
                    .fold(0usize, |acc, (&i, &a)| (acc << 1) | gadget.eval_unchecked(a, g.bob_block(yv, i)) as usize);
                by_reply[s]
                    .get_or_insert_with(|| Subset::empty(g.bob_size()))
                    .insert(yv);
            }
            let mut replies = Vec::with_capacity(by_reply.len());
            for (s, ys) in by_reply.into_iter().enumerate() {
                replies.push(match ys {
                    None => None,
                    Some(ys) => {
                        let mut rho_s = rho.clone();
                        for (j, &i) in fixed.iter().enumerate() {
                            rho_s.set(i, (s >> (fixed.len() - 1 - j)) & 1 == 1);
                        }
                        Some(self.build(v, Rect::new(xi.clone(), ys), rho_s, depth + 1)?)
                    }
                });
            }
            refined.push(RefinedPart {
                index: part.index,
                fixed,
                value: part.value.clone(),
                x: xi,
                delta: part.delta.clone(),
                replies,
            });
        }
        Ok(AliceBranch {
            x: xb,
            parts: refined,
            part_of,
        })
    }
}
