use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use num_traits::{One, Signed};
use serde::{Serialize, Serializer};

use super::{parse_tree_file, render_tree_file, Tokens};
use crate::error::{Error, Result};
use crate::exact::Q;
use crate::gadget::{Budget, ComposedInstance, Rect, Subset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Player {
    Alice,
    Bob,
}

/// Leaf value of a protocol or decision tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Output {
    Value(u32),
    Bottom,
}

impl Output {
    pub fn bit(b: bool) -> Self {
        Output::Value(b as u32)
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Value(v) => write!(f, "{v}"),
            Output::Bottom => f.write_str("bot"),
        }
    }
}

impl FromStr for Output {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bot" | "⊥" => Ok(Output::Bottom),
            _ => s
                .parse::<u32>()
                .map(Output::Value)
                .map_err(|_| Error::parse(format!("bad leaf value '{s}'"))),
        }
    }
}

impl Serialize for Output {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PNode {
    Leaf(Output),
    /// `table[input]` is the bit sent; `children[b]` the node reached.
    Speak {
        player: Player,
        table: BitVec<u64, Lsb0>,
        children: [usize; 2],
    },
}

/// A deterministic protocol tree stored as an arena; node 0 is the root and
/// children always have larger ids than their parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolTree {
    nodes: Vec<PNode>,
}

impl ProtocolTree {
    pub fn leaf(out: Output) -> Self {
        ProtocolTree {
            nodes: vec![PNode::Leaf(out)],
        }
    }

    pub fn speak(player: Player, table: BitVec<u64, Lsb0>, zero: ProtocolTree, one: ProtocolTree) -> Self {
        let mut nodes = Vec::with_capacity(1 + zero.nodes.len() + one.nodes.len());
        nodes.push(PNode::Leaf(Output::Bottom));
        let c0 = append(&mut nodes, zero);
        let c1 = append(&mut nodes, one);
        nodes[0] = PNode::Speak {
            player,
            table,
            children: [c0, c1],
        };
        ProtocolTree { nodes }
    }

    /// A node whose table is `f` evaluated over the owner's whole domain.
    pub fn speak_fn(
        g: &ComposedInstance,
        player: Player,
        f: impl Fn(u64) -> bool,
        zero: ProtocolTree,
        one: ProtocolTree,
    ) -> Self {
        let size = owner_size(g, player);
        let table: BitVec<u64, Lsb0> = (0..size).map(f).collect();
        Self::speak(player, table, zero, one)
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &PNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.nodes[0], PNode::Leaf(_))
    }

    /// Communication cost: the depth of the tree.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            if let PNode::Speak { children, .. } = &self.nodes[id] {
                depth[id] = 1 + depth[children[0]].max(depth[children[1]]);
            }
        }
        depth[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = (usize, Output)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            PNode::Leaf(o) => Some((i, *o)),
            PNode::Speak { .. } => None,
        })
    }

    /// Checks that every table covers exactly its owner's domain.
    pub fn validate(&self, g: &ComposedInstance) -> Result<()> {
        for n in &self.nodes {
            if let PNode::Speak { player, table, .. } = n {
                let want = owner_size(g, *player);
                if table.len() as u64 != want {
                    return Err(Error::domain(format!(
                        "{player:?} table has {} entries, instance needs {want}",
                        table.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Follows the protocol on `(x, y)`; returns the bits sent, the leaf value
    /// and the leaf id.
    pub fn run(&self, x: u64, y: u64) -> (Vec<bool>, Output, usize) {
        let mut id = 0;
        let mut bits = Vec::new();
        loop {
            match &self.nodes[id] {
                PNode::Leaf(o) => return (bits, *o, id),
                PNode::Speak {
                    player,
                    table,
                    children,
                } => {
                    let input = match player {
                        Player::Alice => x,
                        Player::Bob => y,
                    };
                    let b = table[input as usize];
                    bits.push(b);
                    id = children[b as usize];
                }
            }
        }
    }

    pub fn parse_file(text: &str) -> Result<super::TreeFile<ProtocolTree>> {
        parse_tree_file(text, parse_ptree)
    }
}

fn owner_size(g: &ComposedInstance, player: Player) -> u64 {
    match player {
        Player::Alice => g.alice_size(),
        Player::Bob => g.bob_size(),
    }
}

fn append(nodes: &mut Vec<PNode>, sub: ProtocolTree) -> usize {
    let offset = nodes.len();
    nodes.extend(sub.nodes.into_iter().map(|n| match n {
        PNode::Speak {
            player,
            table,
            children,
        } => PNode::Speak {
            player,
            table,
            children: [children[0] + offset, children[1] + offset],
        },
        leaf => leaf,
    }));
    offset
}

fn parse_ptree(t: &mut Tokens) -> Result<ProtocolTree> {
    t.expect("(")?;
    let kind = t.next()?.to_string();
    let tree = match kind.as_str() {
        "L" => ProtocolTree::leaf(t.next()?.parse()?),
        "A" | "B" => {
            let player = if kind == "A" { Player::Alice } else { Player::Bob };
            let bits = t.next()?;
            let table: BitVec<u64, Lsb0> = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::parse(format!("bad table character '{c}'"))),
                })
                .collect::<Result<_>>()?;
            let zero = parse_ptree(t)?;
            let one = parse_ptree(t)?;
            ProtocolTree::speak(player, table, zero, one)
        }
        other => return Err(Error::parse(format!("unknown protocol node '{other}'"))),
    };
    t.expect(")")?;
    Ok(tree)
}

impl ProtocolTree {
    fn write_node(&self, id: usize, out: &mut String) {
        match &self.nodes[id] {
            PNode::Leaf(o) => out.push_str(&format!("(L {o})")),
            PNode::Speak {
                player,
                table,
                children,
            } => {
                out.push_str(if *player == Player::Alice { "(A " } else { "(B " });
                out.extend(table.iter().map(|b| if *b { '1' } else { '0' }));
                out.push(' ');
                self.write_node(children[0], out);
                out.push(' ');
                self.write_node(children[1], out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for ProtocolTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_node(0, &mut s);
        f.write_str(&s)
    }
}

impl FromStr for ProtocolTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut t = Tokens::new(s);
        let tree = parse_ptree(&mut t)?;
        if !t.is_done() {
            return Err(Error::parse("trailing input after protocol tree"));
        }
        Ok(tree)
    }
}

/// `run_protocol(Π, x, y)`: transcript bits and leaf value.
pub fn run_protocol(p: &ProtocolTree, x: u64, y: u64) -> (Vec<bool>, Output) {
    let (bits, out, _) = p.run(x, y);
    (bits, out)
}

/// The rectangle of inputs reaching each leaf, in leaf-id order. Leaves no
/// input reaches get an empty rectangle.
pub fn leaf_rectangles(p: &ProtocolTree, g: &ComposedInstance, budget: &Budget) -> Result<Vec<(usize, Rect)>> {
    p.validate(g)?;
    budget.check_pairs("leaf rectangles", g.domain_pairs())?;
    let mut rects: Vec<Option<Rect>> = vec![None; p.len()];
    rects[0] = Some(g.full_rect());
    for id in 0..p.len() {
        if let PNode::Speak {
            player,
            table,
            children,
        } = p.node(id)
        {
            let r = rects[id].take().expect("parents precede children");
            let split = |s: &Subset, want: bool| s.filter(|v| table[v as usize] == want);
            let (r0, r1) = match player {
                Player::Alice => (
                    Rect::new(split(&r.x, false), r.y.clone()),
                    Rect::new(split(&r.x, true), r.y),
                ),
                Player::Bob => (
                    Rect::new(r.x.clone(), split(&r.y, false)),
                    Rect::new(r.x, split(&r.y, true)),
                ),
            };
            rects[children[0]] = Some(r0);
            rects[children[1]] = Some(r1);
        }
    }
    Ok(p.leaves().map(|(id, _)| (id, rects[id].take().expect("every leaf is reached"))).collect())
}

/// A finite mixture of deterministic protocols with exact weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizedProtocol {
    components: Vec<(Q, ProtocolTree)>,
}

impl RandomizedProtocol {
    pub fn new(components: Vec<(Q, ProtocolTree)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("a mixture needs at least one component"));
        }
        if components.iter().any(|(w, _)| !w.is_positive()) {
            return Err(Error::domain("mixture weights must be positive"));
        }
        let total: Q = components.iter().map(|(w, _)| w.clone()).sum();
        if !total.is_one() {
            return Err(Error::domain(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(RandomizedProtocol { components })
    }

    pub fn point(p: ProtocolTree) -> Self {
        RandomizedProtocol {
            components: vec![(Q::one(), p)],
        }
    }

    pub fn components(&self) -> &[(Q, ProtocolTree)] {
        &self.components
    }

    pub fn validate(&self, g: &ComposedInstance) -> Result<()> {
        self.components.iter().try_for_each(|(_, p)| p.validate(g))
    }

    /// Largest component depth.
    pub fn cost(&self) -> usize {
        self.components.iter().map(|(_, p)| p.depth()).max().unwrap_or(0)
    }

    /// Exact output distribution on `(x, y)`.
    pub fn output_dist(&self, x: u64, y: u64) -> crate::dist::ExactDist<Output> {
        let mut acc = crate::dist::MassAccumulator::new();
        for (w, p) in &self.components {
            acc.add(p.run(x, y).1, w.clone());
        }
        acc.finish().expect("weights sum to one")
    }

    pub fn parse(text: &str) -> Result<(Option<ComposedInstance>, Self)> {
        let file = ProtocolTree::parse_file(text)?;
        let instance = file.instance.clone();
        Ok((instance, Self::new(file.weighted()?)?))
    }

    pub fn render(&self, instance: Option<&ComposedInstance>) -> String {
        render_tree_file(instance, &self.components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_ratio;

    fn one_bit() -> (ComposedInstance, ProtocolTree) {
        let g = ComposedInstance::index(1, 2).unwrap();
        // Alice announces [x_1 = 1].
        let p = ProtocolTree::speak_fn(
            &g,
            Player::Alice,
            |x| x == 0,
            ProtocolTree::leaf(Output::Value(0)),
            ProtocolTree::leaf(Output::Value(1)),
        );
        (g, p)
    }

    #[test]
    fn zero_communication_protocol() {
        let g = ComposedInstance::index(2, 2).unwrap();
        let p = ProtocolTree::leaf(Output::Value(1));
        assert_eq!(run_protocol(&p, 3, 5), (vec![], Output::Value(1)));
        let rects = leaf_rectangles(&p, &g, &Budget::default()).unwrap();
        assert_eq!(rects.len(), 1);
        assert_eq!(rects[0].1, g.full_rect());
        assert_eq!(p.depth(), 0);
    }

    #[test]
    fn alice_announcement() {
        let (g, p) = one_bit();
        let y = g.encode_bob_str(&["10"]).unwrap();
        assert_eq!(run_protocol(&p, 0, y), (vec![true], Output::Value(1)));
        let rects = leaf_rectangles(&p, &g, &Budget::default()).unwrap();
        let xs: Vec<Vec<u64>> = rects.iter().map(|(_, r)| r.x.iter().collect()).collect();
        assert_eq!(xs, vec![vec![1], vec![0]]);
        assert!(rects.iter().all(|(_, r)| r.y.len() == 4));
    }

    #[test]
    fn depth_two_transcript_follows_tables() {
        let g = ComposedInstance::index(1, 2).unwrap();
        // Bob sends y_1, then Alice sends [x_1 = 2].
        let alice = |z| ProtocolTree::speak_fn(&g, Player::Alice, |x| x == 1, ProtocolTree::leaf(Output::Value(z)), ProtocolTree::leaf(Output::Value(z + 2)));
        let p = ProtocolTree::speak_fn(&g, Player::Bob, |y| y & 0b10 != 0, alice(0), alice(1));
        for x in 0..2 {
            for y in 0..4u64 {
                let (bits, out) = run_protocol(&p, x, y);
                let b0 = y & 0b10 != 0;
                let b1 = x == 1;
                assert_eq!(bits, vec![b0, b1]);
                assert_eq!(out, Output::Value(b0 as u32 + 2 * b1 as u32));
            }
        }
        assert_eq!(p.depth(), 2);
    }

    #[test]
    fn text_roundtrip_and_validation() {
        let (g, p) = one_bit();
        let text = p.to_string();
        assert_eq!(text, "(A 10 (L 0) (L 1))");
        assert_eq!(text.parse::<ProtocolTree>().unwrap(), p);
        assert!(p.validate(&g).is_ok());
        let bad: ProtocolTree = "(B 10 (L 0) (L bot))".parse().unwrap();
        assert!(bad.validate(&g).is_err());
        assert!("(A 1x (L 0) (L 1))".parse::<ProtocolTree>().is_err());
        assert!("(L 0) (L 1)".parse::<ProtocolTree>().is_err());
    }

    #[test]
    fn mixture_file() {
        let text = "# two-component mixture\ninstance n=1 g=index(2)\nweight 1/4 (L 0)\nweight 3/4 (A 10 (L 0) (L 1))\n";
        let (g, rp) = RandomizedProtocol::parse(text).unwrap();
        let g = g.unwrap();
        rp.validate(&g).unwrap();
        assert_eq!(rp.components().len(), 2);
        assert_eq!(rp.output_dist(0, 0).prob(&Output::Value(1)), q_ratio(3, 4));
        assert_eq!(RandomizedProtocol::parse(&rp.render(Some(&g))).unwrap().1, rp);
        assert!(RandomizedProtocol::parse("weight 1/2 (L 0)").is_err());
        assert!(RandomizedProtocol::parse("(L 0) (L 1)").is_err());
    }
}
