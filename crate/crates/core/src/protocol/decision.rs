use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed};

use super::tree::{Output, Player, ProtocolTree, RandomizedProtocol};
use super::{parse_tree_file, render_tree_file, Tokens};
use crate::dist::{ExactDist, MassAccumulator};
use crate::error::{Error, Result};
use crate::exact::Q;
use crate::gadget::ComposedInstance;

/// A deterministic decision tree over `z ∈ {0,1}^n`; coordinates are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecisionTree {
    Leaf(Output),
    Query {
        coord: usize,
        children: Box<[DecisionTree; 2]>,
    },
}

impl DecisionTree {
    pub fn leaf(out: Output) -> Self {
        DecisionTree::Leaf(out)
    }

    pub fn query(coord: usize, zero: DecisionTree, one: DecisionTree) -> Self {
        DecisionTree::Query {
            coord,
            children: Box::new([zero, one]),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Query { children, .. } => 1 + children[0].depth().max(children[1].depth()),
        }
    }

    /// Every coordinate is below `n` and none repeats along a root-leaf path.
    pub fn validate(&self, n: usize) -> Result<()> {
        fn walk(t: &DecisionTree, n: usize, path: &mut Vec<usize>) -> Result<()> {
            if let DecisionTree::Query { coord, children } = t {
                if *coord >= n {
                    return Err(Error::domain(format!("query of block {} in an {n}-block tree", coord + 1)));
                }
                if path.contains(coord) {
                    return Err(Error::domain(format!("block {} queried twice on one path", coord + 1)));
                }
                path.push(*coord);
                walk(&children[0], n, path)?;
                walk(&children[1], n, path)?;
                path.pop();
            }
            Ok(())
        }
        walk(self, n, &mut Vec::new())
    }

    /// Output and the queried coordinates, in query order.
    pub fn eval(&self, z: &[bool]) -> (Output, Vec<usize>) {
        let mut t = self;
        let mut queried = Vec::new();
        loop {
            match t {
                DecisionTree::Leaf(o) => return (*o, queried),
                DecisionTree::Query { coord, children } => {
                    queried.push(*coord);
                    t = &children[z[*coord] as usize];
                }
            }
        }
    }

    pub fn parse_file(text: &str) -> Result<super::TreeFile<DecisionTree>> {
        parse_tree_file(text, parse_dtree)
    }
}

/// `dt_eval(T, z)`.
pub fn dt_eval(t: &DecisionTree, z: &[bool]) -> (Output, Vec<usize>) {
    t.eval(z)
}

fn parse_dtree(t: &mut Tokens) -> Result<DecisionTree> {
    t.expect("(")?;
    let kind = t.next()?.to_string();
    let tree = match kind.as_str() {
        "L" => DecisionTree::Leaf(t.next()?.parse()?),
        "Q" => {
            let c = t.next()?;
            let coord: usize = c.parse().map_err(|_| Error::parse(format!("bad coordinate '{c}'")))?;
            if coord == 0 {
                return Err(Error::parse("coordinates are 1-based"));
            }
            let zero = parse_dtree(t)?;
            let one = parse_dtree(t)?;
            DecisionTree::query(coord - 1, zero, one)
        }
        other => return Err(Error::parse(format!("unknown decision-tree node '{other}'"))),
    };
    t.expect(")")?;
    Ok(tree)
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionTree::Leaf(o) => write!(f, "(L {o})"),
            DecisionTree::Query { coord, children } => {
                write!(f, "(Q {} {} {})", coord + 1, children[0], children[1])
            }
        }
    }
}

impl FromStr for DecisionTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut t = Tokens::new(s);
        let tree = parse_dtree(&mut t)?;
        if !t.is_done() {
            return Err(Error::parse("trailing input after decision tree"));
        }
        Ok(tree)
    }
}

/// A finite mixture of deterministic decision trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizedDecisionTree {
    components: Vec<(Q, DecisionTree)>,
}

impl RandomizedDecisionTree {
    /// Equal trees are merged; components are kept in first-seen order.
    pub fn new(components: Vec<(Q, DecisionTree)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("a mixture needs at least one component"));
        }
        if components.iter().any(|(w, _)| !w.is_positive()) {
            return Err(Error::domain("mixture weights must be positive"));
        }
        let mut merged: Vec<(Q, DecisionTree)> = Vec::new();
        for (w, t) in components {
            match merged.iter_mut().find(|(_, u)| *u == t) {
                Some((acc, _)) => *acc += w,
                None => merged.push((w, t)),
            }
        }
        let total: Q = merged.iter().map(|(w, _)| w.clone()).sum();
        if !total.is_one() {
            return Err(Error::domain(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(RandomizedDecisionTree { components: merged })
    }

    pub fn point(t: DecisionTree) -> Self {
        RandomizedDecisionTree {
            components: vec![(Q::one(), t)],
        }
    }

    pub fn components(&self) -> &[(Q, DecisionTree)] {
        &self.components
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.components.iter().try_for_each(|(_, t)| t.validate(n))
    }

    /// Worst-case number of queries.
    pub fn depth(&self) -> usize {
        self.components.iter().map(|(_, t)| t.depth()).max().unwrap_or(0)
    }

    pub fn output_dist(&self, z: &[bool]) -> ExactDist<Output> {
        let mut acc = MassAccumulator::new();
        for (w, t) in &self.components {
            acc.add(t.eval(z).0, w.clone());
        }
        acc.finish().expect("weights sum to one")
    }

    pub fn query_count_dist(&self, z: &[bool]) -> ExactDist<usize> {
        let mut acc = MassAccumulator::new();
        for (w, t) in &self.components {
            acc.add(t.eval(z).1.len(), w.clone());
        }
        acc.finish().expect("weights sum to one")
    }

    /// Componentwise [`dt_to_protocol`].
    pub fn to_protocol(&self, g: &ComposedInstance) -> Result<RandomizedProtocol> {
        let comps = self
            .components
            .iter()
            .map(|(w, t)| Ok((w.clone(), dt_to_protocol(t, g)?)))
            .collect::<Result<Vec<_>>>()?;
        RandomizedProtocol::new(comps)
    }

    pub fn parse(text: &str) -> Result<(Option<ComposedInstance>, Self)> {
        let file = DecisionTree::parse_file(text)?;
        let instance = file.instance.clone();
        Ok((instance, Self::new(file.weighted()?)?))
    }

    pub fn render(&self, instance: Option<&ComposedInstance>) -> String {
        render_tree_file(instance, &self.components)
    }
}

/// Simulates each query of block `i` by Alice sending `x_i` (most significant
/// bit first) and Bob answering `g(x_i, y_i)`. The result has depth exactly
/// `depth(T)·(log2 a + 1)` where `a` is Alice's block size.
pub fn dt_to_protocol(t: &DecisionTree, g: &ComposedInstance) -> Result<ProtocolTree> {
    t.validate(g.n())?;
    let bits = g
        .gadget()
        .alice_bits()
        .ok_or_else(|| Error::domain("Alice's block size must be a power of two"))?;
    Ok(convert(t, g, bits))
}

fn convert(t: &DecisionTree, g: &ComposedInstance, bits: u32) -> ProtocolTree {
    match t {
        DecisionTree::Leaf(o) => ProtocolTree::leaf(*o),
        DecisionTree::Query { coord, children } => {
            let sub = [convert(&children[0], g, bits), convert(&children[1], g, bits)];
            announce(g, *coord, bits, 0, 0, &sub)
        }
    }
}

fn announce(g: &ComposedInstance, coord: usize, bits: u32, level: u32, prefix: u64, sub: &[ProtocolTree; 2]) -> ProtocolTree {
    if level == bits {
        let gadget = g.gadget();
        return ProtocolTree::speak_fn(
            g,
            Player::Bob,
            |y| gadget.eval_unchecked(prefix, g.bob_block(y, coord)),
            sub[0].clone(),
            sub[1].clone(),
        );
    }
    let shift = bits - 1 - level;
    ProtocolTree::speak_fn(
        g,
        Player::Alice,
        |x| (g.alice_block(x, coord) >> shift) & 1 == 1,
        announce(g, coord, bits, level + 1, prefix << 1, sub),
        announce(g, coord, bits, level + 1, (prefix << 1) | 1, sub),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_ratio;
    use crate::gadget::z_from_index;

    fn ident() -> DecisionTree {
        DecisionTree::query(0, DecisionTree::leaf(Output::Value(0)), DecisionTree::leaf(Output::Value(1)))
    }

    #[test]
    fn eval_examples() {
        let leaf = DecisionTree::leaf(Output::Value(1));
        assert_eq!(dt_eval(&leaf, &[true, false]), (Output::Value(1), vec![]));
        assert_eq!(dt_eval(&ident(), &[true, false]), (Output::Value(1), vec![0]));
        let t = DecisionTree::query(
            1,
            ident(),
            DecisionTree::query(0, DecisionTree::leaf(Output::Value(2)), DecisionTree::leaf(Output::Value(3))),
        );
        assert_eq!(dt_eval(&t, &[false, true]), (Output::Value(2), vec![1, 0]));
        assert_eq!(dt_eval(&t, &[true, false]), (Output::Value(1), vec![1, 0]));
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn validation_rejects_repeats_and_range() {
        let rep = DecisionTree::query(0, ident(), ident());
        assert!(rep.validate(2).is_err());
        assert!(ident().validate(1).is_ok());
        assert!(DecisionTree::query(3, ident(), ident()).validate(2).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let t: DecisionTree = "(Q 2 (L 0) (Q 1 (L bot) (L 1)))".parse().unwrap();
        assert_eq!(t.to_string(), "(Q 2 (L 0) (Q 1 (L bot) (L 1)))");
        assert!("(Q 0 (L 0) (L 1))".parse::<DecisionTree>().is_err());
        let (_, r) = RandomizedDecisionTree::parse("weight 1/3 (L 0)\nweight 2/3 (Q 1 (L 0) (L 1))").unwrap();
        assert_eq!(r.output_dist(&[true]).prob(&Output::Value(1)), q_ratio(2, 3));
        assert_eq!(RandomizedDecisionTree::parse(&r.render(None)).unwrap().1, r);
    }

    #[test]
    fn conversion_cost_and_agreement() {
        let leaf = DecisionTree::leaf(Output::Value(1));
        let g = ComposedInstance::index(2, 4).unwrap();
        assert!(dt_to_protocol(&leaf, &g).unwrap().is_trivial());
        let p = dt_to_protocol(&ident(), &g).unwrap();
        assert_eq!(p.depth(), 3);
        for x in 0..g.alice_size() {
            for y in 0..g.bob_size() {
                let z = z_from_index(2, g.output_index(x, y));
                assert_eq!(p.run(x, y).1, ident().eval(&z).0);
            }
        }
    }

    #[test]
    fn mixtures_merge_equal_components() {
        let r = RandomizedDecisionTree::new(vec![(q_ratio(1, 2), ident()), (q_ratio(1, 2), ident())]).unwrap();
        assert_eq!(r.components().len(), 1);
        assert!(RandomizedDecisionTree::new(vec![(q_ratio(1, 2), ident())]).is_err());
    }
}
