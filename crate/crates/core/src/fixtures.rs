//! Bundled protocols and random generators shared by tests, the acceptance
//! battery and the command-line runner.

use rand::Rng;

use crate::error::Result;
use crate::exact::q_ratio;
use crate::affine::{AffineForm, AffineTree, Shape};
use crate::gadget::{ComposedInstance, GadgetSpec, OuterFunction};
use crate::protocol::{dt_to_protocol, DecisionTree, Output, Player, ProtocolTree, RandomizedDecisionTree, RandomizedProtocol};

/// `n = 1`, `m = 2`: Alice announces whether `x_1 = 1`.
pub fn one_bit() -> (ComposedInstance, ProtocolTree) {
    let g = ComposedInstance::index(1, 2).expect("valid instance");
    let p = announce_block_value(&g, 0, 0);
    (g, p)
}

fn announce_block_value(g: &ComposedInstance, block: usize, value: u64) -> ProtocolTree {
    ProtocolTree::speak_fn(
        g,
        Player::Alice,
        |x| g.alice_block(x, block) == value,
        ProtocolTree::leaf(Output::Value(0)),
        ProtocolTree::leaf(Output::Value(1)),
    )
}

/// `n = 1`, `m = 2`: Bob sends `y_{1,1}`, then Alice announces `x_1 = 1`. The
/// walk on `z = 0` outputs `⊥` with probability 1/4.
pub fn bottom_fixture() -> (ComposedInstance, ProtocolTree) {
    let g = ComposedInstance::index(1, 2).expect("valid instance");
    let p = ProtocolTree::speak_fn(
        &g,
        Player::Bob,
        |y| bob_bit(&g, y, 0, 0),
        announce_block_value(&g, 0, 0),
        announce_block_value(&g, 0, 0),
    );
    (g, p)
}

fn bob_bit(g: &ComposedInstance, y: u64, block: usize, pos: u64) -> bool {
    g.gadget().eval_unchecked(pos, g.bob_block(y, block))
}

fn leaf(v: u32) -> AffineTree {
    AffineTree::leaf(Output::Value(v))
}

/// Small protocols (depth at most 4) whose Bob messages are single bits or
/// parities, defined for every shape. Leaves carry the bits sent, read as a
/// binary number.
pub fn affine_family(shape: &Shape) -> Vec<(&'static str, AffineTree)> {
    let half = shape.m() as u64 / 2;
    let last = shape.n() - 1;
    let upper = |block: usize| move |x: u64| shape.alice_block(x, block) >= half;
    let alice = |f: &dyn Fn(u64) -> bool, zero, one| AffineTree::alice_fn(shape, f, zero, one);
    let bit = |block: usize, pos: u64| AffineForm::bit(shape, block, pos);
    let bob_reads = |h: u64, block: usize, base: u32| AffineTree::bob(bit(block, h * half), leaf(base), leaf(base + 1));
    let odd = |base: u32| alice(&|x| shape.alice_block(x, 0) % 2 == 1, leaf(base), leaf(base + 1));
    // Alice halves block 1, Bob reads that half's first bit; then the same on
    // the last block.
    let second = |base: u32| alice(&upper(last), bob_reads(0, last, base), bob_reads(1, last, base + 2));
    let first_reads = |h: u64, base: u32| AffineTree::bob(bit(0, h * half), second(base), second(base + 4));
    let halves = |base: u32| alice(&upper(0), leaf(base), leaf(base + 1));
    let odd_last = |base: u32| alice(&|x| shape.alice_block(x, last) % 2 == 1, leaf(base), leaf(base + 1));
    // Bob, Alice, then Bob reads the half of the last block Alice named.
    let led = |base: u32| {
        let reads = |h: u64, b: u32| AffineTree::bob(bit(last, h * half), odd_last(b), odd_last(b + 2));
        alice(&upper(0), reads(0, base), reads(1, base + 4))
    };
    vec![
        ("alice_half", alice(&upper(0), leaf(0), leaf(1))),
        ("bob_first_bit", AffineTree::bob(bit(0, 0), leaf(0), leaf(1))),
        ("bob_parity", AffineTree::bob(AffineForm::block_parity(shape, 0), leaf(0), leaf(1))),
        ("alice_then_bob", alice(&upper(0), bob_reads(0, 0, 0), bob_reads(1, 0, 2))),
        ("bob_then_alice", AffineTree::bob(bit(0, 0), odd(0), odd(2))),
        ("interleaved", alice(&upper(0), first_reads(0, 0), first_reads(1, 8))),
        ("bob_then_half", AffineTree::bob(bit(0, 0), halves(0), halves(2))),
        (
            "bob_twice_then_alice",
            AffineTree::bob(
                bit(0, 0),
                AffineTree::bob(bit(0, half), odd(0), odd(2)),
                AffineTree::bob(bit(0, half), odd(4), odd(6)),
            ),
        ),
        ("bob_leads_interleaved", AffineTree::bob(bit(0, 0), led(0), led(8))),
    ]
}

/// [`affine_family`] with explicit tables, for an index instance.
pub fn protocol_family(g: &ComposedInstance) -> Vec<(&'static str, ProtocolTree)> {
    let GadgetSpec::Index { m } = *g.gadget() else {
        panic!("the protocol family is defined for the index gadget");
    };
    let shape = Shape::new(g.n(), m).expect("instance shape");
    affine_family(&shape).into_iter().map(|(name, t)| (name, t.explicit(g))).collect()
}

/// A random affine protocol of depth at most `max_depth`: random Alice tables,
/// Bob forms with random masks.
pub fn random_affine_tree(rng: &mut impl Rng, shape: &Shape, max_depth: usize) -> AffineTree {
    fn go(rng: &mut impl Rng, shape: &Shape, depth: usize, root: bool) -> AffineTree {
        if depth == 0 || (!root && rng.gen_bool(0.25)) {
            return leaf(rng.gen_range(0..2));
        }
        let zero = go(rng, shape, depth - 1, false);
        let one = go(rng, shape, depth - 1, false);
        if rng.gen_bool(0.5) {
            let table: Vec<bool> = (0..shape.alice_size()).map(|_| rng.gen_bool(0.5)).collect();
            AffineTree::alice_fn(shape, |x| table[x as usize], zero, one)
        } else {
            let bits = shape.n() as u32 * shape.m();
            let mut mask = 0u128;
            while mask == 0 {
                // Sparse masks keep the test forms close to single-bit reads.
                for b in 0..bits {
                    if rng.gen_bool(2.0 / bits as f64) {
                        mask |= 1 << b;
                    }
                }
            }
            AffineTree::bob(AffineForm { mask, flip: rng.gen_bool(0.5) }, zero, one)
        }
    }
    go(rng, shape, max_depth, true)
}

/// A random protocol of depth at most `max_depth`. Each table is either
/// uniformly random or a random function of one block.
pub fn random_protocol(rng: &mut impl Rng, g: &ComposedInstance, max_depth: usize) -> ProtocolTree {
    fn go(rng: &mut impl Rng, g: &ComposedInstance, depth: usize, root: bool) -> ProtocolTree {
        if depth == 0 || (!root && rng.gen_bool(0.25)) {
            return ProtocolTree::leaf(Output::Value(rng.gen_range(0..2)));
        }
        let player = if rng.gen_bool(0.5) { Player::Alice } else { Player::Bob };
        let (size, block_size) = match player {
            Player::Alice => (g.alice_size(), g.gadget().alice_size()),
            Player::Bob => (g.bob_size(), g.gadget().bob_size()),
        };
        let table: Vec<bool> = if rng.gen_bool(0.5) {
            (0..size).map(|_| rng.gen_bool(0.5)).collect()
        } else {
            let block = rng.gen_range(0..g.n());
            let f: Vec<bool> = (0..block_size).map(|_| rng.gen_bool(0.5)).collect();
            (0..size)
                .map(|v| match player {
                    Player::Alice => f[g.alice_block(v, block) as usize],
                    Player::Bob => f[g.bob_block(v, block) as usize],
                })
                .collect()
        };
        let zero = go(rng, g, depth - 1, false);
        let one = go(rng, g, depth - 1, false);
        ProtocolTree::speak(player, table.into_iter().collect(), zero, one)
    }
    go(rng, g, max_depth, true)
}

/// A random decision tree on `n` coordinates of depth at most `max_depth`.
pub fn random_decision_tree(rng: &mut impl Rng, n: usize, max_depth: usize) -> DecisionTree {
    fn go(rng: &mut impl Rng, free: &mut Vec<usize>, depth: usize) -> DecisionTree {
        if depth == 0 || free.is_empty() || rng.gen_bool(0.2) {
            return DecisionTree::leaf(Output::Value(rng.gen_range(0..2)));
        }
        let pick = free.swap_remove(rng.gen_range(0..free.len()));
        let zero = go(rng, free, depth - 1);
        let one = go(rng, free, depth - 1);
        free.push(pick);
        DecisionTree::query(pick, zero, one)
    }
    let mut free: Vec<usize> = (0..n).collect();
    go(rng, &mut free, max_depth)
}

/// `AND` on two bits with a protocol for `AND ∘ g²` erring with probability
/// exactly 1/3 on every input: with weight 2/3 it simulates the exact decision
/// tree, with weight 1/3 its negation.
pub fn and_with_error_third(g: &ComposedInstance) -> Result<(OuterFunction, RandomizedDecisionTree, RandomizedProtocol)> {
    let f = OuterFunction::from_fn(2, |z| Some(z[0] && z[1]))?;
    let tree = |lo: u32, hi: u32| {
        DecisionTree::query(
            0,
            DecisionTree::leaf(Output::Value(lo)),
            DecisionTree::query(1, DecisionTree::leaf(Output::Value(lo)), DecisionTree::leaf(Output::Value(hi))),
        )
    };
    let t = RandomizedDecisionTree::new(vec![(q_ratio(2, 3), tree(0, 1)), (q_ratio(1, 3), tree(1, 0))])?;
    let p = RandomizedProtocol::new(vec![
        (q_ratio(2, 3), dt_to_protocol(&tree(0, 1), g)?),
        (q_ratio(1, 3), dt_to_protocol(&tree(1, 0), g)?),
    ])?;
    Ok((f, t, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_is_valid_and_shallow() {
        for (n, m) in [(1, 2), (1, 4), (2, 4), (2, 8), (1, 16)] {
            let g = ComposedInstance::index(n, m).unwrap();
            for (name, p) in protocol_family(&g) {
                p.validate(&g).unwrap();
                assert!(p.depth() <= 4, "{name}");
            }
        }
    }

    #[test]
    fn family_outputs_its_transcript() {
        let g = ComposedInstance::index(2, 4).unwrap();
        for (name, p) in protocol_family(&g) {
            for x in 0..g.alice_size() {
                for y in (0..g.bob_size()).step_by(7) {
                    let (bits, out, _) = p.run(x, y);
                    let v = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                    assert_eq!(out, Output::Value(v), "{name}");
                }
            }
        }
    }
}
