use lifting::analysis::{base_transcript_dist, true_transcript_dist};
use lifting::exact::q_ratio;
use lifting::fixtures::{protocol_family, random_protocol};
use lifting::gadget::{is_structured, z_from_index};
use lifting::protocol::{RefinedProtocol, Step};
use lifting::{Budget, ComposedInstance, Q};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rate() -> Q {
    q_ratio(9, 10)
}

fn check_equivalence(g: &ComposedInstance, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_protocol(&mut rng, g, 4);
    let r = RefinedProtocol::build(&p, g, &rate(), &Budget::default()).unwrap();
    for x in 0..g.alice_size() {
        for y in 0..g.bob_size() {
            let (bits, out, _) = p.run(x, y);
            let (t, out_r) = r.run(x, y);
            assert_eq!(out, out_r, "seed {seed} x {x} y {y}");
            assert_eq!(t.project(), bits, "seed {seed} x {x} y {y}");
        }
    }
}

#[test]
fn refined_runs_agree_with_base_protocol() {
    for (n, m) in [(1, 2), (1, 4), (2, 2), (2, 4)] {
        let g = ComposedInstance::index(n, m).unwrap();
        for seed in 0..30 {
            check_equivalence(&g, seed);
        }
    }
}

#[test]
fn every_iteration_node_is_structured() {
    let budget = Budget::default();
    for (n, m) in [(1, 4), (2, 4)] {
        let g = ComposedInstance::index(n, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_protocol(&mut rng, &g, 4);
            let r = RefinedProtocol::build(&p, &g, &rate(), &budget).unwrap();
            assert!(r.unstructured_nodes(&budget).unwrap().is_empty());
            for node in r.nodes() {
                assert!(is_structured(&g, &node.rect, &node.rho, &rate(), &budget).unwrap());
            }
        }
    }
}

#[test]
fn leaf_rectangles_tile_the_domain() {
    let g = ComposedInstance::index(2, 4).unwrap();
    let r = RefinedProtocol::build(&protocol_family(&g).pop().unwrap().1, &g, &rate(), &Budget::default()).unwrap();
    let total: u128 = r.leaf_rectangles().iter().map(|(_, rect)| rect.size()).sum();
    assert_eq!(total, g.domain_pairs());
    for (id, _) in r.leaf_transcripts() {
        assert!(matches!(r.node(id).step, Step::Leaf(_)));
    }
}

#[test]
fn transcript_law_projects_to_base_law() {
    let budget = Budget::default();
    for (n, m) in [(1, 4), (2, 4)] {
        let g = ComposedInstance::index(n, m).unwrap();
        for (name, p) in protocol_family(&g) {
            let r = RefinedProtocol::build(&p, &g, &rate(), &budget).unwrap();
            for zi in 0..(1u64 << n) {
                let z = z_from_index(n, zi);
                let refined = true_transcript_dist(&r, &z, &budget).unwrap();
                let base = base_transcript_dist(&p, &g, &z, &budget).unwrap();
                assert_eq!(refined.map(|t| t.project()), base, "{name} z {zi}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_refinements_agree(seed in any::<u64>(), n in 1usize..=2, wide in any::<bool>()) {
        let g = ComposedInstance::index(n, if wide { 4 } else { 2 }).unwrap();
        check_equivalence(&g, seed);
    }
}
