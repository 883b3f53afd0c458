use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for case `case` of a battery run with `seed`.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}
