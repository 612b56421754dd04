//! Fixtures shared by the benchmarks.

use itspack_core::{make_instance, random_layout, ContainerSpec, Instance, Layout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` radii uniform in `[1, 5]` in a strip of width `4 * max r`.
pub fn random_strip_instance(n: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..=5.0)).collect();
    let width = 4.0 * radii.iter().cloned().fold(0.0, f64::max);
    make_instance(&radii, ContainerSpec::strip(width)).expect("valid radii")
}

/// A random layout at a dimension tight enough to leave overlaps.
pub fn crowded_layout(inst: &Instance, seed: u64) -> Layout {
    let dim = 0.8 * itspack_core::default_dimension(inst);
    random_layout(inst, dim, &mut ChaCha8Rng::seed_from_u64(seed))
}
