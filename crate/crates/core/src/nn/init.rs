use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::Element;

/// Kaiming-uniform values: `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, which has
/// variance `2/fan_in`. Deterministic for a fixed seed.
///
/// # Panics
/// If `fan_in` is zero.
pub fn kaiming_uniform<T: Element>(shape: &[usize], fan_in: usize, seed: u64) -> Vec<T> {
    assert!(fan_in >= 1, "fan_in must be at least 1");
    let bound = (6.0 / fan_in as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    (0..n).map(|_| T::of(dist.sample(&mut rng))).collect()
}
