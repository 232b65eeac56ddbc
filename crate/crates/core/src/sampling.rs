//! Seeded random sampling of algebra and group elements.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::liegroup::{exp_map, AlgebraElement, Group, GroupElement};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream derived from a base seed and a stream index.
pub fn substream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Standard Gaussian coordinates in the orthonormal basis.
pub fn random_algebra<R: Rng + ?Sized>(group: &Group, rng: &mut R) -> AlgebraElement {
    AlgebraElement::new(group, gaussian_vector(group.algebra_dim(), rng))
        .expect("length matches algebra dimension")
}

/// `exp` of a Gaussian algebra element of norm about π; spreads over the group.
pub fn random_group_element<R: Rng + ?Sized>(group: &Group, rng: &mut R) -> GroupElement {
    let x = random_algebra(group, rng);
    let scale = std::f64::consts::PI * (group.algebra_dim() as f64).sqrt().recip() * 1.5;
    exp_map(&x.scale(scale))
}
