//! Shared fixtures for the benchmarks.

use oteg_core::rng;
use oteg_core::DenseTensor3;
use rand::Rng;

/// Uniform `[-1, 1]` tensor from a named stream.
pub fn random_tensor(n1: usize, n2: usize, n3: usize, name: &str) -> DenseTensor3 {
    let mut r = rng::stream(7, name);
    DenseTensor3::from_fn(n1, n2, n3, |_, _, _| r.random_range(-1.0..=1.0))
}

/// `n×n×d` tensor with Hermitian Fourier faces.
pub fn random_symmetric(n: usize, d: usize, name: &str) -> DenseTensor3 {
    let a = random_tensor(n, n, d, name);
    DenseTensor3::from_fn(n, n, d, |i, j, k| {
        0.5 * (a.get(i, j, k) + a.get(j, i, (d - k) % d))
    })
}

/// `t` uniformly drawn index triples.
pub fn random_plays(
    n1: usize,
    n2: usize,
    n3: usize,
    t: usize,
    name: &str,
) -> Vec<(usize, usize, usize)> {
    let mut r = rng::stream(7, name);
    (0..t)
        .map(|_| {
            (
                r.random_range(0..n1),
                r.random_range(0..n2),
                r.random_range(0..n3),
            )
        })
        .collect()
}
