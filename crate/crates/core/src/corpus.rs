//! Seeded random test fields for the constant-measurement sweeps.

use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{self, AnalyticSpec, ComplexField, GridSpec, SpectralField};
use crate::scalar::Real;

/// Deterministic generator for a corpus seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random field whose spectrum lives inside the two-thirds region, with a
/// gaussian envelope of width `bandwidth` in wavenumber.
pub fn band_limited<T: Real, R: Rng>(
    grid: &Arc<GridSpec<T>>,
    bandwidth: T,
    rng: &mut R,
) -> Result<ComplexField<T>> {
    let coefficients = grid
        .xi_squared()
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            if !grid.in_two_thirds(i) {
                return Complex::new(T::zero(), T::zero());
            }
            let env = (-(q / (T::lit(2.0) * bandwidth * bandwidth))).exp();
            Complex::new(T::lit(re) * env, T::lit(im) * env)
        })
        .collect();
    let spectral = SpectralField::from_coefficients(grid.clone(), coefficients)?;
    Ok(grid::inverse_transform(&spectral))
}

/// Random gaussian packet near the origin: width in `[0.7, 1.5]`, centre
/// within an eighth of the box, wavevector components in `[-1, 1]`.
pub fn wave_packet<T: Real, R: Rng>(grid: &Arc<GridSpec<T>>, rng: &mut R) -> Result<ComplexField<T>> {
    let reach = grid.half_length().to_f64_lossy() / 8.0;
    let mut center = [T::zero(); 3];
    let mut wavevector = [T::zero(); 3];
    for a in 0..grid.dimension() {
        center[a] = T::lit(rng.gen_range(-reach..reach));
        wavevector[a] = T::lit(rng.gen_range(-1.0..1.0));
    }
    let spec = AnalyticSpec::Gaussian {
        amplitude: T::lit(rng.gen_range(0.5..2.0)),
        sigma: T::lit(rng.gen_range(0.7..1.5)),
        center,
        wavevector,
    };
    grid::sample(grid, &spec)
}

pub fn wave_packets<T: Real>(grid: &Arc<GridSpec<T>>, count: usize, seed: u64) -> Result<Vec<ComplexField<T>>> {
    let mut r = rng(seed);
    (0..count).map(|_| wave_packet(grid, &mut r)).collect()
}

pub fn band_limited_fields<T: Real>(
    grid: &Arc<GridSpec<T>>,
    count: usize,
    bandwidth: T,
    seed: u64,
) -> Result<Vec<ComplexField<T>>> {
    let mut r = rng(seed);
    (0..count).map(|_| band_limited(grid, bandwidth, &mut r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{forward_transform, make_grid};

    #[test]
    fn band_limited_fields_respect_the_filter() {
        let g = make_grid(2, 32, 8.0_f64).unwrap();
        for f in band_limited_fields(&g, 3, 2.0, 7).unwrap() {
            let s = forward_transform(&f);
            for (i, z) in s.coefficients().iter().enumerate() {
                if !g.in_two_thirds(i) {
                    assert!(z.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn corpora_are_reproducible() {
        let g = make_grid(1, 64, 8.0_f64).unwrap();
        assert_eq!(wave_packets(&g, 4, 11).unwrap(), wave_packets(&g, 4, 11).unwrap());
        assert_ne!(wave_packets(&g, 4, 11).unwrap(), wave_packets(&g, 4, 12).unwrap());
    }
}
