//! Fixtures shared by the criterion benches.

use metricforge_core::linalg::inverse;
use metricforge_core::{c64, ComplexMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `V D V^-1` with a random complex `V` and real, well-separated `D`:
/// diagonalizable, real spectrum, pseudo-Hermitian.
pub fn pseudo_hermitian(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v = ComplexMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { 2.0 } else { 0.0 };
            c64(diag + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        let values: Vec<_> = (0..n)
            .map(|k| c64(k as f64 + rng.gen_range(0.0..0.5), 0.0))
            .collect();
        if let Ok(vinv) = inverse(&v) {
            return &(&v * &ComplexMatrix::diagonal(&values)) * &vinv;
        }
    }
}

/// Random complex matrix with entries in the unit square.
pub fn general(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(n, n, |_, _| {
        c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use metricforge_core::{Normalization, Tolerances};

    #[test]
    fn fixtures_are_usable() {
        let tol = Tolerances::default();
        for n in [2, 4, 8, 16] {
            let h = pseudo_hermitian(n, 1);
            let m =
                metricforge_core::spectral_metric_of(&h, &Normalization::UnitLeft, &tol).unwrap();
            assert!(m.report.positive);
            assert!(m.report.intertwining_residual < 1e-9);
        }
        assert_eq!(general(3, 5), general(3, 5));
    }
}
