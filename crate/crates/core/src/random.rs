//! Seeded random matrices for tests, stress runs and the search harness.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matcore::{norm, orthonormalize, re, ComplexMatrix, C64, ONE, ZERO};

/// Standard complex Gaussian (`E|z|² = 1`).
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Haar-distributed unitary: Gram-Schmidt QR of a Gaussian matrix. The
/// resulting `R` has a positive diagonal, which is the sign fix that makes
/// `Q` Haar.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let columns: Vec<Vec<C64>> = (0..n).map(|_| gaussian_vector(n, rng)).collect();
        let q = orthonormalize(&columns, 1e-8);
        if q.len() == n {
            return ComplexMatrix::from_columns(n, &q);
        }
    }
}

/// Random Hermitian matrix `(G + G*)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(n, n, rng);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Uniform point on the unit circle.
pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Diagonal projection onto `rank` uniformly chosen coordinates.
pub fn coordinate_projection<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let mut diag = vec![ZERO; n];
    for i in sample(rng, n, rank.min(n)) {
        diag[i] = ONE;
    }
    ComplexMatrix::diag(&diag)
}

/// Orthogonal projection onto the span of `rank` Gaussian vectors.
pub fn random_projection<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let w = haar_unitary(n, rng).submatrix(0, 0, n, rank);
    w.matmul(&w.adjoint())
}

/// Block-diagonal Haar unitary with the given block sizes.
pub fn block_haar_unitary<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> ComplexMatrix {
    let blocks: Vec<ComplexMatrix> = sizes.iter().map(|&k| haar_unitary(k, rng)).collect();
    let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
    ComplexMatrix::direct_sum(&refs)
}

/// Random unit vector.
pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    let v = gaussian_vector(n, rng);
    let s = norm(&v);
    v.into_iter().map(|x| x / re(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{validate_structure, StructureKind, Tolerances};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary_and_seeded() {
        let tol = Tolerances::default();
        let u = haar_unitary(7, &mut ChaCha8Rng::seed_from_u64(3));
        assert!(validate_structure(&u, StructureKind::Unitary, &tol).unwrap().pass);
        let again = haar_unitary(7, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(u, again);
    }

    #[test]
    fn projections() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = coordinate_projection(5, 2, &mut rng);
        assert_eq!(p.trace().re, 2.0);
        let q = random_projection(5, 3, &mut rng);
        assert!(validate_structure(&q, StructureKind::Projection, &tol).unwrap().pass);
        assert!((q.trace().re - 3.0).abs() < 1e-12);
    }
}
