//! Seeded random matrix generation.
//!
//! All generators run off an explicit `ChaCha8` stream so that any trial loop
//! can derive independent per-trial generators from `(seed, stream)` pairs
//! and stay reproducible regardless of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{cis, Complex64, ComplexMatrix};

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian (`E|z|^2 = 1`) via the polar transform.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let radius = (-(1.0 - u1).ln()).sqrt();
    radius * cis(std::f64::consts::TAU * u2)
}

pub fn gaussian_matrix(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix by modified
/// Gram-Schmidt. The diagonal of R is real positive by construction, which
/// is exactly the phase normalization Haar sampling needs.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = gaussian_matrix(dim, rng);
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|j| (0..dim).map(|i| g.at(i, j)).collect())
        .collect();
    for j in 0..dim {
        loop {
            // Two orthogonalization passes keep the basis orthonormal to
            // machine precision.
            for _ in 0..2 {
                for k in 0..j {
                    let proj = dot(&cols[k], &cols[j]);
                    for i in 0..dim {
                        let prev = cols[k][i];
                        cols[j][i] -= proj * prev;
                    }
                }
            }
            let norm = norm(&cols[j]);
            if norm > 1e-8 {
                for z in &mut cols[j] {
                    *z /= norm;
                }
                break;
            }
            // Degenerate draw; replace the column and retry.
            for z in &mut cols[j] {
                *z = complex_gaussian(rng);
            }
        }
    }
    ComplexMatrix::from_fn(dim, |i, j| cols[j][i])
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    gaussian_matrix(dim, rng).hermitian_part()
}

/// Hermitian matrix with every entry's real and imaginary part drawn
/// uniformly from `[-1, 1]` before symmetrization.
pub fn bounded_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |i, j| {
        if i == j {
            Complex64::new(2.0 * rng.gen::<f64>() - 1.0, 0.0)
        } else {
            Complex64::new(2.0 * rng.gen::<f64>() - 1.0, 2.0 * rng.gen::<f64>() - 1.0)
        }
    })
    .hermitian_part()
}

/// Hermitian matrix of the given rank with operator norm exactly `op_norm`:
/// a weighted sum of rank-one projectors onto orthonormal random directions.
pub fn random_hermitian_rank(
    dim: usize,
    rank: usize,
    op_norm: f64,
    rng: &mut impl Rng,
) -> ComplexMatrix {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    assert!(op_norm > 0.0, "operator norm must be positive");
    let basis = random_unitary(dim, rng);
    let mut sigmas: Vec<f64> = (0..rank)
        .map(|_| {
            let magnitude = 0.25 + 0.75 * rng.gen::<f64>();
            if rng.gen::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    let max = sigmas.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    for s in &mut sigmas {
        *s *= op_norm / max;
    }
    let mut out = ComplexMatrix::zeros(dim);
    for (k, &sigma) in sigmas.iter().enumerate() {
        for i in 0..dim {
            for j in 0..dim {
                let v = out.at(i, j) + sigma * basis.at(i, k) * basis.at(j, k).conj();
                out.set(i, j, v);
            }
        }
    }
    out.hermitian_part()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eig, op_norm_lower};

    #[test]
    fn random_unitary_is_unitary() {
        for &dim in &[1usize, 3, 8, 24] {
            let mut rng = seeded_rng(1, dim as u64);
            let u = random_unitary(dim, &mut rng);
            let defect = u.unitarity_defect();
            assert!(defect <= 1e-12, "dim {dim}: defect {defect:.3e}");
        }
    }

    #[test]
    fn generators_are_reproducible() {
        let a = random_unitary(6, &mut seeded_rng(42, 7));
        let b = random_unitary(6, &mut seeded_rng(42, 7));
        assert_eq!(a, b);
        let c = random_unitary(6, &mut seeded_rng(42, 8));
        assert_ne!(a, c);
    }

    #[test]
    fn rank_constrained_hermitian() {
        let mut rng = seeded_rng(5, 0);
        let a = random_hermitian_rank(6, 2, 0.9, &mut rng);
        assert!(a.hermiticity_defect() <= 1e-14);
        let eig = herm_eig(&a).unwrap();
        let mut magnitudes: Vec<f64> = eig.eigenvalues().iter().map(|l| l.abs()).collect();
        magnitudes.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // Four eigenvalues vanish, the largest is exactly the requested norm.
        for &m in &magnitudes[..4] {
            assert!(m <= 1e-12, "unexpected nonzero eigenvalue {m:.3e}");
        }
        assert!((magnitudes[5] - 0.9).abs() <= 1e-12);
        assert!((op_norm_lower(&a) - 0.9).abs() <= 1e-10);
    }

    #[test]
    fn complex_gaussian_moments() {
        let mut rng = seeded_rng(9, 0);
        let n = 20000;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut second = 0.0;
        for _ in 0..n {
            let z = complex_gaussian(&mut rng);
            mean += z;
            second += z.norm_sqr();
        }
        mean /= n as f64;
        second /= n as f64;
        assert!(mean.norm() <= 0.02, "mean {mean}");
        assert!((second - 1.0).abs() <= 0.03, "second moment {second}");
    }
}
