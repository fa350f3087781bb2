//! Seeded random test problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{qr, DenseMatrix};
use crate::polynomial::MatrixPolynomial;
use crate::rotation::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormProfile {
    /// Every coefficient rescaled to Frobenius norm `k`.
    #[default]
    Uniform,
    /// Coefficients `2^a·M` with `a` uniform on `[−15, 15]`.
    Unbalanced,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

/// Random degree-`d` polynomial with `k×k` complex Gaussian coefficients.
pub fn random_polynomial(d: usize, k: usize, seed: u64, profile: NormProfile) -> MatrixPolynomial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..=d)
        .map(|_| {
            let m = gaussian(k, k, &mut rng);
            let factor = match profile {
                NormProfile::Uniform => k as f64 / m.norm_fro(),
                NormProfile::Unbalanced => 2f64.powf(rng.gen_range(-15.0..=15.0)),
            };
            m.scaled(C64::new(factor, 0.0))
        })
        .collect();
    MatrixPolynomial::new(coeffs).expect("random coefficients are valid")
}

/// Random `k×k` matrix of rank `k − defect`.
pub fn rank_deficient(k: usize, defect: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let (a, _) = qr(&gaussian(k, k, rng));
    let (b, _) = qr(&gaussian(k, k, rng));
    let d = DenseMatrix::from_fn(k, k, |i, j| {
        if i == j && i >= defect { C64::new(rng.gen_range(0.5..2.0), 0.0) } else { C64::new(0.0, 0.0) }
    });
    a.matmul(&d).matmul(&b.adjoint())
}

/// Replaces `P_d` and `P_0` with rank-deficient matrices, producing at
/// least `infinite` infinite and `zero` zero eigenvalues.
pub fn singular_polynomial(d: usize, k: usize, seed: u64, infinite: usize, zero: usize) -> MatrixPolynomial {
    let p = random_polynomial(d, k, seed, NormProfile::Uniform);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51_6e_67);
    let mut coeffs = p.coeffs().to_vec();
    if infinite > 0 {
        coeffs[d] = rank_deficient(k, infinite, &mut rng);
    }
    if zero > 0 {
        coeffs[0] = rank_deficient(k, zero, &mut rng);
    }
    MatrixPolynomial::new(coeffs).expect("valid coefficients")
}

/// Scalar polynomial `(x − 1)(x − 2)⋯(x − d)`.
pub fn wilkinson_polynomial(d: usize) -> MatrixPolynomial {
    let mut c = vec![1.0];
    for r in 1..=d {
        let mut next = vec![0.0; c.len() + 1];
        for (i, a) in c.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * r as f64;
        }
        c = next;
    }
    MatrixPolynomial::new(c.iter().map(|&x| DenseMatrix::from_real(1, 1, &[x])).collect()).expect("monic")
}
