//! Seeded initial states.
//!
//! Random states: a Hermitian matrix `H = (G + G†)/2` with standard complex Gaussian `G`
//! drawn from ChaCha8 under the given seed, shifted to `H − λ_min + δ` with
//! `δ = 0.05 (λ_max − λ_min)`, then scaled to the requested trace norm.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{KineticError, Result};
use crate::tensor::{hermitian_eig_matrix, pow, CMatrix, DensityOp, C64};

fn gaussian_matrix(rows: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut m = CMatrix::zeros(rows, rows);
    for r in 0..rows {
        for c in 0..rows {
            let re = draw();
            let im = draw();
            m[(r, c)] = C64::new(re, im);
        }
    }
    m
}

/// Random Hermitian operator with Gaussian entries (not normalized).
pub fn random_hermitian(n: usize, d: usize, seed: u64) -> DensityOp {
    let g = gaussian_matrix(pow(d, n), seed);
    DensityOp::from_parts(n, d, (&g + g.adjoint()).scale(0.5))
}

/// Random positive definite state with trace (= trace norm) `norm`.
pub fn random_state(n: usize, d: usize, seed: u64, norm: f64) -> DensityOp {
    let h = random_hermitian(n, d, seed).into_matrix();
    let eig = hermitian_eig_matrix(&h);
    let lo = eig.values[0];
    let hi = *eig.values.last().unwrap();
    let shift = -lo + 0.05 * (hi - lo).max(1e-12);
    let rows = h.nrows();
    let p = h + CMatrix::identity(rows, rows) * C64::new(shift, 0.0);
    let tr = p.trace().re;
    DensityOp::from_parts(n, d, p.scale(norm / tr))
}

/// Random unit vector in `C^d`.
pub fn random_vector(d: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// `‖ψ‖ |ψ̂⟩⟨ψ̂|` scaled to trace `norm`, requiring a normalized input vector.
pub fn pure_state(psi: &[C64], norm: f64) -> Result<DensityOp> {
    let len = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (len - 1.0).abs() > 1e-12 {
        return Err(KineticError::Normalization(format!("vector norm is {len}, expected 1")));
    }
    Ok(DensityOp::projector(psi)?.scale(norm))
}

/// Diagonal state with the given nonnegative weights, scaled to trace `norm`.
pub fn diagonal_state(weights: &[f64], norm: f64) -> Result<DensityOp> {
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(KineticError::Config("diagonal weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(KineticError::Normalization("diagonal weights sum to zero".into()));
    }
    let scaled: Vec<f64> = weights.iter().map(|w| w * norm / total).collect();
    DensityOp::from_diagonal(weights.len(), 1, &scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{hermitian_eig, trace_norm};

    #[test]
    fn random_state_is_positive_and_normalized() {
        let rho = random_state(2, 2, 42, 0.01);
        assert!(rho.is_hermitian(1e-15));
        assert!((trace_norm(&rho) - 0.01).abs() < 1e-15);
        assert!(hermitian_eig(&rho, true).unwrap().values[0] > 0.0);
        assert_eq!(rho, random_state(2, 2, 42, 0.01));
        assert_ne!(rho, random_state(2, 2, 43, 0.01));
    }

    #[test]
    fn pure_and_diagonal_states() {
        let v = random_vector(3, 1);
        let p = pure_state(&v, 2.0).unwrap();
        assert!((p.trace().re - 2.0).abs() < 1e-14);
        assert!(pure_state(&[C64::new(2.0, 0.0), C64::new(0.0, 0.0)], 1.0).is_err());
        let dg = diagonal_state(&[1.0, 3.0], 1.0).unwrap();
        assert!((dg.matrix()[(1, 1)].re - 0.75).abs() < 1e-15);
        assert!(diagonal_state(&[-1.0, 3.0], 1.0).is_err());
    }
}
