//! Zero-forcing currents with weighted water-filling.
//!
//! Column `k` of `H⁻¹` (raw Gram) gives a current that is received with unit
//! gain at LUT `k` and not at all anywhere else, eavesdroppers included.
//! Each user's rate is then `log₂(1 + Pₖ/nₖ)` with `nₖ = σₖ²[H⁻¹]ₖₖ`, and
//! the powers come from water-filling on those effective noise levels.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::GramSystem;
use crate::error::{Error, Result};
use crate::gram::{evaluate_metrics, BeamCoefficients, MetricsReport};
use crate::numerics::hermitian_eig;

/// Largest condition number accepted for the raw Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct ZfSolution {
    /// `N × K` raw-basis directions, column `k` = `k`-th column of `H⁻¹`.
    pub zf_coeffs: DMatrix<Complex64>,
    /// `[H⁻¹]ₖₖ`, the power of the un-scaled direction.
    pub zf_norms: Vec<f64>,
    pub allocations: Vec<f64>,
    pub water_level: f64,
}

impl ZfSolution {
    /// Power-scaled raw-basis coefficients `√(Pₖ/[H⁻¹]ₖₖ) vₖ`.
    pub fn scaled_coefficients(&self) -> BeamCoefficients {
        let mut coeffs = self.zf_coeffs.clone();
        for (k, mut col) in coeffs.column_iter_mut().enumerate() {
            col.scale_mut((self.allocations[k] / self.zf_norms[k]).sqrt());
        }
        BeamCoefficients { coeffs, basis_normalized: false }
    }
}

/// First `num_luts` columns of `gram_raw⁻¹`, via a Cholesky solve.
pub fn zf_directions(gram_raw: &DMatrix<Complex64>, num_luts: usize) -> Result<DMatrix<Complex64>> {
    let n = gram_raw.nrows();
    if !gram_raw.is_square() || num_luts > n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} Gram with {num_luts} LUTs",
            gram_raw.nrows(),
            gram_raw.ncols()
        )));
    }
    let eig = hermitian_eig(gram_raw)?;
    let (lo, hi) = (eig.min_eigenvalue(), eig.max_eigenvalue());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularGram(cond));
    }
    let chol = gram_raw.clone().cholesky().ok_or(Error::SingularGram(cond))?;
    let rhs = DMatrix::<Complex64>::identity(n, num_luts);
    Ok(chol.solve(&rhs))
}

/// Water-filling `max Σ αₖ log₂(1 + Pₖ/nₖ)` subject to `Σ Pₖ = P`.
///
/// Returns the allocations and the water level `μ`, with `Pₖ = (μαₖ − nₖ)⁺`.
pub fn water_fill(zf_norms: &[f64], noise: &[f64], weights: &[f64], power: f64) -> (Vec<f64>, f64) {
    let k = zf_norms.len();
    let levels: Vec<f64> = zf_norms.iter().zip(noise).map(|(z, s)| z * s).collect();
    let mut active: Vec<bool> = weights.iter().map(|&a| a > 0.0).collect();
    let mut mu = 0.0;
    loop {
        let (num, den) = (0..k)
            .filter(|&i| active[i])
            .fold((power, 0.0), |(n, d), i| (n + levels[i], d + weights[i]));
        if den <= 0.0 {
            return (vec![0.0; k], mu);
        }
        mu = num / den;
        let mut changed = false;
        for i in 0..k {
            if active[i] && mu * weights[i] <= levels[i] {
                active[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let alloc = (0..k)
        .map(|i| if active[i] { mu * weights[i] - levels[i] } else { 0.0 })
        .collect();
    (alloc, mu)
}

pub fn solve_zf(gram: &GramSystem, weights: &[f64], power: f64) -> Result<ZfSolution> {
    let k = gram.num_luts;
    if weights.len() != k {
        return Err(Error::DimensionMismatch(format!("{} weights for {k} LUTs", weights.len())));
    }
    let zf_coeffs = zf_directions(&gram.gram_raw, k)?;
    let zf_norms: Vec<f64> = (0..k).map(|i| zf_coeffs[(i, i)].re).collect();
    if zf_norms.iter().any(|&z| !(z > 0.0)) {
        return Err(Error::SingularGram(f64::INFINITY));
    }
    let (allocations, water_level) = water_fill(&zf_norms, &gram.noise[..k], weights, power);
    Ok(ZfSolution { zf_coeffs, zf_norms, allocations, water_level })
}

/// ZF currents in the noise-normalized basis and their metrics.
pub fn run_zf(gram: &GramSystem, weights: &[f64], power: f64) -> Result<(BeamCoefficients, MetricsReport)> {
    let sol = solve_zf(gram, weights, power)?;
    let coeffs = sol.scaled_coefficients().to_normalized(&gram.noise_std());
    let metrics = evaluate_metrics(gram, &coeffs, weights)?;
    Ok((coeffs, metrics))
}

/// `Σ αₖ log₂(1 + Pₖ/nₖ)` straight from a water-filling result.
pub fn zf_rate(sol: &ZfSolution, noise: &[f64], weights: &[f64]) -> f64 {
    (0..sol.allocations.len())
        .map(|i| weights[i] * (1.0 + sol.allocations[i] / (noise[i] * sol.zf_norms[i])).log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_inverse() {
        let h = DMatrix::from_element(1, 1, Complex64::new(4.0, 0.0));
        let v = zf_directions(&h, 1).unwrap();
        assert!((v[(0, 0)] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_user_takes_everything() {
        let (p, mu) = water_fill(&[2.0], &[0.5], &[1.0], 10.0);
        assert_eq!(p, vec![10.0]);
        assert!((mu - 11.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_users_split_equally() {
        let (p, _) = water_fill(&[1.0; 4], &[1.0; 4], &[1.0; 4], 8.0);
        assert!(p.iter().all(|&x| (x - 2.0).abs() < 1e-12));
    }

    #[test]
    fn weak_user_dropped() {
        let (p, mu) = water_fill(&[1.0, 100.0], &[1.0, 1.0], &[1.0, 1.0], 1.0);
        assert_eq!(p[1], 0.0);
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(mu <= 100.0);
    }

    #[test]
    fn zero_weights_get_nothing() {
        let (p, _) = water_fill(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0], 1.0);
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn singular_gram_rejected() {
        let h = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(zf_directions(&h, 1), Err(Error::SingularGram(_))));
    }
}
