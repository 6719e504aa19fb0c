//! Current patterns in coefficient space and their performance metrics.
//!
//! A current pattern is stored as `Jₖ(s) = Σₙ cₖₙ hₙ*(s)`, a combination of
//! conjugate channel responses. With that representation every received
//! signal is an entry of `S = H·C` and every power is a quadratic form in
//! `H`, so no integral is ever evaluated after the Gram matrix is built.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{ChannelSamples, GramSystem};
use crate::error::{Error, Result};

/// Per-user coefficient columns over the conjugate-channel basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCoefficients {
    /// `N × K`; column `k` holds `cₖ`.
    pub coeffs: DMatrix<Complex64>,
    /// True when the basis channels are divided by their noise std.
    pub basis_normalized: bool,
}

impl BeamCoefficients {
    pub fn zeros(num_receivers: usize, num_luts: usize) -> Self {
        Self {
            coeffs: DMatrix::zeros(num_receivers, num_luts),
            basis_normalized: true,
        }
    }

    pub fn num_luts(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Re-express in the noise-normalized basis.
    ///
    /// `Σ cₙ hₙ* = Σ (cₙ σₙ)(hₙ/σₙ)*`, so coefficient `n` is multiplied by `σₙ`.
    pub fn to_normalized(&self, noise_std: &[f64]) -> Self {
        if self.basis_normalized {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        for (n, mut row) in coeffs.row_iter_mut().enumerate() {
            row.scale_mut(noise_std[n]);
        }
        Self { coeffs, basis_normalized: true }
    }

    /// Re-express in the raw channel basis (inverse of [`Self::to_normalized`]).
    pub fn to_raw(&self, noise_std: &[f64]) -> Self {
        if !self.basis_normalized {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        for (n, mut row) in coeffs.row_iter_mut().enumerate() {
            row.unscale_mut(noise_std[n]);
        }
        Self { coeffs, basis_normalized: false }
    }

    /// `∫|Jₖ|² = cₖᴴ H cₖ` for every user, with `H` matching the basis.
    pub fn per_user_power(&self, gram: &GramSystem) -> Vec<f64> {
        let h = if self.basis_normalized { &gram.gram_norm } else { &gram.gram_raw };
        quadratic_forms(h, &self.coeffs)
    }

    pub fn total_power(&self, gram: &GramSystem) -> f64 {
        self.per_user_power(gram).iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub(crate) fn quadratic_forms(h: &DMatrix<Complex64>, c: &DMatrix<Complex64>) -> Vec<f64> {
    let hc = h * c;
    (0..c.ncols())
        .map(|k| c.column(k).dotc(&hc.column(k)).re.max(0.0))
        .collect()
}

/// Per-user and aggregate secrecy performance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub sinr: Vec<f64>,
    /// Aggregated eavesdropper SNR per user.
    pub leakage: Vec<f64>,
    /// `max(0, log₂((1+γₖ)/(1+Γₖ)))`.
    pub per_user_secrecy: Vec<f64>,
    /// Unclamped `log₂((1+γₖ)/(1+Γₖ))`.
    pub raw_secrecy: Vec<f64>,
    pub wssr: f64,
    pub per_user_power: Vec<f64>,
}

impl MetricsReport {
    pub fn total_power(&self) -> f64 {
        self.per_user_power.iter().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `S = H_norm·C`; `S[n, k] = ∫ hₙ(s) Jₖ(s) ds`.
pub fn signal_matrix(gram_norm: &DMatrix<Complex64>, coeffs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if gram_norm.ncols() != coeffs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Gram is {}x{} but coefficients have {} rows",
            gram_norm.nrows(),
            gram_norm.ncols(),
            coeffs.nrows()
        )));
    }
    Ok(gram_norm * coeffs)
}

/// SINR of every LUT from a signal matrix: `|S[k,k]|² / (1 + Σ_{i≠k} |S[k,i]|²)`.
pub fn sinr_from_signal(signal: &DMatrix<Complex64>, num_luts: usize) -> Vec<f64> {
    (0..num_luts)
        .map(|k| {
            let interference: f64 = (0..num_luts)
                .filter(|&i| i != k)
                .map(|i| signal[(k, i)].norm_sqr())
                .sum();
            signal[(k, k)].norm_sqr() / (1.0 + interference)
        })
        .collect()
}

/// Aggregated eavesdropper SNR of every LUT's stream: `Σ_q |S[K+q, k]|²`.
pub fn leakage_from_signal(signal: &DMatrix<Complex64>, num_luts: usize) -> Vec<f64> {
    (0..num_luts)
        .map(|k| {
            (num_luts..signal.nrows())
                .map(|n| signal[(n, k)].norm_sqr())
                .sum()
        })
        .collect()
}

/// Assemble a report from SINR, leakage and power vectors.
pub fn report_from_parts(sinr: Vec<f64>, leakage: Vec<f64>, per_user_power: Vec<f64>, weights: &[f64]) -> MetricsReport {
    let raw_secrecy: Vec<f64> = sinr
        .iter()
        .zip(&leakage)
        .map(|(&g, &l)| ((1.0 + g) / (1.0 + l)).log2())
        .collect();
    let per_user_secrecy: Vec<f64> = raw_secrecy.iter().map(|&r| r.max(0.0)).collect();
    let wssr = per_user_secrecy.iter().zip(weights).map(|(r, a)| r * a).sum();
    MetricsReport {
        sinr,
        leakage,
        per_user_secrecy,
        raw_secrecy,
        wssr,
        per_user_power,
    }
}

pub fn evaluate_metrics(gram: &GramSystem, coeffs: &BeamCoefficients, weights: &[f64]) -> Result<MetricsReport> {
    let k = gram.num_luts;
    if coeffs.num_luts() != k || weights.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{k} LUTs but {} coefficient columns and {} weights",
            coeffs.num_luts(),
            weights.len()
        )));
    }
    let normalized = coeffs.to_normalized(&gram.noise_std());
    let signal = signal_matrix(&gram.gram_norm, &normalized.coeffs)?;
    Ok(report_from_parts(
        sinr_from_signal(&signal, k),
        leakage_from_signal(&signal, k),
        quadratic_forms(&gram.gram_norm, &normalized.coeffs),
        weights,
    ))
}

/// Cauchy–Schwarz leakage bound `G_Γ = P Σ_q ∫|H̄_q|²` in the normalized basis.
pub fn g_gamma_bound(gram: &GramSystem, power: f64) -> f64 {
    let k = gram.num_luts;
    power
        * (k..gram.num_receivers())
            .map(|n| gram.gram_norm[(n, n)].re)
            .sum::<f64>()
}

/// Pointwise values `Jₖ(s)` on the sampling grid, `K × nodes`.
///
/// `samples` must be in the same basis as `coeffs`.
pub fn currents_on_grid(samples: &DMatrix<Complex64>, coeffs: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    coeffs.transpose() * samples.conjugate()
}

/// Channel samples divided by their noise std, row by row.
pub fn normalized_samples(samples: &ChannelSamples, noise: &[f64]) -> DMatrix<Complex64> {
    let mut values = samples.values.clone();
    for (n, mut row) in values.row_iter_mut().enumerate() {
        row.unscale_mut(noise[n].sqrt());
    }
    values
}

/// Metrics by explicit quadrature of reconstructed currents.
///
/// Independent of the Gram algebra; used as a cross-check.
pub fn evaluate_metrics_on_grid(
    samples: &ChannelSamples,
    noise: &[f64],
    coeffs: &BeamCoefficients,
    weights: &[f64],
) -> Result<MetricsReport> {
    let k = samples.num_luts;
    let h = normalized_samples(samples, noise);
    let basis = if coeffs.basis_normalized {
        h.clone()
    } else {
        samples.values.clone()
    };
    if basis.nrows() != coeffs.coeffs.nrows() {
        return Err(Error::DimensionMismatch("coefficients and samples disagree".into()));
    }
    let currents = currents_on_grid(&basis, &coeffs.coeffs);
    let w = &samples.grid.weights;
    let mut signal = DMatrix::zeros(h.nrows(), k);
    for n in 0..h.nrows() {
        for u in 0..k {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &wj) in w.iter().enumerate() {
                acc += h[(n, j)] * currents[(u, j)] * wj;
            }
            signal[(n, u)] = acc;
        }
    }
    let power = (0..k)
        .map(|u| {
            w.iter()
                .enumerate()
                .map(|(j, &wj)| currents[(u, j)].norm_sqr() * wj)
                .sum()
        })
        .collect();
    Ok(report_from_parts(
        sinr_from_signal(&signal, k),
        leakage_from_signal(&signal, k),
        power,
        weights,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_gram() -> GramSystem {
        // two LUTs, one eavesdropper
        let b = DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(1.0, 0.2),
                Complex64::new(0.3, -0.1),
                Complex64::new(0.0, 0.5),
                Complex64::new(0.1, 0.0),
                Complex64::new(0.9, 0.4),
                Complex64::new(-0.2, 0.1),
                Complex64::new(0.4, 0.3),
                Complex64::new(0.2, 0.2),
                Complex64::new(0.8, -0.3),
            ],
        );
        let h = &b * b.adjoint();
        GramSystem::from_raw(h, vec![0.5, 2.0, 1.5], vec![1.0, 1.0], 2, 10.0).unwrap()
    }

    #[test]
    fn linearity_of_signal_matrix() {
        let g = toy_gram();
        let mut c = DMatrix::zeros(3, 2);
        let t = Complex64::new(0.7, -1.1);
        c[(1, 0)] = t;
        let s = signal_matrix(&g.gram_norm, &c).unwrap();
        for n in 0..3 {
            assert!((s[(n, 0)] - g.gram_norm[(n, 1)] * t).norm() < 1e-14);
            assert_eq!(s[(n, 1)], Complex64::new(0.0, 0.0));
        }
        let z = signal_matrix(&g.gram_norm, &DMatrix::zeros(3, 2)).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
        assert!(signal_matrix(&g.gram_norm, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn zero_current_has_zero_metrics() {
        let g = toy_gram();
        let m = evaluate_metrics(&g, &BeamCoefficients::zeros(3, 2), &[1.0, 1.0]).unwrap();
        assert!(m.sinr.iter().chain(&m.leakage).all(|&x| x == 0.0));
        assert_eq!(m.wssr, 0.0);
    }

    #[test]
    fn single_user_mrt_closed_form() {
        let h11 = 3.7;
        let g = GramSystem::from_raw(
            DMatrix::from_element(1, 1, Complex64::new(h11 * 0.2, 0.0)),
            vec![0.2],
            vec![1.0],
            1,
            10.0,
        )
        .unwrap();
        let p = 10.0;
        let c = BeamCoefficients {
            coeffs: DMatrix::from_element(1, 1, Complex64::new((p / h11).sqrt(), 0.0)),
            basis_normalized: true,
        };
        let m = evaluate_metrics(&g, &c, &[1.0]).unwrap();
        assert!((m.sinr[0] - p * h11).abs() < 1e-12 * p * h11);
        assert!((m.wssr - (1.0 + p * h11).log2()).abs() < 1e-12);
        assert!((m.per_user_power[0] - p).abs() < 1e-12);
    }

    #[test]
    fn basis_conversion_round_trips() {
        let g = toy_gram();
        let c = BeamCoefficients {
            coeffs: DMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 0.25)),
            basis_normalized: false,
        };
        let std = g.noise_std();
        let back = c.to_normalized(&std).to_raw(&std);
        assert!((back.coeffs - &c.coeffs).norm() < 1e-14);
        // power is basis independent
        let a = c.total_power(&g);
        let b = c.to_normalized(&std).total_power(&g);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn g_gamma_from_diagonal() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let g = GramSystem::from_raw(h.clone(), vec![1.0, 1.0], vec![1.0], 1, 10.0).unwrap();
        assert!((g_gamma_bound(&g, 10.0) - 5.0).abs() < 1e-14);
        let g0 = GramSystem::from_raw(h, vec![1.0, 1.0], vec![1.0, 1.0], 2, 10.0).unwrap();
        assert_eq!(g_gamma_bound(&g0, 10.0), 0.0);
    }

    #[test]
    fn negative_secrecy_is_clamped_but_kept() {
        let m = report_from_parts(vec![1.0, 3.0], vec![3.0, 1.0], vec![1.0, 1.0], &[1.0, 2.0]);
        assert_eq!(m.per_user_secrecy[0], 0.0);
        assert!((m.raw_secrecy[0] + 1.0).abs() < 1e-15);
        assert!((m.wssr - 2.0).abs() < 1e-15);
    }
}
