//! Reference computations shared by the integration tests. Nothing here
//! calls into the solvers it is used to check.
#![allow(dead_code)]

use capa_core::channel::{sample_channels, ChannelSamples, GramSystem, Scenario};
use capa_core::fp::FpState;
use capa_core::gram::normalized_samples;
use capa_core::sweep::{sample_scenario, ScenarioDefaults};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cplx(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| cplx(rng))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| cplx(rng))
}

/// Gram system of `n` random channels sampled at `m ≥ n` points.
pub fn random_gram(rng: &mut ChaCha8Rng, num_luts: usize, num_eves: usize, power: f64) -> GramSystem {
    let n = num_luts + num_eves;
    let samples = random_matrix(rng, n, n + 4);
    let gram = &samples * samples.adjoint();
    let noise: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    GramSystem::from_raw(gram, noise, vec![1.0; num_luts], num_luts, power).unwrap()
}

pub fn default_scenario(seed: u64) -> Scenario {
    sample_scenario(&ScenarioDefaults::default(), seed).unwrap()
}

pub fn default_samples(seed: u64) -> (Scenario, ChannelSamples) {
    let scenario = default_scenario(seed);
    let samples = sample_channels(&scenario).unwrap();
    (scenario, samples)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn max_abs(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Water-filling by enumerating every active set and keeping the feasible
/// one with the best objective `Σ αₖ log₂(1 + Pₖ/nₖ)`.
pub fn brute_force_water_fill(levels: &[f64], weights: &[f64], power: f64) -> (Vec<f64>, f64) {
    let k = levels.len();
    let mut best = (vec![0.0; k], f64::NEG_INFINITY);
    for mask in 1u32..(1 << k) {
        let set: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let mu = (power + set.iter().map(|&i| levels[i]).sum::<f64>()) / set.iter().map(|&i| weights[i]).sum::<f64>();
        let alloc: Vec<f64> = (0..k)
            .map(|i| if mask & (1 << i) != 0 { mu * weights[i] - levels[i] } else { 0.0 })
            .collect();
        if alloc.iter().any(|&p| p < 0.0) {
            continue;
        }
        let value: f64 = (0..k).map(|i| weights[i] * (1.0 + alloc[i] / levels[i]).log2()).sum();
        if value > best.1 {
            best = (alloc, value);
        }
    }
    best
}

/// Pointwise stationarity residual of the current-update Lagrangian for
/// user `k`, evaluated at every grid node from the sampled channels.
///
/// `λJₖ + Σᵢ Aᵢ hᵢ* ∫hᵢJₖ + Cₖ Σ_q h̄_q* ∫h̄_qJₖ − Bₖ hₖ*`, divided by the
/// largest magnitude among the four terms.
pub fn kkt_residual(
    samples: &ChannelSamples,
    noise: &[f64],
    state: &FpState,
    coeffs: &DMatrix<Complex64>,
    k: usize,
    lambda: f64,
) -> f64 {
    let h = normalized_samples(samples, noise);
    let w = &samples.grid.weights;
    let (n, nodes) = (h.nrows(), h.ncols());
    let luts = state.b.len();
    // Jₖ(s) = Σₙ cₖₙ hₙ*(s)
    let current: Vec<Complex64> = (0..nodes)
        .map(|j| (0..n).map(|r| coeffs[(r, k)] * h[(r, j)].conj()).sum())
        .collect();
    let integral = |r: usize| -> Complex64 { (0..nodes).map(|j| h[(r, j)] * current[j] * w[j]).sum() };
    let proj: Vec<Complex64> = (0..n).map(integral).collect();
    let a: Vec<f64> = (0..luts)
        .map(|i| state.b[i] * (1.0 + state.eps[i]) * state.eta[i].norm_sqr())
        .collect();
    let b_k = state.eta[k] * (state.b[k] * (1.0 + state.eps[k]));
    let c_k = state.b[k] * (1.0 + state.beta[k]) / (1.0 + state.g_gamma);

    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..nodes {
        let t1 = current[j] * lambda;
        let t2: Complex64 = (0..luts).map(|i| h[(i, j)].conj() * proj[i] * a[i]).sum();
        let t3: Complex64 = (luts..n).map(|q| h[(q, j)].conj() * proj[q] * c_k).sum();
        let t4 = h[(k, j)].conj() * b_k;
        worst = worst.max((t1 + t2 + t3 - t4).norm());
        scale = scale.max(t1.norm()).max(t2.norm()).max(t3.norm()).max(t4.norm());
    }
    worst / scale.max(1e-300)
}
