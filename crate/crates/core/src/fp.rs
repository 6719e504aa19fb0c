//! Fractional-programming block coordinate descent for weighted secrecy
//! sum-rate maximization.
//!
//! One sweep updates, in order, the SINR duals `ε`, the leakage duals `β`,
//! the quadratic-transform variables `η`, the currents (closed form for a
//! Lagrange multiplier `λ` found by bisection on the power constraint) and
//! finally the user on/off indicators `b`. Everything runs on the
//! noise-normalized Gram matrix.
//!
//! For user `k` the current update minimizes a convex quadratic whose
//! kernel is `λδ(s−s′) + Σₙ φₖₙ*(s) φₖₙ(s′)` with `φₖₙ = sₖₙ hₙ`. Inverting
//! that identity-plus-low-rank kernel gives
//!
//! ```text
//! cₖ = aₖ · diag(sₖ) · (λI + Φₖ)⁻¹ eₖ,    Φₖ = sₖsₖᵀ ∘ H,
//! aₖ = √(bₖ(1+εₖ)) ηₖ/|ηₖ|
//! ```
//!
//! and the power of user `k` is `aₖ² Σₙ |Vₖₙ|² μₙ/(λ+μₙ)²` with
//! `Φₖ = V diag(μ) Vᴴ`, which is strictly decreasing in `λ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::GramSystem;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gram::{evaluate_metrics, g_gamma_bound, signal_matrix, BeamCoefficients, MetricsReport};
use crate::numerics::{bisect_decreasing, hermitian_eig, HermitianEigen};

/// Smallest Lagrange multiplier tried; returned when the power
/// constraint is inactive.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// Maximum doublings while bracketing `λ` from above.
pub const LAMBDA_MAX_DOUBLINGS: usize = 60;

/// Starting current of the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FpInit {
    /// Equal-power maximum-ratio transmission.
    Mrt,
    /// Water-filled zero-forcing; falls back to MRT when the Gram matrix is
    /// too ill-conditioned.
    Zf,
    /// Run from both MRT and ZF and keep the better converged result.
    #[default]
    BestOfMrtZf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpConfig {
    pub init: FpInit,
    pub max_iters: usize,
    /// Stop once the WSSR gain of a sweep drops below this, bits/s/Hz.
    pub wssr_tol: f64,
    pub lambda_rel_tol: f64,
    /// Users with `|ηₖ|` at or below this get no current.
    pub eta_floor: f64,
}

impl Default for FpConfig {
    fn default() -> Self {
        Self {
            init: FpInit::default(),
            max_iters: 100,
            wssr_tol: 1e-4,
            lambda_rel_tol: 1e-10,
            eta_floor: 1e-15,
        }
    }
}

impl FpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.wssr_tol > 0.0) || !(self.lambda_rel_tol > 0.0) || !(self.eta_floor > 0.0) {
            return Err(Error::InvalidScenario(format!("FP settings must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Auxiliary variables of the block coordinate descent.
#[derive(Debug, Clone)]
pub struct FpState {
    pub b: Vec<f64>,
    pub eps: Vec<f64>,
    pub beta: Vec<f64>,
    pub eta: Vec<Complex64>,
    pub lagrange_lambda: f64,
    pub coeffs: BeamCoefficients,
    pub wssr_trace: Vec<f64>,
    pub g_gamma: f64,
    /// Completed current updates.
    pub iterations: usize,
    pub converged: bool,
}

impl FpState {
    /// Fresh state around a given starting current, every user switched on.
    ///
    /// Deriving `b` from the starting current instead would switch off each
    /// user whose start has `γₖ < Γₖ`, and such a user can never come back:
    /// its zero current gives `ηₖ = 0` from then on.
    pub fn new(gram: &GramSystem, coeffs: BeamCoefficients, power: f64) -> Result<Self> {
        let metrics = evaluate_metrics(gram, &coeffs, &gram.weights)?;
        let k = gram.num_luts;
        Ok(Self {
            b: gram.weights.clone(),
            eps: vec![0.0; k],
            beta: vec![0.0; k],
            eta: vec![Complex64::new(0.0, 0.0); k],
            lagrange_lambda: 0.0,
            coeffs,
            wssr_trace: vec![metrics.wssr],
            g_gamma: g_gamma_bound(gram, power),
            iterations: 0,
            converged: false,
        })
    }

    /// Whether user `k` receives a beam in the current update.
    pub fn is_active(&self, k: usize, eta_floor: f64) -> bool {
        self.b[k] > 0.0 && self.eta[k].norm() > eta_floor
    }

    /// Real scale vector `sₖ`: `√(bᵢ(1+εᵢ)|ηᵢ|²)` on LUT rows and
    /// `√(bₖ(1+βₖ)/(1+G_Γ))` on eavesdropper rows.
    ///
    /// The eavesdropper rows carry `bₖ` so that non-unit weights keep the
    /// surrogate consistent; for weights in {0, 1} this is the plain
    /// `√((1+βₖ)/(1+G_Γ))`.
    pub fn scale_vector(&self, k: usize, num_receivers: usize) -> Vec<f64> {
        let luts = self.b.len();
        let eve = (self.b[k] * (1.0 + self.beta[k]) / (1.0 + self.g_gamma)).max(0.0).sqrt();
        (0..num_receivers)
            .map(|n| {
                if n < luts {
                    (self.b[n] * (1.0 + self.eps[n]) * self.eta[n].norm_sqr()).max(0.0).sqrt()
                } else {
                    eve
                }
            })
            .collect()
    }

    /// Complex amplitude `aₖ = √(bₖ(1+εₖ)) ηₖ/|ηₖ|`.
    pub fn amplitude(&self, k: usize) -> Complex64 {
        let mag = (self.b[k] * (1.0 + self.eps[k])).max(0.0).sqrt();
        let eta = self.eta[k];
        if eta.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            eta / eta.norm() * mag
        }
    }

    pub fn last_wssr(&self) -> f64 {
        self.wssr_trace.last().copied().unwrap_or(0.0)
    }
}

/// Maximum-ratio start, power split equally: `cₖ = √(P/K) eₖ / √[H]ₖₖ`.
pub fn init_mrt(gram: &GramSystem, power: f64) -> BeamCoefficients {
    let k = gram.num_luts;
    let mut c = BeamCoefficients::zeros(gram.num_receivers(), k);
    let per_user = power / k as f64;
    for u in 0..k {
        let diag = gram.gram_norm[(u, u)].re;
        if diag > 0.0 {
            c.coeffs[(u, u)] = Complex64::new((per_user / diag).sqrt(), 0.0);
        }
    }
    c
}

/// Water-filled ZF start, `None` when the Gram matrix is too ill-conditioned.
pub fn init_zf(gram: &GramSystem, power: f64) -> Result<Option<BeamCoefficients>> {
    match crate::zf::run_zf(gram, &gram.weights, power) {
        Ok((coeffs, _)) => Ok(Some(coeffs)),
        Err(Error::SingularGram(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `bₖ = αₖ` when `γₖ ≥ Γₖ`, otherwise 0.
pub fn update_b(metrics: &MetricsReport, weights: &[f64]) -> Vec<f64> {
    metrics
        .sinr
        .iter()
        .zip(&metrics.leakage)
        .zip(weights)
        .map(|((&g, &l), &a)| if g >= l { a } else { 0.0 })
        .collect()
}

/// `εₖ = γₖ`.
pub fn update_epsilon(gram_norm: &DMatrix<Complex64>, coeffs: &BeamCoefficients) -> Result<Vec<f64>> {
    let s = signal_matrix(gram_norm, &coeffs.coeffs)?;
    Ok(crate::gram::sinr_from_signal(&s, coeffs.num_luts()))
}

/// `βₖ = (G_Γ − Γₖ)/(1 + Γₖ)`.
pub fn update_beta(g_gamma: f64, leakage: &[f64]) -> Vec<f64> {
    leakage.iter().map(|&l| (g_gamma - l) / (1.0 + l)).collect()
}

/// `ηₖ = S[k,k] / (1 + Σᵢ |S[k,i]|²)`, the sum running over every user.
pub fn update_eta(gram_norm: &DMatrix<Complex64>, coeffs: &BeamCoefficients) -> Result<Vec<Complex64>> {
    let s = signal_matrix(gram_norm, &coeffs.coeffs)?;
    let k = coeffs.num_luts();
    Ok((0..k)
        .map(|u| {
            let total: f64 = (0..k).map(|i| s[(u, i)].norm_sqr()).sum();
            s[(u, u)] / (1.0 + total)
        })
        .collect())
}

/// `Φ = s sᵀ ∘ H`.
pub fn build_phi(gram_norm: &DMatrix<Complex64>, scale: &[f64]) -> DMatrix<Complex64> {
    let n = gram_norm.nrows();
    DMatrix::from_fn(n, n, |i, j| gram_norm[(i, j)] * (scale[i] * scale[j]))
}

/// Power of user `k` at multiplier `lambda`:
/// `a² Σₙ |Vₖₙ|² μₙ/(λ+μₙ)²` with `Φₖ = V diag(μ) Vᴴ`.
pub fn power_of_lambda(phi_eig: &HermitianEigen, k: usize, a_mag: f64, lambda: f64) -> f64 {
    let v = &phi_eig.eigenvectors;
    let sum: f64 = phi_eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(n, &mu)| {
            let mu = mu.max(0.0);
            v[(k, n)].norm_sqr() * mu / ((lambda + mu) * (lambda + mu))
        })
        .sum();
    a_mag * a_mag * sum
}

/// Everything the current update needs for one active user.
#[derive(Debug, Clone)]
pub struct UserKernel {
    pub user: usize,
    pub scale: Vec<f64>,
    pub phi: DMatrix<Complex64>,
    pub eig: HermitianEigen,
    pub amplitude: Complex64,
}

impl UserKernel {
    pub fn power(&self, lambda: f64) -> f64 {
        power_of_lambda(&self.eig, self.user, self.amplitude.norm(), lambda)
    }

    /// Coefficient column at multiplier `lambda`, raw-basis-free
    /// (normalized channels).
    ///
    /// `wₖ = eₖ − (λI+Φ)⁻¹Φeₖ = λ(λI+Φ)⁻¹eₖ`, so `cₖ = (a/λ) diag(s) wₖ`
    /// reduces to `a diag(s) (λI+Φ)⁻¹ eₖ`.
    pub fn coefficients(&self, lambda: f64) -> Result<DVector<Complex64>> {
        let n = self.phi.nrows();
        let mut m = self.phi.clone();
        for i in 0..n {
            m[(i, i)] += lambda;
        }
        let mut rhs = DVector::zeros(n);
        rhs[self.user] = Complex64::new(1.0, 0.0);
        let x = m.lu().solve(&rhs).ok_or(Error::SingularSolve(self.user))?;
        if !x.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::SingularSolve(self.user));
        }
        Ok(DVector::from_fn(n, |i, _| x[i] * self.scale[i] * self.amplitude))
    }
}

/// Build `Φₖ` and its eigendecomposition for every active user.
pub fn prepare_kernels(
    state: &FpState,
    gram: &GramSystem,
    cfg: &FpConfig,
    exec: Execution,
) -> Result<Vec<UserKernel>> {
    let n = gram.num_receivers();
    let active: Vec<usize> = (0..gram.num_luts).filter(|&k| state.is_active(k, cfg.eta_floor)).collect();
    exec.map(active.len(), |i| {
        let k = active[i];
        let scale = state.scale_vector(k, n);
        let phi = build_phi(&gram.gram_norm, &scale);
        let eig = hermitian_eig(&phi)?;
        Ok(UserKernel {
            user: k,
            scale,
            phi,
            eig,
            amplitude: state.amplitude(k),
        })
    })
    .into_iter()
    .collect()
}

fn total_power(kernels: &[UserKernel], lambda: f64) -> f64 {
    kernels.iter().map(|u| u.power(lambda)).sum()
}

/// Multiplier meeting the power budget for precomputed kernels.
pub fn solve_lambda_for(kernels: &[UserKernel], power: f64, rel_tol: f64) -> Result<f64> {
    if kernels.is_empty() {
        return Err(Error::AllUsersOff);
    }
    let f = |l: f64| total_power(kernels, l);
    let at_floor = f(LAMBDA_FLOOR);
    if at_floor <= power {
        return Ok(LAMBDA_FLOOR);
    }
    let mut lo = LAMBDA_FLOOR;
    let mut hi = 1.0;
    let mut doublings = 0;
    while f(hi) >= power {
        if doublings == LAMBDA_MAX_DOUBLINGS {
            return Err(Error::BracketFailure { target: power, f_lo: at_floor, f_hi: f(hi) });
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
    }
    bisect_decreasing(f, power, lo, hi, rel_tol)
}

/// Lagrange multiplier `λ` with total power equal to `power`, or
/// [`LAMBDA_FLOOR`] when even the unconstrained minimizer stays below it.
pub fn solve_lambda(state: &FpState, gram: &GramSystem, power: f64, cfg: &FpConfig) -> Result<f64> {
    let kernels = prepare_kernels(state, gram, cfg, Execution::Sequential)?;
    solve_lambda_for(&kernels, power, cfg.lambda_rel_tol)
}

pub fn currents_for(
    kernels: &[UserKernel],
    num_receivers: usize,
    num_luts: usize,
    lambda: f64,
    exec: Execution,
) -> Result<BeamCoefficients> {
    let columns: Vec<Result<DVector<Complex64>>> = exec.map(kernels.len(), |i| kernels[i].coefficients(lambda));
    let mut out = BeamCoefficients::zeros(num_receivers, num_luts);
    for (kernel, col) in kernels.iter().zip(columns) {
        out.coeffs.set_column(kernel.user, &col?);
    }
    Ok(out)
}

/// Closed-form current update at a given multiplier; inactive users get
/// a zero column.
pub fn update_currents(state: &FpState, gram: &GramSystem, lambda: f64, cfg: &FpConfig) -> Result<BeamCoefficients> {
    let kernels = prepare_kernels(state, gram, cfg, Execution::Sequential)?;
    currents_for(&kernels, gram.num_receivers(), gram.num_luts, lambda, Execution::Sequential)
}

/// Full optimizer, users handled sequentially inside each sweep.
pub fn run_bcd(gram: &GramSystem, weights: &[f64], power: f64, cfg: &FpConfig) -> Result<(BeamCoefficients, FpState)> {
    run_bcd_with(gram, weights, power, cfg, Execution::Sequential)
}

/// Full optimizer; `exec` controls the per-user kernel work inside a sweep.
///
/// When every user is switched off the zero current is returned with a
/// trailing zero in the trace.
pub fn run_bcd_with(
    gram: &GramSystem,
    weights: &[f64],
    power: f64,
    cfg: &FpConfig,
    exec: Execution,
) -> Result<(BeamCoefficients, FpState)> {
    cfg.validate()?;
    if weights.len() != gram.num_luts {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} LUTs",
            weights.len(),
            gram.num_luts
        )));
    }
    let gram = &GramSystem { weights: weights.to_vec(), ..gram.clone() };
    let zf = match cfg.init {
        FpInit::Mrt => None,
        FpInit::Zf | FpInit::BestOfMrtZf => init_zf(gram, power)?,
    };
    let from_mrt = || run_from(gram, init_mrt(gram, power), power, cfg, exec);
    match (cfg.init, zf) {
        (FpInit::BestOfMrtZf, Some(zf)) => {
            let a = from_mrt()?;
            let b = run_from(gram, zf, power, cfg, exec)?;
            Ok(if b.1.last_wssr() > a.1.last_wssr() { b } else { a })
        }
        (FpInit::Zf, Some(zf)) => run_from(gram, zf, power, cfg, exec),
        _ => from_mrt(),
    }
}

/// Block coordinate descent from a given starting current.
pub fn run_from(
    gram: &GramSystem,
    start: BeamCoefficients,
    power: f64,
    cfg: &FpConfig,
    exec: Execution,
) -> Result<(BeamCoefficients, FpState)> {
    let weights = &gram.weights;
    let mut state = FpState::new(gram, start, power)?;
    let mut metrics = evaluate_metrics(gram, &state.coeffs, weights)?;

    for _ in 0..cfg.max_iters {
        state.eps = update_epsilon(&gram.gram_norm, &state.coeffs)?;
        state.beta = update_beta(state.g_gamma, &metrics.leakage);
        state.eta = update_eta(&gram.gram_norm, &state.coeffs)?;

        let kernels = prepare_kernels(&state, gram, cfg, exec)?;
        if kernels.is_empty() {
            state.coeffs = BeamCoefficients::zeros(gram.num_receivers(), gram.num_luts);
            state.wssr_trace.push(0.0);
            state.converged = true;
            return Ok((state.coeffs.clone(), state));
        }
        let lambda = solve_lambda_for(&kernels, power, cfg.lambda_rel_tol)?;
        state.lagrange_lambda = lambda;
        state.coeffs = currents_for(&kernels, gram.num_receivers(), gram.num_luts, lambda, exec)?;
        state.iterations += 1;

        metrics = evaluate_metrics(gram, &state.coeffs, weights)?;
        state.b = update_b(&metrics, weights);
        let previous = state.last_wssr();
        state.wssr_trace.push(metrics.wssr);
        if (metrics.wssr - previous).abs() < cfg.wssr_tol {
            state.converged = true;
            break;
        }
    }
    if state.b.iter().all(|&b| b == 0.0) {
        state.coeffs = BeamCoefficients::zeros(gram.num_receivers(), gram.num_luts);
    }
    Ok((state.coeffs.clone(), state))
}

/// The kernel `λδ(s−s′) + Σₙ φₙ*(s) φₙ(s′)` and its closed-form inverse,
/// acting on functions sampled at quadrature nodes.
#[derive(Debug, Clone)]
pub struct LowRankKernel {
    pub lambda: f64,
    /// `N × nodes`, row `n` is `φₙ` on the grid.
    pub phi: DMatrix<Complex64>,
    pub weights: Vec<f64>,
}

impl LowRankKernel {
    pub fn new(lambda: f64, phi: DMatrix<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if phi.ncols() != weights.len() || !(lambda > 0.0) {
            return Err(Error::DimensionMismatch(format!(
                "kernel with {} nodes, {} weights, lambda {lambda}",
                phi.ncols(),
                weights.len()
            )));
        }
        Ok(Self { lambda, phi, weights })
    }

    /// Kernel of user `k`: `φₙ = sₖₙ hₙ` on normalized channel samples.
    pub fn for_user(
        state: &FpState,
        k: usize,
        normalized_samples: &DMatrix<Complex64>,
        weights: Vec<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let scale = state.scale_vector(k, normalized_samples.nrows());
        let mut phi = normalized_samples.clone();
        for (n, mut row) in phi.row_iter_mut().enumerate() {
            row.scale_mut(scale[n]);
        }
        Self::new(lambda, phi, weights)
    }

    /// `⟨φₙ, u⟩ = Σⱼ wⱼ φₙ(sⱼ) u(sⱼ)` for every `n`.
    fn project(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        let wu = DVector::from_fn(u.len(), |j, _| u[j] * self.weights[j]);
        &self.phi * wu
    }

    /// `[Φ]ₙₙ′ = Σⱼ wⱼ φₙ(sⱼ) φₙ′*(sⱼ)`.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let weighted = DMatrix::from_fn(self.phi.nrows(), self.phi.ncols(), |i, j| self.phi[(i, j)] * self.weights[j]);
        weighted * self.phi.adjoint()
    }

    pub fn apply(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        let p = self.project(u);
        u.scale(self.lambda) + self.phi.adjoint() * p
    }

    /// `(1/λ)(v − Σₙₙ′ φₙ* [(λI+Φ)⁻¹]ₙₙ′ ⟨φₙ′, v⟩)`.
    pub fn apply_inverse(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let mut m = self.gram();
        for i in 0..m.nrows() {
            m[(i, i)] += self.lambda;
        }
        let p = self.project(v);
        let x = m.lu().solve(&p).ok_or(Error::SingularSolve(0))?;
        Ok((v - self.phi.adjoint() * x).unscale(self.lambda))
    }
}
