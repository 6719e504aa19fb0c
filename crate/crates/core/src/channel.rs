//! Line-of-sight electromagnetic channels of a planar continuous aperture.
//!
//! Every receiver sees the scalar response `ûᵀ G(r, s) û_tx` of the free-space
//! dyadic Green's function, sampled on a Gauss–Legendre grid over the
//! aperture. The channel Gram matrix built from those samples is the only
//! object the solvers touch afterwards.
//!
//! Receivers are always ordered LUTs first, then eavesdroppers.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre_grid, hermitian_part, QuadratureGrid};

/// Propagation speed used to derive wavelengths, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Current amplitude unit in amperes (1 mA).
pub const MILLIAMPERE: f64 = 1e-3;

pub type Point3 = [f64; 3];

/// 3×3 complex dyad, row-major.
pub type Dyad = [[Complex64; 3]; 3];

fn default_current_unit() -> f64 {
    MILLIAMPERE
}

/// Full physical description of one downlink instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Aperture extent along x, meters.
    pub aperture_side_x: f64,
    /// Aperture extent along y, meters.
    pub aperture_side_y: f64,
    /// Carrier frequency, Hz.
    pub frequency: f64,
    /// Intrinsic impedance of the medium, ohms.
    pub impedance: f64,
    pub lut_positions: Vec<Point3>,
    pub eve_positions: Vec<Point3>,
    pub lut_polarizations: Vec<Point3>,
    pub eve_polarizations: Vec<Point3>,
    pub tx_polarization: Point3,
    /// Per-LUT noise power, V²/m².
    pub noise_powers_lut: Vec<f64>,
    /// Per-eavesdropper noise power, V²/m².
    pub noise_powers_eve: Vec<f64>,
    /// Total current power budget, in squared `current_unit`s.
    pub power_budget: f64,
    pub weights: Vec<f64>,
    /// Gauss–Legendre points per aperture axis.
    pub quadrature_order: usize,
    /// Amperes carried by one unit of source-current amplitude.
    #[serde(default = "default_current_unit")]
    pub current_unit: f64,
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(s)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn aperture_area(&self) -> f64 {
        self.aperture_side_x * self.aperture_side_y
    }

    pub fn num_luts(&self) -> usize {
        self.lut_positions.len()
    }

    pub fn num_eves(&self) -> usize {
        self.eve_positions.len()
    }

    pub fn num_receivers(&self) -> usize {
        self.num_luts() + self.num_eves()
    }

    /// Position and polarization of receiver `n` (LUTs first).
    pub fn receiver(&self, n: usize) -> Result<(Point3, Point3)> {
        let k = self.num_luts();
        if n < k {
            Ok((self.lut_positions[n], self.lut_polarizations[n]))
        } else if n < self.num_receivers() {
            Ok((self.eve_positions[n - k], self.eve_polarizations[n - k]))
        } else {
            Err(Error::ReceiverIndex { index: n, count: self.num_receivers() })
        }
    }

    /// Noise powers of all receivers in receiver order.
    pub fn noise_powers(&self) -> Vec<f64> {
        self.noise_powers_lut
            .iter()
            .chain(&self.noise_powers_eve)
            .copied()
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        let (k, q) = (self.num_luts(), self.num_eves());
        if k == 0 {
            return bad("at least one LUT is required".into());
        }
        if self.lut_polarizations.len() != k
            || self.noise_powers_lut.len() != k
            || self.weights.len() != k
        {
            return bad(format!(
                "LUT arrays disagree: {k} positions, {} polarizations, {} noise powers, {} weights",
                self.lut_polarizations.len(),
                self.noise_powers_lut.len(),
                self.weights.len()
            ));
        }
        if self.eve_polarizations.len() != q || self.noise_powers_eve.len() != q {
            return bad(format!(
                "eavesdropper arrays disagree: {q} positions, {} polarizations, {} noise powers",
                self.eve_polarizations.len(),
                self.noise_powers_eve.len()
            ));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.aperture_side_x) || !positive(self.aperture_side_y) {
            return bad("aperture sides must be positive".into());
        }
        if !positive(self.frequency) || !positive(self.impedance) || !positive(self.current_unit) {
            return bad("frequency, impedance and current unit must be positive".into());
        }
        if !positive(self.power_budget) {
            return bad(format!("power budget must be positive, got {}", self.power_budget));
        }
        if self.quadrature_order == 0 {
            return bad("quadrature order must be at least 1".into());
        }
        if !self.noise_powers().into_iter().all(positive) {
            return bad("noise powers must be positive".into());
        }
        if !self.weights.iter().all(|&a| a >= 0.0 && a.is_finite()) {
            return bad("weights must be non-negative".into());
        }
        let unit = |u: &Point3| (norm3(u) - 1.0).abs() <= 1e-12;
        if !unit(&self.tx_polarization)
            || !self.lut_polarizations.iter().all(unit)
            || !self.eve_polarizations.iter().all(unit)
        {
            return bad("polarization vectors must have unit norm".into());
        }
        for p in self.lut_positions.iter().chain(&self.eve_positions) {
            if !(p[2].abs() > 0.0) || !p.iter().all(|c| c.is_finite()) {
                return bad(format!("receiver {p:?} must lie strictly off the aperture plane"));
            }
        }
        Ok(())
    }
}

fn norm3(v: &Point3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Free-space dyadic Green's function
/// `G(r, s) = jη e^{−j2π‖d‖/λ} / (2λ‖d‖) · (I − d dᵀ/‖d‖²)`, `d = r − s`.
pub fn green_dyadic(receiver: Point3, source: Point3, wavelength: f64, impedance: f64) -> Result<Dyad> {
    let d = [
        receiver[0] - source[0],
        receiver[1] - source[1],
        receiver[2] - source[2],
    ];
    let dist = norm3(&d);
    if dist < 1e-12 {
        return Err(Error::CoincidentPoints(dist));
    }
    let phase = -2.0 * PI * dist / wavelength;
    let prefactor = Complex64::new(0.0, impedance / (2.0 * wavelength * dist)) * Complex64::from_polar(1.0, phase);
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            g[i][j] = prefactor * (delta - d[i] * d[j] / (dist * dist));
        }
    }
    Ok(g)
}

fn project(dyad: &Dyad, rx: &Point3, tx: &Point3) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc += dyad[i][j] * (rx[i] * tx[j]);
        }
    }
    acc
}

/// Scalar response `ûₙᵀ G(rₙ, s) û_tx` of receiver `receiver_index` (0-based,
/// LUTs first) to a unit current element at `node`, per `current_unit`.
pub fn scalar_channel(scenario: &Scenario, receiver_index: usize, node: Point3) -> Result<Complex64> {
    let (pos, pol) = scenario.receiver(receiver_index)?;
    let g = green_dyadic(pos, node, scenario.wavelength(), scenario.impedance)?;
    Ok(project(&g, &pol, &scenario.tx_polarization) * scenario.current_unit)
}

/// Channel responses of every receiver at every quadrature node.
#[derive(Debug, Clone)]
pub struct ChannelSamples {
    /// `N × nodes`; row `n` is `hₙ(s)` over the grid.
    pub values: DMatrix<Complex64>,
    pub grid: QuadratureGrid,
    pub num_luts: usize,
}

impl ChannelSamples {
    pub fn num_receivers(&self) -> usize {
        self.values.nrows()
    }
}

pub fn aperture_grid(scenario: &Scenario) -> Result<QuadratureGrid> {
    gauss_legendre_grid(
        scenario.aperture_side_x / 2.0,
        scenario.aperture_side_y / 2.0,
        scenario.quadrature_order,
    )
}

pub fn sample_channels(scenario: &Scenario) -> Result<ChannelSamples> {
    let grid = aperture_grid(scenario)?;
    let n = scenario.num_receivers();
    let mut values = DMatrix::zeros(n, grid.len());
    for r in 0..n {
        for (j, node) in grid.points3().enumerate() {
            values[(r, j)] = scalar_channel(scenario, r, node)?;
        }
    }
    Ok(ChannelSamples { values, grid, num_luts: scenario.num_luts() })
}

/// Channel Gram matrices plus the per-receiver bookkeeping the solvers need.
#[derive(Debug, Clone)]
pub struct GramSystem {
    /// `[H]ₙₘ = ∫ hₙ hₘ* ds` over un-normalized channels.
    pub gram_raw: DMatrix<Complex64>,
    /// Same with channel `n` divided by its noise standard deviation.
    pub gram_norm: DMatrix<Complex64>,
    /// Noise power of every receiver, LUTs first.
    pub noise: Vec<f64>,
    pub weights: Vec<f64>,
    pub num_luts: usize,
    pub num_eves: usize,
    pub power_budget: f64,
}

impl GramSystem {
    /// Assemble from a raw Gram matrix; the input is symmetrized first.
    pub fn from_raw(
        gram_raw: DMatrix<Complex64>,
        noise: Vec<f64>,
        weights: Vec<f64>,
        num_luts: usize,
        power_budget: f64,
    ) -> Result<Self> {
        let n = gram_raw.nrows();
        if !gram_raw.is_square() || noise.len() != n || num_luts == 0 || num_luts > n || weights.len() != num_luts {
            return Err(Error::DimensionMismatch(format!(
                "Gram {}x{}, {} noise powers, {} weights, {num_luts} LUTs",
                gram_raw.nrows(),
                gram_raw.ncols(),
                noise.len(),
                weights.len()
            )));
        }
        let gram_raw = hermitian_part(&gram_raw);
        let std: Vec<f64> = noise.iter().map(|s| s.sqrt()).collect();
        let gram_norm = DMatrix::from_fn(n, n, |i, j| gram_raw[(i, j)] / (std[i] * std[j]));
        Ok(Self {
            gram_raw,
            gram_norm,
            noise,
            weights,
            num_luts,
            num_eves: n - num_luts,
            power_budget,
        })
    }

    pub fn num_receivers(&self) -> usize {
        self.num_luts + self.num_eves
    }

    pub fn noise_std(&self) -> Vec<f64> {
        self.noise.iter().map(|s| s.sqrt()).collect()
    }

    /// Copy with a different power budget.
    pub fn with_power(&self, power_budget: f64) -> Self {
        Self { power_budget, ..self.clone() }
    }
}

/// Weighted quadrature inner products of the sampled channels.
pub fn build_gram(samples: &ChannelSamples, scenario: &Scenario) -> Result<GramSystem> {
    let n = samples.num_receivers();
    if scenario.num_receivers() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} sampled receivers but scenario has {}",
            scenario.num_receivers()
        )));
    }
    let h = &samples.values;
    let weighted = DMatrix::from_fn(n, h.ncols(), |i, j| h[(i, j)] * samples.grid.weights[j]);
    let gram = weighted * h.adjoint();
    GramSystem::from_raw(
        gram,
        scenario.noise_powers(),
        scenario.weights.clone(),
        scenario.num_luts(),
        scenario.power_budget,
    )
}

/// Channel sampling followed by Gram assembly.
pub fn capa_gram(scenario: &Scenario) -> Result<GramSystem> {
    build_gram(&sample_channels(scenario)?, scenario)
}

/// Ceiling that ignores floating-point noise just above an integer.
pub(crate) fn tolerant_ceil(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Half-wavelength discrete array occupying the same aperture.
#[derive(Debug, Clone)]
pub struct MimoChannelSet {
    pub antenna_positions: Vec<Point3>,
    /// `N_ant × N`; column `n` is the channel vector to receiver `n`.
    pub channel_matrix: DMatrix<Complex64>,
    /// Effective area of one antenna, `λ²/4π`.
    pub effective_area: f64,
}

pub fn build_mimo_channels(scenario: &Scenario) -> Result<MimoChannelSet> {
    let wl = scenario.wavelength();
    let d = wl / 2.0;
    let (lx, ly) = (scenario.aperture_side_x, scenario.aperture_side_y);
    let (nx, ny) = (tolerant_ceil(lx / d), tolerant_ceil(ly / d));
    let mut antenna_positions = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            antenna_positions.push([ix as f64 * d - lx / 2.0, iy as f64 * d - ly / 2.0, 0.0]);
        }
    }
    let effective_area = wl * wl / (4.0 * PI);
    let scale = effective_area.sqrt();
    let n = scenario.num_receivers();
    let mut channel_matrix = DMatrix::zeros(antenna_positions.len(), n);
    for r in 0..n {
        for (a, &pos) in antenna_positions.iter().enumerate() {
            channel_matrix[(a, r)] = scalar_channel(scenario, r, pos)? * scale;
        }
    }
    Ok(MimoChannelSet { antenna_positions, channel_matrix, effective_area })
}

/// Number of Fourier basis functions `(2⌈Lx/λ⌉+1)(2⌈Ly/λ⌉+1)` a
/// Fourier-series discretization of the aperture would need.
pub fn fourier_basis_count(len_x: f64, len_y: f64, wavelength: f64) -> usize {
    (2 * tolerant_ceil(len_x / wavelength) + 1) * (2 * tolerant_ceil(len_y / wavelength) + 1)
}
