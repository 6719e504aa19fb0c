//! Comparison schemes: maximum-ratio transmission on the continuous
//! aperture and the three schemes on an equivalent discrete array.
//!
//! Both apertures reduce to a [`GramSystem`], so every scheme runs through
//! the same solvers and only the Gram construction differs.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{build_mimo_channels, capa_gram, GramSystem, MimoChannelSet, Scenario};
use crate::error::{Error, Result};
use crate::fp::{init_mrt, run_bcd, FpConfig};
use crate::gram::{evaluate_metrics, BeamCoefficients, MetricsReport};
use crate::zf::run_zf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "capa-fp")]
    CapaFp,
    #[serde(rename = "capa-zf")]
    CapaZf,
    #[serde(rename = "capa-mrt")]
    CapaMrt,
    #[serde(rename = "mimo-opt")]
    MimoOpt,
    #[serde(rename = "mimo-zf")]
    MimoZf,
    #[serde(rename = "mimo-mrt")]
    MimoMrt,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::CapaFp,
        Scheme::CapaZf,
        Scheme::CapaMrt,
        Scheme::MimoOpt,
        Scheme::MimoZf,
        Scheme::MimoMrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CapaFp => "capa-fp",
            Scheme::CapaZf => "capa-zf",
            Scheme::CapaMrt => "capa-mrt",
            Scheme::MimoOpt => "mimo-opt",
            Scheme::MimoZf => "mimo-zf",
            Scheme::MimoMrt => "mimo-mrt",
        }
    }

    pub fn aperture(self) -> ApertureKind {
        match self {
            Scheme::CapaFp | Scheme::CapaZf | Scheme::CapaMrt => ApertureKind::Capa,
            _ => ApertureKind::Mimo,
        }
    }

    pub fn is_optimizer(self) -> bool {
        matches!(self, Scheme::CapaFp | Scheme::MimoOpt)
    }

    /// Comma-separated list of names.
    pub fn parse_list(s: &str) -> Result<Vec<Scheme>> {
        s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ApertureKind {
    Capa,
    Mimo,
}

/// Builds the Gram system of a scenario for either aperture model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GramProvider {
    pub kind: ApertureKind,
}

impl GramProvider {
    pub fn capa() -> Self {
        Self { kind: ApertureKind::Capa }
    }

    pub fn mimo() -> Self {
        Self { kind: ApertureKind::Mimo }
    }

    pub fn gram(&self, scenario: &Scenario) -> Result<GramSystem> {
        scenario.validate()?;
        match self.kind {
            ApertureKind::Capa => capa_gram(scenario),
            ApertureKind::Mimo => mimo_gram_for(scenario),
        }
    }
}

/// Equal-power maximum-ratio transmission.
pub fn run_mrt(gram: &GramSystem, weights: &[f64], power: f64) -> Result<(BeamCoefficients, MetricsReport)> {
    let coeffs = init_mrt(gram, power);
    let metrics = evaluate_metrics(gram, &coeffs, weights)?;
    Ok((coeffs, metrics))
}

/// `[H]ₙₘ = Σₐ hₙ(a) hₘ*(a)` over the array elements.
pub fn mimo_gram(
    mimo: &MimoChannelSet,
    noise: Vec<f64>,
    weights: Vec<f64>,
    num_luts: usize,
    power: f64,
) -> Result<GramSystem> {
    let h = &mimo.channel_matrix;
    let gram: DMatrix<Complex64> = h.transpose() * h.conjugate();
    GramSystem::from_raw(gram, noise, weights, num_luts, power)
}

fn mimo_gram_for(scenario: &Scenario) -> Result<GramSystem> {
    let mimo = build_mimo_channels(scenario)?;
    mimo_gram(
        &mimo,
        scenario.noise_powers(),
        scenario.weights.clone(),
        scenario.num_luts(),
        scenario.power_budget,
    )
}

/// Outcome of one scheme on one Gram system.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub coeffs: BeamCoefficients,
    pub metrics: MetricsReport,
    /// FP sweeps; 0 for the closed-form schemes.
    pub iterations: usize,
    /// Per-sweep WSSR, optimizers only.
    pub trace: Vec<f64>,
}

/// Run `scheme` on a Gram system already built for its aperture.
pub fn run_scheme_on(scheme: Scheme, gram: &GramSystem, fp: &FpConfig) -> Result<SchemeOutcome> {
    let (weights, power) = (&gram.weights, gram.power_budget);
    if scheme.is_optimizer() {
        let (coeffs, state) = run_bcd(gram, weights, power, fp)?;
        let metrics = evaluate_metrics(gram, &coeffs, weights)?;
        return Ok(SchemeOutcome { coeffs, metrics, iterations: state.iterations, trace: state.wssr_trace });
    }
    let (coeffs, metrics) = match scheme {
        Scheme::CapaZf | Scheme::MimoZf => run_zf(gram, weights, power)?,
        _ => run_mrt(gram, weights, power)?,
    };
    Ok(SchemeOutcome { coeffs, metrics, iterations: 0, trace: Vec::new() })
}

/// Run the discrete-array optimizer, ZF and MRT on one scenario.
pub fn run_mimo_suite(scenario: &Scenario, fp: &FpConfig) -> Result<Vec<(Scheme, Result<MetricsReport>)>> {
    let gram = GramProvider::mimo().gram(scenario)?;
    Ok([Scheme::MimoOpt, Scheme::MimoZf, Scheme::MimoMrt]
        .into_iter()
        .map(|s| (s, run_scheme_on(s, &gram, fp).map(|o| o.metrics)))
        .collect())
}
