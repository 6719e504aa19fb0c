//! Monte-Carlo sweeps over randomized receiver placements.
//!
//! Trial `t` of every sweep point uses the seed `base_seed + t`, so all
//! sweep points of a trial share the same receiver draw whenever the
//! receiver count allows it. Positions come from ChaCha8 seeded with
//! `seed_from_u64`, which reproduces bit-for-bit on every platform.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_scheme_on, ApertureKind, GramProvider, Scheme};
use crate::channel::{GramSystem, Point3, Scenario, MILLIAMPERE};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fp::FpConfig;

/// Receiver placement box: `|x| ≤ half_x`, `|y| ≤ half_y`, `z_min ≤ z ≤ z_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuboidRegion {
    pub half_x: f64,
    pub half_y: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for CuboidRegion {
    fn default() -> Self {
        Self { half_x: 5.0, half_y: 5.0, z_min: 15.0, z_max: 30.0 }
    }
}

impl CuboidRegion {
    pub fn contains(&self, p: &Point3) -> bool {
        p[0].abs() <= self.half_x && p[1].abs() <= self.half_y && p[2] >= self.z_min && p[2] <= self.z_max
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point3 {
        [
            rng.random_range(-self.half_x..=self.half_x),
            rng.random_range(-self.half_y..=self.half_y),
            rng.random_range(self.z_min..=self.z_max),
        ]
    }
}

/// Everything about a scenario except receiver positions, plus optional
/// fixed positions that switch randomization off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioDefaults {
    /// Square aperture area, m².
    pub aperture_area: f64,
    pub frequency: f64,
    pub impedance: f64,
    pub num_luts: usize,
    pub num_eves: usize,
    pub power_budget: f64,
    pub noise_power_lut: f64,
    pub noise_power_eve: f64,
    pub weight: f64,
    pub quadrature_order: usize,
    pub current_unit: f64,
    /// Shared by every receiver and the aperture.
    pub polarization: Point3,
    pub region: CuboidRegion,
    pub lut_positions: Option<Vec<Point3>>,
    pub eve_positions: Option<Vec<Point3>>,
}

impl Default for ScenarioDefaults {
    fn default() -> Self {
        Self {
            aperture_area: 0.25,
            frequency: 2.4e9,
            impedance: 120.0 * std::f64::consts::PI,
            num_luts: 8,
            num_eves: 3,
            power_budget: 10.0,
            noise_power_lut: 5.6e-3,
            noise_power_eve: 5.6e-3,
            weight: 1.0,
            quadrature_order: 10,
            current_unit: MILLIAMPERE,
            polarization: [0.0, 1.0, 0.0],
            region: CuboidRegion::default(),
            lut_positions: None,
            eve_positions: None,
        }
    }
}

impl ScenarioDefaults {
    fn validate(&self) -> Result<()> {
        let r = &self.region;
        if !(r.half_x >= 0.0 && r.half_y >= 0.0 && r.z_min <= r.z_max && r.z_min > 0.0) {
            return Err(Error::InvalidScenario(format!("bad placement region {r:?}")));
        }
        if !(self.aperture_area > 0.0) {
            return Err(Error::InvalidScenario("aperture area must be positive".into()));
        }
        Ok(())
    }
}

/// Scenario defaults plus optimizer settings, the JSON accepted by `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioDefaults,
    pub fp: FpConfig,
}

impl SimConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(s)?;
        cfg.scenario.validate()?;
        cfg.fp.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Draw receiver positions for `seed` and fill in everything else from `defaults`.
pub fn sample_scenario(defaults: &ScenarioDefaults, seed: u64) -> Result<Scenario> {
    defaults.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |fixed: &Option<Vec<Point3>>, count: usize| match fixed {
        Some(p) => p.clone(),
        None => (0..count).map(|_| defaults.region.sample(&mut rng)).collect(),
    };
    let lut_positions = draw(&defaults.lut_positions, defaults.num_luts);
    let eve_positions = draw(&defaults.eve_positions, defaults.num_eves);
    let (k, q) = (lut_positions.len(), eve_positions.len());
    let side = defaults.aperture_area.sqrt();
    let scenario = Scenario {
        aperture_side_x: side,
        aperture_side_y: side,
        frequency: defaults.frequency,
        impedance: defaults.impedance,
        lut_positions,
        eve_positions,
        lut_polarizations: vec![defaults.polarization; k],
        eve_polarizations: vec![defaults.polarization; q],
        tx_polarization: defaults.polarization,
        noise_powers_lut: vec![defaults.noise_power_lut; k],
        noise_powers_eve: vec![defaults.noise_power_eve; q],
        power_budget: defaults.power_budget,
        weights: vec![defaults.weight; k],
        quadrature_order: defaults.quadrature_order,
        current_unit: defaults.current_unit,
    };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Power,
    Aperture,
    NumLuts,
    NumEves,
    /// Aperture areas; records carry the full FP trace.
    Convergence,
    /// Default scenario only; the value is the power budget.
    Single,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Power => "power",
            SweepKind::Aperture => "aperture",
            SweepKind::NumLuts => "num-luts",
            SweepKind::NumEves => "num-eves",
            SweepKind::Convergence => "convergence",
            SweepKind::Single => "single",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            SweepKind::Power,
            SweepKind::Aperture,
            SweepKind::NumLuts,
            SweepKind::NumEves,
            SweepKind::Convergence,
            SweepKind::Single,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidSweep(format!("unknown sweep kind '{s}'")))
    }

    /// Sweep points used when none are given.
    pub fn default_values(self, defaults: &ScenarioDefaults) -> Vec<f64> {
        match self {
            SweepKind::Power => vec![1.0, 10.0, 1e2, 1e3, 1e4, 1e5],
            SweepKind::Aperture => vec![0.1, 0.2, 0.3, 0.4, 0.5],
            SweepKind::NumLuts => vec![2.0, 4.0, 6.0, 8.0, 10.0],
            SweepKind::NumEves => vec![1.0, 2.0, 3.0, 4.0, 5.0],
            SweepKind::Convergence => vec![0.25, 0.5],
            SweepKind::Single => vec![defaults.power_budget],
        }
    }

    /// `defaults` with the sweep value applied.
    pub fn apply(self, defaults: &ScenarioDefaults, value: f64) -> Result<ScenarioDefaults> {
        let mut d = defaults.clone();
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else if value == 0.0 && self == SweepKind::NumEves {
                Ok(0)
            } else {
                Err(Error::InvalidSweep(format!("{} needs whole counts, got {value}", self.name())))
            }
        };
        match self {
            SweepKind::Power | SweepKind::Single => d.power_budget = value,
            SweepKind::Aperture | SweepKind::Convergence => d.aperture_area = value,
            SweepKind::NumLuts => {
                d.num_luts = count()?;
                d.lut_positions = None;
            }
            SweepKind::NumEves => {
                d.num_eves = count()?;
                d.eve_positions = None;
            }
        }
        if !(value > 0.0) && self != SweepKind::NumEves {
            return Err(Error::InvalidSweep(format!("{} value must be positive, got {value}", self.name())));
        }
        Ok(d)
    }
}

/// `"a,b,c"` or geometric `"start:stop:count"`.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidSweep(msg);
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(format!("not a number: '{t}'")));
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?,
        [start, stop, count] => {
            let (a, b) = (num(start)?, num(stop)?);
            let n: usize = count.trim().parse().map_err(|_| bad(format!("bad count '{count}'")))?;
            if !(a > 0.0 && b > 0.0) || n == 0 {
                return Err(bad(format!("geometric range needs positive ends and count, got '{s}'")));
            }
            if n == 1 {
                vec![a]
            } else {
                let ratio = (b / a).ln() / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == n - 1 { b } else { a * (ratio * i as f64).exp() })
                    .collect()
            }
        }
        _ => return Err(bad(format!("cannot parse values '{s}'"))),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad(format!("no usable values in '{s}'")));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub schemes: Vec<Scheme>,
    pub config: SimConfig,
    /// Fill the `wall_time_ms` column (makes the output non-reproducible).
    pub record_timing: bool,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, config: SimConfig) -> Self {
        Self {
            kind,
            values: kind.default_values(&config.scenario),
            trials: 200,
            base_seed: 0,
            schemes: Scheme::ALL.to_vec(),
            config,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.values.is_empty() || self.schemes.is_empty() {
            return Err(Error::InvalidSweep("need at least one trial, value and scheme".into()));
        }
        if self.base_seed.checked_add(self.trials as u64 - 1).is_none() {
            return Err(Error::InvalidSweep("seed range overflows u64".into()));
        }
        for &v in &self.values {
            self.kind.apply(&self.config.scenario, v)?;
        }
        self.config.fp.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scheme: String,
    pub sweep_value: f64,
    pub trial_index: usize,
    pub seed: u64,
    /// Absent when the trial failed.
    pub wssr: Option<f64>,
    pub per_user_secrecy: Vec<f64>,
    /// FP sweeps; 0 for closed-form schemes.
    pub iterations: usize,
    pub wall_time_ms: Option<f64>,
    pub error: Option<String>,
    /// WSSR after each FP sweep, starting from the initial point.
    pub trace: Vec<f64>,
}

impl SweepRecord {
    fn failed(scheme: Scheme, value: f64, trial: usize, seed: u64, err: String) -> Self {
        Self {
            scheme: scheme.name().to_string(),
            sweep_value: value,
            trial_index: trial,
            seed,
            wssr: None,
            per_user_secrecy: Vec::new(),
            iterations: 0,
            wall_time_ms: None,
            error: Some(err),
            trace: Vec::new(),
        }
    }
}

fn run_point(spec: &SweepSpec, value_index: usize, trial: usize) -> Vec<SweepRecord> {
    let value = spec.values[value_index];
    let seed = spec.base_seed + trial as u64;
    let scenario = spec
        .kind
        .apply(&spec.config.scenario, value)
        .and_then(|d| sample_scenario(&d, seed));
    let scenario = match scenario {
        Ok(s) => s,
        Err(e) => return spec.schemes.iter().map(|&s| SweepRecord::failed(s, value, trial, seed, e.to_string())).collect(),
    };
    let mut grams: [Option<std::result::Result<GramSystem, String>>; 2] = [None, None];
    spec.schemes
        .iter()
        .map(|&scheme| {
            let start = Instant::now();
            let (slot, provider) = match scheme.aperture() {
                ApertureKind::Capa => (0, GramProvider::capa()),
                ApertureKind::Mimo => (1, GramProvider::mimo()),
            };
            let gram = grams[slot].get_or_insert_with(|| provider.gram(&scenario).map_err(|e| e.to_string()));
            let outcome = match gram {
                Ok(g) => run_scheme_on(scheme, g, &spec.config.fp).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let mut rec = match outcome {
                Ok(o) => SweepRecord {
                    scheme: scheme.name().to_string(),
                    sweep_value: value,
                    trial_index: trial,
                    seed,
                    wssr: Some(o.metrics.wssr),
                    per_user_secrecy: o.metrics.per_user_secrecy,
                    iterations: o.iterations,
                    wall_time_ms: None,
                    error: None,
                    trace: o.trace,
                },
                Err(e) => SweepRecord::failed(scheme, value, trial, seed, e),
            };
            if spec.record_timing {
                rec.wall_time_ms = Some(elapsed);
            }
            rec
        })
        .collect()
}

/// One record per (scheme, value, trial), ordered by scheme (as listed in
/// the spec), then sweep value, then trial.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let points = spec.values.len() * spec.trials;
    let per_point = exec.map(points, |i| run_point(spec, i / spec.trials, i % spec.trials));
    let mut records = Vec::with_capacity(points * spec.schemes.len());
    for (s, _) in spec.schemes.iter().enumerate() {
        for point in &per_point {
            records.push(point[s].clone());
        }
    }
    Ok(records)
}

/// Mean WSSR over successful trials of every (scheme, value) pair, in
/// record order.
pub fn mean_wssr(records: &[SweepRecord]) -> Vec<(String, f64, f64, usize)> {
    let mut out: Vec<(String, f64, f64, usize)> = Vec::new();
    for r in records {
        let Some(w) = r.wssr else { continue };
        match out.iter_mut().find(|(s, v, _, _)| *s == r.scheme && *v == r.sweep_value) {
            Some(entry) => {
                entry.2 += w;
                entry.3 += 1;
            }
            None => out.push((r.scheme.clone(), r.sweep_value, w, 1)),
        }
    }
    for e in &mut out {
        e.2 /= e.3 as f64;
    }
    out
}

pub const CSV_HEADER: [&str; 10] = [
    "scheme",
    "sweep_value",
    "trial_index",
    "seed",
    "wssr",
    "per_user_secrecy",
    "iterations",
    "wall_time_ms",
    "error",
    "trace",
];

/// Twelve significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn format_list(xs: &[f64]) -> String {
    let body: Vec<String> = xs.iter().map(|&x| format_float(x)).collect();
    format!("[{}]", body.join(","))
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let ok = r.error.is_none();
        let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
        w.write_record([
            r.scheme.clone(),
            format_float(r.sweep_value),
            r.trial_index.to_string(),
            r.seed.to_string(),
            if ok { opt(r.wssr) } else { String::new() },
            if ok { format_list(&r.per_user_secrecy) } else { String::new() },
            r.iterations.to_string(),
            opt(r.wall_time_ms),
            r.error.clone().unwrap_or_default(),
            if ok { format_list(&r.trace) } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidSweep("no records to export".into()));
    }
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

/// Parse a CSV produced by [`write_csv`].
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    let bad = |what: &str| Error::InvalidSweep(format!("malformed CSV field {what}"));
    let list = |s: &str| -> Result<Vec<f64>> {
        if s.is_empty() {
            Ok(Vec::new())
        } else {
            Ok(serde_json::from_str(s)?)
        }
    };
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(s))
        }
    };
    for row in rdr.records() {
        let row = row?;
        if row.len() != CSV_HEADER.len() {
            return Err(bad("count"));
        }
        out.push(SweepRecord {
            scheme: row[0].to_string(),
            sweep_value: row[1].parse().map_err(|_| bad("sweep_value"))?,
            trial_index: row[2].parse().map_err(|_| bad("trial_index"))?,
            seed: row[3].parse().map_err(|_| bad("seed"))?,
            wssr: opt(&row[4])?,
            per_user_secrecy: list(&row[5])?,
            iterations: row[6].parse().map_err(|_| bad("iterations"))?,
            wall_time_ms: opt(&row[7])?,
            error: if row[8].is_empty() { None } else { Some(row[8].to_string()) },
            trace: list(&row[9])?,
        });
    }
    Ok(out)
}
