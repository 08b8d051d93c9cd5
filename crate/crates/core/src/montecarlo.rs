//! Robustness against random, static variations of g, κ and γ.
//!
//! Instance `i` of a study with seed `s` draws from a ChaCha8 generator
//! seeded with `s` on stream `i`, so results do not depend on how the
//! instances are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{mean_numbers_sequence, PhaseSequence};
use crate::optimizer::optimal_phase;
use crate::params::{DerivedParams, SystemParams};

pub const MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivingMode {
    Constant,
    Composite,
}

impl DrivingMode {
    pub fn name(self) -> &'static str {
        match self {
            DrivingMode::Constant => "constant",
            DrivingMode::Composite => "composite",
        }
    }

    /// Three swap-time intervals at phases (0, 0, 0) or (0, φ_opt, 0).
    pub fn sequence(self, d: &DerivedParams) -> Result<PhaseSequence> {
        match self {
            DrivingMode::Constant => PhaseSequence::constant(0.0, 3, d.swap_time),
            DrivingMode::Composite => {
                PhaseSequence::symmetric(&[optimal_phase(d.loss_asymmetry)?], d.swap_time)
            }
        }
    }
}

impl std::str::FromStr for DrivingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(DrivingMode::Constant),
            "composite" => Ok(DrivingMode::Composite),
            _ => Err(Error::Config(format!("unknown driving mode `{s}`"))),
        }
    }
}

fn rng_for(seed: u64, instance: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance);
    rng
}

/// Multiplies g, κ and γ by independent N(1, rel_std_percent/100) factors.
/// Invalid draws (non-positive rate, Γ² ≥ 1) are redrawn up to
/// [`MAX_RETRIES`] times. The schedule τ0 is kept.
pub fn sample_params(central: &DerivedParams, rel_std_percent: f64, seed: u64, instance: u64) -> Result<DerivedParams> {
    if !(rel_std_percent >= 0.0 && rel_std_percent.is_finite()) {
        return Err(Error::invalid("rel_std", "must be non-negative"));
    }
    if rel_std_percent == 0.0 {
        return Ok(*central);
    }
    let normal = Normal::new(1.0, rel_std_percent / 100.0)
        .map_err(|e| Error::invalid("rel_std", e.to_string()))?;
    let mut rng = rng_for(seed, instance);
    for _ in 0..=MAX_RETRIES {
        let [fg, fk, fm] = [0; 3].map(|_| normal.sample(&mut rng));
        if let Ok(d) = central.with_rates(
            central.enhanced_coupling * fg,
            central.cavity_decay * fk,
            central.mech_decay * fm,
        ) {
            return Ok(d);
        }
    }
    Err(Error::Sampling { retries: MAX_RETRIES })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub mode: DrivingMode,
    pub level_percent: f64,
    pub seed: u64,
    pub instances: usize,
    pub mean: f64,
    pub std: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Sample mean and n−1 standard deviation.
pub fn statistics(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Final phonon numbers after three swap times for `n_instances` draws.
pub fn run_study(
    central: &DerivedParams,
    p: &SystemParams,
    mode: DrivingMode,
    rel_std_percent: f64,
    n_instances: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    let seq = mode.sequence(central)?;
    let (values, mean, std) = run_sequence_study(central, p, &seq, rel_std_percent, n_instances, seed)?;
    Ok(MonteCarloReport {
        mode,
        level_percent: rel_std_percent,
        seed,
        instances: n_instances,
        mean,
        std,
        values,
    })
}

/// Same as [`run_study`] for an arbitrary fixed sequence; returns the
/// per-instance values, mean and standard deviation.
pub fn run_sequence_study(
    central: &DerivedParams,
    p: &SystemParams,
    seq: &PhaseSequence,
    rel_std_percent: f64,
    n_instances: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64, f64)> {
    if n_instances == 0 {
        return Err(Error::invalid("instances", "must be at least 1"));
    }
    let t = seq.total_duration();
    let values = (0..n_instances as u64)
        .into_par_iter()
        .map(|i| {
            let d = sample_params(central, rel_std_percent, seed, i)?;
            Ok(mean_numbers_sequence(seq, t, &d, p)?.phonons)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = statistics(&values);
    Ok((values, mean, std))
}
