//! Classical amplitudes α, β of the driven system under a smooth phase
//! profile, and the resulting drift of amplitude, area and detuning.

use num_complex::Complex64;
use ode_solvers::{DVector, System};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{compute_steady_state, derive, DerivedParams, SystemParams};
use crate::optimizer::{lossless_phases, optimal_phase};
use crate::quadrature;

type C = Complex64;

/// Largest allowed pointwise product of adjacent unit bumps.
pub const OVERLAP_LIMIT: f64 = 1e-3;
/// Smoothing width in units of 1/ωm.
pub const DEFAULT_SIGMA: f64 = 25.0;
pub const DEFAULT_RISE: f64 = 0.2;
pub const DEFAULT_FALL: f64 = 0.8;

/// θ(t, σ) = [erf(t/σ) + 1]/2.
pub fn smooth_step(t: f64, sigma: f64) -> f64 {
    0.5 * (libm::erf(t / sigma) + 1.0)
}

/// φ(t) = f Σ_k φ̄_k θ(t − t_k^rise, σ) θ(t_k^fall − t, σ), one bump per
/// segment of length `segment`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothProfile {
    pub avg_phases: Vec<f64>,
    pub segment: f64,
    pub sigma: f64,
    pub f: f64,
    pub rise: f64,
    pub fall: f64,
}

impl SmoothProfile {
    /// Profile with f = 1 and no overlap or calibration checks.
    pub fn with_transitions(avg_phases: Vec<f64>, segment: f64, sigma: f64, rise: f64, fall: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        if !(segment > 0.0) {
            return Err(Error::invalid("segment", "must be positive"));
        }
        if !(0.0 <= rise && rise < fall && fall <= 1.0) {
            return Err(Error::invalid("transitions", "need 0 ≤ rise < fall ≤ 1"));
        }
        Ok(SmoothProfile { avg_phases, segment, sigma, f: 1.0, rise, fall })
    }

    /// Unit bump of segment `k`.
    pub fn bump(&self, k: usize, t: f64) -> f64 {
        let start = k as f64 * self.segment;
        smooth_step(t - (start + self.rise * self.segment), self.sigma)
            * smooth_step(start + self.fall * self.segment - t, self.sigma)
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.avg_phases
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(k, &a)| a * self.bump(k, t))
            .sum::<f64>()
            * self.f
    }

    pub fn duration(&self) -> f64 {
        self.avg_phases.len() as f64 * self.segment
    }

    /// Time average of φ over segment `k`.
    pub fn segment_average(&self, k: usize) -> Result<f64> {
        let a = k as f64 * self.segment;
        let integral = quadrature::integrate(|t| self.phase(t), a, a + self.segment, 1e-14, 1e-12)?;
        Ok(integral / self.segment)
    }

    /// max_t b_k(t)·b_{k+1}(t) for adjacent unit bumps.
    pub fn overlap(&self) -> f64 {
        let (a, b) = (self.fall * self.segment, (1.0 + self.rise) * self.segment);
        (0..=1000)
            .map(|i| a + (b - a) * i as f64 / 1000.0)
            .map(|t| self.bump(0, t) * self.bump(1, t))
            .fold(0.0, f64::max)
    }
}

/// Amplitude factor making the average over `segment` equal `target`.
pub fn calibrate_f(profile: &SmoothProfile, segment: usize, target: f64) -> Result<f64> {
    if segment >= profile.avg_phases.len() {
        return Err(Error::invalid("segment", "index outside the profile"));
    }
    let unit = SmoothProfile { f: 1.0, ..profile.clone() };
    let base = unit.segment_average(segment)?;
    if base == 0.0 {
        return Err(Error::Calibration("bump integral vanishes".into()));
    }
    let residual = |f: f64| base * f - target;
    let (mut lo, mut hi) = (1e-12, 4.0);
    if residual(lo).signum() == residual(hi).signum() {
        return Err(Error::Calibration(format!(
            "no amplitude factor in (0, 4] reaches {target} (unit average {base})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid).signum() == residual(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Target averages on the negative branch: (0, −φ_opt, 0) for three
/// segments, the negated lossless phases for longer sequences.
pub fn default_averages(n: usize, d: &DerivedParams) -> Result<Vec<f64>> {
    if n == 3 {
        return Ok(vec![0.0, -optimal_phase(d.loss_asymmetry)?, 0.0]);
    }
    Ok(lossless_phases(n)?.into_iter().map(|p| -p).collect())
}

/// Profile with default transition fractions, checked for overlap and
/// calibrated on the segment with the largest target phase.
pub fn smooth_profile(avg_phases: &[f64], sigma: f64, d: &DerivedParams) -> Result<SmoothProfile> {
    smooth_profile_with(avg_phases, sigma, DEFAULT_RISE, DEFAULT_FALL, d)
}

pub fn smooth_profile_with(
    avg_phases: &[f64],
    sigma: f64,
    rise: f64,
    fall: f64,
    d: &DerivedParams,
) -> Result<SmoothProfile> {
    let n = avg_phases.len();
    if n % 2 == 0 || avg_phases[0] != 0.0 || avg_phases[n - 1] != 0.0 {
        return Err(Error::invalid("avg_phases", "need an odd count with zero first and last phase"));
    }
    let mut profile = SmoothProfile::with_transitions(avg_phases.to_vec(), d.swap_time, sigma, rise, fall)?;
    let overlap = profile.overlap();
    if overlap > OVERLAP_LIMIT {
        return Err(Error::Overlap { overlap, limit: OVERLAP_LIMIT });
    }
    let (k, target) = avg_phases
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    if target != 0.0 {
        profile.f = calibrate_f(&profile, k, target)?;
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalSample {
    pub t: f64,
    pub phase: f64,
    /// |α|²/n_p
    pub intensity: f64,
    pub beta_re: f64,
    pub beta_im: f64,
}

/// Drift of the classical amplitudes, all in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftMetrics {
    /// max_t ||α(t)|/|α_ss| − 1|
    pub amplitude_excursion: f64,
    /// Change of the area g0∫|α|dt accumulated over the whole sequence.
    pub area_change: f64,
    /// Same with the Ω-corrected area ∫g(t)Ω(t)dt.
    pub area_change_rabi: f64,
    /// Largest single-segment change of g0∫|α|dt.
    pub max_segment_area_change: f64,
    /// max_t |2g0 (Re β − Re β_ss)| / |Δ|
    pub detuning_drift: f64,
    /// |α(t_end) − α_ss|/|α_ss|
    pub return_residual: f64,
    pub segment_area_changes: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClassicalRun {
    pub samples: Vec<ClassicalSample>,
    pub metrics: DriftMetrics,
    pub alpha_ss: C,
    pub beta_ss: C,
}

#[derive(Clone, Copy)]
struct Amplitudes<'a> {
    profile: &'a SmoothProfile,
    g0: f64,
    kappa: f64,
    gamma: f64,
    wm: f64,
    detuning: f64,
    eps: f64,
}

impl System<f64, DVector<f64>> for Amplitudes<'_> {
    fn system(&self, t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let a = C::new(y[0], y[1]);
        let b = C::new(y[2], y[3]);
        let i = C::new(0.0, 1.0);
        let da = -(C::new(self.kappa / 2.0, self.detuning)) * a - i * self.g0 * a * (2.0 * b.re)
            + 0.5 * self.eps * C::from_polar(1.0, self.profile.phase(t));
        let db = -C::new(self.gamma / 2.0, self.wm) * b - i * self.g0 * a.norm_sqr();
        dy[0] = da.re;
        dy[1] = da.im;
        dy[2] = db.re;
        dy[3] = db.im;
        // accumulated areas g0|α| and g0|α|·Ω(t)
        let g = self.g0 * a.norm();
        let big_gamma = (self.kappa - self.gamma) / (4.0 * g);
        dy[4] = g;
        dy[5] = g * (1.0 - big_gamma * big_gamma).max(0.0).sqrt();
    }
}

/// Fixed point of the amplitude equations at φ = 0.
pub fn classical_fixed_point(p: &SystemParams) -> Result<(C, C)> {
    let ss = compute_steady_state(p)?;
    let (g0, kappa, gamma, wm) = (p.bare_coupling, p.cavity_decay, p.mech_decay, p.mech_freq);
    let i = C::new(0.0, 1.0);
    let mut a = ss.alpha;
    let mut b = ss.beta;
    for _ in 0..10_000 {
        let b_new = -i * g0 * a.norm_sqr() / C::new(gamma / 2.0, wm);
        let a_new = 0.5 * ss.drive_strength / (C::new(kappa / 2.0, ss.laser_detuning) + 2.0 * i * g0 * b_new.re);
        let change = (a_new - a).norm() / a_new.norm().max(1e-300);
        a = 0.5 * (a + a_new);
        b = 0.5 * (b + b_new);
        if change < 1e-15 {
            let b = -i * g0 * a.norm_sqr() / C::new(gamma / 2.0, wm);
            return Ok((a, b));
        }
    }
    Err(Error::Convergence { iterations: 10_000, residual: f64::NAN })
}

/// Integrates the classical equations from the fixed point over
/// [0, t_end], sampling every `dt`.
pub fn integrate_classical(p: &SystemParams, profile: &SmoothProfile, t_end: f64, dt: f64) -> Result<ClassicalRun> {
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(Error::invalid("t_span", "t_end and dt must be positive"));
    }
    let d = derive(p)?;
    let ss = compute_steady_state(p)?;
    let (alpha_ss, beta_ss) = classical_fixed_point(p)?;
    let system = Amplitudes {
        profile,
        g0: p.bare_coupling,
        kappa: p.cavity_decay,
        gamma: p.mech_decay,
        wm: p.mech_freq,
        detuning: ss.laser_detuning,
        eps: ss.drive_strength,
    };

    // sample times plus segment boundaries
    let n_seg = profile.avg_phases.len();
    let mut stops: Vec<f64> = (1..=((t_end / dt).ceil() as usize)).map(|k| (k as f64 * dt).min(t_end)).collect();
    stops.extend((1..=n_seg).map(|k| k as f64 * profile.segment).filter(|&t| t < t_end));
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));

    let mut y = DVector::from_vec(vec![alpha_ss.re, alpha_ss.im, beta_ss.re, beta_ss.im, 0.0, 0.0]);
    let sample = |t: f64, y: &DVector<f64>| ClassicalSample {
        t,
        phase: profile.phase(t),
        intensity: (y[0] * y[0] + y[1] * y[1]) / d.photon_number,
        beta_re: y[2],
        beta_im: y[3],
    };
    let mut samples = vec![sample(0.0, &y)];
    let mut boundary_areas = vec![(0.0, 0.0)];
    let a_ss = alpha_ss.norm();
    let mut excursion: f64 = 0.0;
    let mut detuning_drift: f64 = 0.0;
    let mut t = 0.0;
    for &stop in &stops {
        y = crate::ode::integrate(system, t, stop, y, 1e-10, 1e-10)?;
        t = stop;
        let a = (y[0] * y[0] + y[1] * y[1]).sqrt();
        excursion = excursion.max((a / a_ss - 1.0).abs());
        detuning_drift = detuning_drift.max((2.0 * p.bare_coupling * (y[2] - beta_ss.re)).abs() / d.detuning.abs());
        if boundary_areas.len() <= n_seg && (t - boundary_areas.len() as f64 * profile.segment).abs() <= 1e-9 * t.max(1.0) {
            boundary_areas.push((y[4], y[5]));
        }
        if (t / dt - (t / dt).round()).abs() < 1e-9 || t == t_end {
            samples.push(sample(t, &y));
        }
    }

    // areas relative to the fixed-point coupling g = g0|α_ss|
    let g_ss = p.bare_coupling * a_ss;
    let gam = (p.cavity_decay - p.mech_decay) / (4.0 * g_ss);
    let rabi_ss = (1.0 - gam * gam).sqrt();
    let ideal = g_ss * profile.segment;
    let complete = boundary_areas.len() - 1;
    let segment_area_changes: Vec<f64> = boundary_areas
        .windows(2)
        .map(|w| 100.0 * ((w[1].0 - w[0].0) / ideal - 1.0).abs())
        .collect();
    let (total, total_rabi) = boundary_areas[complete];
    let m = complete.max(1) as f64;
    let metrics = DriftMetrics {
        amplitude_excursion: 100.0 * excursion,
        area_change: 100.0 * (total / (m * ideal) - 1.0).abs(),
        area_change_rabi: 100.0 * (total_rabi / (m * ideal * rabi_ss) - 1.0).abs(),
        max_segment_area_change: segment_area_changes.iter().cloned().fold(0.0, f64::max),
        detuning_drift: 100.0 * detuning_drift,
        return_residual: 100.0 * (C::new(y[0], y[1]) - alpha_ss).norm() / a_ss,
        segment_area_changes,
    };
    Ok(ClassicalRun { samples, metrics, alpha_ss, beta_ss })
}
