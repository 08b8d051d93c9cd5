//! Physical parameter model and the constants of the linearized two-mode model.
//!
//! All frequencies are in units of the mechanical frequency (ωm = 1) and all
//! times in units of 1/ωm.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the driving laser strength is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    /// Driving strength ε.
    Strength(f64),
    /// Target semiclassical photon number n_p = |α|²; ε is back-solved.
    PhotonNumber(f64),
    /// Target enhanced coupling g = g0·|α|; equivalent to n_p = (g/g0)².
    EnhancedCoupling(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mech_freq: f64,
    pub bare_coupling: f64,
    pub cavity_decay: f64,
    pub mech_decay: f64,
    pub drive: Drive,
    /// Cavity-laser detuning ωc − ωp. `None` selects the red sideband,
    /// i.e. the value that makes Δ = −ωm.
    pub laser_detuning: Option<f64>,
    pub thermal_occ_cavity: f64,
    pub thermal_occ_mech: f64,
    pub init_photons: f64,
    pub init_phonons: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.mech_freq != 1.0 {
            return Err(Error::invalid("mech_freq", "frequencies are in units of ωm; must be 1"));
        }
        for (name, v) in [
            ("bare_coupling", self.bare_coupling),
            ("cavity_decay", self.cavity_decay),
            ("mech_decay", self.mech_decay),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("thermal_occ_cavity", self.thermal_occ_cavity),
            ("thermal_occ_mech", self.thermal_occ_mech),
            ("init_photons", self.init_photons),
            ("init_phonons", self.init_phonons),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        let (name, v) = match self.drive {
            Drive::Strength(v) => ("drive_strength", v),
            Drive::PhotonNumber(v) => ("photon_number", v),
            Drive::EnhancedCoupling(v) => ("enhanced_coupling", v),
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
        }
        if let Some(d) = self.laser_detuning {
            if !d.is_finite() {
                return Err(Error::invalid("laser_detuning", "must be finite"));
            }
        }
        Ok(())
    }

    /// Parses the JSON key-value parameter format used by preset files.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ParamsFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("key `{path}`: {inner}"))
            }
        })?;
        file.into_params()
    }

    /// One of the bundled parameter sets: `cohen`, `lecocq`, `groblacher`,
    /// `lecocq-fig1`, `fig3`, `symmetric`.
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name.to_ascii_lowercase().as_str() {
            "cohen" => include_str!("../presets/cohen.json"),
            "lecocq" => include_str!("../presets/lecocq.json"),
            "groblacher" | "gröblacher" => include_str!("../presets/groblacher.json"),
            "lecocq-fig1" => include_str!("../presets/lecocq-fig1.json"),
            "fig3" => include_str!("../presets/fig3.json"),
            "symmetric" => include_str!("../presets/symmetric.json"),
            _ => return Err(Error::Config(format!("unknown preset `{name}`"))),
        };
        Self::from_json_str(text)
    }

    pub const PRESETS: &'static [&'static str] =
        &["cohen", "lecocq", "groblacher", "lecocq-fig1", "fig3", "symmetric"];
}

/// On-disk form of [`SystemParams`]. Exactly one drive key is normally
/// given; `photon_number` wins over `drive_strength` when both are present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(default)]
    pub mech_freq: Option<f64>,
    pub bare_coupling: f64,
    pub cavity_decay: f64,
    pub mech_decay: f64,
    #[serde(default)]
    pub drive_strength: Option<f64>,
    #[serde(default)]
    pub photon_number: Option<f64>,
    #[serde(default)]
    pub enhanced_coupling: Option<f64>,
    #[serde(default)]
    pub laser_detuning: Option<f64>,
    #[serde(default)]
    pub thermal_occ_cavity: f64,
    #[serde(default)]
    pub thermal_occ_mech: f64,
    #[serde(default)]
    pub init_photons: f64,
    #[serde(default)]
    pub init_phonons: f64,
}

impl ParamsFile {
    pub fn into_params(self) -> Result<SystemParams> {
        let drive = match (self.enhanced_coupling, self.photon_number, self.drive_strength) {
            (Some(_), Some(_), _) => {
                return Err(Error::Config(
                    "key `enhanced_coupling`: conflicts with `photon_number`".into(),
                ))
            }
            (Some(g), None, _) => Drive::EnhancedCoupling(g),
            (None, Some(n), _) => Drive::PhotonNumber(n),
            (None, None, Some(e)) => Drive::Strength(e),
            (None, None, None) => {
                return Err(Error::Config(
                    "key `drive_strength`: one of drive_strength, photon_number or enhanced_coupling is required"
                        .into(),
                ))
            }
        };
        let params = SystemParams {
            mech_freq: self.mech_freq.unwrap_or(1.0),
            bare_coupling: self.bare_coupling,
            cavity_decay: self.cavity_decay,
            mech_decay: self.mech_decay,
            drive,
            laser_detuning: self.laser_detuning,
            thermal_occ_cavity: self.thermal_occ_cavity,
            thermal_occ_mech: self.thermal_occ_mech,
            init_photons: self.init_photons,
            init_phonons: self.init_phonons,
        };
        params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(params)
    }
}

/// Semiclassical steady state of the driven system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub alpha: Complex64,
    pub beta: Complex64,
    /// ε, back-solved when the drive was given as n_p or g.
    pub drive_strength: f64,
    /// ωc − ωp actually used (resolved for red-sideband operation).
    pub laser_detuning: f64,
}

fn mech_amplitude(p: &SystemParams, photon_number: f64) -> Complex64 {
    -Complex64::i() * p.bare_coupling * photon_number
        / Complex64::new(p.mech_decay / 2.0, p.mech_freq)
}

/// α = ε/[κ + 2i(ωc−ωp)] and β = −i·g0|α|²/(γ/2 + iωm).
pub fn compute_steady_state(p: &SystemParams) -> Result<SteadyState> {
    let target_np = match p.drive {
        Drive::Strength(_) => None,
        Drive::PhotonNumber(n) => Some(n),
        Drive::EnhancedCoupling(g) => Some((g / p.bare_coupling).powi(2)),
    };

    let detuning = match (p.laser_detuning, target_np) {
        (Some(d), _) => d,
        (None, Some(n)) => p.mech_freq - 2.0 * p.bare_coupling * mech_amplitude(p, n).re,
        (None, None) => {
            // |α| depends on the detuning; iterate to the self-consistent red sideband.
            let eps = match p.drive {
                Drive::Strength(e) => e,
                _ => unreachable!(),
            };
            let mut d = p.mech_freq;
            let mut converged = false;
            for _ in 0..200 {
                let denom = Complex64::new(p.cavity_decay, 2.0 * d);
                if denom.norm() == 0.0 {
                    return Err(Error::DegenerateDrive);
                }
                let n = (eps / denom).norm_sqr();
                let next = p.mech_freq - 2.0 * p.bare_coupling * mech_amplitude(p, n).re;
                let done = (next - d).abs() <= 1e-15 * next.abs().max(1.0);
                d = next;
                if done {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Convergence {
                    iterations: 200,
                    residual: f64::NAN,
                });
            }
            d
        }
    };

    let denom = Complex64::new(p.cavity_decay, 2.0 * detuning);
    if denom.norm() == 0.0 {
        return Err(Error::DegenerateDrive);
    }
    let eps = match (p.drive, target_np) {
        (Drive::Strength(e), _) => e,
        (_, Some(n)) => n.sqrt() * denom.norm(),
        _ => unreachable!(),
    };
    let alpha = eps / denom;
    let beta = mech_amplitude(p, alpha.norm_sqr());
    Ok(SteadyState {
        alpha,
        beta,
        drive_strength: eps,
        laser_detuning: detuning,
    })
}

/// Constants of the linearized, rotating-wave two-mode model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    #[serde(skip)]
    pub alpha: Complex64,
    #[serde(skip)]
    pub beta: Complex64,
    pub photon_number: f64,
    /// g = g0|α|.
    pub enhanced_coupling: f64,
    /// Δ = ωp − ωc − 2 g0 Re β.
    pub detuning: f64,
    /// Γ = (κ − γ)/(4g).
    pub loss_asymmetry: f64,
    /// μ = (κ + γ)/4.
    pub mean_decay: f64,
    /// Ω = √(1 − Γ²).
    pub rabi: f64,
    /// τ0 = π/(2gΩ) of the central parameters; the measurement schedule.
    pub swap_time: f64,
    /// κ̃ = κ·n_th_c.
    pub mod_cavity_decay: f64,
    /// γ̃ = γ·n_th_m.
    pub mod_mech_decay: f64,
    pub cavity_decay: f64,
    pub mech_decay: f64,
    pub thermal_occ_cavity: f64,
    pub thermal_occ_mech: f64,
    pub mech_freq: f64,
}

pub fn derive(p: &SystemParams) -> Result<DerivedParams> {
    p.validate()?;
    let ss = compute_steady_state(p)?;
    let g = p.bare_coupling * ss.alpha.norm();
    if !(g > 0.0) {
        return Err(Error::invalid("drive", "enhanced coupling must be positive"));
    }
    let gamma = (p.cavity_decay - p.mech_decay) / (4.0 * g);
    if gamma * gamma >= 1.0 {
        return Err(Error::Overdamped { gamma });
    }
    let rabi = (1.0 - gamma * gamma).sqrt();
    Ok(DerivedParams {
        alpha: ss.alpha,
        beta: ss.beta,
        photon_number: ss.alpha.norm_sqr(),
        enhanced_coupling: g,
        detuning: -ss.laser_detuning - 2.0 * p.bare_coupling * ss.beta.re,
        loss_asymmetry: gamma,
        mean_decay: (p.cavity_decay + p.mech_decay) / 4.0,
        rabi,
        swap_time: std::f64::consts::PI / (2.0 * g * rabi),
        mod_cavity_decay: p.cavity_decay * p.thermal_occ_cavity,
        mod_mech_decay: p.mech_decay * p.thermal_occ_mech,
        cavity_decay: p.cavity_decay,
        mech_decay: p.mech_decay,
        thermal_occ_cavity: p.thermal_occ_cavity,
        thermal_occ_mech: p.thermal_occ_mech,
        mech_freq: p.mech_freq,
    })
}

impl DerivedParams {
    /// Copy with new coupling and decay rates; Γ, μ, Ω, κ̃, γ̃ follow, τ0 does not.
    pub fn with_rates(&self, coupling: f64, cavity_decay: f64, mech_decay: f64) -> Result<Self> {
        if !(coupling > 0.0 && cavity_decay > 0.0 && mech_decay > 0.0) {
            return Err(Error::invalid("rates", "coupling and decay rates must be positive"));
        }
        let gamma = (cavity_decay - mech_decay) / (4.0 * coupling);
        if gamma * gamma >= 1.0 {
            return Err(Error::Overdamped { gamma });
        }
        Ok(DerivedParams {
            enhanced_coupling: coupling,
            loss_asymmetry: gamma,
            rabi: (1.0 - gamma * gamma).sqrt(),
            mean_decay: (cavity_decay + mech_decay) / 4.0,
            mod_cavity_decay: cavity_decay * self.thermal_occ_cavity,
            mod_mech_decay: mech_decay * self.thermal_occ_mech,
            cavity_decay,
            mech_decay,
            ..*self
        })
    }

    /// Accumulated interaction area g·Ω·τ0 of one constant-phase interval.
    pub fn interaction_area(&self) -> f64 {
        self.enhanced_coupling * self.rabi * self.swap_time
    }

    /// Rescales g so that one interval of length τ0 accumulates the current
    /// area plus `deviation`. The schedule τ0 is left untouched.
    pub fn apply_area_deviation(&self, deviation: f64) -> Result<Self> {
        if deviation == 0.0 {
            return Ok(*self);
        }
        let area = self.interaction_area();
        let target = area + deviation;
        if !(target > 0.0) {
            return Err(Error::NonPositiveArea { deviation, area });
        }
        let half_diff = (self.cavity_decay - self.mech_decay) / 4.0;
        let coupling = ((target / self.swap_time).powi(2) + half_diff * half_diff).sqrt();
        self.with_rates(coupling, self.cavity_decay, self.mech_decay)
    }

    /// Checks the red-sideband condition Δ = −ωm to relative tolerance `tol`.
    pub fn check_red_detuned(&self, tol: f64) -> Result<()> {
        if (self.detuning + self.mech_freq).abs() > tol * self.mech_freq {
            return Err(Error::invalid(
                "laser_detuning",
                format!("not red-detuned: Δ = {} (expected −ωm)", self.detuning),
            ));
        }
        Ok(())
    }

    /// Deviation that brings a fresh parameter set to the ideal swap area π/2.
    pub fn ideal_area() -> f64 {
        FRAC_PI_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lecocq() -> SystemParams {
        SystemParams::preset("lecocq-fig1").unwrap()
    }

    #[test]
    fn zero_drive_has_no_displacement() {
        let mut p = lecocq();
        p.drive = Drive::Strength(0.0);
        p.laser_detuning = Some(1.0);
        let ss = compute_steady_state(&p).unwrap();
        assert_eq!(ss.alpha, Complex64::new(0.0, 0.0));
        assert_eq!(ss.beta, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn degenerate_drive_is_rejected() {
        let mut p = lecocq();
        p.cavity_decay = 0.0;
        p.laser_detuning = Some(0.0);
        p.drive = Drive::Strength(1.0);
        assert!(matches!(compute_steady_state(&p), Err(Error::DegenerateDrive)));
    }

    #[test]
    fn lecocq_coupling_and_mechanical_shift() {
        let p = lecocq();
        let d = derive(&p).unwrap();
        assert!((d.enhanced_coupling - 8.01e-3).abs() < 0.005e-3);
        // β ≈ −g0 n_p / ωm for γ ≪ ωm
        let beta_formula = -Complex64::i() * 1.887e-5 * 180e3 / Complex64::new(9.434e-6 / 2.0, 1.0);
        assert!((d.beta - beta_formula).norm() < 1e-9);
        assert!((d.beta.re + 3.40).abs() < 0.005);
        assert!((d.loss_asymmetry - 0.349).abs() < 0.001);
    }

    #[test]
    fn cohen_is_nearly_lossless() {
        let d = derive(&SystemParams::preset("cohen").unwrap()).unwrap();
        assert!((d.loss_asymmetry.abs() - 2.3e-3).abs() < 0.05e-3);
        assert!((d.rabi - 1.0).abs() < 1e-5);
    }

    #[test]
    fn symmetric_losses() {
        let d = derive(&SystemParams::preset("symmetric").unwrap()).unwrap();
        assert_eq!(d.loss_asymmetry, 0.0);
        assert_eq!(d.rabi, 1.0);
        assert!((d.swap_time - PI / (2.0 * d.enhanced_coupling)).abs() < 1e-12);
    }

    #[test]
    fn red_sideband_resolution() {
        for name in SystemParams::PRESETS {
            let d = derive(&SystemParams::preset(name).unwrap()).unwrap();
            d.check_red_detuned(1e-12).unwrap();
        }
        let mut p = lecocq();
        let ss = compute_steady_state(&p).unwrap();
        p.drive = Drive::Strength(ss.drive_strength);
        let d = derive(&p).unwrap();
        d.check_red_detuned(1e-12).unwrap();
        assert!((d.photon_number / 180e3 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overdamped_is_rejected() {
        let mut p = SystemParams::preset("fig3").unwrap();
        p.cavity_decay = 0.5;
        assert!(matches!(derive(&p), Err(Error::Overdamped { .. })));
    }

    #[test]
    fn swap_area_is_quarter_period() {
        for name in SystemParams::PRESETS {
            let d = derive(&SystemParams::preset(name).unwrap()).unwrap();
            assert!((d.interaction_area() - FRAC_PI_2).abs() < 1e-14);
        }
    }

    #[test]
    fn area_deviation_identity_and_scaling() {
        let d = derive(&SystemParams::preset("symmetric").unwrap()).unwrap();
        assert_eq!(d.apply_area_deviation(0.0).unwrap(), d);
        let e = d.apply_area_deviation(-0.1 * FRAC_PI_2).unwrap();
        assert!((e.enhanced_coupling / d.enhanced_coupling - 0.9).abs() < 1e-14);
        assert_eq!(e.swap_time, d.swap_time);

        // with unequal losses Γ scales as 1/g and the exact area is hit
        let mut p = SystemParams::preset("fig3").unwrap();
        p.cavity_decay = 0.02;
        p.mech_decay = 0.001;
        let d = derive(&p).unwrap();
        let e = d.apply_area_deviation(-0.1 * FRAC_PI_2).unwrap();
        let ratio = e.enhanced_coupling / d.enhanced_coupling;
        assert!((e.loss_asymmetry * ratio - d.loss_asymmetry).abs() < 1e-15);
        assert!((e.interaction_area() - 0.9 * FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn non_positive_area_is_rejected() {
        let d = derive(&lecocq()).unwrap();
        assert!(matches!(
            d.apply_area_deviation(-FRAC_PI_2),
            Err(Error::NonPositiveArea { .. })
        ));
        assert!(d.apply_area_deviation(-0.99 * FRAC_PI_2).is_ok());
    }

    #[test]
    fn config_errors_name_the_key() {
        let err = SystemParams::from_json_str(
            r#"{"bare_coupling": 1e-5, "cavity_decay": "x", "mech_decay": 1e-3, "photon_number": 1e4}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("cavity_decay"), "{err}");
        let err = SystemParams::from_json_str(
            r#"{"bare_coupling": 1e-5, "cavity_decay": 1e-3, "mech_decay": 1e-3, "photon_number": 1e4, "bogus": 1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = SystemParams::from_json_str(
            r#"{"bare_coupling": 1e-5, "cavity_decay": -1e-3, "mech_decay": 1e-3, "photon_number": 1e4}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("cavity_decay"), "{err}");
    }

    #[test]
    fn photon_number_wins_over_strength() {
        let p = SystemParams::from_json_str(
            r#"{"bare_coupling": 1e-5, "cavity_decay": 1e-3, "mech_decay": 1e-3,
                "photon_number": 1e4, "drive_strength": 3.0}"#,
        )
        .unwrap();
        assert_eq!(p.drive, Drive::PhotonNumber(1e4));
    }
}
