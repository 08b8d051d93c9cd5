//! Constant-phase and piecewise propagators of the two-mode Langevin
//! equations, thermal-noise integrals and mean occupation numbers.

use std::ops::Mul;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{DerivedParams, SystemParams};
use crate::quadrature;

type C = Complex64;

/// 2×2 propagator of the rescaled (damping-free) Langevin frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub Matrix2<C>);

impl TransferMatrix {
    pub fn identity() -> Self {
        TransferMatrix(Matrix2::identity())
    }
    pub fn u11(&self) -> C {
        self.0[(0, 0)]
    }
    pub fn u12(&self) -> C {
        self.0[(0, 1)]
    }
    pub fn u21(&self) -> C {
        self.0[(1, 0)]
    }
    pub fn u22(&self) -> C {
        self.0[(1, 1)]
    }
    pub fn det(&self) -> C {
        self.0.determinant()
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;
    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        TransferMatrix(self.0 * rhs.0)
    }
}

/// −iĤ for Ĥ = e^{iφ}σ₊ + e^{−iφ}σ₋ − iΓσ_z.
fn generator(phase: f64, gamma: f64) -> Matrix2<C> {
    let e = C::from_polar(1.0, phase);
    let mi = C::new(0.0, -1.0);
    Matrix2::new(
        C::from(-gamma),
        mi * e,
        mi * e.conj(),
        C::from(gamma),
    )
}

/// cos(√q·x) and sin(√q·x)/√q, continued analytically to q ≤ 0.
pub(crate) fn cos_sinc(q: f64, x: f64) -> (f64, f64) {
    let z = q * x * x;
    if z.abs() < 1e-4 {
        let c = 1.0 - z / 2.0 + z * z / 24.0 - z * z * z / 720.0;
        let s = 1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0;
        (c, x * s)
    } else if q > 0.0 {
        let w = q.sqrt();
        ((w * x).cos(), (w * x).sin() / w)
    } else {
        let v = (-q).sqrt();
        ((v * x).cosh(), (v * x).sinh() / v)
    }
}

/// Propagator over a dimensionless interval `x = g·τ` with fixed Γ.
pub fn propagator_scaled(phase: f64, gamma: f64, x: f64) -> TransferMatrix {
    let (c, s) = cos_sinc(1.0 - gamma * gamma, x);
    TransferMatrix(Matrix2::identity() * C::from(c) + generator(phase, gamma) * C::from(s))
}

/// Propagator accumulating interaction area `area` (= gΩτ) at fixed Γ.
pub fn propagator_area(phase: f64, gamma: f64, area: f64) -> TransferMatrix {
    let q = 1.0 - gamma * gamma;
    propagator_scaled(phase, gamma, area / q.sqrt())
}

/// U = cos(Ωgτ)·1 − (i/Ω) sin(Ωgτ)·Ĥ.
pub fn propagator(phase: f64, tau: f64, d: &DerivedParams) -> TransferMatrix {
    propagator_scaled(phase, d.loss_asymmetry, d.enhanced_coupling * tau)
}

/// One constant-phase driving interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub phase: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSequence {
    segments: Vec<Segment>,
}

impl PhaseSequence {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("sequence", "at least one segment is required"));
        }
        for s in &segments {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::invalid("sequence", format!("segment duration must be positive, got {}", s.duration)));
            }
            if !s.phase.is_finite() {
                return Err(Error::invalid("sequence", "phase must be finite"));
            }
        }
        Ok(PhaseSequence { segments })
    }

    /// Equal-duration segments with the given phases.
    pub fn from_phases(phases: &[f64], duration: f64) -> Result<Self> {
        Self::new(phases.iter().map(|&phase| Segment { phase, duration }).collect())
    }

    /// `n` segments of equal duration and phase.
    pub fn constant(phase: f64, n: usize, duration: f64) -> Result<Self> {
        Self::from_phases(&vec![phase; n], duration)
    }

    /// Symmetric odd-length sequence (0, φ₂, …, φ_m, …, φ₂, 0) from its free
    /// phases φ₂..φ_m, m = (N+1)/2. An empty slice gives N = 1.
    pub fn symmetric(free: &[f64], duration: f64) -> Result<Self> {
        Self::from_phases(&symmetric_phases(free), duration)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
    pub fn len(&self) -> usize {
        self.segments.len()
    }
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
    pub fn phases(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.phase).collect()
    }
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.segments.len();
        n % 2 == 1
            && self.segments[0].phase == 0.0
            && (0..n).all(|k| self.segments[k] == self.segments[n - 1 - k])
    }

    /// Free phases φ₂..φ_m of a symmetric sequence.
    pub fn free_phases(&self) -> Option<Vec<f64>> {
        self.is_symmetric()
            .then(|| self.segments[1..(self.len() + 1) / 2].iter().map(|s| s.phase).collect())
    }

    pub fn negated(&self) -> Self {
        PhaseSequence {
            segments: self
                .segments
                .iter()
                .map(|s| Segment { phase: -s.phase, duration: s.duration })
                .collect(),
        }
    }
}

pub fn symmetric_phases(free: &[f64]) -> Vec<f64> {
    let mut half = vec![0.0];
    half.extend_from_slice(free);
    let mut all = half.clone();
    all.extend(half.iter().rev().skip(1));
    all
}

/// U_N···U_2·U_1.
pub fn composite_propagator(seq: &PhaseSequence, d: &DerivedParams) -> TransferMatrix {
    seq.segments
        .iter()
        .fold(TransferMatrix::identity(), |acc, s| propagator(s.phase, s.duration, d) * acc)
}

/// Damped integrals of the products of the propagator's scalar parts over
/// one interval: ∫e^{−2μx}c², ∫e^{−2μx}c·s̃ and ∫e^{−2μx}s̃², with
/// U(x) = c(x)·1 + s̃(x)·(−iĤ).
#[derive(Debug, Clone, Copy, PartialEq)]
struct ScalarIntegrals {
    cc: f64,
    cs: f64,
    ss: f64,
}

/// ∫₀^τ e^{zx} dx.
fn exp_integral(z: C, tau: f64) -> C {
    let w = z * tau;
    if w.norm() < 0.5 {
        let mut term = C::from(1.0);
        let mut sum = C::from(1.0);
        for k in 2..30 {
            term = term * w / k as f64;
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        sum * tau
    } else {
        (w.exp() - 1.0) / z
    }
}

fn scalar_integrals(d: &DerivedParams, tau: f64) -> Result<ScalarIntegrals> {
    if tau == 0.0 {
        return Ok(ScalarIntegrals { cc: 0.0, cs: 0.0, ss: 0.0 });
    }
    let gamma = d.loss_asymmetry;
    let g = d.enhanced_coupling;
    let q = 1.0 - gamma * gamma;
    let a = 2.0 * d.mean_decay;
    let phase_span = q.abs().sqrt() * g * tau;

    if phase_span < 0.05 {
        let f = |pick: fn(f64, f64) -> f64| {
            quadrature::integrate(
                |x| {
                    let (c, s) = cos_sinc(q, g * x);
                    (-a * x).exp() * pick(c, s)
                },
                0.0,
                tau,
                1e-300,
                1e-13,
            )
        };
        return Ok(ScalarIntegrals {
            cc: f(|c, _| c * c)?,
            cs: f(|c, s| c * s)?,
            ss: f(|_, s| s * s)?,
        });
    }

    let e0 = exp_integral(C::from(-a), tau).re;
    if q > 0.0 {
        let w = q.sqrt();
        let eo = exp_integral(C::new(-a, 2.0 * w * g), tau);
        Ok(ScalarIntegrals {
            cc: 0.5 * (e0 + eo.re),
            cs: 0.5 * eo.im / w,
            ss: 0.5 * (e0 - eo.re) / q,
        })
    } else {
        let v = (-q).sqrt();
        let ep = exp_integral(C::from(-a + 2.0 * v * g), tau).re;
        let em = exp_integral(C::from(-a - 2.0 * v * g), tau).re;
        Ok(ScalarIntegrals {
            cc: 0.5 * e0 + 0.25 * (ep + em),
            cs: 0.25 * (ep - em) / v,
            ss: (0.25 * (ep + em) - 0.5 * e0) / (-q),
        })
    }
}

/// ∫₀^τ e^{−2μx} u_l(x) u_l(x)† dx for source column `l` of U(x).
fn gram(si: &ScalarIntegrals, b: &Matrix2<C>, l: usize) -> Matrix2<C> {
    let mut e = nalgebra::Vector2::<C>::zeros();
    e[l] = C::from(1.0);
    let col = b.column(l).into_owned();
    let eb = e * col.adjoint();
    (e * e.adjoint()) * C::from(si.cc)
        + (eb + eb.adjoint()) * C::from(si.cs)
        + (col * col.adjoint()) * C::from(si.ss)
}

/// S_jk(τ) = ∫₀^τ e^{−2μx}|U_jk(x)|² dx, indexed `s[j][k]` from zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseAccumulator {
    pub s: [[f64; 2]; 2],
}

impl NoiseAccumulator {
    /// S_jk with 1-based indices as in U_jk.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.s[j - 1][k - 1]
    }
}

pub fn noise_integrals(phase: f64, tau: f64, d: &DerivedParams) -> Result<NoiseAccumulator> {
    if !(tau >= 0.0) {
        return Err(Error::invalid("tau", "must be non-negative"));
    }
    let si = scalar_integrals(d, tau)?;
    let b = generator(phase, d.loss_asymmetry);
    let mut s = [[0.0; 2]; 2];
    for (k, _) in [0, 1].iter().enumerate() {
        let gk = gram(&si, &b, k);
        for (j, row) in s.iter_mut().enumerate() {
            row[k] = gk[(j, j)].re.max(0.0);
        }
    }
    Ok(NoiseAccumulator { s })
}

/// ⟨c†c⟩ and ⟨d†d⟩ split into the damped oscillatory part and the bath part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanNumbers {
    pub photons: f64,
    pub phonons: f64,
    pub osc_photons: f64,
    pub noise_photons: f64,
    pub osc_phonons: f64,
    pub noise_phonons: f64,
}

impl MeanNumbers {
    fn from_parts(osc: [f64; 2], noise: [f64; 2]) -> Self {
        MeanNumbers {
            photons: osc[0] + noise[0],
            phonons: osc[1] + noise[1],
            osc_photons: osc[0],
            noise_photons: noise[0],
            osc_phonons: osc[1],
            noise_phonons: noise[1],
        }
    }
}

fn oscillatory(u: &TransferMatrix, t: f64, d: &DerivedParams, p: &SystemParams) -> [f64; 2] {
    let decay = (-2.0 * d.mean_decay * t).exp();
    let m = &u.0;
    [0, 1].map(|j| decay * (p.init_photons * m[(j, 0)].norm_sqr() + p.init_phonons * m[(j, 1)].norm_sqr()))
}

pub fn mean_numbers_constant(tau: f64, d: &DerivedParams, p: &SystemParams) -> Result<MeanNumbers> {
    mean_numbers_constant_phase(0.0, tau, d, p)
}

/// Constant driving at an arbitrary phase.
pub fn mean_numbers_constant_phase(
    phase: f64,
    tau: f64,
    d: &DerivedParams,
    p: &SystemParams,
) -> Result<MeanNumbers> {
    let u = propagator(phase, tau, d);
    let s = noise_integrals(phase, tau, d)?;
    let noise = [0, 1].map(|j| d.mod_cavity_decay * s.s[j][0] + d.mod_mech_decay * s.s[j][1]);
    Ok(MeanNumbers::from_parts(oscillatory(&u, tau, d, p), noise))
}

pub fn mean_numbers_sequence(
    seq: &PhaseSequence,
    t: f64,
    d: &DerivedParams,
    p: &SystemParams,
) -> Result<MeanNumbers> {
    let end = seq.total_duration();
    if !(t >= 0.0) || t > end * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { t, end });
    }

    // Intervals (phase, elapsed duration, end time) up to t.
    let mut pieces = Vec::with_capacity(seq.len());
    let mut start = 0.0;
    for s in seq.segments() {
        if t <= start && !pieces.is_empty() {
            break;
        }
        let len = (t - start).clamp(0.0, s.duration);
        pieces.push((s.phase, len, start + len));
        start += s.duration;
    }

    let props: Vec<TransferMatrix> = pieces
        .iter()
        .map(|&(phase, len, _)| propagator(phase, len, d))
        .collect();

    // Suffix products: after[k] = U_last···U_{k+1}.
    let mut after = vec![TransferMatrix::identity(); props.len()];
    for k in (0..props.len().saturating_sub(1)).rev() {
        after[k] = after[k + 1] * props[k + 1];
    }
    let total = after[0] * props[0];

    let rates = [d.mod_cavity_decay, d.mod_mech_decay];
    let mut noise = [0.0; 2];
    if rates.iter().any(|&r| r != 0.0) {
        let mut cache: Option<(f64, ScalarIntegrals)> = None;
        for (k, &(phase, len, stop)) in pieces.iter().enumerate() {
            if len == 0.0 {
                continue;
            }
            let si = match cache {
                Some((l, si)) if l == len => si,
                _ => {
                    let si = scalar_integrals(d, len)?;
                    cache = Some((len, si));
                    si
                }
            };
            let b = generator(phase, d.loss_asymmetry);
            let weight = (-2.0 * d.mean_decay * (t - stop)).exp();
            let l_mat = &after[k].0;
            for (l, &rate) in rates.iter().enumerate() {
                if rate == 0.0 {
                    continue;
                }
                let g = l_mat * gram(&si, &b, l) * l_mat.adjoint();
                for (j, n) in noise.iter_mut().enumerate() {
                    *n += rate * weight * g[(j, j)].re.max(0.0);
                }
            }
        }
    }
    Ok(MeanNumbers::from_parts(oscillatory(&total, t, d, p), noise))
}

/// Mean numbers at each time of a sorted grid.
pub fn trace(
    seq: &PhaseSequence,
    grid: &[f64],
    d: &DerivedParams,
    p: &SystemParams,
) -> Result<Vec<MeanNumbers>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("grid", "times must be sorted"));
    }
    grid.iter().map(|&t| mean_numbers_sequence(seq, t, d, p)).collect()
}
