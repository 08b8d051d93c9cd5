//! Optimal composite phases and robustness scans.
//!
//! The objective is the dominant (oscillatory) phonon contribution
//! |U22^(N)|² as a function of a common area error δA on every segment,
//! with Γ held at its central value.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{mean_numbers_sequence, propagator_area, PhaseSequence};
use crate::params::{DerivedParams, SystemParams};

type C = Complex64;

/// Positive branch of the three-interaction optimum, arccos((3Γ² − 1)/2).
pub fn optimal_phase(gamma: f64) -> Result<f64> {
    let arg = (3.0 * gamma * gamma - 1.0) / 2.0;
    if !(gamma * gamma <= 1.0) {
        return Err(Error::NoRealSolution { gamma });
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Both branches (+φ, −φ); they give identical phonon numbers.
pub fn optimal_phase_pair(gamma: f64) -> Result<(f64, f64)> {
    optimal_phase(gamma).map(|p| (p, -p))
}

/// Lossless symmetric phases for odd N, φ_k = (N−1)k(k−1)π/(2N) mod 2π.
pub fn lossless_phases(n: usize) -> Result<Vec<f64>> {
    check_odd(n)?;
    let free: Vec<f64> = (2..=(n + 1) / 2)
        .map(|k| ((n - 1) * k * (k - 1)) as f64 * PI / (2 * n) as f64)
        .map(|p| p.rem_euclid(TAU))
        .collect();
    Ok(crate::evolution::symmetric_phases(&free))
}

fn check_odd(n: usize) -> Result<()> {
    if n % 2 == 0 {
        return Err(Error::invalid("N", format!("sequence length must be odd and positive, got {n}")));
    }
    Ok(())
}

fn segment_parts(phases: &[f64], gamma: f64) -> Vec<Matrix2<C>> {
    let omega = (1.0 - gamma * gamma).sqrt();
    phases
        .iter()
        .map(|&p| {
            let e = C::from_polar(1.0, p);
            let mi = C::new(0.0, -1.0);
            Matrix2::new(C::from(-gamma), mi * e, mi * e.conj(), C::from(gamma)) / C::from(omega)
        })
        .collect()
}

/// |U22^(N)|² with every segment accumulating area π/2 + δA at fixed Γ.
pub fn dominant_transfer(phases: &[f64], gamma: f64, deviation: f64) -> f64 {
    let area = PI / 2.0 + deviation;
    phases
        .iter()
        .fold(Matrix2::<C>::identity(), |acc, &p| propagator_area(p, gamma, area).0 * acc)[(1, 1)]
        .norm_sqr()
}

/// Taylor coefficients c_0..c_{order} of |U22^(N)|² in δA around δA = 0,
/// from a Cauchy-contour transform of its analytic continuation.
pub fn dominant_taylor(phases: &[f64], gamma: f64, order: usize) -> Vec<f64> {
    const POINTS: usize = 32;
    const RADIUS: f64 = 0.28;
    let parts = segment_parts(phases, gamma);
    let conj_parts: Vec<Matrix2<C>> = parts.iter().map(|b| b.map(|z| z.conj())).collect();
    let values: Vec<C> = (0..POINTS)
        .map(|m| {
            let z = C::from(PI / 2.0) + C::from_polar(RADIUS, TAU * m as f64 / POINTS as f64);
            let (c, s) = (z.cos(), z.sin());
            let prod = |bs: &[Matrix2<C>]| {
                bs.iter()
                    .fold(Matrix2::<C>::identity(), |acc, b| (Matrix2::identity() * c + b * s) * acc)[(1, 1)]
            };
            prod(&parts) * prod(&conj_parts)
        })
        .collect();
    (0..=order)
        .map(|n| {
            let sum: C = values
                .iter()
                .enumerate()
                .map(|(m, v)| v * C::from_polar(1.0, -TAU * (n * m) as f64 / POINTS as f64))
                .sum();
            sum.re / POINTS as f64 / RADIUS.powi(n as i32)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Accept when the gradient of the squared residual drops below this.
    pub gradient_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { max_iterations: 2000, gradient_tol: 1e-13 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizedSequence {
    pub phases: Vec<f64>,
    /// Norm of the Taylor coefficients c_1..c_{N−1} at the solution.
    pub residual: f64,
    pub iterations: usize,
}

/// Symmetric phases flattening |U22^(N)|² around δA = 0, for Γ of `d`.
pub fn optimize_sequence(n: usize, d: &DerivedParams) -> Result<Vec<f64>> {
    optimize_sequence_with(n, d.loss_asymmetry, &OptimizerOptions::default()).map(|r| r.phases)
}

/// Levenberg–Marquardt least squares on the Taylor coefficients of orders
/// 1..N−1, seeded from the lossless phases. The two branches are related
/// by a joint sign flip; the one continuing the positive lossless seed is
/// reported.
pub fn optimize_sequence_with(n: usize, gamma: f64, opts: &OptimizerOptions) -> Result<OptimizedSequence> {
    check_odd(n)?;
    if !(gamma * gamma < 1.0) {
        return Err(Error::Overdamped { gamma });
    }
    let seed = lossless_phases(n)?;
    let m = (n - 1) / 2;
    if m == 0 {
        return Ok(OptimizedSequence { phases: seed, residual: 0.0, iterations: 0 });
    }
    let residuals = |x: &DVector<f64>| -> DVector<f64> {
        let full = crate::evolution::symmetric_phases(x.as_slice());
        DVector::from_vec(dominant_taylor(&full, gamma, n - 1)[1..].to_vec())
    };
    let jacobian = |x: &DVector<f64>| -> DMatrix<f64> {
        let h = 1e-6;
        let mut j = DMatrix::zeros(n - 1, m);
        for k in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            j.set_column(k, &((residuals(&xp) - residuals(&xm)) / (2.0 * h)));
        }
        j
    };

    let mut x = DVector::from_vec(seed[1..=m].to_vec());
    let mut r = residuals(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for iteration in 0..opts.max_iterations {
        let j = jacobian(&x);
        let jt = j.transpose();
        let grad = &jt * &r;
        if grad.amax() <= opts.gradient_tol {
            return Ok(finish(x, r.norm(), iteration));
        }
        let jtj = &jt * &j;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * (jtj[(k, k)] + 1e-12);
            }
            let step = a.lu().solve(&(-&grad)).ok_or(Error::Convergence {
                iterations: iteration,
                residual: r.norm(),
            })?;
            let xn = &x + &step;
            let rn = residuals(&xn);
            let cn = rn.norm_squared();
            if cn < cost {
                let small = step.amax() <= 1e-14 * (1.0 + x.amax());
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if small {
                    return Ok(finish(x, r.norm(), iteration + 1));
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // No descent direction left at working precision: stationary.
            return Ok(finish(x, r.norm(), iteration + 1));
        }
    }
    Err(Error::Convergence { iterations: opts.max_iterations, residual: r.norm() })
}

fn finish(x: DVector<f64>, residual: f64, iterations: usize) -> OptimizedSequence {
    let free: Vec<f64> = x.iter().map(|p| p.rem_euclid(TAU)).collect();
    OptimizedSequence {
        phases: crate::evolution::symmetric_phases(&free),
        residual,
        iterations,
    }
}

/// Final phonon number against area deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessCurve {
    pub phases: Vec<f64>,
    pub deviations: Vec<f64>,
    pub phonons: Vec<f64>,
}

impl RobustnessCurve {
    /// Extent of the contiguous region around δA = 0 where the phonon number
    /// stays within `fraction` of its central value, as (lower, upper)
    /// offsets, linearly interpolated at the crossings. The grid must
    /// contain δA = 0.
    pub fn flat_region(&self, fraction: f64) -> Result<(f64, f64)> {
        let c = self
            .deviations
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::invalid("deviations", "grid must contain 0"))?;
        let y0 = self.phonons[c];
        let limit = fraction * y0.abs();
        let bad = |i: usize| (self.phonons[i] - y0).abs() > limit;
        let cross = |i: usize, o: usize| {
            // last good index i, first bad index o
            let (yi, yo) = ((self.phonons[i] - y0).abs(), (self.phonons[o] - y0).abs());
            let t = (limit - yi) / (yo - yi);
            self.deviations[i] + t * (self.deviations[o] - self.deviations[i])
        };
        let mut hi = c;
        while hi + 1 < self.deviations.len() && !bad(hi + 1) {
            hi += 1;
        }
        let upper = if hi + 1 < self.deviations.len() { cross(hi, hi + 1) } else { self.deviations[hi] };
        let mut lo = c;
        while lo > 0 && !bad(lo - 1) {
            lo -= 1;
        }
        let lower = if lo > 0 { cross(lo, lo - 1) } else { self.deviations[lo] };
        Ok((lower, upper))
    }

    /// Smaller side of [`flat_region`](Self::flat_region).
    pub fn half_width(&self, fraction: f64) -> Result<f64> {
        let (lo, hi) = self.flat_region(fraction)?;
        Ok(hi.min(-lo))
    }
}

pub fn robustness_scan(
    seq: &PhaseSequence,
    deviations: &[f64],
    d: &DerivedParams,
    p: &SystemParams,
) -> Result<RobustnessCurve> {
    if deviations.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("deviations", "must be strictly increasing"));
    }
    let t = seq.total_duration();
    let phonons = deviations
        .par_iter()
        .map(|&dev| {
            let dd = d.apply_area_deviation(dev)?;
            Ok(mean_numbers_sequence(seq, t, &dd, p)?.phonons)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RobustnessCurve {
        phases: seq.phases(),
        deviations: deviations.to_vec(),
        phonons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrapped_eq(a: f64, b: f64, tol: f64) -> bool {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d) <= tol
    }

    #[test]
    fn optimal_phase_limits() {
        assert!((optimal_phase(0.0).unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(optimal_phase(1.0).unwrap(), 0.0);
        assert_eq!(optimal_phase(-1.0).unwrap(), 0.0);
        assert!(matches!(optimal_phase(1.01), Err(Error::NoRealSolution { .. })));
        let (p, m) = optimal_phase_pair(0.349).unwrap();
        assert!((p - 1.89).abs() < 0.01 && p == -m);
    }

    #[test]
    fn lossless_tables() {
        assert_eq!(lossless_phases(1).unwrap(), vec![0.0]);
        let three = lossless_phases(3).unwrap();
        assert!((three[1] - 2.0 * PI / 3.0).abs() < 1e-15);
        let seven = lossless_phases(7).unwrap();
        let expect = [0.0, 6.0, 4.0, 8.0, 4.0, 6.0, 0.0].map(|k| -k * PI / 7.0);
        for (a, b) in seven.iter().zip(expect) {
            assert!(wrapped_eq(*a, -b, 1e-12), "{a} vs {b}");
        }
        assert!(lossless_phases(4).is_err());
    }

    #[test]
    fn lossless_sequences_are_flat() {
        for n in [3, 5, 7, 9] {
            let c = dominant_taylor(&lossless_phases(n).unwrap(), 0.0, n - 1);
            assert!(c[0].abs() < 1e-13);
            for (k, v) in c.iter().enumerate().skip(1) {
                assert!(v.abs() < 1e-10, "N={n} order {k}: {v}");
            }
        }
    }

    #[test]
    fn taylor_matches_direct_evaluation() {
        let phases = [0.0, 1.3, 0.4, 1.3, 0.0];
        let c = dominant_taylor(&phases, 0.2, 20);
        for dev in [-0.1_f64, 0.05, 0.12] {
            let series: f64 = c.iter().enumerate().map(|(k, v)| v * dev.powi(k as i32)).sum();
            let direct = dominant_transfer(&phases, 0.2, dev);
            assert!((series - direct).abs() < 1e-11, "{dev}: {series} vs {direct}");
        }
    }

    #[test]
    fn three_step_optimizer_recovers_closed_form() {
        for gamma in [0.0, 0.1, 0.349, -0.2] {
            let r = optimize_sequence_with(3, gamma, &OptimizerOptions::default()).unwrap();
            assert!((r.phases[1] - optimal_phase(gamma).unwrap()).abs() < 1e-8, "Γ={gamma}");
        }
    }

    #[test]
    fn single_interaction() {
        let r = optimize_sequence_with(1, 0.3, &OptimizerOptions::default()).unwrap();
        assert_eq!(r.phases, vec![0.0]);
        assert!(optimize_sequence_with(2, 0.3, &OptimizerOptions::default()).is_err());
    }

    #[test]
    fn flat_region_interpolates() {
        let curve = RobustnessCurve {
            phases: vec![0.0],
            deviations: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            phonons: vec![3.0, 1.0, 1.0, 1.05, 1.3],
        };
        let (lo, hi) = curve.flat_region(0.1).unwrap();
        assert!((lo - (-1.0 - 0.1 / 2.0)).abs() < 1e-12);
        assert!((hi - (1.0 + 0.05 / 0.25)).abs() < 1e-12);
        assert!((curve.half_width(0.1).unwrap() - 1.05).abs() < 1e-12);
    }
}
