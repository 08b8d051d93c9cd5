//! Independent checks of the closed forms: matrix exponential for the
//! propagator, Romberg integration for the noise integrals and explicit
//! products for the three-segment transfer matrix.

use nalgebra::Matrix2;
use num_complex::Complex64 as C;
use optomech::evolution::{
    composite_propagator, mean_numbers_constant_phase, noise_integrals, propagator, propagator_scaled,
};
use optomech::{derive, DerivedParams, PhaseSequence, SystemParams};
use proptest::prelude::*;

fn i() -> C {
    C::new(0.0, 1.0)
}

/// Ĥ = e^{iφ}σ+ + e^{−iφ}σ− − iΓσz
fn hamiltonian(phase: f64, gamma: f64) -> Matrix2<C> {
    Matrix2::new(
        -i() * gamma,
        C::from_polar(1.0, phase),
        C::from_polar(1.0, -phase),
        i() * gamma,
    )
}

/// e^{−i x Ĥ}
fn expm(phase: f64, gamma: f64, x: f64) -> Matrix2<C> {
    (hamiltonian(phase, gamma) * (-i() * x)).exp()
}

fn max_diff(a: &Matrix2<C>, b: &Matrix2<C>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn scale(m: &Matrix2<C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

/// Romberg table on the trapezoid rule with 2^levels panels.
fn romberg(f: impl Fn(f64) -> f64, a: f64, b: f64, levels: usize) -> f64 {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut h = b - a;
    let mut trap = 0.5 * h * (f(a) + f(b));
    for level in 0..=levels {
        if level > 0 {
            let n = 1usize << (level - 1);
            h *= 0.5;
            let mid: f64 = (0..n).map(|k| f(a + (2 * k + 1) as f64 * h)).sum();
            trap = 0.5 * trap + h * mid;
        }
        let mut row = vec![trap];
        for m in 1..=level {
            let p = 4f64.powi(m as i32);
            let prev = &rows[level - 1];
            row.push((p * row[m - 1] - prev[m - 1]) / (p - 1.0));
        }
        rows.push(row);
    }
    *rows.last().unwrap().last().unwrap()
}

fn preset(name: &str) -> (SystemParams, DerivedParams) {
    let p = SystemParams::preset(name).unwrap();
    let d = derive(&p).unwrap();
    (p, d)
}

proptest! {
    #[test]
    fn propagator_matches_matrix_exponential(
        phase in -7.0..7.0f64,
        gamma in -1.6..1.6f64,
        x in 0.0..6.0f64,
    ) {
        let u = propagator_scaled(phase, gamma, x).0;
        let e = expm(phase, gamma, x);
        prop_assert!(max_diff(&u, &e) <= 1e-10 * scale(&e), "{u} vs {e}");
    }
}

#[test]
fn propagator_near_critical_damping() {
    for gamma in [1.0 - 1e-9, 1.0, 1.0 + 1e-9, -1.0] {
        for x in [1e-6, 0.3, 2.0, 10.0] {
            let u = propagator_scaled(0.4, gamma, x).0;
            let e = expm(0.4, gamma, x);
            assert!(max_diff(&u, &e) <= 1e-10 * scale(&e), "Γ={gamma} x={x}");
        }
    }
}

fn check_noise(d: &DerivedParams, phase: f64, tau: f64) {
    let s = noise_integrals(phase, tau, d).unwrap();
    for j in 0..2 {
        for k in 0..2 {
            let f = |x: f64| {
                (-2.0 * d.mean_decay * x).exp()
                    * expm(phase, d.loss_asymmetry, d.enhanced_coupling * x)[(j, k)].norm_sqr()
            };
            let oracle = romberg(f, 0.0, tau, 12);
            let got = s.get(j + 1, k + 1);
            assert!(
                (got - oracle).abs() <= 1e-8 * oracle.abs().max(1e-300) + 1e-300,
                "S{}{} = {got} vs {oracle} (Γ={}, τ={tau})",
                j + 1,
                k + 1,
                d.loss_asymmetry
            );
        }
    }
}

#[test]
fn noise_integrals_match_romberg() {
    for name in ["cohen", "lecocq", "groblacher", "fig3", "symmetric"] {
        let (_, d) = preset(name);
        for frac in [0.01, 0.5, 1.0, 3.0] {
            check_noise(&d, 1.1, frac * d.swap_time);
        }
    }
}

#[test]
fn noise_integrals_overdamped_match_romberg() {
    let (_, d) = preset("fig3");
    let d = DerivedParams { loss_asymmetry: 1.6, rabi: f64::NAN, ..d };
    for tau in [0.1, 5.0, 40.0] {
        check_noise(&d, -0.7, tau);
    }
}

#[test]
fn constant_phase_numbers_from_oracle_parts() {
    let (p, d) = preset("lecocq");
    let tau = 1.3 * d.swap_time;
    let phase = 0.9;
    let m = mean_numbers_constant_phase(phase, tau, &d, &p).unwrap();
    let u = expm(phase, d.loss_asymmetry, d.enhanced_coupling * tau);
    let decay = (-2.0 * d.mean_decay * tau).exp();
    let s = |j: usize, k: usize| {
        romberg(
            |x| (-2.0 * d.mean_decay * x).exp() * expm(phase, d.loss_asymmetry, d.enhanced_coupling * x)[(j, k)].norm_sqr(),
            0.0,
            tau,
            12,
        )
    };
    let photons = decay * (p.init_photons * u[(0, 0)].norm_sqr() + p.init_phonons * u[(0, 1)].norm_sqr())
        + d.mod_cavity_decay * s(0, 0)
        + d.mod_mech_decay * s(0, 1);
    let phonons = decay * (p.init_photons * u[(1, 0)].norm_sqr() + p.init_phonons * u[(1, 1)].norm_sqr())
        + d.mod_cavity_decay * s(1, 0)
        + d.mod_mech_decay * s(1, 1);
    assert!((m.photons / photons - 1.0).abs() < 1e-8);
    assert!((m.phonons / phonons - 1.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Elements of U0 Uφ U0 written through the single-segment U at φ = 0.
    #[test]
    fn three_segment_closed_forms(gamma in -0.95..0.95f64, phase in -3.2..3.2f64) {
        let omega = (1.0 - gamma * gamma).sqrt();
        let x = std::f64::consts::FRAC_PI_2 / omega;
        let u = propagator_scaled(0.0, gamma, x).0;
        let (a, b, c, d) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        let e = C::from_polar(1.0, phase);
        let closed = Matrix2::new(
            a * a * a + b * c * (d + 2.0 * a * phase.cos()),
            b * (a * a + d * d + b * c / e + a * d * e),
            c * (a * a + d * d + b * c * e + a * d / e),
            d * d * d + b * c * (a + 2.0 * d * phase.cos()),
        );
        let product = propagator_scaled(0.0, gamma, x).0
            * propagator_scaled(phase, gamma, x).0
            * propagator_scaled(0.0, gamma, x).0;
        prop_assert!(max_diff(&closed, &product) <= 1e-12, "{closed} vs {product}");

        let params = SystemParams::preset("fig3").unwrap();
        let dp = derive(&params).unwrap();
        let g = dp.enhanced_coupling;
        let (kappa, mech) = if gamma >= 0.0 { (4.0 * g * gamma + 1e-3, 1e-3) } else { (1e-3, 1e-3 - 4.0 * g * gamma) };
        let dp = dp.with_rates(g, kappa, mech).unwrap();
        let seq = PhaseSequence::from_phases(&[0.0, phase, 0.0], x / g).unwrap();
        let composite = composite_propagator(&seq, &dp).0;
        let direct = [0.0, phase, 0.0]
            .iter()
            .fold(Matrix2::identity(), |acc: Matrix2<C>, &p| propagator(p, x / g, &dp).0 * acc);
        prop_assert!(max_diff(&composite, &direct) <= 1e-12);
    }
}
