use optomech::evolution::{mean_numbers_sequence, noise_integrals, propagator_scaled};
use optomech::params::compute_steady_state;
use optomech::{derive, Drive, PhaseSequence, SystemParams};
use proptest::prelude::*;

fn params(g0: f64, kappa: f64, gamma: f64, photons: f64) -> SystemParams {
    SystemParams {
        bare_coupling: g0,
        cavity_decay: kappa,
        mech_decay: gamma,
        drive: Drive::PhotonNumber(photons),
        ..SystemParams::preset("cohen").unwrap()
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn area_is_additive(phase in -4.0..4.0f64, gamma in -0.9..0.9f64, x1 in 0.0..3.0f64, x2 in 0.0..3.0f64) {
        let whole = propagator_scaled(phase, gamma, x1 + x2);
        let split = propagator_scaled(phase, gamma, x2) * propagator_scaled(phase, gamma, x1);
        let err = (whole.0 - split.0).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn swap_time_has_quarter_area(
        g0 in 1e-6..1e-4f64,
        kappa in 1e-5..1e-2f64,
        gamma in 1e-6..1e-3f64,
        photons in 1e4..1e6f64,
    ) {
        let p = params(g0, kappa, gamma, photons);
        if let Ok(d) = derive(&p) {
            prop_assert!(close(d.enhanced_coupling * d.rabi * d.swap_time, std::f64::consts::FRAC_PI_2, 1e-14));
        }
    }

    #[test]
    fn photon_number_round_trip(g0 in 1e-6..1e-4f64, kappa in 1e-5..1e-2f64, photons in 1e3..1e6f64) {
        let p = params(g0, kappa, 1e-4, photons);
        let ss = compute_steady_state(&p).unwrap();
        let q = SystemParams { drive: Drive::Strength(ss.drive_strength), ..p };
        let n = compute_steady_state(&q).unwrap().alpha.norm_sqr();
        prop_assert!(close(n, photons, 1e-9), "{n} vs {photons}");
    }

    /// With κ = γ and no thermal input the total excitation decays as e^{−2μt}.
    #[test]
    fn equal_loss_conserves_excitation(
        rate in 1e-5..1e-3f64,
        n0 in 0.0..5.0f64,
        m0 in 0.0..50.0f64,
        phases in prop::collection::vec(-3.2..3.2f64, 1..6),
        frac in 0.0..1.0f64,
    ) {
        let p = SystemParams {
            thermal_occ_cavity: 0.0,
            thermal_occ_mech: 0.0,
            init_photons: n0,
            init_phonons: m0,
            ..params(1e-4, rate, rate, 9e4)
        };
        let d = derive(&p).unwrap();
        prop_assert_eq!(d.loss_asymmetry, 0.0);
        let seq = PhaseSequence::from_phases(&phases, d.swap_time).unwrap();
        let t = frac * seq.total_duration();
        let m = mean_numbers_sequence(&seq, t, &d, &p).unwrap();
        let expected = (n0 + m0) * (-2.0 * d.mean_decay * t).exp();
        prop_assert!((m.photons + m.phonons - expected).abs() <= 1e-12 * (n0 + m0).max(1.0));
    }

    /// Oscillatory part is linear in (n0, m0) and blind to n_th; the noise
    /// part is the reverse.
    #[test]
    fn oscillatory_and_noise_split(
        n0 in 0.0..2.0f64,
        m0 in 0.0..40.0f64,
        nc in 0.0..2.0f64,
        nm in 0.0..50.0f64,
        phi in -3.2..3.2f64,
        frac in 0.0..1.0f64,
    ) {
        let base = SystemParams::preset("lecocq").unwrap();
        let p = SystemParams { init_photons: n0, init_phonons: m0, thermal_occ_cavity: nc, thermal_occ_mech: nm, ..base.clone() };
        let d = derive(&p).unwrap();
        let seq = PhaseSequence::from_phases(&[0.0, phi, 0.0], d.swap_time).unwrap();
        let t = frac * seq.total_duration();
        let m = mean_numbers_sequence(&seq, t, &d, &p).unwrap();
        prop_assert!(close(m.photons, m.osc_photons + m.noise_photons, 1e-14));
        prop_assert!(close(m.phonons, m.osc_phonons + m.noise_phonons, 1e-14));

        let cold = SystemParams { thermal_occ_cavity: 0.0, thermal_occ_mech: 0.0, ..p.clone() };
        let dc = derive(&cold).unwrap();
        let mc = mean_numbers_sequence(&seq, t, &dc, &cold).unwrap();
        prop_assert!(close(mc.osc_phonons, m.osc_phonons, 1e-12));
        prop_assert!(mc.noise_phonons.abs() < 1e-300 + 1e-15 * m.noise_phonons);

        let doubled = SystemParams { init_photons: 2.0 * n0, init_phonons: 2.0 * m0, thermal_occ_cavity: 2.0 * nc, thermal_occ_mech: 2.0 * nm, ..p };
        let dd = derive(&doubled).unwrap();
        let m2 = mean_numbers_sequence(&seq, t, &dd, &doubled).unwrap();
        prop_assert!(close(m2.osc_phonons, 2.0 * m.osc_phonons, 1e-12));
        prop_assert!(close(m2.noise_phonons, 2.0 * m.noise_phonons, 1e-12));
    }

    #[test]
    fn sign_of_phases_is_irrelevant(free in prop::collection::vec(-3.2..3.2f64, 1..4), frac in 0.0..1.0f64) {
        let p = SystemParams::preset("groblacher").unwrap();
        let d = derive(&p).unwrap();
        let seq = PhaseSequence::symmetric(&free, d.swap_time).unwrap();
        let t = frac * seq.total_duration();
        let a = mean_numbers_sequence(&seq, t, &d, &p).unwrap();
        let b = mean_numbers_sequence(&seq.negated(), t, &d, &p).unwrap();
        prop_assert!(close(a.phonons, b.phonons, 1e-12) && close(a.photons, b.photons, 1e-12));
    }

    /// A global phase offset does not change occupations.
    #[test]
    fn global_phase_is_irrelevant(phases in prop::collection::vec(-3.2..3.2f64, 1..6), shift in -3.2..3.2f64) {
        let p = SystemParams::preset("cohen").unwrap();
        let d = derive(&p).unwrap();
        let seq = PhaseSequence::from_phases(&phases, d.swap_time).unwrap();
        let shifted: Vec<f64> = phases.iter().map(|x| x + shift).collect();
        let moved = PhaseSequence::from_phases(&shifted, d.swap_time).unwrap();
        let t = seq.total_duration();
        let a = mean_numbers_sequence(&seq, t, &d, &p).unwrap();
        let b = mean_numbers_sequence(&moved, t, &d, &p).unwrap();
        prop_assert!(close(a.phonons, b.phonons, 1e-11));
    }

    #[test]
    fn noise_integrals_grow_with_time(phase in -3.2..3.2f64, t1 in 0.0..500.0f64, dt in 0.0..500.0f64) {
        let d = derive(&SystemParams::preset("lecocq").unwrap()).unwrap();
        let a = noise_integrals(phase, t1, &d).unwrap();
        let b = noise_integrals(phase, t1 + dt, &d).unwrap();
        for j in 1..=2 {
            for k in 1..=2 {
                prop_assert!(b.get(j, k) >= a.get(j, k) * (1.0 - 1e-12));
            }
        }
    }

    /// Splitting a constant-phase run into equal-phase segments changes nothing.
    #[test]
    fn equal_phase_segments_compose(phase in -3.2..3.2f64, n in 1usize..6, frac in 0.0..1.0f64) {
        let p = SystemParams::preset("lecocq").unwrap();
        let d = derive(&p).unwrap();
        let whole = PhaseSequence::constant(phase, 1, n as f64 * d.swap_time).unwrap();
        let split = PhaseSequence::constant(phase, n, d.swap_time).unwrap();
        let t = frac * whole.total_duration();
        let a = mean_numbers_sequence(&whole, t, &d, &p).unwrap();
        let b = mean_numbers_sequence(&split, t, &d, &p).unwrap();
        prop_assert!(close(a.phonons, b.phonons, 1e-10) && close(a.photons, b.photons, 1e-10));
    }
}
