use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ris_isac::beamform::{
    assemble_p21, metrics_from, solve_beamformers, BeamDiagnostics, BeamSolveOptions,
    BeamformerSet, Requirements,
};
use ris_isac::cli::parse_seeds;
use ris_isac::linalg::{complex_gaussian_vec, hermitian_eigen, outer, CMat, CVec};
use ris_isac::ris::{lift, recover_phases};
use ris_isac::scenario::SnrForm;
use ris_isac::sdp::{embed_matrix, unembed_matrix};
use ris_isac::PhaseShifts;

fn req(r: f64, gamma: f64, users: usize) -> Requirements {
    Requirements {
        r_req_bps_hz: r,
        gamma_req_linear: gamma,
        sigma2_sensing: 1e-3,
        sigma2_users: vec![1e-3; users],
        sensing_interference: false,
    }
}

fn instance(seed: u64, users: usize, dim: usize) -> (Vec<CVec>, Vec<CMat>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = (0..users)
        .map(|_| complex_gaussian_vec(dim, &mut rng))
        .collect();
    let h0 = complex_gaussian_vec(2, &mut rng);
    let c = complex_gaussian_vec(dim, &mut rng);
    (g, vec![outer(&h0, &c)])
}

fn solve(
    g: &[CVec],
    echo: &[CMat],
    r: &Requirements,
    seed: u64,
) -> (BeamformerSet, BeamDiagnostics) {
    let p = assemble_p21(g, echo, r).unwrap();
    solve_beamformers(
        &p,
        &BeamSolveOptions::default(),
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
    .unwrap()
}

fn min_power(g: &[CVec], echo: &[CMat], r: &Requirements, seed: u64) -> f64 {
    solve(g, echo, r, seed).0.total_power()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phases_have_unit_modulus(phases in prop::collection::vec(-10.0f64..10.0, 1..32)) {
        let v = PhaseShifts::from_phases(&phases);
        prop_assert!(v.vector().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn phase_recovery_ignores_common_factor(
        phases in prop::collection::vec(0.0f64..6.28, 1..16),
        re in 0.1f64..5.0,
        im in -5.0f64..5.0,
    ) {
        let v = PhaseShifts::from_phases(&phases);
        let lifted = lift(&v) * Complex64::new(re, im);
        let back = recover_phases(&lifted).unwrap();
        let err = (back.vector() - v.vector()).norm();
        prop_assert!(err < 1e-12, "{}", err);
    }

    #[test]
    fn embedding_preserves_spectrum(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| ris_isac::linalg::complex_gaussian(&mut rng));
        let x = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let e = embed_matrix(&x);
        prop_assert!((unembed_matrix(&e) - &x).norm() <= 1e-13 * x.norm());
        prop_assert!((e.trace() - 2.0 * x.trace().re).abs() < 1e-12 * x.norm().max(1.0));
        let (vals, _) = hermitian_eigen(&x);
        let mut real: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        real.sort_by(|a, b| b.total_cmp(a));
        for (i, v) in vals.iter().enumerate() {
            prop_assert!((real[2 * i] - v).abs() < 1e-10);
        }
    }

    #[test]
    fn seed_ranges_are_inclusive(a in 0u64..100, len in 0u64..50) {
        let seeds = parse_seeds(&format!("{a}..{}", a + len)).unwrap();
        prop_assert_eq!(seeds.len() as u64, len + 1);
        prop_assert_eq!(seeds.first().copied(), Some(a));
    }

    #[test]
    fn metrics_ignore_per_beam_phase(seed in any::<u64>(), rot in 0.0f64..6.28) {
        let (g, echo) = instance(seed, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let w = BeamformerSet::new((0..3).map(|_| complex_gaussian_vec(4, &mut rng)).collect()).unwrap();
        let turned = BeamformerSet::new(
            w.w.iter().enumerate().map(|(i, x)| x * Complex64::from_polar(1.0, rot * i as f64)).collect(),
        ).unwrap();
        let r = req(1.0, 1.0, 2);
        let a = metrics_from(&g, &echo, &w, &r, SnrForm::Trace);
        let b = metrics_from(&g, &echo, &turned, &r, SnrForm::Trace);
        for (x, y) in a.per_user_se_bps_hz.iter().zip(&b.per_user_se_bps_hz) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((a.sensing_snr_linear[0] - b.sensing_snr_linear[0]).abs()
            <= 1e-10 * a.sensing_snr_linear[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tighter_thresholds_never_lower_power(seed in any::<u64>(), r in 0.5f64..3.0, extra in 0.1f64..2.0) {
        let (g, echo) = instance(seed, 2, 4);
        let lo = min_power(&g, &echo, &req(r, 2.0, 2), seed);
        let hi_r = min_power(&g, &echo, &req(r + extra, 2.0, 2), seed);
        let hi_g = min_power(&g, &echo, &req(r, 2.0 * (1.0 + extra), 2), seed);
        prop_assert!(lo <= hi_r * (1.0 + 1e-7), "{} > {}", lo, hi_r);
        prop_assert!(lo <= hi_g * (1.0 + 1e-7), "{} > {}", lo, hi_g);
    }

    #[test]
    fn power_scales_inversely_with_channel_gain(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let (g, echo) = instance(seed, 2, 4);
        let (w, d) = solve(&g, &echo, &req(1.5, 3.0, 2), seed);
        let c = Complex64::new(scale.sqrt(), 0.0);
        let g2: Vec<CVec> = g.iter().map(|x| x * c).collect();
        let e2: Vec<CMat> = echo.iter().map(|h| h * c).collect();
        let (w2, d2) = solve(&g2, &e2, &req(1.5, 3.0, 2), seed);
        assert_relative_eq!(d2.sdp_objective * scale, d.sdp_objective, max_relative = 1e-6);
        if d.all_rank_one(1e-4) && d2.all_rank_one(1e-4) {
            assert_relative_eq!(w2.total_power() * scale, w.total_power(), max_relative = 1e-6);
        }
    }
}
