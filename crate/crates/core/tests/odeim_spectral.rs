use num_complex::Complex64 as C;
use pblab::odeim::*;
use pblab::LabError;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn problem(alpha: f64, l: f64) -> SpectralProblem<f64> {
    SpectralProblem::new(alpha, l).unwrap()
}

/// Ten energies spread over modulus and phase.
fn complex_sample() -> Vec<C> {
    (0..10)
        .map(|k| C::from_polar(0.5 + 2.0 * k as f64, 0.3 + 0.6 * k as f64))
        .collect()
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[test]
fn psi_wronskian_pin() {
    for (alpha, l) in [(2.0, 0.3), (3.0, 0.1), (1.5, 0.7)] {
        let p = problem(alpha, l);
        let h = l + 0.5;
        let expected = c(0.0, 2.0) * (p.q_pow(h) - p.q_pow(-h));
        for e in [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 1.0), c(-3.0, -0.5)] {
            let plus = shoot_psi(&p, e, 1.0).unwrap();
            let minus = shoot_psi(&p.reflected(), e, 1.0).unwrap();
            assert!(rel(wronskian(&plus, &minus), expected) < 1e-8, "({alpha}, {l}) at {e}");
        }
    }
}

#[test]
fn chi_wronskian_pin() {
    let p = problem(2.0, 0.3);
    for e in [c(0.0, 0.0), c(1.0, 0.5), c(-2.0, 1.0), c(5.0, -3.0)] {
        let r = symmetry_checks(&p, e).unwrap();
        assert!(r.chi_wronskian < 1e-8, "{e}: {}", r.chi_wronskian);
    }
}

#[test]
fn psi_starts_like_a_power() {
    let p = problem(2.0, 0.3);
    let e = c(2.0, 0.0);
    for x in [0.02, 0.04, 0.08] {
        let w = shoot_psi(&p, e, x).unwrap();
        let lead = p.psi_normalization() * x.powf(p.l + 1.0);
        // ψ = N x^{l+1}(1 - E x²/(2(2l+3)) + O(x⁴))
        let ratio = w.psi / lead - 1.0;
        let second = -e * x * x / (2.0 * (2.0 * p.l + 3.0));
        assert!((ratio - second).norm() < x.powi(4), "x = {x}");
    }
}

#[test]
fn psi_is_stable_under_halving_x_start() {
    let p = problem(2.0, 0.3);
    let mut opts = p.opts;
    opts.x_start = 0.05;
    let q = p.with_options(opts).unwrap();
    let a = shoot_psi(&p, c(0.0, 0.0), 1.0).unwrap();
    let b = shoot_psi(&q, c(0.0, 0.0), 1.0).unwrap();
    assert!(a.psi.norm().is_finite());
    assert!(rel(a.psi, b.psi) < 1e-10 && rel(a.dpsi, b.dpsi) < 1e-10);
}

#[test]
fn chi_is_stable_under_doubling_x_far() {
    let p = problem(2.0, 0.3);
    for e in [c(0.0, 0.0), c(3.0, 2.0), c(-1.0, -4.0)] {
        let xf = p.x_far_for(e);
        let a = shoot_chi(&p, e, 1.0, xf).unwrap();
        let b = shoot_chi(&p, e, 1.0, 2.0 * xf).unwrap();
        assert!((a.psi - b.psi).norm() < 1e-9 * a.psi.norm(), "{e}");
    }
}

#[test]
fn chi_rejects_a_starting_point_outside_the_asymptotic_regime() {
    let p = problem(2.0, 0.3);
    let err = shoot_chi(&p, c(100.0, 0.0), 1.0, 1.5).unwrap_err();
    assert!(matches!(err, LabError::AsymptoticRegime { .. }));
}

#[test]
fn determinant_does_not_depend_on_the_matching_point() {
    let p = problem(2.0, 0.3);
    for e in [c(3.0, 2.0), c(-1.0, 0.5)] {
        let d = spectral_d(&p, e).unwrap();
        for xm in [0.8, 1.2] {
            let mut opts = p.opts;
            opts.x_match = xm;
            let q = p.with_options(opts).unwrap();
            assert!(rel(spectral_d(&q, e).unwrap(), d) < 1e-8);
        }
    }
}

#[test]
fn wronskian_is_constant_along_the_integration_range() {
    let p = problem(3.0, 0.1);
    let e = c(2.0, -1.0);
    let xf = p.x_far_for(e);
    let w: Vec<C> = [0.3, 0.7, 1.1, 1.6, 2.2]
        .iter()
        .map(|&x| wronskian(&shoot_chi(&p, e, x, xf).unwrap(), &shoot_psi(&p, e, x).unwrap()))
        .collect();
    for v in &w[1..] {
        assert!(rel(*v, w[0]) < 1e-8);
    }
}

#[test]
fn product_identity_at_zero_energy() {
    for (alpha, l) in [(2.0, 0.3), (3.0, 0.1), (2.0, 0.0), (1.5, 0.7)] {
        let p = problem(alpha, l);
        let d = spectral_d(&p, c(0.0, 0.0)).unwrap() * spectral_d(&p.reflected(), c(0.0, 0.0)).unwrap();
        assert!((d - 1.0).norm() < 1e-6, "({alpha}, {l}): {d}");
    }
}

#[test]
fn quantum_wronskian_on_complex_energies() {
    for (alpha, l) in [(2.0, 0.3), (3.0, 0.1)] {
        let p = problem(alpha, l);
        for e in complex_sample() {
            let r = quantum_wronskian_residual(&p, e).unwrap().norm();
            assert!(r <= 1e-6, "({alpha}, {l}) at {e}: {r}");
        }
    }
}

#[test]
fn quantum_wronskian_at_zero_is_the_product_identity() {
    let p = problem(2.0, 0.3);
    let h = p.l + 0.5;
    let d = spectral_d(&p, c(0.0, 0.0)).unwrap() * spectral_d(&p.reflected(), c(0.0, 0.0)).unwrap();
    let from_product = (p.q_pow(h) - p.q_pow(-h)) * (d - 1.0);
    let r = quantum_wronskian_residual(&p, c(0.0, 0.0)).unwrap();
    assert!((r - from_product).norm() < 1e-12);
}

#[test]
fn reflection_flips_the_quantum_wronskian_residual() {
    let p = problem(2.0, 0.3);
    for e in [c(1.0, 0.0), c(2.0, 1.0)] {
        let a = quantum_wronskian_residual(&p, e).unwrap();
        let b = quantum_wronskian_residual(&p.reflected(), e).unwrap();
        assert!((a + b).norm() < 1e-12);
    }
}

#[test]
fn reflection_is_an_involution() {
    let p = problem(2.0, 0.3);
    let back = p.reflected().reflected();
    assert!((back.l - p.l).abs() < 1e-15);
    let e = c(1.5, 0.5);
    assert!(rel(spectral_d(&back, e).unwrap(), spectral_d(&p, e).unwrap()) < 1e-12);
}

#[test]
fn symmetry_relations_hold() {
    let p = problem(2.0, 0.3);
    for e in [c(1.0, 0.0), c(2.0, 1.0), c(-1.0, -2.0)] {
        let r = symmetry_checks(&p, e).unwrap();
        assert!(r.psi_wronskian < 1e-8);
        assert!(r.d_consistency < 1e-8);
        assert!(r.c_relation < 1e-6);
        assert!(r.psi_minus_expansion < 1e-6);
        assert!(r.omega_action < 1e-6);
        assert!(r.u.norm().is_finite());
    }
}

#[test]
fn eigenvalues_match_the_discretized_operator() {
    for (alpha, l) in [(2.0, 0.3), (2.0, 0.0), (3.0, 0.1)] {
        let p = problem(alpha, l);
        let shot = eigenvalues(&p, 10).unwrap();
        let fd = fd_eigenvalues(&p, 10, 1000, 6.0).unwrap();
        for (a, b) in shot.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-5, "({alpha}, {l}): {a} vs {b}");
        }
        assert!(shot.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn eigenvalues_are_sign_changes_of_d() {
    let p = problem(2.0, 0.3);
    let levels = eigenvalues(&p, 5).unwrap();
    for &e in &levels {
        let step = 1e-6 * e;
        let lo = spectral_d(&p, c(e - step, 0.0)).unwrap().re;
        let hi = spectral_d(&p, c(e + step, 0.0)).unwrap().re;
        assert!(lo * hi < 0.0, "no sign change at {e}");
    }
    assert!((levels[0] - 4.741087798887).abs() < 1e-8);
}

#[test]
fn node_count_matches_level_index() {
    let p = problem(2.0, 0.3);
    let levels = eigenvalues(&p, 4).unwrap();
    for k in 0..4 {
        let between = if k == 0 { levels[0] * 0.5 } else { 0.5 * (levels[k - 1] + levels[k]) };
        assert_eq!(psi_nodes(&p, between, p.x_far_for(c(between, 0.0))).unwrap(), k);
    }
}

#[test]
fn hadamard_product_with_a_tail_estimate() {
    let p = problem(2.0, 0.3);
    let levels = eigenvalues(&p, 40).unwrap();
    // E_n^g is asymptotically linear in n; fit the last ten levels for the tail
    let g = (p.alpha + 1.0) / (2.0 * p.alpha);
    let pts: Vec<(f64, f64)> = (30..40).map(|k| ((k + 1) as f64, levels[k].powf(g))).collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, q| (a.0 + q.0, a.1 + q.1));
    let sxx: f64 = pts.iter().map(|q| q.0 * q.0).sum();
    let sxy: f64 = pts.iter().map(|q| q.0 * q.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let offset = (sy - slope * sx) / n;
    let cut = 100_000;
    let d0 = spectral_d(&p, c(0.0, 0.0)).unwrap();
    let half = levels[0] / 2.0;
    for e in [c(half, 0.0), c(-half, 0.0), c(0.0, half), c(0.7 * half, 0.7 * half)] {
        let mut log = levels.iter().fold(c(0.0, 0.0), |a, &en| a + (1.0 - e / en).ln());
        for k in 41..cut {
            log += (1.0 - e / (slope * k as f64 + offset).powf(1.0 / g)).ln();
        }
        let kk = cut as f64 - 0.5;
        log -= e * (slope * kk + offset).powf(1.0 - 1.0 / g) / (slope * (1.0 / g - 1.0));
        let ratio = spectral_d(&p, e).unwrap() / d0;
        assert!((log.exp() - ratio).norm() < 1e-3, "{e}");
    }
}

#[test]
fn eigenvalue_count_is_bounded() {
    let p = problem(2.0, 0.3);
    assert!(eigenvalues(&p, 0).is_err());
    assert!(eigenvalues(&p, MAX_LEVELS + 1).is_err());
    assert!(fd_eigenvalues(&p, 10, 10, 6.0).is_err());
    assert!(fd_eigenvalues(&p.reflected(), 3, 100, 6.0).is_err());
}

#[test]
fn tables_have_the_documented_columns() {
    let p = problem(2.0, 0.3);
    let t = spectrum_table(&p, &[4.741087798887]).unwrap().render();
    assert!(t.lines().any(|l| l == "n,E,re_D,im_D"));
    let t = determinant_table(&p, &[c(0.0, 0.0), c(1.0, 1.0)]).unwrap().render();
    assert!(t.lines().any(|l| l == "re_E,im_E,re_D,im_D"));
    assert_eq!(t.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn rho_at_kappa_one_third() {
    // 6^{4/3} Γ(2/3)²
    assert!((problem(2.0, 0.0).rho() - 19.991619803752074).abs() < 1e-12);
}

#[test]
fn blz_a_specializations() {
    let p = problem(2.0, 0.0);
    let pp = 0.2;
    let l = 2.0 * pp / p.kappa() - 0.5;
    let a0 = blz_a(&p, c(0.0, 0.0), pp).unwrap();
    assert!(rel(a0, spectral_d(&problem(2.0, l), c(0.0, 0.0)).unwrap()) < 1e-14);
    let lam = c(0.4, 0.3);
    assert!(rel(blz_a(&p, lam, pp).unwrap(), blz_a(&p, -lam, pp).unwrap()) < 1e-12);
}

#[test]
fn alpha_at_most_one_is_out_of_validity() {
    assert!(matches!(SpectralProblem::new(1.0, 0.3), Err(LabError::OutOfValidity(_))));
    assert!(matches!(bethe_solve(0.5, 0.3, 1, &[c(1.0, 0.0)]), Err(LabError::OutOfValidity(_))));
}

#[test]
fn resonant_exponents_are_rejected() {
    // l = -3/2 makes x^{l+3} collide with the second Frobenius exponent
    let p = problem(2.0, 0.5).reflected();
    assert!(matches!(shoot_psi(&p, c(1.0, 0.0), 1.0), Err(LabError::Parameter(_))));
}

#[test]
fn single_precision_spectrum() {
    let p = SpectralProblem::new(2.0f32, 0.3).unwrap();
    let zero = num_complex::Complex32::new(0.0, 0.0);
    let d = spectral_d(&p, zero).unwrap() * spectral_d(&p.reflected(), zero).unwrap();
    assert!((d - 1.0).norm() < 1e-3);
}

#[test]
fn bethe_single_root_closed_form() {
    for (alpha, l) in [(2.0, 0.3), (3.0, 0.1), (1.5, -0.2)] {
        let z1 = ((2.0 * l + 1.0f64).powi(2) - 4.0 * alpha * alpha) / (4.0 * alpha);
        for init in [c(1.0, 0.0), c(-7.0, 2.0), c(0.1, -0.3)] {
            let r = bethe_solve(alpha, l, 1, &[init]).unwrap();
            assert!(r.residual <= 1e-10);
            assert!((r.z[0] - z1).norm() <= 1e-10);
        }
    }
}

#[test]
fn bethe_two_roots() {
    let init = default_bethe_init(2.0, 0.3, 2);
    let r = bethe_solve(2.0, 0.3, 2, &init).unwrap();
    assert!(r.residual <= 1e-10);
    assert!((r.z[0] - r.z[1]).norm() > 1.0);
    assert!((r.z[0] - c(-12.394984742933351, 0.0)).norm() < 1e-9);
    assert!((r.z[1] - c(2.0202706906527714, 0.0)).norm() < 1e-9);
    let swapped = bethe_solve(2.0, 0.3, 2, &[init[1], init[0]]).unwrap();
    for (a, b) in r.z.iter().zip(&swapped.z) {
        assert!((a - b).norm() < 1e-10);
    }
    let res = bethe_residual(2.0, 0.3, &r.z);
    assert!(res.iter().all(|v| v.norm() <= 1e-10));
}

#[test]
fn bethe_rejects_bad_initial_data() {
    assert!(matches!(bethe_solve(2.0, 0.3, 2, &[c(1.0, 0.0)]), Err(LabError::Parameter(_))));
    assert!(matches!(
        bethe_solve(2.0, 0.3, 2, &[c(1.0, 0.0), c(1.0, 0.0)]),
        Err(LabError::Parameter(_))
    ));
    assert!(bethe_solve(2.0, 0.3, 0, &[]).is_err());
}

#[test]
fn bethe_roots_json_round_trip() {
    let r = bethe_solve(2.0f64, 0.3, 2, &default_bethe_init(2.0, 0.3, 2)).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    let back: BetheRoots<f64> = serde_json::from_str(&s).unwrap();
    assert_eq!(r, back);
}

#[test]
fn empty_root_set_gives_the_ground_state_potential() {
    let roots = BetheRoots {
        alpha: 2.0,
        l: 0.3,
        z: vec![],
        residual: 0.0,
    };
    for x in [0.3f64, 1.0, 2.5] {
        let v = excited_potential(&roots, x).unwrap();
        assert!((v - c(x.powi(4) + 0.3 * 1.3 / (x * x), 0.0)).norm() < 1e-14 * v.norm());
    }
}

#[test]
fn excited_potential_is_singular_at_positive_roots() {
    let r = bethe_solve(2.0f64, 0.3, 2, &default_bethe_init(2.0, 0.3, 2)).unwrap();
    let x = r.z[1].re.powf(1.0 / 6.0);
    assert!(matches!(excited_potential(&r, x), Err(LabError::PoleEvaluation(_))));
    assert!(excited_potential(&r, x * 1.01).unwrap().norm().is_finite());
}

#[test]
fn change_of_variables_maps_onto_the_transformed_equation() {
    let xs: Vec<f64> = (0..50).map(|i| 0.05 + 0.06 * i as f64).collect();
    for n in [1, 2] {
        let r = bethe_solve(2.0, 0.3, n, &default_bethe_init(2.0, 0.3, n)).unwrap();
        for e in [c(2.5, 0.0), c(-1.0, 3.0)] {
            let cov = change_of_variables_residual(&r, e, &xs).unwrap();
            assert!(cov.first_order <= 1e-8 && cov.potential <= 1e-8, "{cov:?}");
        }
    }
}

#[test]
fn transformed_potential_has_double_poles_of_weight_two() {
    let r = bethe_solve(2.0f64, 0.3, 2, &default_bethe_init(2.0, 0.3, 2)).unwrap();
    for &zk in &r.z {
        let eps = 1e-5;
        let coeff = (0..4)
            .map(|j| {
                let d = C::from_polar(eps, 0.4 + j as f64 * std::f64::consts::FRAC_PI_2);
                transformed_potential(&r, c(1.0, 0.0), zk + d).unwrap() * d * d
            })
            .fold(c(0.0, 0.0), |a, v| a + v)
            / 4.0;
        assert!((coeff - 2.0).norm() < 1e-8, "{zk}: {coeff}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bethe_single_root_for_random_parameters(alpha in 1.1f64..4.0, l in -0.4f64..2.0, re in -5.0f64..5.0) {
        let z1 = ((2.0 * l + 1.0).powi(2) - 4.0 * alpha * alpha) / (4.0 * alpha);
        let r = bethe_solve(alpha, l, 1, &[c(re, 0.5)]).unwrap();
        prop_assert!((r.z[0] - z1).norm() <= 1e-10 * (1.0 + z1.abs()));
    }

    #[test]
    fn determinant_is_real_analytic(alpha in 1.2f64..3.5, l in -0.3f64..1.0, re in -3.0f64..6.0, im in 0.1f64..3.0) {
        let p = problem(alpha, l);
        let d = spectral_d(&p, c(re, im)).unwrap();
        let dc = spectral_d(&p, c(re, -im)).unwrap();
        prop_assert!(rel(dc, d.conj()) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn quantum_wronskian_for_random_data(alpha in 1.3f64..3.5, l in -0.3f64..0.9, r in 0.0f64..12.0, th in 0.0f64..6.28) {
        let p = problem(alpha, l);
        let res = quantum_wronskian_residual(&p, C::from_polar(r, th)).unwrap();
        prop_assert!(res.norm() <= 1e-6);
    }
}
