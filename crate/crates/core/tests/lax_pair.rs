use num_complex::Complex64 as C;
use pblab::lax::*;
use pblab::poles::*;
use pblab::LabError;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn probe_points() -> Vec<C> {
    (0..20)
        .map(|i| {
            let a = i as f64 * 0.77;
            c(2.2 * a.cos() - 0.3, 1.8 * (1.3 * a).sin() - 0.6)
        })
        .collect()
}

/// Twelve points on a circle of radius `r` around each pole of `s`.
fn rings(s: &PoleState<f64>, r: f64) -> Vec<C> {
    s.q.iter()
        .flat_map(|&q| (0..12).map(move |j| q + C::from_polar(r, 0.1 + j as f64 * std::f64::consts::PI / 6.0)))
        .collect()
}

fn y_of(s: &PoleState<f64>, x: C) -> C {
    s.q.iter().fold(c(1.0, 0.0), |a, &q| a * (x - q))
}

fn horizontal(y: f64, n: usize) -> Vec<C> {
    (0..=n).map(|i| c(-2.0 + 4.0 * i as f64 / n as f64, y)).collect()
}

const INIT: [C; 2] = [C::new(1.0, 0.0), C::new(0.3, 0.1)];

#[test]
fn traces_and_upper_entries() {
    for kappa in 1..=4 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        for x in probe_points() {
            let l = eval_l(&s, x).unwrap();
            let b = eval_b(&s, x).unwrap();
            let scale = 1.0 + x.norm().powi(2);
            assert!((l.trace() - (x * x - s.t)).norm() < 1e-12 * scale);
            let tr_b = -x + (s.u + s.t * s.t / 2.0) / kappa as f64;
            assert!((b.trace() - tr_b).norm() < 1e-12 * scale);
            assert!((l.a12 - y_of(&s, x)).norm() < 1e-12 * y_of(&s, x).norm().max(1.0));
        }
    }
}

#[test]
fn single_pole_entries_match_closed_forms() {
    let s = PoleState::on_shell(1, 0.4, vec![c(0.3, 0.9)], c(0.2, -0.1), None).unwrap();
    let (q, qd, u, t) = (s.q[0], s.qdot[0], s.u, s.t);
    // Q'' = -2Q(t - Q²) - 1 for κ = 1
    let qdd = -2.0 * q * (t - q * q) - 1.0;
    for x in probe_points() {
        let l = eval_l(&s, x).unwrap();
        let b = eval_b(&s, x).unwrap();
        assert!((l.a11 - l.a22 + qd).norm() < 1e-12);
        assert!((b.a11 - b.a22).norm() < 1e-12);
        let f_v = -x.powi(4) / 2.0 + t * x * x + x + u;
        let l21 = -(qd * qd / 2.0 + f_v) / (2.0 * (x - q));
        assert!((l.a21 - l21).norm() < 1e-12 * l21.norm().max(1.0));
        let b21 = -(2.0 * l21 - qdd) / (2.0 * (x - q));
        assert!((b.a21 - b21).norm() < 1e-12 * b21.norm().max(1.0));
        assert!((b.a12 + 1.0).norm() < 1e-14);
    }
}

#[test]
fn b_plus_agrees_between_modules() {
    for kappa in 1..=4 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        for x in probe_points() {
            let l = eval_l(&s, x).unwrap();
            let b = eval_b(&s, x).unwrap();
            let bp = eval_fields(&s, x).unwrap().b_plus;
            assert!((b.a12 / l.a12 - bp).norm() < 1e-12, "kappa {kappa} x {x}");
        }
    }
}

#[test]
fn evaluation_at_a_pole_is_an_error() {
    let s = PoleState::<f64>::demo(2).unwrap();
    assert!(matches!(eval_l(&s, s.q[1]), Err(LabError::PoleEvaluation(_))));
    assert!(matches!(eval_b(&s, s.q[0]), Err(LabError::PoleEvaluation(_))));
}

#[test]
fn zero_curvature_on_shell() {
    for kappa in 1..=4 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        let traj = integrate_poles(&s, 0.1, 1e-12).unwrap();
        let grid = rings(&s, 0.25);
        let analytic = zero_curvature_residual_with(&traj, &grid, DtMode::Analytic).unwrap();
        assert!(analytic <= 1e-6, "kappa {kappa}: {analytic:e}");
        if kappa <= 3 {
            let diff = zero_curvature_residual(&traj, &grid, 1e-3).unwrap();
            assert!(diff <= 1e-6, "kappa {kappa}: {diff:e}");
        }
    }
}

#[test]
fn zero_curvature_fails_linearly_off_shell() {
    for kappa in 1..=3 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        let grid = rings(&s, 0.25);
        let res = |d: f64| {
            let mut off = s.clone();
            off.qdot[0] += c(d, 0.0);
            let traj = integrate_poles(&off, 0.1, 1e-12).unwrap();
            zero_curvature_residual_with(&traj, &grid, DtMode::Analytic).unwrap()
        };
        let (r1, r2) = (res(1e-3), res(2e-3));
        assert!(r1 >= 1e-2, "kappa {kappa}: {r1:e}");
        assert!((r2 / r1 - 2.0).abs() < 0.02, "kappa {kappa}: ratio {}", r2 / r1);
    }
}

#[test]
fn reconstruction_is_linear() {
    let s = PoleState::<f64>::demo(2).unwrap();
    let path = horizontal(-0.5, 20);
    let a = reconstruct_f(&s, &path, INIT).unwrap();
    let b = reconstruct_f(&s, &path, [INIT[0] * 2.0, INIT[1] * 2.0]).unwrap();
    let other = [c(0.0, 1.0), c(-0.5, 0.2)];
    let o = reconstruct_f(&s, &path, other).unwrap();
    let sum = reconstruct_f(&s, &path, [INIT[0] + other[0], INIT[1] + other[1]]).unwrap();
    for i in 0..path.len() {
        for j in 0..2 {
            let scale = a.values[i][j].norm().max(1.0);
            assert!((b.values[i][j] - 2.0 * a.values[i][j]).norm() < 1e-10 * scale);
            assert!((sum.values[i][j] - a.values[i][j] - o.values[i][j]).norm() < 1e-9 * scale);
        }
    }
}

#[test]
fn reconstructed_f_solves_the_separated_equations() {
    for kappa in 1..=3 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        let path = horizontal(-0.6, 40);
        let sol = reconstruct_f(&s, &path, INIT).unwrap();
        assert!(sol.ode_residual().unwrap() <= 1e-6);
        let sep = separation_check(&s, &path, INIT, 1e-3).unwrap();
        assert!(sep.ode <= 1e-6, "kappa {kappa}: {sep:?}");
        assert!(sep.first_order <= 1e-4, "kappa {kappa}: {sep:?}");
        assert!(sep.qpii <= 1e-4, "kappa {kappa}: {sep:?}");
    }
}

#[test]
fn separation_check_detects_a_wrong_time_evolution() {
    // evolving the pole data off-shell breaks the compatibility of L and B
    let s = PoleState::<f64>::demo(1).unwrap();
    let mut off = s.clone();
    off.qdot[0] += c(0.05, 0.0);
    let sep = separation_check(&off, &horizontal(-0.6, 20), INIT, 1e-3).unwrap();
    assert!(sep.ode <= 1e-6);
    assert!(sep.qpii > 1e-3, "{sep:?}");
}

#[test]
fn schrodinger_gauge_residual() {
    for kappa in 1..=3 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        let sol = reconstruct_f(&s, &horizontal(-0.6, 40), INIT).unwrap();
        let g = schrodinger_gauge(&sol).unwrap();
        assert_eq!(g.psi.len(), sol.values.len());
        assert!(g.residual <= 1e-5, "kappa {kappa}: {:e}", g.residual);
    }
}

#[test]
fn schrodinger_gauge_rejects_an_untrackable_branch() {
    let s = PoleState::<f64>::demo(1).unwrap();
    // Y = x - i changes sign between the two samples
    let sol = LinSolution {
        x_grid: vec![c(-1.0, 1.0), c(1.0, 1.0)],
        values: vec![INIT, INIT],
        t: s.t,
        state: s,
    };
    assert!(matches!(schrodinger_gauge(&sol), Err(LabError::Gauge(_))));
}

#[test]
fn poles_are_apparent_singularities() {
    for kappa in 1..=4 {
        let s = PoleState::<f64>::demo(kappa).unwrap();
        for k in 0..kappa {
            let m = monodromy_around_pole(&s, k, 0.1).unwrap();
            assert!(m.identity_error < 1e-8, "kappa {kappa} pole {k}: {:e}", m.identity_error);
            assert!((m.psi_factor + 1.0).norm() < 1e-8);
        }
    }
}

#[test]
fn off_shell_poles_carry_monodromy() {
    let s = PoleState::<f64>::demo(2).unwrap();
    let mut off = s.clone();
    off.qdot[0] += c(1e-2, 0.0);
    let m = monodromy_around_pole(&off, 0, 0.1).unwrap();
    assert!(m.identity_error > 1e-3);
}

#[test]
fn monodromy_radius_is_checked() {
    let s = PoleState::<f64>::demo(2).unwrap();
    let d = (s.q[0] - s.q[1]).norm();
    assert!(monodromy_around_pole(&s, 0, 0.6 * d).is_err());
    assert!(monodromy_around_pole(&s, 2, 0.1).is_err());
    assert!(monodromy_around_pole(&s, 0, -0.1).is_err());
}

#[test]
fn detour_keeps_clear_of_poles() {
    let s = PoleState::<f64>::demo(3).unwrap();
    let (from, to) = (c(-2.0, 1.0), c(2.0, 1.2));
    let clearance = 0.2;
    let path = detour_path(&s, from, to, clearance);
    assert_eq!(path[0], from);
    assert_eq!(*path.last().unwrap(), to);
    assert!(path.len() > 2);
    for w in path.windows(2) {
        for &q in &s.q {
            let d = w[1] - w[0];
            let u = (((q - w[0]) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
            assert!((q - (w[0] + d * u)).norm() >= clearance - 1e-12);
        }
    }
    let sol = reconstruct_f(&s, &path, INIT).unwrap();
    assert!(sol.ode_residual().unwrap() <= 1e-6);
    // a straight path needs no waypoints
    assert_eq!(detour_path(&s, c(-2.0, -1.0), c(2.0, -1.0), clearance).len(), 2);
}

#[test]
fn straight_path_through_a_pole_fails() {
    let s = PoleState::<f64>::demo(1).unwrap();
    let err = reconstruct_f(&s, &[c(0.0, 0.0), c(0.0, 2.0)], INIT).unwrap_err();
    assert!(matches!(err, LabError::PoleEvaluation(_) | LabError::Integration { .. }), "{err:?}");
}

#[test]
fn reconstruction_rejects_bad_input() {
    let s = PoleState::<f64>::demo(1).unwrap();
    assert!(reconstruct_f(&s, &[], INIT).is_err());
    assert!(reconstruct_f(&s, &horizontal(-1.0, 3), [c(0.0, 0.0); 2]).is_err());
    assert!(separation_check(&s, &horizontal(-1.0, 3), INIT, 0.0).is_err());
}

#[test]
fn solution_json_round_trip() {
    let s = PoleState::<f64>::demo(2).unwrap();
    let sol = reconstruct_f(&s, &horizontal(-0.5, 4), INIT).unwrap();
    let text = serde_json::to_string(&sol).unwrap();
    let back: LinSolution<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, sol);
    let m = serde_json::to_value(eval_l(&s, c(0.5, -0.5)).unwrap()).unwrap();
    assert!(m["a21"].is_array());
}

#[test]
fn single_precision_lax() {
    let s = PoleState::<f32>::demo(2).unwrap();
    let x = num_complex::Complex32::new(0.4, -0.7);
    let l = eval_l(&s, x).unwrap();
    assert!((l.trace() - (x * x - s.t)).norm() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zero_curvature_holds_for_random_on_shell_data(
        re in prop::collection::vec(-1.0f64..1.0, 2),
        im in prop::collection::vec(0.3f64..1.2, 2),
        u_re in -1.0f64..1.0,
        t in -1.0f64..1.0,
    ) {
        let q = vec![c(re[0] - 0.8, im[0]), c(re[1] + 0.8, im[1])];
        let s = PoleState::on_shell(2, t, q, c(u_re, 0.0), None);
        prop_assume!(s.is_ok());
        let s = s.unwrap();
        prop_assume!(s.qdot.iter().all(|v| v.norm() < 10.0));
        let traj = integrate_poles(&s, t + 0.02, 1e-12);
        prop_assume!(traj.is_ok());
        let r = zero_curvature_residual_with(&traj.unwrap(), &rings(&s, 0.3), DtMode::Analytic);
        prop_assume!(r.is_ok());
        prop_assert!(r.unwrap() <= 1e-6);
    }

    #[test]
    fn traces_hold_for_arbitrary_states(
        qre in -2.0f64..2.0, qim in -2.0f64..2.0,
        xre in -3.0f64..3.0, xim in -3.0f64..3.0,
        vre in -2.0f64..2.0, t in -3.0f64..3.0,
    ) {
        let q = vec![c(qre, qim), c(qre + 1.0, qim - 0.5), c(qre - 0.7, qim + 0.9)];
        let s = PoleState::new(3, t, q, vec![c(vre, 0.1); 3], c(0.3, vre)).unwrap();
        let x = c(xre, xim);
        prop_assume!(s.q.iter().all(|&q| (x - q).norm() > 0.05));
        let l = eval_l(&s, x).unwrap();
        let b = eval_b(&s, x).unwrap();
        let scale = 1.0 + x.norm_sqr();
        prop_assert!((l.trace() - (x * x - t)).norm() < 1e-11 * scale);
        prop_assert!((b.trace() - (-x + (s.u + t * t / 2.0) / 3.0)).norm() < 1e-11 * scale);
        let bp = eval_fields(&s, x).unwrap().b_plus;
        prop_assert!((b.a12 / l.a12 - bp).norm() < 1e-12 * (1.0 + bp.norm()));
    }
}
