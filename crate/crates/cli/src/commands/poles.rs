use clap::{Args, ValueEnum};
use pblab::io::{fmt_float, CsvTable};
use pblab::lax::{
    eval_b, eval_l, monodromy_around_pole, reconstruct_f, schrodinger_gauge, separation_check,
    zero_curvature_residual_with,
};
use pblab::poles::{
    eval_fields, first_integrals, governing_residual_with, hirota_residual_with, integrate_poles, DtMode,
    PoleState, Trajectory,
};
use pblab::{Cx, Scalar};
use serde::{Deserialize, Serialize};

use super::{cx, f, finite, lit, pair, require, tol};
use crate::config::Failure;
use crate::run::{Artifact, Command, Output};

/// Initial pole data: the demo configuration, or positions `q` with `U = u`
/// at time `t0` and velocities solved onto the constraint surface.
#[derive(Debug, Clone, Default, PartialEq)]
struct Initial {
    q: Option<Vec<[f64; 2]>>,
    u: [f64; 2],
    t0: f64,
}

impl Initial {
    fn check(&self, kappa: usize) -> Result<(), Failure> {
        require(kappa >= 1, "kappa must be a positive integer")?;
        require(finite(self.t0) && self.u.iter().all(|v| finite(*v)), "t0 and u must be finite")?;
        if let Some(q) = &self.q {
            require(q.len() == kappa, "q must list kappa pole positions")?;
            require(q.iter().flatten().all(|v| finite(*v)), "q must be finite")?;
        } else {
            require(self.t0 == 0.0 && self.u == [0.0, 0.0], "t0 and u apply only with explicit q")?;
        }
        Ok(())
    }

    fn state<T: Scalar>(&self, kappa: usize) -> pblab::Result<PoleState<T>> {
        match &self.q {
            None => PoleState::demo(kappa),
            Some(q) => PoleState::on_shell(kappa, lit(self.t0), q.iter().map(|&z| cx(z)).collect(), cx(self.u), None),
        }
    }
}

fn thin<T: Scalar>(traj: &Trajectory<T>, every: usize) -> Trajectory<T> {
    Trajectory {
        states: traj.states.iter().step_by(every).cloned().collect(),
        ..traj.clone()
    }
}

fn max_drift<T: Scalar>(traj: &Trajectory<T>) -> pblab::Result<f64> {
    let i0 = first_integrals(&traj.states[0])?;
    let mut worst = 0.0f64;
    for s in &traj.states {
        for (a, b) in first_integrals(s)?.iter().zip(&i0) {
            worst = worst.max(f((a - b).norm()));
        }
    }
    Ok(worst)
}

fn min_separation<T: Scalar>(traj: &Trajectory<T>) -> f64 {
    traj.states.iter().map(|s| f(s.min_separation())).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolesConfig {
    pub kappa: usize,
    pub t_final: f64,
    pub tol: f64,
    pub q: Option<Vec<[f64; 2]>>,
    pub u: [f64; 2],
    pub t0: f64,
}

impl Default for PolesConfig {
    fn default() -> Self {
        PolesConfig {
            kappa: 2,
            t_final: 3.0,
            tol: 1e-11,
            q: None,
            u: [0.0, 0.0],
            t0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct PolesArgs {
    /// Number of poles.
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
}

impl PolesConfig {
    fn initial(&self) -> Initial {
        Initial {
            q: self.q.clone(),
            u: self.u,
            t0: self.t0,
        }
    }
}

fn check_run(kappa: usize, init: &Initial, t_final: f64, tol: f64) -> Result<(), Failure> {
    init.check(kappa)?;
    require(finite(t_final) && t_final > init.t0, "t_final must exceed the initial time")?;
    require(tol > 0.0 && finite(tol), "tol must be positive")
}

impl Command for PolesConfig {
    const NAME: &'static str = "poles-run";

    fn resolve(&mut self) -> Result<(), Failure> {
        check_run(self.kappa, &self.initial(), self.t_final, self.tol)
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let s = self.initial().state::<T>(self.kappa)?;
        let traj = integrate_poles(&s, lit(self.t_final), tol(self.tol))?;
        let drift = max_drift(&traj)?;
        let sep = min_separation(&traj);
        let summary = serde_json::json!({
            "kappa": self.kappa,
            "states": traj.states.len(),
            "accepted_steps": traj.stats.accepted,
            "rejected_steps": traj.stats.rejected,
            "first_integral_drift": drift,
            "min_separation": sep,
            "initial_q": s.q.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "initial_qdot": s.qdot.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
        });
        Ok(Output {
            artifacts: vec![
                Artifact::Csv("trajectory.csv", traj.to_csv()),
                Artifact::Json("poles_summary.json", summary),
            ],
            report: format!(
                "{} states; first-integral drift {drift:.3e}; min separation {sep:.3}",
                traj.states.len()
            ),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DtKind {
    /// Time derivatives from the equations of motion.
    #[default]
    Analytic,
    /// Fourth-order differences of re-integrated states.
    Differenced,
}

fn mode<T: Scalar>(dt: DtKind, step: f64) -> DtMode<T> {
    match dt {
        DtKind::Analytic => DtMode::Analytic,
        DtKind::Differenced => DtMode::Differenced { step: lit(step) },
    }
}

/// Parameters shared by the identity checks along a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoleCheck {
    pub kappa: usize,
    pub t_final: f64,
    pub tol: f64,
    /// Check every `thin`-th accepted state.
    pub thin: usize,
    pub points: Vec<[f64; 2]>,
    pub dt: DtKind,
    pub fd_step: f64,
    pub q: Option<Vec<[f64; 2]>>,
    pub u: [f64; 2],
    pub t0: f64,
}

impl Default for PoleCheck {
    fn default() -> Self {
        PoleCheck {
            kappa: 2,
            t_final: 3.0,
            tol: 1e-11,
            thin: 8,
            points: vec![[-1.5, 0.3], [0.7, -0.4], [2.0, 0.1], [0.2, -1.2], [-0.4, 2.5]],
            dt: DtKind::Analytic,
            fd_step: 1e-3,
            q: None,
            u: [0.0, 0.0],
            t0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct PoleCheckArgs {
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long, value_enum)]
    pub dt: Option<DtKind>,
    #[arg(long)]
    pub fd_step: Option<f64>,
}

impl PoleCheck {
    fn initial(&self) -> Initial {
        Initial {
            q: self.q.clone(),
            u: self.u,
            t0: self.t0,
        }
    }

    fn check(&self) -> Result<(), Failure> {
        check_run(self.kappa, &self.initial(), self.t_final, self.tol)?;
        require(self.thin >= 1, "thin must be at least 1")?;
        require(
            !self.points.is_empty() && self.points.iter().flatten().all(|v| finite(*v)),
            "points must be a non-empty list of finite [re, im]",
        )?;
        require(self.fd_step > 0.0 && finite(self.fd_step), "fd_step must be positive")
    }

    fn trajectory<T: Scalar>(&self) -> pblab::Result<(Trajectory<T>, Vec<Cx<T>>)> {
        let s = self.initial().state::<T>(self.kappa)?;
        let traj = integrate_poles(&s, lit(self.t_final), tol(self.tol))?;
        Ok((thin(&traj, self.thin), self.points.iter().map(|&z| cx(z)).collect()))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoverningConfig(pub PoleCheck);

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HirotaConfig(pub PoleCheck);

impl Command for GoverningConfig {
    const NAME: &'static str = "governing-check";

    fn resolve(&mut self) -> Result<(), Failure> {
        self.0.check()
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let (traj, grid) = self.0.trajectory::<T>()?;
        let r = governing_residual_with(&traj, &grid, mode(self.0.dt, self.0.fd_step))?;
        let max = f(r.max());
        let result = serde_json::json!({
            "p_equation": f(r.p_equation),
            "b_equation": f(r.b_equation),
            "v_transport": f(r.v_transport),
            "p_transport": f(r.p_transport),
            "max": max,
            "states_checked": traj.states.len(),
            "points": grid.len(),
        });
        Ok(Output {
            artifacts: vec![Artifact::Json("governing.json", result)],
            report: format!("governing residual {max:.3e} over {} states", traj.states.len()),
        })
    }
}

impl Command for HirotaConfig {
    const NAME: &'static str = "hirota-check";

    fn resolve(&mut self) -> Result<(), Failure> {
        self.0.check()
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let (traj, grid) = self.0.trajectory::<T>()?;
        let r = f(hirota_residual_with(&traj, &grid, mode(self.0.dt, self.0.fd_step))?);
        let result = serde_json::json!({
            "residual": r,
            "states_checked": traj.states.len(),
            "points": grid.len(),
        });
        Ok(Output {
            artifacts: vec![Artifact::Json("hirota.json", result)],
            report: format!("Hirota residual {r:.3e} over {} states", traj.states.len()),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaxConfig {
    pub kappa: usize,
    pub t_final: f64,
    pub tol: f64,
    /// Probe points lie on circles of this radius around the initial poles.
    pub ring_radius: f64,
    pub ring_points: usize,
    pub dt: DtKind,
    pub fd_step: f64,
    /// Velocity perturbation of the first pole for the off-shell run.
    pub off_shell_delta: f64,
    pub q: Option<Vec<[f64; 2]>>,
    pub u: [f64; 2],
    pub t0: f64,
}

impl Default for LaxConfig {
    fn default() -> Self {
        LaxConfig {
            kappa: 2,
            t_final: 0.1,
            tol: 1e-12,
            ring_radius: 0.25,
            ring_points: 12,
            dt: DtKind::Analytic,
            fd_step: 1e-3,
            off_shell_delta: 1e-3,
            q: None,
            u: [0.0, 0.0],
            t0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct LaxArgs {
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub ring_radius: Option<f64>,
    #[arg(long, value_enum)]
    pub dt: Option<DtKind>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub off_shell_delta: Option<f64>,
}

impl LaxConfig {
    fn initial(&self) -> Initial {
        Initial {
            q: self.q.clone(),
            u: self.u,
            t0: self.t0,
        }
    }

    fn rings<T: Scalar>(&self, s: &PoleState<T>) -> Vec<Cx<T>> {
        let n = self.ring_points;
        s.q.iter()
            .flat_map(|&q| {
                (0..n).map(move |j| {
                    let th = 0.1 + std::f64::consts::TAU * j as f64 / n as f64;
                    q + Cx::from_polar(lit(self.ring_radius), lit(th))
                })
            })
            .collect()
    }
}

impl Command for LaxConfig {
    const NAME: &'static str = "lax-check";

    fn resolve(&mut self) -> Result<(), Failure> {
        check_run(self.kappa, &self.initial(), self.t_final, self.tol)?;
        require(self.ring_radius > 0.0 && finite(self.ring_radius), "ring_radius must be positive")?;
        require(self.ring_points >= 1, "ring_points must be at least 1")?;
        require(self.fd_step > 0.0 && finite(self.fd_step), "fd_step must be positive")?;
        require(
            self.off_shell_delta > 0.0 && finite(self.off_shell_delta),
            "off_shell_delta must be positive",
        )
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let s = self.initial().state::<T>(self.kappa)?;
        let grid = self.rings(&s);
        let dt = mode::<T>(self.dt, self.fd_step);
        let (t_final, eps) = (lit::<T>(self.t_final), tol::<T>(self.tol));
        let curvature = |delta: f64| -> pblab::Result<f64> {
            let mut st = s.clone();
            st.qdot[0] += cx::<T>([delta, 0.0]);
            Ok(f(zero_curvature_residual_with(&integrate_poles(&st, t_final, eps)?, &grid, dt)?))
        };
        let on_shell = curvature(0.0)?;
        let off = curvature(self.off_shell_delta)?;
        let off2 = curvature(2.0 * self.off_shell_delta)?;
        let mut b_plus = 0.0f64;
        for &x in &grid {
            let (l, b) = (eval_l(&s, x)?, eval_b(&s, x)?);
            b_plus = b_plus.max(f((b.a12 / l.a12 - eval_fields(&s, x)?.b_plus).norm()));
        }
        let result = serde_json::json!({
            "kappa": self.kappa,
            "on_shell": on_shell,
            "off_shell": off,
            "off_shell_double": off2,
            "linearity_ratio": off2 / off,
            "b_plus_agreement": b_plus,
            "points": grid.len(),
        });
        Ok(Output {
            artifacts: vec![Artifact::Json("lax.json", result)],
            report: format!(
                "zero curvature on-shell {on_shell:.3e}, off-shell {off:.3e} (ratio {:.3}); b+ agreement {b_plus:.1e}",
                off2 / off
            ),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub kappa: usize,
    /// Straight contour from `x_from` to `x_to` in `segments` steps.
    pub x_from: [f64; 2],
    pub x_to: [f64; 2],
    pub segments: usize,
    /// `(F, G)` at `x_from`.
    pub init: [[f64; 2]; 2],
    /// Time step of the separation check.
    pub h: f64,
    /// Radius of the monodromy loops around each pole.
    pub loop_radius: f64,
    pub q: Option<Vec<[f64; 2]>>,
    pub u: [f64; 2],
    pub t0: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            kappa: 2,
            x_from: [-2.0, -0.6],
            x_to: [2.0, -0.6],
            segments: 40,
            init: [[1.0, 0.0], [0.3, 0.1]],
            h: 1e-3,
            loop_radius: 0.1,
            q: None,
            u: [0.0, 0.0],
            t0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub loop_radius: Option<f64>,
}

impl ReconstructConfig {
    fn initial(&self) -> Initial {
        Initial {
            q: self.q.clone(),
            u: self.u,
            t0: self.t0,
        }
    }

    fn path<T: Scalar>(&self) -> Vec<Cx<T>> {
        let (a, b) = (cx::<T>(self.x_from), cx::<T>(self.x_to));
        let n = self.segments;
        (0..=n).map(|i| a + (b - a) * lit::<T>(i as f64 / n as f64)).collect()
    }
}

impl Command for ReconstructConfig {
    const NAME: &'static str = "reconstruct";

    fn resolve(&mut self) -> Result<(), Failure> {
        self.initial().check(self.kappa)?;
        require(self.segments >= 1, "segments must be at least 1")?;
        require(
            self.x_from.iter().chain(&self.x_to).chain(self.init.iter().flatten()).all(|v| finite(*v)),
            "contour and initial data must be finite",
        )?;
        require(self.h > 0.0 && finite(self.h), "h must be positive")?;
        require(self.loop_radius > 0.0 && finite(self.loop_radius), "loop_radius must be positive")
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let s = self.initial().state::<T>(self.kappa)?;
        let path = self.path::<T>();
        let init = [cx::<T>(self.init[0]), cx::<T>(self.init[1])];
        let sol = reconstruct_f(&s, &path, init)?;
        let ode = f(sol.ode_residual()?);
        let sep = separation_check(&s, &path, init, lit(self.h))?;
        let gauge = schrodinger_gauge(&sol)?;
        let mut loops = Vec::with_capacity(s.kappa);
        for k in 0..s.kappa {
            let m = monodromy_around_pole(&s, k, lit(self.loop_radius))?;
            loops.push(serde_json::json!({
                "pole": k + 1,
                "identity_error": f(m.identity_error),
                "psi_factor": pair(m.psi_factor),
            }));
        }
        let mut table = CsvTable::new(["re_x", "im_x", "re_F", "im_F", "re_G", "im_G", "re_Psi", "im_Psi"])
            .with_meta("kappa", &self.kappa.to_string())
            .with_meta("t", &fmt_float(f(sol.t)));
        for ((x, v), psi) in sol.x_grid.iter().zip(&sol.values).zip(&gauge.psi) {
            table.push_floats(&[
                f(x.re),
                f(x.im),
                f(v[0].re),
                f(v[0].im),
                f(v[1].re),
                f(v[1].im),
                f(psi.re),
                f(psi.im),
            ]);
        }
        let summary = serde_json::json!({
            "ode_residual": ode,
            "separation": {"ode": f(sep.ode), "first_order": f(sep.first_order), "qpii": f(sep.qpii)},
            "schrodinger_residual": f(gauge.residual),
            "monodromy": loops,
        });
        Ok(Output {
            artifacts: vec![
                Artifact::Csv("reconstruct.csv", table),
                Artifact::Json("reconstruct_summary.json", summary),
            ],
            report: format!(
                "ODE {ode:.2e}; first-order {:.2e}; QPII {:.2e}; Schrodinger {:.2e}",
                f(sep.first_order),
                f(sep.qpii),
                f(gauge.residual)
            ),
        })
    }
}
