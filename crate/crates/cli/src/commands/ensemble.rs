use clap::{Args, ValueEnum};
use pblab::ensemble::{
    bpz_ode_residual, confluent_bpz_residual, sample_gbeta, virasoro_quadrature, virasoro_residual, AlphaChoice,
    EnsembleSpec, PotentialSpec, QuadOptions,
};
use pblab::io::{fmt_float, CsvTable};
use pblab::Scalar;
use serde::{Deserialize, Serialize};

use super::{cx, f, finite, lit, require};
use crate::config::{count, parse_count, parse_cx, Failure, Levels};
use crate::run::{Artifact, Command, Output};

fn gaussian<T: Scalar>(m: usize, beta: f64, scale: f64) -> pblab::Result<EnsembleSpec<T>> {
    EnsembleSpec::gaussian(m, lit(beta), lit(scale))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub m: usize,
    pub beta: f64,
    pub scale: f64,
    #[serde(with = "count")]
    pub samples: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            m: 4,
            beta: 2.0,
            scale: 1.0,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SampleArgs {
    /// Number of eigenvalues.
    #[arg(long = "M", alias = "m")]
    pub m: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Gaussian scale `a` in `V = x²/(2a²)`.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Number of draws (accepts `1e5`).
    #[arg(long, value_parser = parse_count)]
    pub samples: Option<usize>,
}

impl Command for SampleConfig {
    const NAME: &'static str = "sample";

    fn resolve(&mut self) -> Result<(), Failure> {
        gaussian::<f64>(self.m, self.beta, self.scale)?;
        require(self.samples >= 1, "samples must be at least 1")
    }

    fn run<T: Scalar>(&self, seed: u64) -> pblab::Result<Output> {
        let batch = sample_gbeta(&gaussian::<T>(self.m, self.beta, self.scale)?, self.samples, seed)?;
        let n = batch.len() as f64;
        let (mut p1, mut p2) = (0.0, 0.0);
        for x in &batch.configs {
            p1 += x.iter().map(|&v| f(v)).sum::<f64>() / n;
            p2 += x.iter().map(|&v| f(v) * f(v)).sum::<f64>() / n;
        }
        let summary = serde_json::json!({
            "n_samples": batch.len(),
            "mean_sum_x": p1,
            "mean_sum_x2": p2,
        });
        Ok(Output {
            artifacts: vec![
                Artifact::Csv("samples.csv", batch.to_csv()),
                Artifact::Json("summary.json", summary),
            ],
            report: format!("{} draws of M = {} at beta = {}; <sum x^2> = {p2:.6}", batch.len(), self.m, self.beta),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VirasoroConfig {
    pub m: usize,
    pub beta: f64,
    pub scale: f64,
    pub n: Levels,
    #[serde(with = "count")]
    pub samples: usize,
    /// Acceptance band in standard errors.
    pub sigma: f64,
    /// Quadrature cross-check; defaults to on for M <= 2.
    pub quadrature: Option<bool>,
    pub quad_abs_tol: f64,
    pub quad_rel_tol: f64,
    pub quad_max_depth: usize,
}

impl Default for VirasoroConfig {
    fn default() -> Self {
        VirasoroConfig {
            m: 8,
            beta: 3.7,
            scale: 1.0,
            n: Levels((-1..=4).collect()),
            samples: 100_000,
            sigma: 3.0,
            quadrature: None,
            quad_abs_tol: 1e-15,
            quad_rel_tol: 1e-13,
            quad_max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct VirasoroArgs {
    #[arg(long = "M", alias = "m")]
    pub m: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    /// Levels as `a..b` (inclusive) or `a,b,c`.
    #[arg(long, value_parser = Levels::parse, allow_hyphen_values = true)]
    pub n: Option<Levels>,
    #[arg(long, value_parser = parse_count)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Cross-check against adaptive quadrature (practical for M <= 3).
    #[arg(long)]
    pub quadrature: Option<bool>,
}

impl Command for VirasoroConfig {
    const NAME: &'static str = "virasoro-check";

    fn resolve(&mut self) -> Result<(), Failure> {
        gaussian::<f64>(self.m, self.beta, self.scale)?;
        require(self.samples >= 2, "samples must be at least 2")?;
        require(!self.n.0.is_empty() && self.n.0.iter().all(|&n| n >= -1), "levels n must be >= -1")?;
        require(self.sigma > 0.0, "sigma must be positive")?;
        require(
            self.quad_abs_tol > 0.0 && self.quad_rel_tol > 0.0 && self.quad_max_depth > 0,
            "quadrature tolerances must be positive",
        )?;
        self.quadrature.get_or_insert(self.m <= 2);
        Ok(())
    }

    fn run<T: Scalar>(&self, seed: u64) -> pblab::Result<Output> {
        let spec = gaussian::<T>(self.m, self.beta, self.scale)?;
        let batch = sample_gbeta(&spec, self.samples, seed)?;
        let opts = QuadOptions {
            abs_tol: lit(self.quad_abs_tol),
            rel_tol: lit(self.quad_rel_tol),
            max_depth: self.quad_max_depth,
        };
        let mut table = CsvTable::new([
            "n",
            "re_mean",
            "im_mean",
            "stderr",
            "z_score",
            "within",
            "quad_value",
            "quad_error",
        ])
        .with_meta("M", &self.m.to_string())
        .with_meta("beta", &fmt_float(self.beta))
        .with_meta("samples", &self.samples.to_string());
        let (mut worst, mut all_within, mut quad_worst) = (0.0f64, true, 0.0f64);
        for &n in &self.n.0 {
            let stat = virasoro_residual(&batch, n)?;
            let (mean, se) = (stat.mean.norm(), f(stat.stderr));
            let z = if mean == T::zero() { 0.0 } else { f(mean) / se };
            let within = stat.within(lit(self.sigma));
            worst = worst.max(z);
            all_within &= within;
            let (qv, qe) = if self.quadrature == Some(true) {
                let (v, e) = virasoro_quadrature(&spec, n, opts)?;
                quad_worst = quad_worst.max(f(v).abs());
                (fmt_float(f(v)), fmt_float(f(e)))
            } else {
                (String::new(), String::new())
            };
            table.push_row(vec![
                n.to_string(),
                fmt_float(f(stat.mean.re)),
                fmt_float(f(stat.mean.im)),
                fmt_float(se),
                fmt_float(z),
                within.to_string(),
                qv,
                qe,
            ]);
        }
        let mut report = format!(
            "max |mean|/stderr = {worst:.3}; all within {} sigma: {all_within}",
            self.sigma
        );
        if self.quadrature == Some(true) {
            report.push_str(&format!("; max |quadrature| = {quad_worst:.3e}"));
        }
        Ok(Output {
            artifacts: vec![Artifact::Csv("virasoro.csv", table)],
            report,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BpzKind {
    /// Fuchsian equation, multi-Penner weight.
    #[default]
    Penner,
    /// Confluent equation, polynomial couplings.
    Confluent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSelect {
    One,
    #[value(name = "minus_half_beta")]
    MinusHalfBeta,
    #[default]
    Both,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpzConfig {
    pub kind: BpzKind,
    pub alpha: AlphaSelect,
    pub m: Option<usize>,
    pub beta: Option<f64>,
    pub masses: Option<Vec<f64>>,
    pub positions: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub confinement: Option<f64>,
    pub couplings: Option<Vec<f64>>,
    /// Insertion point for `alpha = 1`.
    pub z_one: Option<[f64; 2]>,
    /// Insertion point for `alpha = -beta/2`.
    pub z_minus_half_beta: Option<[f64; 2]>,
    pub fd_step: Option<f64>,
    /// The decay check repeats the run at `fd_step / fd_ratio`.
    pub fd_ratio: Option<f64>,
    pub quad_abs_tol: Option<f64>,
    pub quad_rel_tol: Option<f64>,
    pub quad_max_depth: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct BpzArgs {
    #[arg(long, value_enum)]
    pub kind: Option<BpzKind>,
    #[arg(long, value_enum)]
    pub alpha: Option<AlphaSelect>,
    #[arg(long = "M", alias = "m")]
    pub m: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub masses: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub positions: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub confinement: Option<f64>,
    /// `t_0,t_1,...` with `V = -sum t_k x^k`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub couplings: Option<Vec<f64>>,
    /// `re,im`.
    #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
    pub z_one: Option<[f64; 2]>,
    /// `re,im`.
    #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
    pub z_minus_half_beta: Option<[f64; 2]>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub fd_ratio: Option<f64>,
}

impl BpzConfig {
    fn spec<T: Scalar>(&self) -> pblab::Result<EnsembleSpec<T>> {
        let v = |x: &Option<Vec<f64>>| x.iter().flatten().map(|&a| lit::<T>(a)).collect::<Vec<T>>();
        let potential = match self.kind {
            BpzKind::Penner => PotentialSpec::MultiPenner {
                masses: v(&self.masses),
                positions: v(&self.positions),
                c: lit(self.c.unwrap_or_default()),
                confinement: lit(self.confinement.unwrap_or_default()),
            },
            BpzKind::Confluent => PotentialSpec::polynomial(v(&self.couplings)),
        };
        EnsembleSpec::new(self.m.unwrap_or_default(), lit(self.beta.unwrap_or_default()), potential)
    }

    fn choices(&self) -> Vec<(AlphaChoice, [f64; 2])> {
        let one = (AlphaChoice::One, self.z_one.unwrap_or_default());
        let mhb = (AlphaChoice::MinusHalfBeta, self.z_minus_half_beta.unwrap_or_default());
        match self.alpha {
            AlphaSelect::One => vec![one],
            AlphaSelect::MinusHalfBeta => vec![mhb],
            AlphaSelect::Both => vec![one, mhb],
        }
    }
}

impl Command for BpzConfig {
    const NAME: &'static str = "bpz-check";

    fn resolve(&mut self) -> Result<(), Failure> {
        match self.kind {
            BpzKind::Penner => {
                require(self.couplings.is_none(), "couplings apply to kind = confluent")?;
                self.m.get_or_insert(2);
                self.beta.get_or_insert(3.0);
                self.masses.get_or_insert_with(|| vec![2.0, 2.5]);
                self.positions.get_or_insert_with(|| vec![0.0, 1.0]);
                self.c.get_or_insert(-1.0);
                self.confinement.get_or_insert(0.0);
                self.z_one.get_or_insert([0.4, 0.0]);
                self.z_minus_half_beta.get_or_insert([1.7, 0.0]);
                self.fd_step.get_or_insert(2e-2);
            }
            BpzKind::Confluent => {
                require(
                    self.masses.is_none() && self.positions.is_none() && self.c.is_none() && self.confinement.is_none(),
                    "masses, positions, c and confinement apply to kind = penner",
                )?;
                self.m.get_or_insert(2);
                self.beta.get_or_insert(4.0);
                self.couplings.get_or_insert_with(|| vec![0.0, 0.0, -0.5, 0.0, -0.1]);
                self.z_one.get_or_insert([0.6, 0.0]);
                self.z_minus_half_beta.get_or_insert([0.3, 1.0]);
                self.fd_step.get_or_insert(1e-2);
            }
        }
        self.fd_ratio.get_or_insert(2.0);
        self.quad_abs_tol.get_or_insert(1e-15);
        self.quad_rel_tol.get_or_insert(1e-13);
        self.quad_max_depth.get_or_insert(40);
        self.spec::<f64>()?;
        require(self.fd_step.is_some_and(|h| h > 0.0 && finite(h)), "fd_step must be positive")?;
        require(self.fd_ratio.is_some_and(|r| r > 1.0 && finite(r)), "fd_ratio must exceed 1")?;
        let z_ok = |z: Option<[f64; 2]>| z.is_some_and(|z| z.iter().all(|v| finite(*v)));
        require(z_ok(self.z_one) && z_ok(self.z_minus_half_beta), "insertion points must be finite")
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let spec = self.spec::<T>()?;
        let opts = QuadOptions {
            abs_tol: lit(self.quad_abs_tol.unwrap_or_default()),
            rel_tol: lit(self.quad_rel_tol.unwrap_or_default()),
            max_depth: self.quad_max_depth.unwrap_or_default(),
        };
        let h = self.fd_step.unwrap_or_default();
        let ratio = self.fd_ratio.unwrap_or_default();
        let residual = |choice, z, step: f64| match self.kind {
            BpzKind::Penner => bpz_ode_residual(&spec, choice, cx::<T>(z), lit(step), opts),
            BpzKind::Confluent => confluent_bpz_residual(&spec, choice, cx::<T>(z), lit(step), opts),
        };
        let mut table = CsvTable::new([
            "alpha",
            "re_z",
            "im_z",
            "fd_step",
            "residual",
            "error_estimate",
            "re_value",
            "im_value",
            "z_norm",
        ])
        .with_meta("kind", &format!("{:?}", self.kind).to_lowercase())
        .with_meta("M", &spec.n_eigen.to_string())
        .with_meta("beta", &fmt_float(f(spec.beta)));
        let mut summary = serde_json::Map::new();
        let mut report = Vec::new();
        for (choice, z) in self.choices() {
            let name = match choice {
                AlphaChoice::One => "one",
                AlphaChoice::MinusHalfBeta => "minus_half_beta",
            };
            let coarse = residual(choice, z, h)?;
            let fine = residual(choice, z, h / ratio)?;
            for (step, r) in [(h, coarse), (h / ratio, fine)] {
                table.push_row(vec![
                    name.to_string(),
                    fmt_float(z[0]),
                    fmt_float(z[1]),
                    fmt_float(step),
                    fmt_float(f(r.residual)),
                    fmt_float(f(r.error_estimate)),
                    fmt_float(f(r.value.re)),
                    fmt_float(f(r.value.im)),
                    fmt_float(f(r.z_norm)),
                ]);
            }
            let bound = f(coarse.residual) / f(coarse.error_estimate);
            let decay = f(coarse.residual) / f(fine.residual);
            summary.insert(
                name.into(),
                serde_json::json!({
                    "residual": f(coarse.residual),
                    "error_estimate": f(coarse.error_estimate),
                    "residual_over_estimate": bound,
                    "decay_ratio": decay,
                    "second_order_ratio": ratio * ratio,
                }),
            );
            report.push(format!("{name}: residual/estimate = {bound:.3}, decay ratio = {decay:.3}"));
        }
        Ok(Output {
            artifacts: vec![
                Artifact::Csv("bpz.csv", table),
                Artifact::Json("bpz_summary.json", serde_json::Value::Object(summary)),
            ],
            report: report.join("; "),
        })
    }
}
