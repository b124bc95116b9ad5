use clap::{Args, ValueEnum};
use pblab::io::{fmt_float, CsvTable};
use pblab::qpii::{
    empirical_soft_edge_cdf, extract_tw, qpii_residual_in, solve_qpii, Field2D, Grid2D, QpiiOptions,
    SoftEdgeScaling, Terminal,
};
use pblab::Scalar;
use serde::{Deserialize, Serialize};

use super::{f, finite, lit, require};
use crate::config::{count, parse_count, Failure};
use crate::run::{Artifact, Command, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GridPreset {
    /// `[-10, 8] x [-8, 8]`, 800 x 800 nodes.
    #[default]
    Default,
    /// Same box, 181 x 161 nodes.
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    #[default]
    Sigmoid,
    Step,
}

/// Grid box and resolution; unset entries come from the preset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct GridFields {
    t_min: Option<f64>,
    t_max: Option<f64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    n_t: Option<usize>,
    n_x: Option<usize>,
}

impl GridFields {
    fn fill(&mut self, preset: GridPreset) {
        let (nt, nx) = match preset {
            GridPreset::Default => (800, 800),
            GridPreset::Coarse => (181, 161),
        };
        self.t_min.get_or_insert(-10.0);
        self.t_max.get_or_insert(8.0);
        self.x_min.get_or_insert(-8.0);
        self.x_max.get_or_insert(8.0);
        self.n_t.get_or_insert(nt);
        self.n_x.get_or_insert(nx);
    }

    fn grid<T: Scalar>(&self) -> pblab::Result<Grid2D<T>> {
        let v = |x: Option<f64>| lit::<T>(x.unwrap_or_default());
        Grid2D::new(
            v(self.t_min),
            v(self.t_max),
            v(self.x_min),
            v(self.x_max),
            self.n_t.unwrap_or_default(),
            self.n_x.unwrap_or_default(),
        )
    }
}

fn terminal<T: Scalar>(kind: TerminalKind, steepness: f64) -> Terminal<T> {
    match kind {
        TerminalKind::Sigmoid => Terminal::Sigmoid { steepness: lit(steepness) },
        TerminalKind::Step => Terminal::Step,
    }
}

/// Generates the config struct and flag struct of a command that solves the
/// QPII equation, with the grid fields inlined.
macro_rules! field_command {
    ($config:ident, $args:ident, { $($extra:ident : $ty:ty = $default:expr, $doc:literal;)* }) => {
        #[derive(Debug, Clone, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $config {
            $(#[doc = $doc] pub $extra: $ty,)*
            pub grid: GridPreset,
            pub t_min: Option<f64>,
            pub t_max: Option<f64>,
            pub x_min: Option<f64>,
            pub x_max: Option<f64>,
            pub n_t: Option<usize>,
            pub n_x: Option<usize>,
            pub terminal: TerminalKind,
            pub steepness: f64,
            /// Largest implicit-Euler substep.
            pub max_ds: f64,
        }

        impl Default for $config {
            fn default() -> Self {
                $config {
                    $($extra: $default,)*
                    grid: GridPreset::Default,
                    t_min: None,
                    t_max: None,
                    x_min: None,
                    x_max: None,
                    n_t: None,
                    n_x: None,
                    terminal: TerminalKind::Sigmoid,
                    steepness: 2.0,
                    max_ds: 2.5e-3,
                }
            }
        }

        #[derive(Debug, Clone, Default, Args, Serialize)]
        pub struct $args {
            $(#[doc = $doc] #[arg(long)] pub $extra: Option<$ty>,)*
            #[arg(long, value_enum)]
            pub grid: Option<GridPreset>,
            #[arg(long, allow_hyphen_values = true)]
            pub t_min: Option<f64>,
            #[arg(long, allow_hyphen_values = true)]
            pub t_max: Option<f64>,
            #[arg(long, allow_hyphen_values = true)]
            pub x_min: Option<f64>,
            #[arg(long, allow_hyphen_values = true)]
            pub x_max: Option<f64>,
            #[arg(long)]
            pub n_t: Option<usize>,
            #[arg(long)]
            pub n_x: Option<usize>,
            #[arg(long, value_enum)]
            pub terminal: Option<TerminalKind>,
            #[arg(long)]
            pub steepness: Option<f64>,
            #[arg(long)]
            pub max_ds: Option<f64>,
        }

        impl $config {
            fn grid_fields(&self) -> GridFields {
                GridFields {
                    t_min: self.t_min,
                    t_max: self.t_max,
                    x_min: self.x_min,
                    x_max: self.x_max,
                    n_t: self.n_t,
                    n_x: self.n_x,
                }
            }

            fn resolve_grid(&mut self) -> Result<(), Failure> {
                let mut g = self.grid_fields();
                g.fill(self.grid);
                (self.t_min, self.t_max, self.x_min, self.x_max, self.n_t, self.n_x) =
                    (g.t_min, g.t_max, g.x_min, g.x_max, g.n_t, g.n_x);
                g.grid::<f64>()?;
                require(self.steepness > 0.0 && finite(self.steepness), "steepness must be positive")?;
                require(self.max_ds > 0.0 && finite(self.max_ds), "max_ds must be positive")
            }

            fn solve<T: Scalar>(&self, kappa: f64) -> pblab::Result<Field2D<T>> {
                solve_qpii(
                    lit(kappa),
                    self.grid_fields().grid()?,
                    terminal(self.terminal, self.steepness),
                    QpiiOptions { max_ds: lit(self.max_ds) },
                )
            }
        }
    };
}

field_command!(QpiiConfig, QpiiArgs, {
    kappa: f64 = 1.0, "Coefficient of the time derivative.";
    stride_t: usize = 10, "Keep every stride_t-th time row in field.csv.";
    stride_x: usize = 10, "Keep every stride_x-th space column in field.csv.";
    residual_margin: f64 = 4.0, "Residual window: t <= t_max - margin, |x| <= x_max - margin / 2.";
});

field_command!(TwTableConfig, TwTableArgs, {
    beta: f64 = 2.0, "Dyson index; the equation is solved at kappa = beta / 2.";
});

impl Command for QpiiConfig {
    const NAME: &'static str = "qpii-solve";

    fn resolve(&mut self) -> Result<(), Failure> {
        require(self.kappa > 0.0 && finite(self.kappa), "kappa must be positive")?;
        require(self.stride_t >= 1 && self.stride_x >= 1, "strides must be at least 1")?;
        require(self.residual_margin >= 0.0, "residual_margin must be non-negative")?;
        self.resolve_grid()
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let field = self.solve::<T>(self.kappa)?;
        let g = field.grid;
        let mut table = CsvTable::new(["t", "x", "F"]).with_meta("kappa", &fmt_float(self.kappa));
        for i in (0..g.n_t).step_by(self.stride_t) {
            for j in (0..g.n_x).step_by(self.stride_x) {
                table.push_floats(&[f(g.t(i)), f(g.x(j)), f(field.get(i, j))]);
            }
        }
        let margin = lit::<T>(self.residual_margin);
        let half = margin / lit(2.0);
        let residual = f(qpii_residual_in(&field, g.t_max - margin, g.x_min + half, g.x_max - half));
        let mono = field.monotonicity();
        let tw = extract_tw(&field);
        let flagged = tw.plateau_flags.iter().filter(|&&b| b).count();
        let summary = serde_json::json!({
            "kappa": self.kappa,
            "residual": residual,
            "monotonicity": {"bounds": f(mono.bounds), "in_x": f(mono.in_x), "in_t": f(mono.in_t)},
            "plateau_flagged_rows": flagged,
        });
        Ok(Output {
            artifacts: vec![
                Artifact::Csv("field.csv", table),
                Artifact::Csv("tw.csv", tw.to_csv()),
                Artifact::Json("qpii_summary.json", summary),
            ],
            report: format!("interior residual {residual:.3e}; {flagged} plateau-flagged rows"),
        })
    }
}

impl Command for TwTableConfig {
    const NAME: &'static str = "tw-table";

    fn resolve(&mut self) -> Result<(), Failure> {
        require(self.beta > 0.0 && finite(self.beta), "beta must be positive")?;
        self.resolve_grid()
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let tw = extract_tw(&self.solve::<T>(self.beta / 2.0)?);
        let flagged = tw.plateau_flags.iter().filter(|&&b| b).count();
        let rows = tw.t_values.len();
        Ok(Output {
            artifacts: vec![Artifact::Csv("tw_table.csv", tw.to_csv())],
            report: format!("{rows} rows at beta = {}; {flagged} plateau-flagged", self.beta),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwEmpiricalConfig {
    pub beta: f64,
    /// Matrix size.
    pub n: usize,
    #[serde(with = "count")]
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub center: f64,
    pub exponent: f64,
    pub time_kappa_power: f64,
}

impl Default for TwEmpiricalConfig {
    fn default() -> Self {
        let s = SoftEdgeScaling::<f64>::default();
        TwEmpiricalConfig {
            beta: 2.0,
            n: 400,
            samples: 100_000,
            t_min: -6.0,
            t_max: 4.0,
            points: 201,
            center: s.center,
            exponent: s.exponent,
            time_kappa_power: s.time_kappa_power,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct TwEmpiricalArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    /// Matrix size.
    #[arg(long = "N", alias = "n")]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    /// Number of equally spaced evaluation points.
    #[arg(long)]
    pub points: Option<usize>,
}

impl Command for TwEmpiricalConfig {
    const NAME: &'static str = "tw-empirical";

    fn resolve(&mut self) -> Result<(), Failure> {
        require(self.beta > 0.0 && finite(self.beta), "beta must be positive")?;
        require(self.n >= 2, "N must be at least 2")?;
        require(self.samples >= 1, "samples must be at least 1")?;
        require(self.points >= 2 && self.t_min < self.t_max, "need points >= 2 and t_min < t_max")?;
        require(
            [self.center, self.exponent, self.time_kappa_power].iter().all(|v| finite(*v)),
            "scaling constants must be finite",
        )
    }

    fn run<T: Scalar>(&self, seed: u64) -> pblab::Result<Output> {
        let dt = (self.t_max - self.t_min) / (self.points - 1) as f64;
        let ts: Vec<T> = (0..self.points).map(|i| lit(self.t_min + dt * i as f64)).collect();
        let scaling = SoftEdgeScaling {
            center: lit(self.center),
            exponent: lit(self.exponent),
            time_kappa_power: lit(self.time_kappa_power),
        };
        let tw = empirical_soft_edge_cdf(lit::<T>(self.beta), self.n, self.samples, seed, &ts, scaling)?;
        let se = tw.stderr.iter().flatten().map(|&v| f(v)).fold(0.0, f64::max);
        let table = tw
            .to_csv()
            .with_meta("N", &self.n.to_string())
            .with_meta("samples", &self.samples.to_string());
        Ok(Output {
            artifacts: vec![Artifact::Csv("tw_empirical.csv", table)],
            report: format!(
                "{} samples at beta = {}, N = {}; max stderr {se:.2e}",
                self.samples, self.beta, self.n
            ),
        })
    }
}
