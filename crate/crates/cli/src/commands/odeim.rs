use clap::Args;
use pblab::io::{fmt_float, CsvTable};
use pblab::odeim::{
    bethe_solve, change_of_variables_residual, default_bethe_init, eigenvalues, fd_eigenvalues,
    quantum_wronskian_residual, spectral_d, symmetry_checks, ShootOptions, SpectralProblem, MAX_LEVELS,
};
use pblab::{Cx, Scalar};
use serde::{Deserialize, Serialize};

use super::{cx, f, finite, lit, pair, require, tol};
use crate::config::Failure;
use crate::run::{Artifact, Command, Output};

/// Generates a config struct holding `(alpha, l)`, the shooting options and
/// the listed extra fields, and a matching flag struct.
macro_rules! spectral_command {
    ($config:ident, $args:ident, { $($extra:ident : $ty:ty = $default:expr, $doc:literal;)* }
        $(config_only { $($hidden:ident : $hty:ty = $hdefault:expr, $hdoc:literal;)* })?) => {
        #[derive(Debug, Clone, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $config {
            pub alpha: f64,
            pub l: f64,
            $(#[doc = $doc] pub $extra: $ty,)*
            $($(#[doc = $hdoc] pub $hidden: $hty,)*)?
            pub x_start: f64,
            pub x_match: f64,
            pub x_far_min: f64,
            pub x_far: Option<f64>,
            pub tol: f64,
        }

        impl Default for $config {
            fn default() -> Self {
                let o = ShootOptions::<f64>::default();
                $config {
                    alpha: 2.0,
                    l: 0.3,
                    $($extra: $default,)*
                    $($($hidden: $hdefault,)*)?
                    x_start: o.x_start,
                    x_match: o.x_match,
                    x_far_min: o.x_far_min,
                    x_far: o.x_far,
                    tol: o.tol,
                }
            }
        }

        #[derive(Debug, Clone, Default, Args, Serialize)]
        pub struct $args {
            #[arg(long, allow_hyphen_values = true)]
            pub alpha: Option<f64>,
            #[arg(long, allow_hyphen_values = true)]
            pub l: Option<f64>,
            $(#[doc = $doc] #[arg(long)] pub $extra: Option<$ty>,)*
            #[arg(long)]
            pub x_match: Option<f64>,
            #[arg(long)]
            pub x_far: Option<f64>,
        }

        impl $config {
            fn problem<T: Scalar>(&self) -> pblab::Result<SpectralProblem<T>> {
                SpectralProblem::new(lit(self.alpha), lit(self.l))?.with_options(ShootOptions {
                    x_start: lit(self.x_start),
                    x_match: lit(self.x_match),
                    x_far_min: lit(self.x_far_min),
                    x_far: self.x_far.map(lit),
                    tol: tol(self.tol),
                })
            }
        }
    };
}

spectral_command!(SpectrumConfig, SpectrumArgs, {
    levels: usize = 10, "Number of levels.";
    oracle: bool = true, "Compare with the discretized operator.";
    oracle_cells: usize = 1000, "Cells of the coarsest discretization.";
    oracle_length: f64 = 6.0, "Dirichlet wall of the discretization.";
});

spectral_command!(QWronskianConfig, QWronskianArgs, {
    points: usize = 10, "Size of the default sample E_k = from_polar(0.5 + 2k, 0.3 + 0.6k).";
} config_only {
    energies: Option<Vec<[f64; 2]>> = None, "Explicit energies [re, im], replacing the default sample.";
});

impl Command for SpectrumConfig {
    const NAME: &'static str = "odeim-spectrum";

    fn resolve(&mut self) -> Result<(), Failure> {
        self.problem::<f64>()?;
        require(
            (1..=MAX_LEVELS).contains(&self.levels),
            &format!("levels must be in 1..={MAX_LEVELS}"),
        )?;
        if self.oracle {
            require(self.l > -0.5, "the discretized oracle needs l > -1/2")?;
            require(self.oracle_cells >= 4 * self.levels, "oracle_cells must be at least 4 levels")?;
            require(self.oracle_length > 0.0 && finite(self.oracle_length), "oracle_length must be positive")?;
        }
        Ok(())
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let p = self.problem::<T>()?;
        let levels = eigenvalues(&p, self.levels)?;
        let oracle = if self.oracle {
            Some(fd_eigenvalues(&p, self.levels, self.oracle_cells, lit(self.oracle_length))?)
        } else {
            None
        };
        let mut table = CsvTable::new(["n", "E", "re_D", "im_D", "E_oracle", "abs_diff"])
            .with_meta("alpha", &fmt_float(self.alpha))
            .with_meta("l", &fmt_float(self.l));
        let mut worst = 0.0f64;
        for (k, &e) in levels.iter().enumerate() {
            let d = spectral_d(&p, Cx::new(e, T::zero()))?;
            let (eo, diff) = match &oracle {
                Some(o) => {
                    let diff = f((o[k] - e).abs());
                    worst = worst.max(diff);
                    (fmt_float(f(o[k])), fmt_float(diff))
                }
                None => (String::new(), String::new()),
            };
            table.push_row(vec![
                (k + 1).to_string(),
                fmt_float(f(e)),
                fmt_float(f(d.re)),
                fmt_float(f(d.im)),
                eo,
                diff,
            ]);
        }
        let mut report = format!("{} levels, E_1 = {:.12}", levels.len(), f(levels[0]));
        if self.oracle {
            report.push_str(&format!("; max |E - E_oracle| = {worst:.2e}"));
        }
        Ok(Output {
            artifacts: vec![Artifact::Csv("spectrum.csv", table)],
            report,
        })
    }
}

impl QWronskianConfig {
    /// Energies from the config, or the default sample.
    fn energies(&self) -> Vec<[f64; 2]> {
        if let Some(e) = &self.energies {
            return e.clone();
        }
        (0..self.points)
            .map(|k| {
                let z = num_complex::Complex64::from_polar(0.5 + 2.0 * k as f64, 0.3 + 0.6 * k as f64);
                [z.re, z.im]
            })
            .collect()
    }
}

impl Command for QWronskianConfig {
    const NAME: &'static str = "qwronskian-check";

    fn resolve(&mut self) -> Result<(), Failure> {
        self.problem::<f64>()?;
        require(self.points >= 1, "points must be at least 1")?;
        require(
            self.energies
                .as_ref()
                .is_none_or(|e| !e.is_empty() && e.iter().flatten().all(|v| finite(*v))),
            "energies must be a non-empty list of finite [re, im]",
        )
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let p = self.problem::<T>()?;
        let mut table = CsvTable::new(["re_E", "im_E", "re_R", "im_R", "abs_R"])
            .with_meta("alpha", &fmt_float(self.alpha))
            .with_meta("l", &fmt_float(self.l));
        let mut worst = 0.0f64;
        for e in self.energies() {
            let r = quantum_wronskian_residual(&p, cx::<T>(e))?;
            worst = worst.max(f(r.norm()));
            table.push_floats(&[e[0], e[1], f(r.re), f(r.im), f(r.norm())]);
        }
        let zero = Cx::new(T::zero(), T::zero());
        let product = spectral_d(&p, zero)? * spectral_d(&p.reflected(), zero)?;
        let product_error = f((product - T::one()).norm());
        let sym = symmetry_checks(&p, cx::<T>(self.energies()[0]))?;
        let summary = serde_json::json!({
            "max_residual": worst,
            "product_identity": pair(product),
            "product_identity_error": product_error,
            "symmetry": {
                "energy": self.energies()[0],
                "chi_wronskian": f(sym.chi_wronskian),
                "psi_wronskian": f(sym.psi_wronskian),
                "d_consistency": f(sym.d_consistency),
                "c_relation": f(sym.c_relation),
                "psi_minus_expansion": f(sym.psi_minus_expansion),
                "omega_action": f(sym.omega_action),
                "u": pair(sym.u),
            },
        });
        Ok(Output {
            artifacts: vec![
                Artifact::Csv("qwronskian.csv", table),
                Artifact::Json("qwronskian_summary.json", summary),
            ],
            report: format!(
                "max quantum Wronskian residual {worst:.2e}; |D(0,l)D(0,-l-1) - 1| = {product_error:.2e}"
            ),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetheConfig {
    pub alpha: f64,
    pub l: f64,
    /// Number of roots `L`.
    pub roots: usize,
    /// Starting points `[re, im]`; by default spread along the real axis.
    pub init: Option<Vec<[f64; 2]>>,
    /// Energy of the change-of-variables check.
    pub energy: f64,
}

impl Default for BetheConfig {
    fn default() -> Self {
        BetheConfig {
            alpha: 2.0,
            l: 0.3,
            roots: 2,
            init: None,
            energy: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct BetheArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub l: Option<f64>,
    /// Number of roots.
    #[arg(long = "L", alias = "roots")]
    pub roots: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<f64>,
}

impl Command for BetheConfig {
    const NAME: &'static str = "bethe-solve";

    fn resolve(&mut self) -> Result<(), Failure> {
        SpectralProblem::new(self.alpha, self.l)?;
        require(self.roots >= 1, "roots must be at least 1")?;
        if let Some(init) = &self.init {
            require(init.len() == self.roots, "init must hold L starting points")?;
            require(init.iter().flatten().all(|v| finite(*v)), "init must be finite")?;
        }
        require(finite(self.energy), "energy must be finite")
    }

    fn run<T: Scalar>(&self, _seed: u64) -> pblab::Result<Output> {
        let (alpha, l) = (lit::<T>(self.alpha), lit::<T>(self.l));
        let init = match &self.init {
            Some(z) => z.iter().map(|&v| cx(v)).collect(),
            None => default_bethe_init(alpha, l, self.roots),
        };
        let roots = bethe_solve(alpha, l, self.roots, &init)?;
        let two_l = 2.0 * self.l + 1.0;
        let closed_form = (two_l * two_l - 4.0 * self.alpha * self.alpha) / (4.0 * self.alpha);
        let xs: Vec<T> = (0..50).map(|i| lit(0.05 + 0.06 * i as f64)).collect();
        let cov = change_of_variables_residual(&roots, cx([self.energy, 0.0]), &xs)?;
        let mut result = serde_json::json!({
            "alpha": self.alpha,
            "l": self.l,
            "roots": roots.z.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "residual": f(roots.residual),
            "change_of_variables": {
                "energy": self.energy,
                "first_order": f(cov.first_order),
                "potential": f(cov.potential),
            },
        });
        let mut report = format!("L = {}, residual {:.2e}", self.roots, f(roots.residual));
        if self.roots == 1 {
            let err = f((roots.z[0] - cx::<T>([closed_form, 0.0])).norm());
            result["closed_form"] = serde_json::json!({ "z": closed_form, "error": err });
            report.push_str(&format!("; closed form error {err:.2e}"));
        }
        Ok(Output {
            artifacts: vec![Artifact::Json("bethe.json", result)],
            report,
        })
    }
}
