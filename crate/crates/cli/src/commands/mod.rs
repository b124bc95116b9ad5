//! Parameter blocks and drivers of the subcommands.

mod ensemble;
mod odeim;
mod poles;
mod qpii;

use std::path::Path;

use pblab::{Cx, Scalar};

use crate::config::{Failure, Global};
use crate::run::{execute_as, Command, Completed};

pub use ensemble::{BpzArgs, BpzConfig, SampleArgs, SampleConfig, VirasoroArgs, VirasoroConfig};
pub use odeim::{BetheArgs, BetheConfig, QWronskianArgs, QWronskianConfig, SpectrumArgs, SpectrumConfig};
pub use poles::{
    GoverningConfig, HirotaConfig, LaxArgs, LaxConfig, PoleCheckArgs, PolesArgs, PolesConfig, ReconstructArgs,
    ReconstructConfig,
};
pub use qpii::{QpiiArgs, QpiiConfig, TwEmpiricalArgs, TwEmpiricalConfig, TwTableArgs, TwTableConfig};

/// Every command name, in help order.
pub const NAMES: [&str; 14] = [
    SampleConfig::NAME,
    VirasoroConfig::NAME,
    BpzConfig::NAME,
    QpiiConfig::NAME,
    TwTableConfig::NAME,
    TwEmpiricalConfig::NAME,
    PolesConfig::NAME,
    GoverningConfig::NAME,
    HirotaConfig::NAME,
    LaxConfig::NAME,
    ReconstructConfig::NAME,
    SpectrumConfig::NAME,
    QWronskianConfig::NAME,
    BetheConfig::NAME,
];

pub fn dispatch(command: &str, config: serde_json::Value, global: Global, out: &Path) -> Result<Completed, Failure> {
    match command {
        SampleConfig::NAME => execute_as::<SampleConfig>(config, global, out),
        VirasoroConfig::NAME => execute_as::<VirasoroConfig>(config, global, out),
        BpzConfig::NAME => execute_as::<BpzConfig>(config, global, out),
        QpiiConfig::NAME => execute_as::<QpiiConfig>(config, global, out),
        TwTableConfig::NAME => execute_as::<TwTableConfig>(config, global, out),
        TwEmpiricalConfig::NAME => execute_as::<TwEmpiricalConfig>(config, global, out),
        PolesConfig::NAME => execute_as::<PolesConfig>(config, global, out),
        GoverningConfig::NAME => execute_as::<GoverningConfig>(config, global, out),
        HirotaConfig::NAME => execute_as::<HirotaConfig>(config, global, out),
        LaxConfig::NAME => execute_as::<LaxConfig>(config, global, out),
        ReconstructConfig::NAME => execute_as::<ReconstructConfig>(config, global, out),
        SpectrumConfig::NAME => execute_as::<SpectrumConfig>(config, global, out),
        QWronskianConfig::NAME => execute_as::<QWronskianConfig>(config, global, out),
        BetheConfig::NAME => execute_as::<BetheConfig>(config, global, out),
        other => Err(Failure::invalid(format!(
            "unknown command `{other}`; expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}

/// Tolerance floored at 100 ulp of the working precision.
fn tol<T: Scalar>(x: f64) -> T {
    T::lit(x).max(T::epsilon() * T::lit(100.0))
}

fn cx<T: Scalar>(z: [f64; 2]) -> Cx<T> {
    Cx::new(T::lit(z[0]), T::lit(z[1]))
}

fn f<T: Scalar>(x: T) -> f64 {
    x.to_f64_lossy()
}

fn pair<T: Scalar>(z: Cx<T>) -> [f64; 2] {
    [f(z.re), f(z.im)]
}

fn require(ok: bool, msg: &str) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::invalid(msg))
    }
}

fn finite(x: f64) -> bool {
    x.is_finite()
}
