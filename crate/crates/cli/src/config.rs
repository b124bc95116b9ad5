//! Layered run configuration: built-in defaults, then the `[global]` and
//! command sections of a TOML config file, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use pblab::LabError;
use serde::de::{DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

/// Failure of a run, split by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit status 2.
    Invalid(String),
    /// Numerical or I/O failure: exit status 3.
    Failed(String),
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure::Invalid(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Failed(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid input: {m}"),
            Failure::Failed(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Failed(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Settings shared by every command that influence the artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Global {
    pub seed: u64,
    pub precision: Precision,
}

/// `[global]` section of a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGlobal {
    seed: Option<u64>,
    precision: Option<Precision>,
    out: Option<PathBuf>,
    tol: Option<f64>,
}

/// Parsed config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    global: FileGlobal,
    sections: Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Failure::Invalid(m) => Failure::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut sections: Table = text.parse().map_err(|e: toml::de::Error| Failure::invalid(e.to_string()))?;
        let global = match sections.remove("global") {
            Some(v) => v.try_into().map_err(|e: toml::de::Error| Failure::invalid(format!("[global]: {e}")))?,
            None => FileGlobal::default(),
        };
        for (k, v) in &sections {
            if !v.is_table() {
                return Err(Failure::invalid(format!("top-level key `{k}` must be a [section]")));
            }
        }
        Ok(ConfigFile { global, sections })
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    fn section(&self, command: &str) -> Option<&Table> {
        self.sections.get(command).and_then(Value::as_table)
    }
}

/// Global settings given on the command line.
#[derive(Debug, Clone, Default)]
pub struct GlobalFlags {
    pub seed: Option<u64>,
    pub precision: Option<Precision>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

/// Resolved global settings plus the output directory and tolerance override.
pub struct Resolved {
    pub global: Global,
    pub out: PathBuf,
    pub tol: Option<f64>,
}

pub fn resolve_global(file: &ConfigFile, flags: &GlobalFlags) -> Resolved {
    Resolved {
        global: Global {
            seed: flags.seed.or(file.global.seed).unwrap_or(0),
            precision: flags.precision.or(file.global.precision).unwrap_or_default(),
        },
        out: flags
            .out
            .clone()
            .or_else(|| file.global.out.clone())
            .unwrap_or_else(|| PathBuf::from("pblab-out")),
        tol: flags.tol.or(file.global.tol),
    }
}

fn to_table<S: Serialize>(value: &S) -> Result<Table, Failure> {
    Table::try_from(value).map_err(|e| Failure::Failed(format!("config serialization: {e}")))
}

/// Command parameters: defaults, overlaid by the file section, overlaid by
/// the flags that were given. A tolerance override replaces the `tol` key and
/// is rejected for commands without one.
pub fn layer<C, F>(command: &str, file: &ConfigFile, flags: &F, tol: Option<f64>) -> Result<C, Failure>
where
    C: Serialize + DeserializeOwned + Default,
    F: Serialize,
{
    let mut table = to_table(&C::default())?;
    let has_tol = table.contains_key("tol");
    if let Some(section) = file.section(command) {
        table.extend(section.clone());
    }
    table.extend(to_table(flags)?);
    if let Some(t) = tol {
        if !has_tol {
            return Err(Failure::invalid(format!("{command} has no tolerance to override")));
        }
        table.insert("tol".into(), Value::Float(t));
    }
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Failure::invalid(format!("[{command}]: {}", e.message())))
}

/// Everything that determines the artifacts of a run.
#[derive(Serialize)]
struct Canonical<'a> {
    command: &'a str,
    global: &'a Global,
    config: &'a serde_json::Value,
}

/// SHA-256 of the canonical JSON form (sorted keys) of a resolved run.
pub fn config_hash(command: &str, global: &Global, config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(&Canonical { command, global, config }).expect("JSON values serialize");
    sha256_hex(&bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses counts such as `100000` or `1e5`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if f >= 0.0 && f.fract() == 0.0 && f <= 9.007_199_254_740_992e15 {
        Ok(f as usize)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

/// Serde adapter for counts written as integers, floats or strings.
pub mod count {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Float(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(n) => usize::try_from(n).map_err(serde::de::Error::custom),
            Raw::Float(f) => parse_count(&f.to_string()).map_err(serde::de::Error::custom),
            Raw::Text(s) => parse_count(&s).map_err(serde::de::Error::custom),
        }
    }

    pub fn serialize<S: Serializer>(n: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*n as u64)
    }
}

/// Integer levels written as `a..b` (inclusive), `a..=b`, `a,b,c` or a list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Levels(pub Vec<i64>);

impl Levels {
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let lo: i64 = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
            let hi: i64 = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
            if hi < lo {
                return Err(format!("empty range `{s}`"));
            }
            return Ok(Levels((lo..=hi).collect()));
        }
        s.split(',')
            .map(|v| v.trim().parse().map_err(|_| format!("bad level `{v}`")))
            .collect::<Result<_, _>>()
            .map(Levels)
    }
}

impl<'de> Deserialize<'de> for Levels {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(i64),
            List(Vec<i64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(n) => Ok(Levels(vec![n])),
            Raw::List(v) => Ok(Levels(v)),
            Raw::Text(s) => Levels::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a complex number written `re,im`.
pub fn parse_cx(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("`{s}` is not of the form re,im"))?;
    let re = a.trim().parse().map_err(|_| format!("bad real part in `{s}`"))?;
    let im = b.trim().parse().map_err(|_| format!("bad imaginary part in `{s}`"))?;
    Ok([re, im])
}
