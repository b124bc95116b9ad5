//! Execution of a resolved run: artifacts stamped with the config hash,
//! atomic writes, the manifest, and replay from a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use pblab::io::{write_atomic, CsvTable};
use pblab::Scalar;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::commands;
use crate::config::{config_hash, sha256_hex, Failure, Global, Precision};

pub const MANIFEST: &str = "manifest.json";
const MANIFEST_FORMAT: u32 = 1;

/// One output file before the config hash is attached.
pub enum Artifact {
    Csv(&'static str, CsvTable),
    Json(&'static str, serde_json::Value),
}

impl Artifact {
    fn name(&self) -> &'static str {
        match self {
            Artifact::Csv(n, _) | Artifact::Json(n, _) => n,
        }
    }

    fn render(self, command: &str, hash: &str) -> Vec<u8> {
        match self {
            Artifact::Csv(_, table) => table
                .with_meta("command", command)
                .with_meta("config_hash", hash)
                .render()
                .into_bytes(),
            Artifact::Json(_, value) => {
                let doc = serde_json::json!({
                    "command": command,
                    "config_hash": hash,
                    "result": value,
                });
                let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
                text.push('\n');
                text.into_bytes()
            }
        }
    }
}

/// A command's parameter block.
pub trait Command: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;

    /// Fills parameters whose defaults depend on others and checks the
    /// preconditions of the modules. Must be idempotent.
    fn resolve(&mut self) -> Result<(), Failure>;

    fn run<T: Scalar>(&self, seed: u64) -> pblab::Result<Output>;
}

/// Artifacts plus a one-line report for the terminal.
pub struct Output {
    pub artifacts: Vec<Artifact>,
    pub report: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub pblab: String,
    pub manifest_format: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub global: Global,
    pub config: serde_json::Value,
    pub versions: Versions,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<ArtifactRecord>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::invalid(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
    }
}

/// Result of a completed run.
pub struct Completed {
    pub manifest: Manifest,
    pub report: String,
    pub dir: PathBuf,
}

fn resolved<C: Command>(config: serde_json::Value) -> Result<C, Failure> {
    let mut c: C = serde_json::from_value(config).map_err(|e| Failure::invalid(format!("[{}]: {e}", C::NAME)))?;
    c.resolve()?;
    Ok(c)
}

pub fn execute_as<C: Command>(config: serde_json::Value, global: Global, out: &Path) -> Result<Completed, Failure> {
    let start = Instant::now();
    let cfg: C = resolved(config)?;
    let config = serde_json::to_value(&cfg).expect("configs serialize to JSON");
    let hash = config_hash(C::NAME, &global, &config);
    let output = match global.precision {
        Precision::F32 => cfg.run::<f32>(global.seed),
        Precision::F64 => cfg.run::<f64>(global.seed),
    }?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Failed(format!("cannot create {}: {e}", out.display())))?;
    let mut records = Vec::with_capacity(output.artifacts.len());
    for artifact in output.artifacts {
        let name = artifact.name();
        let bytes = artifact.render(C::NAME, &hash);
        write_atomic(&out.join(name), &bytes)?;
        records.push(ArtifactRecord {
            file: name.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
        });
    }
    let manifest = Manifest {
        command: C::NAME.to_string(),
        config_hash: hash,
        seed: global.seed,
        global,
        config,
        versions: Versions {
            pblab: env!("CARGO_PKG_VERSION").to_string(),
            manifest_format: MANIFEST_FORMAT,
        },
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        artifacts: records,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&out.join(MANIFEST), text.as_bytes())?;
    Ok(Completed {
        manifest,
        report: output.report,
        dir: out.to_path_buf(),
    })
}

/// Runs `command` with a parameter block in JSON form.
pub fn execute(command: &str, config: serde_json::Value, global: Global, out: &Path) -> Result<Completed, Failure> {
    commands::dispatch(command, config, global, out)
}

/// Re-runs the run recorded in a manifest and checks every artifact against
/// its recorded digest.
pub fn replay(manifest_path: &Path, out: Option<&Path>) -> Result<Completed, Failure> {
    let recorded = Manifest::load(manifest_path)?;
    let hash = config_hash(&recorded.command, &recorded.global, &recorded.config);
    if hash != recorded.config_hash {
        return Err(Failure::invalid(format!(
            "manifest config hash {} does not match its config ({hash})",
            recorded.config_hash
        )));
    }
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => manifest_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let done = execute(&recorded.command, recorded.config.clone(), recorded.global, &dir)?;
    if done.manifest.config_hash != recorded.config_hash {
        return Err(Failure::Failed("replayed config hash differs from the manifest".into()));
    }
    for want in &recorded.artifacts {
        match done.manifest.artifacts.iter().find(|a| a.file == want.file) {
            Some(got) if got.sha256 == want.sha256 => {}
            Some(_) => return Err(Failure::Failed(format!("{} differs from the manifest", want.file))),
            None => return Err(Failure::Failed(format!("{} was not reproduced", want.file))),
        }
    }
    if done.manifest.artifacts.len() != recorded.artifacts.len() {
        return Err(Failure::Failed("replay produced a different set of artifacts".into()));
    }
    Ok(done)
}
