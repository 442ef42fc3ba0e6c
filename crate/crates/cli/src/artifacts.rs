//! Output directory handling, checksums and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::plot::{self, PlotData};
use crate::CliError;

/// Environment variable naming the default output root.
pub const OUTPUT_DIR_ENV: &str = "TSKF_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_ROOT: &str = "tskf-out";
pub const MANIFEST_FILE: &str = "manifest.json";

/// `--out` if given, else `output.dir`, else `<root>/<scenario>-<command>`
/// with the root taken from the environment or the default.
pub fn output_dir(cli_out: Option<&Path>, cfg: &ScenarioConfig, command: &str) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output.dir {
        return p.clone();
    }
    let root = std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
    root.join(format!("{}-{command}", cfg.label()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

/// Single writer for every artifact of one command; records checksums.
pub struct ArtifactWriter {
    dir: PathBuf,
    files: BTreeMap<String, String>,
    started: Instant,
}

impl ArtifactWriter {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(ArtifactWriter {
            dir,
            files: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, contents)?;
        self.files.insert(name.to_string(), sha256_hex(contents));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn emit_plots(
        &mut self,
        stem: &str,
        data: &PlotData,
        cfg: &ScenarioConfig,
    ) -> Result<(), CliError> {
        use crate::config::PlotFormat;
        for &mode in &cfg.output.plot_modes {
            for &format in &cfg.output.formats {
                match format {
                    PlotFormat::Svg => {
                        let svg = plot::render_svg(data, mode);
                        self.write(&format!("{stem}_{}.svg", mode.as_str()), svg.as_bytes())?;
                    }
                    PlotFormat::Data => {
                        for (k, (name, _)) in data.series.iter().enumerate() {
                            let csv = plot::render_data(data, mode, k);
                            self.write(
                                &format!("{stem}_{}_{}.csv", mode.as_str(), plot::slug(name)),
                                csv.as_bytes(),
                            )?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    /// Writes the manifest last so its presence marks a completed run.
    pub fn finish(
        self,
        command: &str,
        cfg: &ScenarioConfig,
        seeds: Vec<u64>,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool: "tskf".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            scenario: cfg.label().into(),
            config_hash: cfg.hash(),
            config: serde_json::to_value(cfg).map_err(|e| CliError::Other(e.to_string()))?,
            seeds,
            files: self.files.clone(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let mut text =
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub scenario: String,
    pub config_hash: String,
    /// The fully resolved config, defaults included.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
}
