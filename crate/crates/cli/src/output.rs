use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, Resolved};
use crate::failure::Failure;

/// Artifact sink for one run. Every file is written to a temporary file in
/// the target directory and renamed into place.
pub struct Output {
    dir: PathBuf,
    hash: String,
    artifacts: Vec<String>,
    started: Option<f64>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::io(format!("temp file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| Failure::io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

impl Output {
    pub fn new(config: &Resolved) -> Result<Self, Failure> {
        std::fs::create_dir_all(&config.out_dir)
            .map_err(|e| Failure::io(format!("{}: {e}", config.out_dir.display())))?;
        Ok(Self {
            dir: config.out_dir.clone(),
            hash: config.hash(),
            artifacts: Vec::new(),
            started: config.timestamps.then(now),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// CSV with a leading `# config_hash: …` comment line.
    pub fn csv(&mut self, config: &Resolved, name: &str, body: String) -> Result<(), Failure> {
        if !config.wants(Format::Csv) {
            return Ok(());
        }
        let text = format!("# config_hash: {}\n{body}", self.hash);
        self.put(name, text.as_bytes())
    }

    /// JSON object with a `config_hash` field added at the top level.
    pub fn json<T: Serialize>(&mut self, config: &Resolved, name: &str, value: &T) -> Result<(), Failure> {
        if !config.wants(Format::Json) {
            return Ok(());
        }
        let mut v = serde_json::to_value(value).map_err(|e| Failure::io(e.to_string()))?;
        let body = match v.as_object_mut() {
            Some(map) => {
                map.insert("config_hash".into(), Value::String(self.hash.clone()));
                v
            }
            None => json!({ "config_hash": self.hash, "data": v }),
        };
        let mut text = serde_json::to_string_pretty(&body).map_err(|e| Failure::io(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// Plots never fail a run; write errors are reported on stderr.
    pub fn svg(&mut self, config: &Resolved, name: &str, svg: String) {
        if !config.wants(Format::Svg) {
            return;
        }
        let text = svg.replacen('\n', &format!("\n<!-- config_hash: {} -->\n", self.hash), 1);
        if let Err(e) = self.put(name, text.as_bytes()) {
            eprintln!("warning: plot {name} not written: {}", e.message);
        }
    }

    /// `manifest.json`: `{config_hash, seed, timestamps, versions, config, artifacts}`.
    pub fn finish(self, config: &Resolved) -> Result<(), Failure> {
        let timestamps = self
            .started
            .map(|s| json!({ "started_unix": s, "finished_unix": now() }));
        let manifest = json!({
            "config_hash": self.hash,
            "seed": config.seed,
            "command": config.command,
            "timestamps": timestamps,
            "versions": {
                "sos-lab": sos_lab::VERSION,
                "sos-lab-cli": env!("CARGO_PKG_VERSION"),
            },
            "config": config,
            "artifacts": self.artifacts,
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::io(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())
    }
}
