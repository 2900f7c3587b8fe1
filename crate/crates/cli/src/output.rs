//! CSV and manifest writing.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use mbq::experiments::ScanResult;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::RunError;

pub const MANIFEST: &str = "manifest.json";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// What ended up on disk.
#[derive(Debug, Default)]
pub struct Written {
    pub files: Vec<String>,
    pub failures: Vec<String>,
    pub partial: bool,
}

/// Removes the data files named by an earlier manifest in `dir`, so the
/// directory never holds files the new manifest does not list.
fn clear_previous(dir: &Path) -> Result<(), OutputError> {
    let path = dir.join(MANIFEST);
    let Ok(text) = fs::read_to_string(&path) else {
        return Ok(());
    };
    let Ok(old) = serde_json::from_str::<Value>(&text) else {
        return Ok(());
    };
    for name in old["files"].as_array().into_iter().flatten().filter_map(Value::as_str) {
        // Only plain file names are ever written.
        if Path::new(name).file_name().and_then(|f| f.to_str()) != Some(name) {
            continue;
        }
        match fs::remove_file(dir.join(name)) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(io_err(&dir.join(name))(e)),
            _ => {}
        }
    }
    Ok(())
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn units() -> Value {
    json!({
        "energy": "E_C",
        "time": "hbar/E_C",
        "rate": "E_C/hbar",
        "current": "e E_C/hbar",
        "noise": "e^2 E_C/hbar",
        "phi": "rad",
    })
}

/// Writes every series of `result` plus the manifest. On tolerance
/// failure or runner error the data files get a `.partial` suffix.
pub fn write_outputs(
    cfg: &RunConfig,
    dir: &Path,
    result: &Result<ScanResult, RunError>,
    wall_time: f64,
    jobs: usize,
) -> Result<Written, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    clear_previous(dir)?;

    let mut written = Written::default();
    let mut manifest = Map::new();
    manifest.insert("manifest_version".into(), json!(MANIFEST_VERSION));
    manifest.insert("version".into(), json!(env!("MBQ_VERSION")));
    manifest.insert("scenario".into(), json!(cfg.scenario.name()));
    manifest.insert("config".into(), cfg.to_json());
    manifest.insert(
        "provenance".into(),
        serde_json::to_value(cfg.provenance()).expect("serializable"),
    );
    let grids: Map<String, Value> = cfg
        .grid_names()
        .into_iter()
        .map(|g| {
            let v = json!({
                "start": cfg.value(&format!("grid.{g}.start")),
                "stop": cfg.value(&format!("grid.{g}.stop")),
                "points": cfg.value(&format!("grid.{g}.points")),
            });
            (g, v)
        })
        .collect();
    manifest.insert("grids".into(), Value::Object(grids));
    manifest.insert("units".into(), units());

    match result {
        Ok(r) => {
            let diag = r.diagnostics.summarize(&cfg.tolerances());
            written.failures = diag.failures.clone();
            written.partial = !diag.failures.is_empty();
            let suffix = if written.partial { ".csv.partial" } else { ".csv" };
            for s in &r.series {
                let name = format!("{}{suffix}", s.name);
                let path = dir.join(&name);
                fs::write(&path, s.table.to_csv()).map_err(io_err(&path))?;
                written.files.push(name);
            }
            manifest.insert("params".into(), serde_json::to_value(&r.params).expect("serializable"));
            let summary: BTreeMap<&str, Value> = r
                .summary
                .iter()
                .map(|(k, v)| (k.as_str(), finite_or_null(*v)))
                .collect();
            manifest.insert("summary".into(), json!(summary));
            manifest.insert("diagnostics".into(), serde_json::to_value(&diag).expect("serializable"));
            let status = if written.partial { "tolerance-failure" } else { "ok" };
            manifest.insert("status".into(), json!(status));
        }
        Err(e) => {
            written.partial = true;
            written.failures = vec![e.to_string()];
            manifest.insert("error".into(), json!(e.to_string()));
            manifest.insert("status".into(), json!("error"));
        }
    }
    manifest.insert("files".into(), json!(written.files));
    manifest.insert("wall_time_s".into(), json!(wall_time));
    manifest.insert("jobs".into(), json!(jobs));

    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&Value::Object(manifest)).expect("serializable");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(written)
}
