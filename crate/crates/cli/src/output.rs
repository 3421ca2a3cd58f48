use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{runtime, CliResult};

/// Hex SHA-256 of the config's canonical JSON (object keys sorted, no
/// whitespace).
pub fn fingerprint(config: &Value) -> String {
    // serde_json's default map is ordered, so re-serializing a Value sorts keys.
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

/// Output directory of one run, with its config and fingerprint already
/// written as `<command>.config.json` and `<command>.fingerprint`.
pub struct Artifacts {
    dir: PathBuf,
    pub fingerprint: String,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str, config: &impl Serialize) -> CliResult<Self> {
        let config = serde_json::to_value(config).map_err(runtime("encoding config"))?;
        let fingerprint = fingerprint(&config);
        std::fs::create_dir_all(dir).map_err(runtime(format!("creating {}", dir.display())))?;
        let record = json!({"command": command, "config": config, "fingerprint": fingerprint});
        let text = serde_json::to_string_pretty(&record).map_err(runtime("encoding config"))?;
        std::fs::write(dir.join(format!("{command}.config.json")), text + "\n")
            .map_err(runtime("writing config record"))?;
        std::fs::write(dir.join(format!("{command}.fingerprint")), format!("{fingerprint}\n"))
            .map_err(runtime("writing fingerprint"))?;
        Ok(Self { dir: dir.to_path_buf(), fingerprint })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Pretty JSON with a `fingerprint` field added to objects.
    pub fn write_json(&self, name: &str, value: &impl Serialize) -> CliResult {
        let mut v = serde_json::to_value(value).map_err(runtime("encoding summary"))?;
        if let Value::Object(m) = &mut v {
            m.insert("fingerprint".into(), Value::String(self.fingerprint.clone()));
        }
        let text = serde_json::to_string_pretty(&v).map_err(runtime("encoding summary"))?;
        std::fs::write(self.path(name), text + "\n").map_err(runtime(format!("writing {name}")))
    }
}
