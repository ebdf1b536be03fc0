use std::path::Path;

use super::TrainedModel;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn save_model(m: &TrainedModel, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| Error::ModelFormat(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
    match v.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(n) if n == u64::from(MODEL_FORMAT_VERSION) => {}
        Some(n) => {
            return Err(Error::ModelFormat(format!(
                "{}: format version {n}, this build reads {MODEL_FORMAT_VERSION}",
                path.display()
            )))
        }
        None => return Err(Error::ModelFormat(format!("{}: no format_version", path.display()))),
    }
    serde_json::from_value(v).map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))
}
