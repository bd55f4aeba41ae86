//! Line-delimited JSON run log.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

pub struct RunLog {
    out: Mutex<BufWriter<File>>,
    timestamps: bool,
}

impl RunLog {
    /// Starts a fresh log at `path`.
    pub fn create(path: &Path, timestamps: bool) -> std::io::Result<Self> {
        Ok(Self { out: Mutex::new(BufWriter::new(File::create(path)?)), timestamps })
    }

    /// Appends one record tagged with `event`. `fields` must be a JSON object.
    pub fn record(&self, event: &str, fields: Value) {
        let mut obj = Map::new();
        obj.insert("event".into(), json!(event));
        if self.timestamps {
            let t = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
            obj.insert("time".into(), json!(t));
        }
        if let Value::Object(m) = fields {
            obj.extend(m);
        }
        let line = Value::Object(obj).to_string();
        let mut out = self.out.lock().expect("log lock");
        // a failed log write must not abort the computation it describes
        let _ = writeln!(out, "{line}").and_then(|_| out.flush());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_one_object_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.jsonl");
        let log = RunLog::create(&p, false).unwrap();
        log.record("solve", json!({"index": 3, "residual": 1e-10}));
        log.record("done", json!({}));
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["event"], "solve");
        assert_eq!(lines[0]["index"], 3);
        assert!(lines[0].get("time").is_none());
    }
}
