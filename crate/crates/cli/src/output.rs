use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Number, Value};
use steklov_core::immersion::{export_surface, Immersion};

use crate::error::CliError;

/// 17 significant digits: round-trips every finite double.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn reformat_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *n = Number::from_str(&f17(x)).expect("finite float literal");
            }
        }
        Value::Array(a) => a.iter_mut().for_each(reformat_floats),
        Value::Object(o) => o.values_mut().for_each(reformat_floats),
        _ => {}
    }
}

pub fn to_json(value: &impl Serialize) -> Value {
    let mut v = serde_json::to_value(value).expect("serializable output");
    reformat_floats(&mut v);
    v
}

pub enum Artifact {
    File { name: String, bytes: Vec<u8> },
    Surface { stem: String, immersion: Box<Immersion>, resolution: usize },
}

/// Files of one run, held in memory until the single write pass.
pub struct Artifacts {
    header: Vec<String>,
    command: String,
    items: Vec<Artifact>,
}

impl Artifacts {
    pub fn new(command: &str, hash: &str) -> Self {
        Artifacts {
            header: vec![format!("steklov-lab {}", crate::VERSION), format!("config_sha256 {hash}")],
            command: command.to_string(),
            items: Vec::new(),
        }
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<String>>) {
        let mut s = String::new();
        for h in &self.header {
            s.push_str(&format!("# {h}\n"));
        }
        s.push_str(&columns.join(","));
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.items.push(Artifact::File { name: name.to_string(), bytes: s.into_bytes() });
    }

    /// `payload` fields follow version, config_hash and command.
    pub fn json(&mut self, name: &str, payload: Value) {
        let mut o = Map::new();
        o.insert("version".into(), Value::String(crate::VERSION.into()));
        o.insert("config_hash".into(), Value::String(self.hash().into()));
        o.insert("command".into(), Value::String(self.command.clone()));
        if let Value::Object(p) = payload {
            o.extend(p);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(o)).expect("json output");
        text.push('\n');
        self.items.push(Artifact::File { name: name.to_string(), bytes: text.into_bytes() });
    }

    pub fn surface(&mut self, stem: &str, immersion: Immersion, resolution: usize) {
        self.items.push(Artifact::Surface { stem: stem.to_string(), immersion: Box::new(immersion), resolution });
    }

    fn hash(&self) -> &str {
        self.header[1].trim_start_matches("config_sha256 ")
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for item in &self.items {
            match item {
                Artifact::File { name, bytes } => {
                    let path = dir.join(name);
                    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    written.push(path);
                }
                Artifact::Surface { stem, immersion, resolution } => {
                    let stem = dir.join(stem);
                    export_surface(immersion, *resolution, &stem, &self.header)?;
                    written.push(stem.with_extension("obj"));
                    let name = format!("{}_boundary.csv", stem.file_name().and_then(|s| s.to_str()).unwrap_or(""));
                    written.push(stem.with_file_name(name));
                }
            }
        }
        Ok(written)
    }
}
