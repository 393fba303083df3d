use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Everything needed to rerun a command: its name, flags, seed and output path.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.into(),
            flags: BTreeMap::new(),
            seed: None,
            output: None,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn flag(mut self, name: &str, value: impl Serialize) -> Self {
        self.flags
            .insert(name.into(), serde_json::to_value(value).expect("flag serializes"));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn output(mut self, path: Option<&Path>) -> Self {
        self.output = path.map(Path::to_path_buf);
        self
    }

    /// Writes the manifest next to `output` as `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}
