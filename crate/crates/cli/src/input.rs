//! Sample ingestion: one number per line, blank lines and `#` comments
//! ignored.

use std::fmt;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

/// A malformed input line, or an input without any values.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    /// 1-based line number; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for InputError {}

/// Parses the text of a sample file. Parsing uses Rust's `f64` grammar, so
/// the decimal separator is always `.` regardless of locale.
pub fn parse_sample(text: &str) -> Result<Vec<f64>, InputError> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let v: f64 = content.parse().map_err(|_| InputError {
            line: i + 1,
            message: format!("`{content}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(InputError {
                line: i + 1,
                message: format!("`{content}` is not finite"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(InputError {
            line: 0,
            message: "input contains no values".into(),
        });
    }
    Ok(values)
}

/// Reads a sample from a file, or from stdin when `path` is `-`.
pub fn read_sample(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?
    };
    parse_sample(&text).map_err(|e| anyhow::Error::new(e).context(format!("in {}", path.display())))
}
