//! Key-value summary document shared by stdout and the exported file.
//! Numeric values use the same full-precision formatting as the delimited
//! exports, so the two never disagree.

use std::fmt;
use std::path::Path;

use knudsen::error::Result;

#[derive(Debug, Default, Clone)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.17e}")
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push((key.to_string(), value.into()));
    }

    pub fn push_num(&mut self, key: &str, value: f64) {
        self.push(key, fmt_num(value));
    }

    /// Records a number together with a tolerance verdict line.
    pub fn push_checked(&mut self, key: &str, value: f64, tolerance: f64) -> bool {
        self.push_num(key, value);
        self.push(&format!("{key}.tolerance"), fmt_num(tolerance));
        let ok = value.abs() <= tolerance;
        self.push(&format!("{key}.verdict"), if ok { "pass" } else { "fail" });
        ok
    }

    pub fn extend(&mut self, other: &Summary) {
        self.lines.extend(other.lines.iter().cloned());
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.lines {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
