//! Run manifests: plain `key: value` lines.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use anyhow::Result;

pub struct Manifest {
    lines: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            lines: vec![format!("command: {command}")],
        }
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{key}: {value}"));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.lines.join("\n") + "\n")?;
        Ok(())
    }
}
