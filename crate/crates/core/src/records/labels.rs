use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Name of the reserved class id 0.
pub const BACKGROUND_LABEL: &str = "nothing";

/// Class names in id order. Id 0 is always the background class, so a map
/// built from `n` names describes `n + 1` network outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
}

impl LabelMap {
    pub fn new<S: Into<String>>(classes: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut names = vec![BACKGROUND_LABEL.to_string()];
        for c in classes {
            let c = c.into();
            if c.is_empty() {
                return Err(Error::invalid("empty class name"));
            }
            if names[1..].contains(&c) {
                return Err(Error::invalid(format!("duplicate class name {c:?}")));
            }
            names.push(c);
        }
        Ok(Self { names })
    }

    /// One class per line; blank lines and surrounding whitespace are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in self.classes() {
            s.push_str(n);
            s.push('\n');
        }
        s
    }

    /// Real class names, ids 1..=N.
    pub fn classes(&self) -> &[String] {
        &self.names[1..]
    }

    /// Network output width: real classes plus background.
    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.names[1..].iter().position(|n| n == name).map(|i| i as u32 + 1)
    }
}
