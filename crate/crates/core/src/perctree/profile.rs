use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-level child counts of a spherically symmetric tree.
///
/// `children()[k - 1]` is the number of children of every vertex at level
/// `k - 1`, so level `k` holds `c_1 * ... * c_k` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct LevelProfile {
    children: Vec<u32>,
}

impl LevelProfile {
    pub fn new(children: Vec<u32>) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::InvalidSpec("empty level profile".into()));
        }
        if let Some(k) = children.iter().position(|&c| c == 0) {
            return Err(Error::InvalidSpec(format!(
                "level {} has zero children",
                k + 1
            )));
        }
        Ok(Self { children })
    }

    /// Complete binary tree with `levels` levels.
    pub fn binary(levels: usize) -> Self {
        Self {
            children: vec![2; levels.max(1)],
        }
    }

    pub fn children(&self) -> &[u32] {
        &self.children
    }

    pub fn levels(&self) -> usize {
        self.children.len()
    }

    /// Number of vertices at level `k` (the root is level 0), or `None` on
    /// overflow.
    pub fn vertices_at(&self, k: usize) -> Option<u128> {
        self.children[..k]
            .iter()
            .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128))
    }

    /// Total number of edges in the first `level` levels.
    pub fn edges_through(&self, level: usize) -> Option<u128> {
        (1..=level).try_fold(0u128, |acc, k| acc.checked_add(self.vertices_at(k)?))
    }

    /// Reads a profile file: one positive integer per line; blank lines and
    /// `#` comments are ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Parse(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        text.parse()
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for c in &self.children {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }
}

impl std::str::FromStr for LevelProfile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut children = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let c: u32 = line.parse().map_err(|_| {
                Error::Parse(format!("line {}: expected a positive integer", lineno + 1))
            })?;
            children.push(c);
        }
        LevelProfile::new(children)
    }
}

impl TryFrom<Vec<u32>> for LevelProfile {
    type Error = Error;

    fn try_from(children: Vec<u32>) -> Result<Self> {
        LevelProfile::new(children)
    }
}

impl From<LevelProfile> for Vec<u32> {
    fn from(p: LevelProfile) -> Self {
        p.children
    }
}

impl fmt::Display for LevelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}
