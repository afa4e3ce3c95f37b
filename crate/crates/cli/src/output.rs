use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory handle; subdirectories are created on first write.
pub struct Out {
    root: PathBuf,
}

impl Out {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(p)
    }

    pub fn text(&self, rel: &str, body: &str) -> Result<PathBuf> {
        let p = self.path(rel)?;
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn json<T: Serialize>(&self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(rel, &body)
    }

    pub fn csv<T: Serialize>(
        &self,
        rel: &str,
        rows: impl IntoIterator<Item = T>,
    ) -> Result<PathBuf> {
        let p = self.path(rel)?;
        let mut w =
            csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(p)
    }
}
