use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};

/// Collects output files and writes each one exactly once.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| LabError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes to a temporary sibling, syncs, then renames over `name`.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        let io = |e| LabError::io(&target, e);
        {
            let mut f = std::fs::File::create(&tmp).map_err(io)?;
            f.write_all(contents.as_bytes()).map_err(io)?;
            f.sync_all().map_err(io)?;
        }
        std::fs::rename(&tmp, &target).map_err(io)?;
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_replace_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("nested")).unwrap();
        out.write("a.txt", "one").unwrap();
        let p = out.write("a.txt", "two").unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "two");
        let leftovers: Vec<_> = std::fs::read_dir(out.root()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(leftovers.len(), 1);
    }
}
