use std::path::Path;

use globset::Glob;
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// Relative paths (with `/` separators) of files under `root` matching
/// `pattern`, in lexicographic order.
pub fn discover(root: &Path, pattern: &str) -> Result<Vec<String>> {
    let matcher = Glob::new(pattern)?.compile_matcher();
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut found = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under root");
        let rel = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if matcher.is_match(&rel) {
            found.push(rel);
        }
    }
    found.sort();
    Ok(found)
}
