pub mod evaluate;
pub mod gen_velocity;
pub mod gradcheck;
pub mod make_dataset;
pub mod predict;
pub mod simulate;
pub mod stitch;
pub mod train;

use std::path::Path;

use sesdi_core::error::{Error, Result};

/// Sorted list of files in `dir` with the given extension.
pub fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            out.push(path);
        }
    }
    if out.is_empty() {
        return Err(Error::param(format!(
            "no .{ext} files in {}",
            dir.display()
        )));
    }
    out.sort();
    Ok(out)
}
