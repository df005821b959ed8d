//! Artifact destinations and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Default output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "APDIST_OUT_DIR";

/// Writes `content` to a temporary file beside `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(content)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// Where an artifact goes: `--out`, else `$APDIST_OUT_DIR/<stem>.<ext>`,
/// else standard output (`None`).
pub fn destination(out: Option<&Path>, stem: &str, ext: &str) -> Option<PathBuf> {
    if let Some(p) = out {
        return Some(p.to_path_buf());
    }
    let dir = std::env::var_os(OUT_DIR_ENV)?;
    Some(PathBuf::from(dir).join(format!("{stem}.{ext}")))
}

pub fn emit(out: Option<&Path>, stem: &str, ext: &str, content: &str) -> Result<()> {
    match destination(out, stem, ext) {
        Some(path) => {
            write_atomic(&path, content.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/report.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        let leftovers = std::fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn explicit_path_wins() {
        let p = Path::new("/tmp/x.csv");
        assert_eq!(destination(Some(p), "s", "csv"), Some(p.to_path_buf()));
    }
}
