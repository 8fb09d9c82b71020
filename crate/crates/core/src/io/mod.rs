//! File formats and artifact emission.

pub mod checkpoint;
pub mod pft;
pub mod pnm;
pub mod report;
pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

/// Writes via a sibling temp file and a rename, so readers never see partial files.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a corpus image: binary PGM/PPM (scaled to `[0, 1]`) or a single PFT record.
pub fn read_corpus_image(path: &Path) -> Result<ImageTensor> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(pft::MAGIC) {
        pft::decode(&bytes)
    } else {
        pnm::decode(&bytes)
    }
}

const CORPUS_EXTENSIONS: [&str; 4] = ["ppm", "pgm", "pnm", "pft"];

/// Image files directly inside `dir`, sorted by name.
pub fn list_corpus(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if path.is_file() && ext.is_some_and(|e| CORPUS_EXTENSIONS.contains(&e.as_str())) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/file.bin");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn corpus_listing_and_reading() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageTensor::filled(3, 2, 2, 1.0);
        fs::write(dir.path().join("b.ppm"), pnm::encode(&img).unwrap()).unwrap();
        fs::write(dir.path().join("a.pft"), pft::encode(&img)).unwrap();
        fs::write(dir.path().join("notes.txt"), b"x").unwrap();
        let files = list_corpus(dir.path()).unwrap();
        let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
        assert_eq!(names, vec!["a.pft", "b.ppm"]);
        for f in &files {
            assert_eq!(read_corpus_image(f).unwrap(), img);
        }
    }
}
