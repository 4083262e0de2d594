//! On-disk dataset layout.
//!
//! ```text
//! <root>/references/0000.png ...
//! <root>/queries/0000.png ...
//! <root>/ground_truth.txt
//! ```
//!
//! Lexicographic file-name order defines the frame index. The ground-truth
//! file is a `# tolerance=N` header line, a `query,reference` column line,
//! and one `q,r` row per query.

use std::fs;
use std::path::{Path, PathBuf};

use patchvpr_core::{ImageTensor, SynthDataset};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::{load_image, save_png};

pub const REFERENCES_DIR: &str = "references";
pub const QUERIES_DIR: &str = "queries";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.txt";

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

/// PNG/JPEG files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every image in `dir` in frame order. Decoding runs on the current rayon pool.
pub fn load_images(dir: &Path) -> Result<Vec<ImageTensor>> {
    let paths = list_images(dir)?;
    paths.par_iter().map(load_image).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub tolerance: usize,
    /// `references[q]` is the correct reference frame of query `q`.
    pub references: Vec<usize>,
}

impl GroundTruth {
    pub fn identity(n: usize, tolerance: usize) -> Self {
        Self { tolerance, references: (0..n).collect() }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# tolerance={}\nquery,reference\n", self.tolerance);
        for (q, r) in self.references.iter().enumerate() {
            s.push_str(&format!("{q},{r}\n"));
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::format(path, "empty ground-truth file"))?;
        let tolerance = header
            .strip_prefix('#')
            .and_then(|h| h.trim().strip_prefix("tolerance="))
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| Error::format(path, "first line must be `# tolerance=N`"))?;
        if lines.next() != Some("query,reference") {
            return Err(Error::format(path, "second line must be `query,reference`"));
        }
        let mut references = Vec::new();
        for (i, line) in lines.enumerate() {
            let parsed = line
                .split_once(',')
                .and_then(|(q, r)| Some((q.trim().parse::<usize>().ok()?, r.trim().parse::<usize>().ok()?)));
            match parsed {
                Some((q, r)) if q == i => references.push(r),
                Some((q, _)) => {
                    return Err(Error::format(path, format!("expected query index {i}, found {q}")))
                }
                None => return Err(Error::format(path, format!("malformed row `{line}`"))),
            }
        }
        Ok(Self { tolerance, references })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn frame_name(i: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(4);
    format!("{i:0width$}.png")
}

/// Writes a generated traverse pair in the standard layout.
pub fn write_dataset(root: &Path, data: &SynthDataset, tolerance: usize) -> Result<()> {
    for (dir, images) in [(REFERENCES_DIR, &data.references), (QUERIES_DIR, &data.queries)] {
        let dir = root.join(dir);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        images
            .par_iter()
            .enumerate()
            .try_for_each(|(i, img)| save_png(dir.join(frame_name(i, images.len())), img))?;
    }
    let truth = GroundTruth { tolerance, references: data.ground_truth.clone() };
    truth.save(&root.join(GROUND_TRUTH_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_truth_text_round_trip() {
        let gt = GroundTruth { tolerance: 2, references: vec![0, 1, 1, 5] };
        let text = gt.to_text();
        assert!(text.starts_with("# tolerance=2\nquery,reference\n0,0\n"));
        assert_eq!(GroundTruth::parse(&text, Path::new("gt")).unwrap(), gt);
    }

    #[test]
    fn ground_truth_errors() {
        let p = Path::new("gt");
        assert!(GroundTruth::parse("", p).is_err());
        assert!(GroundTruth::parse("tolerance 1\nquery,reference\n", p).is_err());
        assert!(GroundTruth::parse("# tolerance=1\nq,r\n", p).is_err());
        assert!(GroundTruth::parse("# tolerance=1\nquery,reference\n1,0\n", p).is_err());
        assert!(GroundTruth::parse("# tolerance=1\nquery,reference\n0;0\n", p).is_err());
    }

    #[test]
    fn frame_names_sort_lexicographically() {
        assert_eq!(frame_name(7, 50), "0007.png");
        assert_eq!(frame_name(12345, 20000), "12345.png");
        let mut names: Vec<String> = (0..1200).map(|i| frame_name(i, 1200)).collect();
        let sorted = names.clone();
        names.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn list_images_filters_and_sorts() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.png", "a.JPG", "c.txt", "0.jpeg"] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        let names: Vec<_> = list_images(dir.path())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["0.jpeg", "a.JPG", "b.png"]);
    }
}
