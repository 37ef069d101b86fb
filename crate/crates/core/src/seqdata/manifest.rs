//! Pair manifests: UTF-8 text, one `id<TAB>video_path<TAB>audio_path` record
//! per line. Lines starting with `#` and blank lines are skipped. Relative
//! paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::{load_seqf, PairedDataset};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub id: String,
    pub video: PathBuf,
    pub audio: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairManifest {
    pub records: Vec<PairRecord>,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl PairManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads every referenced file, checking that each parses as a sequence.
    pub fn resolve(&self) -> Result<PairedDataset> {
        let mut data = PairedDataset::default();
        for rec in &self.records {
            let video = load_seqf(self.resolve_path(&rec.video))?;
            let audio = load_seqf(self.resolve_path(&rec.audio))?;
            data.push(rec.id.clone(), video, audio);
        }
        Ok(data)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::MalformedManifest {
                    line: n + 1,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::MalformedManifest {
                    line: n + 1,
                    reason: "empty field".into(),
                });
            }
            if !seen.insert(fields[0].to_string()) {
                return Err(Error::DuplicateId(fields[0].to_string()));
            }
            records.push(PairRecord {
                id: fields[0].to_string(),
                video: PathBuf::from(fields[1]),
                audio: PathBuf::from(fields[2]),
            });
        }
        Ok(PairManifest {
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!("{}\t{}\t{}\n", r.id, r.video.display(), r.audio.display()));
        }
        out
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<PairManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    PairManifest::parse(&text, base)
}

pub fn save_manifest(manifest: &PairManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, manifest.to_tsv()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_in_file_order() {
        let m = PairManifest::parse("b\tv/b.seqf\ta/b.seqf\na\tv/a.seqf\ta/a.seqf\n", "/data").unwrap();
        let ids: Vec<_> = m.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["b", "a"]);
        assert_eq!(m.resolve_path(&m.records[0].video), PathBuf::from("/data/v/b.seqf"));
    }

    #[test]
    fn comments_are_ignored() {
        let m = PairManifest::parse("# header\nx\t1\t2\n", "").unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = "a\t1\t2\nb\t1\t2\nc\t1\t2\nd\t1\t2\na\t3\t4\n";
        match PairManifest::parse(text, "") {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count() {
        let err = PairManifest::parse("a\t1\n", "").unwrap_err();
        assert!(matches!(err, Error::MalformedManifest { line: 1, .. }));
        assert!(PairManifest::parse("a\t1\t2\t3\n", "").is_err());
    }

    #[test]
    fn empty_file_is_valid() {
        assert!(PairManifest::parse("", "").unwrap().is_empty());
    }

    #[test]
    fn missing_file_fails_at_resolve_time() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        std::fs::write(&path, "a\tnope.seqf\tnope2.seqf\n").unwrap();
        let m = load_manifest(&path).unwrap();
        assert!(matches!(m.resolve(), Err(Error::Io { .. })));
    }
}
