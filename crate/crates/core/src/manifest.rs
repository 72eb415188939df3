//! Dataset manifest: one row per stored sample image.
//!
//! CSV with header `subject_id,session,sample_index,path[,band]`. Relative
//! paths resolve against the manifest's own directory so a dataset
//! directory can be moved as a unit.

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub subject_id: String,
    pub session: u32,
    pub sample_index: u32,
    pub path: PathBuf,
    pub band: Option<String>,
}

impl ManifestRow {
    /// Stable identifier used in error messages and score audits.
    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.subject_id, self.session, self.sample_index)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            if !seen.insert((row.subject_id.clone(), row.session, row.sample_index)) {
                return Err(Error::InvalidManifest {
                    line: i + 2,
                    detail: format!("duplicate key {}", row.key()),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Subject identifiers in ascending order.
    pub fn subjects(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.subject_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::UnreadableFile {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::InvalidManifest {
            line: 1,
            detail: "empty manifest".to_string(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 4
            || cols[0] != "subject_id"
            || cols[1] != "session"
            || cols[2] != "sample_index"
            || cols[3] != "path"
        {
            return Err(Error::InvalidManifest {
                line: 1,
                detail: format!(
                    "header must be `subject_id,session,sample_index,path[,band]`, got `{header}`"
                ),
            });
        }
        let has_band = cols.len() > 4 && cols[4] == "band";

        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let want = if has_band { 5 } else { 4 };
            if fields.len() != want {
                return Err(Error::InvalidManifest {
                    line: idx + 1,
                    detail: format!("expected {want} fields, got {}", fields.len()),
                });
            }
            let session: u32 = fields[1].parse().map_err(|e| Error::InvalidManifest {
                line: idx + 1,
                detail: format!("bad session `{}`: {e}", fields[1]),
            })?;
            let sample_index: u32 = fields[2].parse().map_err(|e| Error::InvalidManifest {
                line: idx + 1,
                detail: format!("bad sample_index `{}`: {e}", fields[2]),
            })?;
            let raw = Path::new(fields[3]);
            let path = if raw.is_absolute() {
                raw.to_path_buf()
            } else {
                base.join(raw)
            };
            rows.push(ManifestRow {
                subject_id: fields[0].to_string(),
                session,
                sample_index,
                path,
                band: if has_band {
                    Some(fields[4].to_string())
                } else {
                    None
                },
            });
        }
        Manifest::new(rows)
    }

    /// Writes the manifest with paths relative to `base` when possible.
    pub fn save(&self, path: &Path, base: &Path) -> Result<()> {
        let has_band = self.rows.iter().any(|r| r.band.is_some());
        let mut out = String::from("subject_id,session,sample_index,path");
        if has_band {
            out.push_str(",band");
        }
        out.push('\n');
        for row in &self.rows {
            let p = row.path.strip_prefix(base).unwrap_or(&row.path);
            out.push_str(&format!(
                "{},{},{},{}",
                row.subject_id,
                row.session,
                row.sample_index,
                p.display()
            ));
            if has_band {
                out.push(',');
                out.push_str(row.band.as_deref().unwrap_or(""));
            }
            out.push('\n');
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_resolves_relative_paths() {
        let text = "subject_id,session,sample_index,path\ns01,1,0,images/a.pgm\ns01,1,1,/abs/b.pgm\n";
        let m = Manifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.rows()[0].path, Path::new("/data/images/a.pgm"));
        assert_eq!(m.rows()[1].path, Path::new("/abs/b.pgm"));
    }

    #[test]
    fn parse_reads_band_column() {
        let text = "subject_id,session,sample_index,path,band\ns01,1,0,a.pgm,0960\n";
        let m = Manifest::parse(text, Path::new(".")).unwrap();
        assert_eq!(m.rows()[0].band.as_deref(), Some("0960"));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = "subject_id,session,sample_index,path\ns01,1,0,a.pgm\ns01,1,0,b.pgm\n";
        assert!(matches!(
            Manifest::parse(text, Path::new(".")),
            Err(Error::InvalidManifest { line: 3, .. })
        ));
    }

    #[test]
    fn bad_header_is_rejected() {
        let text = "subject,sess,idx,file\ns01,1,0,a.pgm\n";
        assert!(Manifest::parse(text, Path::new(".")).is_err());
    }

    #[test]
    fn subjects_are_sorted_and_unique() {
        let text = "subject_id,session,sample_index,path\nsB,1,0,a.pgm\nsA,1,0,b.pgm\nsB,1,1,c.pgm\n";
        let m = Manifest::parse(text, Path::new(".")).unwrap();
        assert_eq!(m.subjects(), vec!["sA".to_string(), "sB".to_string()]);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = std::env::temp_dir().join("veintex_manifest_rt");
        std::fs::create_dir_all(&dir).unwrap();
        let rows = vec![
            ManifestRow {
                subject_id: "s01".to_string(),
                session: 1,
                sample_index: 0,
                path: dir.join("img/a.pgm"),
                band: None,
            },
            ManifestRow {
                subject_id: "s02".to_string(),
                session: 2,
                sample_index: 3,
                path: dir.join("img/b.pgm"),
                band: None,
            },
        ];
        let m = Manifest::new(rows).unwrap();
        let path = dir.join("manifest.csv");
        m.save(&path, &dir).unwrap();
        let back = Manifest::load(&path).unwrap();
        assert_eq!(back.rows(), m.rows());
    }
}
