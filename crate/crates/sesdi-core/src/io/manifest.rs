//! Plain-text dataset manifests pairing survey files with labels.
//!
//! Format:
//! ```text
//! SESDI-MANIFEST 1
//! survey <relative path>
//! sample survey=<index> label=<relative path> qx=.. qy=.. qz=.. w=.. wp=.. d=.. bin=..
//! ```
//! Paths are relative to the manifest's directory. `#` starts a comment.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::atomic_write;

const MAGIC: &str = "SESDI-MANIFEST 1";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestSample {
    pub survey: usize,
    pub label: PathBuf,
    pub q: (f64, f64, f64),
    pub w: f64,
    pub w_p: f64,
    pub d: f64,
    pub bin: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub surveys: Vec<PathBuf>,
    pub samples: Vec<ManifestSample>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for s in &self.surveys {
            out.push_str(&format!("survey {}\n", s.display()));
        }
        for s in &self.samples {
            out.push_str(&format!(
                "sample survey={} label={} qx={} qy={} qz={} w={} wp={} d={} bin={}\n",
                s.survey,
                s.label.display(),
                s.q.0,
                s.q.1,
                s.q.2,
                s.w,
                s.w_p,
                s.d,
                s.bin
            ));
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == MAGIC => {}
            _ => return Err(Error::format(0, format!("manifest must start with {MAGIC:?}"))),
        }
        let mut manifest = Manifest::default();
        for (ln, raw) in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("survey ") {
                manifest.surveys.push(PathBuf::from(rest.trim()));
            } else if let Some(rest) = line.strip_prefix("sample ") {
                manifest.samples.push(parse_sample(rest, ln + 1)?);
            } else {
                return Err(Error::format(
                    ln as u64 + 1,
                    format!("unknown manifest line {line:?}"),
                ));
            }
        }
        for s in &manifest.samples {
            if s.survey >= manifest.surveys.len() {
                return Err(Error::format(
                    0,
                    format!("sample references survey {} of {}", s.survey, manifest.surveys.len()),
                ));
            }
        }
        Ok(manifest)
    }
}

fn parse_sample(rest: &str, line_no: usize) -> Result<ManifestSample> {
    let mut survey = None;
    let mut label = None;
    let mut vals: std::collections::BTreeMap<&str, f64> = Default::default();
    let mut bin = None;
    for field in rest.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::format(line_no as u64, format!("bad field {field:?}")))?;
        match k {
            "survey" => {
                survey = Some(v.parse::<usize>().map_err(|_| {
                    Error::format(line_no as u64, format!("bad survey index {v:?}"))
                })?)
            }
            "label" => label = Some(PathBuf::from(v)),
            "bin" => {
                bin = Some(v.parse::<usize>().map_err(|_| {
                    Error::format(line_no as u64, format!("bad bin {v:?}"))
                })?)
            }
            "qx" | "qy" | "qz" | "w" | "wp" | "d" => {
                let f = v.parse::<f64>().map_err(|_| {
                    Error::format(line_no as u64, format!("bad number {v:?} for {k}"))
                })?;
                vals.insert(k, f);
            }
            other => {
                return Err(Error::format(
                    line_no as u64,
                    format!("unknown sample field {other:?}"),
                ))
            }
        }
    }
    let need = |k: &str| -> Result<f64> {
        vals.get(k)
            .copied()
            .ok_or_else(|| Error::format(line_no as u64, format!("missing sample field {k}")))
    };
    Ok(ManifestSample {
        survey: survey
            .ok_or_else(|| Error::format(line_no as u64, "missing sample field survey"))?,
        label: label.ok_or_else(|| Error::format(line_no as u64, "missing sample field label"))?,
        q: (need("qx")?, need("qy")?, need("qz")?),
        w: need("w")?,
        w_p: need("wp")?,
        d: need("d")?,
        bin: bin.ok_or_else(|| Error::format(line_no as u64, "missing sample field bin"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.manifest");
        let manifest = Manifest {
            surveys: vec![PathBuf::from("s0.sdi"), PathBuf::from("s1.sdi")],
            samples: vec![ManifestSample {
                survey: 1,
                label: PathBuf::from("labels/m1.vel"),
                q: (375.0, 0.0, 255.0),
                w: 10000.0,
                w_p: 760.0,
                d: 510.0,
                bin: 1,
            }],
        };
        manifest.write(&path).unwrap();
        assert_eq!(Manifest::read(&path).unwrap(), manifest);
    }

    #[test]
    fn rejects_unknown_lines_and_bad_refs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.manifest");
        std::fs::write(&path, "SESDI-MANIFEST 1\nbogus line\n").unwrap();
        assert!(Manifest::read(&path).is_err());
        std::fs::write(
            &path,
            "SESDI-MANIFEST 1\nsample survey=0 label=x qx=0 qy=0 qz=0 w=1 wp=1 d=1 bin=1\n",
        )
        .unwrap();
        assert!(Manifest::read(&path).is_err());
    }
}
