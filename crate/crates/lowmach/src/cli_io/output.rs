use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::spectral_core::GridField;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub files: Vec<FileEntry>,
}

/// Output directory that remembers what was written.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

pub const MANIFEST: &str = "manifest.json";

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.json` listing every file in name order.
    pub fn finish(mut self, cfg: &RunConfig) -> Result<Manifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let m = Manifest {
            scenario: format!("{:?}", cfg.scenario).to_lowercase(),
            config_sha256: sha256_hex(cfg.canonical().as_bytes()),
            seed: cfg.run.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(self.dir.join(MANIFEST), text + "\n")?;
        Ok(m)
    }
}

/// Wide `z,sigma,u1,u2,u3` column of a grid field at horizontal node `(i1, i2)`.
pub fn column_csv(field: &GridField, i1: usize, i2: usize) -> String {
    let mut s = String::from("z,sigma,u1,u2,u3\n");
    for (iz, z) in field.spec.z().iter().enumerate() {
        let _ = writeln!(
            s,
            "{z:e},{:e},{:e},{:e},{:e}",
            field.at(0, i1, i2, iz),
            field.at(1, i1, i2, iz),
            field.at(2, i1, i2, iz),
            field.at(3, i1, i2, iz)
        );
    }
    s
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let head = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| Error::Io(e.to_string())))
        .collect::<Result<_>>()?;
    Ok((head, rows))
}

fn column(head: &[String], name: &str, path: &Path) -> Result<usize> {
    head.iter().position(|h| h == name).ok_or_else(|| Error::Io(format!("{}: no column `{name}`", path.display())))
}

/// Tidy tables derived from the reports in `dir`, as `(name, contents)`.
pub fn plot_tables(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    let filtered = dir.join("filtered.csv");
    if filtered.exists() {
        let (head, rows) = read_table(&filtered)?;
        let (t, b) = (column(&head, "t", &filtered)?, column(&head, "damping_budget", &filtered)?);
        let mut s = String::from("t,budget\n");
        for r in &rows {
            let _ = writeln!(s, "{},{}", r[t], r[b]);
        }
        out.push(("plot_budget.csv".into(), s));
    }
    let sweep = dir.join("sweep.csv");
    if sweep.exists() {
        let (head, rows) = read_table(&sweep)?;
        let (e, tier, ratio) =
            (column(&head, "eps", &sweep)?, column(&head, "tier", &sweep)?, column(&head, "ratio", &sweep)?);
        let mut tiers: Vec<&str> = rows.iter().map(|r| r[tier].as_str()).collect();
        tiers.sort_unstable();
        tiers.dedup();
        for t in tiers {
            let mut s = String::from("eps,ratio\n");
            for r in rows.iter().filter(|r| r[tier] == t) {
                let _ = writeln!(s, "{},{}", r[e], r[ratio]);
            }
            out.push((format!("plot_ratio_{t}.csv"), s));
        }
    }
    let profile = dir.join("column.csv");
    if profile.exists() {
        let (head, rows) = read_table(&profile)?;
        let z = column(&head, "z", &profile)?;
        let mut s = String::from("z,component,value\n");
        for name in ["sigma", "u1", "u2", "u3"] {
            let c = column(&head, name, &profile)?;
            for r in &rows {
                let _ = writeln!(s, "{},{name},{}", r[z], r[c]);
            }
        }
        out.push(("plot_profile.csv".into(), s));
    }
    Ok(out)
}

/// Turns the report tables found in `dir` into tidy two- or three-column CSVs.
/// Returns the names written; fails when no report is present.
pub fn emit_plotdata(dir: &Path) -> Result<Vec<String>> {
    let out = plot_tables(dir)?;
    if out.is_empty() {
        return Err(Error::Io(format!("no report tables in {}", dir.display())));
    }
    let mut names = Vec::with_capacity(out.len());
    for (name, text) in out {
        std::fs::write(dir.join(&name), text)?;
        names.push(name);
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn plotdata_needs_inputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plotdata(dir.path()).is_err());
        std::fs::write(
            dir.path().join("sweep.csv"),
            "eps,nu,kappa,tier,residual,eta,ratio\n1e-2,1e-2,1,A,1,1,3\n1e-2,1e-2,1,C,1,1,2\n",
        )
        .unwrap();
        let names = emit_plotdata(dir.path()).unwrap();
        assert_eq!(names, vec!["plot_ratio_A.csv", "plot_ratio_C.csv"]);
        let c = std::fs::read_to_string(dir.path().join("plot_ratio_C.csv")).unwrap();
        assert_eq!(c, "eps,ratio\n1e-2,2\n");
    }
}
