//! Output directory bookkeeping and the run report.

use crate::config::Resolved;
use crate::CliError;
use orthocube::tensor::diffusive_time_scales;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Files written under one output directory, in write order.
#[derive(Debug)]
pub struct Artifacts {
    pub dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    /// Writes `name` (relative) and records it for the manifest.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn manifest(&self) -> Result<Vec<ManifestEntry>, CliError> {
        let mut out = Vec::with_capacity(self.files.len());
        for f in &self.files {
            let bytes = fs::read(self.dir.join(f))?;
            let digest = Sha256::digest(&bytes);
            let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
            out.push(ManifestEntry { file: f.clone(), bytes: bytes.len(), sha256 });
        }
        Ok(out)
    }

    /// Writes `report.json`; the manifest covers every file written before it.
    pub fn finish(self, resolved: &Resolved, command: &str, checks: Vec<Check>) -> Result<RunReport, CliError> {
        let pass = checks.iter().all(|c| c.pass);
        let report = RunReport {
            command: command.to_string(),
            config: resolved.config.to_toml(),
            constants: Constants::of(resolved),
            manifest: self.manifest()?,
            checks,
            pass,
        };
        let text = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
        fs::write(self.dir.join("report.json"), text)?;
        Ok(report)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub l: f64,
    pub dxx: f64,
    pub dyy2: f64,
    pub dzz2: f64,
    pub tx_star: f64,
    pub ty_star: f64,
    pub tz_star: f64,
    pub c_inf: f64,
    pub m_inf: f64,
}

impl Constants {
    fn of(r: &Resolved) -> Self {
        let m = &r.model;
        let ts = diffusive_time_scales(m);
        Self {
            l: m.l,
            dxx: m.dxx,
            dyy2: m.dyy2,
            dzz2: m.dzz2,
            tx_star: ts.tx,
            ty_star: ts.ty,
            tz_star: ts.tz,
            c_inf: m.c_inf(),
            m_inf: m.m_inf(),
        }
    }
}

/// One pass/fail line of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold` (NaN fails).
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass: value <= threshold, value, threshold, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    /// Resolved configuration as TOML; feeding it back reproduces the run.
    pub config: String,
    pub constants: Constants,
    pub manifest: Vec<ManifestEntry>,
    pub checks: Vec<Check>,
    pub pass: bool,
}
