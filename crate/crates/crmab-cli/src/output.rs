//! File outputs: CSV tables and the run manifest.
//!
//! Every CSV uses a comma separator, a dot decimal point, an LF line
//! terminator, and one header row. Floats are written with Rust's
//! shortest round-trip formatting, so files are byte-stable across
//! reruns and thread counts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use crmab_core::bounds::LagrangianBound;
use crmab_core::index::IndexTable;
use crmab_core::sim::SimulationReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Run manifest: everything needed to reproduce the run's outputs bit
/// for bit (plus the output list for integrity checks). Thread count is
/// deliberately absent — outputs do not depend on it.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    /// The subcommand and its semantic arguments.
    pub command: String,
    /// SHA-256 of the exact configuration bytes the run used.
    pub config_sha256: String,
    pub seed: u64,
    pub replications: usize,
    pub package: String,
    pub version: String,
    /// Output files, relative to the manifest's directory, sorted.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: String, config_text: &str, seed: u64, replications: usize) -> Self {
        Self {
            schema_version: crate::config::SCHEMA_VERSION,
            command,
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed,
            replications,
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(out, "{b:02x}").expect("writing to a String");
    }
    out
}

/// Collects files for one run directory and writes the manifest last.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes one file (creating parent subdirectories) and records it.
    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(rel.to_string());
        Ok(())
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(mut self, mut manifest: Manifest) -> Result<()> {
        self.written.sort();
        manifest.outputs = self.written.clone();
        let text = serde_json::to_string_pretty(&manifest).context("manifest serialization")?;
        let path = self.root.join("manifest.json");
        fs::write(&path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// `belief,index,residual,iterations` for one arm's index table.
pub fn index_csv(table: &IndexTable) -> String {
    let mut out = String::from("belief,index,residual,iterations\n");
    for i in 0..table.grid.len() {
        push_row(
            &mut out,
            &[
                table.grid.points()[i].to_string(),
                table.values[i].to_string(),
                table.residuals[i].to_string(),
                table.iterations[i].to_string(),
            ],
        );
    }
    out
}

/// `replication,<label>,...`: per-replication discounted totals, one
/// column per policy.
pub fn totals_csv(labels: &[&str], reports: &[&SimulationReport]) -> String {
    let mut out = String::from("replication");
    for label in labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    let reps = reports.first().map_or(0, |r| r.totals.len());
    for rep in 0..reps {
        let mut fields = vec![(rep + 1).to_string()];
        for report in reports {
            fields.push(report.totals[rep].to_string());
        }
        push_row(&mut out, &fields);
    }
    out
}

/// `slot,<label>,...`: mean discounted cumulative reward after each slot.
pub fn trajectory_csv(labels: &[&str], reports: &[&SimulationReport]) -> String {
    let mut out = String::from("slot");
    for label in labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    let slots = reports.first().map_or(0, |r| r.trajectory.len());
    for slot in 0..slots {
        let mut fields = vec![(slot + 1).to_string()];
        for report in reports {
            fields.push(report.trajectory[slot].to_string());
        }
        push_row(&mut out, &fields);
    }
    out
}

/// `arm,<label>,...`: fraction of all plays each arm received.
pub fn arm_choice_csv(labels: &[&str], reports: &[&SimulationReport]) -> String {
    let mut out = String::from("arm");
    for label in labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    let arms = reports.first().map_or(0, |r| r.arm_choice_fraction.len());
    for arm in 0..arms {
        let mut fields = vec![(arm + 1).to_string()];
        for report in reports {
            fields.push(report.arm_choice_fraction[arm].to_string());
        }
        push_row(&mut out, &fields);
    }
    out
}

/// `policy,mean,std_error,ci95_lo,ci95_hi,replications,seed`.
pub fn policies_csv(labels: &[&str], reports: &[&SimulationReport]) -> String {
    let mut out = String::from("policy,mean,std_error,ci95_lo,ci95_hi,replications,seed\n");
    for (label, report) in labels.iter().zip(reports) {
        let half = 1.96 * report.std_error;
        push_row(
            &mut out,
            &[
                label.to_string(),
                report.mean.to_string(),
                report.std_error.to_string(),
                (report.mean - half).to_string(),
                (report.mean + half).to_string(),
                report.replications.to_string(),
                report.seed.to_string(),
            ],
        );
    }
    out
}

/// `lambda,total,optimal`: every scanned charge plus the refined
/// minimizer (marked `true`).
pub fn bound_csv(bound: &LagrangianBound) -> String {
    let mut out = String::from("lambda,total,optimal\n");
    for (lambda, total) in &bound.scanned {
        push_row(
            &mut out,
            &[lambda.to_string(), total.to_string(), "false".to_string()],
        );
    }
    push_row(
        &mut out,
        &[
            bound.lambda_optimal.to_string(),
            bound.total.to_string(),
            "true".to_string(),
        ],
    );
    out
}

/// `arm,value`: per-arm charged values at the optimal charge.
pub fn bound_arms_csv(bound: &LagrangianBound) -> String {
    let mut out = String::from("arm,value\n");
    for (n, value) in bound.per_arm.iter().enumerate() {
        push_row(&mut out, &[(n + 1).to_string(), value.to_string()]);
    }
    out
}
