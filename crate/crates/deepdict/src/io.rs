//! On-disk formats: the `DS2PMAT1` binary matrix file, instance and
//! factorization-report directories, and CSV/JSON emission. All writes go
//! through a temp-file-then-rename so partially written outputs never
//! appear under their final name.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::altmin::AltMinTrace;
use crate::deepfact::{AuditReport, FactorizationReport, StageFailure};
use crate::error::{Error, Result};
use crate::genmodel::{DeepModelInstance, DeepModelSpec};
use crate::linalg::Matrix;

/// Magic string of the binary matrix format: `DS2PMAT1`, then rows and
/// cols as 8-byte little-endian unsigned integers, then row-major 8-byte
/// little-endian IEEE-754 doubles.
pub const MATRIX_MAGIC: &[u8; 8] = b"DS2PMAT1";

/// Write `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(24 + 8 * m.as_slice().len());
    bytes.extend_from_slice(MATRIX_MAGIC);
    bytes.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    atomic_write(path, &bytes)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path)?;
    if bytes.len() < 24 || &bytes[..8] != MATRIX_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a DS2PMAT1 matrix file",
            path.display()
        )));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = 24 + 8 * rows.checked_mul(cols).ok_or_else(|| {
        Error::Format(format!("{}: dimension overflow", path.display()))
    })?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{}: expected {expected} bytes for {rows}x{cols}, found {}",
            path.display(),
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for chunk in bytes[24..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Matrix::from_vec(rows, cols, data)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

#[derive(Serialize, Deserialize)]
pub struct InstanceManifest {
    pub format: String,
    pub seed: u64,
    pub n: usize,
    pub spec: DeepModelSpec,
    pub dictionary_files: Vec<String>,
    pub code_file: String,
    pub intermediate_files: Vec<String>,
    pub observation_file: String,
}

/// Persist an instance: `manifest.json` plus one matrix file per
/// dictionary (`A1.mat`, ...), the codes (`X.mat`), intermediates
/// (`Y1.mat`, ...) and observations (`Y.mat`).
pub fn save_instance(dir: &Path, inst: &DeepModelInstance) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut dictionary_files = Vec::new();
    for (ell, a) in inst.dicts.iter().enumerate() {
        let name = format!("A{}.mat", ell + 1);
        write_matrix(&dir.join(&name), a)?;
        dictionary_files.push(name);
    }
    write_matrix(&dir.join("X.mat"), &inst.codes)?;
    let mut intermediate_files = Vec::new();
    for (ell, y) in inst.intermediates.iter().enumerate() {
        let name = format!("Y{}.mat", ell + 1);
        write_matrix(&dir.join(&name), y)?;
        intermediate_files.push(name);
    }
    write_matrix(&dir.join("Y.mat"), &inst.observations)?;
    let manifest = InstanceManifest {
        format: "deepdict-instance/1".into(),
        seed: inst.seed,
        n: inst.n,
        spec: inst.spec.clone(),
        dictionary_files,
        code_file: "X.mat".into(),
        intermediate_files,
        observation_file: "Y.mat".into(),
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

pub fn load_instance(dir: &Path) -> Result<DeepModelInstance> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| {
        Error::Format(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: InstanceManifest = serde_json::from_str(&text)?;
    let mut dicts = Vec::new();
    for name in &manifest.dictionary_files {
        dicts.push(read_matrix(&dir.join(name))?);
    }
    let codes = read_matrix(&dir.join(&manifest.code_file))?;
    let mut intermediates = Vec::new();
    for name in &manifest.intermediate_files {
        intermediates.push(read_matrix(&dir.join(name))?);
    }
    let observations = read_matrix(&dir.join(&manifest.observation_file))?;
    Ok(DeepModelInstance {
        spec: manifest.spec,
        n: manifest.n,
        seed: manifest.seed,
        dicts,
        codes,
        intermediates,
        observations,
    })
}

#[derive(Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: usize,
    pub iterations: usize,
    pub err_learned: Option<f64>,
    pub err_peeled: Option<f64>,
    pub learned_file: String,
    pub peeled_file: String,
    pub trace_file: String,
}

#[derive(Serialize, Deserialize)]
pub struct ReportManifest {
    pub format: String,
    pub mode: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub stages: Vec<StageSummary>,
    pub failure: Option<StageFailure>,
}

/// Persist a factorization run: `report.json`, per-stage matrices and
/// trace CSVs.
pub fn save_report(dir: &Path, report: &FactorizationReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut stages = Vec::new();
    for st in &report.stages {
        let learned_file = format!("stage{}_learned.mat", st.stage);
        let peeled_file = format!("stage{}_peeled.mat", st.stage);
        let trace_file = format!("stage{}_trace.csv", st.stage);
        write_matrix(&dir.join(&learned_file), &st.learned)?;
        write_matrix(&dir.join(&peeled_file), &st.peeled)?;
        atomic_write(&dir.join(&trace_file), st.trace.to_csv().as_bytes())?;
        stages.push(StageSummary {
            stage: st.stage,
            iterations: st.trace.iterations(),
            err_learned: st.err_learned,
            err_peeled: st.err_peeled,
            learned_file,
            peeled_file,
            trace_file,
        });
    }
    let manifest = ReportManifest {
        format: "deepdict-report/1".into(),
        mode: report.mode.to_string(),
        seed: report.seed,
        config: serde_json::to_value(&report.config)?,
        stages,
        failure: report.failure.clone(),
    };
    write_json(&dir.join("report.json"), &manifest)
}

pub fn save_audit(path: &Path, reports: &[AuditReport]) -> Result<()> {
    write_json(path, &reports.to_vec())
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value)
}

pub fn save_trace_csv(path: &Path, trace: &AltMinTrace) -> Result<()> {
    atomic_write(path, trace.to_csv().as_bytes())
}

/// Rows of an error-vs-SNR sweep, one per (snr, algorithm, stage, seed).
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub algo: String,
    pub stage: usize,
    pub final_err: f64,
    pub seed: u64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("snr_db,algo,stage,final_err,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.snr_db, r.algo, r.stage, r.final_err, r.seed
        ));
    }
    out
}

/// Rows of an error-vs-iteration recovery experiment.
#[derive(Clone, Debug, Serialize)]
pub struct RecoveryRow {
    pub algo: String,
    pub stage: usize,
    pub iter: usize,
    pub err: f64,
}

pub fn recovery_csv(rows: &[RecoveryRow]) -> String {
    let mut out = String::from("algo,stage,iter,err\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.algo, r.stage, r.iter, r.err));
    }
    out
}

/// Default location helpers for run directories.
pub fn instance_dir(out: &Path) -> PathBuf {
    out.join("instance")
}

pub fn report_dir(out: &Path, mode: &str) -> PathBuf {
    out.join(format!("report_{mode}"))
}
