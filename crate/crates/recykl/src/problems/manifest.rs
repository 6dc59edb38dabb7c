use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::mm;
use super::{LinearSystem, SequenceMetadata, SystemSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSystem {
    pub matrix: String,
    pub rhs: String,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xguess: Option<String>,
}

/// `{"n": …, "systems": [{"matrix": …, "rhs": …, "tol": …}], "output_matrix": …}`;
/// paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n: usize,
    pub systems: Vec<ManifestSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<SequenceMetadata>,
}

fn dim_err(file: &Path, what: &str, expected: usize, got: usize) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line: 1,
        message: format!("{what} has dimension {got}, manifest declares {expected}"),
    }
}

/// Loads a manifest and the files it names. Systems naming the same matrix file
/// share one matrix.
pub fn load_sequence_manifest(path: &Path) -> Result<SystemSequence> {
    let text = fs::read_to_string(path)
        .map_err(|source| Error::Io { file: path.to_path_buf(), source })?;
    let man: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut cache: HashMap<PathBuf, Arc<_>> = HashMap::new();
    let mut systems = Vec::with_capacity(man.systems.len());
    for s in &man.systems {
        let mp = dir.join(&s.matrix);
        let a = match cache.get(&mp) {
            Some(a) => Arc::clone(a),
            None => {
                let a = Arc::new(mm::read_sparse(&mp)?);
                if a.n() != man.n {
                    return Err(dim_err(&mp, "matrix", man.n, a.n()));
                }
                cache.insert(mp.clone(), Arc::clone(&a));
                a
            }
        };
        let bp = dir.join(&s.rhs);
        let b = mm::read_vector(&bp)?;
        if b.len() != man.n {
            return Err(dim_err(&bp, "right-hand side", man.n, b.len()));
        }
        let xguess = match &s.xguess {
            Some(x) => {
                let xp = dir.join(x);
                let v = mm::read_vector(&xp)?;
                if v.len() != man.n {
                    return Err(dim_err(&xp, "initial guess", man.n, v.len()));
                }
                v
            }
            None => vec![0.0; man.n],
        };
        systems.push(LinearSystem { a, b, xguess, tol: s.tol });
    }
    let output = match &man.output_matrix {
        Some(c) => {
            let cp = dir.join(c);
            let m = mm::read_dense(&cp)?;
            if m.cols() != man.n {
                return Err(dim_err(&cp, "output matrix", man.n, m.cols()));
            }
            Some(m)
        }
        None => None,
    };
    let metadata = man.metadata.unwrap_or_else(|| SequenceMetadata {
        name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        ..Default::default()
    });
    SystemSequence::new(systems, output, metadata)
}

/// Writes `manifest.json` plus Matrix Market files into `dir` and returns the
/// manifest path. Consecutive systems sharing a matrix share its file.
pub fn write_sequence(seq: &SystemSequence, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { file: dir.to_path_buf(), source })?;
    let mut entries = Vec::with_capacity(seq.len());
    let mut last: Option<(&Arc<_>, String)> = None;
    for (k, s) in seq.systems().iter().enumerate() {
        let j = k + 1;
        let matrix = match &last {
            Some((a, name)) if Arc::ptr_eq(a, &s.a) => name.clone(),
            _ => {
                let name = format!("A_{j:03}.mtx");
                mm::write_sparse(&dir.join(&name), &s.a)?;
                name
            }
        };
        last = Some((&s.a, matrix.clone()));
        let rhs = format!("b_{j:03}.mtx");
        mm::write_vector(&dir.join(&rhs), &s.b)?;
        let xguess = if s.xguess.iter().any(|&v| v != 0.0) {
            let name = format!("x0_{j:03}.mtx");
            mm::write_vector(&dir.join(&name), &s.xguess)?;
            Some(name)
        } else {
            None
        };
        entries.push(ManifestSystem { matrix, rhs, tol: s.tol, xguess });
    }
    let output_matrix = match &seq.output {
        Some(c) => {
            mm::write_dense(&dir.join("C.mtx"), c)?;
            Some("C.mtx".to_string())
        }
        None => None,
    };
    let man = Manifest {
        n: seq.n(),
        systems: entries,
        output_matrix,
        metadata: Some(seq.metadata.clone()),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&man).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&path, json).map_err(|source| Error::Io { file: path.clone(), source })?;
    Ok(path)
}
