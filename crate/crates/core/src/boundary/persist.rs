//! DtN matrices on disk: `<stem>.bin` holds the `m x m` matrix as row-major
//! little-endian doubles, `<stem>.json` the header.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dtn::relative_asymmetry;
use crate::error::{Error, Result};
use crate::report::{sha256_hex, write_json, SCHEMA_VERSION};

/// Symmetry tolerance enforced when loading.
pub const LOAD_SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnHeader {
    pub schema_version: u32,
    pub m: usize,
    pub r0: f64,
    /// Mesh file, relative to the header's directory.
    pub mesh_file: String,
    /// SHA-256 of the mesh file bytes.
    pub mesh_hash: String,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub alpha0: f64,
    pub beta0: f64,
    pub basis_dofs: Vec<usize>,
}

impl DtnHeader {
    pub fn new(
        l: &DMatrix<f64>,
        r0: f64,
        mesh_file: &str,
        mesh_bytes: &[u8],
        p: &crate::material::LameParams,
        basis_dofs: &[usize],
    ) -> DtnHeader {
        DtnHeader {
            schema_version: SCHEMA_VERSION,
            m: l.nrows(),
            r0,
            mesh_file: mesh_file.to_string(),
            mesh_hash: sha256_hex(mesh_bytes),
            lambda: p.lam.clone(),
            mu: p.mu.clone(),
            alpha0: p.alpha0,
            beta0: p.beta0,
            basis_dofs: basis_dofs.to_vec(),
        }
    }
}

fn sibling(bin: &Path, ext: &str) -> PathBuf {
    bin.with_extension(ext)
}

pub fn write_dtn(bin_path: &Path, l: &DMatrix<f64>, header: &DtnHeader) -> Result<()> {
    let m = l.nrows();
    let mut bytes = Vec::with_capacity(m * m * 8);
    for i in 0..m {
        for j in 0..m {
            bytes.extend_from_slice(&l[(i, j)].to_le_bytes());
        }
    }
    std::fs::write(bin_path, bytes)?;
    write_json(&sibling(bin_path, "json"), header)
}

/// Load a DtN matrix and its header, checking size and symmetry.
pub fn read_dtn(bin_path: &Path) -> Result<(DMatrix<f64>, DtnHeader)> {
    let json = std::fs::read_to_string(sibling(bin_path, "json"))?;
    let header: DtnHeader =
        serde_json::from_str(&json).map_err(|e| Error::Artifact(format!("bad DtN header: {e}")))?;
    let bytes = std::fs::read(bin_path)?;
    let m = header.m;
    if bytes.len() != m * m * 8 {
        return Err(Error::Artifact(format!("expected {} bytes for m = {m}, found {}", m * m * 8, bytes.len())));
    }
    let l = DMatrix::from_row_iterator(
        m,
        m,
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))),
    );
    let asym = relative_asymmetry(&l);
    if !(asym < LOAD_SYMMETRY_TOL) {
        return Err(Error::Artifact(format!("DtN matrix is not symmetric (relative asymmetry {asym:e})")));
    }
    Ok((l, header))
}

/// Verify the header's mesh hash against the mesh file next to it; returns
/// the mesh path.
pub fn verify_mesh_hash(bin_path: &Path, header: &DtnHeader) -> Result<PathBuf> {
    let dir = bin_path.parent().unwrap_or(Path::new("."));
    let mesh_path = dir.join(&header.mesh_file);
    let actual = sha256_hex(&std::fs::read(&mesh_path)?);
    if actual != header.mesh_hash {
        return Err(Error::HashMismatch { expected: header.mesh_hash.clone(), actual });
    }
    Ok(mesh_path)
}
