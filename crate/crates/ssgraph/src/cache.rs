//! On-disk graph cache: one JSON file per (p, ℓ) with a SHA-256 checksum
//! over the payload.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use ssgraph_core::arith::Fp2Elem;
use ssgraph_core::graph::IsogenyGraph;

use crate::{Error, Result, FORMAT_VERSION};

/// Cache directory used when no flag is given.
pub const CACHE_DIR_ENV: &str = "SSGRAPH_CACHE_DIR";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CacheHeader {
    pub format_version: u32,
    pub p: u64,
    pub ell: u64,
    pub n: usize,
    /// Hex SHA-256 of the compact JSON encoding of the payload.
    pub checksum: String,
    pub orientation: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CachePayload {
    /// (a, b) for a + b·t, in vertex order.
    pub vertices: Vec<[u64; 2]>,
    pub weights: Vec<u8>,
    /// Row-major Brandt matrix.
    pub brandt: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CacheFile {
    pub header: CacheHeader,
    pub payload: CachePayload,
}

fn checksum(payload: &CachePayload) -> String {
    let bytes = serde_json::to_vec(payload).expect("payload serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn encode(g: &IsogenyGraph) -> CacheFile {
    let payload = CachePayload {
        vertices: g.vertices().iter().map(|v| [v.a, v.b]).collect(),
        weights: g.weights().to_vec(),
        brandt: g.brandt().to_vec(),
    };
    let header = CacheHeader {
        format_version: FORMAT_VERSION,
        p: g.p(),
        ell: g.ell(),
        n: g.len(),
        checksum: checksum(&payload),
        orientation: g.orientation().name().to_string(),
    };
    CacheFile { header, payload }
}

pub fn decode(file: CacheFile, path: &Path) -> Result<IsogenyGraph> {
    let corrupt = |reason: String| Error::CorruptCache { path: path.to_path_buf(), reason };
    let CacheFile { header, payload } = file;
    if header.format_version != FORMAT_VERSION {
        return Err(corrupt(format!("format version {} (expected {FORMAT_VERSION})", header.format_version)));
    }
    if checksum(&payload) != header.checksum {
        return Err(corrupt("checksum mismatch".into()));
    }
    if payload.vertices.len() != header.n {
        return Err(corrupt("vertex count differs from header".into()));
    }
    let vertices = payload.vertices.iter().map(|&[a, b]| Fp2Elem::new(a, b)).collect();
    let g = IsogenyGraph::from_parts(header.p, header.ell, vertices, payload.brandt, payload.weights)
        .map_err(|e| corrupt(e.to_string()))?;
    if g.orientation().name() != header.orientation {
        return Err(corrupt("orientation differs from header".into()));
    }
    Ok(g)
}

pub fn graph_path(dir: &Path, p: u64, ell: u64) -> PathBuf {
    dir.join(format!("graph_p{p}_l{ell}.json"))
}

/// Write `g` to `path` through a temporary file in the same directory and
/// an atomic rename.
pub fn save_graph(path: &Path, g: &IsogenyGraph) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    serde_json::to_writer(&mut tmp, &encode(g))?;
    tmp.flush().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<IsogenyGraph> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: CacheFile = serde_json::from_slice(&bytes)
        .map_err(|e| Error::CorruptCache { path: path.to_path_buf(), reason: e.to_string() })?;
    decode(file, path)
}

/// A cache directory of graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphCache {
    dir: PathBuf,
}

impl GraphCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        GraphCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Load the cached graph, or build and store it. A corrupt entry is
    /// rebuilt and overwritten. The flag reports a cache hit.
    pub fn get_or_build(
        &self,
        p: u64,
        ell: u64,
        build: impl FnOnce() -> Result<IsogenyGraph>,
    ) -> Result<(IsogenyGraph, bool)> {
        let path = graph_path(&self.dir, p, ell);
        if path.is_file() {
            match load_graph(&path) {
                Ok(g) if g.p() == p && g.ell() == ell => return Ok((g, true)),
                Ok(_) | Err(Error::CorruptCache { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let g = build()?;
        save_graph(&path, &g)?;
        Ok((g, false))
    }
}
