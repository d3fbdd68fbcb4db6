//! Modular polynomials from a directory of `phi_<l>.txt` files.

use std::fs;
use std::path::{Path, PathBuf};

use ssgraph_core::arith::modpoly::{reduced_for, ModularPolynomial, ReducedModPoly};

use crate::{Error, Result};

/// Directory searched for `phi_<l>.txt` when no flag is given.
pub const MODPOLY_DIR_ENV: &str = "SSGRAPH_MODPOLY_DIR";

pub fn file_name(ell: u64) -> String {
    format!("phi_{ell}.txt")
}

/// Where modular polynomials come from: files in `dir` first, then the
/// built-in table, then generation mod p.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModPolySource {
    dir: Option<PathBuf>,
}

impl ModPolySource {
    pub fn new(dir: Option<PathBuf>) -> Self {
        ModPolySource { dir }
    }

    /// The flag wins over the environment variable.
    pub fn from_flag_or_env(flag: Option<PathBuf>) -> Self {
        Self::new(flag.or_else(|| std::env::var_os(MODPOLY_DIR_ENV).map(PathBuf::from)))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// The file for `ell`, if the directory has one.
    pub fn load(&self, ell: u64) -> Result<Option<ModularPolynomial>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(file_name(ell));
        if !path.is_file() {
            return Ok(None);
        }
        read_modpoly(&path, ell).map(Some)
    }

    pub fn reduced(&self, ell: u64, p: u64) -> Result<ReducedModPoly> {
        match self.load(ell)? {
            Some(phi) => Ok(phi.reduce(p)),
            None => Ok(reduced_for(ell, p)?),
        }
    }
}

pub fn read_modpoly(path: &Path, ell: u64) -> Result<ModularPolynomial> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(ModularPolynomial::parse(ell, &text)?)
}

pub fn write_modpoly(path: &Path, phi: &ModularPolynomial) -> Result<()> {
    fs::write(path, phi.to_text()).map_err(|e| Error::io(path, e))
}
