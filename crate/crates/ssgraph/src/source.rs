//! Graph construction with the configured polynomial files and cache.

use std::path::PathBuf;

use ssgraph_core::arith::{find_seed_j, FieldCtx};
use ssgraph_core::graph::{build_graph, HeckeFamily, IsogenyGraph};

use crate::cache::{GraphCache, CACHE_DIR_ENV};
use crate::modpoly_db::ModPolySource;
use crate::Result;

#[derive(Clone, Debug, Default)]
pub struct GraphSource {
    pub polys: ModPolySource,
    pub cache: Option<GraphCache>,
}

impl GraphSource {
    pub fn new(polys: ModPolySource, cache: Option<GraphCache>) -> Self {
        GraphSource { polys, cache }
    }

    /// Directories from flags, falling back to the environment variables.
    pub fn from_flags(modpoly_dir: Option<PathBuf>, cache_dir: Option<PathBuf>) -> Self {
        let cache = cache_dir.or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)).map(GraphCache::new);
        GraphSource { polys: ModPolySource::from_flag_or_env(modpoly_dir), cache }
    }

    /// The ℓ-isogeny graph from the canonical seed.
    pub fn graph(&self, ctx: &FieldCtx, ell: u64) -> Result<IsogenyGraph> {
        let build = || -> Result<IsogenyGraph> {
            if ell == ctx.p() {
                return Err(ssgraph_core::Error::InvalidLevel(ell).into());
            }
            let phi = self.polys.reduced(ell, ctx.p())?;
            Ok(build_graph(ctx, &phi, find_seed_j(ctx))?)
        };
        match &self.cache {
            Some(cache) => cache.get_or_build(ctx.p(), ell, build).map(|(g, _)| g),
            None => build(),
        }
    }

    pub fn family(&self, ctx: &FieldCtx, ells: &[u64]) -> Result<HeckeFamily> {
        let graphs = ells.iter().map(|&l| self.graph(ctx, l)).collect::<Result<Vec<_>>>()?;
        Ok(HeckeFamily::from_graphs(graphs)?)
    }
}
