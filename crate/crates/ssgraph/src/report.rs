//! Per-prime computations behind the scan subcommands, their row types,
//! and the CSV / JSON writers.
//!
//! Column sets are fixed per subcommand; the JSON form carries the same
//! rows plus run metadata.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use ssgraph_core::arith::FieldCtx;
use ssgraph_core::graph::HeckeFamily;
use ssgraph_core::primes::is_prime;
use ssgraph_core::spectra::{
    fourth_moment_stat, joint_diagonalize, separation_report, supnorm_report, tag_window, JointEigenbasis,
    DEGENERACY_GAP, RESIDUAL_TOL,
};
use ssgraph_core::Error as CoreError;
use ssgraph_core::walksim::{deviation_check, pipeline_cost, qpe_cost, QpeMode, Regime, Sampler};

use crate::source::GraphSource;
use crate::{Error, Result, FORMAT_VERSION};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SupnormRow {
    pub p: u64,
    pub n: usize,
    /// Number of levels used, see [`hecke_basis`].
    pub r: usize,
    pub supnorm: f64,
    pub ratio: f64,
    pub seed: u64,
    pub residual_tol: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SeparationRow {
    pub p: u64,
    pub n: usize,
    pub r: usize,
    /// Empty when there is only one non-Perron eigenvector.
    pub min_distance: Option<f64>,
    pub min_distance_with_perron: f64,
    pub seed: u64,
    pub degeneracy_gap: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MomentRow {
    pub p: u64,
    pub n: usize,
    pub r: usize,
    pub statistic: f64,
    pub normalized: f64,
    pub seed: u64,
    pub residual_tol: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DeviationRow {
    pub p: u64,
    pub m: usize,
    /// Worst identity error over all start/end vertex pairs.
    pub identity_error: f64,
    pub bound_holds: bool,
    pub max_pr: f64,
    pub alpha: f64,
    /// α / ln²p
    pub alpha_over_log2: f64,
    pub min_pr: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct OracleRow {
    pub j: String,
    pub oracle: f64,
    pub cascade: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct QpeCostRow {
    pub ell: u64,
    pub kappa: f64,
    pub eps: f64,
    pub eta: f64,
    pub leading: f64,
    pub correction: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PipelineRow {
    pub p: u64,
    pub regime: &'static str,
    pub r: usize,
    pub total: f64,
    pub leading_term: f64,
}

/// Most levels [`hecke_basis`] will add to a degenerate family.
pub const MAX_EXTRA_LEVELS: usize = 8;

/// Joint eigenbasis for `ells`. When two eigenvectors share the full tag
/// vector (distinct eigenforms agreeing at every requested level), the
/// next primes are added one at a time until the eigenbasis is unique.
/// Returns the levels actually used.
pub fn hecke_basis(source: &GraphSource, ctx: &FieldCtx, ells: &[u64], seed: u64) -> Result<(JointEigenbasis, Vec<u64>)> {
    let mut levels = ells.to_vec();
    let mut family = source.family(ctx, &levels)?;
    let mut extra = 0;
    loop {
        match joint_diagonalize(&family.operators, seed) {
            Err(CoreError::DegenerateJointSpectrum(..)) if extra < MAX_EXTRA_LEVELS => {
                let top = levels.iter().copied().max().unwrap_or(1);
                let next = (top + 1..)
                    .find(|&l| is_prime(l) && l != ctx.p() && !levels.contains(&l))
                    .expect("primes are unbounded");
                let g = source.graph(ctx, next)?;
                let mut graphs = family.graphs;
                graphs.push(g);
                family = HeckeFamily::from_graphs(graphs)?;
                levels.push(next);
                extra += 1;
            }
            other => return Ok((other?, levels)),
        }
    }
}

pub fn supnorm_row(source: &GraphSource, p: u64, ells: &[u64], seed: u64) -> Result<SupnormRow> {
    let ctx = FieldCtx::new(p)?;
    let (basis, levels) = hecke_basis(source, &ctx, ells, seed)?;
    let r = supnorm_report(&basis);
    Ok(SupnormRow { p, n: r.n, r: levels.len(), supnorm: r.supnorm, ratio: r.ratio, seed, residual_tol: RESIDUAL_TOL })
}

pub fn moment_row(source: &GraphSource, p: u64, ells: &[u64], seed: u64) -> Result<MomentRow> {
    let ctx = FieldCtx::new(p)?;
    let (basis, levels) = hecke_basis(source, &ctx, ells, seed)?;
    let r = fourth_moment_stat(&basis);
    Ok(MomentRow {
        p,
        n: r.n,
        r: levels.len(),
        statistic: r.statistic,
        normalized: r.normalized,
        seed,
        residual_tol: RESIDUAL_TOL,
    })
}

/// Separation over `ells`, or over `tag_window(p)` when `ells` is `None`.
pub fn separation_row(source: &GraphSource, p: u64, ells: Option<&[u64]>, seed: u64) -> Result<SeparationRow> {
    let ctx = FieldCtx::new(p)?;
    let window = match ells {
        Some(e) => e.to_vec(),
        None => tag_window(p)?,
    };
    let basis = joint_diagonalize(&source.family(&ctx, &window)?.operators, seed)?;
    let r = separation_report(&basis)?;
    Ok(SeparationRow {
        p,
        n: r.n,
        r: window.len(),
        min_distance: r.min_distance,
        min_distance_with_perron: r.min_distance_with_perron,
        seed,
        degeneracy_gap: DEGENERACY_GAP,
    })
}

/// Sampler over `window` (default `tag_window(p)`).
pub fn sampler(source: &GraphSource, p: u64, window: Option<&[u64]>, mode: QpeMode, c0: f64, seed: u64) -> Result<Sampler> {
    let ctx = FieldCtx::new(p)?;
    let window = match window {
        Some(w) => w.to_vec(),
        None => tag_window(p)?,
    };
    let family = source.family(&ctx, &window)?;
    Ok(Sampler::from_family(ctx, &family, mode, c0, seed)?)
}

pub fn oracle_rows(s: &Sampler) -> Vec<OracleRow> {
    let oracle = s.oracle();
    let cascade = s.cascade_distribution();
    s.vertices()
        .iter()
        .zip(oracle.iter().zip(&cascade))
        .map(|(j, (&o, &c))| OracleRow { j: j.to_string(), oracle: o, cascade: c })
        .collect()
}

/// Deviation check from every start vertex, summarized.
pub fn deviation_row(source: &GraphSource, p: u64, window: Option<&[u64]>, seed: u64) -> Result<DeviationRow> {
    let s = sampler(source, p, window, QpeMode::Ideal, 0.25, seed)?;
    let basis = s.basis();
    let m = basis.len();
    let mut row = DeviationRow {
        p,
        m,
        identity_error: 0.0,
        bound_holds: true,
        max_pr: 0.0,
        alpha: 0.0,
        alpha_over_log2: 0.0,
        min_pr: f64::INFINITY,
    };
    for e0 in 0..m {
        let rep = deviation_check(basis, e0)?;
        row.identity_error = row.identity_error.max(rep.identity_error);
        row.bound_holds &= rep.bound_holds;
        row.max_pr = row.max_pr.max(rep.max_pr);
        row.min_pr = rep.rows.iter().map(|r| r.pr).fold(row.min_pr, f64::min);
    }
    row.alpha = m as f64 * row.max_pr;
    let lp = (p as f64).ln();
    row.alpha_over_log2 = row.alpha / (lp * lp);
    Ok(row)
}

pub fn qpe_cost_row(ell: u64, eps: f64, eta: f64) -> Result<QpeCostRow> {
    let c = qpe_cost(ell, eps, eta)?;
    Ok(QpeCostRow { ell, kappa: c.kappa, eps, eta, leading: c.leading, correction: c.correction, total: c.total })
}

pub fn pipeline_row(p: u64, regime: Regime) -> Result<PipelineRow> {
    let c = pipeline_cost(p, regime)?;
    Ok(PipelineRow { p, regime: regime.name(), r: c.rounds(), total: c.total, leading_term: c.leading_term })
}

/// Run `f` over `items` on at most `jobs` threads; results keep the input
/// order. The first error (in input order) is returned.
pub fn scan<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Output(e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect::<Vec<_>>()).into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Metadata attached to JSON output.
pub fn metadata(command: &str, extra: Value) -> Value {
    let mut meta = json!({
        "tool": "ssgraph",
        "version": env!("CARGO_PKG_VERSION"),
        "format_version": FORMAT_VERSION,
        "command": command,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    meta
}

pub fn write_rows<R: Serialize>(out: &mut dyn Write, format: Format, rows: &[R], meta: Value) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut doc = meta;
            doc["rows"] = serde_json::to_value(rows)?;
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_json(out: &mut dyn Write, doc: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, doc)?;
    writeln!(out)?;
    Ok(())
}
