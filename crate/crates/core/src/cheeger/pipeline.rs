//! Parametric solve, local refinement and, given a Wulff estimate, the
//! polytope certificate; the best valid candidate wins.

use serde::{Deserialize, Serialize};

use super::{
    better, construct_polytope_candidate, default_delta, default_vol_cap, local_search_refine,
    parametric_phi, AnchoredSubgraph, RatioResult, Repair, Schedule,
};
use crate::geometry::Polytope;
use crate::lattice::BoxSpec;
use crate::percolation::BondConfiguration;
use crate::{Error, Result};

/// Box for `phi_n` at scale `n`: half width `ceil(1.25 n) + 1`, default
/// margin, so a cube of side `n` through the origin fits the analysis region.
pub fn pipeline_box(d: usize, n: usize) -> Result<BoxSpec> {
    BoxSpec::with_default_margin(d, (1.25 * n as f64).ceil() as i64 + 1)
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    /// Defaults to `n^d`.
    pub vol_cap: Option<usize>,
    pub schedule: Schedule,
    /// Unit-scale polytope for the certificate, typically a dilated Wulff
    /// estimate.
    pub wulff: Option<Polytope>,
    /// Defaults to `0.1 * diam`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub result: RatioResult,
    pub gamma_edges: usize,
    pub gamma_open: usize,
    pub separated: bool,
    pub bound_holds: bool,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub best: RatioResult,
    pub best_set: AnchoredSubgraph,
    /// Every candidate evaluated, in order: parametric, local search, and
    /// the certificate when it was valid.
    pub candidates: Vec<RatioResult>,
    pub repairs: Vec<Repair>,
    pub certificate: Option<CertificateSummary>,
    /// Why the certificate was not attempted or failed.
    pub certificate_skipped: Option<String>,
}

pub fn phi_pipeline(config: &BondConfiguration, n: usize, opts: &PipelineOptions) -> Result<PipelineReport> {
    let d = config.lattice().d();
    let cap = opts.vol_cap.unwrap_or_else(|| default_vol_cap(n, d));
    let par = parametric_phi(config, n, cap).map_err(|e| e.in_stage("parametric"))?;
    let mut candidates = vec![par.result.clone()];
    let (ls, ls_set) = local_search_refine(&par.subgraph, config, n, cap, opts.schedule)
        .map_err(|e| e.in_stage("local-search"))?;
    candidates.push(ls);
    let mut best_set = if better(&ls_set, &par.subgraph) { ls_set } else { par.subgraph.clone() };
    let mut best = candidates
        .iter()
        .find(|r| r.boundary == best_set.boundary && r.volume == best_set.volume)
        .cloned()
        .expect("best set comes from a candidate");

    let mut certificate = None;
    let mut certificate_skipped = None;
    match &opts.wulff {
        None => certificate_skipped = Some("no Wulff estimate supplied".into()),
        Some(p) => {
            let delta = opts.delta.unwrap_or_else(|| default_delta(p));
            match construct_polytope_candidate(config, p, delta, n) {
                Ok((con, r)) => {
                    let valid = con.valid && con.harvested.volume <= cap;
                    if valid {
                        candidates.push(r.clone());
                        if better(&con.harvested, &best_set) {
                            best = r.clone();
                            best_set = con.harvested.clone();
                        }
                    }
                    certificate = Some(CertificateSummary {
                        result: r,
                        gamma_edges: con.gamma.len(),
                        gamma_open: con.gamma_open,
                        separated: con.separated,
                        bound_holds: con.bound_holds,
                        valid,
                    });
                }
                Err(e @ (Error::Geometry(_) | Error::Precondition(_))) => {
                    log::info!("certificate skipped: {e}");
                    certificate_skipped = Some(e.to_string());
                }
                Err(e) => return Err(e.in_stage("certificate")),
            }
        }
    }
    Ok(PipelineReport {
        best,
        best_set,
        candidates,
        repairs: par.repairs,
        certificate,
        certificate_skipped,
    })
}
